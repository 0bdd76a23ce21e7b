//! Searches competitor start offsets and probe generation times of the
//! `fig7_wcl` scenario for the phasings that maximise the probe's latency.
//!
//! Usage: `cargo run --release --example phase_search [offsets] [probe_times]`

use std::collections::BTreeMap;

use rtsnoc::scenario::Scenario;
use rtsnoc::{engine, RateLaw};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("numeric argument"));
    let span = args.next().unwrap_or(10);
    let probe_times = args.next().unwrap_or(30);
    let s = Scenario::resolve("fig7_wcl").expect("builtin");
    let (_, base) = s.sim_configs().expect("valid").remove(0);
    let probe = base.flow_index(s.probe().expect("probe")).unwrap();
    let competitors: Vec<usize> = (0..base.flows.len()).filter(|&i| i != probe).collect();

    let mut hist: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut first_hit: BTreeMap<(u64, u64), (Vec<u64>, u64)> = BTreeMap::new();
    let combos = span.pow(competitors.len() as u32);
    for combo in 0..combos {
        let starts: Vec<u64> = (0..competitors.len())
            .map(|j| combo / span.pow(j as u32) % span)
            .collect();
        for at in 0..probe_times {
            let mut cfg = base.clone();
            for (j, &i) in competitors.iter().enumerate() {
                cfg.flows[i].rate = RateLaw::Saturating { start: starts[j] };
            }
            cfg.flows[probe].rate = RateLaw::SingleShot { at };
            cfg.duration = at + 150;
            let m = engine::run(&cfg).expect("run");
            let p = m.flow_packets(probe).next().expect("probe delivered");
            let key = (p.header_latency(), p.packet_latency());
            *hist.entry(key).or_default() += 1;
            first_hit.entry(key).or_insert_with(|| (starts.clone(), at));
        }
    }
    println!("(header, packet) latency: runs, first phasing (competitor starts, probe time)");
    for (k, n) in &hist {
        println!("{k:?}: {n}, {:?}", first_hit[k]);
    }
}
