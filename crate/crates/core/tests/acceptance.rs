//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtsnoc::analytics::{self, TdmParams};
use rtsnoc::engine;
use rtsnoc::model::render_trace;
use rtsnoc::network::{build_mesh, dense_placement};
use rtsnoc::scenario::{Scenario, BUILTINS};
use rtsnoc::{Coord, FlowSpec, PortId, RateLaw, RouterKind, SimConfig, SizeLaw};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let r = f();
    let took = t.elapsed();
    if took > limit {
        return Err(format!("took {took:.2?}, limit {limit:?}"));
    }
    r.map(|s| format!("{s} ({took:.2?})"))
        .map_err(|s| format!("{s} ({took:.2?})"))
}

fn fig7() -> (Scenario, SimConfig) {
    let s = Scenario::resolve("fig7_wcl").expect("builtin");
    let cfg = s.sim_configs().expect("valid").remove(0).1;
    (s, cfg)
}

fn c1_wcl_golden() -> Outcome {
    let (_, cfg) = fig7();
    let idx = cfg.flow_index("s7").unwrap();
    let w = analytics::wcl_for_flow(&cfg.network, &cfg.flows, idx).map_err(|e| e.to_string())?;
    let got = (w.header, w.payload_tail, w.buffers, w.total());
    if got == (12, 50, 0, 62) {
        Ok("wcl = 12 + 50 + 0 = 62".into())
    } else {
        Err(format!(
            "(header, payload, buffers, total) = {got:?}, want (12, 50, 0, 62)"
        ))
    }
}

fn c2_wcl_attained() -> Outcome {
    let (_, cfg) = fig7();
    let idx = cfg.flow_index("s7").unwrap();
    let m = engine::run(&cfg).map_err(|e| e.to_string())?;
    let p = m.flow_packets(idx).next().ok_or("probe not delivered")?;
    let words: Vec<String> = m
        .flow_deliveries(idx)
        .map(|d| render_trace(&d.flit, 16))
        .collect();
    let want = ["40871", "00872", "00873", "00874", "00875", "40876"];
    let (h, l) = (p.header_latency(), p.packet_latency());
    let ns = (h as f64 * cfg.clock_ns, l as f64 * cfg.clock_ns);
    if (h, l) == (12, 62) && words == want && ns == (120.0, 620.0) {
        Ok(format!(
            "header 12 ({} ns), packet 62 ({} ns), words {}",
            ns.0,
            ns.1,
            words.join(" ")
        ))
    } else {
        Err(format!("header {h}, packet {l}, words {words:?}"))
    }
}

fn c3_latency_bound() -> Outcome {
    let s = Scenario::resolve("random_vbr").expect("builtin");
    let configs = s.sim_configs().map_err(|e| e.to_string())?;
    let (mut packets, mut over, mut order, mut worst) =
        (0usize, 0usize, 0u64, (0u64, 0u64, String::new()));
    for (prefix, cfg) in &configs {
        let bounds: Vec<u64> = cfg
            .wcl_table()
            .map_err(|e| e.to_string())?
            .iter()
            .map(|w| w.total())
            .collect();
        let m = engine::run(cfg).map_err(|e| e.to_string())?;
        packets += m.packets.len();
        order += m.order_violations;
        for (p, b) in m.bound_violations(&bounds) {
            over += 1;
            if p.packet_latency() - b > worst.0 - worst.1 || worst.2.is_empty() {
                worst = (
                    p.packet_latency(),
                    b,
                    format!("{prefix}{}", cfg.flows[p.flow].id),
                );
            }
        }
    }
    let summary = format!(
        "{packets} packets over {} seeds, {over} above bound, {order} out of order",
        configs.len()
    );
    if packets >= 1000 && configs.len() >= 5 && over == 0 && order == 0 {
        Ok(summary)
    } else {
        Err(format!(
            "{summary}; worst {} latency {} vs bound {}",
            worst.2, worst.0, worst.1
        ))
    }
}

fn c4_fig5() -> Outcome {
    let (h, tr, f, n, b) = (4, 3.0, 100.0, 3, 1.0);
    let loads: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    let eq4_flat = loads.iter().all(|_| {
        analytics::latency_interleave(h, tr, n, f, b)
            .map(|v| v == 312.0)
            .unwrap_or(false)
    });
    let eq3 = |x: f64| analytics::latency_wormhole_be(h, tr, f, b, x * b).unwrap_or(f64::INFINITY);
    let eq3_zero = eq3(0.0);
    let x = analytics::crossing_load(eq3, 312.0, 0.0, 0.999).ok_or("no crossing in (0, 1)")?;
    let detail =
        format!("interleave flat at 312: {eq4_flat}, wormhole(0) = {eq3_zero}, crossing at {x:.4}");
    if eq4_flat && eq3_zero == 112.0 && (x - 0.693).abs() <= 0.01 {
        Ok(detail)
    } else {
        Err(format!("{detail}, want |x - 0.693| <= 0.01"))
    }
}

fn c5_fig9() -> Outcome {
    let flits = 9;
    let base = TdmParams::comparison_default();
    let off = TdmParams {
        slot_reuse: false,
        ..base
    };
    let on = TdmParams {
        slot_reuse: true,
        ..base
    };
    let tdm = |p: TdmParams| {
        let b = analytics::tdm_be_bandwidth(&p).unwrap();
        move |x: f64| analytics::tdm_be_latency(8, 2.0, flits, &p, x * b).unwrap_or(f64::INFINITY)
    };
    let (f_off, f_on) = (tdm(off), tdm(on));
    let rts_max = analytics::packet_wcl(&[3, 3], 3, flits, 32).map_err(|e| e.to_string())? as f64;
    let a = rts_max > f_off(0.0) && rts_max > f_on(0.0);
    let x_off = analytics::crossing_load(f_off, rts_max, 0.0, 0.999).unwrap_or(f64::NAN);
    let x_on = analytics::crossing_load(f_on, rts_max, 0.0, 0.999).unwrap_or(f64::NAN);
    let b = (0.60..0.80).contains(&x_off) && (0.75..0.95).contains(&x_on);
    let c = (0..100)
        .map(|i| i as f64 / 100.0)
        .all(|x| f_on(x) <= f_off(x));
    let detail = format!(
        "rts max {rts_max}, tdm at 0: {:.1}/{:.1}, crossings {x_off:.3} (off) {x_on:.3} (on), reuse dominates: {c}",
        f_off(0.0),
        f_on(0.0)
    );
    if a && b && c {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6_contention_free() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    for case in 0..25 {
        let (w, h) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let per = rng.gen_range(1..=3);
        let place = dense_placement(w, h, per).map_err(|e| e.to_string())?;
        let n = place.len() as u32;
        if n < 2 {
            continue;
        }
        let src = rng.gen_range(0..n);
        let dst = (src + rng.gen_range(1..n)) % n;
        let size = SizeLaw::Uniform {
            min: 1,
            max: rng.gen_range(1..=16),
        };
        let rate = if rng.gen_bool(0.5) {
            RateLaw::Saturating {
                start: rng.gen_range(0..5),
            }
        } else {
            RateLaw::Periodic {
                period: rng.gen_range(5..60),
                phase: rng.gen_range(0..5),
            }
        };
        let run = |kind| {
            let net = build_mesh(w, h, &place, 4, kind).unwrap();
            let f = FlowSpec::new(
                "a",
                net.core_address(src).unwrap(),
                net.core_address(dst).unwrap(),
                size,
                rate,
            );
            let mut cfg = SimConfig::new(net, vec![f], 800);
            cfg.seed = case;
            let m = engine::run(&cfg).unwrap();
            m.packets
                .iter()
                .map(|p| (p.inject_cycle, p.packet_latency()))
                .collect::<Vec<_>>()
        };
        let (a, b) = (run(RouterKind::Rts), run(RouterKind::Wormhole));
        if a.is_empty() || a != b {
            return Err(format!(
                "case {case}: rts {:?} vs wormhole {:?}",
                &a[..a.len().min(4)],
                &b[..b.len().min(4)]
            ));
        }
        compared += 1;
    }
    if compared >= 20 {
        Ok(format!("{compared} single-flow configs identical"))
    } else {
        Err(format!("only {compared} configs compared"))
    }
}

/// Three cores on one router each send one packet of `sizes[i]` flits to a
/// fourth core on the same router at cycle 0. Returns each sender's tail
/// delivery cycle.
fn three_way(kind: RouterKind, sizes: [u32; 3]) -> Vec<u64> {
    let here = Coord::new(0, 0);
    let place: Vec<(u32, rtsnoc::Address)> = [PortId::NE, PortId::SE, PortId::SW, PortId::NW]
        .iter()
        .enumerate()
        .map(|(i, &p)| (i as u32, rtsnoc::Address::new(here, p)))
        .collect();
    let net = build_mesh(1, 1, &place, 4, kind).unwrap();
    let flows: Vec<FlowSpec> = (0..3)
        .map(|i| {
            FlowSpec::new(
                format!("p{}", i + 1),
                place[i].1,
                place[3].1,
                SizeLaw::Fixed(sizes[i]),
                RateLaw::SingleShot { at: 0 },
            )
        })
        .collect();
    let m = engine::run(&SimConfig::new(net, flows, 200)).unwrap();
    (0..3)
        .map(|i| m.flow_packets(i).next().unwrap().tail_departure_cycle)
        .collect()
}

fn c7_interleave_vs_wormhole() -> Outcome {
    let il = three_way(RouterKind::Rts, [5, 5, 5]);
    let wh = three_way(RouterKind::Wormhole, [5, 5, 5]);
    // Scheduling order is the wormhole service order.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by_key(|&i| wh[i]);
    let (first, last) = (order[0], order[2]);
    let detail = format!(
        "first p{} {} (interleave) vs {} (wormhole), last p{} {} vs {}",
        first + 1,
        il[first],
        wh[first],
        last + 1,
        il[last],
        wh[last]
    );
    if il[last] < wh[last] && il[first] > wh[first] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c8_determinism() -> Outcome {
    for (name, _) in BUILTINS {
        let s = Scenario::resolve(name).map_err(|e| e.to_string())?;
        let a = s.run().map_err(|e| e.to_string())?;
        let b = s.run().map_err(|e| e.to_string())?;
        for mode in ["analytic", "simulate"] {
            if a.csv(mode).as_bytes() != b.csv(mode).as_bytes() {
                return Err(format!("{name} {mode} CSV differs between runs"));
            }
        }
    }
    Ok(format!("{} builtins byte-identical", BUILTINS.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 wcl golden value", Duration::from_secs(1), c1_wcl_golden),
        (
            "2 simulated wcl attainment",
            Duration::from_secs(5),
            c2_wcl_attained,
        ),
        (
            "3 latency bound on random_vbr",
            Duration::from_secs(60),
            c3_latency_bound,
        ),
        (
            "4 wormhole/interleave crossover",
            Duration::from_secs(1),
            c4_fig5,
        ),
        ("5 tdm comparison", Duration::from_secs(1), c5_fig9),
        (
            "6 contention-free equivalence",
            Duration::from_secs(60),
            c6_contention_free,
        ),
        (
            "7 interleave vs wormhole ordering",
            Duration::from_secs(60),
            c7_interleave_vs_wormhole,
        ),
        ("8 determinism", Duration::from_secs(120), c8_determinism),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        match timed(limit, f) {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("{} of 8 criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
