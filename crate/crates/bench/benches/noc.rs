use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rtsnoc::analytics;
use rtsnoc::arbiter::init_arbiter;
use rtsnoc::engine;
use rtsnoc::scenario::Scenario;
use rtsnoc::PortId;
use std::collections::BTreeMap;

fn arbiter(c: &mut Criterion) {
    let credits = BTreeMap::from([(PortId::SS, 2), (PortId::EE, 2)]);
    let inputs = [PortId::SS, PortId::EE, PortId::NE];
    c.bench_function("arbiter_grant_3_inputs", |b| {
        b.iter_batched(
            || init_arbiter(&inputs, &credits).unwrap(),
            |mut st| {
                for _ in 0..100 {
                    black_box(st.grant(&inputs).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn wcl(c: &mut Criterion) {
    let s = Scenario::resolve("fig7_wcl").unwrap();
    let (_, cfg) = s.sim_configs().unwrap().remove(0);
    c.bench_function("wcl_for_flow_fig7", |b| {
        b.iter(|| analytics::wcl_for_flow(&cfg.network, black_box(&cfg.flows), 1).unwrap())
    });
}

fn simulate(c: &mut Criterion) {
    let s = Scenario::resolve("fig7_wcl").unwrap();
    let (_, fig7) = s.sim_configs().unwrap().remove(0);
    c.bench_function("simulate_fig7_300_cycles", |b| {
        b.iter(|| engine::run(black_box(&fig7)).unwrap())
    });

    let s = Scenario::resolve("random_vbr").unwrap();
    let (_, vbr) = s.sim_configs().unwrap().remove(0);
    let mut g = c.benchmark_group("random_vbr");
    g.sample_size(10);
    g.bench_function("one_seed_5000_cycles", |b| {
        b.iter(|| engine::run(black_box(&vbr)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, arbiter, wcl, simulate);
criterion_main!(benches);
