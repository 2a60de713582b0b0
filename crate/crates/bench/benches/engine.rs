use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use metapop::engine::IntegrateOptions;
use metapop::experiments::seeded_dfe;
use metapop::geo::{synthesize_island, IslandConfig};
use metapop::mobility::generate_travel_matrices;
use metapop::{MobilityGenConfig, ModelParams, PatchNetwork, Simulation, TravelMatrices};

fn island(node_count: usize) -> (PatchNetwork, TravelMatrices, ModelParams) {
    let params = ModelParams::reference(0.2, 0.15);
    let cfg = IslandConfig {
        node_count,
        population_total: 10 * node_count as u64,
        cluster_spread_m: 200.0,
        background_fraction: 0.0,
        seed: 1,
        ..IslandConfig::default()
    };
    let network = synthesize_island(&cfg, &params).unwrap();
    let gen = MobilityGenConfig {
        seed: 3,
        ..MobilityGenConfig::default()
    };
    let matrices = generate_travel_matrices(&network, &gen).unwrap();
    (network, matrices, params)
}

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for n in [100, 500, 1000] {
        let (network, matrices, params) = island(n);
        let sim = Simulation::new(&network, &matrices, params).unwrap();
        let state = seeded_dfe(&network, &matrices, &params, 0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| sim.rhs(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn integrate_one_day(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_one_day");
    group.sample_size(10);
    for n in [100, 500] {
        let (network, matrices, params) = island(n);
        let sim = Simulation::new(&network, &matrices, params).unwrap();
        let state = seeded_dfe(&network, &matrices, &params, 0, 1.0).unwrap();
        let opts = IntegrateOptions::new(0.0, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| sim.integrate(black_box(s), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, integrate_one_day);
criterion_main!(benches);
