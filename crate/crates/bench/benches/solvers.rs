use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use harmonagg::aggregation::{
    solve_clustered_kemeny, solve_kemeny, solve_kemeny_2gram_dp, solve_pav, ClusterMode,
    ClusterOptions, ObjectiveWeights, Profile, SearchSpace,
};
use harmonagg::rng::rng_from_seed;
use harmonagg::simulation::{cluster_coherence, make_profile, synthetic_corpus, ErrorRange, JaccardReplacement};
use harmonagg::{train, AnnealingConfig, TransitionModel};

fn setup(agents: usize) -> (Profile, TransitionModel) {
    let corpus = synthetic_corpus(200, 1);
    let model = train(&corpus, 1e-6).unwrap();
    let song = corpus.songs[0].normalized();
    let range = ErrorRange::new(1.0, 2.0).unwrap();
    let profile = make_profile(&JaccardReplacement::new(), &song, agents, range, &mut rng_from_seed(2)).unwrap();
    (profile, model)
}

fn exact_solvers(c: &mut Criterion) {
    let space = SearchSpace::full();
    let mut group = c.benchmark_group("exact");
    for agents in [8, 32] {
        let (profile, model) = setup(agents);
        group.bench_with_input(BenchmarkId::new("kemeny", agents), &profile, |b, p| {
            b.iter(|| solve_kemeny(black_box(p), &space))
        });
        group.bench_with_input(BenchmarkId::new("kemeny2_dp", agents), &profile, |b, p| {
            b.iter(|| solve_kemeny_2gram_dp(black_box(p), 0.9, &model, &space))
        });
    }
    group.finish();
}

fn annealed_solvers(c: &mut Criterion) {
    let space = SearchSpace::full();
    let (profile, model) = setup(8);
    let config = AnnealingConfig::default();
    let weights = ObjectiveWeights::default();
    let cluster = ClusterOptions {
        x_max: 4,
        off_section_weight: 0.5,
        mode: ClusterMode::Anneal,
        ..ClusterOptions::default()
    };
    let mut group = c.benchmark_group("anneal");
    group.sample_size(20);
    group.bench_function("pav", |b| {
        b.iter(|| solve_pav(black_box(&profile), &weights, None, &config, &space).unwrap())
    });
    group.bench_function("pav2", |b| {
        b.iter(|| solve_pav(black_box(&profile), &weights, Some(&model), &config, &space).unwrap())
    });
    group.bench_function("clustered", |b| {
        b.iter(|| solve_clustered_kemeny(black_box(&profile), &cluster, None, &config, &space).unwrap())
    });
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let (profile, _) = setup(32);
    let w = profile.row(0).to_vec();
    c.bench_function("cluster_coherence_32x64", |b| {
        b.iter(|| cluster_coherence(black_box(&profile), black_box(&w)).unwrap())
    });
}

criterion_group!(benches, exact_solvers, annealed_solvers, metrics);
criterion_main!(benches);
