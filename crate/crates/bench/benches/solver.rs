use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use iasim_core::link_level::{self, IaTrialTerms, SinrModel};
use iasim_core::*;
use std::hint::black_box;

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("alternating_min");
    g.sample_size(20);
    for (k, n) in [(3, 2), (5, 3)] {
        let sc = Scenario::symmetric(k, n, 1).with_alpha(Complex64::new(0.3, 0.0));
        let sampler = ChannelSampler::new(&sc).unwrap();
        let mut trial = 0;
        g.bench_function(format!("{k}user_{n}x{n}"), |b| {
            b.iter_batched(
                || {
                    trial += 1;
                    let mut rng = SeedStream::new(1).trial(trial);
                    (sampler.sample(&mut rng), rng)
                },
                |(ch, mut rng)| alternating_min(&ch.obs_h, &sc.streams, &SolverConfig::default(), &mut rng).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn receivers(c: &mut Criterion) {
    let sc = Scenario::symmetric(3, 2, 1).with_alpha(Complex64::new(0.3, 0.0)).with_beta(0.1);
    let mut rng = SeedStream::new(2).trial(0);
    let ch = ChannelSampler::new(&sc).unwrap().sample(&mut rng);
    let sol = alternating_min(&ch.obs_h, &sc.streams, &SolverConfig::default(), &mut rng).unwrap();
    let gamma = 100.0;

    c.bench_function("sinr_perfect", |b| {
        b.iter(|| link_level::sinr_perfect(ch.true_h.get(0, 0), &sol.precoders[0], &sol.bases[0], black_box(gamma)).unwrap())
    });
    c.bench_function("sinr_imperfect", |b| b.iter(|| link_level::sinr_imperfect(&ch, &sol, black_box(gamma)).unwrap()));
    c.bench_function("trial_terms_new", |b| b.iter(|| IaTrialTerms::new(&ch, &sol).unwrap()));
    let terms = IaTrialTerms::new(&ch, &sol).unwrap();
    c.bench_function("trial_terms_sinr", |b| {
        b.iter(|| terms.sinr(black_box(0.1), black_box(gamma), SinrModel::Instantaneous))
    });
}

criterion_group!(benches, solver, receivers);
criterion_main!(benches);
