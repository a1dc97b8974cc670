use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use heraldiq_core::discover::{cost, SearchProblem};
use heraldiq_core::interferometer::haar_unitary;
use heraldiq_core::schemes::{builtin, run};
use heraldiq_core::{evolve, permanent, ModeOccupation, PureState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_permanent(c: &mut Criterion) {
    let mut g = c.benchmark_group("permanent");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [4usize, 6, 8, 10, 12] {
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random(), rng.random()));
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| permanent(black_box(a)).unwrap()));
    }
    g.finish();
}

fn bench_evolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    g.sample_size(20);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (n, m) in [(2usize, 4usize), (4, 6), (5, 5), (6, 6), (6, 10)] {
        let u = haar_unitary(m, &mut rng);
        let mut occ = vec![0u8; m];
        occ[..n].iter_mut().for_each(|x| *x = 1);
        let input = PureState::basis(ModeOccupation::new(occ));
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}p{m}m")), &(input, u), |b, (s, u)| {
            b.iter(|| evolve(black_box(s), u).unwrap())
        });
    }
    g.finish();
}

fn bench_schemes(c: &mut Criterion) {
    let mut g = c.benchmark_group("scheme");
    g.sample_size(20);
    for name in ["bell-5p5m", "bell-6p6m", "bell-4p6m"] {
        let s = builtin(name).unwrap();
        g.bench_function(name, |b| b.iter(|| run(black_box(&s), None).unwrap()));
    }
    g.finish();
}

fn bench_cost(c: &mut Criterion) {
    let text = include_str!("../../../schemes/problems/bell-4p6m.json");
    let problem = SearchProblem::from_json(text).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..problem.param_count()).map(|_| rng.random_range(0.0..6.0)).collect();
    c.bench_function("search_cost/bell-4p6m", |b| b.iter(|| cost(black_box(&x), &problem).unwrap()));
}

criterion_group!(benches, bench_permanent, bench_evolve, bench_schemes, bench_cost);
criterion_main!(benches);
