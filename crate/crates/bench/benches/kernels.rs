use criterion::{black_box, criterion_group, criterion_main, Criterion};
use koopid_core::dictionary::Dictionary;
use koopid_core::numerics::truncated_pinv_solve;
use koopid_core::{
    rollout, DictionarySpec, KoopmanModel, LiftingSpec, Matrix, ModelFamily, PolyScope, Rank,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0)).unwrap()
}

fn cubic(scope: PolyScope) -> LiftingSpec {
    LiftingSpec::Polynomial {
        min_degree: 2,
        max_degree: 3,
        scope,
    }
}

fn solve(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = random(20, 4000, 1.0, &mut rng);
    let z = random(200, 4000, 1.0, &mut rng);
    c.bench_function("truncated_pinv_solve 200x4000 rank 80", |b| {
        b.iter(|| truncated_pinv_solve(black_box(&y), black_box(&z), Rank::Truncated(80)).unwrap())
    });
}

fn lift(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dict = Dictionary::new(&DictionarySpec::new(
        20,
        2,
        30,
        cubic(PolyScope::LatestFrame),
    ))
    .unwrap();
    assert_eq!(dict.lift_dim(), 1750);
    let gamma: Vec<f64> = (0..dict.state_dim())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let mut out = vec![0.0; dict.lift_dim()];
    c.bench_function("lift 1750 features", |b| {
        b.iter(|| dict.lift(black_box(&gamma), &mut out))
    });
}

fn roll(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = DictionarySpec::new(1, 0, 10, cubic(PolyScope::AllFrames));
    let (n, l) = (spec.state_dim().unwrap(), spec.lift_dim().unwrap());
    let family = ModelFamily::Nonlinear {
        a: random(n, n, 0.3 / n as f64, &mut rng),
        c: random(n, l, 0.01 / l as f64, &mut rng),
    };
    let model = KoopmanModel::new(family, spec, 0.05, Rank::Full, false).unwrap();
    let x0 = vec![0.1; n];
    c.bench_function("rollout 1000 steps, 11 states, 352 features", |b| {
        b.iter(|| rollout(&model, black_box(&x0), None, 1000).unwrap())
    });
}

criterion_group!(benches, solve, lift, roll);
criterion_main!(benches);
