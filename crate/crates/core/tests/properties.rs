use std::collections::HashMap;

use koopid_core::analysis::{
    estimate_prc, find_fixed_point, find_limit_cycle, phase_grid, spectrum_of, Pulse,
};
use koopid_core::dictionary::{dict_output_dim, Dictionary, MonomialTable};
use koopid_core::estimators::{
    fit_dmd, fit_nonlinear, fit_nonlinear_controlled, training_residual, FitKind, PreparedFit,
};
use koopid_core::numerics::{truncated_pinv_solve, SvdFactors};
use koopid_core::simulators::{Hopf, HopfParams};
use koopid_core::{
    assemble, pod_basis, reduce, rollout, DictionarySpec, KoopmanModel, LiftedData, LiftingSpec,
    Matrix, ModelFamily, ObservableSeries, PolyScope, Rank,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}

fn poly(lo: u32, hi: u32, scope: PolyScope) -> LiftingSpec {
    LiftingSpec::Polynomial {
        min_degree: lo,
        max_degree: hi,
        scope,
    }
}

fn residual(y: &Matrix, x: &Matrix, z: &Matrix) -> f64 {
    y.sub(&x.matmul(z).unwrap()).unwrap().frobenius_norm()
}

/// Contracting quadratic-cubic map on `n` observables, optionally with one input.
fn random_model(n: usize, controlled: bool, rng: &mut ChaCha8Rng) -> KoopmanModel {
    let spec = DictionarySpec::new(
        n,
        usize::from(controlled),
        0,
        poly(2, 3, PolyScope::LatestFrame),
    );
    let l = spec.lift_dim().unwrap();
    let a = random(n, n, rng).scale(0.5 / n as f64);
    let c = random(n, l, rng).scale(0.2 / l as f64);
    let family = if controlled {
        ModelFamily::NonlinearControlled {
            a,
            b: random(n, 1, rng).scale(0.3),
            c,
        }
    } else {
        ModelFamily::Nonlinear { a, c }
    };
    KoopmanModel::new(family, spec, 0.1, Rank::Full, false).unwrap()
}

/// One-step pairs of `model` from random states, enough to identify it.
fn model_data(model: &KoopmanModel, rng: &mut ChaCha8Rng) -> LiftedData {
    let n = model.spec.m;
    let q = model.spec.q;
    let count = 3 * (n + q + model.lift_dim());
    let parts: Vec<LiftedData> = (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let u: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let next = model.apply(&x, &u);
            let y = Matrix::from_columns(&[x, next]).unwrap();
            let inputs = (q > 0).then(|| Matrix::from_columns(&[u.clone(), u]).unwrap());
            assemble(&ObservableSeries::new(y, inputs, 0.1).unwrap(), &model.spec).unwrap()
        })
        .collect();
    LiftedData::concat(&parts).unwrap()
}

/// Noisy two-observable series with one input, lifted through a delay dictionary.
fn noisy_data(seed: u64, z: usize, controlled: bool) -> LiftedData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = 60;
    let y = random(2, t, &mut rng);
    let u = controlled.then(|| random(1, t, &mut rng));
    let spec = DictionarySpec::new(
        2,
        usize::from(controlled),
        z,
        poly(2, 3, PolyScope::AllFrames),
    );
    assemble(&ObservableSeries::new(y, u, 0.1).unwrap(), &spec).unwrap()
}

fn central_difference(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], rows: usize) -> Matrix {
    let mut jac = Matrix::zeros(rows, x.len());
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..rows {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn assert_jacobian(analytic: &Matrix, numeric: &Matrix) {
    let scale = analytic.max_abs().max(1.0);
    let err = analytic.sub(numeric).unwrap().max_abs();
    assert!(
        err <= 1e-6 * scale,
        "jacobian error {err:e} at scale {scale:e}"
    );
}

fn hopf(mu: f64, omega: f64, input_scale: f64) -> Hopf {
    Hopf::new(HopfParams {
        mu,
        omega,
        input_scale,
        ..HopfParams::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn least_squares_beats_perturbations(seed in any::<u64>(), p in 1usize..4, s in 1usize..6, extra in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = s + extra + 1;
        let y = random(p, d, &mut rng);
        let z = random(s, d, &mut rng);
        let x = truncated_pinv_solve(&y, &z, Rank::Full).unwrap();
        let best = residual(&y, &x, &z);
        for _ in 0..100 {
            let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
            let other = x.sub(&random(p, s, &mut rng).scale(eps)).unwrap();
            prop_assert!(best <= residual(&y, &other, &z) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9) {
        let a = random(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = SvdFactors::compute(&a).unwrap().reconstruct(Rank::Full);
        prop_assert!(rel(&back, &a) <= 1e-10);
    }

    #[test]
    fn pod_orthonormal_and_energy(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..12) {
        let gamma = random(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed));
        let total: f64 = gamma.frobenius_norm().powi(2);
        for rho in 1..=rows.min(cols) {
            let basis = pod_basis(&gamma, rho).unwrap();
            let gram = basis.phi.transpose().matmul(&basis.phi).unwrap();
            prop_assert!(gram.sub(&Matrix::identity(rho)).unwrap().max_abs() <= 1e-10);
            prop_assert!(basis.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let proj = basis.phi.matmul(&basis.phi.transpose().matmul(&gamma).unwrap()).unwrap();
            let err = gamma.sub(&proj).unwrap().frobenius_norm().powi(2);
            let discarded: f64 = basis.eigenvalues[rho..].iter().sum();
            prop_assert!((err - discarded).abs() <= 1e-8 * discarded.max(1e-8 * total));
        }
    }

    #[test]
    fn training_residual_falls_with_rank(seed in any::<u64>(), z in 0usize..3) {
        let data = noisy_data(seed, z, true);
        let prepared = PreparedFit::new(&data, FitKind::NonlinearControlled).unwrap();
        let mut last = f64::INFINITY;
        for r in 1..=prepared.max_rank() {
            let res = training_residual(&prepared.fit(Rank::Truncated(r)).unwrap(), &data).unwrap();
            prop_assert!(res <= last * (1.0 + 1e-10) + 1e-12, "rank {r}: {res} > {last}");
            last = res;
        }
    }

    #[test]
    fn delay_states_shift_by_one_frame(
        seed in any::<u64>(),
        m in 1usize..4,
        q in 0usize..3,
        z in 0usize..4,
        pre in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = z + 8;
        let y = random(m, t, &mut rng);
        let u = (q > 0).then(|| random(q, t, &mut rng));
        let mut spec = DictionarySpec::new(m, q, z, poly(2, 2, PolyScope::LatestFrame));
        if pre {
            spec.pre_lift = poly(2, 2, PolyScope::LatestFrame);
        }
        let w = m + spec.pre_lift_dim().unwrap();
        let data = assemble(&ObservableSeries::new(y, u, 0.1).unwrap(), &spec).unwrap();
        let frames = (z + 1) * w;
        for i in 0..data.len() {
            let (g, gp) = (data.gamma.col(i), data.gamma_plus.col(i));
            prop_assert_eq!(&gp[w..frames], &g[..frames - w]);
            if q > 0 && z > 0 {
                prop_assert_eq!(&gp[frames + q..], &g[frames..g.len() - q]);
                prop_assert_eq!(&gp[frames..frames + q], data.inputs.as_ref().unwrap().col(i));
            }
        }
    }

    #[test]
    fn polynomial_lift_of_ones_is_ones(m in 1usize..4, z in 0usize..3, lo in 2u32..4, span in 0u32..2, all in any::<bool>()) {
        let scope = if all { PolyScope::AllFrames } else { PolyScope::LatestFrame };
        let dict = Dictionary::new(&DictionarySpec::new(m, 0, z, poly(lo, lo + span, scope))).unwrap();
        let out = dict.lift_vec(&vec![1.0; dict.state_dim()]);
        prop_assert!(!out.is_empty());
        prop_assert!(out.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn monomial_order_is_total_and_permutes(seed in any::<u64>(), n in 1usize..5, lo in 2u32..4, span in 0u32..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = MonomialTable::new(n, lo, lo + span).unwrap();
        let len = table.output_dim();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let (mut first, mut second) = (vec![0.0; len], vec![0.0; len]);
        table.eval(&x, &mut first);
        table.eval(&x, &mut second);
        prop_assert_eq!(&first, &second);

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let index: HashMap<Vec<u32>, usize> = (0..len).map(|k| (table.exponents(k), k)).collect();
        let permuted: Vec<f64> = (0..n).map(|i| x[perm[i]]).collect();
        let mut out = vec![0.0; len];
        table.eval(&permuted, &mut out);
        for (k, got) in out.iter().enumerate() {
            let e = table.exponents(k);
            let mut moved = vec![0; n];
            for i in 0..n {
                moved[perm[i]] = e[i];
            }
            let v = first[index[&moved]];
            prop_assert!((got - v).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn nonlinear_fit_nests_dmd(seed in any::<u64>(), z in 0usize..3) {
        let data = noisy_data(seed, z, false);
        let linear = training_residual(&fit_dmd(&data, Rank::Full, 0.1).unwrap(), &data).unwrap();
        let nonlinear = training_residual(&fit_nonlinear(&data, Rank::Full, 0.1).unwrap(), &data).unwrap();
        prop_assert!(nonlinear <= linear * (1.0 + 1e-10));
    }

    #[test]
    fn realizable_models_are_recovered(seed in any::<u64>(), n in 1usize..4, controlled in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_model(n, controlled, &mut rng);
        let data = model_data(&truth, &mut rng);
        let fit = if controlled {
            fit_nonlinear_controlled(&data, Rank::Full, 0.1).unwrap()
        } else {
            fit_nonlinear(&data, Rank::Full, 0.1).unwrap()
        };
        prop_assert!(rel(fit.family.a(), truth.family.a()) <= 1e-8);
        prop_assert!(rel(fit.family.c().unwrap(), truth.family.c().unwrap()) <= 1e-8);
        if controlled {
            prop_assert!(rel(fit.family.b().unwrap(), truth.family.b().unwrap()) <= 1e-8);
        }
    }

    #[test]
    fn square_pod_reduction_matches_rollout(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(n, false, &mut rng);
        let data = model_data(&model, &mut rng);
        let basis = pod_basis(&data.gamma, n).unwrap();
        let reduced = reduce(&model, &basis).unwrap();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let full = rollout(&model, &x0, None, 100).unwrap();
        let red = rollout(&reduced, &x0, None, 100).unwrap();
        prop_assert!(!full.diverged() && !red.diverged());
        let scale = full.states.max_abs().max(1e-12);
        prop_assert!(red.states.sub(&full.states).unwrap().max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn zero_input_matches_autonomous_restriction(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let controlled = random_model(n, true, &mut rng);
        let ModelFamily::NonlinearControlled { a, c, .. } = controlled.family.clone() else { unreachable!() };
        let spec = DictionarySpec::new(n, 0, 0, controlled.spec.lift.clone());
        let autonomous = KoopmanModel::new(ModelFamily::Nonlinear { a, c }, spec, 0.1, Rank::Full, false).unwrap();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let with_zeros = rollout(&controlled, &x0, Some(&Matrix::zeros(1, 50)), 50).unwrap();
        let free = rollout(&autonomous, &x0, None, 50).unwrap();
        prop_assert_eq!(with_zeros.states, free.states);
    }

    #[test]
    fn fit_ignores_column_order(seed in any::<u64>(), z in 0usize..3) {
        let data = noisy_data(seed, z, true);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let shuffled = LiftedData::from_parts(
            data.gamma.select_cols(&order),
            data.gamma_plus.select_cols(&order),
            data.inputs.as_ref().map(|u| u.select_cols(&order)),
            data.lifted.select_cols(&order),
            data.spec.clone(),
        )
        .unwrap();
        let a = fit_nonlinear_controlled(&data, Rank::Full, 0.1).unwrap();
        let b = fit_nonlinear_controlled(&shuffled, Rank::Full, 0.1).unwrap();
        prop_assert!(rel(b.family.a(), a.family.a()) <= 1e-9);
        prop_assert!(rel(b.family.b().unwrap(), a.family.b().unwrap()) <= 1e-9);
        prop_assert!(rel(b.family.c().unwrap(), a.family.c().unwrap()) <= 1e-9);
    }

    #[test]
    fn lifting_jacobians_match_differences(seed in any::<u64>(), m in 1usize..3, z in 0usize..3, kind in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lift = match kind {
            0 => poly(2, 3, PolyScope::LatestFrame),
            1 => poly(2, 3, PolyScope::AllFrames),
            2 => LiftingSpec::Rbf { centers: random(m, 5, &mut rng) },
            _ => LiftingSpec::Composed { rbf_centers: random(m, 3, &mut rng), poly_min_degree: 2, poly_max_degree: 3 },
        };
        let dict = Dictionary::new(&DictionarySpec::new(m, 1, z, lift)).unwrap();
        let gamma: Vec<f64> = (0..dict.state_dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let numeric = central_difference(|g| dict.lift_vec(g), &gamma, dict.lift_dim());
        assert_jacobian(&dict.lift_jacobian(&gamma), &numeric);
    }

    #[test]
    fn model_jacobian_and_fixed_point(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(n, false, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let numeric = central_difference(|s| model.apply(s, &[]), &x, n);
        assert_jacobian(&model.jacobian(&x), &numeric);

        let fp = find_fixed_point(&model, 0.0, &x, 1e-10).unwrap();
        let next = model.apply(&fp.state, &[]);
        let res = next.iter().zip(&fp.state).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-10);
    }

    #[test]
    fn conjugate_modes_have_opposite_frequencies(seed in any::<u64>(), n in 1usize..7, dt in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(n, n, &mut rng);
        let report = spectrum_of(&a, &random(n, 5, &mut rng), dt).unwrap();
        prop_assert_eq!(report.modes.len(), n);
        for mode in &report.modes {
            prop_assert!(mode.amplitude >= 0.0);
            if mode.eigenvalue.im == 0.0 {
                continue;
            }
            let conj = mode.eigenvalue.conj();
            let partner = report
                .modes
                .iter()
                .min_by(|x, y| (x.eigenvalue - conj).norm().total_cmp(&(y.eigenvalue - conj).norm()))
                .unwrap();
            prop_assert!((partner.frequency + mode.frequency).abs() <= 1e-9 * mode.frequency.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cycle_period_ignores_longer_transient(mu in 0.5f64..2.0, omega in 0.8f64..2.5) {
        let sys = hopf(mu, omega, 1.0);
        let short = find_limit_cycle(&sys, &[0.3, 0.0], 0, 0.0, 400, 4400).unwrap();
        let long = find_limit_cycle(&sys, &[0.3, 0.0], 0, 0.0, 800, 4800).unwrap();
        prop_assert!(short.converged && long.converged);
        prop_assert!((short.period - long.period).abs() <= 1e-3 * long.period);
    }

    #[test]
    fn unperturbed_prc_is_zero(mu in 0.5f64..2.0, omega in 0.8f64..2.5, count in 1usize..9) {
        let sys = hopf(mu, omega, 0.0);
        let cycle = find_limit_cycle(&sys, &[1.0, 0.0], 0, 0.0, 400, 4400).unwrap();
        let pulse = Pulse { magnitude: 0.2, duration: 0.25, channel: 0 };
        for point in estimate_prc(&sys, &cycle, pulse, &phase_grid(count)).unwrap() {
            prop_assert_eq!(point.shift, 0.0);
        }
    }
}

#[test]
fn dict_output_dim_matches_enumeration() {
    for n in 1..=6usize {
        for lo in 2..=5u32 {
            for hi in lo..=5u32 {
                let mut count = 0;
                let mut e = vec![0u32; n];
                loop {
                    let deg: u32 = e.iter().sum();
                    if (lo..=hi).contains(&deg) {
                        count += 1;
                    }
                    let mut i = 0;
                    while i < n && e[i] == hi {
                        e[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                    e[i] += 1;
                }
                assert_eq!(
                    dict_output_dim(n, lo, hi).unwrap(),
                    count,
                    "n={n} degrees {lo}..={hi}"
                );
                assert_eq!(MonomialTable::new(n, lo, hi).unwrap().output_dim(), count);
            }
        }
    }
}
