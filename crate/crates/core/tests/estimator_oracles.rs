mod common;

use common::{
    center, lstsq, max_abs_diff, norm_inf, penalized_ls_qp, project_simplex, rng, spectral_norm,
    uniform_matrix, uniform_vec,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sacr_core::estimators::{
    fit_adaptive_lasso, fit_bar, fit_centered_ridge, fit_lasso, fit_nng, fit_relaxed_lasso, fit_ridge,
    fit_roughness, fit_sacr, fit_sacr_logistic, predict, Estimator, Fit, FitFlag, Hyperparams, LinearFit,
    LogisticSacrObjective, TrainedModel, ROUGHNESS_NULLSPACE_GUARD,
};
use sacr_core::fda::{FunctionalDataset, Task};
use sacr_core::linalg::{second_difference_operator, DenseMatrix};
use sacr_core::qp::solve_qp;

fn assert_close_rel(got: &[f64], want: &[f64], rel: f64, what: &str) {
    let scale = norm_inf(want).max(1e-12);
    let err = max_abs_diff(got, want);
    assert!(err <= rel * scale, "{what}: error {err:e} vs scale {scale:e}");
}

#[test]
fn closed_forms_match_their_qp_twins() {
    for seed in 0..30 {
        let mut r = rng(seed);
        let n = r.random_range(5..=50);
        let p = r.random_range(3..=30);
        let a = uniform_matrix(&mut r, n, p);
        let y = uniform_vec(&mut r, n);
        let c: Vec<f64> = uniform_vec(&mut r, p).iter().map(|v| 2.0 * v).collect();
        for lambda in [0.1, 1.0, 10.0] {
            let mut ridge_pen = DenseMatrix::identity(p);
            ridge_pen = ridge_pen.scale(lambda);
            let zero = vec![0.0; p];
            let mut rough_pen = second_difference_operator(p).unwrap().gram().scale(lambda);
            rough_pen.add_diagonal(ROUGHNESS_NULLSPACE_GUARD);

            let cases: [(LinearFit, &DenseMatrix, &[f64]); 3] = [
                (fit_ridge(&a, &y, lambda).unwrap(), &ridge_pen, &zero),
                (fit_centered_ridge(&a, &y, lambda, &c).unwrap(), &ridge_pen, &c),
                (fit_roughness(&a, &y, lambda).unwrap(), &rough_pen, &zero),
            ];
            for (fit, pen, cc) in cases {
                let sol = solve_qp(&penalized_ls_qp(&a, &y, pen, cc), 1e-10, 200).unwrap();
                let what = format!("{} seed {seed} λ={lambda}", fit.estimator);
                assert_close_rel(&fit.beta, &sol.z[1..], 1e-6, &what);
                assert!((fit.intercept - sol.z[0]).abs() <= 1e-6 * sol.z[0].abs().max(1.0), "{what}");
            }
        }
    }
}

#[test]
fn roughness_keeps_affine_truth() {
    let mut r = rng(7);
    let (n, p) = (40, 12);
    let a = uniform_matrix(&mut r, n, p);
    let truth: Vec<f64> = (1..=p).map(|j| 1.0 + 2.0 * j as f64 / p as f64).collect();
    let y = a.matvec(&truth);
    let fit = fit_roughness(&a, &y, 1e6).unwrap();
    assert!(max_abs_diff(&fit.beta, &truth) < 1e-6);
}

#[test]
fn roughness_limit_is_best_affine_fit() {
    let mut r = rng(8);
    let (n, p) = (30, 15);
    let a = uniform_matrix(&mut r, n, p);
    let y = uniform_vec(&mut r, n);
    let t: Vec<f64> = (1..=p).map(|j| j as f64 / p as f64).collect();
    // β(t) = u + v·t, so the model is y = β₀ + u·(A1) + v·(At)
    let a1 = a.matvec(&vec![1.0; p]);
    let at = a.matvec(&t);
    let basis = DenseMatrix::from_fn(n, 3, |i, j| [1.0, a1[i], at[i]][j]);
    let coef = lstsq(&basis, &y);
    let oracle: Vec<f64> = t.iter().map(|tj| coef[1] + coef[2] * tj).collect();
    let fit = fit_roughness(&a, &y, 1e12).unwrap();
    assert_close_rel(&fit.beta, &oracle, 1e-4, "affine limit");
}

#[test]
fn roughness_vanishing_penalty_is_least_squares() {
    let mut r = rng(9);
    let (n, p) = (40, 8);
    let a = uniform_matrix(&mut r, n, p);
    let y = uniform_vec(&mut r, n);
    let (ac, yc) = center(&a, &y);
    let ols = lstsq(&ac, &yc);
    let fit = fit_roughness(&a, &y, 1e-12).unwrap();
    assert_close_rel(&fit.beta, &ols, 1e-6, "λ → 0");
}

/// Subgradient conditions of `‖y - Aβ‖² + λΣ|βⱼ|` on centered data.
fn lasso_stationarity(a: &DenseMatrix, y: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    let (ac, yc) = center(a, y);
    let fitted = ac.matvec(beta);
    let resid: Vec<f64> = yc.iter().zip(&fitted).map(|(u, v)| u - v).collect();
    let g = ac.tr_matvec(&resid);
    beta.iter()
        .zip(&g)
        .map(|(b, gj)| {
            if *b == 0.0 {
                (2.0 * gj.abs() - lambda).max(0.0)
            } else {
                (2.0 * gj - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn lasso_satisfies_subgradient_conditions() {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let n = r.random_range(10..=50);
        let p = r.random_range(2..=40);
        let a = uniform_matrix(&mut r, n, p);
        let y: Vec<f64> = uniform_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
        for lambda in [0.01, 0.3, 2.0, 10.0] {
            let fit = fit_lasso(&a, &y, lambda).unwrap();
            assert!(!fit.is_flagged(FitFlag::SweepLimit));
            let viol = lasso_stationarity(&a, &y, lambda, &fit.beta);
            assert!(viol <= 1e-6, "seed {seed} λ={lambda}: {viol:e}");
        }
    }
}

#[test]
fn unpenalized_lasso_is_ols() {
    let mut r = rng(11);
    let a = uniform_matrix(&mut r, 40, 6);
    let y = uniform_vec(&mut r, 40);
    let (ac, yc) = center(&a, &y);
    let fit = fit_lasso(&a, &y, 0.0).unwrap();
    assert_close_rel(&fit.beta, &lstsq(&ac, &yc), 1e-6, "λ = 0");
}

/// Independent weighted coordinate descent with per-coordinate thresholds.
fn weighted_lasso_oracle(a: &DenseMatrix, y: &[f64], lambda: f64, weights: &[f64]) -> Vec<f64> {
    let (ac, yc) = center(a, y);
    let p = ac.cols();
    let mut beta = vec![0.0; p];
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for j in 0..p {
            if weights[j].is_infinite() {
                continue;
            }
            let col = ac.column(j);
            let fitted = ac.matvec(&beta);
            let partial: f64 = (0..ac.rows()).map(|i| col[i] * (yc[i] - fitted[i] + col[i] * beta[j])).sum();
            let norm: f64 = col.iter().map(|v| v * v).sum();
            let thr = lambda * weights[j] / 2.0;
            let new = partial.signum() * (partial.abs() - thr).max(0.0) / norm;
            change = change.max((new - beta[j]).abs());
            beta[j] = new;
        }
        if change < 1e-13 {
            break;
        }
    }
    beta
}

#[test]
fn adaptive_lasso_matches_weighted_cd() {
    for seed in 0..5 {
        let mut r = rng(200 + seed);
        let a = uniform_matrix(&mut r, 30, 7);
        let y: Vec<f64> = uniform_vec(&mut r, 30).iter().map(|v| 2.0 * v).collect();
        let mut init: Vec<f64> = uniform_vec(&mut r, 7);
        init[3] = 0.0;
        for gamma in [0.5, 1.0, 2.0] {
            let weights: Vec<f64> = init
                .iter()
                .map(|b| if *b == 0.0 { f64::INFINITY } else { 1.0 / b.abs().powf(gamma) })
                .collect();
            let fit = fit_adaptive_lasso(&a, &y, 0.5, gamma, &init).unwrap();
            let oracle = weighted_lasso_oracle(&a, &y, 0.5, &weights);
            assert!(max_abs_diff(&fit.beta, &oracle) < 1e-8, "seed {seed} γ={gamma}");
            assert_eq!(fit.beta[3], 0.0);
        }
    }
}

#[test]
fn relaxed_lasso_limit_is_restricted_ols() {
    let mut r = rng(12);
    let (n, p) = (40, 10);
    let a = uniform_matrix(&mut r, n, p);
    let mut truth = vec![0.0; p];
    truth[1] = 3.0;
    truth[6] = -2.0;
    let noise = uniform_vec(&mut r, n);
    let y: Vec<f64> = a.matvec(&truth).iter().zip(&noise).map(|(s, e)| s + 0.3 * e).collect();
    let lambda = 4.0;
    let first = fit_lasso(&a, &y, lambda).unwrap();
    let active: Vec<usize> = (0..p).filter(|&j| first.beta[j] != 0.0).collect();
    assert!(!active.is_empty() && active.len() < p);
    let (ac, yc) = center(&a, &y);
    let restricted = lstsq(&ac.select_columns(&active), &yc);
    let fit = fit_relaxed_lasso(&a, &y, lambda, 1e-9).unwrap();
    for (k, &j) in active.iter().enumerate() {
        assert!((fit.beta[j] - restricted[k]).abs() < 1e-4);
    }
    for j in (0..p).filter(|j| !active.contains(j)) {
        assert_eq!(fit.beta[j], 0.0);
    }
}

#[test]
fn nng_satisfies_kkt() {
    for seed in 0..10 {
        let mut r = rng(300 + seed);
        let (n, p) = (r.random_range(10..=40), r.random_range(2..=15));
        let a = uniform_matrix(&mut r, n, p);
        let y = uniform_vec(&mut r, n);
        let init: Vec<f64> = uniform_vec(&mut r, p).iter().map(|v| 2.0 * v).collect();
        let lambda = r.random_range(0.0..2.0);
        let fit = fit_nng(&a, &y, lambda, &init).unwrap();
        let cvec: Vec<f64> = fit.beta.iter().zip(&init).map(|(b, i)| b / i).collect();
        let (ac, yc) = center(&a, &y);
        let at = ac.scale_columns(&init);
        let fitted = at.matvec(&cvec);
        let resid: Vec<f64> = fitted.iter().zip(&yc).map(|(u, v)| u - v).collect();
        let grad: Vec<f64> = at.tr_matvec(&resid).iter().map(|g| 2.0 * g + lambda).collect();
        for j in 0..p {
            assert!(cvec[j] >= -1e-10, "seed {seed}: c = {}", cvec[j]);
            assert!(grad[j] >= -1e-6, "seed {seed}: dual infeasible {}", grad[j]);
            assert!((cvec[j] * grad[j]).abs() <= 1e-6, "seed {seed}: complementarity");
        }
    }
}

#[test]
fn bar_is_insensitive_to_sensible_initials() {
    let mut r = rng(13);
    let (n, p) = (60, 6);
    let a = uniform_matrix(&mut r, n, p);
    let truth = [2.0, 0.0, -1.5, 0.0, 0.0, 1.0];
    let noise = uniform_vec(&mut r, n);
    let y: Vec<f64> = a.matvec(&truth).iter().zip(&noise).map(|(s, e)| s + 0.1 * e).collect();
    let lambda = 0.5;
    let i1 = fit_ridge(&a, &y, lambda).unwrap().beta;
    let i2 = fit_ridge(&a, &y, 10.0 * lambda).unwrap().beta;
    let f1 = fit_bar(&a, &y, lambda, &i1).unwrap();
    let f2 = fit_bar(&a, &y, lambda, &i2).unwrap();
    assert!(max_abs_diff(&f1.beta, &f2.beta) < 1e-4);
    for j in [1, 3, 4] {
        assert_eq!(f1.beta[j], 0.0);
    }
}

#[test]
fn bar_scalar_fixed_point_oracle() {
    // orthonormal, mean-zero columns from a 4×4 Hadamard block
    let h = DenseMatrix::from_rows(&[
        vec![0.5, 0.5, 0.5],
        vec![0.5, -0.5, -0.5],
        vec![-0.5, 0.5, -0.5],
        vec![-0.5, -0.5, 0.5],
    ])
    .unwrap();
    for (lambda, y) in [(0.2, [3.0, -1.0, 0.4, -2.4]), (1.0, [2.0, 1.5, -3.0, -0.5]), (0.05, [0.3, 0.1, -0.2, -0.2])] {
        let ols = h.tr_matvec(&y);
        let fit = fit_bar(&h, &y, lambda, &ols).unwrap();
        for (b, o) in fit.beta.iter().zip(&ols) {
            if o.abs() < 2.0 * f64::sqrt(lambda) {
                assert_eq!(*b, 0.0, "λ={lambda} ols={o}");
            } else {
                let root = (o + o.signum() * (o * o - 4.0 * lambda).sqrt()) / 2.0;
                assert!((b - root).abs() < 1e-6, "λ={lambda}: {b} vs {root}");
            }
        }
    }
}

#[test]
fn sacr_limit_matches_weight_subproblem_oracle() {
    let mut r = rng(14);
    let (n, p) = (40, 6);
    let a = uniform_matrix(&mut r, n, p);
    let c: Vec<f64> = (0..p).map(|_| r.random_range(0.5..3.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let wtrue = [0.2, 1.8, 0.0, 1.0, 2.5, 0.5];
    let bt: Vec<f64> = c.iter().zip(&wtrue).map(|(a, b)| a * b).collect();
    let noise = uniform_vec(&mut r, n);
    let y: Vec<f64> = a.matvec(&bt).iter().zip(&noise).map(|(s, e)| 1.0 + s + 0.5 * e).collect();

    let fit = fit_sacr(&a, &y, 1e8, 1.0, Some(&c)).unwrap();

    // loss-only problem in w: min ‖yc - Ac·diag(c)·w‖² over Σw = p, w ≥ 0
    let (ac, yc) = center(&a, &y);
    let m = ac.scale_columns(&c);
    let gram = m.gram();
    let step = 1.0 / (2.0 * spectral_norm(&gram));
    let mty = m.tr_matvec(&yc);
    let mut w = vec![1.0; p];
    let mut prev = w.clone();
    for k in 0..200_000 {
        let mom = k as f64 / (k as f64 + 3.0);
        let v: Vec<f64> = w.iter().zip(&prev).map(|(a, b)| a + mom * (a - b)).collect();
        let gv = gram.matvec(&v);
        let cand: Vec<f64> = (0..p).map(|j| v[j] - step * 2.0 * (gv[j] - mty[j])).collect();
        prev = w;
        w = project_simplex(&cand, p as f64);
    }
    let oracle: Vec<f64> = w.iter().zip(&c).map(|(a, b)| a * b).collect();
    assert!(max_abs_diff(&fit.linear.beta, &oracle) < 1e-4, "{:?} vs {oracle:?}", fit.linear.beta);
    // entries of Q near 1e7 put the attainable stationarity above 1e-8
    assert!(fit.kkt.within(1e-6), "{:?}", fit.kkt);
}

#[test]
fn sacr_invariants_on_random_problems() {
    for seed in 0..8 {
        let mut r = rng(400 + seed);
        let (n, p) = (r.random_range(10..=40), r.random_range(5..=25));
        let a = uniform_matrix(&mut r, n, p).scale(1.0 / p as f64);
        let y = uniform_vec(&mut r, n);
        let lambda = 10f64.powf(r.random_range(-3.0..3.0));
        let phi = r.random_range(0.05..1.0);
        let fit = fit_sacr(&a, &y, lambda, phi, None).unwrap();
        let sum: f64 = fit.w.iter().map(|w| w - 1.0).sum();
        assert!(sum.abs() <= 1e-8 * p as f64, "seed {seed}: Σ(w-1) = {sum:e}");
        assert!(fit.w.iter().all(|w| *w >= -1e-10));
        assert!(fit.kkt.within(1e-8), "seed {seed}: {:?}", fit.kkt);
        let wmax = fit.w.iter().cloned().fold(f64::MIN, f64::max);
        if wmax >= 1.0 + 1e-3 {
            assert!(fit.w.iter().any(|w| *w <= 1.0 - 1e-6));
        }
    }
}

fn logistic_problem(seed: u64, n: usize, p: usize) -> (DenseMatrix, Vec<f64>) {
    let mut r = rng(seed);
    let a = uniform_matrix(&mut r, n, p);
    let mut labels: Vec<f64> = (0..n)
        .map(|i| if a.row(i).iter().sum::<f64>() + 0.5 * r.random_range(-1.0..1.0) > 0.0 { 1.0 } else { 0.0 })
        .collect();
    labels[0] = 1.0;
    labels[1] = 0.0;
    (a, labels)
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let (a, labels) = logistic_problem(15, 25, 6);
    let mut r = rng(16);
    let center = uniform_vec(&mut r, 6);
    let obj = LogisticSacrObjective::new(&a, &labels, 0.7, 0.4, &center).unwrap();
    for _ in 0..20 {
        let z: Vec<f64> = uniform_vec(&mut r, obj.dim()).iter().map(|v| 2.0 * v).collect();
        let g = obj.gradient(&z);
        let h = 1e-6;
        let fd: Vec<f64> = (0..z.len())
            .map(|k| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[k] += h;
                zm[k] -= h;
                (obj.value(&zp) - obj.value(&zm)) / (2.0 * h)
            })
            .collect();
        let err = max_abs_diff(&g, &fd);
        assert!(err <= 1e-5 * norm_inf(&g).max(1.0), "{err:e}");
    }
}

#[test]
fn logistic_sacr_beats_projected_gradient_oracle() {
    let (a, labels) = logistic_problem(17, 20, 5);
    let (lambda, phi) = (0.5, 0.6);
    let mut r = rng(18);
    let center: Vec<f64> = uniform_vec(&mut r, 5).iter().map(|v| 3.0 * v).collect();
    let fit = fit_sacr_logistic(&a, &labels, lambda, phi, Some(&center)).unwrap();
    let obj = LogisticSacrObjective::new(&a, &labels, lambda, phi, &center).unwrap();
    let mut z_fit = vec![fit.linear.intercept];
    z_fit.extend(&fit.linear.beta);
    z_fit.extend(&fit.w);

    // accelerated projected gradient with backtracking on the step; only
    // the w block is constrained
    let p = 5;
    let project = |z: &[f64]| {
        let mut out = z.to_vec();
        let w = project_simplex(&z[1 + p..], p as f64);
        out[1 + p..].copy_from_slice(&w);
        out
    };
    let mut z = vec![0.0; obj.dim()];
    z[1 + p..].iter_mut().for_each(|w| *w = 1.0);
    let mut prev = z.clone();
    let mut step = 1.0;
    for k in 0..20_000 {
        let mom = k as f64 / (k as f64 + 3.0);
        let v: Vec<f64> = z.iter().zip(&prev).map(|(a, b)| a + mom * (a - b)).collect();
        let (fv, g) = (obj.value(&v), obj.gradient(&v));
        let next = loop {
            let cand = project(&v.iter().zip(&g).map(|(a, b)| a - step * b).collect::<Vec<_>>());
            let d: Vec<f64> = cand.iter().zip(&v).map(|(a, b)| a - b).collect();
            let model = fv + d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
                + d.iter().map(|x| x * x).sum::<f64>() / (2.0 * step);
            if obj.value(&cand) <= model + 1e-15 {
                break cand;
            }
            step *= 0.5;
        };
        prev = z;
        z = next;
    }
    let ours = obj.value(&z_fit);
    let oracle = obj.value(&z);
    assert!(ours <= oracle + 1e-6, "ours {ours} vs oracle {oracle}");
    // and the oracle itself got close, so the comparison has teeth
    assert!(oracle - ours < 1e-4, "oracle stalled at {oracle} vs {ours}");
}

#[test]
fn centered_ridge_is_unbiased_at_true_center() {
    let mut r = rng(19);
    let (n, p, reps) = (30, 10, 500);
    let a = uniform_matrix(&mut r, n, p);
    let truth: Vec<f64> = uniform_vec(&mut r, p).iter().map(|v| 3.0 * v).collect();
    let signal: Vec<f64> = a.matvec(&truth).iter().map(|s| s + 0.5).collect();
    let mut sum = vec![0.0; p];
    let mut sumsq = vec![0.0; p];
    for _ in 0..reps {
        let y: Vec<f64> = signal
            .iter()
            .map(|s| {
                let e: f64 = StandardNormal.sample(&mut r);
                s + e
            })
            .collect();
        let fit = fit_centered_ridge(&a, &y, 10.0, &truth).unwrap();
        for j in 0..p {
            sum[j] += fit.beta[j];
            sumsq[j] += fit.beta[j] * fit.beta[j];
        }
    }
    for j in 0..p {
        let mean = sum[j] / reps as f64;
        let var = (sumsq[j] - reps as f64 * mean * mean) / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - truth[j]).abs() <= 3.0 * se, "coordinate {j}: bias {} vs se {se}", mean - truth[j]);
    }
}

#[test]
fn predict_is_affine_in_the_fit() {
    let mut r = rng(20);
    let curves = uniform_matrix(&mut r, 8, 5);
    let ds = FunctionalDataset::curves_only(curves).unwrap();
    let make = |b0: f64, beta: Vec<f64>| {
        TrainedModel::new(
            Fit::Linear(LinearFit {
                estimator: Estimator::Ridge,
                hyperparams: Hyperparams::lambda(1.0),
                intercept: b0,
                beta,
                flags: vec![],
            }),
            Task::Regression,
            None,
        )
    };
    let (b1, b2) = (uniform_vec(&mut r, 5), uniform_vec(&mut r, 5));
    let alpha = -1.7;
    let combo: Vec<f64> = b1.iter().zip(&b2).map(|(u, v)| alpha * u + v).collect();
    let p1 = predict(&make(0.3, b1), &ds).unwrap().values;
    let p2 = predict(&make(-1.1, b2), &ds).unwrap().values;
    let pc = predict(&make(alpha * 0.3 - 1.1, combo), &ds).unwrap().values;
    for i in 0..8 {
        assert!((pc[i] - (alpha * p1[i] + p2[i])).abs() < 1e-12);
    }
}

#[test]
fn interpolating_fit_has_zero_training_residuals() {
    let mut r = rng(21);
    let curves = uniform_matrix(&mut r, 6, 6);
    let ds = FunctionalDataset::curves_only(curves).unwrap();
    let beta = uniform_vec(&mut r, 6);
    let a = sacr_core::fda::design_matrix(&ds);
    let y: Vec<f64> = a.matvec(&beta).iter().map(|v| v + 2.0).collect();
    let fit = fit_ridge(&a, &y, 1e-13).unwrap();
    let model = TrainedModel::new(Fit::Linear(fit), Task::Regression, None);
    let pred = predict(&model, &ds).unwrap().values;
    assert!(max_abs_diff(&pred, &y) < 1e-6);
}
