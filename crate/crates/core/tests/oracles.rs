//! Closed forms checked against brute-force sums, integrals and finite differences.

use approx::assert_relative_eq;
use mdpde_core::dpd;
use mdpde_core::family::{Family, Truncation};
use mdpde_core::{asymptotics, ModelSpec};
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

/// Moments by direct summation of the score against `f^order` over `ys`.
fn brute(ys: impl Iterator<Item = f64>, log_f: impl Fn(f64) -> f64, k1: impl Fn(f64) -> f64, order: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for y in ys {
        let w = (order * log_f(y)).exp();
        let k = k1(y);
        out[0] += w;
        out[1] += w * k;
        out[2] += w * k * k;
    }
    out
}

#[test]
fn bernoulli_moments_match_two_point_sums() {
    for &eta in &[-6.0, -1.3, 0.0, 0.4, 2.5, 9.0] {
        for &alpha in &[0.0, 0.1, 0.5, 1.0, 2.0] {
            let g = Family::Bernoulli.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let (p, q) = (1.0 / (1.0 + (-eta).exp()), 1.0 / (1.0 + eta.exp()));
            let lf = |y: f64| if y == 1.0 { p.ln() } else { q.ln() };
            let b = brute([0.0, 1.0].into_iter(), lf, |y| if y == 1.0 { q } else { -p }, 1.0 + alpha);
            assert_relative_eq!(g.integral, b[0], max_relative = 1e-14);
            assert_relative_eq!(g.gamma1, b[1], epsilon = 1e-14);
            assert_relative_eq!(g.gamma11, b[2], max_relative = 1e-14);
        }
    }
}

#[test]
fn logistic_moments_match_exponential_forms() {
    for &eta in &[-2.0f64, -0.5, 0.0, 0.7, 3.0] {
        for &alpha in &[0.0, 0.25, 1.0] {
            let g = Family::Bernoulli.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let e = eta.exp();
            let d = 1.0 + e;
            let gamma1 = e * ((alpha * eta).exp() - 1.0) / d.powf(2.0 + alpha);
            let gamma11 = e * ((alpha * eta).exp() + e) / d.powf(3.0 + alpha);
            assert_relative_eq!(g.gamma1, gamma1, epsilon = 1e-14);
            assert_relative_eq!(g.gamma11, gamma11, max_relative = 1e-13);
        }
    }
}

#[test]
fn binomial_moments_match_direct_sums() {
    let m = 7u32;
    for &eta in &[-1.0f64, 0.3, 2.0] {
        for &alpha in &[0.0, 0.5, 1.0] {
            let g = Family::Binomial.gamma_set(eta, 1.0, m, alpha).unwrap();
            let p = 1.0 / (1.0 + (-eta).exp());
            let mf = m as f64;
            let lf = |y: f64| {
                ln_gamma(mf + 1.0) - ln_gamma(y + 1.0) - ln_gamma(mf - y + 1.0) + y * p.ln() + (mf - y) * (1.0 - p).ln()
            };
            let b = brute((0..=m).map(f64::from), lf, |y| y - mf * p, 1.0 + alpha);
            assert_relative_eq!(g.integral, b[0], max_relative = 1e-12);
            assert_relative_eq!(g.gamma1, b[1], epsilon = 1e-12);
            assert_relative_eq!(g.gamma11, b[2], max_relative = 1e-12);
        }
    }
}

#[test]
fn poisson_moments_match_extreme_truncation() {
    for &eta in &[-3.0f64, 0.0, 1.5, 4.0, 7.0] {
        let mu = eta.exp();
        let upper = (mu + 60.0 * mu.sqrt() + 400.0) as u64;
        for &alpha in &[0.0, 0.1, 0.5, 1.0] {
            let g = Family::Poisson.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let lf = |y: f64| y * eta - mu - ln_gamma(y + 1.0);
            let b = brute((0..=upper).map(|y| y as f64), lf, |y| y - mu, 1.0 + alpha);
            assert_relative_eq!(g.integral, b[0], max_relative = 1e-10);
            assert!((g.gamma1 - b[1]).abs() <= 1e-10 * (1.0 + b[1].abs()), "eta {eta} alpha {alpha}");
            assert_relative_eq!(g.gamma11, b[2], max_relative = 1e-10);
        }
    }
}

#[test]
fn strided_poisson_sum_matches_the_unit_step_sum() {
    let unit = Truncation { max_stride: 1, ..Truncation::default() };
    for &eta in &[3.0f64, 6.0, 9.0, 12.0] {
        for &alpha in &[0.01, 0.25, 1.0] {
            let a = Family::Poisson.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let b = Family::Poisson.gamma_set_with(eta, 1.0, 1, alpha, &unit).unwrap();
            assert_relative_eq!(a.integral, b.integral, max_relative = 1e-12);
            assert_relative_eq!(a.gamma11, b.gamma11, max_relative = 1e-12);
            let scale = b.integral * b.gamma11.sqrt() / b.integral.sqrt();
            assert!((a.gamma1 - b.gamma1).abs() <= 1e-12 * scale, "eta {eta} alpha {alpha}");
        }
    }
}

#[test]
fn poisson_truncation_is_stable_under_doubling() {
    let base = Truncation::default();
    let wide = Truncation { sd_mult: 2.0 * base.sd_mult, pad: 2.0 * base.pad, tail_run: 2 * base.tail_run, ..base };
    for &eta in &[-1.0, 2.0, 6.0, 10.0] {
        let a = Family::Poisson.gamma_set_with(eta, 1.0, 1, 0.5, &base).unwrap();
        let b = Family::Poisson.gamma_set_with(eta, 1.0, 1, 0.5, &wide).unwrap();
        assert_relative_eq!(a.gamma11, b.gamma11, max_relative = 1e-12);
        assert_relative_eq!(a.integral, b.integral, max_relative = 1e-12);
    }
}

#[test]
fn gaussian_moments_match_quadrature() {
    let (eta, phi) = (0.7f64, 2.3f64);
    for &alpha in &[0.0, 0.3, 1.0] {
        let g = Family::Gaussian.gamma_set(eta, phi, 1, alpha).unwrap();
        let sd = phi.sqrt();
        let h = sd * 1e-3;
        let (mut i0, mut i11, mut i22) = (0.0, 0.0, 0.0);
        let mut y = eta - 40.0 * sd;
        while y <= eta + 40.0 * sd {
            let f = Family::Gaussian.density(y, eta, phi, 1).unwrap();
            let w = f.powf(1.0 + alpha) * h;
            let k1 = (y - eta) / phi;
            let k2 = (y - eta).powi(2) / (2.0 * phi * phi) - 1.0 / (2.0 * phi);
            i0 += w;
            i11 += w * k1 * k1;
            i22 += w * k2 * k2;
            y += h;
        }
        assert_relative_eq!(g.integral, i0, max_relative = 1e-8);
        assert_relative_eq!(g.gamma11, i11, max_relative = 1e-8);
        assert_relative_eq!(g.gamma22, i22, max_relative = 1e-8);
        assert!(g.gamma1.abs() < 1e-14);
    }
}

fn logistic_spec(n: usize) -> (ModelSpec, DVector<f64>) {
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => ((i + 1) as f64).sqrt() - 3.0,
        _ => ((i * 7) % 5) as f64 / 5.0 - 0.4,
    });
    let y: Vec<f64> = (0..n).map(|i| f64::from(((i * 13) % 7) < 3)).collect();
    (ModelSpec::new(x, y, Family::Bernoulli).unwrap(), DVector::from_vec(vec![0.2, -0.4, 0.9]))
}

#[test]
fn logistic_equation_forms_agree() {
    let (spec, beta) = logistic_spec(40);
    for &alpha in &[0.0, 0.1, 0.5, 1.0] {
        let a = dpd::logistic_equation_explicit(spec.design(), spec.response(), &beta, alpha);
        let b = dpd::logistic_equation_simplified(spec.design(), spec.response(), &beta, alpha);
        let ef = dpd::estimating_function(&spec, &beta, alpha).unwrap() * spec.n() as f64;
        for j in 0..3 {
            assert!((a[j] - b[j]).abs() < 1e-12, "{alpha}: {} vs {}", a[j], b[j]);
            assert!((a[j] - ef[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn gaussian_location_shortcut_agrees_with_general_equation() {
    let n = 30;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 10.0 });
    let y: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * i as f64 / 10.0 + ((i * 37) % 11) as f64 / 11.0 - 0.5).collect();
    let spec = ModelSpec::new(x, y, Family::Gaussian).unwrap();
    let theta = DVector::from_vec(vec![0.9, 0.35, 0.12]);
    for &alpha in &[0.0, 0.3, 1.0] {
        let short = dpd::gaussian_location_equation(&spec, &theta, alpha).unwrap();
        let full = dpd::estimating_function(&spec, &theta, alpha).unwrap() * n as f64;
        for j in 0..2 {
            assert!((short[j] + full[j]).abs() < 1e-10, "{} vs {}", short[j], full[j]);
        }
    }
}

fn poisson_spec() -> (ModelSpec, DVector<f64>) {
    let n = 25;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { 1.0 / (i + 1) as f64 });
    let y: Vec<f64> = (0..n).map(|i| ((i * 5) % 9) as f64).collect();
    (ModelSpec::new(x, y, Family::Poisson).unwrap(), DVector::from_vec(vec![1.1, 0.6]))
}

fn check_gradient(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) {
    let g = dpd::gradient(spec, theta, alpha).unwrap();
    for j in 0..theta.len() {
        let h = 1e-5 * (1.0 + theta[j].abs());
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[j] += h;
        dn[j] -= h;
        let fd = (dpd::objective(spec, &up, alpha).unwrap() - dpd::objective(spec, &dn, alpha).unwrap()) / (2.0 * h);
        let scale = g[j].abs().max(1e-3);
        assert!((fd - g[j]).abs() / scale < 1e-5, "alpha {alpha} coord {j}: fd {fd} analytic {}", g[j]);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let (ls, lb) = logistic_spec(40);
    let (ps, pb) = poisson_spec();
    let n = 20;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
    let y: Vec<f64> = (0..n).map(|i| 0.5 * i as f64 + ((i * 3) % 4) as f64 - 1.5).collect();
    let gs = ModelSpec::new(x, y, Family::Gaussian).unwrap();
    let gt = DVector::from_vec(vec![0.1, 0.45, 1.7]);
    let bx = DMatrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 4.0 });
    let bs = ModelSpec::binomial(bx, vec![1.0, 2.0, 2.0, 4.0, 3.0, 5.0, 6.0, 6.0], vec![6; 8]).unwrap();
    let bt = DVector::from_vec(vec![-1.0, 0.8]);
    for &alpha in &[0.0, 0.1, 0.5, 1.0] {
        check_gradient(&ls, &lb, alpha);
        check_gradient(&ps, &pb, alpha);
        check_gradient(&gs, &gt, alpha);
        check_gradient(&bs, &bt, alpha);
    }
}

#[test]
fn score_identities_hold_at_zero() {
    let (ps, pb) = poisson_spec();
    let (ls, lb) = logistic_spec(30);
    for (spec, theta) in [(&ps, &pb), (&ls, &lb)] {
        let (psi, omega) = asymptotics::psi_omega(spec, theta, 0.0).unwrap();
        assert!((&psi - &omega).amax() < 1e-8);
    }
    for &eta in &[-2.0, 0.0, 3.0] {
        for fam in [Family::Poisson, Family::Bernoulli, Family::Gaussian] {
            let g = fam.gamma_set(eta, 1.5, 1, 0.0).unwrap();
            assert!(g.gamma1.abs() < 1e-8 && g.gamma2.abs() < 1e-8, "{fam:?}");
        }
    }
}

#[test]
fn logistic_sandwich_at_zero_predictor() {
    let n = 12;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 - 5.5 });
    let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let spec = ModelSpec::new(x.clone(), y, Family::Bernoulli).unwrap();
    let zero = DVector::zeros(2);
    let (psi, omega) = asymptotics::psi_omega(&spec, &zero, 1.0).unwrap();
    let xtx = x.transpose() * &x / n as f64;
    assert!((&psi - &xtx / 8.0).amax() < 1e-14);
    assert!((&omega - &xtx / 16.0).amax() < 1e-14);
}

#[test]
fn objective_at_zero_is_negative_mean_log_likelihood() {
    let (ps, pb) = poisson_spec();
    let eta = ps.eta(&pb);
    let ll: f64 = ps.response().iter().zip(eta.iter()).map(|(&y, &e)| y * e - e.exp() - ln_gamma(y + 1.0)).sum();
    let h = dpd::objective(&ps, &pb, 0.0).unwrap();
    assert_relative_eq!(h, -ll / ps.n() as f64, max_relative = 1e-13);
}

#[test]
fn poisson_mle_sandwich_is_inverse_fisher_information() {
    let (ps, pb) = poisson_spec();
    let s = asymptotics::sandwich(&ps, &pb, 0.0).unwrap();
    let mu = ps.eta(&pb).map(f64::exp);
    let x = ps.design();
    let fisher = x.transpose() * DMatrix::from_diagonal(&mu) * x / ps.n() as f64;
    let inv = fisher.try_inverse().unwrap();
    assert!((&s.av - &inv).amax() < 1e-9 * inv.amax());
}
