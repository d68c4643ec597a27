use mdpde_core::robustness::{self, GridPolicy, Influence};
use mdpde_core::sim::{Case, Scenario, SimFamily};
use mdpde_core::{Execution, Family, FitResult, ModelSpec};
use nalgebra::{DMatrix, DVector};

fn model_one() -> (ModelSpec, DVector<f64>) {
    let s = Scenario::published(SimFamily::Poisson, Case::I, 50);
    (s.truth_model().unwrap(), DVector::from_column_slice(&s.beta_true))
}

fn norms(spec: &ModelSpec, fit: &FitResult, i0: usize, upper: u64) -> Vec<f64> {
    let inf = Influence::new(spec, fit, i0).unwrap();
    (0..=upper).map(|t| inf.at(t as f64).unwrap().norm()).collect()
}

/// Norms of `IF(t) - IF(inf)`: the contamination-dependent part, without the
/// constant centring term that survives as `t` grows.
fn excess_norms(spec: &ModelSpec, fit: &FitResult, i0: usize, upper: u64) -> Vec<f64> {
    let inf = Influence::new(spec, fit, i0).unwrap();
    let limit = inf.at(1e4).unwrap();
    (0..=upper).map(|t| (inf.at(t as f64).unwrap() - &limit).norm()).collect()
}

#[test]
fn poisson_influence_is_bounded_only_for_positive_alpha() {
    let (spec, beta) = model_one();
    for i0 in [1, 20, 50] {
        let mu = spec.row(i0 - 1).dot(&beta).exp();
        let upper = (10.0 * mu + 100.0).ceil() as u64;
        for alpha in [0.1, 0.25, 0.5, 1.0] {
            let fit = FitResult::at_parameters(&spec, &beta, alpha).unwrap();
            let v = excess_norms(&spec, &fit, i0, upper);
            let (arg, max) = v.iter().enumerate().fold((0, 0.0f64), |a, (i, &x)| if x > a.1 { (i, x) } else { a });
            assert!(arg < v.len() - 1, "i0 {i0} alpha {alpha}: max at {arg}");
            assert!(v[v.len() - 1] < 1e-3 * max, "i0 {i0} alpha {alpha}");
            let raw = norms(&spec, &fit, i0, 4 * upper);
            let cap = raw.iter().cloned().fold(0.0, f64::max);
            assert!(raw[raw.len() - 1] <= cap);
        }
        let fit = FitResult::at_parameters(&spec, &beta, 0.0).unwrap();
        let v = norms(&spec, &fit, i0, upper);
        let interior = v[..v.len() - 1].iter().cloned().fold(0.0, f64::max);
        assert!(v[v.len() - 1] > interior);
    }
}

#[test]
fn influence_settles_at_the_centring_term() {
    let (spec, beta) = model_one();
    for alpha in [0.1, 0.5, 1.0] {
        let fit = FitResult::at_parameters(&spec, &beta, alpha).unwrap();
        let inf = Influence::new(&spec, &fit, 1).unwrap();
        let far = inf.at(1e4).unwrap();
        let g = Family::Poisson.gamma_set(spec.row(0).dot(&beta), 1.0, 1, alpha).unwrap();
        let (psi, _) = mdpde_core::asymptotics::psi_omega(&spec, &beta, alpha).unwrap();
        let expected = -(psi.try_inverse().unwrap() * spec.row(0)) * (g.gamma1 / spec.n() as f64);
        assert!((&far - &expected).amax() < 1e-12 * expected.amax());
        assert!(far.amax() > 0.0);
    }
}

#[test]
fn model_one_redescends() {
    let (spec, beta) = model_one();
    let fit = FitResult::at_parameters(&spec, &beta, 0.5).unwrap();
    let v = excess_norms(&spec, &fit, 1, 60);
    let peak = v.iter().cloned().fold(0.0, f64::max);
    assert!(v[60] < 1e-6 * peak, "{} vs peak {peak}", v[60]);
}

#[test]
fn mle_sensitivities_are_infinite_for_counts() {
    let (spec, beta) = model_one();
    let fit = FitResult::at_parameters(&spec, &beta, 0.0).unwrap();
    let (ges, sss) = robustness::sensitivities(&spec, &fit, 1, &GridPolicy::Default).unwrap();
    assert!(ges.is_infinite() && sss.is_infinite());
}

#[test]
fn binary_sensitivities_are_finite_at_zero() {
    let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 3.0 - 1.5 });
    let y: Vec<f64> = (0..10).map(|i| f64::from(i % 3 != 1)).collect();
    let spec = ModelSpec::new(x, y, Family::Bernoulli).unwrap();
    let beta = DVector::from_vec(vec![0.2, 0.5]);
    for alpha in [0.0, 0.5] {
        let fit = FitResult::at_parameters(&spec, &beta, alpha).unwrap();
        let (ges, sss) = robustness::sensitivities(&spec, &fit, 4, &GridPolicy::Default).unwrap();
        assert!(ges.is_finite() && ges > 0.0);
        assert!(sss.is_finite() && sss > 0.0);
    }
}

#[test]
fn sensitivities_stable_when_grid_doubles() {
    let (spec, beta) = model_one();
    let fit = FitResult::at_parameters(&spec, &beta, 0.5).unwrap();
    for i0 in [1, 20] {
        let inf = Influence::new(&spec, &fit, i0).unwrap();
        let hi = *inf.grid(&GridPolicy::Default).unwrap().last().unwrap() as u64;
        let a = robustness::sensitivities(&spec, &fit, i0, &GridPolicy::UpTo(hi)).unwrap();
        let b = robustness::sensitivities(&spec, &fit, i0, &GridPolicy::UpTo(2 * hi)).unwrap();
        assert!((a.0 - b.0).abs() <= 1e-6 && (a.1 - b.1).abs() <= 1e-6, "{a:?} {b:?}");
    }
}

#[test]
fn bracket_centres_against_the_model() {
    let (spec, beta) = model_one();
    let eta = spec.row(4).dot(&beta);
    for alpha in [0.0, 0.3, 1.0] {
        let g = Family::Poisson.gamma_set(eta, 1.0, 1, alpha).unwrap();
        let mut s = 0.0;
        for t in 0..400 {
            let t = f64::from(t);
            let f = Family::Poisson.density(t, eta, 1.0, 1).unwrap();
            s += f.powf(1.0 + alpha) * Family::Poisson.k1(t, eta, 1.0, 1);
        }
        assert!((s - g.gamma1).abs() < 1e-12 * (1.0 + g.gamma1.abs()));
    }
}

#[test]
fn export_round_trips_exactly() {
    let (spec, beta) = model_one();
    let fits: Vec<FitResult> =
        [0.0, 0.1, 0.25, 0.5, 1.0].iter().map(|&a| FitResult::at_parameters(&spec, &beta, a).unwrap()).collect();
    let mut buf = Vec::new();
    robustness::export(&mut buf, &spec, &fits, &[1, 20], &GridPolicy::UpTo(60), Execution::Parallel).unwrap();
    let back = robustness::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 5 * 2 * 61 * 2);
    let mut direct = Vec::new();
    for f in &fits {
        for i0 in [1, 20] {
            let inf = Influence::new(&spec, f, i0).unwrap();
            direct.push(inf.report(&(0..=60).map(f64::from).collect::<Vec<_>>(), Execution::Sequential).unwrap());
        }
    }
    let rows = robustness::records(&spec, &direct);
    assert_eq!(back, rows);
    for (a, b) in back.iter().zip(&rows) {
        assert_eq!(a.if_value.to_bits(), b.if_value.to_bits());
    }
}

#[test]
fn no_fits_export_only_a_header() {
    let (spec, _) = model_one();
    let mut buf = Vec::new();
    robustness::export(&mut buf, &spec, &[], &[1], &GridPolicy::Default, Execution::Sequential).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "alpha,i0,t,coef,if_value\n");
    assert!(robustness::read_csv(&b"alpha,i0,t,coef,if_value\n"[..]).unwrap().is_empty());
}

#[test]
fn out_of_range_direction_is_rejected() {
    let (spec, beta) = model_one();
    let fit = FitResult::at_parameters(&spec, &beta, 0.5).unwrap();
    assert!(Influence::new(&spec, &fit, 0).is_err());
    assert!(Influence::new(&spec, &fit, 51).is_err());
}
