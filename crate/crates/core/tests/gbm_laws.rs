mod common;

use rand::Rng;
use rand_distr::StandardNormal;
use zipflab_core::gbm::{gbm_step, lognormal_pdf, quantile_curve, simulate_path};
use zipflab_core::model::{derive_stream, DiffusionSpec, GibratParams};
use zipflab_core::tail::{ks_two_sample, ks_two_sample_critical};

const PATHS: usize = 100_000;

#[test]
fn composed_steps_match_one_long_step() {
    let p = GibratParams::new(0.03, 0.25);
    let (dt, n) = (0.1, 10);
    let mut rng = derive_stream(11, 0, "self-similar");
    let fine: Vec<f64> = (0..PATHS)
        .map(|_| (0..n).fold(2.0, |s, _| gbm_step(s, p, dt, rng.sample(StandardNormal))))
        .collect();
    let coarse: Vec<f64> = (0..PATHS)
        .map(|_| gbm_step(2.0, p, n as f64 * dt, rng.sample(StandardNormal)))
        .collect();
    let d = ks_two_sample(&fine, &coarse);
    assert!(d < ks_two_sample_critical(PATHS, PATHS, 0.01), "KS = {d}");
}

#[test]
fn lognormal_pdf_normalized_with_right_mean() {
    let p = GibratParams::new(0.05, 0.3);
    let (t, s0) = (2.0, 1.5);
    let pdf = |s: f64| lognormal_pdf(s, t, s0, p);
    // Integrate in log space, where the integrand is a smooth bump.
    let mass = common::integrate(&|x: f64| pdf(x.exp()) * x.exp(), -10.0, 10.0, 1e-12);
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let mean = common::integrate(&|x: f64| pdf(x.exp()) * (2.0 * x).exp(), -10.0, 10.0, 1e-12);
    let expected = s0 * (p.mu * t).exp();
    assert!(
        (mean - expected).abs() / expected < 1e-4,
        "{mean} vs {expected}"
    );
}

#[test]
fn quantile_curve_coverage() {
    let p = GibratParams::new(-0.01, 0.2);
    let spec = DiffusionSpec::GBM(p);
    let (dt, steps, s0) = (0.25, 12, 1.0);
    let t = dt * steps as f64;
    let mut rng = derive_stream(12, 0, "quantile");
    let ends: Vec<f64> = (0..PATHS)
        .map(|_| {
            *simulate_path(s0, &spec, dt, steps, &mut rng)
                .unwrap()
                .values
                .last()
                .unwrap()
        })
        .collect();
    for q in [0.05, 0.5, 0.9] {
        let curve = quantile_curve(q, t, s0, p).unwrap();
        let frac = ends.iter().filter(|s| **s < curve).count() as f64 / PATHS as f64;
        let tol = 3.0 * (q * (1.0 - q) / PATHS as f64).sqrt();
        assert!((frac - q).abs() < tol, "q = {q}: {frac}");
    }
}

#[test]
fn gbm_paths_positive_and_times_increasing() {
    let mut rng = derive_stream(13, 0, "paths");
    let spec = DiffusionSpec::GBM(GibratParams::new(-2.0, 3.0));
    let path = simulate_path(1.0, &spec, 0.05, 200, &mut rng).unwrap();
    assert!(path.values.iter().all(|v| *v > 0.0));
    assert!(path.times.windows(2).all(|w| w[1] > w[0]));
}
