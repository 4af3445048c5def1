mod common;

use zipflab_core::exits::{first_passage_laplace, first_passage_pdf, hitting_probability};
use zipflab_core::model::*;
use zipflab_core::sim::run;
use zipflab_core::LifespanCause;

#[test]
fn first_passage_pdf_integrates_to_hitting_probability() {
    for (delta, a, sigma) in [
        (1.0, -0.5, 0.5),
        (2.0, 0.1, 0.4),
        (0.5, 0.0, 0.3),
        (3.0, -0.02, 0.2),
    ] {
        let pdf = |t: f64| first_passage_pdf(delta, a, sigma, t);
        // Split the range so the adaptive rule sees the peak.
        let mut total = 0.0;
        let mut lo = 0.0;
        for hi in [0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7] {
            total += common::integrate(&pdf, lo, hi, 1e-10);
            lo = hi;
        }
        let target = hitting_probability(delta, a, sigma);
        // The a = 0 law has a t^{-1/2} tail: add its closed-form remainder.
        if a == 0.0 {
            total += 2.0 * delta / (sigma * (2.0 * std::f64::consts::PI * lo).sqrt());
        }
        assert!(
            (total - target).abs() < 1e-4,
            "({delta}, {a}, {sigma}): {total} vs {target}"
        );
    }
}

#[test]
fn laplace_transform_matches_quadrature() {
    let (delta, a, sigma, h) = (1.2, -0.1, 0.3, 0.05);
    let edges = [0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, 2000.0];
    let q = common::integrate_panels(
        &|t: f64| (-h * t).exp() * first_passage_pdf(delta, a, sigma, t),
        &edges,
        1e-12,
    );
    assert!((q - first_passage_laplace(delta, a, sigma, h)).abs() < 1e-8);
}

#[test]
fn competing_risks_split() {
    // Fraction of firms that die suddenly before being absorbed:
    // 1 - E[e^{-hT}] with T the first-passage time.
    let (delta, a, sigma, h) = (1.0_f64, -0.2, 0.4, 0.1);
    let n = 200_000;
    let config = EconomyConfig {
        diffusion: DiffusionSpec::GBM(GibratParams::from_log_drift(a, sigma)),
        birth: BirthLaw {
            kind: BirthKind::Coupled { kappa: 0.0 },
            entry_size_law: EntrySizeLaw::PointMass { s0: delta.exp() },
        },
        exit: ExitLaw {
            s_min: Some(1.0),
            hazard: Hazard::Constant { h },
        },
        horizon: 200.0,
        dt: 0.01,
        seed: 31,
        initial_sizes: vec![delta.exp(); n],
        snapshots: SnapshotPlan::Times(vec![]),
        ..EconomyConfig::default()
    };
    let r = run(&config).unwrap();
    let sudden = r
        .lifespans
        .iter()
        .filter(|l| l.cause == LifespanCause::SuddenDeath)
        .count() as f64
        / n as f64;

    // Ten-point oracle: the survival integral h * ∫ e^{-ht} (1 - F(t)) dt on
    // ten panels of an adaptive rule.
    let survival = |t: f64| {
        1.0 - common::integrate(
            &|u: f64| first_passage_pdf(delta, a, sigma, u),
            0.0,
            t,
            1e-10,
        )
    };
    let edges: Vec<f64> = (0..=10)
        .map(|i| 200.0 * (i as f64 / 10.0).powi(2))
        .collect();
    let oracle: f64 = edges
        .windows(2)
        .map(|w| common::integrate(&|t: f64| h * (-h * t).exp() * survival(t), w[0], w[1], 1e-8))
        .sum();
    assert!((oracle - (1.0 - first_passage_laplace(delta, a, sigma, h))).abs() < 1e-6);
    assert!(
        (sudden - oracle).abs() / oracle < 0.01,
        "{sudden} vs {oracle}"
    );
}

#[test]
fn absorbed_firms_exit_exactly_at_the_barrier() {
    let config = EconomyConfig {
        exit: ExitLaw {
            s_min: Some(2.0),
            hazard: Hazard::None,
        },
        birth: BirthLaw {
            kind: BirthKind::Constant { nu0: 20.0 },
            entry_size_law: EntrySizeLaw::PointMass { s0: 3.0 },
        },
        horizon: 50.0,
        dt: 0.5,
        ..EconomyConfig::default()
    };
    let r = run(&config).unwrap();
    assert!(r.final_population.sizes().iter().all(|s| *s > 2.0));
    let censored = r
        .lifespans
        .iter()
        .filter(|l| l.cause == LifespanCause::Censored)
        .count();
    assert_eq!(censored, r.final_population.live_count());
    assert!(r.lifespans.iter().all(|l| l.duration >= 0.0));
}
