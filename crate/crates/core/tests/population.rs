use zipflab_core::analytics::tail_exponent;
use zipflab_core::model::*;
use zipflab_core::sim::{run, run_ensemble, run_replica};
use zipflab_core::tail::{ks_two_sample, ks_two_sample_critical};
use zipflab_core::{MAKernel, MergerKind, SpinoffKind};

fn busy_config() -> EconomyConfig {
    EconomyConfig {
        birth: BirthLaw {
            kind: BirthKind::Constant { nu0: 20.0 },
            entry_size_law: EntrySizeLaw::LogNormal {
                median: 20.0,
                log_sd: 0.3,
            },
        },
        exit: ExitLaw {
            s_min: Some(1.0),
            hazard: Hazard::Constant { h: 0.01 },
        },
        ma: MAKernel {
            merger_kind: MergerKind::Constant { rate: 1e-4 },
            spinoff_kind: SpinoffKind::Constant {
                rate: 0.005,
                u_min: 0.1,
                u_max: 0.3,
            },
        },
        horizon: 200.0,
        dt: 0.5,
        replicas: 4,
        ..EconomyConfig::default()
    }
}

#[test]
fn accounting_identity_with_every_channel() {
    let r = run(&busy_config()).unwrap();
    let mut live = r.initial_live as i64;
    let (mut merged, mut spun) = (0, 0);
    for f in &r.flow_series {
        live += f.births as i64
            - f.absorptions as i64
            - f.sudden_deaths as i64
            - (f.mergers as i64 - f.spinoffs as i64);
        assert_eq!(live, f.live as i64, "t = {}", f.t);
        merged += f.mergers;
        spun += f.spinoffs;
    }
    assert!(merged > 0 && spun > 0);
    let p = &r.final_population;
    assert!((p.total_value - p.recompute_total()).abs() <= 1e-9 * p.total_value);
    assert!(p
        .firms
        .iter()
        .all(|f| f.size > 0.0 && (f.age - (p.time - f.birth_time)).abs() < 1e-6));
    let ids: std::collections::HashSet<u64> = p.firms.iter().map(|f| f.id).collect();
    assert_eq!(ids.len(), p.firms.len());
}

#[test]
fn ensemble_is_schedule_independent() {
    let c = busy_config();
    let all = run_ensemble(&c).unwrap();
    for (i, r) in all.iter().enumerate() {
        assert_eq!(r.replica, i as u64);
        assert_eq!(*r, run_replica(&c, i as u64).unwrap());
    }
    assert_ne!(all[0].final_sizes(), all[1].final_sizes());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    assert_eq!(pool.install(|| run_ensemble(&c)).unwrap(), all);
}

#[test]
fn growing_frame_is_stationary_under_generalized_balance() {
    // mu = h + d gives m = 1 in the growing frame.
    let (sigma, h, d) = (0.2, 0.01, 0.01);
    let mu = h + d;
    let a = mu - 0.5 * sigma * sigma;
    assert!((tail_exponent(a, sigma, h, d).unwrap() - 1.0).abs() < 1e-12);
    let horizon = 600.0;
    let config = EconomyConfig {
        diffusion: DiffusionSpec::GBM(GibratParams::new(mu, sigma)),
        birth: BirthLaw {
            kind: BirthKind::Exponential { nu0: 2.0, d },
            entry_size_law: EntrySizeLaw::PointMass { s0: 10.0 },
        },
        exit: ExitLaw {
            s_min: Some(1.0),
            hazard: Hazard::Constant { h },
        },
        horizon,
        dt: 0.5,
        seed: 51,
        snapshots: SnapshotPlan::Times(vec![0.6 * horizon, horizon]),
        ..EconomyConfig::default()
    };
    let r = run(&config).unwrap();
    let (early, late) = (&r.snapshots[0].sizes, &r.snapshots[1].sizes);
    assert!(early.len() > 1000 && late.len() > early.len());
    let dks = ks_two_sample(early, late);
    assert!(
        dks < ks_two_sample_critical(early.len(), late.len(), 0.05),
        "KS = {dks}"
    );
}

#[test]
fn custom_and_omega_kinds_run() {
    for diffusion in [
        DiffusionSpec::Custom {
            drift: SizeFn::Constant { value: 0.1 },
            vol: SizeFn::Hyperbolic {
                scale: 0.2,
                crossover: 5.0,
            },
        },
        DiffusionSpec::ConstantVolatility {
            drift: 0.0,
            vol: 3.0,
        },
        DiffusionSpec::OmegaTransform {
            base: GibratParams::new(0.0, 0.2),
            omega: Omega::ShiftedExp {
                floor: 0.5,
                scale: 1.0,
            },
        },
    ] {
        let config = EconomyConfig {
            diffusion,
            horizon: 100.0,
            ..busy_config()
        };
        let r = run(&config).unwrap();
        assert!(r
            .final_population
            .firms
            .iter()
            .all(|f| f.size > 0.0 && f.size.is_finite()));
        assert_eq!(r, run(&config).unwrap());
    }
}
