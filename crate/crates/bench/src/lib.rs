//! Fixtures shared by the benchmarks.

use rand::Rng;
use zipflab_core::model::{derive_stream, EconomyConfig, SnapshotPlan};

/// Balanced economy shrunk to about 2 300 live firms.
pub fn small_balanced() -> EconomyConfig {
    EconomyConfig {
        birth: zipflab_core::BirthLaw {
            kind: zipflab_core::BirthKind::Constant { nu0: 10.0 },
            ..EconomyConfig::default().birth
        },
        horizon: 500.0,
        snapshots: SnapshotPlan::Times(vec![500.0]),
        ..EconomyConfig::default()
    }
}

/// `n` Pareto(m) draws above 1.
pub fn pareto_sample(n: usize, m: f64, seed: u64) -> Vec<f64> {
    let mut rng = derive_stream(seed, 0, "bench");
    (0..n)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / m))
        .collect()
}
