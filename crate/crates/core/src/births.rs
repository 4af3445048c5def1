//! Firm-birth instants as a Poisson point process and entry sizes.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{BirthKind, BirthLaw, EntrySizeLaw, Population};

/// Default cap on the expected number of births over one horizon.
pub const DEFAULT_BIRTH_CAP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BirthSchedule {
    pub instants: Vec<f64>,
    pub entry_sizes: Vec<f64>,
}

impl BirthSchedule {
    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// Writes `t_birth,s_entry` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_birth,s_entry")?;
        for (t, s) in self.instants.iter().zip(&self.entry_sizes) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

impl EntrySizeLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntrySizeLaw::PointMass { s0 } => s0,
            EntrySizeLaw::LogNormal { median, log_sd } => {
                let z: f64 = rng.sample(StandardNormal);
                median * (log_sd * z).exp()
            }
        }
    }
}

/// Birth intensity at time `t` for the schedule-based kinds.
pub fn intensity(kind: &BirthKind, t: f64) -> f64 {
    match *kind {
        BirthKind::Constant { nu0 } => nu0,
        BirthKind::Exponential { nu0, d } => nu0 * (d * t).exp(),
        BirthKind::Coupled { .. } => f64::NAN,
    }
}

/// Integral of the intensity over `[t0, t1]`.
pub fn expected_births(kind: &BirthKind, t0: f64, t1: f64) -> f64 {
    match *kind {
        BirthKind::Constant { nu0 } => nu0 * (t1 - t0),
        BirthKind::Exponential { nu0, d } => {
            if d == 0.0 {
                nu0 * (t1 - t0)
            } else {
                nu0 * ((d * t1).exp() - (d * t0).exp()) / d
            }
        }
        BirthKind::Coupled { .. } => f64::NAN,
    }
}

/// Samples birth instants on `[0, horizon]` by thinning against the
/// maximal intensity, then draws an entry size for each birth.
pub fn sample_births<R: Rng + ?Sized>(
    law: &BirthLaw,
    horizon: f64,
    cap: f64,
    rng: &mut R,
) -> Result<BirthSchedule> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be > 0"
        )));
    }
    if matches!(law.kind, BirthKind::Coupled { .. }) {
        return Err(Error::Unsupported(
            "coupled births depend on the population and are drawn per step".into(),
        ));
    }
    let peak = intensity(&law.kind, 0.0).max(intensity(&law.kind, horizon));
    if !(peak * horizon <= cap) {
        return Err(Error::IntensityOverflow {
            expected: peak * horizon,
            cap,
        });
    }
    let mut schedule = BirthSchedule::default();
    if peak <= 0.0 {
        return Ok(schedule);
    }
    let gap = Exp::new(peak).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            break;
        }
        let accept = intensity(&law.kind, t) / peak;
        if accept >= 1.0 || rng.random::<f64>() < accept {
            let mut at = t;
            if let Some(&last) = schedule.instants.last() {
                if at <= last {
                    at = last.next_up();
                }
            }
            schedule.instants.push(at);
        }
    }
    schedule.entry_sizes = schedule
        .instants
        .iter()
        .map(|_| law.entry_size_law.sample(rng))
        .collect();
    Ok(schedule)
}

/// Birth rate `kappa W(t)` of the coupled model.
pub fn coupled_intensity(population: &Population, kappa: f64) -> f64 {
    kappa * population.total_value
}
