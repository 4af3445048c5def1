//! Firm exits: absorption at the minimum asset level and sudden deaths.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbm::std_normal_cdf;
use crate::model::{DiffusionSpec, ExitCause, ExitLaw, Hazard, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifespanCause {
    Absorbed,
    SuddenDeath,
    Merged,
    Censored,
}

impl fmt::Display for LifespanCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LifespanCause::Absorbed => "Absorbed",
            LifespanCause::SuddenDeath => "SuddenDeath",
            LifespanCause::Merged => "Merged",
            LifespanCause::Censored => "Censored",
        };
        f.write_str(s)
    }
}

impl From<ExitCause> for LifespanCause {
    fn from(c: ExitCause) -> Self {
        match c {
            ExitCause::Absorbed => LifespanCause::Absorbed,
            ExitCause::SuddenDeath => LifespanCause::SuddenDeath,
            ExitCause::Merged => LifespanCause::Merged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanRecord {
    pub firm_id: u64,
    pub duration: f64,
    pub cause: LifespanCause,
}

/// Writes `firm_id,duration,cause` CSV.
pub fn write_lifespans_csv<W: Write>(records: &[LifespanRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "firm_id,duration,cause")?;
    for r in records {
        writeln!(w, "{},{},{}", r.firm_id, r.duration, r.cause)?;
    }
    Ok(())
}

/// Density of the first time a Brownian motion with drift `a` and
/// volatility `sigma`, started at 0, reaches `-delta`.
///
/// Defective when `a > 0`: it integrates to [`hitting_probability`].
pub fn first_passage_pdf(delta: f64, a: f64, sigma: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let dev = delta + a * t;
    delta / (sigma * (2.0 * PI * t.powi(3)).sqrt())
        * (-(dev * dev) / (2.0 * sigma * sigma * t)).exp()
}

/// `Pr{tau <= t}` for the same passage time.
pub fn first_passage_cdf(delta: f64, a: f64, sigma: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let sd = sigma * t.sqrt();
    let first = std_normal_cdf(-(delta + a * t) / sd);
    let weight = (-2.0 * a * delta / (sigma * sigma)).exp();
    let second = if weight.is_finite() {
        weight * std_normal_cdf((a * t - delta) / sd)
    } else {
        0.0
    };
    (first + second).min(1.0)
}

/// Probability that the barrier `delta` below the start is ever reached.
pub fn hitting_probability(delta: f64, a: f64, sigma: f64) -> f64 {
    if a <= 0.0 {
        1.0
    } else {
        (-2.0 * a * delta / (sigma * sigma)).exp()
    }
}

/// `E[exp(-h tau)]`, the probability of absorption before an independent
/// exponential clock of rate `h` rings.
pub fn first_passage_laplace(delta: f64, a: f64, sigma: f64, h: f64) -> f64 {
    (-delta * (a + (a * a + 2.0 * sigma * sigma * h).sqrt()) / (sigma * sigma)).exp()
}

/// Expected absorption time `delta / |a|` for a downward drift.
pub fn mean_lifespan(delta: f64, a: f64, _sigma: f64) -> Result<f64> {
    if a >= 0.0 {
        return Err(Error::InfiniteMean(a));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} must be >= 0"
        )));
    }
    Ok(delta / -a)
}

/// Probability that a Brownian bridge with volatility `sigma` over `dt`
/// between `x0` and `x1` (both above `barrier`) touches the barrier.
#[inline]
pub fn bridge_crossing_probability(x0: f64, x1: f64, barrier: f64, sigma: f64, dt: f64) -> f64 {
    let d0 = x0 - barrier;
    let d1 = x1 - barrier;
    if d0 <= 0.0 || d1 <= 0.0 {
        return 1.0;
    }
    (-2.0 * d0 * d1 / (sigma * sigma * dt)).exp()
}

/// Samples a sudden-death time on `(0, horizon]` by thinning a Poisson
/// clock of rate `H_max` against the hazard along the firm's path.
///
/// `context(t)` returns the firm's `(size, age)` at time `t` after its birth.
pub fn sample_sudden_death<R, F>(
    hazard: &Hazard,
    horizon: f64,
    mut context: F,
    rng: &mut R,
) -> Option<f64>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> (f64, f64),
{
    let h_max = hazard.bound();
    if !(h_max > 0.0) {
        return None;
    }
    let clock = Exp::new(h_max).expect("positive rate");
    if let Hazard::Constant { .. } = hazard {
        let t = clock.sample(rng);
        return (t <= horizon).then_some(t);
    }
    let mut t = 0.0;
    loop {
        t += clock.sample(rng);
        if t > horizon {
            return None;
        }
        let (size, age) = context(t);
        if rng.random::<f64>() * h_max < hazard.rate(size, age) {
            return Some(t);
        }
    }
}

/// Counts of exits applied in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExitTally {
    pub absorbed: u64,
    pub sudden_deaths: u64,
}

/// Applies both exit channels to a population whose firms were just
/// advanced from `prev_size` to `size` over `dt`, ending at `population.time`.
///
/// Absorbed firms leave with size exactly `s_min`. For GBM and omega kinds
/// an excursion below the barrier within the step is detected with the
/// Brownian-bridge crossing probability. Removed firms are appended to
/// `records`.
pub fn apply_exits<R: Rng + ?Sized>(
    population: &mut Population,
    dt: f64,
    exit: &ExitLaw,
    diffusion: &DiffusionSpec,
    rng: &mut R,
    records: &mut Vec<LifespanRecord>,
) -> ExitTally {
    let mut tally = ExitTally::default();
    let now = population.time;
    let barrier = exit.s_min.filter(|s| *s > 0.0);
    let latent_barrier = barrier.and_then(|b| diffusion.gaussian_coordinate(b).map(|(x, _)| x));
    let constant_kill = exit.hazard.constant_rate().map(|h| -(-h * dt).exp_m1());

    for firm in population.firms.iter_mut() {
        if let Some(level) = barrier {
            let mut absorbed = firm.size <= level;
            if !absorbed {
                if let (Some(xb), Some((x0, sigma)), Some((x1, _))) = (
                    latent_barrier,
                    diffusion.gaussian_coordinate(firm.prev_size),
                    diffusion.gaussian_coordinate(firm.size),
                ) {
                    let p = bridge_crossing_probability(x0, x1, xb, sigma, dt);
                    // Crossing chances below 1e-18 are skipped without drawing.
                    absorbed = p > 1e-18 && rng.random::<f64>() < p;
                }
            }
            if absorbed {
                firm.size = level;
                firm.alive = false;
                firm.exit_cause = Some(ExitCause::Absorbed);
                tally.absorbed += 1;
                continue;
            }
        }
        let p_death = match constant_kill {
            Some(p) => p,
            None => -(-exit.hazard.rate(firm.size, firm.age) * dt).exp_m1(),
        };
        if p_death > 0.0 && rng.random::<f64>() < p_death {
            firm.alive = false;
            firm.exit_cause = Some(ExitCause::SuddenDeath);
            tally.sudden_deaths += 1;
        }
    }

    if tally.absorbed + tally.sudden_deaths > 0 {
        population.firms.retain(|f| {
            if !f.alive {
                records.push(LifespanRecord {
                    firm_id: f.id,
                    duration: now - f.birth_time,
                    cause: f
                        .exit_cause
                        .map(Into::into)
                        .unwrap_or(LifespanCause::Censored),
                });
            }
            f.alive
        });
        population.refresh_total();
    }
    population.absorbed_count += tally.absorbed;
    population.sudden_death_count += tally.sudden_deaths;
    tally
}
