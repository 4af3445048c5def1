//! Monte Carlo event kernels for mergers (coagulation) and spin-offs
//! (fragmentation).

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::exits::{LifespanCause, LifespanRecord};
use crate::model::{ExitCause, Firm, Population, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub enum MergerKind {
    #[default]
    Off,
    /// Every pair merges at `rate` per year.
    Constant { rate: f64 },
    /// Pair `(i, j)` merges at `rate * S_i * S_j / v_scale^2`.
    Multiplicative { rate: f64, v_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub enum SpinoffKind {
    #[default]
    Off,
    /// Each firm splits at `rate` per year; the retained fraction is uniform
    /// on `(u_min, u_max)`.
    Constant { rate: f64, u_min: f64, u_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MAKernel {
    #[serde(default)]
    pub merger_kind: MergerKind,
    #[serde(default)]
    pub spinoff_kind: SpinoffKind,
}

impl MAKernel {
    pub fn is_off(&self) -> bool {
        self.merger_kind == MergerKind::Off && self.spinoff_kind == SpinoffKind::Off
    }

    pub(crate) fn check(&self, out: &mut Vec<Violation>) {
        match self.merger_kind {
            MergerKind::Off => {}
            MergerKind::Constant { rate } => {
                if !(rate >= 0.0 && rate.is_finite()) {
                    out.push(Violation::new("ma.merger_kind.rate", "rates must be >= 0"));
                }
            }
            MergerKind::Multiplicative { rate, v_scale } => {
                if !(rate >= 0.0 && rate.is_finite()) {
                    out.push(Violation::new("ma.merger_kind.rate", "rates must be >= 0"));
                }
                if !(v_scale > 0.0 && v_scale.is_finite()) {
                    out.push(Violation::new(
                        "ma.merger_kind.v_scale",
                        "v_scale must be > 0",
                    ));
                }
            }
        }
        if let SpinoffKind::Constant { rate, u_min, u_max } = self.spinoff_kind {
            if !(rate >= 0.0 && rate.is_finite()) {
                out.push(Violation::new("ma.spinoff_kind.rate", "rates must be >= 0"));
            }
            if !(u_min > 0.0 && u_min <= u_max && u_max < 1.0) {
                out.push(Violation::new(
                    "ma.spinoff_kind",
                    "fractions must satisfy 0 < u_min <= u_max < 1",
                ));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaEventKind {
    Merger,
    Spinoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaEvent {
    pub t: f64,
    pub kind: MaEventKind,
    pub parent_ids: Vec<u64>,
    pub child_ids: Vec<u64>,
    pub sizes: Vec<f64>,
}

/// Writes the event log as `t,kind,parent_ids,child_ids,sizes` CSV with
/// `;`-separated lists.
pub fn write_events_csv<W: Write>(events: &[MaEvent], mut w: W) -> io::Result<()> {
    fn join<T: ToString>(v: &[T]) -> String {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
    writeln!(w, "t,kind,parent_ids,child_ids,sizes")?;
    for e in events {
        let kind = match e.kind {
            MaEventKind::Merger => "merger",
            MaEventKind::Spinoff => "spinoff",
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            e.t,
            kind,
            join(&e.parent_ids),
            join(&e.child_ids),
            join(&e.sizes)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MaTally {
    pub mergers: u64,
    pub spinoffs: u64,
}

impl MaTally {
    /// Net decrease of the live count caused by M&A events.
    pub fn net_merger_decrement(&self) -> i64 {
        self.mergers as i64 - self.spinoffs as i64
    }
}

fn pick_alive<R: Rng + ?Sized>(firms: &[Firm], rng: &mut R) -> usize {
    loop {
        let i = rng.random_range(0..firms.len());
        if firms[i].alive {
            return i;
        }
    }
}

fn pick_weighted<R: Rng + ?Sized>(firms: &[Firm], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, f) in firms.iter().enumerate() {
        if !f.alive {
            continue;
        }
        acc += f.size;
        last = i;
        if acc > target {
            return i;
        }
    }
    last
}

/// Applies the merger and spin-off events of one step of length `dt`.
///
/// Mergers replace a pair by one firm of the summed size, kept under the id
/// of the larger partner; spin-offs split a firm into `u S` and `(1-u) S`,
/// the parent keeping its id on the larger part and the child starting
/// with age zero. Asset value is conserved, so `population.total_value` is
/// left untouched. Merged-away firms are appended to `records`.
pub fn apply_ma<R: Rng + ?Sized>(
    population: &mut Population,
    dt: f64,
    kernel: &MAKernel,
    rng: &mut R,
    records: &mut Vec<LifespanRecord>,
    mut log: Option<&mut Vec<MaEvent>>,
) -> MaTally {
    let mut tally = MaTally::default();
    if kernel.is_off() {
        return tally;
    }
    let now = population.time;

    let n = population.live_count();
    let expected = match kernel.merger_kind {
        MergerKind::Off => 0.0,
        MergerKind::Constant { rate } => rate * (n as f64) * (n as f64 - 1.0) * 0.5 * dt,
        MergerKind::Multiplicative { rate, v_scale } => {
            let w = population.total_value;
            let sq: f64 = population.firms.iter().map(|f| f.size * f.size).sum();
            rate * ((w * w - sq) * 0.5).max(0.0) / (v_scale * v_scale) * dt
        }
    };
    let draws = poisson(expected, rng);
    let mut alive = n;
    for _ in 0..draws {
        if alive < 2 {
            break;
        }
        let firms = &population.firms;
        let (i, j) = match kernel.merger_kind {
            MergerKind::Multiplicative { .. } => {
                let total: f64 = firms.iter().filter(|f| f.alive).map(|f| f.size).sum();
                let i = pick_weighted(firms, total, rng);
                let mut j = pick_weighted(firms, total, rng);
                let mut guard = 0;
                while j == i && guard < 64 {
                    j = pick_weighted(firms, total, rng);
                    guard += 1;
                }
                if j == i {
                    j = pick_alive_except(firms, i, rng);
                }
                (i, j)
            }
            _ => {
                let i = pick_alive(firms, rng);
                let j = pick_alive_except(firms, i, rng);
                (i, j)
            }
        };
        let (keep, gone) = if population.firms[i].size >= population.firms[j].size {
            (i, j)
        } else {
            (j, i)
        };
        let (sk, sg) = (population.firms[keep].size, population.firms[gone].size);
        let (id_keep, id_gone) = (population.firms[keep].id, population.firms[gone].id);
        population.firms[keep].size = sk + sg;
        let g = &mut population.firms[gone];
        g.alive = false;
        g.exit_cause = Some(ExitCause::Merged);
        alive -= 1;
        tally.mergers += 1;
        if let Some(log) = log.as_deref_mut() {
            log.push(MaEvent {
                t: now,
                kind: MaEventKind::Merger,
                parent_ids: vec![id_keep, id_gone],
                child_ids: vec![id_keep],
                sizes: vec![sk, sg, sk + sg],
            });
        }
    }

    if let SpinoffKind::Constant { rate, u_min, u_max } = kernel.spinoff_kind {
        let draws = poisson(rate * alive as f64 * dt, rng);
        for _ in 0..draws {
            if alive == 0 {
                break;
            }
            let i = pick_alive(&population.firms, rng);
            let u = if u_max > u_min {
                rng.random_range(u_min..u_max)
            } else {
                u_min
            };
            let s = population.firms[i].size;
            let part = u * s;
            let rest = s - part;
            let (big, small) = if part >= rest {
                (part, rest)
            } else {
                (rest, part)
            };
            let child = population.allocate_id();
            let parent = population.firms[i].id;
            population.firms[i].size = big;
            population.firms.push(Firm::new(child, small, now));
            alive += 1;
            tally.spinoffs += 1;
            if let Some(log) = log.as_deref_mut() {
                log.push(MaEvent {
                    t: now,
                    kind: MaEventKind::Spinoff,
                    parent_ids: vec![parent],
                    child_ids: vec![parent, child],
                    sizes: vec![s, big, small],
                });
            }
        }
    }

    if tally.mergers > 0 {
        population.firms.retain(|f| {
            if !f.alive {
                records.push(LifespanRecord {
                    firm_id: f.id,
                    duration: now - f.birth_time,
                    cause: LifespanCause::Merged,
                });
            }
            f.alive
        });
    }
    population.merged_count += tally.mergers;
    population.spinoff_count += tally.spinoffs;
    tally
}

fn pick_alive_except<R: Rng + ?Sized>(firms: &[Firm], skip: usize, rng: &mut R) -> usize {
    loop {
        let j = pick_alive(firms, rng);
        if j != skip {
            return j;
        }
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}
