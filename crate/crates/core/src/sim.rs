//! Whole-economy simulation: birth flow, growth, exits and M&A events
//! advanced on a fixed time step.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::births::{coupled_intensity, sample_births};
use crate::error::{Error, Result};
use crate::exits::{apply_exits, LifespanCause, LifespanRecord};
use crate::gbm::advance;
use crate::ma::{apply_ma, poisson};
use crate::model::{derive_stream, validate, BirthKind, DiffusionSpec, EconomyConfig, Population};
use crate::tail::{default_k, hill, rank_size, TailFit};

/// Per-step flow counts, recorded at the end of each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub t: f64,
    pub births: u64,
    pub absorptions: u64,
    pub sudden_deaths: u64,
    pub mergers: u64,
    pub spinoffs: u64,
    pub total_value: f64,
    pub live: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub sizes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub replica: u64,
    pub final_population: Population,
    pub snapshots: Vec<Snapshot>,
    pub lifespans: Vec<LifespanRecord>,
    pub flow_series: Vec<FlowRecord>,
    pub initial_live: u64,
}

impl SimulationResult {
    pub fn final_sizes(&self) -> Vec<f64> {
        self.final_population.sizes()
    }

    /// Sizes pooled over every snapshot taken at or after `from`.
    pub fn pooled_sizes(&self, from: f64) -> Vec<f64> {
        self.snapshots
            .iter()
            .filter(|s| s.time >= from)
            .flat_map(|s| s.sizes.iter().copied())
            .collect()
    }

    /// Cumulative births minus exits of every kind, per step.
    pub fn integrated_flow(&self) -> Vec<(f64, i64)> {
        let mut acc = 0i64;
        self.flow_series
            .iter()
            .map(|f| {
                acc += f.births as i64 + f.spinoffs as i64
                    - f.absorptions as i64
                    - f.sudden_deaths as i64
                    - f.mergers as i64;
                (f.t, acc)
            })
            .collect()
    }

    pub fn write_flows_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_flows_csv(&self.flow_series, w)
    }
}

/// Writes `t,births,absorptions,sudden_deaths,live,total_value` CSV.
pub fn write_flows_csv<W: Write>(flows: &[FlowRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "t,births,absorptions,sudden_deaths,live,total_value")?;
    for f in flows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            f.t, f.births, f.absorptions, f.sudden_deaths, f.live, f.total_value
        )?;
    }
    Ok(())
}

/// Writes one size per line.
pub fn write_sizes_csv<W: Write>(sizes: &[f64], mut w: W) -> io::Result<()> {
    for s in sizes {
        writeln!(w, "{s}")?;
    }
    Ok(())
}

/// Runs replica 0 of the configured economy.
pub fn run(config: &EconomyConfig) -> Result<SimulationResult> {
    run_replica(config, 0)
}

/// Runs all replicas in parallel; results come back in replica order.
pub fn run_ensemble(config: &EconomyConfig) -> Result<Vec<SimulationResult>> {
    (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(config, r))
        .collect()
}

pub fn run_replica(config: &EconomyConfig, replica: u64) -> Result<SimulationResult> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let dt = config.dt;
    let steps = ((config.horizon / dt).round() as usize).max(1);
    let mut growth_rng = derive_stream(config.seed, replica, "growth");
    let mut exit_rng = derive_stream(config.seed, replica, "exits");
    let mut birth_rng = derive_stream(config.seed, replica, "births");
    let mut ma_rng = derive_stream(config.seed, replica, "ma");

    let schedule = match config.birth.kind {
        BirthKind::Coupled { .. } => None,
        _ => Some(sample_births(
            &config.birth,
            steps as f64 * dt,
            config.birth_cap,
            &mut birth_rng,
        )?),
    };
    let mut next_birth = 0usize;

    let mut pop = Population::new(0.0);
    for &s in &config.initial_sizes {
        pop.add_firm(s, 0.0);
    }
    let initial_live = pop.live_count() as u64;

    let mut snapshot_times = config.snapshots.instants(config.horizon);
    snapshot_times.sort_by(f64::total_cmp);
    let mut next_snap = 0usize;
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    while next_snap < snapshot_times.len() && snapshot_times[next_snap] <= 0.0 {
        snapshots.push(Snapshot {
            time: 0.0,
            sizes: pop.sizes(),
        });
        next_snap += 1;
    }

    let mut lifespans = Vec::new();
    let mut flows = Vec::with_capacity(steps);
    let s_min = config.exit.s_min.filter(|s| *s > 0.0);

    for step in 0..steps {
        let t_end = (step + 1) as f64 * dt;

        // (1) births in (t, t + dt], entering at the step end.
        let newborn: Vec<f64> = match (&schedule, config.birth.kind) {
            (Some(sched), _) => {
                let start = next_birth;
                while next_birth < sched.len() && sched.instants[next_birth] <= t_end {
                    next_birth += 1;
                }
                sched.entry_sizes[start..next_birth].to_vec()
            }
            (None, BirthKind::Coupled { kappa }) => {
                let count = poisson(coupled_intensity(&pop, kappa) * dt, &mut birth_rng);
                (0..count)
                    .map(|_| config.birth.entry_size_law.sample(&mut birth_rng))
                    .collect()
            }
            (None, _) => Vec::new(),
        };

        // (2) growth.
        advance_all(&mut pop, &config.diffusion, dt, s_min, &mut growth_rng)?;
        pop.time = t_end;
        pop.refresh_total();

        // (3) exits.
        let tally = apply_exits(
            &mut pop,
            dt,
            &config.exit,
            &config.diffusion,
            &mut exit_rng,
            &mut lifespans,
        );

        // (4) mergers and spin-offs.
        let ma = apply_ma(&mut pop, dt, &config.ma, &mut ma_rng, &mut lifespans, None);

        for &s in &newborn {
            pop.add_firm(s, t_end);
        }
        pop.born_count += newborn.len() as u64;

        if pop.live_count() > config.max_live {
            return Err(Error::PopulationExplosion {
                live: pop.live_count(),
                cap: config.max_live,
            });
        }
        if !pop.total_value.is_finite() {
            return Err(Error::NonFiniteState(format!(
                "total value {} at t = {t_end}",
                pop.total_value
            )));
        }

        flows.push(FlowRecord {
            t: t_end,
            births: newborn.len() as u64,
            absorptions: tally.absorbed,
            sudden_deaths: tally.sudden_deaths,
            mergers: ma.mergers,
            spinoffs: ma.spinoffs,
            total_value: pop.total_value,
            live: pop.live_count() as u64,
        });

        while next_snap < snapshot_times.len() && snapshot_times[next_snap] <= t_end + 1e-9 * dt {
            snapshots.push(Snapshot {
                time: t_end,
                sizes: pop.sizes(),
            });
            next_snap += 1;
        }
    }

    let end = pop.time;
    lifespans.extend(pop.firms.iter().map(|f| LifespanRecord {
        firm_id: f.id,
        duration: end - f.birth_time,
        cause: LifespanCause::Censored,
    }));

    Ok(SimulationResult {
        replica,
        final_population: pop,
        snapshots,
        lifespans,
        flow_series: flows,
        initial_live,
    })
}

fn advance_all<R: Rng + ?Sized>(
    pop: &mut Population,
    spec: &DiffusionSpec,
    dt: f64,
    s_min: Option<f64>,
    rng: &mut R,
) -> Result<()> {
    match *spec {
        DiffusionSpec::GBM(p) => {
            let drift = p.log_drift() * dt;
            let vol = p.sigma * dt.sqrt();
            for f in pop.firms.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                f.prev_size = f.size;
                f.size *= (drift + vol * z).exp();
                f.age += dt;
            }
        }
        _ => {
            for f in pop.firms.iter_mut() {
                f.prev_size = f.size;
                f.size = advance(f.size, spec, dt, s_min, rng)?;
                f.age += dt;
            }
        }
    }
    Ok(())
}

/// Two-sided Mann–Kendall statistic, normalized to a standard normal.
fn mann_kendall_z(x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let n = n as f64;
    let var = n * (n - 1.0) * (2.0 * n + 5.0) / 18.0;
    let s = s as f64;
    if s == 0.0 {
        0.0
    } else {
        (s - s.signum()) / var.sqrt()
    }
}

const TREND_BLOCKS: usize = 10;
const Z_CRIT_5PCT: f64 = 1.959964;

/// Earliest time at which the live count shows no trend at the 5% level.
///
/// Each trailing window spans 20% of the series; its ten block means are
/// tested with the Mann–Kendall trend test (block averaging tames the
/// step-to-step autocorrelation of the count). Returns the end time of the
/// first window that passes.
pub fn steady_state_detect(flow_series: &[FlowRecord]) -> Option<f64> {
    let t: Vec<f64> = flow_series.iter().map(|f| f.t).collect();
    let v: Vec<f64> = flow_series.iter().map(|f| f.live as f64).collect();
    detect_flat_window(&t, &v)
}

pub fn detect_flat_window(times: &[f64], values: &[f64]) -> Option<f64> {
    let n = values.len();
    let w = ((n as f64 * 0.2).ceil() as usize).max(TREND_BLOCKS);
    if n < w {
        return None;
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mut blocks = [0.0; TREND_BLOCKS];
    for end in w..=n {
        let start = end - w;
        for (b, slot) in blocks.iter_mut().enumerate() {
            let lo = start + b * w / TREND_BLOCKS;
            let hi = start + (b + 1) * w / TREND_BLOCKS;
            *slot = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        }
        if mann_kendall_z(&blocks).abs() < Z_CRIT_5PCT {
            return Some(times[end - 1]);
        }
    }
    None
}

/// Tail fits on one sample with the default `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFits {
    pub n: usize,
    pub hill: Option<TailFit>,
    pub rank_size: Option<TailFit>,
}

impl SampleFits {
    pub fn of(sample: &[f64]) -> Self {
        let n = sample.len();
        if n < 30 {
            return Self {
                n,
                hill: None,
                rank_size: None,
            };
        }
        let k = default_k(n);
        Self {
            n,
            hill: hill(sample, k).ok(),
            rank_size: rank_size(sample, k.max(3)).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub born: u64,
    pub absorbed: u64,
    pub sudden_deaths: u64,
    pub merged: u64,
    pub spinoffs: u64,
    pub live: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replica: u64,
    pub counts: Counts,
    pub steady_state_time: Option<f64>,
}

/// Summary of an ensemble run: the configuration echo, counts and tail fits
/// on the final sample and on snapshots pooled over the second half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub config: EconomyConfig,
    pub replicas: Vec<ReplicaSummary>,
    pub total: Counts,
    pub tail_final: SampleFits,
    pub tail_pooled_late: SampleFits,
    pub pooled_from: f64,
}

pub fn summarize(config: &EconomyConfig, results: &[SimulationResult]) -> SimulationSummary {
    let mut total = Counts {
        born: 0,
        absorbed: 0,
        sudden_deaths: 0,
        merged: 0,
        spinoffs: 0,
        live: 0,
    };
    let replicas = results
        .iter()
        .map(|r| {
            let p = &r.final_population;
            let counts = Counts {
                born: p.born_count,
                absorbed: p.absorbed_count,
                sudden_deaths: p.sudden_death_count,
                merged: p.merged_count,
                spinoffs: p.spinoff_count,
                live: p.live_count() as u64,
            };
            total.born += counts.born;
            total.absorbed += counts.absorbed;
            total.sudden_deaths += counts.sudden_deaths;
            total.merged += counts.merged;
            total.spinoffs += counts.spinoffs;
            total.live += counts.live;
            ReplicaSummary {
                replica: r.replica,
                counts,
                steady_state_time: steady_state_detect(&r.flow_series),
            }
        })
        .collect();
    let pooled_from = 0.5 * config.horizon;
    let final_sizes: Vec<f64> = results.iter().flat_map(|r| r.final_sizes()).collect();
    let pooled: Vec<f64> = results
        .iter()
        .flat_map(|r| r.pooled_sizes(pooled_from))
        .collect();
    SimulationSummary {
        config: config.clone(),
        replicas,
        total,
        tail_final: SampleFits::of(&final_sizes),
        tail_pooled_late: SampleFits::of(&pooled),
        pooled_from,
    }
}
