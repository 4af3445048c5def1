//! The four subcommands. Each returns the list of files it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use zipflab_core::analytics::{
    asymptotic_tail_exponent, gbm_steady_state, solve_stationary, GridConfig,
};
use zipflab_core::exits::LifespanRecord;
use zipflab_core::sim::{run_ensemble, summarize, SampleFits, SimulationResult, SimulationSummary};
use zipflab_core::tail::{ccdf, default_k, hill, rank_size, write_ccdf_csv};
use zipflab_core::{BirthKind, DiffusionSpec, EconomyConfig, Error, TailFit};

use crate::error::{CliError, CliResult};
use crate::scenario::{check, with_param, Sweep};

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// Predicted tail exponent, or the reason there is none.
fn theory_exponent(config: &EconomyConfig) -> Result<f64, Error> {
    asymptotic_tail_exponent(&config.diffusion, &config.birth, &config.exit)
}

fn error_name(e: &Error) -> String {
    format!("{e:?}")
        .split(['(', ' ', '{'])
        .next()
        .unwrap_or_default()
        .to_string()
}

#[derive(Serialize)]
struct Theory {
    tail_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unavailable: Option<String>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    #[serde(flatten)]
    summary: &'a SimulationSummary,
    theory: Theory,
}

pub fn simulate(config: &EconomyConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    check(config)?;
    let results = run_ensemble(config)?;
    let mut written = vec![
        write_sizes(out, &results)?,
        write_flows(out, &results)?,
        write_lifespans(out, &results)?,
    ];
    let summary = summarize(config, &results);
    let theory = match theory_exponent(config) {
        Ok(m) => Theory {
            tail_exponent: Some(m),
            unavailable: None,
        },
        Err(e) => Theory {
            tail_exponent: None,
            unavailable: Some(e.to_string()),
        },
    };
    written.push(write_json(
        out,
        "summary.json",
        &SimulateReport {
            summary: &summary,
            theory,
        },
    )?);
    Ok(written)
}

fn write_sizes(out: &Path, results: &[SimulationResult]) -> CliResult<PathBuf> {
    let (path, mut w) = create(out, "sizes_final.csv")?;
    writeln!(w, "replica,firm_id,size")?;
    for r in results {
        for f in &r.final_population.firms {
            writeln!(w, "{},{},{}", r.replica, f.id, f.size)?;
        }
    }
    w.flush()?;
    Ok(path)
}

fn write_flows(out: &Path, results: &[SimulationResult]) -> CliResult<PathBuf> {
    let (path, mut w) = create(out, "flows.csv")?;
    writeln!(
        w,
        "replica,t,births,absorptions,sudden_deaths,mergers,spinoffs,live,total_value"
    )?;
    for r in results {
        for f in &r.flow_series {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.replica,
                f.t,
                f.births,
                f.absorptions,
                f.sudden_deaths,
                f.mergers,
                f.spinoffs,
                f.live,
                f.total_value
            )?;
        }
    }
    w.flush()?;
    Ok(path)
}

fn write_lifespans(out: &Path, results: &[SimulationResult]) -> CliResult<PathBuf> {
    let (path, mut w) = create(out, "lifespans.csv")?;
    writeln!(w, "replica,firm_id,duration,cause")?;
    for r in results {
        for LifespanRecord {
            firm_id,
            duration,
            cause,
        } in &r.lifespans
        {
            writeln!(w, "{},{firm_id},{duration},{cause}", r.replica)?;
        }
    }
    w.flush()?;
    Ok(path)
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub n: usize,
    pub s_max: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n: 4096,
            s_max: None,
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    tail_exponent: f64,
    normalization: f64,
    method: &'static str,
    fitted_tail_exponent: Option<f64>,
    fit_r_squared: Option<f64>,
    fit_range: Option<(f64, f64)>,
    flux_residual: Option<f64>,
    grid_cells: usize,
}

pub fn solve(config: &EconomyConfig, opts: SolveOptions, out: &Path) -> CliResult<Vec<PathBuf>> {
    check(config)?;
    let nu0 = match config.birth.kind {
        BirthKind::Constant { nu0 } => nu0,
        _ => return Err(CliError::input("solve needs a Constant birth law")),
    };
    let m = theory_exponent(config)?;
    let s0 = config.birth.entry_size_law.typical_size();
    let grid = GridConfig {
        n: opts.n,
        s_max: opts.s_max.unwrap_or(s0 * 1e6),
        s_lo: config
            .exit
            .s_min
            .filter(|s| *s > 0.0)
            .is_none()
            .then_some(s0 * 1e-4),
        richardson_tol: Some(1e-2),
    };
    let numeric = solve_stationary(&config.diffusion, &config.birth, &config.exit, &grid)?;

    // GBM with a point-mass entry size and constant hazard has a closed form.
    let closed = match (config.diffusion, config.exit.hazard.constant_rate()) {
        (DiffusionSpec::GBM(p), Some(h))
            if matches!(
                config.birth.entry_size_law,
                zipflab_core::EntrySizeLaw::PointMass { .. }
            ) =>
        {
            Some(gbm_steady_state(
                p,
                nu0,
                s0,
                config.exit.s_min.filter(|s| *s > 0.0),
                h,
                0.0,
            )?)
        }
        _ => None,
    };
    let (normalization, method) = match &closed {
        Some(c) => (c.normalization(), "closed_form"),
        None => (numeric.normalization, "numeric"),
    };
    let mut written = Vec::new();
    let (path, mut w) = create(out, "density.csv")?;
    numeric.write_csv(&mut w)?;
    w.flush()?;
    written.push(path);
    let report = SolveReport {
        tail_exponent: m,
        normalization,
        method,
        fitted_tail_exponent: numeric.fit.map(|f| f.m),
        fit_r_squared: numeric.fit.map(|f| f.r_squared),
        fit_range: numeric.fit.map(|f| (f.s_lo, f.s_hi)),
        flux_residual: numeric.flux_residual,
        grid_cells: opts.n,
    };
    written.push(write_json(out, "theory.json", &report)?);
    Ok(written)
}

/// Reads sizes from a CSV with a header row: the `size` column if present,
/// else `s`, else the first column.
pub fn read_sizes(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::input(format!("cannot read sizes {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .clone();
    let col = ["size", "s"]
        .iter()
        .find_map(|name| headers.iter().position(|h| h.trim() == *name))
        .unwrap_or(0);
    let mut sizes = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let field = record.get(col).unwrap_or("").trim();
        let v: f64 = field.parse().map_err(|_| {
            CliError::input(format!(
                "{}: row {}: `{field}` is not a number",
                path.display(),
                line + 2
            ))
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::input(format!(
                "{}: row {}: sizes must be positive and finite",
                path.display(),
                line + 2
            )));
        }
        sizes.push(v);
    }
    if sizes.is_empty() {
        return Err(CliError::input(format!("{}: no sizes", path.display())));
    }
    Ok(sizes)
}

#[derive(Serialize)]
struct EstimateReport {
    n: usize,
    k: usize,
    hill: TailFit,
    rank_size: Option<TailFit>,
}

pub fn estimate(input: &Path, k: Option<usize>, out: &Path) -> CliResult<Vec<PathBuf>> {
    let sizes = read_sizes(input)?;
    let k = k.unwrap_or_else(|| default_k(sizes.len()));
    let report = EstimateReport {
        n: sizes.len(),
        k,
        hill: hill(&sizes, k)?,
        rank_size: if k >= 3 {
            Some(rank_size(&sizes, k)?)
        } else {
            None
        },
    };
    let mut written = vec![write_json(out, "tailfit.json", &report)?];
    let (path, mut w) = create(out, "ccdf.csv")?;
    write_ccdf_csv(&ccdf(&sizes), &mut w)?;
    w.flush()?;
    written.push(path);
    Ok(written)
}

pub struct SweepRow {
    pub value: f64,
    pub m_theory: String,
    pub m_hill: Option<f64>,
    pub m_ranksize: Option<f64>,
    pub live_count: u64,
}

/// Runs every sweep point (in parallel) and returns rows in input order.
pub fn sweep_rows(base: &EconomyConfig, sweep: &Sweep) -> CliResult<Vec<SweepRow>> {
    let configs = sweep
        .values
        .iter()
        .map(|v| {
            let c = with_param(base, &sweep.param, *v)?;
            check(&c)?;
            Ok(c)
        })
        .collect::<CliResult<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(sweep.values.par_iter())
        .map(|(config, &value)| {
            let m_theory = match theory_exponent(config) {
                Ok(m) => m.to_string(),
                Err(e) => error_name(&e),
            };
            let results = run_ensemble(config)?;
            let summary = summarize(config, &results);
            let fits: &SampleFits = if summary.tail_pooled_late.hill.is_some() {
                &summary.tail_pooled_late
            } else {
                &summary.tail_final
            };
            Ok(SweepRow {
                value,
                m_theory,
                m_hill: fits.hill.map(|f| f.m_hat),
                m_ranksize: fits.rank_size.map(|f| f.m_hat),
                live_count: summary.total.live,
            })
        })
        .collect()
}

pub fn sweep(base: &EconomyConfig, sweep: &Sweep, out: &Path) -> CliResult<Vec<PathBuf>> {
    let rows = sweep_rows(base, sweep)?;
    let (path, mut w) = create(out, "sweep.csv")?;
    writeln!(w, "param,value,m_theory,m_hill,m_ranksize,live_count")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            sweep.param,
            r.value,
            r.m_theory,
            opt(r.m_hill),
            opt(r.m_ranksize),
            r.live_count
        )?;
    }
    w.flush()?;
    Ok(vec![path])
}
