//! Steady-state theory: the tail exponent from the balance condition,
//! closed-form stationary densities for Gibrat growth, and a finite-volume
//! solver for the stationary forward equation of general diffusions.
//!
//! Everything is worked out in the log-size coordinate `x = ln s`, where the
//! mean number of firms per unit `x`, `g(x) = s f(s)`, solves
//!
//! ```text
//! 0 = -(b g)' + (D g)'' - k g + nu0 q(x)
//! ```
//!
//! with `b` the drift of `ln S`, `D` half its squared volatility, `k` the
//! killing rate (sudden deaths plus the growth rate `d` of the birth flow in
//! the growing frame) and `q` the entry-size density.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gbm::std_normal_cdf;
use crate::model::{
    BirthKind, BirthLaw, DiffusionSpec, EntrySizeLaw, ExitLaw, GibratParams, Hazard, RateFn,
};
use crate::tail::ols;

/// Positive root `m` of `(sigma^2/2) m^2 + a m - (h + d) = 0`: the CCDF
/// exponent of the stationary size distribution.
pub fn tail_exponent(a: f64, sigma: f64, h: f64, d: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be > 0")));
    }
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!("hazard {h} must be >= 0")));
    }
    let s2 = sigma * sigma;
    let k = h + d;
    if k == 0.0 {
        // `a` is usually mu - sigma^2/2; treat rounding-level values as zero.
        if a < -4.0 * f64::EPSILON * s2 {
            return Ok(-2.0 * a / s2);
        }
        return Err(Error::NoStationaryTail(format!(
            "mu = a + sigma^2/2 = {} must be < h + d = 0",
            a + 0.5 * s2
        )));
    }
    let disc = a * a + 2.0 * s2 * k;
    if disc < 0.0 {
        return Err(Error::NoStationaryTail(format!(
            "characteristic polynomial has no real root (a^2 + 2 sigma^2 (h + d) = {disc})"
        )));
    }
    let root = disc.sqrt();
    let m = if a > 0.0 && k > 0.0 {
        2.0 * k / (a + root)
    } else {
        (root - a) / s2
    };
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::NoStationaryTail(format!(
            "no positive root for a = {a}, h + d = {k}"
        )))
    }
}

/// Value of the characteristic polynomial at `m`.
pub fn characteristic(m: f64, a: f64, sigma: f64, h: f64, d: f64) -> f64 {
    0.5 * sigma * sigma * m * m + a * m - (h + d)
}

/// Roots `(lambda_minus, lambda_plus)` of `(sigma^2/2) l^2 - a l - k = 0`,
/// the local exponents of `g(x) ~ e^{l x}`.
fn log_roots(a: f64, sigma: f64, k: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let root = (a * a + 2.0 * s2 * k).sqrt();
    // Rationalized forms avoid cancellation.
    let (lo, hi) = if a >= 0.0 {
        let hi = (a + root) / s2;
        let lo = if hi != 0.0 {
            -2.0 * k / (s2 * hi)
        } else {
            (a - root) / s2
        };
        (lo, hi)
    } else {
        let lo = (a - root) / s2;
        let hi = if lo != 0.0 {
            -2.0 * k / (s2 * lo)
        } else {
            (a + root) / s2
        };
        (lo, hi)
    };
    (lo, hi)
}

/// `(e^{l d} - 1) / l`, continuous at `l = 0`.
fn expm1_ratio(l: f64, d: f64) -> f64 {
    if l == 0.0 {
        d
    } else {
        (l * d).exp_m1() / l
    }
}

/// Least-squares power-law fit of a density over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// CCDF exponent `m`, from `f ~ s^{-(1+m)}`.
    pub m: f64,
    pub r_squared: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySolution {
    /// Log-spaced sizes.
    pub grid: Vec<f64>,
    /// Mean number of firms per unit size.
    pub density: Vec<f64>,
    /// Predicted CCDF exponent, when the model has a power-law tail.
    pub tail_exponent: Option<f64>,
    /// Expected live count.
    pub normalization: f64,
    /// Fit over the top decade below `s_max / 10`.
    pub fit: Option<PowerLawFit>,
    /// Relative mismatch between injection and exit fluxes (numeric solves).
    pub flux_residual: Option<f64>,
}

impl DensitySolution {
    /// Writes `s,f` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s,f")?;
        for (s, f) in self.grid.iter().zip(&self.density) {
            writeln!(w, "{s},{f}")?;
        }
        Ok(())
    }
}

/// Fits `ln f` against `ln s` over `[s_max/100, s_max/10]`.
pub fn fit_top_decade(grid: &[f64], density: &[f64]) -> Option<PowerLawFit> {
    let s_max = *grid.last()?;
    let (lo, hi) = (s_max / 100.0, s_max / 10.0);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (s, f) in grid.iter().zip(density) {
        if *s >= lo * (1.0 - 1e-12) && *s <= hi * (1.0 + 1e-12) && *f > 0.0 {
            x.push(s.ln());
            y.push(f.ln());
        }
    }
    if x.len() < 3 {
        return None;
    }
    let (slope, _, r2) = ols(&x, &y);
    Some(PowerLawFit {
        m: -slope - 1.0,
        r_squared: r2,
        s_lo: lo,
        s_hi: hi,
        points: x.len(),
    })
}

/// Closed-form stationary law of a GBM population in log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibratSteadyState {
    x0: f64,
    x_min: Option<f64>,
    lambda_lo: f64,
    lambda_hi: f64,
    scale: f64,
    normalization: f64,
    tail: f64,
}

impl GibratSteadyState {
    /// Firms per unit log-size at `x = ln s`.
    pub fn log_density(&self, x: f64) -> f64 {
        let (lo, hi, c) = (self.lambda_lo, self.lambda_hi, self.scale);
        match self.x_min {
            Some(xm) => {
                if x <= xm {
                    return 0.0;
                }
                let delta = self.x0 - xm;
                let u = x - xm;
                if x <= self.x0 {
                    c * ((hi * (u - delta)).exp() - (lo * u - hi * delta).exp())
                } else {
                    c * (-((lo - hi) * delta).exp_m1()) * (lo * (x - self.x0)).exp()
                }
            }
            None => {
                if x <= self.x0 {
                    c * (hi * (x - self.x0)).exp()
                } else {
                    c * (lo * (x - self.x0)).exp()
                }
            }
        }
    }

    /// Firms per unit size.
    pub fn density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.log_density(s.ln()) / s
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail
    }

    /// Exponent of `f(s) ~ s^{-(1+m)}` below the entry size, i.e. the
    /// negative root of the characteristic polynomial (zero-exit case).
    pub fn lower_exponent(&self) -> f64 {
        -self.lambda_hi
    }

    pub fn on_grid(&self, grid: Vec<f64>) -> DensitySolution {
        let density: Vec<f64> = grid.iter().map(|s| self.density(*s)).collect();
        let fit = fit_top_decade(&grid, &density);
        DensitySolution {
            grid,
            density,
            tail_exponent: Some(self.tail),
            normalization: self.normalization,
            fit,
            flux_residual: None,
        }
    }
}

/// Stationary density of GBM firms born at rate `nu0` with size `s0`,
/// absorbed at `s_min` and killed at rate `h`.
pub fn gbm_steady_density(
    params: GibratParams,
    nu0: f64,
    s0: f64,
    s_min: f64,
    h: f64,
) -> Result<GibratSteadyState> {
    gbm_steady_state(params, nu0, s0, Some(s_min), h, 0.0)
}

/// Same law without an exit level: two power-law branches meeting at `s0`.
pub fn zero_exit_density(
    params: GibratParams,
    nu0: f64,
    s0: f64,
    h: f64,
) -> Result<GibratSteadyState> {
    gbm_steady_state(params, nu0, s0, None, h, 0.0)
}

/// General form with birth-rate growth `d` acting as extra killing.
pub fn gbm_steady_state(
    params: GibratParams,
    nu0: f64,
    s0: f64,
    s_min: Option<f64>,
    h: f64,
    d: f64,
) -> Result<GibratSteadyState> {
    let sigma = params.sigma;
    let a = params.log_drift();
    if !(sigma > 0.0 && nu0 > 0.0 && s0 > 0.0 && h >= 0.0) {
        return Err(Error::InvalidArgument(
            "need sigma > 0, nu0 > 0, s0 > 0 and h >= 0".into(),
        ));
    }
    let k = h + d;
    let tail =
        tail_exponent(a, sigma, h, d).map_err(|e| Error::NoStationaryRegime(e.to_string()))?;
    let (lo, hi) = log_roots(a, sigma, k);
    if !(lo < 0.0) {
        return Err(Error::NoStationaryRegime(format!(
            "no decaying branch above s0 (a = {a}, h + d = {k})"
        )));
    }
    let x0 = s0.ln();
    let scale = 2.0 * nu0 / (sigma * sigma * (hi - lo));
    let (x_min, normalization) = match s_min {
        Some(sm) if sm > 0.0 => {
            if !(sm < s0) {
                return Err(Error::InvalidArgument(format!(
                    "s_min {sm} must be below s0 {s0}"
                )));
            }
            let delta = x0 - sm.ln();
            // Mass below s0 plus mass above.
            let below = scale
                * (expm1_ratio(-hi, delta) * 1.0 - (-hi * delta).exp() * expm1_ratio(lo, delta));
            let above = scale * (-((lo - hi) * delta).exp_m1()) / -lo;
            (Some(sm.ln()), below + above)
        }
        _ => {
            if !(hi > 0.0) {
                return Err(Error::NotIntegrable(format!(
                    "lower branch s^({hi} - 1) is not integrable at 0 (a = {a}, h + d = {k})"
                )));
            }
            (None, scale * (1.0 / hi - 1.0 / lo))
        }
    };
    Ok(GibratSteadyState {
        x0,
        x_min,
        lambda_lo: lo,
        lambda_hi: hi,
        scale,
        normalization,
        tail,
    })
}

/// Grid settings for [`solve_stationary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Number of cells; the grid has `n + 1` nodes.
    pub n: usize,
    pub s_max: f64,
    /// Lower end of the grid when there is no absorbing level.
    pub s_lo: Option<f64>,
    /// Maximum sup-norm change (relative to the peak) allowed when the grid
    /// is doubled; `None` skips the refinement check.
    pub richardson_tol: Option<f64>,
}

impl GridConfig {
    pub fn new(n: usize, s_max: f64) -> Self {
        Self {
            n,
            s_max,
            s_lo: None,
            richardson_tol: Some(1e-2),
        }
    }
}

/// Log-spaced grid with `n + 1` nodes from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (xl, xh) = (lo.ln(), hi.ln());
    let dx = (xh - xl) / n as f64;
    (0..=n).map(|i| (xl + i as f64 * dx).exp()).collect()
}

/// Bernoulli function `z / (e^z - 1)`.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

fn killing_rate(exit: &ExitLaw, d: f64, s: f64) -> Result<f64> {
    let h = match exit.hazard {
        Hazard::None => 0.0,
        Hazard::Constant { h } => h,
        Hazard::SizeDependent(f) => f.eval(s),
        Hazard::AgeDependent(_) => {
            return Err(Error::Unsupported(
                "age-dependent hazards have no stationary size-only equation".into(),
            ))
        }
    };
    Ok(h + d)
}

fn asymptotic_hazard(h: &Hazard) -> f64 {
    match *h {
        Hazard::None | Hazard::AgeDependent(_) => 0.0,
        Hazard::Constant { h } => h,
        Hazard::SizeDependent(RateFn::Constant { rate }) => rate,
        Hazard::SizeDependent(RateFn::Step { above, .. }) => above,
        Hazard::SizeDependent(RateFn::Saturating { max, .. }) => max,
    }
}

/// Tail exponent predicted from the large-size Gibrat limit of the model.
pub fn asymptotic_tail_exponent(
    spec: &DiffusionSpec,
    birth: &BirthLaw,
    exit: &ExitLaw,
) -> Result<f64> {
    let (mu, sigma) = spec.asymptotic_gibrat();
    if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
        return Err(Error::NoStationaryTail(format!(
            "no proportional volatility at large sizes (sigma_inf = {sigma})"
        )));
    }
    let a = mu - 0.5 * sigma * sigma;
    tail_exponent(
        a,
        sigma,
        asymptotic_hazard(&exit.hazard),
        birth.kind.growth_rate(),
    )
}

/// Log-coordinate drift `b` and diffusivity `D` at size `s`.
fn log_coefficients(spec: &DiffusionSpec, s: f64) -> (f64, f64) {
    let v = spec.vol(s) / s;
    let d = 0.5 * v * v;
    (spec.drift(s) / s - d, d)
}

/// Decay rate `m` of `g ~ e^{-m x}` for frozen local coefficients.
fn local_decay(b: f64, d: f64, k: f64) -> Option<f64> {
    let disc = (b * b + 4.0 * d * k).sqrt();
    let m = if b > 0.0 {
        if k > 0.0 {
            2.0 * k / (b + disc)
        } else {
            0.0
        }
    } else if d > 0.0 {
        (disc - b) / (2.0 * d)
    } else {
        f64::INFINITY
    };
    (m > 0.0).then_some(m)
}

/// Growth rate `l` of `g ~ e^{l x}` towards small sizes.
fn local_growth(b: f64, d: f64, k: f64) -> Option<f64> {
    let disc = (b * b + 4.0 * d * k).sqrt();
    let l = if b < 0.0 {
        if k > 0.0 {
            2.0 * k / (disc - b)
        } else {
            0.0
        }
    } else if d > 0.0 {
        (b + disc) / (2.0 * d)
    } else {
        f64::INFINITY
    };
    (l > 0.0).then_some(l)
}

/// Solves the stationary forward equation by finite volumes on a grid
/// uniform in `ln s`, with Scharfetter–Gummel fluxes.
///
/// The lower boundary is absorbing (`g = 0` at `s_min`) or, without an exit
/// level, an exponential-growth condition at `grid.s_lo`. The upper boundary
/// continues the solution with the local decay rate of the frozen
/// coefficients. Exponential birth growth `d` enters as extra killing.
pub fn solve_stationary(
    spec: &DiffusionSpec,
    birth: &BirthLaw,
    exit: &ExitLaw,
    grid: &GridConfig,
) -> Result<DensitySolution> {
    let coarse = solve_on_grid(spec, birth, exit, grid.n, grid)?;
    if let Some(tol) = grid.richardson_tol {
        let fine = solve_on_grid(spec, birth, exit, 2 * grid.n, grid)?;
        let peak = fine.density.iter().cloned().fold(0.0, f64::max);
        let diff = coarse
            .density
            .iter()
            .zip(fine.density.iter().step_by(2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / peak;
        if !(diff <= tol) {
            return Err(Error::GridTooCoarse { diff, tol });
        }
    }
    Ok(coarse)
}

fn solve_on_grid(
    spec: &DiffusionSpec,
    birth: &BirthLaw,
    exit: &ExitLaw,
    n: usize,
    grid: &GridConfig,
) -> Result<DensitySolution> {
    let nu0 = match birth.kind {
        BirthKind::Constant { nu0 } | BirthKind::Exponential { nu0, .. } => nu0,
        BirthKind::Coupled { .. } => {
            return Err(Error::Unsupported(
                "coupled births have no stationary solution".into(),
            ))
        }
    };
    let d_growth = birth.kind.growth_rate();
    let absorbing = exit.s_min.filter(|s| *s > 0.0);
    let s_lo = match absorbing {
        Some(s) => s,
        None => grid.s_lo.ok_or_else(|| {
            Error::InvalidArgument("grid.s_lo is required without an absorbing level".into())
        })?,
    };
    if !(grid.s_max > s_lo && n >= 4) {
        return Err(Error::InvalidArgument(format!(
            "grid needs s_max > {s_lo} and n >= 4"
        )));
    }
    if s_lo <= spec.lower_limit() {
        return Err(Error::InvalidArgument(format!(
            "grid starts at {s_lo}, at or below the diffusion's lower limit {}",
            spec.lower_limit()
        )));
    }
    let x_lo = s_lo.ln();
    let dx = (grid.s_max.ln() - x_lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| x_lo + i as f64 * dx).collect();
    let sizes: Vec<f64> = xs.iter().map(|x| x.exp()).collect();

    let coeff = |x: f64| log_coefficients(spec, x.exp());
    let mut diff_node = Vec::with_capacity(n + 1);
    let mut kill = Vec::with_capacity(n + 1);
    for (x, s) in xs.iter().zip(&sizes) {
        let (_, d) = coeff(*x);
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularSystem(format!(
                "non-positive diffusivity at s = {s}"
            )));
        }
        diff_node.push(d);
        kill.push(killing_rate(exit, d_growth, *s)?);
    }

    // Face coefficients: J_{i+1/2} = alpha_i g_i - gamma_i g_{i+1}, for
    // faces i = -1 ..= n (index shifted by one).
    let face = |x_left: f64, d_left: f64, d_right: f64| {
        let (b, d) = coeff(x_left + 0.5 * dx);
        let p = b / d * dx;
        (bernoulli(-p) * d_left / dx, bernoulli(p) * d_right / dx)
    };
    let mut alpha = vec![0.0; n + 2];
    let mut gamma = vec![0.0; n + 2];
    for i in 0..n {
        let (a, g) = face(xs[i], diff_node[i], diff_node[i + 1]);
        alpha[i + 1] = a;
        gamma[i + 1] = g;
    }
    // Ghost faces below node 0 and above node n.
    let x_ghost_hi = xs[n] + dx;
    let (_, d_ghost_hi) = coeff(x_ghost_hi);
    let (a_top, g_top) = face(xs[n], diff_node[n], d_ghost_hi);
    alpha[n + 1] = a_top;
    gamma[n + 1] = g_top;

    let (b_top, d_top) = coeff(xs[n]);
    let k_top = kill[n];
    let m_top = local_decay(b_top, d_top, k_top).ok_or_else(|| {
        Error::NoStationaryRegime(format!(
            "no decaying solution at s_max: log-drift {b_top} >= 0 with no killing"
        ))
    })?;
    let ratio_top = (-m_top * dx).exp();

    // Source deposition.
    let mut source = vec![0.0; n + 1];
    match birth.entry_size_law {
        EntrySizeLaw::PointMass { s0 } => {
            let pos = (s0.ln() - x_lo) / dx;
            if !(pos > 0.0 && pos < n as f64) {
                return Err(Error::InvalidArgument(format!(
                    "entry size {s0} outside the grid"
                )));
            }
            let i = pos.floor() as usize;
            let w = pos - i as f64;
            source[i] += nu0 * (1.0 - w);
            source[i + 1] += nu0 * w;
        }
        EntrySizeLaw::LogNormal { median, log_sd } => {
            let mu = median.ln();
            let cdf = |x: f64| {
                if log_sd > 0.0 {
                    std_normal_cdf((x - mu) / log_sd)
                } else if x >= mu {
                    1.0
                } else {
                    0.0
                }
            };
            for i in 0..=n {
                let lo = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    xs[i] - 0.5 * dx
                };
                let hi = if i == n {
                    f64::INFINITY
                } else {
                    xs[i] + 0.5 * dx
                };
                source[i] = nu0 * (cdf(hi) - cdf(lo));
            }
            if absorbing.is_some() {
                // Entrants at or below the exit level leave immediately.
                source[0] = 0.0;
            }
        }
    }

    // Assemble the tridiagonal rows for the unknown nodes.
    let first = if absorbing.is_some() { 1 } else { 0 };
    let rows = n + 1 - first;
    let mut lower = vec![0.0; rows];
    let mut diag = vec![0.0; rows];
    let mut upper = vec![0.0; rows];
    let mut rhs = vec![0.0; rows];
    for r in 0..rows {
        let i = r + first;
        // Face i - 1/2 is alpha[i], gamma[i]; face i + 1/2 is alpha[i+1], gamma[i+1].
        lower[r] = alpha[i];
        diag[r] = -gamma[i] - alpha[i + 1] - dx * kill[i];
        upper[r] = gamma[i + 1];
        rhs[r] = -source[i];
    }
    // Upper continuation g_{n+1} = ratio_top * g_n.
    diag[rows - 1] += upper[rows - 1] * ratio_top;
    upper[rows - 1] = 0.0;
    if absorbing.is_none() {
        let (b_lo, d_lo) = coeff(xs[0]);
        let l = local_growth(b_lo, d_lo, kill[0]).ok_or_else(|| {
            Error::NotIntegrable(format!("density does not decay towards s = {s_lo}"))
        })?;
        let (_, d_ghost_lo) = coeff(xs[0] - dx);
        let (a_lo, g_lo) = face(xs[0] - dx, d_ghost_lo, diff_node[0]);
        // Face -1/2 with ghost g_{-1} = e^{-l dx} g_0.
        diag[0] += -g_lo + a_lo * (-l * dx).exp();
    }
    lower[0] = 0.0;

    let sol = thomas(&lower, &diag, &upper, &rhs)?;
    let mut g = vec![0.0; n + 1];
    g[first..].copy_from_slice(&sol);
    for v in g.iter_mut() {
        if *v < 0.0 {
            // Round-off far in the tail.
            *v = 0.0;
        }
    }

    // Tail beyond s_max continues as g_n e^{-m (x - x_n)}.
    let trap: f64 = g.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
    let mut normalization = trap + g[n] / m_top;
    if absorbing.is_none() {
        let (b_lo, d_lo) = coeff(xs[0]);
        if let Some(l) = local_growth(b_lo, d_lo, kill[0]) {
            normalization += g[0] / l;
        }
    }

    // Flux balance: killed mass plus boundary outflows against injection.
    let killed: f64 = (0..n)
        .map(|i| 0.5 * (kill[i] * g[i] + kill[i + 1] * g[i + 1]) * dx)
        .sum::<f64>()
        + kill[n] * g[n] / m_top;
    let u: Vec<f64> = g.iter().zip(&diff_node).map(|(g, d)| g * d).collect();
    let lower_out = if absorbing.is_some() {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
    } else {
        0.0
    };
    let (b_hi, _) = coeff(xs[n]);
    let du_top = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * dx);
    let upper_out = (b_hi * g[n] - du_top).max(0.0);
    let injected: f64 = source.iter().sum();
    let flux_residual = if absorbing.is_some() {
        Some(((killed + lower_out + upper_out) - injected).abs() / injected)
    } else {
        None
    };

    let density: Vec<f64> = g.iter().zip(&sizes).map(|(g, s)| g / s).collect();
    let fit = fit_top_decade(&sizes, &density);
    Ok(DensitySolution {
        grid: sizes,
        density,
        tail_exponent: asymptotic_tail_exponent(spec, birth, exit).ok(),
        normalization,
        fit,
        flux_residual,
    })
}

/// Tridiagonal solve (Thomas algorithm).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularSystem("zero pivot in row 0".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SingularSystem(format!("zero pivot in row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(x)
}
