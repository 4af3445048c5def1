//! Shared domain types, configuration validation and the seeding policy.
//!
//! Units: time in years, sizes in an arbitrary asset-value unit, every rate
//! per year. All stochastic modules draw their randomness from streams
//! obtained through [`derive_stream`], so every output is a pure function of
//! the configuration and its seed.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ma::MAKernel;

/// Continuous Gibrat law: `dS = mu S dt + sigma S dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibratParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GibratParams {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    /// Parameters with a prescribed log-drift `a = mu - sigma^2/2`.
    pub fn from_log_drift(a: f64, sigma: f64) -> Self {
        Self {
            mu: a + 0.5 * sigma * sigma,
            sigma,
        }
    }

    /// Drift of `ln S`.
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }
}

/// A scalar function of firm size, given as a closed-form descriptor so that
/// configurations stay serializable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum SizeFn {
    /// `value`
    Constant { value: f64 },
    /// `intercept + slope * s`
    Affine { intercept: f64, slope: f64 },
    /// `scale * sqrt(s^2 + crossover^2)`: roughly constant below the
    /// crossover, proportional to `s` above it.
    Hyperbolic { scale: f64, crossover: f64 },
    /// `coef * s^exponent`
    Power { coef: f64, exponent: f64 },
}

impl SizeFn {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            SizeFn::Constant { value } => value,
            SizeFn::Affine { intercept, slope } => intercept + slope * s,
            SizeFn::Hyperbolic { scale, crossover } => scale * s.hypot(crossover),
            SizeFn::Power { coef, exponent } => coef * s.powf(exponent),
        }
    }

    /// `lim f(s)/s` as `s -> infinity`; infinite for super-linear growth.
    pub fn asymptotic_slope(&self) -> f64 {
        match *self {
            SizeFn::Constant { .. } => 0.0,
            SizeFn::Affine { slope, .. } => slope,
            SizeFn::Hyperbolic { scale, .. } => scale,
            SizeFn::Power { coef, exponent } => {
                if exponent < 1.0 || coef == 0.0 {
                    0.0
                } else if exponent == 1.0 {
                    coef
                } else {
                    coef.signum() * f64::INFINITY
                }
            }
        }
    }

    fn params_finite(&self) -> bool {
        match *self {
            SizeFn::Constant { value } => value.is_finite(),
            SizeFn::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            SizeFn::Hyperbolic { scale, crossover } => scale.is_finite() && crossover.is_finite(),
            SizeFn::Power { coef, exponent } => coef.is_finite() && exponent.is_finite(),
        }
    }
}

/// Monotone map from a latent Brownian coordinate `y` to firm size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum Omega {
    /// `floor + scale * e^y`; tends to `floor` as `y -> -infinity`.
    ShiftedExp { floor: f64, scale: f64 },
}

impl Omega {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Omega::ShiftedExp { floor, scale } => floor + scale * y.exp(),
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        match *self {
            Omega::ShiftedExp { scale, .. } => scale * y.exp(),
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        match *self {
            Omega::ShiftedExp { scale, .. } => scale * y.exp(),
        }
    }

    /// Latent coordinate of size `s`; `None` at or below the lower limit.
    pub fn inverse(&self, s: f64) -> Option<f64> {
        match *self {
            Omega::ShiftedExp { floor, scale } => {
                if s > floor {
                    Some(((s - floor) / scale).ln())
                } else {
                    None
                }
            }
        }
    }

    pub fn lower_limit(&self) -> f64 {
        match *self {
            Omega::ShiftedExp { floor, .. } => floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum DiffusionSpec {
    /// Geometric Brownian motion, advanced exactly in log space.
    GBM(GibratParams),
    /// `dS = drift dt + vol dW` with absolute (size-independent) coefficients.
    ConstantVolatility { drift: f64, vol: f64 },
    /// `S = omega(Y)` with `Y` a Brownian motion of drift `base.log_drift()`
    /// and volatility `base.sigma`.
    OmegaTransform { base: GibratParams, omega: Omega },
    /// `dS = drift(S) dt + vol(S) dW`.
    Custom { drift: SizeFn, vol: SizeFn },
}

impl DiffusionSpec {
    /// Drift of `S` in size units per year.
    pub fn drift(&self, s: f64) -> f64 {
        match *self {
            DiffusionSpec::GBM(p) => p.mu * s,
            DiffusionSpec::ConstantVolatility { drift, .. } => drift,
            DiffusionSpec::OmegaTransform { base, omega } => match omega.inverse(s) {
                Some(y) => {
                    base.log_drift() * omega.d1(y) + 0.5 * base.sigma * base.sigma * omega.d2(y)
                }
                None => 0.0,
            },
            DiffusionSpec::Custom { drift, .. } => drift.eval(s),
        }
    }

    /// Volatility of `S` in size units per sqrt-year.
    pub fn vol(&self, s: f64) -> f64 {
        match *self {
            DiffusionSpec::GBM(p) => p.sigma * s,
            DiffusionSpec::ConstantVolatility { vol, .. } => vol,
            DiffusionSpec::OmegaTransform { base, omega } => match omega.inverse(s) {
                Some(y) => base.sigma * omega.d1(y),
                None => 0.0,
            },
            DiffusionSpec::Custom { vol, .. } => vol.eval(s),
        }
    }

    /// Lowest size the process can reach.
    pub fn lower_limit(&self) -> f64 {
        match *self {
            DiffusionSpec::GBM(_) => 0.0,
            DiffusionSpec::OmegaTransform { omega, .. } => omega.lower_limit(),
            DiffusionSpec::ConstantVolatility { .. } | DiffusionSpec::Custom { .. } => 0.0,
        }
    }

    /// Coordinate in which one step is exactly Gaussian, with its volatility.
    /// Only GBM and omega kinds have one.
    pub fn gaussian_coordinate(&self, s: f64) -> Option<(f64, f64)> {
        match *self {
            DiffusionSpec::GBM(p) => Some((s.ln(), p.sigma)),
            DiffusionSpec::OmegaTransform { base, omega } => {
                omega.inverse(s).map(|y| (y, base.sigma))
            }
            _ => None,
        }
    }

    /// Proportional drift and volatility as `s -> infinity`:
    /// `(lim drift(s)/s, lim vol(s)/s)`.
    pub fn asymptotic_gibrat(&self) -> (f64, f64) {
        match *self {
            DiffusionSpec::GBM(p) => (p.mu, p.sigma),
            DiffusionSpec::ConstantVolatility { .. } => (0.0, 0.0),
            DiffusionSpec::OmegaTransform { base, .. } => (base.mu, base.sigma),
            DiffusionSpec::Custom { drift, vol } => {
                (drift.asymptotic_slope(), vol.asymptotic_slope())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum BirthKind {
    Constant {
        nu0: f64,
    },
    /// `nu(t) = nu0 e^{d t}`
    Exponential {
        nu0: f64,
        d: f64,
    },
    /// `nu(t) = kappa W(t)` with `W` the total value of live firms.
    Coupled {
        kappa: f64,
    },
}

impl BirthKind {
    /// Growth rate `d` of the birth intensity (zero unless exponential).
    pub fn growth_rate(&self) -> f64 {
        match *self {
            BirthKind::Exponential { d, .. } => d,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum EntrySizeLaw {
    PointMass { s0: f64 },
    LogNormal { median: f64, log_sd: f64 },
}

impl EntrySizeLaw {
    /// Point mass location or lognormal median.
    pub fn typical_size(&self) -> f64 {
        match *self {
            EntrySizeLaw::PointMass { s0 } => s0,
            EntrySizeLaw::LogNormal { median, .. } => median,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthLaw {
    pub kind: BirthKind,
    pub entry_size_law: EntrySizeLaw,
}

/// Bounded non-negative rate as a function of size or age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum RateFn {
    Constant {
        rate: f64,
    },
    /// `below` for `x <= threshold`, `above` otherwise.
    Step {
        threshold: f64,
        below: f64,
        above: f64,
    },
    /// `max * x / (x + half)`
    Saturating {
        max: f64,
        half: f64,
    },
}

impl RateFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RateFn::Constant { rate } => rate,
            RateFn::Step {
                threshold,
                below,
                above,
            } => {
                if x > threshold {
                    above
                } else {
                    below
                }
            }
            RateFn::Saturating { max, half } => max * x / (x + half),
        }
    }

    /// Upper bound over `x >= 0`.
    pub fn bound(&self) -> f64 {
        match *self {
            RateFn::Constant { rate } => rate,
            RateFn::Step { below, above, .. } => below.max(above),
            RateFn::Saturating { max, .. } => max,
        }
    }

    fn check(&self, field: &str, out: &mut Vec<Violation>) {
        let ok = match *self {
            RateFn::Constant { rate } => rate >= 0.0 && rate.is_finite(),
            RateFn::Step {
                threshold,
                below,
                above,
            } => {
                threshold.is_finite()
                    && below >= 0.0
                    && above >= 0.0
                    && below.is_finite()
                    && above.is_finite()
            }
            RateFn::Saturating { max, half } => {
                max >= 0.0 && max.is_finite() && half > 0.0 && half.is_finite()
            }
        };
        if !ok {
            out.push(Violation::new(
                field,
                "hazard rates must be >= 0 and bounded",
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub enum Hazard {
    #[default]
    None,
    Constant {
        h: f64,
    },
    SizeDependent(RateFn),
    AgeDependent(RateFn),
}

impl Hazard {
    pub fn rate(&self, size: f64, age: f64) -> f64 {
        match *self {
            Hazard::None => 0.0,
            Hazard::Constant { h } => h,
            Hazard::SizeDependent(f) => f.eval(size),
            Hazard::AgeDependent(f) => f.eval(age),
        }
    }

    /// Upper bound `H_max` used for thinning.
    pub fn bound(&self) -> f64 {
        match *self {
            Hazard::None => 0.0,
            Hazard::Constant { h } => h,
            Hazard::SizeDependent(f) | Hazard::AgeDependent(f) => f.bound(),
        }
    }

    /// Rate if it is the same for every firm.
    pub fn constant_rate(&self) -> Option<f64> {
        match *self {
            Hazard::None => Some(0.0),
            Hazard::Constant { h } => Some(h),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExitLaw {
    /// Absorbing minimum asset level.
    pub s_min: Option<f64>,
    #[serde(default)]
    pub hazard: Hazard,
}

/// When the simulator records size snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum SnapshotPlan {
    /// `count` instants geometrically spaced from `horizon / 1000` to `horizon`.
    Geometric {
        count: usize,
    },
    Times(Vec<f64>),
}

impl Default for SnapshotPlan {
    fn default() -> Self {
        SnapshotPlan::Geometric { count: 16 }
    }
}

impl SnapshotPlan {
    pub fn instants(&self, horizon: f64) -> Vec<f64> {
        match self {
            SnapshotPlan::Geometric { count } => match *count {
                0 => Vec::new(),
                1 => vec![horizon],
                n => {
                    let start = horizon / 1000.0;
                    let ratio = (horizon / start).powf(1.0 / (n - 1) as f64);
                    (0..n)
                        .map(|i| {
                            if i + 1 == n {
                                horizon
                            } else {
                                start * ratio.powi(i as i32)
                            }
                        })
                        .collect()
                }
            },
            SnapshotPlan::Times(t) => t.clone(),
        }
    }
}

fn default_max_live() -> usize {
    10_000_000
}

fn default_birth_cap() -> f64 {
    1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyConfig {
    pub diffusion: DiffusionSpec,
    pub birth: BirthLaw,
    pub exit: ExitLaw,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub replicas: usize,
    /// Sizes of the firms alive at t = 0.
    #[serde(default)]
    pub initial_sizes: Vec<f64>,
    #[serde(default)]
    pub snapshots: SnapshotPlan,
    #[serde(default)]
    pub ma: MAKernel,
    #[serde(default = "default_max_live")]
    pub max_live: usize,
    /// Cap on the expected number of births over the horizon.
    #[serde(default = "default_birth_cap")]
    pub birth_cap: f64,
}

impl Default for EconomyConfig {
    /// Balanced Zipf economy: `mu = 0`, `sigma = 0.2`, `s0 / s_min = 100`,
    /// no sudden deaths, horizon of ten mean lifespans.
    fn default() -> Self {
        Self {
            diffusion: DiffusionSpec::GBM(GibratParams::new(0.0, 0.2)),
            birth: BirthLaw {
                kind: BirthKind::Constant { nu0: 100.0 },
                entry_size_law: EntrySizeLaw::PointMass { s0: 100.0 },
            },
            exit: ExitLaw {
                s_min: Some(1.0),
                hazard: Hazard::None,
            },
            horizon: 2303.0,
            dt: 1.0,
            seed: 42,
            replicas: 1,
            initial_sizes: Vec::new(),
            snapshots: SnapshotPlan::default(),
            ma: MAKernel::default(),
            max_live: default_max_live(),
            birth_cap: default_birth_cap(),
        }
    }
}

impl EconomyConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A broken configuration rule, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: &str, rule: &str) -> Self {
        Self {
            field: field.to_string(),
            rule: rule.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

/// Checks every type invariant of the configuration. Never panics.
pub fn validate(config: &EconomyConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let s_min = config.exit.s_min;

    match config.diffusion {
        DiffusionSpec::GBM(p) => check_gibrat("diffusion.GBM", p, &mut out),
        DiffusionSpec::ConstantVolatility { drift, vol } => {
            if !drift.is_finite() {
                out.push(Violation::new(
                    "diffusion.ConstantVolatility.drift",
                    "drift must be finite",
                ));
            }
            if !positive(vol) {
                out.push(Violation::new(
                    "diffusion.ConstantVolatility.vol",
                    "vol must be > 0",
                ));
            }
        }
        DiffusionSpec::OmegaTransform { base, omega } => {
            check_gibrat("diffusion.OmegaTransform.base", base, &mut out);
            let Omega::ShiftedExp { floor, scale } = omega;
            if !positive(scale) {
                out.push(Violation::new(
                    "diffusion.OmegaTransform.omega.scale",
                    "scale must be > 0",
                ));
            }
            if !(floor >= 0.0 && floor.is_finite()) {
                out.push(Violation::new(
                    "diffusion.OmegaTransform.omega.floor",
                    "floor must be >= 0",
                ));
            }
        }
        DiffusionSpec::Custom { drift, vol } => {
            if !drift.params_finite() {
                out.push(Violation::new(
                    "diffusion.Custom.drift",
                    "drift parameters must be finite",
                ));
            }
            if !vol.params_finite() {
                out.push(Violation::new(
                    "diffusion.Custom.vol",
                    "vol parameters must be finite",
                ));
            } else {
                // Probe the admissible range on a log grid.
                let lo = s_min.filter(|s| *s > 0.0).unwrap_or(1e-6);
                let ok = (0..=60).all(|i| {
                    let s = lo * 10f64.powf(i as f64 * 0.25);
                    vol.eval(s) > 0.0
                });
                if !ok {
                    out.push(Violation::new(
                        "diffusion.Custom.vol",
                        "vol must be > 0 on the admissible range",
                    ));
                }
            }
        }
    }

    match config.birth.kind {
        BirthKind::Constant { nu0 } => {
            if !positive(nu0) {
                out.push(Violation::new("birth.kind.Constant.nu0", "nu0 must be > 0"));
            }
        }
        BirthKind::Exponential { nu0, d } => {
            if !positive(nu0) {
                out.push(Violation::new(
                    "birth.kind.Exponential.nu0",
                    "nu0 must be > 0",
                ));
            }
            if !d.is_finite() {
                out.push(Violation::new(
                    "birth.kind.Exponential.d",
                    "d must be finite",
                ));
            }
        }
        BirthKind::Coupled { kappa } => {
            if !(kappa >= 0.0 && kappa.is_finite()) {
                out.push(Violation::new(
                    "birth.kind.Coupled.kappa",
                    "kappa must be >= 0",
                ));
            }
        }
    }

    let entry = config.birth.entry_size_law;
    match entry {
        EntrySizeLaw::PointMass { s0 } => {
            if !positive(s0) {
                out.push(Violation::new(
                    "birth.entry_size_law.s0",
                    "entry size must be > 0",
                ));
            }
        }
        EntrySizeLaw::LogNormal { median, log_sd } => {
            if !positive(median) {
                out.push(Violation::new(
                    "birth.entry_size_law.median",
                    "entry size must be > 0",
                ));
            }
            if !(log_sd >= 0.0 && log_sd.is_finite()) {
                out.push(Violation::new(
                    "birth.entry_size_law.log_sd",
                    "log_sd must be >= 0",
                ));
            }
        }
    }

    if let Some(s_min) = s_min {
        if !(s_min >= 0.0 && s_min.is_finite()) {
            out.push(Violation::new("exit.s_min", "s_min must be >= 0"));
        } else if !(entry.typical_size() > s_min) {
            out.push(Violation::new(
                "birth.entry_size_law",
                "entry size below exit level",
            ));
        }
    }
    if let DiffusionSpec::OmegaTransform { omega, .. } = config.diffusion {
        if !(entry.typical_size() > omega.lower_limit()) {
            out.push(Violation::new(
                "birth.entry_size_law",
                "entry size below the omega floor",
            ));
        }
    }

    match config.exit.hazard {
        Hazard::None => {}
        Hazard::Constant { h } => {
            if !(h >= 0.0 && h.is_finite()) {
                out.push(Violation::new(
                    "exit.hazard.Constant.h",
                    "hazard rates must be >= 0 and bounded",
                ));
            }
        }
        Hazard::SizeDependent(f) => f.check("exit.hazard.SizeDependent", &mut out),
        Hazard::AgeDependent(f) => f.check("exit.hazard.AgeDependent", &mut out),
    }

    if !positive(config.dt) {
        out.push(Violation::new("dt", "dt must be > 0"));
    }
    if !(config.horizon.is_finite() && config.horizon >= config.dt) {
        out.push(Violation::new("horizon", "horizon must be >= dt"));
    }
    if config.replicas < 1 {
        out.push(Violation::new("replicas", "replicas must be >= 1"));
    }
    if config.initial_sizes.iter().any(|s| !positive(*s)) {
        out.push(Violation::new("initial_sizes", "initial sizes must be > 0"));
    } else if let Some(s_min) = s_min {
        if config.initial_sizes.iter().any(|s| *s <= s_min) {
            out.push(Violation::new(
                "initial_sizes",
                "initial sizes must exceed the exit level",
            ));
        }
    }
    if let SnapshotPlan::Times(t) = &config.snapshots {
        if t.iter().any(|x| !(*x >= 0.0 && *x <= config.horizon)) {
            out.push(Violation::new(
                "snapshots",
                "snapshot times must lie in [0, horizon]",
            ));
        }
    }
    config.ma.check(&mut out);
    if config.max_live < 1 {
        out.push(Violation::new("max_live", "max_live must be >= 1"));
    }
    if !(config.birth_cap > 0.0) {
        out.push(Violation::new("birth_cap", "birth_cap must be > 0"));
    }
    out
}

fn check_gibrat(prefix: &str, p: GibratParams, out: &mut Vec<Violation>) {
    if !positive(p.sigma) {
        out.push(Violation::new(
            &format!("{prefix}.sigma"),
            "sigma must be > 0",
        ));
    }
    if !p.mu.is_finite() {
        out.push(Violation::new(&format!("{prefix}.mu"), "mu must be finite"));
    }
}

pub type RngStream = ChaCha8Rng;

/// Deterministic random stream keyed by `(seed, replica, purpose)`.
///
/// The seed fixes the ChaCha key; `(replica, purpose)` select the stream
/// number, so streams never overlap and do not depend on scheduling.
pub fn derive_stream(seed: u64, replica: u64, purpose: &str) -> RngStream {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut s = fnv1a(purpose.as_bytes()) ^ replica.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    rng.set_stream(splitmix64(&mut s));
    rng
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitCause {
    Absorbed,
    SuddenDeath,
    Merged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub id: u64,
    pub size: f64,
    pub birth_time: f64,
    pub age: f64,
    pub alive: bool,
    pub exit_cause: Option<ExitCause>,
    /// Size at the start of the step in progress, for crossing detection.
    pub prev_size: f64,
}

impl Firm {
    pub fn new(id: u64, size: f64, birth_time: f64) -> Self {
        Self {
            id,
            size,
            birth_time,
            age: 0.0,
            alive: true,
            exit_cause: None,
            prev_size: size,
        }
    }
}

/// Live firms at one instant plus cumulative flow counters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    pub time: f64,
    pub firms: Vec<Firm>,
    pub total_value: f64,
    pub born_count: u64,
    pub absorbed_count: u64,
    pub sudden_death_count: u64,
    pub merged_count: u64,
    pub spinoff_count: u64,
    next_id: u64,
}

impl Population {
    pub fn new(time: f64) -> Self {
        Self {
            time,
            ..Self::default()
        }
    }

    /// Adds a newborn firm, assigning the next id in birth order.
    pub fn add_firm(&mut self, size: f64, birth_time: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.firms.push(Firm::new(id, size, birth_time));
        self.total_value += size;
        id
    }

    /// Reserves an id without inserting a firm (spin-off children).
    pub(crate) fn allocate_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn live_count(&self) -> usize {
        self.firms.len()
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.firms.iter().map(|f| f.size).collect()
    }

    /// Sum of live sizes recomputed from scratch.
    pub fn recompute_total(&self) -> f64 {
        self.firms.iter().map(|f| f.size).sum()
    }

    pub fn refresh_total(&mut self) {
        self.total_value = self.recompute_total();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn default_config_is_valid() {
        assert!(validate(&EconomyConfig::default()).is_empty());
    }

    #[test]
    fn zero_sigma_is_reported() {
        let c = EconomyConfig {
            diffusion: DiffusionSpec::GBM(GibratParams::new(0.0, 0.0)),
            ..EconomyConfig::default()
        };
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "sigma must be > 0");
        assert_eq!(v[0].field, "diffusion.GBM.sigma");
    }

    #[test]
    fn entry_below_exit_level() {
        let mut c = EconomyConfig::default();
        c.birth.entry_size_law = EntrySizeLaw::PointMass { s0: 0.5 };
        c.exit.s_min = Some(1.0);
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "entry size below exit level");
    }

    #[test]
    fn nan_fields_do_not_panic() {
        let mut c = EconomyConfig {
            diffusion: DiffusionSpec::GBM(GibratParams::new(f64::NAN, f64::NAN)),
            dt: f64::NAN,
            horizon: f64::NAN,
            ..EconomyConfig::default()
        };
        c.exit.s_min = Some(f64::NAN);
        let v = validate(&c);
        assert!(v.len() >= 4);
    }

    #[test]
    fn log_drift() {
        let p = GibratParams::new(0.1, 0.2);
        assert!((p.log_drift() - 0.08).abs() < 1e-15);
        let q = GibratParams::from_log_drift(-0.04, 0.2);
        assert!((q.mu - -0.02).abs() < 1e-15);
    }

    #[test]
    fn streams_are_deterministic_and_separated() {
        let draw = |seed, rep, purpose| {
            let mut r = derive_stream(seed, rep, purpose);
            (0..100).map(|_| r.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, 0, "growth"), draw(42, 0, "growth"));
        assert_ne!(draw(42, 0, "growth"), draw(42, 1, "growth"));
        assert_ne!(draw(42, 0, "growth"), draw(42, 0, "births"));
        assert_ne!(draw(42, 0, "growth"), draw(43, 0, "growth"));
    }

    #[test]
    fn config_json_round_trip_and_unknown_keys() {
        let c = EconomyConfig::default();
        let back = EconomyConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);

        let mut v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        v["horizn"] = serde_json::json!(10.0);
        assert!(serde_json::from_value::<EconomyConfig>(v).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        v["diffusion"]["GBM"]["sgima"] = serde_json::json!(0.1);
        assert!(serde_json::from_value::<EconomyConfig>(v).is_err());
    }

    #[test]
    fn geometric_snapshots_end_at_horizon() {
        let t = SnapshotPlan::Geometric { count: 5 }.instants(1000.0);
        assert_eq!(t.len(), 5);
        assert!((t[0] - 1.0).abs() < 1e-12);
        assert_eq!(*t.last().unwrap(), 1000.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn omega_induced_coefficients() {
        let spec = DiffusionSpec::OmegaTransform {
            base: GibratParams::new(0.05, 0.2),
            omega: Omega::ShiftedExp {
                floor: 1.0,
                scale: 1.0,
            },
        };
        // S - floor is a GBM with mu = 0.05, sigma = 0.2.
        assert!((spec.drift(3.0) - 0.05 * 2.0).abs() < 1e-12);
        assert!((spec.vol(3.0) - 0.2 * 2.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn validate_is_total(mu in proptest::num::f64::ANY, sigma in proptest::num::f64::ANY,
                             dt in proptest::num::f64::ANY, s_min in proptest::num::f64::ANY,
                             nu in proptest::num::f64::ANY) {
            let mut c = EconomyConfig {
                diffusion: DiffusionSpec::GBM(GibratParams::new(mu, sigma)),
                dt,
                ..EconomyConfig::default()
            };
            c.exit.s_min = Some(s_min);
            c.birth.kind = BirthKind::Constant { nu0: nu };
            let _ = validate(&c);
        }
    }
}
