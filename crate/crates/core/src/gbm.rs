//! Simulation of firm-size diffusions and closed-form facts about geometric
//! Brownian motion.
//!
//! GBM is always advanced exactly in log space. Euler–Maruyama is only used
//! for the `ConstantVolatility` and `Custom` kinds; omega-transformed
//! processes are advanced exactly in their latent coordinate.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{DiffusionSpec, GibratParams};

/// A realized path `S(t)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub params: DiffusionSpec,
}

impl PathSample {
    /// Writes `t,s` CSV, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,s")?;
        for (t, s) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Exact GBM update `s exp(a dt + sigma sqrt(dt) z)`.
#[inline]
pub fn gbm_step(s: f64, params: GibratParams, dt: f64, z: f64) -> f64 {
    s * (params.log_drift() * dt + params.sigma * dt.sqrt() * z).exp()
}

/// One step of any diffusion kind driven by the normal variate `z`.
///
/// The result is not floored; see [`advance`] for the positivity policy.
pub fn generic_step(s: f64, spec: &DiffusionSpec, dt: f64, z: f64) -> Result<f64> {
    let next = match *spec {
        DiffusionSpec::GBM(p) => gbm_step(s, p, dt, z),
        DiffusionSpec::OmegaTransform { base, omega } => {
            let y = omega.inverse(s).ok_or_else(|| {
                Error::NonFiniteState(format!("size {s} below the omega lower limit"))
            })?;
            omega.eval(y + base.log_drift() * dt + base.sigma * dt.sqrt() * z)
        }
        DiffusionSpec::ConstantVolatility { .. } | DiffusionSpec::Custom { .. } => {
            s + spec.drift(s) * dt + spec.vol(s) * dt.sqrt() * z
        }
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFiniteState(format!(
            "step from size {s} produced {next}"
        )))
    }
}

/// Advances one step, enforcing positive sizes for Euler–Maruyama kinds.
///
/// A non-positive Euler result is clamped to `s_min` when an exit level
/// exists (the exit module then absorbs the firm); otherwise the step is
/// redrawn as two half steps. Omega-transformed sizes at or below the floor
/// are left unchanged.
pub fn advance<R: Rng + ?Sized>(
    s: f64,
    spec: &DiffusionSpec,
    dt: f64,
    s_min: Option<f64>,
    rng: &mut R,
) -> Result<f64> {
    let z: f64 = rng.sample(StandardNormal);
    if let DiffusionSpec::OmegaTransform { omega, .. } = spec {
        // At or below the floor the latent coordinate is -infinity and the
        // size stays put (e.g. a spin-off fragment cut below the floor).
        if s <= omega.lower_limit() {
            return Ok(s);
        }
    }
    advance_with(s, spec, dt, z, s_min, rng, 0)
}

fn advance_with<R: Rng + ?Sized>(
    s: f64,
    spec: &DiffusionSpec,
    dt: f64,
    z: f64,
    s_min: Option<f64>,
    rng: &mut R,
    depth: u32,
) -> Result<f64> {
    let next = generic_step(s, spec, dt, z)?;
    if next > 0.0
        || matches!(
            spec,
            DiffusionSpec::GBM(_) | DiffusionSpec::OmegaTransform { .. }
        )
    {
        return Ok(next);
    }
    if let Some(level) = s_min {
        return Ok(level);
    }
    if depth >= 40 {
        return Err(Error::NonFiniteState(format!(
            "could not keep size positive from {s} after step halving"
        )));
    }
    let half = 0.5 * dt;
    let z1: f64 = rng.sample(StandardNormal);
    let mid = advance_with(s, spec, half, z1, s_min, rng, depth + 1)?;
    let z2: f64 = rng.sample(StandardNormal);
    advance_with(mid, spec, half, z2, s_min, rng, depth + 1)
}

/// Simulates `steps` steps of size `dt` from `s0`.
///
/// GBM paths are stored as `s0 * exp(L_t)` with `L_t` the accumulated log
/// increment, so rescaling `s0` rescales the whole path.
pub fn simulate_path<R: Rng + ?Sized>(
    s0: f64,
    spec: &DiffusionSpec,
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> Result<PathSample> {
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    values.push(s0);
    match *spec {
        DiffusionSpec::GBM(p) => {
            let a = p.log_drift();
            let vol = p.sigma * dt.sqrt();
            let mut log_inc = 0.0;
            for i in 1..=steps {
                let z: f64 = rng.sample(StandardNormal);
                log_inc += a * dt + vol * z;
                times.push(i as f64 * dt);
                values.push(s0 * log_inc.exp());
            }
        }
        _ => {
            let mut s = s0;
            for i in 1..=steps {
                s = advance(s, spec, dt, None, rng)?;
                times.push(i as f64 * dt);
                values.push(s);
            }
        }
    }
    Ok(PathSample {
        times,
        values,
        params: *spec,
    })
}

/// Density of `S(t)` started at `s0` (log-normal).
pub fn lognormal_pdf(s: f64, t: f64, s0: f64, params: GibratParams) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let var = params.sigma * params.sigma * t;
    let dev = (s / s0).ln() - params.log_drift() * t;
    (-(dev * dev) / (2.0 * var)).exp() / (s * (2.0 * PI * var).sqrt())
}

pub fn lognormal_cdf(s: f64, t: f64, s0: f64, params: GibratParams) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let z = ((s / s0).ln() - params.log_drift() * t) / (params.sigma * t.sqrt());
    std_normal_cdf(z)
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

pub(crate) fn std_normal_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}

/// Size below which a fraction `q` of paths lies at time `t`.
pub fn quantile_curve(q: f64, t: f64, s0: f64, params: GibratParams) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {q} not in (0, 1)"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be >= 0")));
    }
    if t == 0.0 {
        return Ok(s0);
    }
    let zq = std_normal_quantile(q);
    Ok(s0 * (params.log_drift() * t + params.sigma * t.sqrt() * zq).exp())
}

/// Pareto exponent `2|a|/sigma^2` of the all-time maximum of a decaying GBM.
pub fn max_exponent(params: GibratParams) -> Result<f64> {
    let a = params.log_drift();
    if a >= 0.0 {
        return Err(Error::NotDecaying(a));
    }
    Ok(-2.0 * a / (params.sigma * params.sigma))
}

/// `Pr{ sup_t S(t) > s }` for a stochastically decaying GBM started at `s0`.
pub fn max_ccdf_decaying(s: f64, s0: f64, params: GibratParams) -> Result<f64> {
    let k = max_exponent(params)?;
    if s <= s0 {
        return Ok(1.0);
    }
    Ok((s0 / s).powf(k))
}

/// Samples the running maximum of a decaying GBM started at `s0`.
///
/// Within each step the maximum of the Brownian bridge between the two
/// endpoints is drawn exactly, so the result has no discretization bias.
/// The path is followed until it falls below `s0 * stop_ratio`; the overshoot
/// of the remaining path above that point is exponential with rate
/// `2|a|/sigma^2`, so it is drawn in one go and the stop costs no accuracy.
pub fn sample_path_maximum<R: Rng + ?Sized>(
    s0: f64,
    params: GibratParams,
    dt: f64,
    stop_ratio: f64,
    rng: &mut R,
) -> Result<f64> {
    let a = params.log_drift();
    if a >= 0.0 {
        return Err(Error::NotDecaying(a));
    }
    let stop = stop_ratio.ln();
    let var = params.sigma * params.sigma * dt;
    let vol = var.sqrt();
    let mut x = 0.0_f64;
    let mut best = 0.0_f64;
    while x > stop {
        let z: f64 = rng.sample(StandardNormal);
        let y = x + a * dt + vol * z;
        let u: f64 = 1.0 - rng.random::<f64>();
        let bridge_max = 0.5 * (x + y + ((y - x).powi(2) - 2.0 * var * u.ln()).sqrt());
        best = best.max(bridge_max);
        x = y;
    }
    let rate = -2.0 * a / (params.sigma * params.sigma);
    let u: f64 = 1.0 - rng.random::<f64>();
    best = best.max(x - u.ln() / rate);
    Ok(s0 * best.exp())
}

/// Reversed-and-rebased path `V(t) = s0 S(T - t) / S(T)`.
///
/// `V` starts at `s0` and its log-increments are those of `S` read backwards
/// with flipped sign, so for a GBM of log-drift `a` they have drift `-a`.
pub fn time_reversal_check(path: &PathSample) -> PathSample {
    let n = path.values.len();
    let s0 = path.values[0];
    let end = path.values[n - 1];
    let total = path.times[n - 1];
    let values = (0..n).map(|i| s0 * path.values[n - 1 - i] / end).collect();
    let times = path.times.iter().rev().map(|t| total - t).collect();
    PathSample {
        times,
        values,
        params: path.params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_stream, Omega, SizeFn};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gbm_step_examples() {
        let p = GibratParams::new(0.02, 0.2);
        assert_eq!(gbm_step(1.0, p, 3.7, 0.0), 1.0);
        let p = GibratParams::new(0.1, 0.2);
        assert!(close(
            gbm_step(2.0, p, 1.0, 0.0),
            2.0 * 0.08f64.exp(),
            1e-14
        ));
        assert!(close(gbm_step(2.0, p, 1.0, 0.0), 2.1666, 1e-4));
        let p = GibratParams::new(0.0, 0.2);
        assert!(close(gbm_step(1.0, p, 1.0, 1.0), 1.1972, 1e-4));
    }

    #[test]
    fn generic_step_examples() {
        let custom = DiffusionSpec::Custom {
            drift: SizeFn::Constant { value: 0.0 },
            vol: SizeFn::Constant { value: 3.0 },
        };
        assert_eq!(generic_step(5.0, &custom, 0.1, 0.0).unwrap(), 5.0);

        let omega = DiffusionSpec::OmegaTransform {
            base: GibratParams::from_log_drift(0.0, 0.2),
            omega: Omega::ShiftedExp {
                floor: 0.0,
                scale: 1.0,
            },
        };
        assert!(close(
            generic_step(1.0, &omega, 1.0, 1.0).unwrap(),
            1.2214,
            1e-4
        ));

        let cv = DiffusionSpec::ConstantVolatility {
            drift: 0.1,
            vol: 1.0,
        };
        assert!(close(
            generic_step(10.0, &cv, 0.01, 2.0).unwrap(),
            10.201,
            1e-12
        ));

        let gbm = DiffusionSpec::GBM(GibratParams::new(0.1, 0.2));
        assert_eq!(
            generic_step(2.0, &gbm, 1.0, 0.3).unwrap(),
            gbm_step(2.0, GibratParams::new(0.1, 0.2), 1.0, 0.3)
        );
    }

    #[test]
    fn generic_step_non_finite() {
        let custom = DiffusionSpec::Custom {
            drift: SizeFn::Power {
                coef: 1.0,
                exponent: 400.0,
            },
            vol: SizeFn::Constant { value: 1.0 },
        };
        assert!(matches!(
            generic_step(1e3, &custom, 1.0, 0.0),
            Err(Error::NonFiniteState(_))
        ));
    }

    #[test]
    fn euler_positivity_policy() {
        let cv = DiffusionSpec::ConstantVolatility {
            drift: -5.0,
            vol: 1.0,
        };
        let mut rng = derive_stream(1, 0, "test");
        // With an exit level the result is clamped onto it.
        assert_eq!(advance(0.1, &cv, 1.0, Some(0.05), &mut rng).unwrap(), 0.05);
        // Without one the step is refined until it stays positive.
        for _ in 0..200 {
            let s = advance(0.1, &cv, 0.5, None, &mut rng).unwrap();
            assert!(s > 0.0);
        }
    }

    #[test]
    fn lognormal_pdf_point_value() {
        let p = GibratParams::from_log_drift(0.0, 1.0);
        assert!(close(lognormal_pdf(1.0, 1.0, 1.0, p), 0.39894, 1e-5));
    }

    #[test]
    fn lognormal_median() {
        let p = GibratParams::new(0.07, 0.3);
        let t = 2.5;
        let m = 3.0 * (p.log_drift() * t).exp();
        assert!(close(lognormal_cdf(m, t, 3.0, p), 0.5, 1e-12));
    }

    #[test]
    fn quantile_examples() {
        let p = GibratParams::new(0.05, 0.3);
        assert!(close(
            quantile_curve(0.5, 2.0, 1.5, p).unwrap(),
            1.5 * (p.log_drift() * 2.0).exp(),
            1e-12
        ));
        assert_eq!(quantile_curve(0.9, 0.0, 1.5, p).unwrap(), 1.5);
        let p = GibratParams::from_log_drift(0.0, 0.2);
        assert!(close(
            quantile_curve(0.975, 4.0, 1.0, p).unwrap(),
            2.190184,
            1e-6
        ));
        assert!(quantile_curve(1.0, 1.0, 1.0, p).is_err());
    }

    #[test]
    fn max_ccdf_examples() {
        let p = GibratParams::from_log_drift(-0.04, 0.2);
        assert_eq!(max_ccdf_decaying(2.0, 2.0, p).unwrap(), 1.0);
        assert!(close(max_ccdf_decaying(10.0, 1.0, p).unwrap(), 0.01, 1e-12));
        let balanced = GibratParams::new(0.0, 0.3);
        assert!(close(
            max_ccdf_decaying(7.0, 1.0, balanced).unwrap(),
            1.0 / 7.0,
            1e-12
        ));
        assert!(matches!(
            max_ccdf_decaying(2.0, 1.0, GibratParams::new(0.1, 0.2)),
            Err(Error::NotDecaying(_))
        ));
    }

    #[test]
    fn reversal_of_constant_path() {
        let path = PathSample {
            times: vec![0.0, 1.0, 2.0],
            values: vec![3.0, 3.0, 3.0],
            params: DiffusionSpec::GBM(GibratParams::from_log_drift(0.0, 0.2)),
        };
        assert_eq!(time_reversal_check(&path), path);
    }

    #[test]
    fn reversal_identity() {
        let spec = DiffusionSpec::GBM(GibratParams::new(0.05, 0.3));
        let mut rng = derive_stream(3, 0, "path");
        let path = simulate_path(2.0, &spec, 0.1, 50, &mut rng).unwrap();
        let rev = time_reversal_check(&path);
        let n = path.values.len();
        let end = path.values[n - 1];
        assert_eq!(rev.values[0], 2.0);
        for i in 0..n {
            let lhs = rev.values[i] * end;
            let rhs = 2.0 * path.values[n - 1 - i];
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
        assert!(rev.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn path_csv_header() {
        let spec = DiffusionSpec::GBM(GibratParams::new(0.0, 0.2));
        let mut rng = derive_stream(3, 0, "path");
        let path = simulate_path(1.0, &spec, 0.5, 2, &mut rng).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,s");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,1");
    }

    proptest::proptest! {
        #[test]
        fn gbm_paths_scale_exactly(seed in 0u64..1000, pow in -4i32..5) {
            let spec = DiffusionSpec::GBM(GibratParams::new(0.03, 0.25));
            let lambda = 2f64.powi(pow);
            let a = simulate_path(1.7, &spec, 0.25, 40, &mut derive_stream(seed, 0, "g")).unwrap();
            let b = simulate_path(1.7 * lambda, &spec, 0.25, 40, &mut derive_stream(seed, 0, "g")).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                proptest::prop_assert_eq!(x * lambda, *y);
            }
        }

        #[test]
        fn gbm_paths_scale_for_any_factor(seed in 0u64..1000, lambda in 0.01f64..100.0) {
            let spec = DiffusionSpec::GBM(GibratParams::new(-0.01, 0.4));
            let a = simulate_path(1.0, &spec, 0.25, 40, &mut derive_stream(seed, 0, "g")).unwrap();
            let b = simulate_path(lambda, &spec, 0.25, 40, &mut derive_stream(seed, 0, "g")).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                proptest::prop_assert!((x * lambda - y).abs() <= 4.0 * f64::EPSILON * y);
            }
        }
    }
}
