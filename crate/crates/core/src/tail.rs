//! Tail-index estimation for size samples: Hill estimator, rank-size
//! regression and the empirical CCDF.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMethod {
    Hill,
    RankSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// KS distance between the exceedances and the fitted Pareto law.
    pub ks: f64,
    /// R^2 of the log-log rank-size regression over the same top `k`.
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub method: TailMethod,
    pub m_hat: f64,
    pub stderr: f64,
    pub k: usize,
    pub threshold: f64,
    pub diagnostics: TailDiagnostics,
}

/// `ceil(n^0.6)` capped at `n / 10`, never below 2.
pub fn default_k(n: usize) -> usize {
    let k = (n as f64).powf(0.6).ceil() as usize;
    k.min(n / 10).max(2)
}

/// Sorts descending; equal values keep their input order.
fn sorted_desc(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn check_sample(sample: &[f64], k: usize, min_k: usize) -> Result<()> {
    if k < min_k || sample.len() <= k {
        return Err(Error::InvalidArgument(format!(
            "need n > k >= {min_k}, got n = {}, k = {k}",
            sample.len()
        )));
    }
    if let Some(bad) = sample.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "sizes must be positive and finite, got {bad}"
        )));
    }
    Ok(())
}

/// Least-squares fit `y = intercept + slope x`; returns `(slope, intercept, r^2)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, my - slope * mx, r2)
}

fn rank_size_r2(top: &[f64]) -> f64 {
    let x: Vec<f64> = top.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = (1..=top.len()).map(|r| (r as f64 - 0.5).ln()).collect();
    ols(&x, &y).2
}

/// KS distance between the values above `threshold` and a Pareto law with
/// index `m` starting at `threshold`.
fn pareto_ks(top_desc: &[f64], threshold: f64, m: f64) -> f64 {
    let mut asc: Vec<f64> = top_desc.to_vec();
    asc.reverse();
    ks_statistic(&asc, |x| 1.0 - (threshold / x).powf(m))
}

/// One-sample Kolmogorov–Smirnov distance; `sorted` must be ascending.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - f).abs();
        d.max(lo).max(hi)
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS distance at significance `alpha`
/// (asymptotic formula).
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Hill estimator over the `k` largest order statistics.
pub fn hill(sample: &[f64], k: usize) -> Result<TailFit> {
    check_sample(sample, k, 2)?;
    let desc = sorted_desc(sample);
    hill_sorted(&desc, k)
}

fn hill_sorted(desc: &[f64], k: usize) -> Result<TailFit> {
    let threshold = desc[k];
    let sum: f64 = desc[..k].iter().map(|s| (s / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateSample(
            "top k+1 values are all equal".into(),
        ));
    }
    let m_hat = k as f64 / sum;
    let top = &desc[..k];
    Ok(TailFit {
        method: TailMethod::Hill,
        m_hat,
        stderr: m_hat / (k as f64).sqrt(),
        k,
        threshold,
        diagnostics: TailDiagnostics {
            ks: pareto_ks(top, threshold, m_hat),
            r_squared: rank_size_r2(top),
        },
    })
}

/// Hill estimates for each `k` in `ks` (a stability sweep).
pub fn hill_sweep(sample: &[f64], ks: &[usize]) -> Vec<(usize, Result<TailFit>)> {
    let desc = sorted_desc(sample);
    ks.iter()
        .map(|&k| {
            let fit = check_sample(sample, k, 2).and_then(|_| hill_sorted(&desc, k));
            (k, fit)
        })
        .collect()
}

/// Rank-size regression of `ln(rank - 1/2)` on `ln size` over the top `k`.
pub fn rank_size(sample: &[f64], k: usize) -> Result<TailFit> {
    check_sample(sample, k, 3)?;
    let desc = sorted_desc(sample);
    let top = &desc[..k];
    if top[0] == top[k - 1] {
        return Err(Error::DegenerateSample("top k values are all equal".into()));
    }
    let x: Vec<f64> = top.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = (1..=k).map(|r| (r as f64 - 0.5).ln()).collect();
    let (slope, _, r2) = ols(&x, &y);
    let m_hat = -slope;
    let threshold = desc[k - 1];
    Ok(TailFit {
        method: TailMethod::RankSize,
        m_hat,
        stderr: m_hat * (2.0 / k as f64).sqrt(),
        k,
        threshold,
        diagnostics: TailDiagnostics {
            ks: if m_hat > 0.0 {
                pareto_ks(top, desc[k], m_hat)
            } else {
                1.0
            },
            r_squared: r2,
        },
    })
}

/// Empirical CCDF `P(s) = #{S_i > s} / n` at each distinct sample value,
/// in increasing order of `s`.
pub fn ccdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut asc = sample.to_vec();
    asc.sort_by(f64::total_cmp);
    let n = asc.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < asc.len() {
        let s = asc[i];
        let mut j = i;
        while j < asc.len() && asc[j] == s {
            j += 1;
        }
        out.push((s, (asc.len() - j) as f64 / n));
        i = j;
    }
    out
}

pub fn write_ccdf_csv<W: Write>(points: &[(f64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "s,ccdf")?;
    for (s, p) in points {
        writeln!(w, "{s},{p}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_stream;
    use rand::Rng;

    #[test]
    fn hill_hand_example() {
        let fit = hill(&[8.0, 4.0, 2.0, 1.0], 3).unwrap();
        let expected = 3.0 / 64f64.ln();
        assert!((fit.m_hat - expected).abs() < 1e-15);
        assert!((fit.m_hat - 0.7213).abs() < 1e-4);
        assert_eq!(fit.threshold, 1.0);
        assert!((fit.stderr - expected / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hill_exact_zipf() {
        let n = 10_000;
        let s: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
        let fit = hill(&s, n - 1).unwrap();
        assert!((fit.m_hat - 1.0).abs() < 0.05, "{}", fit.m_hat);
    }

    #[test]
    fn hill_degenerate_and_invalid() {
        assert!(matches!(
            hill(&[2.0, 2.0, 2.0, 1.0], 2),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            hill(&[2.0, 1.0], 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            hill(&[2.0, 1.0, 0.0, 3.0], 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rank_size_exact_laws() {
        let k = 1000;
        let zipf: Vec<f64> = (1..=k + 1).map(|r| 7.0 / r as f64).collect();
        let fit = rank_size(&zipf, k).unwrap();
        // The half-rank shift leaves a ~1.2% bias on noise-free Zipf data.
        assert!(
            (fit.m_hat - 1.012146428210877).abs() < 1e-9,
            "{}",
            fit.m_hat
        );
        let sq: Vec<f64> = (1..=k + 1).map(|r| 7.0 / (r as f64).powi(2)).collect();
        let fit = rank_size(&sq, k).unwrap();
        assert!((fit.m_hat - 0.5).abs() < 0.01, "{}", fit.m_hat);
        assert!((fit.stderr - fit.m_hat * (2.0 / k as f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ccdf_examples() {
        assert_eq!(
            ccdf(&[4.0, 1.0, 2.0]),
            vec![(1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0), (4.0, 0.0)]
        );
        assert_eq!(ccdf(&[3.0, 3.0, 3.0]), vec![(3.0, 0.0)]);
        assert_eq!(
            ccdf(&[1.0, 2.0, 2.0, 5.0]),
            vec![(1.0, 0.75), (2.0, 0.25), (5.0, 0.0)]
        );
    }

    #[test]
    fn default_k_rule() {
        assert_eq!(default_k(100_000), 1000);
        assert_eq!(default_k(100), 10);
        assert_eq!(default_k(10), 2);
    }

    #[test]
    fn pareto_ccdf_slope() {
        let mut rng = derive_stream(11, 0, "pareto");
        let s: Vec<f64> = (0..100_000)
            .map(|_| 1.0 / (1.0 - rng.random::<f64>()))
            .collect();
        let pts: Vec<(f64, f64)> = ccdf(&s)
            .into_iter()
            .filter(|(x, p)| *x > 2.0 && *p > 1e-3)
            .collect();
        let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (slope, _, _) = ols(&x, &y);
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn ks_two_sample_identical() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn scale_equivariance(seed in 0u64..500, lambda in 0.001f64..1000.0) {
            let mut rng = derive_stream(seed, 0, "p");
            let s: Vec<f64> = (0..500).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.3)).collect();
            let scaled: Vec<f64> = s.iter().map(|x| x * lambda).collect();
            let (a, b) = (hill(&s, 50).unwrap(), hill(&scaled, 50).unwrap());
            proptest::prop_assert!((a.m_hat - b.m_hat).abs() <= 1e-9 * a.m_hat);
            let (a, b) = (rank_size(&s, 50).unwrap(), rank_size(&scaled, 50).unwrap());
            proptest::prop_assert!((a.m_hat - b.m_hat).abs() <= 1e-9 * a.m_hat);
        }

        #[test]
        fn hill_permutation_invariant(seed in 0u64..500) {
            let mut rng = derive_stream(seed, 0, "p");
            let s: Vec<f64> = (0..300).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0)).collect();
            let mut t = s.clone();
            t.reverse();
            t.rotate_left(seed as usize % 300);
            proptest::prop_assert_eq!(hill(&s, 30).unwrap().m_hat, hill(&t, 30).unwrap().m_hat);
        }

        #[test]
        fn ccdf_monotone_bounded(v in proptest::collection::vec(0.001f64..1e6, 1..300)) {
            let c = ccdf(&v);
            proptest::prop_assert!(c.iter().all(|(_, p)| (0.0..=1.0).contains(p)));
            proptest::prop_assert!(c.windows(2).all(|w| w[0].1 >= w[1].1 && w[0].0 < w[1].0));
            proptest::prop_assert_eq!(c.last().unwrap().1, 0.0);
        }
    }
}
