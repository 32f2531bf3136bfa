//! Goodness-of-fit tests, quantiles and bootstrap intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MIN_KS_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("NaN in sample".into()));
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    ks_one_sample_try(x, |t| Ok(cdf(t)))
}

/// As [`ks_one_sample`] with a fallible CDF.
pub fn ks_one_sample_try(x: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<KsResult> {
    if x.len() < MIN_KS_SAMPLES {
        return Err(Error::Domain(format!("KS needs at least {MIN_KS_SAMPLES} samples, got {}", x.len())));
    }
    let v = sorted(x)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in v.iter().enumerate() {
        let f = cdf(xi)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { d, p: ks_p(d, n) })
}

/// Two-sample KS statistic.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.len() < MIN_KS_SAMPLES || y.len() < MIN_KS_SAMPLES {
        return Err(Error::Domain(format!(
            "KS needs at least {MIN_KS_SAMPLES} samples per side, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let a = sorted(x)?;
    let b = sorted(y)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsResult { d, p: ks_p(d, n * m / (n + m)) })
}

/// Pearson chi-square p-value for observed counts against expected counts.
/// `dof_reduction` is subtracted from `bins - 1`.
pub fn chi_square(observed: &[f64], expected: &[f64], dof_reduction: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 + dof_reduction {
        return Err(Error::Domain("chi-square needs matching bins".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| if *e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let dof = (observed.len() - 1 - dof_reduction) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let v = sorted(x).unwrap_or_default();
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Percentile bootstrap interval for `stat`; the interval is widened to contain the
/// point estimate.
pub fn bootstrap(x: &[f64], stat: impl Fn(&[f64]) -> f64, level: f64, rng: &mut RngStream) -> Estimate {
    let mut buf = vec![0.0; x.len()];
    bootstrap_indices(
        x.len(),
        |idx| {
            for (b, &i) in buf.iter_mut().zip(idx) {
                *b = x[i];
            }
            stat(&buf)
        },
        level,
        rng,
    )
}

/// Bootstrap over resampled index vectors, for statistics of paired data.
pub fn bootstrap_indices(len: usize, mut stat: impl FnMut(&[usize]) -> f64, level: f64, rng: &mut RngStream) -> Estimate {
    let ident: Vec<usize> = (0..len).collect();
    let value = stat(&ident);
    if len < 2 {
        return Estimate { value, lo: value, hi: value };
    }
    let mut idx = vec![0usize; len];
    let mut reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for i in idx.iter_mut() {
                *i = (rng.next_u64() % len as u64) as usize;
            }
            stat(&idx)
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Estimate { value, lo: quantile_sorted(&reps, a).min(value), hi: quantile_sorted(&reps, 1.0 - a).max(value) }
}

/// Sup distance of the empirical CDF to its bootstrap replicates, `level` quantile.
pub fn ecdf_band(x: &[f64], level: f64, rng: &mut RngStream) -> f64 {
    let v = sorted(x).unwrap_or_default();
    let n = v.len();
    if n == 0 {
        return 1.0;
    }
    let mut reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let mut b: Vec<f64> = (0..n).map(|_| v[(rng.next_u64() % n as u64) as usize]).collect();
            b.sort_by(f64::total_cmp);
            ks_two_sample(&v, &b).map(|r| r.d).unwrap_or(1.0)
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    quantile_sorted(&reps, level)
}

/// Empirical CDF of a sorted sample at `t`.
pub fn ecdf_sorted(v: &[f64], t: f64) -> f64 {
    v.partition_point(|&a| a <= t) as f64 / v.len() as f64
}
