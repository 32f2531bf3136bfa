//! Log-gamma random walk, its increment law, the series `Q` and the limiting endpoint pmf.

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::rng::{sample_inverse_gamma, RngStream};
use crate::special_fn::ModelParams;
use crate::stats::{ks_one_sample, KsResult};

/// Quadrature relative tolerance.
pub const QUAD_TOL: f64 = 1e-10;
/// Absolute tolerance of the increment CDF.
pub const CDF_TOL: f64 = 1e-12;
/// Lookahead window for the tail certificate of `Q`.
pub const Q_WINDOW: usize = 32;
/// Step cap for `q_partial`.
pub const Q_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSample {
    pub params: ModelParams,
    /// `S_0..=S_n`, `S_0 = 0`.
    pub values: Vec<f64>,
}

impl WalkSample {
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() <= 1
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn extend(&mut self, steps: usize, rng: &mut RngStream) -> Result<()> {
        let mut s = *self.values.last().unwrap();
        for _ in 0..steps {
            s += sample_increment(self.params, rng)?;
            self.values.push(s);
        }
        Ok(())
    }
}

/// One increment `log Y2 - log Y1`.
pub fn sample_increment(params: ModelParams, rng: &mut RngStream) -> Result<f64> {
    let y1 = rng.log_gamma_variate(params.theta + params.alpha)?;
    let y2 = rng.log_gamma_variate(params.theta - params.alpha)?;
    Ok(y2 - y1)
}

pub fn sample_walk(params: ModelParams, n: usize, rng: &mut RngStream) -> Result<WalkSample> {
    params.require_bound_phase()?;
    let mut w = WalkSample { params, values: Vec::with_capacity(n + 1) };
    w.values.push(0.0);
    w.extend(n, rng)?;
    Ok(w)
}

/// `abs_tol = None` means relative tolerance `QUAD_TOL`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: Option<f64>, what: &str) -> Result<f64> {
    let tol = match abs_tol {
        Some(t) => t,
        None => QUAD_TOL * double_exponential::integrate(&f, a, b, 1e-6).integral.abs().max(1e-300),
    };
    let out = double_exponential::integrate(&f, a, b, tol);
    if !out.integral.is_finite() || out.error_estimate > 10.0 * tol {
        return Err(Error::Numeric(format!(
            "{what}: quadrature did not converge on [{a}, {b}] (estimate {}, error {:e}, {} evaluations)",
            out.integral, out.error_estimate, out.num_function_evaluations
        )));
    }
    Ok(out.integral)
}

/// `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Increment density from its `y`-integral representation.
pub fn increment_density(params: ModelParams, x: f64) -> Result<f64> {
    params.require_bound_phase()?;
    let ModelParams { theta, alpha } = params;
    // exponent: 2 theta y - e^{y + ln(1 + e^{-x})} - (theta + alpha) x, peaked at y*
    let log_c = softplus(-x);
    let y_star = (2.0 * theta).ln() - log_c;
    let peak = 2.0 * theta * y_star - 2.0 * theta - (theta + alpha) * x;
    let f = |y: f64| (2.0 * theta * y - (y + log_c).exp() - (theta + alpha) * x - peak).exp();
    let lo = y_star - 50.0 / (2.0 * theta);
    let hi = y_star + (25.0 / theta + 10.0).ln();
    let integral = integrate(f, lo, hi, None, "increment density")?;
    Ok((peak + integral.ln() - ln_gamma(theta + alpha) - ln_gamma(theta - alpha)).exp())
}

/// Increment CDF, integrating the density in `x` under the `y`-integral.
pub fn increment_cdf(params: ModelParams, x: f64) -> Result<f64> {
    params.require_bound_phase()?;
    let ModelParams { theta, alpha } = params;
    let (a, b) = (theta + alpha, theta - alpha);
    let norm = ln_gamma(b);
    let f = |y: f64| {
        let t = (y - x).exp();
        let q = if t > 1e6 { 0.0 } else { gamma_ur(a, t) };
        (b * y - y.exp() - norm).exp() * q
    };
    let mode = b.ln();
    let lo = mode - 60.0 / b;
    let hi = mode + (30.0 / b + 10.0).ln() + 3.0;
    // unit panels, with a break where the survival factor switches off (y = x)
    let mut knots: Vec<f64> = (0..).map(|k| lo + k as f64).take_while(|&t| t < hi).collect();
    knots.push(hi);
    if x > lo && x < hi {
        knots.push(x);
        knots.sort_by(f64::total_cmp);
    }
    let panel_tol = CDF_TOL / knots.len() as f64;
    let mut v = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            v += integrate(&f, w[0], w[1], Some(panel_tol), "increment cdf")?;
        }
    }
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSeries {
    /// `Q_0..=Q_M`.
    pub partial: Vec<f64>,
    pub tail_bound: f64,
    pub converged: bool,
}

impl QSeries {
    pub fn m(&self) -> usize {
        self.partial.len() - 1
    }

    pub fn value(&self) -> f64 {
        *self.partial.last().unwrap()
    }
}

/// Accumulates `Q_M = sum_{p <= M} e^{-S_p}`, extending the walk, until the tail
/// `e^{-S_M} / (e^{tau/2} - 1)` is below `epsilon` and the walk stays above the
/// half-drift line over the next `Q_WINDOW` steps.
pub fn q_partial(params: ModelParams, walk: &mut WalkSample, epsilon: f64, rng: &mut RngStream) -> Result<QSeries> {
    params.require_bound_phase()?;
    if !(epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let tau = params.constants()?.tau;
    let geom = 1.0 / ((tau / 2.0).exp() - 1.0);
    let mut partial = vec![1.0];
    let mut m = 0;
    loop {
        if walk.len() < m + Q_WINDOW {
            walk.extend(m + Q_WINDOW - walk.len(), rng)?;
        }
        let s = &walk.values;
        let tail_bound = (-s[m]).exp() * geom;
        if tail_bound <= epsilon && (1..=Q_WINDOW).all(|j| s[m + j] >= s[m] + 0.5 * tau * j as f64) {
            return Ok(QSeries { partial, tail_bound, converged: true });
        }
        if m >= Q_CAP {
            return Ok(QSeries { partial, tail_bound, converged: false });
        }
        m += 1;
        let q = partial[m - 1] + (-s[m]).exp();
        partial.push(q);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitingPmf {
    /// `Q^{-1} e^{-S_r}` for `r = 0..=kmax`.
    pub probs: Vec<f64>,
    pub q: f64,
    /// Bound on the mass missing from `Q` itself.
    pub q_tail_bound: f64,
}

pub fn limiting_endpoint_pmf(
    params: ModelParams,
    walk: &mut WalkSample,
    kmax: usize,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<LimitingPmf> {
    let qs = q_partial(params, walk, epsilon, rng)?;
    if !qs.converged {
        return Err(Error::Numeric(format!(
            "Q series not certified after {} steps (tail bound {:e})",
            qs.m(),
            qs.tail_bound
        )));
    }
    if walk.len() < kmax {
        walk.extend(kmax - walk.len(), rng)?;
    }
    let q = qs.value();
    let probs = (0..=kmax).map(|r| (-walk.values[r]).exp() / q).collect();
    Ok(LimitingPmf { probs, q, q_tail_bound: qs.tail_bound })
}

/// Fresh walk and its limiting pmf.
pub fn sample_limiting_pmf(params: ModelParams, kmax: usize, epsilon: f64, rng: &mut RngStream) -> Result<LimitingPmf> {
    let mut w = sample_walk(params, kmax.max(1), rng)?;
    limiting_endpoint_pmf(params, &mut w, kmax, epsilon, rng)
}

/// Draws of `Q R_0` with `R_0 ~ Gamma^{-1}(theta - alpha)` and their KS test against
/// `Gamma^{-1}(-2 alpha)`.
pub fn qr0_identity(params: ModelParams, samples: usize, rng: &mut RngStream) -> Result<(Vec<f64>, KsResult)> {
    params.require_bound_phase()?;
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut w = sample_walk(params, Q_WINDOW, rng)?;
        let qs = q_partial(params, &mut w, 1e-12, rng)?;
        if !qs.converged {
            return Err(Error::Numeric("Q series not certified".into()));
        }
        draws.push(qs.value() * sample_inverse_gamma(params.theta - params.alpha, rng)?);
    }
    let shape = -2.0 * params.alpha;
    let ks = ks_one_sample(&draws, |x| if x <= 0.0 { 0.0 } else { gamma_ur(shape, 1.0 / x) })?;
    Ok((draws, ks))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub steps: usize,
    pub empirical: f64,
    pub bound: f64,
    pub mc_error: f64,
    pub passed: bool,
}

/// Bound `M sqrt(N) gamma / lambda^2` with `gamma` the increment variance.
pub fn maximal_bound(params: ModelParams, m: f64, n: usize, lambda: f64) -> Result<f64> {
    Ok(m * (n as f64).sqrt() * params.constants()?.walk_var / (lambda * lambda))
}

/// Empirical `P(min_{k <= M sqrt N} S_k <= -lambda)` against the maximal-inequality bound.
pub fn maximal_inequality_check(
    params: ModelParams,
    m: f64,
    n: usize,
    lambda: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<MaximalReport> {
    if !(m > 0.0 && lambda > 0.0 && n > 0 && samples > 0) {
        return Err(Error::Domain("maximal inequality check needs positive arguments".into()));
    }
    let steps = (m * (n as f64).sqrt()).floor() as usize;
    let mut hits = 0usize;
    for _ in 0..samples {
        let w = sample_walk(params, steps, rng)?;
        hits += usize::from(w.values.iter().any(|&s| s <= -lambda));
    }
    let empirical = hits as f64 / samples as f64;
    let bound = maximal_bound(params, m, n, lambda)?;
    let mc_error = (empirical * (1.0 - empirical) / samples as f64).sqrt().max(1.0 / samples as f64);
    Ok(MaximalReport { steps, empirical, bound, mc_error, passed: empirical <= bound + 3.0 * mc_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitRow {
    pub n: usize,
    pub k: usize,
    pub mean_ratio: f64,
    pub frac_below_005: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitReport {
    pub rows: Vec<DoubleLimitRow>,
    pub pathwise_monotone: bool,
}

/// `sum_{r=k}^{n} e^{-S_r} / sum_{r=0}^{n} e^{-S_r}` over sampled walks.
pub fn double_limit_check(
    params: ModelParams,
    k_grid: &[usize],
    n_grid: &[usize],
    samples: usize,
    rng: &mut RngStream,
) -> Result<DoubleLimitReport> {
    if k_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("grids must be increasing".into()));
    }
    let mut rows = Vec::new();
    let mut pathwise_monotone = true;
    for &n in n_grid {
        let mut sums = vec![0.0; k_grid.len()];
        let mut below = vec![0usize; k_grid.len()];
        for _ in 0..samples {
            let w = sample_walk(params, n, rng)?;
            let e: Vec<f64> = w.values.iter().map(|s| (-s).exp()).collect();
            // suffix sums
            let mut suffix = vec![0.0; n + 2];
            for r in (0..=n).rev() {
                suffix[r] = suffix[r + 1] + e[r];
            }
            let mut prev = f64::INFINITY;
            for (c, &k) in k_grid.iter().enumerate() {
                let ratio = if k > n { 0.0 } else { suffix[k] / suffix[0] };
                pathwise_monotone &= ratio <= prev;
                prev = ratio;
                sums[c] += ratio;
                below[c] += usize::from(ratio < 0.05);
            }
        }
        for (c, &k) in k_grid.iter().enumerate() {
            rows.push(DoubleLimitRow {
                n,
                k,
                mean_ratio: sums[c] / samples as f64,
                frac_below_005: below[c] as f64 / samples as f64,
            });
        }
    }
    Ok(DoubleLimitReport { rows, pathwise_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta_reg;

    fn params() -> ModelParams {
        ModelParams::new(1.0, -0.5).unwrap()
    }

    // log of a beta-prime variable: closed form
    fn density_oracle(p: ModelParams, x: f64) -> f64 {
        let (a, b) = (p.theta + p.alpha, p.theta - p.alpha);
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) - a * x - (a + b) * softplus(-x)).exp()
    }

    #[test]
    fn density_matches_closed_form() {
        for p in [params(), ModelParams::new(0.7, -0.2).unwrap(), ModelParams::new(2.5, -1.9).unwrap()] {
            for x in [-20.0, -3.0, -0.5, 0.0, 0.4, 2.0, 7.0, 30.0] {
                let d = increment_density(p, x).unwrap();
                assert!((d - density_oracle(p, x)).abs() < 1e-10, "{p:?} {x} {d}");
            }
        }
    }

    #[test]
    fn cdf_matches_beta_oracle() {
        let p = params();
        for x in [-8.0, -1.0, 0.0, 1.3, 5.0, 15.0] {
            let s = 1.0 / (1.0 + (-x as f64).exp());
            let oracle = beta_reg(p.theta - p.alpha, p.theta + p.alpha, s);
            assert!((increment_cdf(p, x).unwrap() - oracle).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn walk_starts_at_zero() {
        let mut rng = RngStream::new(1, 1);
        let w = sample_walk(params(), 10, &mut rng).unwrap();
        assert_eq!(w.values[0], 0.0);
        assert_eq!(w.len(), 10);
        assert!(sample_walk(ModelParams::new(1.0, 0.2).unwrap(), 3, &mut rng).is_err());
    }

    #[test]
    fn q_series_properties() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let mut w = sample_walk(params(), 1, &mut rng).unwrap();
            let q = q_partial(params(), &mut w, 1e-10, &mut rng).unwrap();
            assert_eq!(q.partial[0], 1.0);
            assert!(q.converged && q.tail_bound <= 1e-10);
            assert!(q.partial.windows(2).all(|v| v[1] >= v[0]));
        }
    }

    #[test]
    fn limiting_pmf_accounting() {
        let mut rng = RngStream::new(6, 0);
        let pmf = sample_limiting_pmf(params(), 5, 1e-12, &mut rng).unwrap();
        assert!((pmf.probs[0] - 1.0 / pmf.q).abs() < 1e-15);
        assert!(pmf.probs.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn maximal_bound_arithmetic() {
        let p = params();
        let gamma = p.constants().unwrap().walk_var;
        assert!((maximal_bound(p, 2.0, 64, 10.0).unwrap() - 16.0 * gamma / 100.0).abs() < 1e-15);
        let mut rng = RngStream::new(7, 0);
        let r = maximal_inequality_check(p, 1.0, 100, 1e6, 200, &mut rng).unwrap();
        assert_eq!(r.empirical, 0.0);
    }

    #[test]
    fn double_limit_first_column_is_one() {
        let mut rng = RngStream::new(8, 0);
        let r = double_limit_check(params(), &[0, 5, 20], &[200], 300, &mut rng).unwrap();
        assert_eq!(r.rows[0].mean_ratio, 1.0);
        assert!(r.pathwise_monotone);
        assert!(r.rows[2].frac_below_005 >= 0.95);
    }
}
