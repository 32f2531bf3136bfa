//! Oracles shared by the integration tests. Nothing here calls into the library's
//! numerical code: paths are enumerated directly, exact sums use plain big integers,
//! and closed forms come from statrs.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, ln_gamma};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upright paths from (1,1) to (m,k) whose sites satisfy `allowed`.
pub fn paths_to(m: usize, k: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        cur: (usize, usize),
        target: (usize, usize),
        allowed: &dyn Fn(usize, usize) -> bool,
        acc: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if !allowed(cur.0, cur.1) {
            return;
        }
        acc.push(cur);
        if cur == target {
            out.push(acc.clone());
        } else {
            if cur.0 < target.0 {
                go((cur.0 + 1, cur.1), target, allowed, acc, out);
            }
            if cur.1 < target.1 {
                go((cur.0, cur.1 + 1), target, allowed, acc, out);
            }
        }
        acc.pop();
    }
    let mut out = Vec::new();
    go((1, 1), (m, k), allowed, &mut Vec::new(), &mut out);
    out
}

/// Confined paths (j <= i) from (1,1) to (m,k).
pub fn confined_paths(m: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    paths_to(m, k, &|i, j| j <= i)
}

/// Exact value `mant * 2^exp`.
#[derive(Clone, Debug)]
pub struct Exact {
    pub mant: BigInt,
    pub exp: i64,
}

impl Exact {
    pub fn zero() -> Exact {
        Exact { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Exact {
        Exact { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_f64(x: f64) -> Exact {
        assert!(x.is_finite() && x > 0.0);
        let bits = x.to_bits();
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 { (frac, -1074) } else { (frac | (1u64 << 52), e - 1075) };
        Exact { mant: BigInt::from(m), exp: e }
    }

    pub fn mul(&self, o: &Exact) -> Exact {
        Exact { mant: &self.mant * &o.mant, exp: self.exp + o.exp }
    }

    pub fn add(&self, o: &Exact) -> Exact {
        if self.mant.is_zero() {
            return o.clone();
        }
        if o.mant.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &o.mant << (o.exp - e) as usize;
        Exact { mant: a + b, exp: e }
    }

    pub fn half(&self) -> Exact {
        Exact { mant: self.mant.clone(), exp: self.exp - 1 }
    }

    /// Same text form as the library's normalized exact values.
    pub fn render(&self) -> String {
        let mut m = self.mant.clone();
        let mut e = self.exp;
        if m.is_zero() {
            return "0*2^0".into();
        }
        let two = BigInt::from(2);
        while (&m % &two).is_zero() {
            m /= &two;
            e += 1;
        }
        format!("{m}*2^{e}")
    }
}

/// Exact sum over paths of the product of `w` along each path.
pub fn exact_path_sum(paths: &[Vec<(usize, usize)>], w: &dyn Fn(usize, usize) -> Exact) -> Exact {
    paths.iter().fold(Exact::zero(), |acc, p| {
        let prod = p.iter().fold(Exact::one(), |a, &(i, j)| a.mul(&w(i, j)));
        acc.add(&prod)
    })
}

/// Float sum over paths of the product of `w`.
pub fn float_path_sum(paths: &[Vec<(usize, usize)>], w: &dyn Fn(usize, usize) -> f64) -> f64 {
    paths.iter().map(|p| p.iter().map(|&(i, j)| w(i, j)).product::<f64>()).sum()
}

/// Symmetrized weight from wedge weights: reflection off the diagonal, half on it.
pub fn sym_weight(w: &dyn Fn(usize, usize) -> f64, i: usize, j: usize) -> f64 {
    match i.cmp(&j) {
        std::cmp::Ordering::Greater => w(i, j),
        std::cmp::Ordering::Less => w(j, i),
        std::cmp::Ordering::Equal => w(i, i) / 2.0,
    }
}

/// Digamma by direct summation of `-gamma + sum_k (1/(k+1) - 1/(k+z))` with an
/// Euler-Maclaurin tail.
pub fn digamma_series(z: f64) -> f64 {
    let k_max = 20_000usize;
    let mut s = -EULER_GAMMA;
    for k in 0..k_max {
        let k = k as f64;
        s += 1.0 / (k + 1.0) - 1.0 / (k + z);
    }
    let (a, b) = (k_max as f64 + 1.0, k_max as f64 + z);
    let g = 1.0 / a - 1.0 / b;
    let g1 = -1.0 / (a * a) + 1.0 / (b * b);
    let g3 = -6.0 / a.powi(4) + 6.0 / b.powi(4);
    s + (b / a).ln() + g / 2.0 - g1 / 12.0 + g3 / 720.0
}

/// Trigamma by summation of `sum_k 1/(k+z)^2` with an Euler-Maclaurin tail.
pub fn trigamma_series(z: f64) -> f64 {
    let k_max = 20_000usize;
    let mut s = 0.0;
    for k in (0..k_max).rev() {
        s += 1.0 / (k as f64 + z).powi(2);
    }
    let x = k_max as f64 + z;
    s + 1.0 / x + 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x.powi(3)) - 1.0 / (30.0 * x.powi(5))
}

/// Closed-form increment density.
pub fn increment_density(theta: f64, alpha: f64, x: f64) -> f64 {
    let (a, b) = (theta + alpha, theta - alpha);
    let log_c = ln_gamma(2.0 * theta) - ln_gamma(a) - ln_gamma(b);
    // (1 + e^{-x})^{-2 theta} e^{-a x}
    let soft = if x > 0.0 { (-x).exp().ln_1p() } else { -x + x.exp().ln_1p() };
    (log_c - a * x - 2.0 * theta * soft).exp()
}

/// Increment CDF: `X = log(G_b / G_a)`, so `P(X <= x)` is a regularized incomplete beta.
pub fn increment_cdf(theta: f64, alpha: f64, x: f64) -> f64 {
    let (a, b) = (theta + alpha, theta - alpha);
    beta_reg(b, a, 1.0 / (1.0 + (-x).exp()))
}

/// CDF of `log G` for `G ~ Gamma(shape, 1)`.
pub fn log_gamma_cdf(shape: f64, t: f64) -> f64 {
    if t > 700.0 {
        return 1.0;
    }
    gamma_lr(shape, t.exp())
}

/// CDF of the inverse gamma law with shape `beta`.
pub fn inverse_gamma_cdf(beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_ur(beta, 1.0 / x)
}

/// Composite Simpson rule.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Sup distance between the empirical CDF of `x` and `cdf`.
pub fn ks_distance(x: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &t)| {
        let f = cdf(t);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic KS critical value at level 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

/// Upright paths between two sites in the quadrant.
pub fn paths_between(from: (usize, usize), to: (usize, usize)) -> Vec<Vec<(usize, usize)>> {
    if to.0 < from.0 || to.1 < from.1 {
        return Vec::new();
    }
    let shifted = paths_to(to.0 - from.0 + 1, to.1 - from.1 + 1, &|_, _| true);
    shifted.into_iter().map(|p| p.into_iter().map(|(i, j)| (i + from.0 - 1, j + from.1 - 1)).collect()).collect()
}

/// Vertex-disjoint tuples with path `a` running `starts[a] -> ends[a]`.
pub fn disjoint_families(starts: &[(usize, usize)], ends: &[(usize, usize)]) -> Vec<Vec<Vec<(usize, usize)>>> {
    let choices: Vec<_> = starts.iter().zip(ends).map(|(&s, &e)| paths_between(s, e)).collect();
    let mut out = Vec::new();
    let mut cur: Vec<Vec<(usize, usize)>> = Vec::new();
    fn go(
        k: usize,
        choices: &[Vec<Vec<(usize, usize)>>],
        cur: &mut Vec<Vec<(usize, usize)>>,
        out: &mut Vec<Vec<Vec<(usize, usize)>>>,
    ) {
        if k == choices.len() {
            out.push(cur.clone());
            return;
        }
        for p in &choices[k] {
            if cur.iter().all(|q| q.iter().all(|s| !p.contains(s))) {
                cur.push(p.clone());
                go(k + 1, choices, cur, out);
                cur.pop();
            }
        }
    }
    go(0, &choices, &mut cur, &mut out);
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of upright paths between two sites.
pub fn path_count(from: (usize, usize), to: (usize, usize)) -> u64 {
    if to.0 < from.0 || to.1 < from.1 {
        return 0;
    }
    let (a, b) = ((to.0 - from.0) as u64, (to.1 - from.1) as u64);
    binomial(a + b, a)
}

/// Reduced configurations for each experiment, for determinism and schema checks.
pub fn small_configs(seed: u64) -> Vec<(hslg_lab::experiments::ExperimentKind, hslg_lab::experiments::ExperimentConfig)> {
    use hslg_lab::environment::Flavor;
    use hslg_lab::experiments::{ExperimentConfig, ExperimentKind as K};
    let p = hslg_lab::special_fn::ModelParams::new(1.0, -0.5).unwrap();
    let mut out = Vec::new();
    for (kind, flavor) in [
        (K::Pinning, Flavor::Standard),
        (K::Walk, Flavor::Stationary),
        (K::Walk, Flavor::Standard),
        (K::Quenched, Flavor::Standard),
        (K::Fluct, Flavor::Standard),
        (K::Lln, Flavor::Standard),
    ] {
        let mut c = ExperimentConfig::defaults(kind, p, flavor, seed);
        c.sizes = vec![12, 16];
        c.samples = 40;
        c.reference_samples = 500;
        c.ensemble_sizes = vec![4, 6];
        c.ensemble_samples = 10;
        if kind == K::Walk && flavor == Flavor::Stationary {
            c.sizes = vec![12];
        }
        out.push((kind, c));
    }
    out
}
