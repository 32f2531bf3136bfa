//! Symmetrized multilayer partition functions, `V_q` profiles and the line ensemble.

use serde::{Deserialize, Serialize};

use crate::environment::SymmetrizedEnvironment;
use crate::error::{Error, Result};
use crate::exact::{determinant, Dyadic};
use crate::lattice::{non_intersecting_families, path_count, upright_paths, Site};
use crate::polymer::{log_add_exp, Mode};

/// Guard for exhaustive enumeration: product of single-path counts.
pub const BRUTE_FORCE_LIMIT: u128 = 5_000_000;
/// Hadamard ratio above which a float determinant is flagged.
pub const CANCELLATION_WARN: f64 = 1e8;

pub(crate) trait Ring: Clone {
    fn zero() -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
}

/// Positive real stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogReal(pub f64);

impl Ring for LogReal {
    fn zero() -> Self {
        LogReal(f64::NEG_INFINITY)
    }
    fn plus(&self, o: &Self) -> Self {
        LogReal(log_add_exp(self.0, o.0))
    }
    fn times(&self, o: &Self) -> Self {
        LogReal(self.0 + o.0)
    }
}

impl Ring for Dyadic {
    fn zero() -> Self {
        Dyadic::zero()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

/// Single-path sums from a fixed start over the triangle `i + j <= size`.
#[derive(Debug, Clone)]
pub(crate) struct Quadrant<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Ring> Quadrant<T> {
    fn build(size: usize, start: Site, avoid_diag: bool, w: &dyn Fn(usize, usize) -> T) -> Quadrant<T> {
        let stride = size + 1;
        let mut data = vec![T::zero(); stride * stride];
        for s in (start.0 + start.1)..=size {
            for i in start.0..s {
                let j = s - i;
                if j < start.1 {
                    continue;
                }
                if avoid_diag && i == j && (i, j) != start {
                    continue;
                }
                let v = if (i, j) == start {
                    w(i, j)
                } else {
                    let mut acc = T::zero();
                    if i > start.0 {
                        acc = acc.plus(&data[(i - 1) * stride + j]);
                    }
                    if j > start.1 {
                        acc = acc.plus(&data[i * stride + j - 1]);
                    }
                    w(i, j).times(&acc)
                };
                data[i * stride + j] = v;
            }
        }
        Quadrant { size, data }
    }

    fn get(&self, i: usize, j: usize) -> T {
        if i + j > self.size || i == 0 || j == 0 {
            return T::zero();
        }
        self.data[i * (self.size + 1) + j].clone()
    }
}

fn float_quadrant(senv: &SymmetrizedEnvironment, start: Site, avoid_diag: bool) -> Quadrant<LogReal> {
    Quadrant::build(senv.max_diag(), start, avoid_diag, &|i, j| LogReal(senv.w(i, j).ln()))
}

fn exact_quadrant(senv: &SymmetrizedEnvironment, start: Site, avoid_diag: bool) -> Result<Quadrant<Dyadic>> {
    senv.base.require_dyadic()?;
    Ok(Quadrant::build(senv.max_diag(), start, avoid_diag, &|i, j| {
        senv.w_exact(i, j).expect("dyadic environment checked above")
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilayerValue {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// `log Z_sym^(r)(m, n)`; `-inf` for an empty family.
    pub log_value: f64,
    #[serde(skip)]
    pub exact: Option<Dyadic>,
    /// Hadamard ratio of the float determinant.
    pub cancellation: Option<f64>,
    pub warning: Option<String>,
}

impl MultilayerValue {
    fn from_exact(m: usize, n: usize, r: usize, v: Dyadic) -> Self {
        let log_value = if v.is_zero() { f64::NEG_INFINITY } else { v.ln() };
        MultilayerValue { m, n, r, log_value, exact: Some(v), cancellation: None, warning: None }
    }

    fn from_log(m: usize, n: usize, r: usize, log_value: f64) -> Self {
        MultilayerValue { m, n, r, log_value, exact: None, cancellation: None, warning: None }
    }
}

fn check_target(senv: &SymmetrizedEnvironment, m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 || !senv.contains(m, n) {
        return Err(Error::Domain(format!(
            "endpoint ({m},{n}) outside the symmetrized environment (i + j <= {})",
            senv.max_diag()
        )));
    }
    Ok(())
}

/// Exhaustive sum over non-intersecting `r`-tuples `(1,r),...,(1,1) -> (m,n),...,(m,n-r+1)`.
pub fn zsym_multi_bruteforce(senv: &SymmetrizedEnvironment, m: usize, n: usize, r: usize) -> Result<MultilayerValue> {
    if r == 0 {
        return Ok(MultilayerValue::from_exact(m, n, 0, Dyadic::one()));
    }
    if n < r {
        return Err(Error::Domain(format!("need n >= r, got n={n}, r={r}")));
    }
    check_target(senv, m, n)?;
    let starts: Vec<Site> = (0..r).map(|a| (1, r - a)).collect();
    let ends: Vec<Site> = (0..r).map(|a| (m, n - a)).collect();
    let size: u128 = starts.iter().zip(&ends).map(|(&s, &e)| path_count(s, e)).product();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{size} candidate tuples for r={r} at ({m},{n}) exceeds {BRUTE_FORCE_LIMIT}"
        )));
    }
    let families = non_intersecting_families(&starts, &ends, BRUTE_FORCE_LIMIT as usize)?;
    if senv.base.require_dyadic().is_ok() {
        let mut total = Dyadic::zero();
        for fam in &families {
            let mut p = Dyadic::one();
            for path in fam {
                for &(i, j) in &path.sites {
                    p *= &senv.w_exact(i, j)?;
                }
            }
            total += &p;
        }
        Ok(MultilayerValue::from_exact(m, n, r, total))
    } else {
        let mut total = f64::NEG_INFINITY;
        for fam in &families {
            let lw: f64 = fam.iter().flat_map(|p| p.sites.iter()).map(|&(i, j)| senv.w(i, j).ln()).sum();
            total = log_add_exp(total, lw);
        }
        Ok(MultilayerValue::from_log(m, n, r, total))
    }
}

/// Single-path symmetrized partition function `Z_sym(m, n)` from (1,1).
pub fn zsym_single(senv: &SymmetrizedEnvironment, m: usize, n: usize, mode: Mode) -> Result<MultilayerValue> {
    zsym_multi_lgv(senv, m, n, 1, mode)
}

/// `Z_sym^(r)(m, n)` as an LGV determinant of single-path sums.
pub fn zsym_multi_lgv(
    senv: &SymmetrizedEnvironment,
    m: usize,
    n: usize,
    r: usize,
    mode: Mode,
) -> Result<MultilayerValue> {
    if r == 0 {
        return Ok(MultilayerValue::from_exact(m, n, 0, Dyadic::one()));
    }
    if n < r {
        return Err(Error::Domain(format!("need n >= r, got n={n}, r={r}")));
    }
    check_target(senv, m, n)?;
    match mode {
        Mode::Exact => {
            let quads = (1..=r).map(|a| exact_quadrant(senv, (1, a), false)).collect::<Result<Vec<_>>>()?;
            Ok(MultilayerValue::from_exact(m, n, r, lgv_exact(&quads, m, n, r)))
        }
        Mode::LogFloat => {
            let quads: Vec<_> = (1..=r).map(|a| float_quadrant(senv, (1, a), false)).collect();
            lgv_float(&quads, m, n, r)
        }
    }
}

/// `quads[a - 1]` starts at `(1, a)`.
fn lgv_exact(quads: &[Quadrant<Dyadic>], m: usize, n: usize, r: usize) -> Dyadic {
    let mat: Vec<Vec<Dyadic>> = (1..=r)
        .map(|a| (1..=r).map(|b| quads[r - a].get(m, n + 1 - b)).collect())
        .collect();
    determinant(&mat)
}

fn lgv_float(quads: &[Quadrant<LogReal>], m: usize, n: usize, r: usize) -> Result<MultilayerValue> {
    let logs: Vec<Vec<f64>> = (1..=r)
        .map(|a| (1..=r).map(|b| quads[r - a].get(m, n + 1 - b).0).collect())
        .collect();
    let (log_det, ratio) = log_det_row_scaled(&logs)?;
    let mut v = MultilayerValue::from_log(m, n, r, log_det);
    v.cancellation = Some(ratio);
    if ratio > CANCELLATION_WARN {
        v.warning = Some(format!(
            "float determinant lost about {:.0} digits at ({m},{n}), r={r}; use exact mode",
            ratio.log10()
        ));
    }
    Ok(v)
}

/// Log-determinant of a matrix given entrywise in log form, with rows scaled by their
/// maxima. Returns `(log det, Hadamard ratio)`.
pub fn log_det_row_scaled(logs: &[Vec<f64>]) -> Result<(f64, f64)> {
    let r = logs.len();
    let mut scale = 0.0;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(r);
    for row in logs {
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            return Err(Error::Conditioning("zero row in LGV matrix".into()));
        }
        scale += mx;
        a.push(row.iter().map(|x| (x - mx).exp()).collect());
    }
    let hadamard: f64 = a.iter().map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
    let mut det = 1.0;
    for k in 0..r {
        let p = (k..r).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[p][k] == 0.0 {
            det = 0.0;
            break;
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..r {
            let f = a[i][k] / a[k][k];
            for j in k..r {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    if !(det > 0.0) {
        return Err(Error::Conditioning(format!(
            "float determinant evaluated to {det:e} (Hadamard bound {hadamard:e}); use exact mode"
        )));
    }
    Ok((det.ln() + scale, hadamard / det))
}

/// Paths from (1,1) to an off-diagonal `(m, n)` that touch the diagonal only at (1,1).
pub fn zsym_diag_avoiding(senv: &SymmetrizedEnvironment, m: usize, n: usize, mode: Mode) -> Result<MultilayerValue> {
    if m == n {
        return Err(Error::Domain(format!("diagonal endpoint ({m},{n}) has no diagonal-avoiding paths")));
    }
    check_target(senv, m, n)?;
    match mode {
        Mode::Exact => Ok(MultilayerValue::from_exact(m, n, 1, exact_quadrant(senv, (1, 1), true)?.get(m, n))),
        Mode::LogFloat => Ok(MultilayerValue::from_log(m, n, 1, float_quadrant(senv, (1, 1), true).get(m, n).0)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqProfile {
    pub q: usize,
    pub log_v: f64,
    pub log_vtilde: f64,
    #[serde(skip)]
    pub v_exact: Option<Dyadic>,
    #[serde(skip)]
    pub vtilde_exact: Option<Dyadic>,
}

/// Precomputed single-path quadrants for repeated `V_q` queries.
pub struct VqTables<T> {
    full: Quadrant<T>,
    avoid: Quadrant<T>,
}

impl VqTables<LogReal> {
    fn profile(&self, q: usize) -> VqProfile {
        let mut v = f64::NEG_INFINITY;
        let mut vt = f64::NEG_INFINITY;
        for i in 1..q {
            let j = q - i;
            v = log_add_exp(v, self.full.get(i, j).0);
            if i != j {
                vt = log_add_exp(vt, self.avoid.get(i, j).0);
            }
        }
        VqProfile { q, log_v: v, log_vtilde: vt, v_exact: None, vtilde_exact: None }
    }
}

impl VqTables<Dyadic> {
    fn profile(&self, q: usize) -> VqProfile {
        let mut v = Dyadic::zero();
        let mut vt = Dyadic::zero();
        for i in 1..q {
            let j = q - i;
            v += &self.full.get(i, j);
            if i != j {
                vt += &self.avoid.get(i, j);
            }
        }
        let ln = |d: &Dyadic| if d.is_zero() { f64::NEG_INFINITY } else { d.ln() };
        VqProfile { q, log_v: ln(&v), log_vtilde: ln(&vt), v_exact: Some(v), vtilde_exact: Some(vt) }
    }
}

/// `V_q` and `V~_q` for every `q` in `2..=2n`.
pub fn vq_profiles(senv: &SymmetrizedEnvironment, mode: Mode) -> Result<Vec<VqProfile>> {
    let qmax = senv.max_diag();
    match mode {
        Mode::LogFloat => {
            let t = VqTables { full: float_quadrant(senv, (1, 1), false), avoid: float_quadrant(senv, (1, 1), true) };
            Ok((2..=qmax).map(|q| t.profile(q)).collect())
        }
        Mode::Exact => {
            let t = VqTables { full: exact_quadrant(senv, (1, 1), false)?, avoid: exact_quadrant(senv, (1, 1), true)? };
            Ok((2..=qmax).map(|q| t.profile(q)).collect())
        }
    }
}

pub fn vq_profile(senv: &SymmetrizedEnvironment, q: usize, mode: Mode) -> Result<VqProfile> {
    let qmax = senv.max_diag();
    if q < 2 || q > qmax {
        return Err(Error::Domain(format!("q must lie in 2..={qmax}, got {q}")));
    }
    Ok(vq_profiles(senv, mode)?.swap_remove(q - 2))
}

/// Curves `H_N^(k)(p)` for `k = 1..=kmax`, `p = 1..=2N-2k+2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEnsemble {
    pub n: usize,
    pub kmax: usize,
    /// `curves[k-1][p-1]`.
    pub curves: Vec<Vec<f64>>,
    /// Largest Hadamard ratio seen in float mode.
    pub max_cancellation: Option<f64>,
}

impl LineEnsemble {
    pub fn h(&self, k: usize, p: usize) -> f64 {
        self.curves[k - 1][p - 1]
    }

    pub fn curve_len(&self, k: usize) -> usize {
        self.curves[k - 1].len()
    }
}

/// Staircase site for index `p`: `(N + floor(p/2), N - ceil(p/2) + 1)`.
pub fn staircase(n: usize, p: usize) -> Site {
    (n + p / 2, n + 1 - p.div_ceil(2))
}

/// Line ensemble of a size-`n` polymer. Even indices sit on anti-diagonal `2n + 1`, so the
/// environment must have size at least `n + 1`.
pub fn line_ensemble(senv: &SymmetrizedEnvironment, n: usize, kmax: usize, mode: Mode) -> Result<LineEnsemble> {
    if n == 0 || kmax == 0 || kmax > n {
        return Err(Error::Domain(format!("line ensemble needs 1 <= kmax <= n, got n={n}, kmax={kmax}")));
    }
    if 2 * n + 1 > senv.max_diag() {
        return Err(Error::Domain(format!(
            "line ensemble of size {n} needs an environment of size at least {}, got {}",
            n + 1,
            senv.base.n
        )));
    }
    let mut curves = Vec::with_capacity(kmax);
    let mut max_cancel: Option<f64> = None;
    match mode {
        Mode::Exact => {
            let quads = (1..=kmax).map(|a| exact_quadrant(senv, (1, a), false)).collect::<Result<Vec<_>>>()?;
            for k in 1..=kmax {
                let len = 2 * n + 2 - 2 * k;
                let mut c = Vec::with_capacity(len);
                for p in 1..=len {
                    let (a, b) = staircase(n, p);
                    let top = lgv_exact(&quads, a, b, k);
                    let bot = if k == 1 { Dyadic::one() } else { lgv_exact(&quads, a, b, k - 1) };
                    if top.signum() <= 0 || bot.signum() <= 0 {
                        return Err(Error::Invariant(format!("non-positive multilayer value at ({a},{b}), k={k}")));
                    }
                    c.push(std::f64::consts::LN_2 + top.ln() - bot.ln());
                }
                curves.push(c);
            }
        }
        Mode::LogFloat => {
            let quads: Vec<_> = (1..=kmax).map(|a| float_quadrant(senv, (1, a), false)).collect();
            for k in 1..=kmax {
                let len = 2 * n + 2 - 2 * k;
                let mut c = Vec::with_capacity(len);
                for p in 1..=len {
                    let (a, b) = staircase(n, p);
                    let top = lgv_float(&quads, a, b, k)?;
                    let bot = if k == 1 { 0.0 } else { lgv_float(&quads, a, b, k - 1)?.log_value };
                    if let Some(w) = top.warning {
                        return Err(Error::Conditioning(w));
                    }
                    let ratio = top.cancellation.unwrap_or(1.0);
                    max_cancel = Some(max_cancel.map_or(ratio, |m: f64| m.max(ratio)));
                    c.push(std::f64::consts::LN_2 + top.log_value - bot);
                }
                curves.push(c);
            }
        }
    }
    Ok(LineEnsemble { n, kmax, curves, max_cancellation: max_cancel })
}

/// Diagonal-avoiding paths enumerated one by one; small instances only.
pub fn zsym_diag_avoiding_bruteforce(senv: &SymmetrizedEnvironment, m: usize, n: usize) -> Result<Dyadic> {
    if m == n {
        return Err(Error::Domain(format!("diagonal endpoint ({m},{n})")));
    }
    let paths = upright_paths((1, 1), (m, n), &|(i, j)| i != j || (i, j) == (1, 1));
    let mut total = Dyadic::zero();
    for p in paths {
        let mut w = Dyadic::one();
        for &(i, j) in &p.sites {
            w *= &senv.w_exact(i, j)?;
        }
        total += &w;
    }
    Ok(total)
}
