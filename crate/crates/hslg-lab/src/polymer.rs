//! Half-space partition functions, the quenched endpoint law and exact path sampling.

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, WedgeIndex};
use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::lattice::{path_count, upright_paths, Path, Site};
use crate::rng::RngStream;

/// Arithmetic used for partition functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    LogFloat,
    Exact,
}

#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log Z(m, k)` over the wedge of the environment, optionally with exact values.
#[derive(Debug, Clone)]
pub struct LogPartitionTable {
    pub n: usize,
    index: WedgeIndex,
    log_z: Vec<f64>,
    exact: Option<Vec<Dyadic>>,
}

pub fn partition_table(env: &Environment, mode: Mode) -> Result<LogPartitionTable> {
    let index = WedgeIndex::new(env.n);
    match mode {
        Mode::LogFloat => {
            let mut log_z = vec![0.0; index.len()];
            for (i, j) in index.sites() {
                let lw = env.w(i, j).ln();
                let v = if (i, j) == (1, 1) {
                    lw
                } else if i == j {
                    lw + log_z[index.idx(i, j - 1)]
                } else if j == 1 {
                    lw + log_z[index.idx(i - 1, 1)]
                } else {
                    lw + log_add_exp(log_z[index.idx(i - 1, j)], log_z[index.idx(i, j - 1)])
                };
                log_z[index.idx(i, j)] = v;
            }
            Ok(LogPartitionTable { n: env.n, index, log_z, exact: None })
        }
        Mode::Exact => {
            env.require_dyadic()?;
            let mut z: Vec<Dyadic> = vec![Dyadic::zero(); index.len()];
            for (i, j) in index.sites() {
                let w = env.w_exact(i, j)?;
                let v = if (i, j) == (1, 1) {
                    w
                } else if i == j {
                    &w * &z[index.idx(i, j - 1)]
                } else if j == 1 {
                    &w * &z[index.idx(i - 1, 1)]
                } else {
                    &w * &(&z[index.idx(i - 1, j)] + &z[index.idx(i, j - 1)])
                };
                z[index.idx(i, j)] = v;
            }
            let log_z = z.iter().map(Dyadic::ln).collect();
            Ok(LogPartitionTable { n: env.n, index, log_z, exact: Some(z) })
        }
    }
}

impl LogPartitionTable {
    pub fn mode(&self) -> Mode {
        if self.exact.is_some() {
            Mode::Exact
        } else {
            Mode::LogFloat
        }
    }

    pub fn contains(&self, m: usize, k: usize) -> bool {
        self.index.contains(m, k)
    }

    /// `log Z(m, k)`; panics outside the wedge.
    pub fn log_z(&self, m: usize, k: usize) -> f64 {
        assert!(self.index.contains(m, k), "site ({m},{k}) outside table of size {}", self.n);
        self.log_z[self.index.idx(m, k)]
    }

    /// Exact `Z(m, k)` when built in exact mode.
    pub fn exact(&self, m: usize, k: usize) -> Option<&Dyadic> {
        assert!(self.index.contains(m, k), "site ({m},{k}) outside table of size {}", self.n);
        self.exact.as_ref().map(|z| &z[self.index.idx(m, k)])
    }

    /// `log Z^PL(m) = log sum_{p=m}^{N-1} Z(N+p, N-p)`; `m = 0` is the point-to-line value.
    pub fn point_to_line(&self, m: usize) -> Result<f64> {
        let n = self.n;
        if m >= n {
            return Err(Error::Domain(format!("point_to_line needs 0 <= m <= {}, got {m}", n - 1)));
        }
        Ok(log_sum_exp((m..n).map(|p| self.log_z(n + p, n - p))))
    }

    /// Exact `Z^PL(m)`.
    pub fn point_to_line_exact(&self, m: usize) -> Result<Dyadic> {
        let n = self.n;
        if m >= n {
            return Err(Error::Domain(format!("point_to_line needs 0 <= m <= {}, got {m}", n - 1)));
        }
        let z = self.exact.as_ref().ok_or_else(|| Error::Mode("table was built in float mode".into()))?;
        Ok((m..n).map(|p| z[self.index.idx(n + p, n - p)].clone()).sum())
    }

    pub fn endpoint_pmf(&self) -> EndpointPmf {
        endpoint_pmf(self)
    }

    /// `(log Z(N,N) - log Z(N+r, N-r))_{r = 0..=kmax}`.
    pub fn increment_vector(&self, kmax: usize) -> Result<Vec<f64>> {
        let n = self.n;
        if kmax + 1 > n {
            return Err(Error::Domain(format!("increment_vector needs kmax <= {}, got {kmax}", n - 1)));
        }
        let d = self.log_z(n, n);
        Ok((0..=kmax).map(|r| if r == 0 { 0.0 } else { d - self.log_z(n + r, n - r) }).collect())
    }
}

/// Quenched law of the endpoint height: `probs[r] = P(endpoint = (N+r, N-r))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointPmf {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl EndpointPmf {
    /// `P(r >= k)`, i.e. mass at heights `<= N - k`.
    pub fn tail(&self, k: usize) -> f64 {
        self.probs.iter().skip(k).sum::<f64>().min(1.0)
    }
}

pub fn endpoint_pmf(table: &LogPartitionTable) -> EndpointPmf {
    let n = table.n;
    let logs: Vec<f64> = (0..n).map(|r| table.log_z(n + r, n - r)).collect();
    let total = log_sum_exp(logs.iter().copied());
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - total).exp()).collect();
    let s: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= s;
    }
    EndpointPmf { n, probs }
}

/// A confined path from (1,1) with `2N - 2` steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolymerPath {
    pub path: Path,
}

impl PolymerPath {
    pub fn sites(&self) -> &[Site] {
        &self.path.sites
    }

    pub fn endpoint(&self) -> Site {
        self.path.end()
    }
}

/// Draw a path from the quenched polymer measure: endpoint first, then backward steps.
pub fn sample_path(table: &LogPartitionTable, env: &Environment, rng: &mut RngStream) -> PolymerPath {
    assert_eq!(table.n, env.n, "table and environment sizes differ");
    let n = table.n;
    let pmf = endpoint_pmf(table);
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut r = n - 1;
    for (k, p) in pmf.probs.iter().enumerate() {
        acc += p;
        if u < acc {
            r = k;
            break;
        }
    }
    let mut cur = (n + r, n - r);
    let mut rev = vec![cur];
    while cur != (1, 1) {
        let (i, j) = cur;
        cur = if i == j {
            (i, j - 1)
        } else if j == 1 {
            (i - 1, 1)
        } else {
            let a = table.log_z(i - 1, j);
            let b = table.log_z(i, j - 1);
            let p_left = 1.0 / (1.0 + (b - a).exp());
            if rng.uniform() < p_left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        rev.push(cur);
    }
    rev.reverse();
    PolymerPath { path: Path { sites: rev } }
}

/// `sum_{(i,j) in path} log W_{i,j}`.
pub fn log_path_weight(env: &Environment, path: &Path) -> f64 {
    path.sites.iter().map(|&(i, j)| env.w(i, j).ln()).sum()
}

/// Path limit for [`partition_bruteforce`].
pub const ENUMERATION_LIMIT: u128 = 2_000_000;

/// `Z(m, k)` summed path by path over confined upright paths, in exact arithmetic.
pub fn partition_bruteforce(env: &Environment, m: usize, k: usize) -> Result<Dyadic> {
    env.require_dyadic()?;
    if !env.contains(m, k) {
        return Err(Error::Domain(format!("site ({m},{k}) outside the wedge of size {}", env.n)));
    }
    if path_count((1, 1), (m, k)) > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!("more than {ENUMERATION_LIMIT} paths to ({m},{k})")));
    }
    let paths = upright_paths((1, 1), (m, k), &|(i, j)| j <= i);
    let mut total = Dyadic::zero();
    for p in &paths {
        let w: Result<Vec<Dyadic>> = p.sites.iter().map(|&(i, j)| env.w_exact(i, j)).collect();
        total += &w?.into_iter().product::<Dyadic>();
    }
    Ok(total)
}
