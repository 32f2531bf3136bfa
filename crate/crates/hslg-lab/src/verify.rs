//! Exact verification suites over batches of dyadic environments.

use serde::{Deserialize, Serialize};

use crate::environment::{generate_dyadic_environment, symmetrize, Environment, Flavor};
use crate::error::{Error, Result};
use crate::multilayer::{zsym_multi_bruteforce, zsym_multi_lgv, zsym_single};
use crate::polymer::{partition_bruteforce, partition_table, Mode};
use crate::special_fn::ModelParams;
use crate::umap::{check_sbd_inequality, verify_domain};

/// Tolerance on float-mode log partition functions against exact values.
pub const FLOAT_LOG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub name: String,
    pub checks: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    fn new(name: &str) -> VerifyReport {
        VerifyReport { name: name.into(), checks: 0, skipped: 0, failures: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn envs(params: ModelParams, n: usize, count: usize, seed: u64) -> Result<Vec<Environment>> {
    (0..count as u64).map(|s| generate_dyadic_environment(params, n, Flavor::Standard, seed, s)).collect()
}

/// Exact DP against path-by-path sums at every wedge site, and the float DP against the
/// exact logarithm.
pub fn verify_dp(params: ModelParams, sizes: &[usize], count: usize, seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("dp");
    for &n in sizes {
        for env in envs(params, n, count, seed)? {
            let exact = partition_table(&env, Mode::Exact)?;
            let float = partition_table(&env, Mode::LogFloat)?;
            for (i, j, _) in env.sites() {
                let z = exact.exact(i, j).expect("exact table");
                let b = partition_bruteforce(&env, i, j)?;
                rep.record(*z == b, || format!("n={n} stream={} Z({i},{j}): dp {z} vs paths {b}", env.stream));
                let err = (float.log_z(i, j) - z.ln()).abs();
                rep.record(err <= FLOAT_LOG_TOL, || format!("n={n} stream={} log Z({i},{j}) float error {err:e}", env.stream));
            }
        }
    }
    Ok(rep)
}

/// `2 Z_sym(m, k) = Z(m, k)` exactly at every wedge site.
pub fn verify_identity(params: ModelParams, sizes: &[usize], count: usize, seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("identity");
    for &n in sizes {
        for env in envs(params, n, count, seed)? {
            let t = partition_table(&env, Mode::Exact)?;
            let s = symmetrize(&env);
            for (i, j, _) in env.sites() {
                let zs = zsym_single(&s, i, j, Mode::Exact)?.exact.expect("exact mode");
                let z = t.exact(i, j).expect("exact table");
                rep.record(zs.scale2(1) == *z, || format!("n={n} stream={} site ({i},{j}): 2 Z_sym = {} vs Z = {z}", env.stream, zs.scale2(1)));
            }
        }
    }
    Ok(rep)
}

/// Determinant formula against exhaustive families for `r <= rmax`, endpoints
/// `1 <= m <= n_env`, `r <= k <= n_env`. Oversized enumerations are counted as skipped.
pub fn verify_lgv(params: ModelParams, n_env: usize, rmax: usize, count: usize, seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("lgv");
    for env in envs(params, n_env, count, seed)? {
        let s = symmetrize(&env);
        for r in 1..=rmax {
            for m in 1..=n_env {
                for k in r..=n_env {
                    let lgv = zsym_multi_lgv(&s, m, k, r, Mode::Exact)?.exact.expect("exact mode");
                    match zsym_multi_bruteforce(&s, m, k, r) {
                        Ok(b) => {
                            let b = b.exact.expect("exact mode");
                            rep.record(lgv == b, || {
                                format!("stream={} r={r} endpoint ({m},{k}): det {lgv} vs families {b}", env.stream)
                            });
                        }
                        Err(Error::TooLarge(_)) => rep.skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// U-map properties on exhaustive domains, with weight preservation on `count` environments.
pub fn verify_umap(params: ModelParams, domains: &[(usize, usize)], xs: &[usize], count: usize, seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("umap");
    let n_env = domains.iter().map(|&(m, n)| m + n).max().unwrap_or(2).div_ceil(2) + 1;
    let envs = envs(params, n_env, count, seed)?;
    let senvs: Vec<_> = envs.iter().map(symmetrize).collect();
    for &(m, n) in domains {
        for &x in xs {
            let d = verify_domain(x, m, n, &senvs)?;
            rep.checks += d.pairs.max(1);
            rep.failures.extend(d.violations.iter().map(|v| format!("x={x} ({m},{n}): {v}")));
        }
    }
    Ok(rep)
}

/// Multilayer bound at every `(m, n)` with `m >= n >= 2k` and `m + n <= 2 n_env`.
pub fn verify_sbd(params: ModelParams, n_env: usize, ks: &[usize], count: usize, seed: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new("sbd");
    for env in envs(params, n_env, count, seed)? {
        let s = symmetrize(&env);
        for &k in ks {
            for n in 2 * k..=n_env {
                for m in n..=2 * n_env - n {
                    let r = check_sbd_inequality(&s, m, n, k)?;
                    rep.record(r.holds, || {
                        format!("stream={} k={k} ({m},{n}): log lhs {:.6} > log rhs {:.6}", env.stream, r.lhs, r.rhs)
                    });
                }
            }
        }
    }
    Ok(rep)
}
