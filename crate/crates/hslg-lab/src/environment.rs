//! Random weight fields on the half-space wedge, the symmetrized view, and the
//! `HSLG-ENV v1` text format.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::rng::{sample_inverse_gamma, RngStream, ALGORITHM_ID};
use crate::special_fn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Standard,
    Stationary,
    AlphaZeroDiagonal,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Standard => "standard",
            Flavor::Stationary => "stationary",
            Flavor::AlphaZeroDiagonal => "alpha-zero-diagonal",
        })
    }
}

impl FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Flavor::Standard),
            "stationary" => Ok(Flavor::Stationary),
            "alpha-zero-diagonal" => Ok(Flavor::AlphaZeroDiagonal),
            other => Err(Error::Domain(format!("unknown flavor `{other}`"))),
        }
    }
}

/// How the weights were produced. Exact arithmetic is only offered on dyadic environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Float,
    Dyadic,
}

impl Precision {
    fn rng_id(self) -> String {
        match self {
            Precision::Float => ALGORITHM_ID.to_string(),
            Precision::Dyadic => format!("{ALGORITHM_ID}+dyadic"),
        }
    }

    fn from_rng_id(s: &str) -> Option<Self> {
        if s == ALGORITHM_ID {
            Some(Precision::Float)
        } else if s.strip_suffix("+dyadic") == Some(ALGORITHM_ID) {
            Some(Precision::Dyadic)
        } else {
            None
        }
    }
}

/// Generation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenOptions {
    /// Stationary flavor only: draw `W_{1,1}` from `Gamma^-1(theta - alpha)` as well.
    pub stationary_corner: bool,
}

/// Dense row-major storage of the wedge `{1 <= j <= i, i + j <= 2n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct WedgeIndex {
    n: usize,
    offsets: Vec<usize>,
}

impl WedgeIndex {
    pub(crate) fn new(n: usize) -> Self {
        let rows = 2 * n - 1;
        let mut offsets = Vec::with_capacity(rows + 2);
        offsets.push(0);
        offsets.push(0);
        let mut acc = 0;
        for i in 1..=rows {
            acc += i.min(2 * n - i);
            offsets.push(acc);
        }
        WedgeIndex { n, offsets }
    }

    pub(crate) fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    #[inline]
    pub(crate) fn contains(&self, i: usize, j: usize) -> bool {
        j >= 1 && j <= i && i + j <= 2 * self.n
    }

    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.contains(i, j), "({i},{j}) outside wedge of size {}", self.n);
        self.offsets[i] + j - 1
    }

    pub(crate) fn sites(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..2 * n).flat_map(move |i| (1..=i.min(2 * n - i)).map(move |j| (i, j)))
    }
}

/// Expected number of sites in the wedge of size `n`.
pub fn wedge_size(n: usize) -> usize {
    n * n
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub params: ModelParams,
    pub n: usize,
    pub flavor: Flavor,
    pub precision: Precision,
    pub seed: u64,
    pub stream: u64,
    index: WedgeIndex,
    weights: Vec<f64>,
}

fn site_counter(i: usize, j: usize) -> u128 {
    let id = ((i as u64) << 32) | j as u64;
    (id as u128) << 64
}

fn shape_at(params: ModelParams, flavor: Flavor, opts: GenOptions, i: usize, j: usize) -> f64 {
    let ModelParams { theta, alpha } = params;
    match flavor {
        Flavor::Stationary if j == 1 && (i >= 2 || opts.stationary_corner) => theta - alpha,
        Flavor::AlphaZeroDiagonal if i == j => theta,
        _ if i == j => theta + alpha,
        _ => 2.0 * theta,
    }
}

/// Sample one environment. Site `(i, j)` owns its own counter block, so generation order
/// does not affect the result.
pub fn generate_environment(
    params: ModelParams,
    n: usize,
    flavor: Flavor,
    seed: u64,
    stream: u64,
) -> Result<Environment> {
    generate_with(params, n, flavor, seed, stream, Precision::Float, GenOptions::default())
}

/// Same draws as [`generate_environment`], tagged for exact arithmetic.
pub fn generate_dyadic_environment(
    params: ModelParams,
    n: usize,
    flavor: Flavor,
    seed: u64,
    stream: u64,
) -> Result<Environment> {
    generate_with(params, n, flavor, seed, stream, Precision::Dyadic, GenOptions::default())
}

pub fn generate_with(
    params: ModelParams,
    n: usize,
    flavor: Flavor,
    seed: u64,
    stream: u64,
    precision: Precision,
    opts: GenOptions,
) -> Result<Environment> {
    if n == 0 {
        return Err(Error::Domain("environment size n must be at least 1".into()));
    }
    let params = ModelParams::new(params.theta, params.alpha)?;
    if flavor == Flavor::Stationary && !(params.theta - params.alpha > 0.0) {
        return Err(Error::Domain("stationary flavor needs theta - alpha > 0".into()));
    }
    let index = WedgeIndex::new(n);
    let mut weights = Vec::with_capacity(index.len());
    for (i, j) in index.sites() {
        let mut rng = RngStream::at(seed, stream, site_counter(i, j));
        let beta = shape_at(params, flavor, opts, i, j);
        weights.push(sample_inverse_gamma(beta, &mut rng).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("site ({i},{j}): {m}")),
            other => other,
        })?);
    }
    Ok(Environment { params, n, flavor, precision, seed, stream, index, weights })
}

impl Environment {
    /// Build from explicit weights; `w(i, j)` is called once per wedge site in row-major order.
    pub fn from_fn(
        params: ModelParams,
        n: usize,
        flavor: Flavor,
        precision: Precision,
        mut w: impl FnMut(usize, usize) -> f64,
    ) -> Result<Environment> {
        if n == 0 {
            return Err(Error::Domain("environment size n must be at least 1".into()));
        }
        let index = WedgeIndex::new(n);
        let mut weights = Vec::with_capacity(index.len());
        for (i, j) in index.sites() {
            let v = w(i, j);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("weight at ({i},{j}) must be positive and finite, got {v}")));
            }
            weights.push(v);
        }
        Ok(Environment { params, n, flavor, precision, seed: 0, stream: 0, index, weights })
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.index.contains(i, j)
    }

    /// `W_{i,j}` for a wedge site. Panics outside the wedge.
    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        assert!(self.index.contains(i, j), "site ({i},{j}) outside wedge of size {}", self.n);
        self.weights[self.index.idx(i, j)]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.index.contains(i, j).then(|| self.weights[self.index.idx(i, j)])
    }

    pub fn sites(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.index.sites().zip(self.weights.iter()).map(|((i, j), &w)| (i, j, w))
    }

    pub fn num_sites(&self) -> usize {
        self.weights.len()
    }

    pub fn rng_id(&self) -> String {
        self.precision.rng_id()
    }

    pub fn require_dyadic(&self) -> Result<()> {
        match self.precision {
            Precision::Dyadic => Ok(()),
            Precision::Float => Err(Error::Mode(
                "exact arithmetic needs a dyadic environment (generate with precision=exact)".into(),
            )),
        }
    }

    /// Exact weight; requires a dyadic environment.
    pub fn w_exact(&self, i: usize, j: usize) -> Result<Dyadic> {
        self.require_dyadic()?;
        Dyadic::from_f64(self.w(i, j))
    }

    /// Copy with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Environment {
        let mut e = self.clone();
        for w in &mut e.weights {
            *w *= c;
        }
        e
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Environment> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Environment::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(32 * self.weights.len() + 200);
        s.push_str("format=HSLG-ENV\nversion=1\n");
        s.push_str(&format!("theta={}\nalpha={}\n", self.params.theta, self.params.alpha));
        s.push_str(&format!("n={}\nflavor={}\nrng={}\n", self.n, self.flavor, self.rng_id()));
        s.push_str(&format!("seed={}\nstream={}\n", self.seed, self.stream));
        for (i, j, w) in self.sites() {
            s.push_str(&format!("{i} {j} {w:.16e}\n"));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Environment> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r')));
        let mut header = |key: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((ln, l)) => match l.split_once('=') {
                    Some((k, v)) if k == key => Ok((ln, v.to_string())),
                    _ => Err(Error::Parse { line: ln, msg: format!("expected `{key}=...`, found `{l}`") }),
                },
                None => Err(Error::Parse { line: 0, msg: format!("truncated header: missing `{key}`") }),
            }
        };
        let (ln, v) = header("format")?;
        if v != "HSLG-ENV" {
            return Err(Error::Parse { line: ln, msg: format!("unknown format `{v}`") });
        }
        let (ln, v) = header("version")?;
        if v != "1" {
            return Err(Error::Parse { line: ln, msg: format!("unsupported version `{v}`, expected 1") });
        }
        let (ln, v) = header("theta")?;
        let theta: f64 = parse_field(ln, "theta", &v)?;
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Parse { line: ln, msg: "theta must be positive".into() });
        }
        let (ln, v) = header("alpha")?;
        let alpha: f64 = parse_field(ln, "alpha", &v)?;
        if !(alpha > -theta) || !alpha.is_finite() {
            return Err(Error::Parse { line: ln, msg: "alpha must exceed -theta".into() });
        }
        let (ln, v) = header("n")?;
        let n: usize = parse_field(ln, "n", &v)?;
        if n == 0 {
            return Err(Error::Parse { line: ln, msg: "n must be at least 1".into() });
        }
        let (ln, v) = header("flavor")?;
        let flavor: Flavor = v.parse().map_err(|_| Error::Parse { line: ln, msg: format!("unknown flavor `{v}`") })?;
        let (ln, v) = header("rng")?;
        let precision = Precision::from_rng_id(&v)
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("unknown rng `{v}`") })?;
        let (ln, v) = header("seed")?;
        let seed: u64 = parse_field(ln, "seed", &v)?;
        let (ln, v) = header("stream")?;
        let stream: u64 = parse_field(ln, "stream", &v)?;

        let index = WedgeIndex::new(n);
        let expected = index.len();
        let mut weights = Vec::with_capacity(expected);
        let mut sites = index.sites();
        let mut last_line = ln;
        let mut saw_end = false;
        for (ln, l) in lines {
            last_line = ln;
            if l == "end" {
                saw_end = true;
                break;
            }
            let mut it = l.split_whitespace();
            let (Some(a), Some(b), Some(c), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(Error::Parse { line: ln, msg: format!("expected `i j w`, found `{l}`") });
            };
            let i: usize = parse_field(ln, "i", a)?;
            let j: usize = parse_field(ln, "j", b)?;
            let w: f64 = parse_field(ln, "w", c)?;
            match sites.next() {
                Some((ei, ej)) if (ei, ej) == (i, j) => {}
                Some((ei, ej)) => {
                    return Err(Error::Parse { line: ln, msg: format!("expected site ({ei},{ej}), found ({i},{j})") })
                }
                None => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("too many sites: expected {expected}"),
                    })
                }
            }
            if !w.is_finite() || !(w > 0.0) {
                return Err(Error::Parse { line: ln, msg: format!("weight at ({i},{j}) must be positive and finite") });
            }
            weights.push(w);
        }
        if weights.len() != expected {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("expected {expected} wedge sites, found {}", weights.len()),
            });
        }
        if !saw_end {
            return Err(Error::Parse { line: last_line, msg: "missing terminator `end`".into() });
        }
        let params = ModelParams { theta, alpha };
        Ok(Environment { params, n, flavor, precision, seed, stream, index, weights })
    }
}

fn parse_field<T: FromStr>(line: usize, name: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("field `{name}`: cannot parse `{v}`") })
}

/// Quadrant view `W~` of an environment: halved diagonal, symmetric off-diagonal.
#[derive(Debug, Clone, Copy)]
pub struct SymmetrizedEnvironment<'a> {
    pub base: &'a Environment,
}

pub fn symmetrize(env: &Environment) -> SymmetrizedEnvironment<'_> {
    SymmetrizedEnvironment { base: env }
}

impl<'a> SymmetrizedEnvironment<'a> {
    /// Largest anti-diagonal index `i + j` available.
    pub fn max_diag(&self) -> usize {
        2 * self.base.n
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + j <= 2 * self.base.n
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.base.w(i, i) * 0.5
        } else if i > j {
            self.base.w(i, j)
        } else {
            self.base.w(j, i)
        }
    }

    pub fn w_exact(&self, i: usize, j: usize) -> Result<Dyadic> {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        let v = self.base.w_exact(a, b)?;
        Ok(if i == j { v.scale2(-1) } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(1.0, -0.5).unwrap()
    }

    #[test]
    fn wedge_layout() {
        let idx = WedgeIndex::new(3);
        let sites: Vec<_> = idx.sites().collect();
        assert_eq!(sites.len(), wedge_size(3));
        assert_eq!(sites, vec![(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2), (5, 1)]);
        for (k, &(i, j)) in sites.iter().enumerate() {
            assert_eq!(idx.idx(i, j), k);
        }
        assert!(!idx.contains(4, 3));
        assert!(!idx.contains(1, 2));
    }

    #[test]
    fn n1_has_one_site() {
        let e = generate_environment(params(), 1, Flavor::Standard, 1, 0).unwrap();
        assert_eq!(e.num_sites(), 1);
        assert!(e.w(1, 1) > 0.0);
    }

    #[test]
    fn generation_is_addressable() {
        let small = generate_environment(params(), 3, Flavor::Standard, 9, 4).unwrap();
        let big = generate_environment(params(), 6, Flavor::Standard, 9, 4).unwrap();
        for (i, j, w) in small.sites() {
            assert_eq!(w.to_bits(), big.w(i, j).to_bits());
        }
        let other = generate_environment(params(), 3, Flavor::Standard, 9, 5).unwrap();
        assert_ne!(small.w(2, 1), other.w(2, 1));
    }

    #[test]
    fn flavors_share_off_boundary_sites() {
        let s = generate_environment(params(), 4, Flavor::Standard, 2, 2).unwrap();
        let t = generate_environment(params(), 4, Flavor::Stationary, 2, 2).unwrap();
        assert_eq!(s.w(1, 1), t.w(1, 1));
        assert_eq!(s.w(3, 2), t.w(3, 2));
        assert_ne!(s.w(3, 1), t.w(3, 1));
        let c = generate_with(params(), 4, Flavor::Stationary, 2, 2, Precision::Float, GenOptions { stationary_corner: true })
            .unwrap();
        assert_ne!(c.w(1, 1), t.w(1, 1));
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let e = generate_dyadic_environment(params(), 3, Flavor::Stationary, 123, 7).unwrap();
        let back = Environment::from_text(&e.to_text()).unwrap();
        assert_eq!(e, back);
        let f = generate_environment(params(), 5, Flavor::AlphaZeroDiagonal, u64::MAX, 0).unwrap();
        assert_eq!(Environment::from_text(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn parse_errors_are_specific() {
        let e = generate_environment(params(), 3, Flavor::Standard, 1, 1).unwrap();
        let text = e.to_text();
        let bad = text.replace("theta=1\n", "theta=-1\n");
        let err = Environment::from_text(&bad).unwrap_err().to_string();
        assert!(err.contains("theta must be positive"), "{err}");
        assert!(err.contains("line 3"), "{err}");

        let lines: Vec<&str> = text.lines().collect();
        let mut missing = lines.clone();
        missing.remove(12);
        let err = Environment::from_text(&missing.join("\n")).unwrap_err().to_string();
        assert!(err.contains("expected site"), "{err}");
        let mut truncated = lines.clone();
        truncated.truncate(lines.len() - 2);
        truncated.push("end");
        let err = Environment::from_text(&truncated.join("\n")).unwrap_err().to_string();
        assert!(err.contains("expected 9 wedge sites, found 8"), "{err}");

        let err = Environment::from_text(&text.replace("version=1", "version=2")).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");
        let mut inf = lines.clone();
        inf[9] = "1 1 inf";
        let err = Environment::from_text(&inf.join("\n")).unwrap_err().to_string();
        assert!(err.contains("line 10") && err.contains("finite"), "{err}");
    }

    #[test]
    fn symmetrized_view() {
        let e = generate_dyadic_environment(params(), 3, Flavor::Standard, 5, 5).unwrap();
        let s = symmetrize(&e);
        assert_eq!(s.w(1, 1), e.w(1, 1) / 2.0);
        assert_eq!(s.w(1, 2), e.w(2, 1));
        assert_eq!(s.w(2, 1), e.w(2, 1));
        assert_eq!(s.w_exact(2, 2).unwrap().scale2(1), e.w_exact(2, 2).unwrap());
        let f = generate_environment(params(), 3, Flavor::Standard, 5, 5).unwrap();
        assert!(matches!(symmetrize(&f).w_exact(1, 1), Err(Error::Mode(_))));
    }
}
