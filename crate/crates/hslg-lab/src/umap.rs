//! The U map on non-intersecting path pairs, its exhaustive checks, and the
//! `Z_sym^(2k) <= 2^n ...` bound that it yields.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::environment::SymmetrizedEnvironment;
use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::lattice::{non_intersecting_families, Path, Site};
use crate::multilayer::{vq_profiles, zsym_multi_lgv};
use crate::polymer::Mode;

pub const ENUMERATION_LIMIT: usize = 2_000_000;

/// `pi1: (1,x+1) -> (m,n)` above `pi2: (1,x) -> (m,n-1)`, disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathPair {
    pub x: usize,
    pub m: usize,
    pub n: usize,
    pub pi1: Path,
    pub pi2: Path,
}

/// `pi1: (1,x+1) -> (n-1,m)`, `pi2: (1,x) -> (n,m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MappedPair {
    pub pi1: Path,
    pub pi2: Path,
}

impl MappedPair {
    pub fn diag_count(&self) -> usize {
        self.pi1.diag_points().len() + self.pi2.diag_points().len()
    }
}

impl fmt::Display for PathPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x={} target=({},{})", self.x, self.m, self.n)?;
        writeln!(f, "pi1: {}", self.pi1)?;
        write!(f, "pi2: {}", self.pi2)
    }
}

impl fmt::Display for MappedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pi1': {}", self.pi1)?;
        write!(f, "pi2': {}", self.pi2)
    }
}

/// Diagonal bookkeeping of a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagTrace {
    /// Union of diagonal points in increasing order with the owning path (1 or 2).
    pub diag: Vec<(Site, u8)>,
    /// pi2 diagonal points next to a pi1 diagonal point: `A_1 < ... < A_r`.
    pub sp_diag: Vec<Site>,
    /// First site of pi1 in the column of each `A_j`.
    pub b: Vec<Site>,
}

impl PathPair {
    pub fn new(x: usize, m: usize, n: usize, pi1: Path, pi2: Path) -> Result<PathPair> {
        let pair = PathPair { x, m, n, pi1, pi2 };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        let PathPair { x, m, n, pi1, pi2 } = self;
        if *n < 2 || m < n {
            return Err(Error::Domain(format!("target ({m},{n}) needs m >= n >= 2")));
        }
        if !pi1.is_upright() || !pi2.is_upright() {
            return Err(Error::Domain("pair paths must be upright".into()));
        }
        if pi1.start() != (1, x + 1) || pi1.end() != (*m, *n) {
            return Err(Error::Domain(format!("pi1 must run (1,{}) -> ({m},{n})", x + 1)));
        }
        if pi2.start() != (1, *x) || pi2.end() != (*m, n - 1) {
            return Err(Error::Domain(format!("pi2 must run (1,{x}) -> ({m},{})", n - 1)));
        }
        if pi1.intersects(pi2) {
            return Err(Error::Domain("pair paths intersect".into()));
        }
        Ok(())
    }

    pub fn trace(&self) -> DiagTrace {
        let mut diag: Vec<(Site, u8)> = self
            .pi1
            .diag_points()
            .into_iter()
            .map(|s| (s, 1))
            .chain(self.pi2.diag_points().into_iter().map(|s| (s, 2)))
            .collect();
        diag.sort();
        let mut sp_diag = Vec::new();
        for (k, &(s, owner)) in diag.iter().enumerate() {
            if owner != 2 {
                continue;
            }
            let prev = k > 0 && diag[k - 1].1 == 1;
            let next = k + 1 < diag.len() && diag[k + 1].1 == 1;
            if prev || next {
                sp_diag.push(s);
            }
        }
        let b = sp_diag
            .iter()
            .map(|&(a, _)| *self.pi1.sites.iter().find(|s| s.0 == a).expect("pi1 spans every column"))
            .collect();
        DiagTrace { diag, sp_diag, b }
    }
}

fn slice(p: &Path, from: Site, to: Site) -> Result<Vec<Site>> {
    let a = p.position(from).ok_or_else(|| Error::Invariant(format!("{from:?} not on path {p}")))?;
    let b = p.position(to).ok_or_else(|| Error::Invariant(format!("{to:?} not on path {p}")))?;
    if a > b {
        return Err(Error::Invariant(format!("segment {from:?}..{to:?} runs backwards on {p}")));
    }
    Ok(p.sites[a..=b].to_vec())
}

fn append(out: &mut Vec<Site>, seg: &[Site]) {
    let skip = usize::from(!out.is_empty() && seg.first() == out.last());
    out.extend_from_slice(&seg[skip..]);
}

fn reflect(s: Site) -> Site {
    (s.1, s.0)
}

fn reflect_all(seg: &[Site]) -> Vec<Site> {
    seg.iter().map(|&s| reflect(s)).collect()
}

/// Apply U. Any failure of the output contract is returned as an `Invariant` error.
pub fn apply_umap(pair: &PathPair) -> Result<MappedPair> {
    pair.validate()?;
    let tr = pair.trace();
    let r = tr.sp_diag.len();
    if r == 0 {
        return Err(Error::Invariant(format!("empty SPDiag for\n{pair}")));
    }
    let (pi1, pi2) = (&pair.pi1, &pair.pi2);
    let mut a = tr.sp_diag.clone();
    let mut b = tr.b.clone();
    a.push(pi2.end());
    b.push(pi1.end());

    let mut out1 = slice(pi1, pi1.start(), b[0])?;
    let mut out2 = slice(pi2, pi2.start(), a[0])?;

    for j in 0..r {
        let seg1 = Path { sites: slice(pi1, b[j], b[j + 1])? };
        let seg2 = Path { sites: slice(pi2, a[j], a[j + 1])? };
        let pi3 = seg2.reflect();
        if j + 1 < r {
            let lo = a[j].0;
            let hi = a[j + 1].0;
            let between = |owner: u8| tr.diag.iter().any(|&((d, _), o)| o == owner && d > lo && d < hi);
            let (has1, has2) = (between(1), between(2));
            if has1 && has2 {
                return Err(Error::Invariant(format!("both paths touch the diagonal between anchors in\n{pair}")));
            }
            if !has1 {
                append(&mut out1, &seg1.sites);
                append(&mut out2, &seg2.sites);
                continue;
            }
            let hits: Vec<Site> = seg1.sites.iter().copied().filter(|&s| pi3.contains(s)).collect();
            let (p1, p2) = match (hits.first(), hits.last()) {
                (Some(&p1), Some(&p2)) if p1 != p2 => (p1, p2),
                _ => return Err(Error::Invariant(format!("P1 = P2 or no crossing in segment {j} of\n{pair}"))),
            };
            append(&mut out1, &slice(&seg1, b[j], p1)?);
            append(&mut out1, &slice(&pi3, p1, p2)?);
            append(&mut out1, &slice(&seg1, p2, b[j + 1])?);
            append(&mut out2, &slice(&seg2, a[j], reflect(p1))?);
            append(&mut out2, &reflect_all(&slice(&seg1, p1, p2)?));
            append(&mut out2, &slice(&seg2, reflect(p2), a[j + 1])?);
        } else {
            let p = seg1
                .sites
                .iter()
                .copied()
                .find(|&s| pi3.contains(s))
                .ok_or_else(|| Error::Invariant(format!("terminal segment never meets the reflection in\n{pair}")))?;
            append(&mut out1, &slice(&seg1, b[j], p)?);
            append(&mut out1, &slice(&pi3, p, pi3.end())?);
            append(&mut out2, &slice(&seg2, a[j], reflect(p))?);
            append(&mut out2, &reflect_all(&slice(&seg1, p, seg1.end())?));
        }
    }
    let mapped = MappedPair { pi1: Path { sites: out1 }, pi2: Path { sites: out2 } };
    check_mapped(pair, &mapped)?;
    Ok(mapped)
}

fn check_mapped(pair: &PathPair, out: &MappedPair) -> Result<()> {
    let fail = |what: &str| Err(Error::Invariant(format!("{what}\ninput:\n{pair}\noutput:\n{out}")));
    let (x, m, n) = (pair.x, pair.m, pair.n);
    if !out.pi1.is_upright() || !out.pi2.is_upright() {
        return fail("output path is not upright");
    }
    if out.pi1.start() != (1, x + 1) || out.pi1.end() != (n - 1, m) {
        return fail("pi1' endpoints");
    }
    if out.pi2.start() != (1, x) || out.pi2.end() != (n, m) {
        return fail("pi2' endpoints");
    }
    if out.pi1.intersects(&out.pi2) {
        return fail("output paths intersect");
    }
    if out.pi1.touches_diagonal() {
        return fail("pi1' touches the diagonal");
    }
    let before: BTreeSet<Site> = pair.pi1.diag_points().into_iter().chain(pair.pi2.diag_points()).collect();
    let after: BTreeSet<Site> = out.pi2.diag_points().into_iter().collect();
    if before != after {
        return fail("diagonal set not transferred to pi2'");
    }
    Ok(())
}

/// Every pair of the domain `Pi((1,x+1)->(m,n), (1,x)->(m,n-1))`.
pub fn enumerate_pairs(x: usize, m: usize, n: usize, limit: usize) -> Result<Vec<PathPair>> {
    if n < 2 || m < n || x == 0 {
        return Err(Error::Domain(format!("domain needs x >= 1 and m >= n >= 2, got x={x}, ({m},{n})")));
    }
    if x + 1 > n {
        return Ok(Vec::new());
    }
    let fams = non_intersecting_families(&[(1, x + 1), (1, x)], &[(m, n), (m, n - 1)], limit)?;
    Ok(fams
        .into_iter()
        .map(|mut f| {
            let pi2 = f.pop().unwrap();
            let pi1 = f.pop().unwrap();
            PathPair { x, m, n, pi1, pi2 }
        })
        .collect())
}

/// Number of domain elements mapped onto `mapped`.
pub fn count_preimages(mapped: &MappedPair, x: usize, m: usize, n: usize) -> Result<usize> {
    let mut c = 0;
    for pair in enumerate_pairs(x, m, n, ENUMERATION_LIMIT)? {
        if &apply_umap(&pair)? == mapped {
            c += 1;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UmapDomainReport {
    pub x: usize,
    pub m: usize,
    pub n: usize,
    pub pairs: usize,
    pub images: usize,
    pub max_preimages: usize,
    pub weight_checks: usize,
    pub violations: Vec<String>,
}

impl UmapDomainReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn path_weight(senv: &SymmetrizedEnvironment, p: &Path) -> Result<Dyadic> {
    let mut w = Dyadic::one();
    for &(i, j) in &p.sites {
        w *= &senv.w_exact(i, j)?;
    }
    Ok(w)
}

/// Exhaustive check of the diagonal transfer, endpoint contract, preimage bounds and, for
/// every supplied environment, exact weight preservation.
pub fn verify_domain(x: usize, m: usize, n: usize, envs: &[SymmetrizedEnvironment]) -> Result<UmapDomainReport> {
    let pairs = enumerate_pairs(x, m, n, ENUMERATION_LIMIT)?;
    let mut rep = UmapDomainReport { x, m, n, pairs: pairs.len(), ..Default::default() };
    let mut images: HashMap<MappedPair, usize> = HashMap::new();
    let mut mapped_all = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        match apply_umap(pair) {
            Ok(out) => {
                *images.entry(out.clone()).or_default() += 1;
                mapped_all.push(Some(out));
            }
            Err(e) => {
                rep.violations.push(e.to_string());
                mapped_all.push(None);
            }
        }
    }
    for (img, &count) in &images {
        rep.max_preimages = rep.max_preimages.max(count);
        let d = img.diag_count();
        if count > 1usize << d {
            rep.violations.push(format!("{count} preimages exceed 2^{d} for image\n{img}"));
        }
        if count > 1usize << n {
            rep.violations.push(format!("{count} preimages exceed 2^n for image\n{img}"));
        }
    }
    rep.images = images.len();
    for senv in envs {
        for (pair, out) in pairs.iter().zip(&mapped_all) {
            let Some(out) = out else { continue };
            let before = &path_weight(senv, &pair.pi1)? * &path_weight(senv, &pair.pi2)?;
            let after = &path_weight(senv, &out.pi1)? * &path_weight(senv, &out.pi2)?;
            rep.weight_checks += 1;
            if before != after {
                rep.violations.push(format!("weight changed for\n{pair}\n->\n{out}"));
            }
        }
    }
    Ok(rep)
}

/// Domain `Pi^(2k)_{m,n}` of non-intersecting `2k`-tuples.
pub fn enumerate_tuples(k: usize, m: usize, n: usize, limit: usize) -> Result<Vec<Vec<Path>>> {
    if k == 0 || n < 2 * k || m < n {
        return Err(Error::Domain(format!("2k-tuples need m >= n >= 2k, got k={k}, ({m},{n})")));
    }
    let starts: Vec<Site> = (0..2 * k).map(|a| (1, 2 * k - a)).collect();
    let ends: Vec<Site> = (0..2 * k).map(|a| (m, n - a)).collect();
    non_intersecting_families(&starts, &ends, limit)
}

/// U applied to consecutive pairs `(pi_{2i-1}, pi_{2i})`.
pub fn apply_umap_2k(m: usize, n: usize, tuple: &[Path]) -> Result<Vec<Path>> {
    if tuple.len() % 2 != 0 || tuple.is_empty() {
        return Err(Error::Domain(format!("need an even, nonempty tuple, got {} paths", tuple.len())));
    }
    let k = tuple.len() / 2;
    let mut out = Vec::with_capacity(tuple.len());
    for i in 1..=k {
        let x = 2 * k - 2 * i + 1;
        let pair = PathPair::new(x, m, n + 2 - 2 * i, tuple[2 * i - 2].clone(), tuple[2 * i - 1].clone())?;
        let mapped = apply_umap(&pair)?;
        out.push(mapped.pi1);
        out.push(mapped.pi2);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbdReport {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Exact check of `Z_sym^(2k)(m,n) <= 2^n prod W~_{1,j}^{-1} prod V V~`.
pub fn check_sbd_inequality(senv: &SymmetrizedEnvironment, m: usize, n: usize, k: usize) -> Result<SbdReport> {
    senv.base.require_dyadic()?;
    if k == 0 || n < 2 * k || m < n {
        return Err(Error::Domain(format!("need m >= n >= 2k >= 2, got ({m},{n}), k={k}")));
    }
    if m + n > senv.max_diag() {
        return Err(Error::Domain(format!("environment too small for anti-diagonal {}", m + n)));
    }
    let lhs = zsym_multi_lgv(senv, m, n, 2 * k, Mode::Exact)?.exact.expect("exact mode");
    let prof = vq_profiles(senv, Mode::Exact)?;
    let v = |q: usize| prof[q - 2].v_exact.clone().expect("exact mode");
    let vt = |q: usize| prof[q - 2].vtilde_exact.clone().expect("exact mode");
    let mut corner = Dyadic::one();
    for i in 2..=2 * k {
        for j in 1..i {
            corner *= &senv.w_exact(1, j)?;
        }
    }
    let mut rhs_core = Dyadic::pow2(n as i64);
    for i in 1..=k {
        rhs_core *= &v(m + n + 2 - 2 * i);
        rhs_core *= &vt(m + n + 1 - 2 * i);
    }
    let holds = &lhs * &corner <= rhs_core;
    Ok(SbdReport { m, n, k, lhs: lhs.ln(), rhs: rhs_core.ln() - corner.ln(), holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{generate_dyadic_environment, symmetrize, Flavor};
    use crate::special_fn::ModelParams;

    fn path(s: &[Site]) -> Path {
        Path::new(s.to_vec()).unwrap()
    }

    #[test]
    fn hand_trace_2_2() {
        let pair = PathPair::new(1, 2, 2, path(&[(1, 2), (2, 2)]), path(&[(1, 1), (2, 1)])).unwrap();
        let out = apply_umap(&pair).unwrap();
        assert_eq!(out.pi1, path(&[(1, 2)]));
        assert_eq!(out.pi2, path(&[(1, 1), (2, 1), (2, 2)]));
        assert_eq!(count_preimages(&out, 1, 2, 2).unwrap(), 1);
        let other = MappedPair { pi1: path(&[(1, 2)]), pi2: path(&[(1, 1), (1, 2)]) };
        assert_eq!(count_preimages(&other, 1, 2, 2).unwrap(), 0);
    }

    #[test]
    fn domain_sizes() {
        assert_eq!(enumerate_pairs(1, 2, 2, 100).unwrap().len(), 1);
        use crate::lattice::path_count;
        for &(m, n) in &[(3, 2), (4, 3), (5, 3), (4, 4)] {
            let det = path_count((1, 2), (m, n)) * path_count((1, 1), (m, n - 1))
                - path_count((1, 2), (m, n - 1)) * path_count((1, 1), (m, n));
            assert_eq!(enumerate_pairs(1, m, n, 10_000).unwrap().len() as u128, det);
        }
        assert!(enumerate_pairs(2, 2, 2, 100).unwrap().is_empty());
    }

    #[test]
    fn small_domains_have_no_violations() {
        let p = ModelParams::new(1.0, -0.5).unwrap();
        let envs: Vec<_> = (0..3).map(|s| generate_dyadic_environment(p, 5, Flavor::Standard, 5, s).unwrap()).collect();
        let senvs: Vec<_> = envs.iter().map(symmetrize).collect();
        for &(m, n) in &[(2, 2), (3, 2), (4, 3), (4, 4)] {
            for x in 1..=2 {
                let rep = verify_domain(x, m, n, &senvs).unwrap();
                assert!(rep.passed(), "{:?}", rep.violations.first());
            }
        }
    }

    #[test]
    fn sbd_small() {
        let p = ModelParams::new(1.0, -0.5).unwrap();
        for s in 0..5 {
            let e = generate_dyadic_environment(p, 5, Flavor::Standard, 6, s).unwrap();
            let se = symmetrize(&e);
            assert!(check_sbd_inequality(&se, 3, 2, 1).unwrap().holds);
            assert!(check_sbd_inequality(&se, 4, 4, 1).unwrap().holds);
            assert!(check_sbd_inequality(&se, 5, 4, 2).unwrap().holds);
        }
    }
}
