//! Upright lattice paths and exhaustive enumeration helpers.

use std::fmt;

use crate::error::{Error, Result};

pub type Site = (usize, usize);

/// Upright path stored as its site list; consecutive sites differ by (1,0) or (0,1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub sites: Vec<Site>,
}

impl Path {
    pub fn new(sites: Vec<Site>) -> Result<Path> {
        let p = Path { sites };
        if p.sites.is_empty() {
            return Err(Error::Domain("empty path".into()));
        }
        if !p.is_upright() {
            return Err(Error::Domain(format!("not an upright path: {p}")));
        }
        Ok(p)
    }

    pub fn start(&self) -> Site {
        self.sites[0]
    }

    pub fn end(&self) -> Site {
        *self.sites.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_upright(&self) -> bool {
        self.sites.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            (b.0 == a.0 + 1 && b.1 == a.1) || (b.0 == a.0 && b.1 == a.1 + 1)
        })
    }

    /// Diagonal sites `(i, i)` in path order.
    pub fn diag_points(&self) -> Vec<Site> {
        self.sites.iter().copied().filter(|&(i, j)| i == j).collect()
    }

    pub fn touches_diagonal(&self) -> bool {
        self.sites.iter().any(|&(i, j)| i == j)
    }

    pub fn reflect(&self) -> Path {
        Path { sites: self.sites.iter().map(|&(i, j)| (j, i)).collect() }
    }

    /// Stays in `{j <= i}`.
    pub fn is_confined(&self) -> bool {
        self.sites.iter().all(|&(i, j)| j <= i)
    }

    pub fn contains(&self, s: Site) -> bool {
        self.position(s).is_some()
    }

    /// Index of `s`; sites are ordered by `i + j`, so this is a direct lookup.
    pub fn position(&self, s: Site) -> Option<usize> {
        let k0 = self.sites[0].0 + self.sites[0].1;
        let k = (s.0 + s.1).checked_sub(k0)?;
        (self.sites.get(k) == Some(&s)).then_some(k)
    }

    pub fn intersects(&self, other: &Path) -> bool {
        self.sites.iter().any(|&s| other.contains(s))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, j)) in self.sites.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({i},{j})")?;
        }
        Ok(())
    }
}

/// Number of upright paths between two sites.
pub fn path_count(from: Site, to: Site) -> u128 {
    if to.0 < from.0 || to.1 < from.1 {
        return 0;
    }
    let a = (to.0 - from.0) as u128;
    let b = (to.1 - from.1) as u128;
    let mut c: u128 = 1;
    for k in 1..=b {
        c = c * (a + k) / k;
    }
    c
}

/// All upright paths `from -> to` whose sites satisfy `allowed`.
pub fn upright_paths(from: Site, to: Site, allowed: &dyn Fn(Site) -> bool) -> Vec<Path> {
    let mut out = Vec::new();
    if to.0 < from.0 || to.1 < from.1 || !allowed(from) {
        return out;
    }
    let mut cur = vec![from];
    extend(&mut cur, to, allowed, &mut out);
    out
}

fn extend(cur: &mut Vec<Site>, to: Site, allowed: &dyn Fn(Site) -> bool, out: &mut Vec<Path>) {
    let (i, j) = *cur.last().unwrap();
    if (i, j) == to {
        out.push(Path { sites: cur.clone() });
        return;
    }
    for next in [(i + 1, j), (i, j + 1)] {
        if next.0 <= to.0 && next.1 <= to.1 && allowed(next) {
            cur.push(next);
            extend(cur, to, allowed, out);
            cur.pop();
        }
    }
}

/// All families of pairwise disjoint upright paths, path `a` running `starts[a] -> ends[a]`.
/// Fails if the number of families exceeds `limit`.
pub fn non_intersecting_families(starts: &[Site], ends: &[Site], limit: usize) -> Result<Vec<Vec<Path>>> {
    assert_eq!(starts.len(), ends.len());
    let per: Vec<Vec<Path>> = starts.iter().zip(ends).map(|(&s, &e)| upright_paths(s, e, &|_| true)).collect();
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(
        per: &[Vec<Path>],
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<Path>>,
        limit: usize,
    ) -> Result<()> {
        let a = chosen.len();
        if a == per.len() {
            if out.len() >= limit {
                return Err(Error::TooLarge(format!("more than {limit} path families")));
            }
            out.push(chosen.iter().enumerate().map(|(b, &k)| per[b][k].clone()).collect());
            return Ok(());
        }
        for k in 0..per[a].len() {
            let p = &per[a][k];
            if chosen.iter().enumerate().all(|(b, &kb)| !p.intersects(&per[b][kb])) {
                chosen.push(k);
                rec(per, chosen, out, limit)?;
                chosen.pop();
            }
        }
        Ok(())
    }
    rec(&per, &mut chosen, &mut out, limit)?;
    Ok(out)
}
