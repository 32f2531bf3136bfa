//! Colored-edge Gibbs densities on diamond-lattice domains, slice-sampling MCMC,
//! the interacting random walk, and ordering statistics of line ensembles.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilayer::LineEnsemble;
use crate::polymer::log_add_exp;
use crate::rng::RngStream;
use crate::special_fn::ModelParams;

pub type Vertex = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    Blue,
    Red,
    Black,
}

impl Color {
    /// Linear coefficient of the edge weight; `None` for black.
    pub fn coef(self, params: ModelParams) -> Option<f64> {
        match self {
            Color::Blue => Some(params.theta - params.alpha),
            Color::Red => Some(params.theta + params.alpha),
            Color::Black => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColoredEdge {
    pub from: Vertex,
    pub to: Vertex,
    pub color: Color,
}

/// `log W_e(x)`.
#[inline]
pub fn log_edge_weight(coef: Option<f64>, x: f64) -> f64 {
    match coef {
        Some(c) => c * x - x.exp(),
        None => -x.exp(),
    }
}

pub fn in_kn(n: usize, v: Vertex) -> bool {
    v.0 >= 1 && v.0 <= n && v.1 >= 1 && v.1 + 2 * v.0 <= 2 * n + 2
}

/// All colored edges of the graph on `K_N`.
pub fn kn_edges(n: usize) -> Vec<ColoredEdge> {
    let mut out = Vec::new();
    for p in 1..=n {
        let len = 2 * n + 2 - 2 * p;
        for q in 1..=len {
            if q % 2 == 1 {
                let fwd = if p % 2 == 1 { Color::Blue } else { Color::Red };
                if q < len {
                    out.push(ColoredEdge { from: (p, q), to: (p, q + 1), color: fwd });
                }
                if q >= 3 {
                    let back = if p % 2 == 1 { Color::Red } else { Color::Blue };
                    out.push(ColoredEdge { from: (p, q), to: (p, q - 1), color: back });
                }
            } else if p >= 2 {
                out.push(ColoredEdge { from: (p, q), to: (p - 1, q - 1), color: Color::Black });
                out.push(ColoredEdge { from: (p, q), to: (p - 1, q + 1), color: Color::Black });
            }
        }
    }
    out.sort();
    out
}

/// Interior set `Lambda` inside `Lambda*_N`, its boundary, and the edges touching `Lambda`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiamondDomain {
    pub n: usize,
    pub interior: Vec<Vertex>,
    pub boundary: Vec<Vertex>,
    pub edges: Vec<ColoredEdge>,
}

impl DiamondDomain {
    pub fn new(n: usize, interior: impl IntoIterator<Item = Vertex>) -> Result<DiamondDomain> {
        let set: BTreeSet<Vertex> = interior.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Domain("empty interior".into()));
        }
        for &(i, j) in &set {
            if !(i >= 1 && i < n && j >= 1 && j + 2 * i <= 2 * n + 1) {
                return Err(Error::Domain(format!("vertex ({i},{j}) outside Lambda*_{n}")));
            }
        }
        let all = kn_edges(n);
        let edges: Vec<ColoredEdge> =
            all.into_iter().filter(|e| set.contains(&e.from) || set.contains(&e.to)).collect();
        // connectivity through edges inside the interior
        let start = *set.iter().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for e in &edges {
                let w = if e.from == v {
                    e.to
                } else if e.to == v {
                    e.from
                } else {
                    continue;
                };
                if set.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        if seen.len() != set.len() {
            return Err(Error::Domain("interior is not connected".into()));
        }
        let boundary: BTreeSet<Vertex> =
            edges.iter().flat_map(|e| [e.from, e.to]).filter(|v| !set.contains(v)).collect();
        Ok(DiamondDomain { n, interior: set.into_iter().collect(), boundary: boundary.into_iter().collect(), edges })
    }

    fn graph(&self, params: ModelParams, u: &[f64], boundary: &[f64]) -> Result<Graph> {
        if u.len() != self.interior.len() {
            return Err(Error::Domain(format!(
                "expected {} interior values, got {}",
                self.interior.len(),
                u.len()
            )));
        }
        if boundary.len() != self.boundary.len() {
            return Err(Error::Domain(format!(
                "expected {} boundary values, got {}",
                self.boundary.len(),
                boundary.len()
            )));
        }
        let mut idx = BTreeMap::new();
        let mut values = Vec::with_capacity(u.len() + boundary.len());
        let mut free = Vec::with_capacity(values.capacity());
        for (k, &v) in self.interior.iter().enumerate() {
            idx.insert(v, values.len());
            values.push(u[k]);
            free.push(true);
        }
        for (k, &v) in self.boundary.iter().enumerate() {
            idx.insert(v, values.len());
            values.push(boundary[k]);
            free.push(false);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (a, b) = (idx[&e.from], idx[&e.to]);
            if values[b] == f64::INFINITY && e.color == Color::Black && !free[b] {
                continue; // weight identically 1
            }
            if !values[a].is_finite() || !values[b].is_finite() {
                return Err(Error::Domain(format!(
                    "value at {:?} or {:?} is not finite on a {:?} edge",
                    e.from, e.to, e.color
                )));
            }
            edges.push(Edge { from: a, to: b, coef: e.color.coef(params) });
        }
        Ok(Graph::new(values, free, edges))
    }
}

/// `sum_e log W_e(u_from - u_to)` over the domain edges (unnormalized).
pub fn gibbs_log_density(domain: &DiamondDomain, params: ModelParams, u: &[f64], boundary: &[f64]) -> Result<f64> {
    Ok(domain.graph(params, u, boundary)?.log_density())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Edge {
    pub from: usize,
    pub to: usize,
    pub coef: Option<f64>,
}

/// Vertex values with a fixed/free flag and weighted directed edges.
#[derive(Debug, Clone)]
pub(crate) struct Graph {
    pub values: Vec<f64>,
    pub free: Vec<bool>,
    pub edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(values: Vec<f64>, free: Vec<bool>, edges: Vec<Edge>) -> Graph {
        let mut incident = vec![Vec::new(); values.len()];
        for (k, e) in edges.iter().enumerate() {
            incident[e.from].push(k);
            if e.to != e.from {
                incident[e.to].push(k);
            }
        }
        Graph { values, free, edges, incident }
    }

    pub fn log_density(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| log_edge_weight(e.coef, self.values[e.from] - self.values[e.to]))
            .sum()
    }

    /// Shift every vertex of `set` (a membership mask) by a slice-sampled amount.
    /// Only edges crossing the set matter; they collapse to `A t - e^{lb + t} - e^{lc - t}`.
    pub fn shift_move(&mut self, crossing: &[usize], member: &dyn Fn(usize) -> bool, shift: &mut dyn FnMut(&mut Graph, f64), rng: &mut RngStream) {
        let mut a = 0.0;
        let mut lb = f64::NEG_INFINITY;
        let mut lc = f64::NEG_INFINITY;
        for &k in crossing {
            let e = self.edges[k];
            let (fi, ti) = (member(e.from), member(e.to));
            if fi == ti {
                continue;
            }
            let x = self.values[e.from] - self.values[e.to];
            if fi {
                // x + t
                a += e.coef.unwrap_or(0.0);
                lb = log_add_exp(lb, x);
            } else {
                // x - t
                a -= e.coef.unwrap_or(0.0);
                lc = log_add_exp(lc, x);
            }
        }
        let logf = |t: f64| a * t - (lb + t).exp() - (lc - t).exp();
        let t = slice_sample(0.0, &logf, 2.0, rng);
        shift(self, t);
    }

    /// Single-site slice update of vertex `v`.
    pub fn update_site(&mut self, v: usize, rng: &mut RngStream) {
        let inc = std::mem::take(&mut self.incident[v]);
        let base = self.values[v];
        let mut a = 0.0;
        let mut lb = f64::NEG_INFINITY;
        let mut lc = f64::NEG_INFINITY;
        for &k in &inc {
            let e = self.edges[k];
            if e.from == e.to {
                continue;
            }
            let x = self.values[e.from] - self.values[e.to];
            if e.from == v {
                a += e.coef.unwrap_or(0.0);
                lb = log_add_exp(lb, x);
            } else {
                a -= e.coef.unwrap_or(0.0);
                lc = log_add_exp(lc, x);
            }
        }
        self.incident[v] = inc;
        let logf = |t: f64| a * t - (lb + t).exp() - (lc - t).exp();
        let t = slice_sample(0.0, &logf, 2.0, rng);
        self.values[v] = base + t;
    }

    pub fn sweep(&mut self, rng: &mut RngStream) {
        for v in 0..self.values.len() {
            if self.free[v] {
                self.update_site(v, rng);
            }
        }
    }
}

/// Univariate slice sampler with stepping out (unbounded) and shrinkage.
pub fn slice_sample(x0: f64, logf: &dyn Fn(f64) -> f64, w: f64, rng: &mut RngStream) -> f64 {
    let f0 = logf(x0);
    assert!(f0.is_finite(), "slice sampler started at a point of zero density");
    let level = f0 + rng.uniform().ln();
    let mut lo = x0 - w * rng.uniform();
    let mut hi = lo + w;
    while logf(lo) > level {
        lo -= w;
    }
    while logf(hi) > level {
        hi += w;
    }
    loop {
        let x = lo + (hi - lo) * rng.uniform();
        if logf(x) > level {
            return x;
        }
        if x < x0 {
            lo = x;
        } else {
            hi = x;
        }
    }
}

/// Burn-in, thinning and diagnostics for a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub samples: usize,
    /// Minimum effective sample size of the tracked statistic.
    pub min_ess: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig { burn_in: 1000, thin: 10, samples: 1000, min_ess: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcRun {
    /// Kept states, interior values in domain order.
    pub draws: Vec<Vec<f64>>,
    /// Effective sample size of the first interior vertex.
    pub ess: f64,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

impl McmcRun {
    fn finish(draws: Vec<Vec<f64>>, cfg: &McmcConfig) -> McmcRun {
        let trace: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let ess = effective_sample_size(&trace);
        let converged = ess >= cfg.min_ess;
        let diagnostic = (!converged).then(|| {
            format!("effective sample size {ess:.1} below {} after {} draws", cfg.min_ess, draws.len())
        });
        McmcRun { draws, ess, converged, diagnostic }
    }

    pub fn site(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }
}

/// ESS from the initial positive sequence of autocorrelations.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / (n as f64 * var)
    };
    let mut s = 0.0;
    let mut lag = 1;
    while lag + 1 < n / 2 {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        s += pair;
        lag += 2;
    }
    n as f64 / (1.0 + 2.0 * s)
}

/// Slice-sampling Gibbs chain on a diamond domain. Interior values start at the
/// boundary mean.
pub fn mcmc_sample_gibbs(
    domain: &DiamondDomain,
    params: ModelParams,
    boundary: &[f64],
    cfg: &McmcConfig,
    rng: &mut RngStream,
) -> Result<McmcRun> {
    let finite: Vec<f64> = boundary.iter().copied().filter(|v| v.is_finite()).collect();
    let start = if finite.is_empty() { 0.0 } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let init = vec![start; domain.interior.len()];
    mcmc_sample_gibbs_from(domain, params, &init, boundary, cfg, rng)
}

pub fn mcmc_sample_gibbs_from(
    domain: &DiamondDomain,
    params: ModelParams,
    init: &[f64],
    boundary: &[f64],
    cfg: &McmcConfig,
    rng: &mut RngStream,
) -> Result<McmcRun> {
    let mut g = domain.graph(params, init, boundary)?;
    let k = domain.interior.len();
    for _ in 0..cfg.burn_in {
        g.sweep(rng);
    }
    let mut draws = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin.max(1) {
            g.sweep(rng);
        }
        draws.push(g.values[..k].to_vec());
    }
    Ok(McmcRun::finish(draws, cfg))
}

/// Interacting random walk of length `T`: `L1(1..=2T-2)` free, `L1(2T-1) = a`;
/// `L2(1..=2T-1)` free, `L2(2T) = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrwSample {
    pub t: usize,
    pub a: f64,
    pub b: f64,
    /// `L1(1..=2T-1)` including the pinned end.
    pub l1: Vec<f64>,
    /// `L2(1..=2T)` including the pinned end.
    pub l2: Vec<f64>,
}

impl IrwSample {
    pub fn sup_abs(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        m(&self.l1) + m(&self.l2)
    }
}

/// Sampler state for the IRW.
pub struct IrwChain {
    t: usize,
    graph: Graph,
    /// crossing edges for a joint left shift at cut `c` (vertices with position <= c move)
    joint_cuts: Vec<Vec<usize>>,
    row1_cuts: Vec<Vec<usize>>,
    row2_cuts: Vec<Vec<usize>>,
}

impl IrwChain {
    /// Vertex layout: `L1(j)` at `j-1` for `j in 1..=2T-1`, `L2(j)` at `2T-2+j` for `j in 1..=2T`.
    pub fn new(params: ModelParams, t: usize, a: f64, b: f64, interaction: bool) -> Result<IrwChain> {
        if t < 2 {
            return Err(Error::Domain(format!("IRW needs T >= 2, got {t}")));
        }
        let n1 = 2 * t - 1;
        let n2 = 2 * t;
        let l1 = |j: usize| j - 1;
        let l2 = |j: usize| n1 + j - 1;
        let (tp, tm) = (params.theta + params.alpha, params.theta - params.alpha);
        let mut edges = Vec::new();
        for j in 1..=2 * t - 2 {
            if j % 2 == 1 {
                edges.push(Edge { from: l1(j), to: l1(j + 1), coef: Some(tp) });
            } else {
                edges.push(Edge { from: l1(j + 1), to: l1(j), coef: Some(tm) });
            }
        }
        for j in 1..=2 * t - 1 {
            if j % 2 == 1 {
                edges.push(Edge { from: l2(j), to: l2(j + 1), coef: Some(tm) });
            } else {
                edges.push(Edge { from: l2(j + 1), to: l2(j), coef: Some(tp) });
            }
        }
        if interaction {
            for j in 1..t {
                edges.push(Edge { from: l2(2 * j), to: l1(2 * j - 1), coef: None });
                edges.push(Edge { from: l2(2 * j), to: l1(2 * j + 1), coef: None });
            }
        }
        // start from a line between the pinned values
        let mut values = vec![0.0; n1 + n2];
        let mut free = vec![true; n1 + n2];
        for j in 1..=n1 {
            values[l1(j)] = a;
        }
        for j in 1..=n2 {
            values[l2(j)] = b.min(a);
        }
        values[l1(n1)] = a;
        values[l2(n2)] = b;
        free[l1(n1)] = false;
        free[l2(n2)] = false;
        let pos = |v: usize| if v < n1 { v + 1 } else { v - n1 + 1 };
        let row = |v: usize| if v < n1 { 1 } else { 2 };
        let crossing = |inside: &dyn Fn(usize) -> bool| -> Vec<usize> {
            edges.iter().enumerate().filter(|(_, e)| inside(e.from) != inside(e.to)).map(|(k, _)| k).collect()
        };
        let joint_cuts = (1..2 * t - 1).map(|c| crossing(&|v| pos(v) <= c)).collect();
        let row1_cuts = (1..2 * t - 1).map(|c| crossing(&|v| row(v) == 1 && pos(v) <= c)).collect();
        let row2_cuts = (1..2 * t).map(|c| crossing(&|v| row(v) == 2 && pos(v) <= c)).collect();
        Ok(IrwChain { t, graph: Graph::new(values, free, edges), joint_cuts, row1_cuts, row2_cuts })
    }

    fn n1(&self) -> usize {
        2 * self.t - 1
    }

    /// One sweep: single-site updates, joint left-part shifts at every cut, and row-wise
    /// left-part shifts at a few random cuts.
    pub fn sweep(&mut self, rng: &mut RngStream) {
        self.graph.sweep(rng);
        let n1 = self.n1();
        let pos = move |v: usize| if v < n1 { v + 1 } else { v - n1 + 1 };
        for c in 1..2 * self.t - 1 {
            let cross = std::mem::take(&mut self.joint_cuts[c - 1]);
            let member = move |v: usize| pos(v) <= c;
            self.graph.shift_move(
                &cross,
                &member,
                &mut |g, s| {
                    for v in 0..g.values.len() {
                        if member(v) {
                            g.values[v] += s;
                        }
                    }
                },
                rng,
            );
            self.joint_cuts[c - 1] = cross;
        }
        for _ in 0..4 {
            let c = 1 + (rng.next_u64() % (2 * self.t as u64 - 2)) as usize;
            let cross = std::mem::take(&mut self.row1_cuts[c - 1]);
            self.graph.shift_move(&cross, &|v| v < n1 && v < c, &mut |g, s| (0..c).for_each(|v| g.values[v] += s), rng);
            self.row1_cuts[c - 1] = cross;
            let c = 1 + (rng.next_u64() % (2 * self.t as u64 - 1)) as usize;
            let cross = std::mem::take(&mut self.row2_cuts[c - 1]);
            self.graph.shift_move(
                &cross,
                &|v| v >= n1 && v - n1 < c,
                &mut |g, s| (n1..n1 + c).for_each(|v| g.values[v] += s),
                rng,
            );
            self.row2_cuts[c - 1] = cross;
        }
    }

    pub fn state(&self, a: f64, b: f64) -> IrwSample {
        let n1 = self.n1();
        IrwSample { t: self.t, a, b, l1: self.graph.values[..n1].to_vec(), l2: self.graph.values[n1..].to_vec() }
    }

    pub fn log_density(&self) -> f64 {
        self.graph.log_density()
    }
}

/// Draws from the IRW by MCMC. With `interaction = false` the black terms are dropped.
pub fn sample_irw(
    params: ModelParams,
    t: usize,
    a: f64,
    b: f64,
    cfg: &McmcConfig,
    interaction: bool,
    rng: &mut RngStream,
) -> Result<(Vec<IrwSample>, McmcRun)> {
    let mut chain = IrwChain::new(params, t, a, b, interaction)?;
    for _ in 0..cfg.burn_in {
        chain.sweep(rng);
    }
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin.max(1) {
            chain.sweep(rng);
        }
        out.push(chain.state(a, b));
    }
    let draws: Vec<Vec<f64>> = out.iter().map(|s| vec![s.sup_abs()]).collect();
    let run = McmcRun::finish(draws, cfg);
    Ok((out, run))
}

/// IRW log-density written term by term from its definition (constant term dropped).
pub fn irw_log_density(params: ModelParams, s: &IrwSample, interaction: bool) -> f64 {
    let t = s.t;
    let g = |beta: f64, x: f64| beta * x - x.exp();
    let u1 = |j: usize| s.l1[j - 1];
    let u2 = |j: usize| s.l2[j - 1];
    let mut total = 0.0;
    if interaction {
        for j in 1..t {
            total -= (u2(2 * j) - u1(2 * j - 1)).exp() + (u2(2 * j) - u1(2 * j + 1)).exp();
        }
    }
    // (-1)^{j+1}
    let sgn = |j: usize| if j % 2 == 1 { 1.0 } else { -1.0 };
    for j in 1..=2 * t - 2 {
        total += g(params.theta + sgn(j) * params.alpha, sgn(j) * (u1(j) - u1(j + 1)));
    }
    for j in 1..=2 * t - 1 {
        total += g(params.theta - sgn(j) * params.alpha, sgn(j) * (u2(j) - u2(j + 1)));
    }
    total
}

/// Per-inequality violation rates of the ordering statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub n: usize,
    pub k: usize,
    pub envs: usize,
    pub slack: f64,
    /// Fraction of ensembles with at least one violation, per inequality.
    pub rates: [f64; 4],
}

/// Counts, per inequality, the ensembles violating it for some `i <= k`, `p <= N - i`.
pub fn ordering_check(ensembles: &[LineEnsemble], k: usize, slack: Option<f64>) -> Result<OrderingReport> {
    let first = ensembles.first().ok_or_else(|| Error::Domain("no ensembles".into()))?;
    let n = first.n;
    if ensembles.iter().any(|e| e.n != n || e.kmax < k + 1) {
        return Err(Error::Domain(format!("all ensembles need size {n} and at least {} curves", k + 1)));
    }
    let slack = slack.unwrap_or_else(|| (n as f64).ln().powi(2));
    let mut counts = [0usize; 4];
    for e in ensembles {
        let mut hit = [false; 4];
        for i in 1..=k {
            for p in 1..=n - i {
                let h = |c: usize, q: usize| e.h(c, q);
                hit[0] |= h(i, 2 * p + 1) > h(i, 2 * p) + slack;
                hit[1] |= h(i, 2 * p - 1) > h(i, 2 * p) + slack;
                hit[2] |= h(i + 1, 2 * p) > h(i, 2 * p + 1) + slack;
                hit[3] |= h(i + 1, 2 * p) > h(i, 2 * p - 1) + slack;
            }
        }
        for (c, h) in counts.iter_mut().zip(hit) {
            *c += usize::from(h);
        }
    }
    let m = ensembles.len() as f64;
    Ok(OrderingReport { n, k, envs: ensembles.len(), slack, rates: counts.map(|c| c as f64 / m) })
}
