//! Exact master equation for very small networks.
//!
//! A state is the status of every node together with the set of present
//! links. With `E = N(N-1)/2` node pairs it is encoded as
//! `(edge_bits << N) | status_bits`, where node 1 is the most significant
//! status bit and pair `p` (pairs ordered lexicographically) is bit
//! `E-1-p` of `edge_bits`. For `N = 2` this gives the order
//! `SS, SI, IS, II` on the empty graph followed by the same four on the
//! single edge.
//!
//! Generators follow the column convention `dx/dt = M x`: `M[(to, from)]`
//! is a transition rate and every column sums to zero.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LinkType, ModelParams};
use crate::ode::{self, OdeOptions};

pub const DEFAULT_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullState {
    pub infected: Vec<bool>,
    /// Presence of each node pair, lexicographic `(u, v)` with `u < v`.
    pub edges: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl StateSpace {
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::CapExceeded { n, cap });
        }
        if n < 2 {
            return Err(Error::InvalidParams("need at least 2 nodes".into()));
        }
        let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Ok(StateSpace { n, pairs })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn dim(&self) -> usize {
        1 << (self.n + self.n_pairs())
    }

    fn status_bit(&self, u: usize) -> usize {
        1 << (self.n - 1 - u)
    }

    fn edge_bit(&self, p: usize) -> usize {
        1 << (self.n + self.n_pairs() - 1 - p)
    }

    pub fn is_infected(&self, idx: usize, u: usize) -> bool {
        idx & self.status_bit(u) != 0
    }

    pub fn has_pair(&self, idx: usize, p: usize) -> bool {
        idx & self.edge_bit(p) != 0
    }

    pub fn decode(&self, idx: usize) -> FullState {
        FullState {
            infected: (0..self.n).map(|u| self.is_infected(idx, u)).collect(),
            edges: (0..self.n_pairs()).map(|p| self.has_pair(idx, p)).collect(),
        }
    }

    pub fn encode(&self, st: &FullState) -> usize {
        let mut idx = 0;
        for (u, &inf) in st.infected.iter().enumerate() {
            if inf {
                idx |= self.status_bit(u);
            }
        }
        for (p, &e) in st.edges.iter().enumerate() {
            if e {
                idx |= self.edge_bit(p);
            }
        }
        idx
    }

    pub fn n_infected(&self, idx: usize) -> usize {
        (idx & ((1 << self.n) - 1)).count_ones() as usize
    }

    pub fn n_edges(&self, idx: usize) -> usize {
        (idx >> self.n).count_ones() as usize
    }

    pub fn pair_index(&self, u: usize, v: usize) -> usize {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.pairs.iter().position(|&q| q == (u, v)).expect("valid pair")
    }

    /// Human-readable label, e.g. `SI|1` for a susceptible node 1, an
    /// infected node 2 and the single link present.
    pub fn label(&self, idx: usize) -> String {
        let st = self.decode(idx);
        let s: String = st.infected.iter().map(|&i| if i { 'I' } else { 'S' }).collect();
        let e: String = st.edges.iter().map(|&b| if b { '1' } else { '0' }).collect();
        format!("{s}|{e}")
    }

    /// Infection count of neighbours of `u` in state `idx`.
    fn infected_neighbours(&self, idx: usize, u: usize) -> usize {
        self.pairs
            .iter()
            .enumerate()
            .filter(|&(p, &(a, b))| {
                self.has_pair(idx, p)
                    && ((a == u && self.is_infected(idx, b)) || (b == u && self.is_infected(idx, a)))
            })
            .count()
    }

    /// Outgoing transitions `(target, rate)` of state `idx`, rates > 0 only.
    pub fn transitions(&self, idx: usize, p: &ModelParams) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            let bit = self.status_bit(u);
            if self.is_infected(idx, u) {
                if p.gamma > 0.0 {
                    out.push((idx & !bit, p.gamma));
                }
            } else {
                let k = self.infected_neighbours(idx, u);
                if k > 0 && p.tau > 0.0 {
                    out.push((idx | bit, p.tau * k as f64));
                }
            }
        }
        for (q, &(a, b)) in self.pairs.iter().enumerate() {
            let t = LinkType::of(self.is_infected(idx, a), self.is_infected(idx, b));
            let bit = self.edge_bit(q);
            if self.has_pair(idx, q) {
                if p.omega(t) > 0.0 {
                    out.push((idx & !bit, p.omega(t)));
                }
            } else if p.alpha(t) > 0.0 {
                out.push((idx | bit, p.alpha(t)));
            }
        }
        out
    }

    /// Image of state `idx` under the node permutation `perm` (node `u`
    /// becomes node `perm[u]`).
    pub fn permute(&self, idx: usize, perm: &[usize]) -> usize {
        let mut out = 0;
        for (u, &pu) in perm.iter().enumerate().take(self.n) {
            if self.is_infected(idx, u) {
                out |= self.status_bit(pu);
            }
        }
        for (q, &(a, b)) in self.pairs.iter().enumerate() {
            if self.has_pair(idx, q) {
                out |= self.edge_bit(self.pair_index(perm[a], perm[b]));
            }
        }
        out
    }
}

/// Dense generator with `M[(to, from)]` rates and negative column sums on
/// the diagonal.
pub fn build_generator(space: &StateSpace, p: &ModelParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let dim = space.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for from in 0..dim {
        let mut out = 0.0;
        for (to, rate) in space.transitions(from, p) {
            m[(to, from)] += rate;
            out += rate;
        }
        m[(from, from)] = -out;
    }
    Ok(m)
}

/// Coordinate triplets `row col rate` for the non-zero entries.
pub fn write_triplets<W: Write>(m: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "row col rate")?;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != 0.0 {
                writeln!(w, "{r} {c} {v}")?;
            }
        }
    }
    Ok(())
}

/// Largest absolute column sum.
pub fn column_sum_defect(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.sum().abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingCheck {
    /// Stationary vector, normalized to unit sum.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// True when all mass sits on all-susceptible states.
    pub supported_on_all_s: bool,
}

/// Solves `M x = 0, Σ x = 1`. A singular augmented system means the zero
/// eigenvalue is not simple.
pub fn absorbing_check(space: &StateSpace, m: &DMatrix<f64>) -> Result<AbsorbingCheck> {
    let dim = m.nrows();
    let mut a = m.clone();
    for c in 0..dim {
        a[(dim - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(dim);
    rhs[dim - 1] = 1.0;
    let lu = a.lu();
    if lu.determinant().abs() < f64::MIN_POSITIVE {
        return Err(Error::MultiplicityWarning);
    }
    let mut x = lu.solve(&rhs).ok_or(Error::MultiplicityWarning)?;
    // round-off can leave entries like -1e-17
    x.iter_mut().filter(|v| **v < 0.0 && **v > -1e-12).for_each(|v| *v = 0.0);
    x /= x.sum();
    let residual = (m * &x).amax();
    let scale = m.amax().max(1.0);
    if !(residual < 1e-9 * scale) {
        return Err(Error::MultiplicityWarning);
    }
    let supported_on_all_s = (0..dim).all(|s| space.n_infected(s) == 0 || x[s].abs() < 1e-12);
    Ok(AbsorbingCheck { vector: x.iter().copied().collect(), residual, supported_on_all_s })
}

pub fn spectrum(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCheck {
    pub half_angle: f64,
    /// `half_angle - max angle` over non-zero eigenvalues; negative values
    /// mean some eigenvalue lies outside the cone.
    pub margin: f64,
    pub inside: bool,
}

/// Angle between `λ` and the negative real axis.
pub fn angle_from_negative_axis(z: Complex64) -> f64 {
    z.im.abs().atan2(-z.re)
}

/// Checks that every eigenvalue lies in the cone of half-angle
/// `π/2 - π/n` around the negative real axis.
pub fn cone_check(eigs: &[Complex64], n: usize, tol: f64) -> ConeCheck {
    let half_angle = std::f64::consts::FRAC_PI_2 - std::f64::consts::PI / n as f64;
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let max_angle = eigs
        .iter()
        .filter(|z| z.norm() > 1e-10 * scale)
        .map(|&z| angle_from_negative_axis(z))
        .fold(0.0, f64::max);
    let margin = half_angle - max_angle;
    ConeCheck { half_angle, margin, inside: margin >= -tol }
}

/// Generator of the deterministic cycle `1 -> 2 -> ... -> n -> 1` with unit
/// rates, whose spectrum touches the cone boundary.
pub fn cycle_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = -1.0;
        m[((i + 1) % n, i)] = 1.0;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingRatio {
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    /// `exp(-μ/ν)` for `λ = -μ + iν`.
    pub ratio: f64,
    /// `exp(-2πμ/ν)`, the amplitude ratio over one full period.
    pub ratio_per_period: f64,
}

pub fn damping_ratio(z: Complex64) -> DampingRatio {
    let mu = -z.re;
    let nu = z.im.abs();
    DampingRatio {
        eigenvalue_re: z.re,
        eigenvalue_im: z.im,
        ratio: (-mu / nu).exp(),
        ratio_per_period: (-2.0 * std::f64::consts::PI * mu / nu).exp(),
    }
}

/// Non-zero eigenvalue with the largest real part, preferring the one with
/// positive imaginary part within a conjugate pair.
pub fn dominant_nonzero(eigs: &[Complex64]) -> Option<Complex64> {
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    eigs.iter()
        .copied()
        .filter(|z| z.norm() > 1e-10 * scale)
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
}

/// Dominant complex (oscillatory) eigenvalue, if any.
pub fn dominant_complex(eigs: &[Complex64]) -> Option<Complex64> {
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    eigs.iter()
        .copied()
        .filter(|z| z.im > 1e-9 * scale)
        .max_by(|a, b| a.re.total_cmp(&b.re))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dim: usize,
    pub eigenvalues: Vec<(f64, f64)>,
    pub cone: ConeCheck,
    pub dominant_nonzero: Option<(f64, f64)>,
    pub dominant_complex: Option<DampingRatio>,
}

pub fn spectrum_report(m: &DMatrix<f64>) -> Result<SpectrumReport> {
    let eigs = spectrum(m)?;
    Ok(SpectrumReport {
        dim: m.nrows(),
        cone: cone_check(&eigs, m.nrows(), 1e-8),
        dominant_nonzero: dominant_nonzero(&eigs).map(|z| (z.re, z.im)),
        dominant_complex: dominant_complex(&eigs).map(damping_ratio),
        eigenvalues: eigs.iter().map(|z| (z.re, z.im)).collect(),
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Partition of the state space into classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// `class_of[s]` for every state.
    pub class_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = BTreeMap::new();
        let mut class_of = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = remap.len();
            class_of.push(*remap.entry(l).or_insert(next));
        }
        let mut members = vec![Vec::new(); remap.len()];
        for (s, &c) in class_of.iter().enumerate() {
            members[c].push(s);
        }
        Partition { class_of, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Sums a full probability vector over classes.
    pub fn aggregate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (s, &c) in self.class_of.iter().enumerate() {
            out[c] += x[s];
        }
        out
    }
}

/// Orbits of the state space under all node relabellings.
pub fn symmetry_orbits(space: &StateSpace) -> Partition {
    let perms = permutations(space.n);
    let labels: Vec<usize> = (0..space.dim())
        .map(|s| perms.iter().map(|p| space.permute(s, p)).min().unwrap())
        .collect();
    Partition::from_labels(&labels)
}

/// Number of orbits by Burnside's lemma, counting fixed points of every
/// permutation directly.
pub fn burnside_count(space: &StateSpace) -> usize {
    let perms = permutations(space.n);
    let fixed: usize = perms
        .iter()
        .map(|p| (0..space.dim()).filter(|&s| space.permute(s, p) == s).count())
        .sum();
    fixed / perms.len()
}

/// `R[(class, s)]`: total rate from state `s` into each class.
fn class_rates(m: &DMatrix<f64>, part: &Partition) -> DMatrix<f64> {
    let dim = m.nrows();
    let mut r = DMatrix::zeros(part.len(), dim);
    for s in 0..dim {
        for t in 0..dim {
            let v = m[(t, s)];
            if v != 0.0 {
                r[(part.class_of[t], s)] += v;
            }
        }
    }
    r
}

/// Worst violation of rate constancy: for each pair of classes the total
/// rate from a member of the first into the second must not depend on the
/// member.
pub fn lumpability_defect(m: &DMatrix<f64>, part: &Partition) -> f64 {
    let r = class_rates(m, part);
    let mut worst: f64 = 0.0;
    for members in &part.members {
        let rep = members[0];
        for &s in &members[1..] {
            for c in 0..part.len() {
                worst = worst.max((r[(c, s)] - r[(c, rep)]).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumpedSystem {
    pub partition: Partition,
    /// Lumped generator, same column convention as the full one.
    #[serde(skip)]
    pub generator: DMatrix<f64>,
    pub representatives: Vec<usize>,
    pub defect: f64,
}

pub fn lump(m: &DMatrix<f64>, part: Partition) -> Result<LumpedSystem> {
    let defect = lumpability_defect(m, &part);
    if defect > 1e-12 * m.amax().max(1.0) {
        return Err(Error::ExactnessViolation(defect));
    }
    let r = class_rates(m, &part);
    let k = part.len();
    let reps: Vec<usize> = part.members.iter().map(|c| c[0]).collect();
    let generator = DMatrix::from_fn(k, k, |to, from| r[(to, reps[from])]);
    Ok(LumpedSystem { partition: part, generator, representatives: reps, defect })
}

pub fn lump_by_symmetry(space: &StateSpace, m: &DMatrix<f64>) -> Result<LumpedSystem> {
    lump(m, symmetry_orbits(space))
}

/// Pairs of classes whose union keeps the partition exactly lumpable.
pub fn mergeable_pairs(m: &DMatrix<f64>, part: &Partition, tol: f64) -> Vec<(usize, usize)> {
    let r = class_rates(m, part);
    let k = part.len();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let states: Vec<usize> =
                part.members[a].iter().chain(&part.members[b]).copied().collect();
            let rep = states[0];
            let ok = states[1..].iter().all(|&s| {
                (0..k).filter(|&c| c != a && c != b).all(|c| (r[(c, s)] - r[(c, rep)]).abs() <= tol)
                    && ((r[(a, s)] + r[(b, s)]) - (r[(a, rep)] + r[(b, rep)])).abs() <= tol
            });
            if ok {
                out.push((a, b));
            }
        }
    }
    out
}

/// Classes that no transition enters from outside the class.
pub fn classes_without_inflow(m: &DMatrix<f64>, part: &Partition) -> Vec<usize> {
    let r = class_rates(m, part);
    (0..part.len())
        .filter(|&c| {
            (0..m.ncols()).all(|s| part.class_of[s] == c || r[(c, s)] == 0.0)
        })
        .collect()
}

/// States reachable from `start` through positive rates.
pub fn reachable_from(m: &DMatrix<f64>, start: usize) -> Vec<bool> {
    let dim = m.nrows();
    let mut seen = vec![false; dim];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for r in 0..dim {
            if r != v && m[(r, v)] > 0.0 && !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
    }
    seen
}

/// Number of partition classes containing a state reachable from `start`.
pub fn reachable_class_count(m: &DMatrix<f64>, part: &Partition, start: usize) -> usize {
    let seen = reachable_from(m, start);
    let mut hit = vec![false; part.len()];
    for (s, &ok) in seen.iter().enumerate() {
        if ok {
            hit[part.class_of[s]] = true;
        }
    }
    hit.iter().filter(|&&h| h).count()
}

/// Length of the longest simple directed cycle in the transition graph.
/// Exhaustive search, intended for the tiny `N = 2` chain.
pub fn longest_simple_cycle(m: &DMatrix<f64>) -> usize {
    let dim = m.nrows();
    let adj: Vec<Vec<usize>> = (0..dim)
        .map(|from| (0..dim).filter(|&to| to != from && m[(to, from)] > 0.0).collect())
        .collect();
    let mut best = 0;
    // cycles are counted from their smallest vertex
    fn dfs(v: usize, start: usize, depth: usize, adj: &[Vec<usize>], on: &mut [bool], best: &mut usize) {
        for &w in &adj[v] {
            if w == start {
                *best = (*best).max(depth);
            } else if w > start && !on[w] {
                on[w] = true;
                dfs(w, start, depth + 1, adj, on, best);
                on[w] = false;
            }
        }
    }
    let mut on = vec![false; dim];
    for start in 0..dim {
        on[start] = true;
        dfs(start, start, 1, &adj, &mut on, &mut best);
        on[start] = false;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolveMethod {
    RungeKutta,
    Uniformization,
    /// Uniformization when `max|M_ii| · t_max > 1e4`, Runge–Kutta otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub probabilities: Vec<Vec<f64>>,
    pub method: EvolveMethod,
}

fn check_distribution(x0: &[f64]) -> Result<()> {
    if x0.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParams("initial probabilities must be non-negative".into()));
    }
    let total: f64 = x0.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!("initial probabilities sum to {total}")));
    }
    Ok(())
}

/// Solves `dx/dt = M x` on `t_grid` (starting at `t_grid[0]`).
pub fn evolve(
    m: &DMatrix<f64>,
    x0: &[f64],
    t_grid: &[f64],
    method: EvolveMethod,
) -> Result<Evolution> {
    check_distribution(x0)?;
    if x0.len() != m.nrows() {
        return Err(Error::InvalidParams("state vector and generator differ in size".into()));
    }
    let lambda = (0..m.nrows()).map(|i| -m[(i, i)]).fold(0.0, f64::max);
    let span = t_grid.last().copied().unwrap_or(0.0) - t_grid.first().copied().unwrap_or(0.0);
    let method = match method {
        EvolveMethod::Auto if lambda * span > 1e4 => EvolveMethod::Uniformization,
        EvolveMethod::Auto => EvolveMethod::RungeKutta,
        other => other,
    };
    let mut probabilities = match method {
        EvolveMethod::Uniformization => uniformization(m, x0, t_grid, lambda)?,
        _ => {
            let opts = OdeOptions { rtol: 1e-10, atol: 1e-13, ..OdeOptions::default() };
            ode::integrate(
                |_, y, dy| {
                    let x = nalgebra::DVectorView::from_slice(y, y.len());
                    let mut out = nalgebra::DVectorViewMut::from_slice(dy, y.len());
                    out.gemv(1.0, m, &x, 0.0);
                },
                x0,
                t_grid,
                &opts,
            )?
            .states
        }
    };
    for x in &mut probabilities {
        for v in x.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("probability mass drifted to {total}")));
        }
    }
    Ok(Evolution { times: t_grid.to_vec(), probabilities, method })
}

fn uniformization(
    m: &DMatrix<f64>,
    x0: &[f64],
    t_grid: &[f64],
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    let dim = m.nrows();
    let mut out = vec![x0.to_vec()];
    if lambda == 0.0 {
        out.resize(t_grid.len(), x0.to_vec());
        return Ok(out);
    }
    let lam = lambda * 1.000_001;
    let p = DMatrix::identity(dim, dim) + m / lam;
    let mut x = DVector::from_column_slice(x0);
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        // keep each Poisson mean moderate so exp(-λt) stays representable
        let n_sub = ((lam * dt) / 50.0).ceil().max(1.0) as usize;
        let h = dt / n_sub as f64;
        for _ in 0..n_sub {
            let mean = lam * h;
            let mut weight = (-mean).exp();
            let mut cum = weight;
            let mut term = x.clone();
            let mut acc = &term * weight;
            let mut k = 0usize;
            while 1.0 - cum > 1e-15 && k < 10_000 {
                k += 1;
                term = &p * &term;
                weight *= mean / k as f64;
                cum += weight;
                acc += &term * weight;
            }
            x = acc;
        }
        out.push(x.iter().copied().collect());
    }
    Ok(out)
}

/// Expected number of infected nodes and of links for each evolved
/// distribution.
pub fn observables(space: &StateSpace, ev: &Evolution) -> Vec<(f64, f64, f64)> {
    ev.times
        .iter()
        .zip(&ev.probabilities)
        .map(|(&t, x)| {
            let mut inf = 0.0;
            let mut edges = 0.0;
            for (s, &px) in x.iter().enumerate() {
                inf += px * space.n_infected(s) as f64;
                edges += px * space.n_edges(s) as f64;
            }
            (t, inf, edges)
        })
        .collect()
}

/// Mean and variance of the number of infected nodes under `x`.
pub fn prevalence_moments(space: &StateSpace, x: &[f64]) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (s, &px) in x.iter().enumerate() {
        let k = space.n_infected(s) as f64;
        m1 += px * k;
        m2 += px * k * k;
    }
    (m1, m2 - m1 * m1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LumpingReport {
    pub n_nodes: usize,
    pub full_dim: usize,
    pub orbit_classes: usize,
    pub burnside_count: usize,
    pub defect: f64,
    /// Orbit classes reachable from the fully infected complete graph.
    pub reachable_classes: usize,
    pub mergeable_pairs: Vec<(String, String)>,
    pub classes_without_inflow: Vec<String>,
    pub classes: Vec<Vec<String>>,
}

pub fn lumping_report(space: &StateSpace, m: &DMatrix<f64>) -> Result<LumpingReport> {
    let lumped = lump_by_symmetry(space, m)?;
    let part = &lumped.partition;
    let name = |c: usize| space.label(part.members[c][0]);
    let tol = 1e-12 * m.amax().max(1.0);
    Ok(LumpingReport {
        n_nodes: space.n,
        full_dim: space.dim(),
        orbit_classes: part.len(),
        burnside_count: burnside_count(space),
        defect: lumped.defect,
        reachable_classes: reachable_class_count(m, part, space.dim() - 1),
        mergeable_pairs: mergeable_pairs(m, part, tol)
            .into_iter()
            .map(|(a, b)| (name(a), name(b)))
            .collect(),
        classes_without_inflow: classes_without_inflow(m, part).into_iter().map(name).collect(),
        classes: part
            .members
            .iter()
            .map(|c| c.iter().map(|&s| space.label(s)).collect())
            .collect(),
    })
}
