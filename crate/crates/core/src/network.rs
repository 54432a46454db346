//! Network state for the stochastic simulator.
//!
//! Adjacency is a symmetric bit matrix (one bit row per node), which gives
//! O(1) edge queries and word-parallel neighbour scans. Alongside it the
//! state keeps, incrementally:
//!
//! * per-node degree and infected-neighbour counts,
//! * the S and I node sets with O(1) uniform sampling,
//! * three Fenwick trees from which a uniform SI, SS or II edge can be drawn,
//! * the ordered pair counts `[SS]`, `[SI]`, `[II]`.
//!
//! [`NetworkState::count_pairs`] recounts everything from the edge set and
//! is the reference the cached counts are audited against.

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::model::{LinkType, PairCounts, Status};

#[derive(Debug, Clone, Default)]
struct NodeSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl NodeSet {
    const ABSENT: usize = usize::MAX;

    fn with_capacity(n: usize) -> Self {
        NodeSet {
            items: Vec::with_capacity(n),
            pos: vec![Self::ABSENT; n],
        }
    }

    fn insert(&mut self, u: usize) {
        debug_assert_eq!(self.pos[u], Self::ABSENT);
        self.pos[u] = self.items.len();
        self.items.push(u);
    }

    fn remove(&mut self, u: usize) {
        let p = self.pos[u];
        debug_assert_ne!(p, Self::ABSENT);
        let last = self.items.pop().expect("non-empty");
        if last != u {
            self.items[p] = last;
            self.pos[last] = p;
        }
        self.pos[u] = Self::ABSENT;
    }
}

#[derive(Debug, Clone)]
pub struct NetworkState {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    infected_mask: Vec<u64>,
    degree: Vec<u32>,
    inf_nbrs: Vec<u32>,
    sus: NodeSet,
    inf: NodeSet,
    // weight(u) = #I neighbours of S node u; total = #SI edges
    w_si: Fenwick,
    // weight(u) = #S neighbours of S node u; total = [SS]
    w_ss: Fenwick,
    // weight(u) = #I neighbours of I node u; total = [II]
    w_ii: Fenwick,
    counts: PairCounts,
    pub time: f64,
}

fn bit_iter(mut w: u64, base: usize) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if w == 0 {
            None
        } else {
            let tz = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(base + tz)
        }
    })
}

impl NetworkState {
    /// Empty graph with all nodes susceptible.
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64);
        let mut sus = NodeSet::with_capacity(n);
        for u in 0..n {
            sus.insert(u);
        }
        NetworkState {
            n,
            words,
            adj: vec![0; n * words],
            infected_mask: vec![0; words],
            degree: vec![0; n],
            inf_nbrs: vec![0; n],
            sus,
            inf: NodeSet::with_capacity(n),
            w_si: Fenwick::new(n),
            w_ss: Fenwick::new(n),
            w_ii: Fenwick::new(n),
            counts: PairCounts {
                s: n,
                max_edges: n * n.saturating_sub(1) / 2,
                ..PairCounts::default()
            },
            time: 0.0,
        }
    }

    /// Builds a state from an explicit edge list and infected node set.
    /// Self-loops, duplicate edges and out-of-range nodes are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], infected: &[usize]) -> Result<Self> {
        let mut st = NetworkState::empty(n);
        for &u in infected {
            if u >= n {
                return Err(Error::InvalidEdgeList(format!("infected node {u} out of range")));
            }
            if st.is_infected(u) {
                return Err(Error::InvalidEdgeList(format!("node {u} listed twice as infected")));
            }
            st.infect(u);
        }
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidEdgeList(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidEdgeList(format!("self-loop at {u}")));
            }
            if st.has_edge(u, v) {
                return Err(Error::InvalidEdgeList(format!("duplicate edge ({u},{v})")));
            }
            st.add_edge(u, v);
        }
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> PairCounts {
        self.counts
    }

    pub fn n_infected(&self) -> usize {
        self.counts.i
    }

    pub fn status(&self, u: usize) -> Status {
        if self.is_infected(u) {
            Status::I
        } else {
            Status::S
        }
    }

    #[inline]
    pub fn is_infected(&self, u: usize) -> bool {
        self.infected_mask[u / 64] >> (u % 64) & 1 == 1
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degree[u] as usize
    }

    pub fn infected_neighbours(&self, u: usize) -> usize {
        self.inf_nbrs[u] as usize
    }

    pub fn susceptible_nodes(&self) -> &[usize] {
        &self.sus.items
    }

    pub fn infected_nodes(&self) -> &[usize] {
        &self.inf.items
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn neighbours(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(u)
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| bit_iter(bits, w * 64))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbours(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// The `k`-th neighbour of `u` (in index order) with the given status.
    pub fn kth_neighbour_with_status(&self, u: usize, infected: bool, mut k: usize) -> Option<usize> {
        for (w, &bits) in self.row(u).iter().enumerate() {
            let m = if infected {
                bits & self.infected_mask[w]
            } else {
                bits & !self.infected_mask[w]
            };
            let c = m.count_ones() as usize;
            if k < c {
                return bit_iter(m, w * 64).nth(k);
            }
            k -= c;
        }
        None
    }

    fn refresh(&mut self, u: usize) {
        let inf = self.inf_nbrs[u] as u64;
        let sus = self.degree[u] as u64 - inf;
        if self.is_infected(u) {
            self.w_si.set(u, 0);
            self.w_ss.set(u, 0);
            self.w_ii.set(u, inf);
        } else {
            self.w_si.set(u, inf);
            self.w_ss.set(u, sus);
            self.w_ii.set(u, 0);
        }
    }

    fn bump_pairs(&mut self, t: LinkType, add: bool) {
        let c = match t {
            LinkType::SS => &mut self.counts.ss,
            LinkType::SI => &mut self.counts.si,
            LinkType::II => &mut self.counts.ii,
        };
        if add {
            *c += 2;
        } else {
            *c -= 2;
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && !self.has_edge(u, v));
        let w = self.words;
        self.adj[u * w + v / 64] |= 1 << (v % 64);
        self.adj[v * w + u / 64] |= 1 << (u % 64);
        self.degree[u] += 1;
        self.degree[v] += 1;
        let (iu, iv) = (self.is_infected(u), self.is_infected(v));
        if iv {
            self.inf_nbrs[u] += 1;
        }
        if iu {
            self.inf_nbrs[v] += 1;
        }
        self.bump_pairs(LinkType::of(iu, iv), true);
        self.refresh(u);
        self.refresh(v);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        debug_assert!(self.has_edge(u, v));
        let w = self.words;
        self.adj[u * w + v / 64] &= !(1 << (v % 64));
        self.adj[v * w + u / 64] &= !(1 << (u % 64));
        self.degree[u] -= 1;
        self.degree[v] -= 1;
        let (iu, iv) = (self.is_infected(u), self.is_infected(v));
        if iv {
            self.inf_nbrs[u] -= 1;
        }
        if iu {
            self.inf_nbrs[v] -= 1;
        }
        self.bump_pairs(LinkType::of(iu, iv), false);
        self.refresh(u);
        self.refresh(v);
    }

    fn set_status(&mut self, u: usize, infected: bool) {
        debug_assert_ne!(self.is_infected(u), infected);
        let inf = self.inf_nbrs[u] as u64;
        let sus = self.degree[u] as u64 - inf;
        if infected {
            self.infected_mask[u / 64] |= 1 << (u % 64);
            self.sus.remove(u);
            self.inf.insert(u);
            self.counts.s -= 1;
            self.counts.i += 1;
            self.counts.ss -= 2 * sus;
            self.counts.si = self.counts.si + 2 * sus - 2 * inf;
            self.counts.ii += 2 * inf;
        } else {
            self.infected_mask[u / 64] &= !(1 << (u % 64));
            self.inf.remove(u);
            self.sus.insert(u);
            self.counts.i -= 1;
            self.counts.s += 1;
            self.counts.ii -= 2 * inf;
            self.counts.si = self.counts.si + 2 * inf - 2 * sus;
            self.counts.ss += 2 * sus;
        }
        let nbrs: Vec<usize> = self.neighbours(u).collect();
        for v in nbrs {
            if infected {
                self.inf_nbrs[v] += 1;
            } else {
                self.inf_nbrs[v] -= 1;
            }
            self.refresh(v);
        }
        self.refresh(u);
    }

    pub fn infect(&mut self, u: usize) {
        self.set_status(u, true);
    }

    pub fn recover(&mut self, u: usize) {
        self.set_status(u, false);
    }

    /// Draws an S node with probability proportional to its number of
    /// infected neighbours, i.e. the S end of a uniformly chosen SI edge.
    pub(crate) fn pick_si_susceptible(&self, r: u64) -> usize {
        self.w_si.find(r)
    }

    pub(crate) fn si_edge_weight_total(&self) -> u64 {
        self.w_si.total()
    }

    /// Endpoint of a uniformly chosen edge of type `t`, drawn with weight
    /// proportional to the node's number of neighbours completing that type.
    /// `r` must be below the matching tree total.
    pub(crate) fn pick_edge_endpoint(&self, t: LinkType, r: u64) -> usize {
        match t {
            LinkType::SI => self.w_si.find(r),
            LinkType::SS => self.w_ss.find(r),
            LinkType::II => self.w_ii.find(r),
        }
    }

    pub(crate) fn edge_endpoint_total(&self, t: LinkType) -> u64 {
        match t {
            LinkType::SI => self.w_si.total(),
            LinkType::SS => self.w_ss.total(),
            LinkType::II => self.w_ii.total(),
        }
    }

    /// Exhaustive recount of node and ordered pair tallies from the edge set,
    /// independent of the cached bookkeeping.
    pub fn count_pairs(&self) -> PairCounts {
        let mut c = PairCounts {
            max_edges: self.n * self.n.saturating_sub(1) / 2,
            ..PairCounts::default()
        };
        for u in 0..self.n {
            if self.is_infected(u) {
                c.i += 1;
            } else {
                c.s += 1;
            }
        }
        for (u, v) in self.edges() {
            match LinkType::of(self.is_infected(u), self.is_infected(v)) {
                LinkType::SS => c.ss += 2,
                LinkType::SI => c.si += 2,
                LinkType::II => c.ii += 2,
            }
        }
        c
    }

    /// Checks every piece of cached bookkeeping against a recount.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let fresh = self.count_pairs();
        if fresh != self.counts {
            return Err(format!("cached {:?} != recount {:?}", self.counts, fresh));
        }
        for u in 0..self.n {
            let deg = self.neighbours(u).count();
            let inf = self.neighbours(u).filter(|&v| self.is_infected(v)).count();
            if deg != self.degree[u] as usize || inf != self.inf_nbrs[u] as usize {
                return Err(format!("node {u}: degree/infected-neighbour cache mismatch"));
            }
            if self.has_edge(u, u) {
                return Err(format!("self-loop at {u}"));
            }
        }
        if self.w_si.total() * 2 != self.counts.si
            || self.w_ss.total() != self.counts.ss
            || self.w_ii.total() != self.counts.ii
        {
            return Err("sampling tree totals inconsistent with pair counts".into());
        }
        if self.sus.items.len() != self.counts.s || self.inf.items.len() != self.counts.i {
            return Err("node sets inconsistent".into());
        }
        Ok(())
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn n_components(&self) -> usize {
        let mut unvisited = vec![0u64; self.words];
        for u in 0..self.n {
            unvisited[u / 64] |= 1 << (u % 64);
        }
        let mut stack = Vec::with_capacity(self.n);
        let mut components = 0;
        for root in 0..self.n {
            if unvisited[root / 64] >> (root % 64) & 1 == 0 {
                continue;
            }
            components += 1;
            unvisited[root / 64] &= !(1 << (root % 64));
            stack.push(root);
            while let Some(u) = stack.pop() {
                let row = &self.adj[u * self.words..(u + 1) * self.words];
                for (w, (&bits, unv)) in row.iter().zip(unvisited.iter_mut()).enumerate() {
                    let fresh = bits & *unv;
                    if fresh != 0 {
                        *unv &= !fresh;
                        stack.extend(bit_iter(fresh, w * 64));
                    }
                }
            }
        }
        components
    }

    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.n.max(1)];
        for &d in &self.degree {
            hist[d as usize] += 1;
        }
        hist
    }
}
