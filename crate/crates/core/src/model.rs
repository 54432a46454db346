//! Model parameters, scenario classification and pair-count conventions.
//!
//! Pair counts follow the ordered-pair convention: `[SS]`, `[SI]` and `[II]`
//! in [`PairCounts`] count ordered node pairs, so every undirected edge
//! contributes 2 to the count of its type. The pairwise ODEs use `[SI]` as
//! the number of S–I edges; [`PairCounts::to_pairwise`] converts between the
//! two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{self, KvDoc};

/// Node status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    S,
    I,
}

/// Link types, indexed in the order SS, SI, II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkType {
    SS = 0,
    SI = 1,
    II = 2,
}

impl LinkType {
    pub const ALL: [LinkType; 3] = [LinkType::SS, LinkType::SI, LinkType::II];

    pub fn of(a_infected: bool, b_infected: bool) -> LinkType {
        match (a_infected, b_infected) {
            (false, false) => LinkType::SS,
            (true, true) => LinkType::II,
            _ => LinkType::SI,
        }
    }
}

/// All rates of the model and the population size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub tau: f64,
    pub gamma: f64,
    pub alpha_ss: f64,
    pub alpha_si: f64,
    pub alpha_ii: f64,
    pub omega_ss: f64,
    pub omega_si: f64,
    pub omega_ii: f64,
    pub n_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Only SS links are created and only SI links are deleted.
    A,
    /// Link-type independent activation and deletion.
    B,
    General,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::A => write!(f, "scenario A"),
            Scenario::B => write!(f, "scenario B"),
            Scenario::General => write!(f, "general rates"),
        }
    }
}

pub const PARAM_KEYS: [&str; 9] = [
    "tau", "gamma", "alpha_ss", "alpha_si", "alpha_ii", "omega_ss", "omega_si", "omega_ii",
    "n_nodes",
];

impl ModelParams {
    pub fn scenario_a(tau: f64, gamma: f64, alpha_ss: f64, omega_si: f64, n_nodes: usize) -> Self {
        ModelParams {
            tau,
            gamma,
            alpha_ss,
            alpha_si: 0.0,
            alpha_ii: 0.0,
            omega_ss: 0.0,
            omega_si,
            omega_ii: 0.0,
            n_nodes,
        }
    }

    pub fn scenario_b(tau: f64, gamma: f64, alpha: f64, omega: f64, n_nodes: usize) -> Self {
        ModelParams {
            tau,
            gamma,
            alpha_ss: alpha,
            alpha_si: alpha,
            alpha_ii: alpha,
            omega_ss: omega,
            omega_si: omega,
            omega_ii: omega,
            n_nodes,
        }
    }

    pub fn alpha(&self, t: LinkType) -> f64 {
        match t {
            LinkType::SS => self.alpha_ss,
            LinkType::SI => self.alpha_si,
            LinkType::II => self.alpha_ii,
        }
    }

    pub fn omega(&self, t: LinkType) -> f64 {
        match t {
            LinkType::SS => self.omega_ss,
            LinkType::SI => self.omega_si,
            LinkType::II => self.omega_ii,
        }
    }

    fn rates(&self) -> [(&'static str, f64); 8] {
        [
            ("tau", self.tau),
            ("gamma", self.gamma),
            ("alpha_ss", self.alpha_ss),
            ("alpha_si", self.alpha_si),
            ("alpha_ii", self.alpha_ii),
            ("omega_ss", self.omega_ss),
            ("omega_si", self.omega_si),
            ("omega_ii", self.omega_ii),
        ]
    }

    /// Validates the parameters and classifies the rewiring scenario.
    pub fn validate(&self) -> Result<Scenario> {
        for (name, v) in self.rates() {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite rate {name}")));
            }
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("negative rate {name} = {v}")));
            }
        }
        if self.n_nodes < 2 {
            return Err(Error::InvalidParams(format!(
                "n_nodes = {} (need at least 2)",
                self.n_nodes
            )));
        }
        let scenario_a = self.alpha_si == 0.0
            && self.alpha_ii == 0.0
            && self.alpha_ss > 0.0
            && self.omega_ss == 0.0
            && self.omega_ii == 0.0
            && self.omega_si > 0.0;
        let scenario_b = self.alpha_ss == self.alpha_si
            && self.alpha_si == self.alpha_ii
            && self.omega_ss == self.omega_si
            && self.omega_si == self.omega_ii;
        Ok(if scenario_a {
            Scenario::A
        } else if scenario_b {
            Scenario::B
        } else {
            Scenario::General
        })
    }

    pub fn require(&self, wanted: Scenario) -> Result<()> {
        let got = self.validate()?;
        if got != wanted {
            return Err(Error::UnsupportedScenario {
                required: match wanted {
                    Scenario::A => "scenario A",
                    Scenario::B => "scenario B",
                    Scenario::General => "general rates",
                },
                actual: got.to_string(),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.n_nodes as f64
    }

    /// Reads the nine parameter keys from a flat key-value document.
    /// Missing rates default to zero; `n_nodes` is required.
    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let rate = |k: &str| -> Result<f64> { Ok(kv::get_f64(doc, k)?.unwrap_or(0.0)) };
        let n_nodes =
            kv::get_usize(doc, "n_nodes")?.ok_or_else(|| Error::config("n_nodes", "missing"))?;
        let p = ModelParams {
            tau: rate("tau")?,
            gamma: rate("gamma")?,
            alpha_ss: rate("alpha_ss")?,
            alpha_si: rate("alpha_si")?,
            alpha_ii: rate("alpha_ii")?,
            omega_ss: rate("omega_ss")?,
            omega_si: rate("omega_si")?,
            omega_ii: rate("omega_ii")?,
            n_nodes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut doc: KvDoc = self
            .rates()
            .iter()
            .map(|(k, v)| (k.to_string(), format!("{v}")))
            .collect();
        doc.insert("n_nodes".into(), self.n_nodes.to_string());
        doc
    }
}

/// Node and ordered-pair tallies of a network state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub ss: u64,
    pub si: u64,
    pub ii: u64,
    pub s: usize,
    pub i: usize,
    /// Maximum number of undirected edges, N(N-1)/2.
    pub max_edges: usize,
}

impl PairCounts {
    pub fn n(&self) -> usize {
        self.s + self.i
    }

    pub fn edges(&self) -> u64 {
        (self.ss + self.si + self.ii) / 2
    }

    pub fn edges_of(&self, t: LinkType) -> u64 {
        match t {
            LinkType::SS => self.ss / 2,
            LinkType::SI => self.si / 2,
            LinkType::II => self.ii / 2,
        }
    }

    /// Number of absent undirected links of the given type.
    pub fn non_edges_of(&self, t: LinkType) -> u64 {
        let (s, i) = (self.s as u64, self.i as u64);
        match t {
            LinkType::SS => (s * s.saturating_sub(1) - self.ss) / 2,
            LinkType::SI => s * i - self.si / 2,
            LinkType::II => (i * i.saturating_sub(1) - self.ii) / 2,
        }
    }

    pub fn avg_degree(&self) -> f64 {
        2.0 * self.edges() as f64 / self.n() as f64
    }

    /// Pair counts in the pairwise-model convention: `[SI]` is the number of
    /// S–I edges, `[SS]` and `[II]` stay doubled.
    pub fn to_pairwise(&self) -> (f64, f64, f64) {
        (self.ss as f64, self.si as f64 / 2.0, self.ii as f64)
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let (s, i) = (self.s as u64, self.i as u64);
        if self.ss > s * s.saturating_sub(1) {
            return Err(format!("ss = {} exceeds s(s-1) = {}", self.ss, s * s.saturating_sub(1)));
        }
        if self.ii > i * i.saturating_sub(1) {
            return Err(format!("ii = {} exceeds i(i-1)", self.ii));
        }
        if self.si > 2 * s * i {
            return Err(format!("si = {} exceeds 2si", self.si));
        }
        if !self.ss.is_multiple_of(2) || !self.si.is_multiple_of(2) || !self.ii.is_multiple_of(2) {
            return Err("odd ordered pair count".into());
        }
        if self.max_edges != self.n() * self.n().saturating_sub(1) / 2 {
            return Err("max_edges inconsistent with s + i".into());
        }
        Ok(())
    }
}
