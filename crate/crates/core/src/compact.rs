//! Compact pairwise model: susceptible and infected node counts resolved by
//! degree, plus aggregate SI, SS and II pairs (same conventions as
//! [`crate::pairwise`]).
//!
//! Only SS activation and SI deletion are supported. Links created at a
//! susceptible node of degree `N-1` have nowhere to go, so that outflow is
//! dropped; likewise nothing leaves degree 0 through deletion. Both choices
//! keep the total node count exactly conserved.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::{self, OdeOptions, Trajectory};
use crate::pairwise::CLOSURE_EPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactState {
    /// `s[k]`: expected number of susceptible nodes of degree `k`.
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub si: f64,
    pub ss: f64,
    pub ii: f64,
}

impl CompactState {
    pub fn n_nodes(&self) -> usize {
        self.s.len()
    }

    pub fn total_s(&self) -> f64 {
        self.s.iter().sum()
    }

    pub fn total_i(&self) -> f64 {
        self.i.iter().sum()
    }

    /// Layout `[s_0..s_{N-1}, i_0..i_{N-1}, si, ss, ii]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.s.len() + 3);
        y.extend_from_slice(&self.s);
        y.extend_from_slice(&self.i);
        y.extend_from_slice(&[self.si, self.ss, self.ii]);
        y
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        if y.len() < 5 || !(y.len() - 3).is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("bad compact state length {}", y.len())));
        }
        let n = (y.len() - 3) / 2;
        Ok(CompactState {
            s: y[..n].to_vec(),
            i: y[n..2 * n].to_vec(),
            si: y[2 * n],
            ss: y[2 * n + 1],
            ii: y[2 * n + 2],
        })
    }

    /// Erdős–Rényi start: degrees Binomial(N-1, p) for both statuses and
    /// pair counts at their expected values.
    pub fn erdos_renyi(n: usize, p: f64, infected: f64) -> Result<Self> {
        if n < 2 || !(0.0..=1.0).contains(&p) || !(0.0..=n as f64).contains(&infected) {
            return Err(Error::InvalidParams("need n >= 2, p in [0,1], 0 <= I <= N".into()));
        }
        let dist = Binomial::new(p, (n - 1) as u64)
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        let pmf: Vec<f64> = (0..n).map(|k| dist.pmf(k as u64)).collect();
        let ni = infected;
        let ns = n as f64 - ni;
        Ok(CompactState {
            s: pmf.iter().map(|q| q * ns).collect(),
            i: pmf.iter().map(|q| q * ni).collect(),
            si: p * ns * ni,
            ss: p * ns * (ns - 1.0),
            ii: p * ni * (ni - 1.0),
        })
    }

    /// `Σ k (s_k + i_k) - (ss + ii + 2 si)`: zero when the degree
    /// distribution and the pair counts describe the same set of links.
    pub fn degree_consistency_gap(&self) -> f64 {
        let stubs: f64 = (0..self.s.len()).map(|k| k as f64 * (self.s[k] + self.i[k])).sum();
        stubs - (self.ss + self.ii + 2.0 * self.si)
    }

    pub fn mean_degree(&self) -> f64 {
        let n: f64 = self.total_s() + self.total_i();
        let stubs: f64 = (0..self.s.len()).map(|k| k as f64 * (self.s[k] + self.i[k])).sum();
        stubs / n
    }
}

/// `[A_k B] = [AB] k [A_k] / Σ_j j [A_j]`.
pub fn pair_approx(k: usize, a_k: f64, ab: f64, degree_weighted_total: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    if degree_weighted_total <= CLOSURE_EPS {
        return Err(Error::DegenerateClosure("sum of j [A_j] must be positive"));
    }
    Ok(ab * k as f64 * a_k / degree_weighted_total)
}

/// `[ASI] = [AS][SI] / ([SS]+[SI])^2 · Σ_k k(k-1) [S_k]`.
pub fn compact_triple_closure(as_pairs: f64, si: f64, ss: f64, s_k: &[f64]) -> Result<f64> {
    let p = ss + si;
    if p <= CLOSURE_EPS {
        return Err(Error::DegenerateClosure("[SS]+[SI] must be positive"));
    }
    Ok(as_pairs * si / (p * p) * second_factorial_moment(s_k))
}

fn second_factorial_moment(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(k, v)| (k * k.saturating_sub(1)) as f64 * v).sum()
}

fn require_supported(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.alpha_si != 0.0 || p.alpha_ii != 0.0 || p.omega_ss != 0.0 || p.omega_ii != 0.0 {
        return Err(Error::UnsupportedScenario {
            required: "scenario A",
            actual: p.validate()?.to_string(),
        });
    }
    Ok(())
}

/// Derivative of the compact system in the flat layout of
/// [`CompactState::to_vec`]. Degenerate closures are regularized to zero.
pub fn rhs_into(p: &ModelParams, y: &[f64], dy: &mut [f64]) {
    let n = (y.len() - 3) / 2;
    let (s, rest) = y.split_at(n);
    let (i, pairs) = rest.split_at(n);
    let (si, ss, ii) = (pairs[0], pairs[1], pairs[2]);
    let (tau, gamma, alpha, omega) = (p.tau, p.gamma, p.alpha_ss, p.omega_si);

    let s_tot: f64 = s.iter().sum();
    let ks_s: f64 = s.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let ks_i: f64 = i.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let approx = |k: usize, a_k: f64, ab: f64, tot: f64| -> f64 {
        if k == 0 || tot <= CLOSURE_EPS {
            0.0
        } else {
            ab * k as f64 * a_k / tot
        }
    };
    let s_i = |k: usize| approx(k, s[k], si, ks_s);
    let s_s = |k: usize| approx(k, s[k], ss, ks_s);
    let i_s = |k: usize| approx(k, i[k], si, ks_i);
    // S_k nodes gaining an SS link; none can leave the top degree
    let gain = |k: usize| {
        if k + 1 >= n {
            0.0
        } else {
            alpha * (s[k] * (s_tot - 1.0) - s_s(k))
        }
    };

    for k in 0..n {
        let up_s = if k + 1 < n { s_i(k + 1) } else { 0.0 };
        let up_i = if k + 1 < n { i_s(k + 1) } else { 0.0 };
        let from_below = if k > 0 { gain(k - 1) } else { 0.0 };
        dy[k] = -tau * s_i(k) + gamma * i[k] + omega * (up_s - s_i(k)) + from_below - gain(k);
        dy[n + k] = tau * s_i(k) - gamma * i[k] + omega * (up_i - i_s(k));
    }

    let q = ss + si;
    let (ssi, isi) = if q <= CLOSURE_EPS {
        (0.0, 0.0)
    } else {
        let m = second_factorial_moment(s) / (q * q);
        (ss * si * m, si * si * m)
    };
    dy[2 * n] = gamma * (ii - si) + tau * (ssi - isi - si) - omega * si;
    dy[2 * n + 1] = 2.0 * gamma * si - 2.0 * tau * ssi + alpha * (s_tot * (s_tot - 1.0) - ss);
    dy[2 * n + 2] = -2.0 * gamma * ii + 2.0 * tau * (isi + si);
}

pub fn rhs_compact(state: &CompactState, p: &ModelParams) -> Result<CompactState> {
    require_supported(p)?;
    check_size(state, p)?;
    let y = state.to_vec();
    let mut dy = vec![0.0; y.len()];
    rhs_into(p, &y, &mut dy);
    CompactState::from_slice(&dy)
}

fn check_size(state: &CompactState, p: &ModelParams) -> Result<()> {
    if state.s.len() != p.n_nodes || state.i.len() != p.n_nodes {
        return Err(Error::InvalidParams(format!(
            "degree vectors must have length N = {}",
            p.n_nodes
        )));
    }
    Ok(())
}

pub fn integrate(
    p: &ModelParams,
    y0: &CompactState,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    require_supported(p)?;
    check_size(y0, p)?;
    let params = *p;
    ode::integrate(move |_, y, dy| rhs_into(&params, y, dy), &y0.to_vec(), grid, opts)
}

/// Summary CSV: `t,I,S,SI,SS,II,mean_degree,degree_gap`.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "t,I,S,SI,SS,II,mean_degree,degree_gap")?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let st = CompactState::from_slice(y)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            t,
            st.total_i(),
            st.total_s(),
            st.si,
            st.ss,
            st.ii,
            st.mean_degree(),
            st.degree_consistency_gap()
        )?;
    }
    Ok(())
}

/// Degree distribution snapshots at the requested times (nearest grid
/// point): `t,k,S_k,I_k`.
pub fn write_degree_snapshots<W: Write>(traj: &Trajectory, times: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "t,k,S_k,I_k")?;
    for &want in times {
        let Some(idx) = traj
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - want).abs().total_cmp(&(b.1 - want).abs()))
            .map(|(k, _)| k)
        else {
            continue;
        };
        let st = CompactState::from_slice(&traj.states[idx])?;
        for k in 0..st.s.len() {
            writeln!(w, "{},{},{},{}", traj.times[idx], k, st.s[k], st.i[k])?;
        }
    }
    Ok(())
}
