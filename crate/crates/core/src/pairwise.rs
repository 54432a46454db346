//! The simple pairwise model: expected counts of infected nodes and of
//! SI, II and SS pairs, closed at the level of triples.
//!
//! Conventions: `si` is the number of S–I links, while `ss` and `ii` count
//! ordered pairs, i.e. twice the number of SS and II links. A network with
//! `e` links therefore has `ss + 2 si + ii = 2e`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PairCounts};
use crate::ode::{self, OdeOptions, Trajectory};

/// Threshold below which the closure is regularized to zero.
pub const CLOSURE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseState {
    pub i: f64,
    pub si: f64,
    pub ii: f64,
    pub ss: f64,
}

impl PairwiseState {
    pub fn new(i: f64, si: f64, ii: f64, ss: f64) -> Self {
        PairwiseState { i, si, ii, ss }
    }

    /// The all-susceptible complete graph.
    pub fn disease_free_complete(n: usize) -> Self {
        let n = n as f64;
        PairwiseState::new(0.0, 0.0, 0.0, n * (n - 1.0))
    }

    /// Expected pair counts of an Erdős–Rényi graph with edge probability
    /// `p` and `infected` nodes placed at random.
    pub fn erdos_renyi(n: usize, p: f64, infected: f64) -> Self {
        let ns = n as f64 - infected;
        PairwiseState::new(infected, p * ns * infected, p * infected * (infected - 1.0), p * ns * (ns - 1.0))
    }

    /// Expected values matching a concrete network.
    pub fn from_counts(c: &PairCounts) -> Self {
        let (ss, si, ii) = c.to_pairwise();
        PairwiseState::new(c.i as f64, si, ii, ss)
    }

    pub fn s(&self, n: f64) -> f64 {
        n - self.i
    }

    /// Mean degree of susceptible nodes, `([SS] + [SI]) / [S]`.
    pub fn k_s(&self, n: f64) -> f64 {
        (self.ss + self.si) / self.s(n)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.i, self.si, self.ii, self.ss]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        PairwiseState::new(y[0], y[1], y[2], y[3])
    }
}

/// Closed triples `([SSI], [ISI])` with `k_S = ([SS] + [SI]) / [S]`.
pub fn triple_closure(ss: f64, si: f64, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !(ss + si > 0.0) {
        return Err(Error::DegenerateClosure("[S] and [SS]+[SI] must be positive"));
    }
    let k = (ss + si) / s;
    let f = (k - 1.0) / (k * s);
    Ok((f * ss * si, f * si * si))
}

/// Same closure, rewritten as `(k-1)/(k S) = 1/S - 1/([SS]+[SI])` and set to
/// zero near the degenerate limits.
pub(crate) fn triples_regularized(ss: f64, si: f64, s: f64) -> (f64, f64) {
    let p = ss + si;
    if s < CLOSURE_EPS || p < CLOSURE_EPS {
        return (0.0, 0.0);
    }
    let f = 1.0 / s - 1.0 / p;
    (f * ss * si, f * si * si)
}

/// Writes the time derivative of `y = [I, SI, II, SS]` into `dy`.
pub fn rhs_into(p: &ModelParams, y: &[f64], dy: &mut [f64]) {
    let n = p.n();
    let (i, si, ii, ss) = (y[0], y[1], y[2], y[3]);
    let s = n - i;
    let (ssi, isi) = triples_regularized(ss, si, s);
    let (tau, gamma) = (p.tau, p.gamma);
    dy[0] = tau * si - gamma * i;
    dy[1] = gamma * (ii - si) + tau * (ssi - isi - si) + p.alpha_si * (s * i - si)
        - p.omega_si * si;
    dy[2] = -2.0 * gamma * ii + 2.0 * tau * (isi + si) + p.alpha_ii * (i * (i - 1.0) - ii)
        - p.omega_ii * ii;
    dy[3] = 2.0 * gamma * si - 2.0 * tau * ssi + p.alpha_ss * (s * (s - 1.0) - ss)
        - p.omega_ss * ss;
}

pub fn rhs_simple(state: &PairwiseState, p: &ModelParams) -> PairwiseState {
    let mut d = [0.0; 4];
    rhs_into(p, &state.to_vec(), &mut d);
    PairwiseState::from_slice(&d)
}

/// Largest absolute derivative component.
pub fn residual(state: &PairwiseState, p: &ModelParams) -> f64 {
    let d = rhs_simple(state, p);
    d.i.abs().max(d.si.abs()).max(d.ii.abs()).max(d.ss.abs())
}

/// Analytic Jacobian of the closed system, rows and columns ordered
/// `[I, SI, II, SS]`.
pub fn jacobian(state: &PairwiseState, p: &ModelParams) -> nalgebra::Matrix4<f64> {
    let n = p.n();
    let PairwiseState { i, si, ii: _, ss } = *state;
    let s = n - i;
    let q = ss + si;
    // partial derivatives of the triples with respect to (I, SI, SS)
    let (ssi_i, ssi_si, ssi_ss, isi_i, isi_si, isi_ss) = if s < CLOSURE_EPS || q < CLOSURE_EPS {
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        (
            ss * si / (s * s),
            ss / s - ss * ss / (q * q),
            si / s - si * si / (q * q),
            si * si / (s * s),
            2.0 * si / s - 2.0 * si / q + si * si / (q * q),
            si * si / (q * q),
        )
    };
    let (tau, gamma) = (p.tau, p.gamma);
    let (a_ss, a_si, a_ii) = (p.alpha_ss, p.alpha_si, p.alpha_ii);
    let (w_ss, w_si, w_ii) = (p.omega_ss, p.omega_si, p.omega_ii);
    nalgebra::Matrix4::new(
        -gamma,
        tau,
        0.0,
        0.0,
        // d[SI]
        tau * (ssi_i - isi_i) + a_si * (n - 2.0 * i),
        -gamma + tau * (ssi_si - isi_si - 1.0) - a_si - w_si,
        gamma,
        tau * (ssi_ss - isi_ss),
        // d[II]
        2.0 * tau * isi_i + a_ii * (2.0 * i - 1.0),
        2.0 * tau * (isi_si + 1.0),
        -2.0 * gamma - a_ii - w_ii,
        2.0 * tau * isi_ss,
        // d[SS]
        -2.0 * tau * ssi_i - a_ss * (2.0 * s - 1.0),
        2.0 * gamma - 2.0 * tau * ssi_si,
        0.0,
        -2.0 * tau * ssi_ss - a_ss - w_ss,
    )
}

/// Integrates the pairwise model, reporting the state at every grid time.
pub fn integrate(
    p: &ModelParams,
    y0: &PairwiseState,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    p.validate()?;
    let params = *p;
    ode::integrate(move |_, y, dy| rhs_into(&params, y, dy), &y0.to_vec(), grid, opts)
}

/// Trajectory CSV with columns `t,I,SI,II,SS,S,k_S`.
pub fn write_csv<W: Write>(traj: &Trajectory, n: usize, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,I,SI,II,SS,S,k_S")?;
    let n = n as f64;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let st = PairwiseState::from_slice(y);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t,
            st.i,
            st.si,
            st.ii,
            st.ss,
            st.s(n),
            st.k_s(n)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closure_examples() {
        let (ssi, isi) = triple_closure(400.0, 100.0, 100.0).unwrap();
        assert!((ssi - 320.0).abs() < 1e-12);
        assert!((isi - 80.0).abs() < 1e-12);
        assert_eq!(triple_closure(40.0, 0.0, 10.0).unwrap().1, 0.0);
        // k_S = 1
        let (a, b) = triple_closure(60.0, 40.0, 100.0).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        assert!(triple_closure(1.0, 1.0, 0.0).is_err());
        assert!(triple_closure(0.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn disease_free_points_are_equilibria() {
        let pa = ModelParams::scenario_a(0.5, 1.0, 0.04, 5.0, 200);
        let dfe = PairwiseState::disease_free_complete(200);
        assert!(residual(&dfe, &pa) <= 1e-12 * 200.0 * 200.0);

        let pb = ModelParams::scenario_b(0.3, 1.0, 0.01, 0.1, 200);
        let n = 200.0;
        let ss = n * (n - 1.0) * 0.01 / 0.11;
        assert!(residual(&PairwiseState::new(0.0, 0.0, 0.0, ss), &pb) < 1e-9);
    }

    fn random_params() -> impl Strategy<Value = ModelParams> {
        (
            0.01f64..5.0,
            0.1f64..3.0,
            prop::array::uniform3(0.0f64..0.5),
            prop::array::uniform3(0.0f64..5.0),
            5usize..300,
        )
            .prop_map(|(tau, gamma, a, w, n)| ModelParams {
                tau,
                gamma,
                alpha_ss: a[0],
                alpha_si: a[1],
                alpha_ii: a[2],
                omega_ss: w[0],
                omega_si: w[1],
                omega_ii: w[2],
                n_nodes: n,
            })
    }

    proptest! {
        #[test]
        fn epidemic_terms_conserve_links(p in random_params(), fi in 0.0f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let n = p.n();
            let i = fi * n;
            let s = n - i;
            let st = PairwiseState::new(i, a * s * i, b * i * (i - 1.0).max(0.0), c * s * (s - 1.0));
            let d = rhs_simple(&st, &p);
            // infection and recovery only relabel links, so the total ordered
            // pair count changes through activation and deletion alone
            let links = d.ss + 2.0 * d.si + d.ii;
            let expected = p.alpha_ss * (s * (s - 1.0) - st.ss) - p.omega_ss * st.ss
                + 2.0 * (p.alpha_si * (s * i - st.si) - p.omega_si * st.si)
                + p.alpha_ii * (i * (i - 1.0) - st.ii) - p.omega_ii * st.ii;
            prop_assert!((links - expected).abs() <= 1e-9 * (1.0 + expected.abs() + n * n * p.tau));
        }

        #[test]
        fn regularized_closure_matches_textbook_form(ss in 1e-3f64..1e4, si in 1e-3f64..1e4, s in 1e-2f64..200.0) {
            let (a, b) = triple_closure(ss, si, s).unwrap();
            let (c, d) = triples_regularized(ss, si, s);
            prop_assert!((a - c).abs() <= 1e-9 * a.abs().max(1.0));
            prop_assert!((b - d).abs() <= 1e-9 * b.abs().max(1.0));
        }

        #[test]
        fn analytic_jacobian_matches_finite_differences(p in random_params(), fi in 0.0f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let n = p.n();
            let i = fi * n;
            let s = n - i;
            let st = PairwiseState::new(i, a * s * i, b * i * (i - 1.0).max(0.0), c * s * (s - 1.0));
            prop_assume!(st.s(n) > 1.0 && st.ss + st.si > 1.0);
            let j = jacobian(&st, &p);
            let y = st.to_vec();
            for c in 0..4 {
                let h = 1e-6 * y[c].abs().max(1.0);
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[c] += h;
                ym[c] -= h;
                let mut fp = [0.0; 4];
                let mut fm = [0.0; 4];
                rhs_into(&p, &yp, &mut fp);
                rhs_into(&p, &ym, &mut fm);
                for r in 0..4 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    let scale = j[(r, c)].abs().max(1.0);
                    prop_assert!((fd - j[(r, c)]).abs() < 1e-4 * scale,
                        "J[{r},{c}] analytic {} fd {}", j[(r, c)], fd);
                }
            }
        }
    }
}
