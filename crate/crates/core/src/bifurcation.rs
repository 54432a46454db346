//! Steady states and bifurcations of the pairwise model.
//!
//! With only SS activation and SI deletion the endemic equilibrium is a root
//! of a quartic in `x = [S]`; its stability is decided from the
//! characteristic polynomial of the analytic Jacobian, and Hopf points are
//! located where a conjugate pair crosses the imaginary axis. For
//! link-type independent rewiring the disease-free threshold in `τ` has a
//! closed form.

use std::io::Write;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ModelParams, Scenario};
use crate::pairwise::{self, PairwiseState};

/// Critical `ω_SI = τ(N-2) - γ`; the disease-free state is stable above it.
pub fn transcritical_scenario_a(p: &ModelParams) -> Result<f64> {
    p.require(Scenario::A)?;
    Ok(p.tau * (p.n() - 2.0) - p.gamma)
}

/// Jacobian at the disease-free state `(I, SI, II, SS) = (0, 0, 0, N(N-1))`.
pub fn jacobian_dfe_a(p: &ModelParams) -> Matrix4<f64> {
    let n = p.n();
    let (tau, gamma, alpha, omega) = (p.tau, p.gamma, p.alpha_ss, p.omega_si);
    Matrix4::new(
        -gamma,
        tau,
        0.0,
        0.0,
        0.0,
        -gamma + tau * (n - 2.0) - tau - omega,
        gamma,
        0.0,
        0.0,
        2.0 * tau,
        -2.0 * gamma,
        0.0,
        alpha * (1.0 - 2.0 * n),
        2.0 * gamma - 2.0 * tau * (n - 2.0),
        0.0,
        -alpha,
    )
}

/// Coefficients of `x^4 + a3 x^3 + a2 x^2 + a1 x + a0` whose roots in
/// `(0, N)` give the susceptible count of endemic equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// `ω_SI / α_SS`
    pub a: f64,
    /// `γ / τ`
    pub b: f64,
    /// `ω_SI / τ`
    pub c: f64,
    pub n: f64,
}

impl QuarticCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        (((x + self.a3) * x + self.a2) * x + self.a1) * x + self.a0
    }

    fn deriv(&self, x: f64) -> f64 {
        ((4.0 * x + 3.0 * self.a3) * x + 2.0 * self.a2) * x + self.a1
    }
}

pub fn quartic_coeffs(p: &ModelParams) -> Result<QuarticCoeffs> {
    p.require(Scenario::A)?;
    if !(p.tau > 0.0) {
        return Err(Error::InvalidParams("the endemic quartic needs tau > 0".into()));
    }
    let n = p.n();
    let a = p.omega_si / p.alpha_ss;
    let b = p.gamma / p.tau;
    let c = p.omega_si / p.tau;
    Ok(QuarticCoeffs {
        a3: 4.0 * a * b - 3.0 - 2.0 * b - c,
        a2: 2.0 + 2.0 * b + c + b * b + b * c - 6.0 * a * b - 4.0 * a * b * b - 2.0 * a * b * c
            + 4.0 * a * a * b * b
            + n * b * (1.0 - 4.0 * a),
        a1: n * b
            * (-1.0 + 6.0 * a - b - c + 6.0 * a * b + 2.0 * a * c - 8.0 * a * a * b),
        a0: 2.0 * n * n * a * b * b * (2.0 * a - 1.0),
        a,
        b,
        c,
        n,
    })
}

/// Real roots of the quartic lying strictly inside `(0, N)`, ascending.
pub fn solve_quartic(q: &QuarticCoeffs) -> Result<Vec<f64>> {
    let roots = linalg::monic_roots(&[q.a0, q.a1, q.a2, q.a3])?;
    let mut out = Vec::new();
    for z in roots {
        if z.im.abs() >= 1e-9 * (1.0 + z.re.abs()) {
            continue;
        }
        // a couple of Newton steps clean up the companion-matrix estimate
        let mut x = z.re;
        for _ in 0..3 {
            let d = q.deriv(x);
            if d == 0.0 {
                break;
            }
            let step = q.eval(x) / d;
            if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
                break;
            }
            x -= step;
        }
        if x > 0.0 && x < q.n {
            out.push(x);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Full endemic state for a root `x = [S]`. Coordinates down to `-1e-9 N`
/// are clamped to zero; anything more negative rejects the root.
pub fn endemic_state_from_root(x: f64, p: &ModelParams) -> Result<PairwiseState> {
    let n = p.n();
    let i = n - x;
    let si = p.gamma / p.tau * i;
    let ss = x * (x - 1.0) - 2.0 * p.omega_si * p.gamma / (p.alpha_ss * p.tau) * i;
    let ii = p.gamma * i * i / (p.tau * x) + i * ss / (ss + si);
    let slack = -1e-9 * n;
    let mut st = PairwiseState::new(i, si, ii, ss);
    for (name, v) in [("I", &mut st.i), ("SI", &mut st.si), ("II", &mut st.ii), ("SS", &mut st.ss)]
    {
        if !v.is_finite() || *v < slack {
            return Err(Error::NegativeCoordinate { name, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(st)
}

/// All admissible endemic equilibria.
pub fn endemic_states(p: &ModelParams) -> Result<Vec<PairwiseState>> {
    let q = quartic_coeffs(p)?;
    Ok(solve_quartic(&q)?
        .into_iter()
        .filter_map(|x| endemic_state_from_root(x, p).ok())
        .collect())
}

/// The endemic equilibrium, required to be unique.
pub fn endemic_state(p: &ModelParams) -> Result<PairwiseState> {
    let states = endemic_states(p)?;
    match states.len() {
        0 => Err(Error::NoAdmissibleRoot),
        1 => Ok(states[0]),
        _ => Err(Error::MultiplicityWarning),
    }
}

/// Analytic Jacobian of the closed system at `state`.
pub fn jacobian_numeric(state: &PairwiseState, p: &ModelParams) -> Result<Matrix4<f64>> {
    let s = state.s(p.n());
    if s < pairwise::CLOSURE_EPS || state.ss + state.si < pairwise::CLOSURE_EPS {
        return Err(Error::DegenerateClosure("Jacobian requested at a degenerate state"));
    }
    Ok(pairwise::jacobian(state, p))
}

/// `λ^4 - b3 λ^3 + b2 λ^2 - b1 λ + b0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPolyCoeffs {
    pub b3: f64,
    pub b2: f64,
    pub b1: f64,
    pub b0: f64,
}

pub fn char_poly(j: &Matrix4<f64>) -> CharPolyCoeffs {
    let m = DMatrix::from_iterator(4, 4, j.iter().copied());
    CharPolyCoeffs {
        b3: j.trace(),
        b2: linalg::principal_minor_sum(&m, 2),
        b1: linalg::principal_minor_sum(&m, 3),
        b0: j.determinant(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfTest {
    /// `b0 b3^2 - b1 (b2 b3 - b1)`; zero when a pair `±iν` exists.
    pub residual: f64,
    pub sign_ok: bool,
}

pub fn hopf_test(c: &CharPolyCoeffs) -> HopfTest {
    HopfTest {
        residual: c.b0 * c.b3 * c.b3 - c.b1 * (c.b2 * c.b3 - c.b1),
        sign_ok: c.b1 != 0.0 && c.b3 != 0.0 && c.b1.signum() == c.b3.signum(),
    }
}

pub fn eigenvalues4(j: &Matrix4<f64>) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&DMatrix::from_iterator(4, 4, j.iter().copied()))
}

/// Hopf test at the endemic equilibrium for `(τ, ω_SI)`, `None` when no
/// endemic state exists.
pub fn hopf_at(base: &ModelParams, tau: f64, omega: f64) -> Option<HopfTest> {
    let p = ModelParams { tau, omega_si: omega, ..*base };
    let st = endemic_state(&p).ok()?;
    let j = jacobian_numeric(&st, &p).ok()?;
    Some(hopf_test(&char_poly(&j)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfRow {
    pub tau: f64,
    /// Hopf points in `ω_SI`, ascending.
    pub crossings: Vec<f64>,
    /// Sign changes that could not be refined (no endemic state at a
    /// bisection midpoint, or the sign condition failed).
    pub failed_brackets: Vec<(f64, f64)>,
}

/// Locates the Hopf points along `ω_SI` for a fixed `τ` by scanning
/// `n_grid` points of `[omega_lo, omega_hi]` and bisecting every sign
/// change of the residual to `tol`.
pub fn hopf_crossings(
    base: &ModelParams,
    tau: f64,
    omega_lo: f64,
    omega_hi: f64,
    n_grid: usize,
    tol: f64,
) -> HopfRow {
    let mut row = HopfRow { tau, crossings: Vec::new(), failed_brackets: Vec::new() };
    if !(omega_hi > omega_lo) || n_grid < 2 {
        return row;
    }
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| omega_lo + (omega_hi - omega_lo) * k as f64 / (n_grid - 1) as f64)
        .collect();
    let vals: Vec<Option<HopfTest>> = grid.iter().map(|&w| hopf_at(base, tau, w)).collect();
    for k in 1..grid.len() {
        let (Some(h0), Some(h1)) = (vals[k - 1], vals[k]) else { continue };
        if h0.residual == 0.0 && h0.sign_ok {
            row.crossings.push(grid[k - 1]);
            continue;
        }
        if h0.residual.signum() == h1.residual.signum() || h1.residual == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (grid[k - 1], grid[k]);
        let mut f_lo = h0.residual;
        let mut ok = true;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            match hopf_at(base, tau, mid) {
                Some(h) => {
                    if h.residual.signum() == f_lo.signum() {
                        lo = mid;
                        f_lo = h.residual;
                    } else {
                        hi = mid;
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let root = 0.5 * (lo + hi);
        match hopf_at(base, tau, root) {
            Some(h) if ok && h.sign_ok => row.crossings.push(root),
            _ => row.failed_brackets.push((grid[k - 1], grid[k])),
        }
    }
    if let (Some(last), true) = (vals.last().copied().flatten(), !grid.is_empty()) {
        if last.residual == 0.0 && last.sign_ok {
            row.crossings.push(*grid.last().unwrap());
        }
    }
    row
}

/// Hopf scan over `tau_grid`. The `ω_SI` interval for each row is clipped
/// to the region where the endemic state exists.
pub fn hopf_curve_scan(
    base: &ModelParams,
    tau_grid: &[f64],
    omega_lo: f64,
    omega_hi: f64,
    n_grid: usize,
    tol: f64,
) -> Result<Vec<HopfRow>> {
    base.require(Scenario::A)?;
    Ok(tau_grid
        .par_iter()
        .map(|&tau| {
            let w_tc = tau * (base.n() - 2.0) - base.gamma;
            let hi = omega_hi.min(w_tc - 1e-9 * w_tc.abs().max(1.0));
            hopf_crossings(base, tau, omega_lo, hi, n_grid, tol)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    DiseaseFree,
    Endemic,
    Oscillatory,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::DiseaseFree => "disease_free",
            Regime::Endemic => "endemic",
            Regime::Oscillatory => "oscillatory",
        }
    }
}

/// Long-term behaviour of the pairwise model predicted from linear
/// stability of its equilibria.
pub fn classify_regime(p: &ModelParams) -> Result<Regime> {
    if p.omega_si > transcritical_scenario_a(p)? {
        return Ok(Regime::DiseaseFree);
    }
    let st = match endemic_state(p) {
        Ok(st) => st,
        Err(Error::NoAdmissibleRoot) => return Ok(Regime::DiseaseFree),
        Err(e) => return Err(e),
    };
    let j = jacobian_numeric(&st, p)?;
    let lead = eigenvalues4(&j)?
        .into_iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if lead < 0.0 { Regime::Endemic } else { Regime::Oscillatory })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub tau: f64,
    pub omega: f64,
    pub regime: Regime,
}

pub fn regime_diagram(base: &ModelParams, taus: &[f64], omegas: &[f64]) -> Result<Vec<RegimePoint>> {
    base.require(Scenario::A)?;
    let cells: Vec<(f64, f64)> =
        taus.iter().flat_map(|&t| omegas.iter().map(move |&w| (t, w))).collect();
    cells
        .par_iter()
        .map(|&(tau, omega)| {
            let p = ModelParams { tau, omega_si: omega, ..*base };
            classify_regime(&p).map(|regime| RegimePoint { tau, omega, regime })
        })
        .collect()
}

pub fn write_regime_csv<W: Write>(points: &[RegimePoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "tau,omega,regime")?;
    for pt in points {
        writeln!(w, "{},{},{}", pt.tau, pt.omega, pt.regime.label())?;
    }
    Ok(())
}

/// Mean degree at the disease-free steady state of link-type independent
/// rewiring, `α(N-1)/(α+ω)`.
pub fn steady_degree_b(p: &ModelParams) -> Result<f64> {
    p.require(Scenario::B)?;
    Ok(p.alpha_ss * (p.n() - 1.0) / (p.alpha_ss + p.omega_ss))
}

pub fn dfe_state_b(p: &ModelParams) -> Result<PairwiseState> {
    let n = steady_degree_b(p)?;
    Ok(PairwiseState::new(0.0, 0.0, 0.0, p.n() * n))
}

/// Jacobian at the disease-free state for link-type independent rewiring.
pub fn jacobian_dfe_b(p: &ModelParams) -> Result<Matrix4<f64>> {
    let n = steady_degree_b(p)?;
    let big_n = p.n();
    let (tau, gamma, alpha, omega) = (p.tau, p.gamma, p.alpha_ss, p.omega_ss);
    let q = tau * (n - 1.0) * (big_n - 1.0) * alpha / (n * (omega + alpha));
    Ok(Matrix4::new(
        -gamma,
        tau,
        0.0,
        0.0,
        alpha * big_n,
        -gamma - tau - omega - alpha + q,
        gamma,
        0.0,
        -alpha,
        2.0 * tau,
        -2.0 * gamma - omega - alpha,
        0.0,
        alpha * (1.0 - 2.0 * big_n),
        2.0 * gamma - 2.0 * q,
        0.0,
        -omega - alpha,
    ))
}

/// Infection rate at which the disease-free state loses stability
/// (`det J = 0`), `γu(u+2γ) / (Nα(u+2γ) - 2γ(α+u))` with `u = α+ω`.
pub fn tau_c_scenario_b(p: &ModelParams) -> Result<f64> {
    p.require(Scenario::B)?;
    let (n, g, a) = (p.n(), p.gamma, p.alpha_ss);
    let u = a + p.omega_ss;
    let den = n * a * (u + 2.0 * g) - 2.0 * g * (a + u);
    if !(den > 0.0) {
        return Err(Error::NoThreshold(den));
    }
    Ok(g * u * (u + 2.0 * g) / den)
}

/// The closed form as usually quoted for this threshold. It does not solve
/// `det J = 0` for the Jacobian above and is kept for comparison only.
pub fn tau_c_printed(p: &ModelParams) -> Result<f64> {
    let n = steady_degree_b(p)?;
    let (big_n, g, a, w) = (p.n(), p.gamma, p.alpha_ss, p.omega_ss);
    let num = n * g * (w + a) * (2.0 * g + w + a) * (w + a + g);
    let den = n * (w + a) * (a * big_n - 2.0 * g * a - g * w) + (n - 1.0) * (big_n - 1.0) * a * g;
    if !(den > 0.0) {
        return Err(Error::NoThreshold(den));
    }
    Ok(num / den)
}

/// Homogeneous mean-field threshold `γ(α+ω)/(Nα)`.
pub fn tau_pc_meanfield(p: &ModelParams) -> Result<f64> {
    p.require(Scenario::B)?;
    if !(p.alpha_ss > 0.0) {
        return Err(Error::NoThreshold(p.alpha_ss));
    }
    Ok(p.gamma * (p.alpha_ss + p.omega_ss) / (p.n() * p.alpha_ss))
}

/// Deletion rate at which the stationary Erdős–Rényi graph sits at the
/// connectivity threshold `p = ln N / N`.
pub fn omega_star_connectivity(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0) || n < 3 {
        return Err(Error::InvalidParams("need alpha > 0 and N >= 3".into()));
    }
    let n = n as f64;
    Ok(alpha * (n / n.ln() - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base_a(tau: f64, omega: f64) -> ModelParams {
        ModelParams::scenario_a(tau, 1.0, 0.04, omega, 200)
    }

    #[test]
    fn transcritical_examples() {
        assert_eq!(transcritical_scenario_a(&base_a(0.5, 1.0)).unwrap(), 98.0);
        let p = ModelParams { tau: 0.0, ..base_a(0.5, 1.0) };
        assert!(transcritical_scenario_a(&p).unwrap() < 0.0);
        let pb = ModelParams::scenario_b(0.5, 1.0, 0.1, 0.1, 20);
        assert!(matches!(transcritical_scenario_a(&pb), Err(Error::UnsupportedScenario { .. })));
    }

    #[test]
    fn dfe_jacobian_structure() {
        let p = base_a(0.5, 50.0);
        let j = jacobian_dfe_a(&p);
        let inner = j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)];
        assert!((inner + 96.0).abs() < 1e-12);
        let ev = eigenvalues4(&j).unwrap();
        assert!(ev.iter().any(|z| (z.re + 0.04).abs() < 1e-10 && z.im.abs() < 1e-10));
        assert!(ev.iter().any(|z| (z.re + 1.0).abs() < 1e-10 && z.im.abs() < 1e-10));

        let at = base_a(0.5, 98.0);
        let j = jacobian_dfe_a(&at);
        assert!((j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)]).abs() < 1e-12);
    }

    #[test]
    fn dfe_jacobian_matches_analytic_limit() {
        // approach the disease-free state from the interior
        let p = base_a(0.5, 20.0);
        let n = 200.0;
        let eps = 1e-9;
        let st = PairwiseState::new(eps, eps, 0.0, n * (n - 1.0));
        let j = pairwise::jacobian(&st, &p);
        let d = jacobian_dfe_a(&p);
        for r in 0..4 {
            for c in 0..4 {
                assert!((j[(r, c)] - d[(r, c)]).abs() < 1e-5, "({r},{c}) {} vs {}", j[(r, c)], d[(r, c)]);
            }
        }
    }

    #[test]
    fn quartic_has_root_at_zero_when_a_is_half() {
        let p = ModelParams::scenario_a(0.5, 1.0, 0.08, 0.04, 200);
        let q = quartic_coeffs(&p).unwrap();
        assert_eq!(q.a0, 0.0);
        assert!(solve_quartic(&q).unwrap().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn endemic_state_at_low_deletion() {
        let p = base_a(0.5, 1.0);
        let q = quartic_coeffs(&p).unwrap();
        for x in solve_quartic(&q).unwrap() {
            assert!(q.eval(x).abs() < 1e-8 * 200f64.powi(4));
        }
        let st = endemic_state(&p).unwrap();
        assert!(pairwise::residual(&st, &p) < 1e-8 * 200.0);
        let x = p.n() - st.i;
        let ss = x * (x - 1.0) - 2.0 * (1.0 * 1.0 / (0.04 * 0.5)) * (200.0 - x);
        assert!((st.ss - ss).abs() <= 1e-12 * ss.abs());
    }

    #[test]
    fn char_poly_examples() {
        // eigenvalues {±i, -1, -2}
        let m = Matrix4::new(
            0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -2.0,
        );
        let c = char_poly(&m);
        assert!((c.b3 + 3.0).abs() < 1e-12 && (c.b2 - 3.0).abs() < 1e-12);
        assert!((c.b1 + 3.0).abs() < 1e-12 && (c.b0 - 2.0).abs() < 1e-12);
        let h = hopf_test(&c);
        assert!(h.residual.abs() < 1e-12 && h.sign_ok);

        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -2.0, -3.0));
        let c = char_poly(&m);
        assert_eq!((c.b3, c.b2, c.b1, c.b0), (-5.0, 5.0, 5.0, -6.0));
        let h = hopf_test(&c);
        assert!(h.residual.abs() < 1e-12 && !h.sign_ok);

        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, -3.0, -4.0));
        assert!(hopf_test(&char_poly(&m)).residual.abs() > 1.0);
    }

    #[test]
    fn scenario_b_curves() {
        let p = ModelParams::scenario_b(0.1, 1.0, 0.01, 0.1, 200);
        assert!((tau_pc_meanfield(&p).unwrap() - 0.055).abs() < 1e-12);
        assert!((tau_c_printed(&p).unwrap() - 0.123_457).abs() < 1e-5);
        let tc = tau_c_scenario_b(&p).unwrap();
        let at = ModelParams::scenario_b(tc, 1.0, 0.01, 0.1, 200);
        let j = jacobian_dfe_b(&at).unwrap();
        let scale: f64 = j.iter().map(|v| v.abs()).fold(0.0, f64::max).powi(4);
        assert!(j.determinant().abs() < 1e-8 * scale);
        let w = omega_star_connectivity(0.01, 200).unwrap();
        assert!((w - 0.3675).abs() < 1e-4);
        assert!((0.01 / (0.01 + w) - 200f64.ln() / 200.0).abs() < 1e-14);
    }

    #[test]
    fn scenario_b_dfe_jacobian_matches_analytic_limit() {
        let p = ModelParams::scenario_b(0.3, 1.0, 0.01, 0.1, 200);
        let mut st = dfe_state_b(&p).unwrap();
        st.i = 1e-9;
        st.si = 1e-9;
        let j = pairwise::jacobian(&st, &p);
        let d = jacobian_dfe_b(&p).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((j[(r, c)] - d[(r, c)]).abs() < 1e-5, "({r},{c})");
            }
        }
    }

    proptest! {
        #[test]
        fn char_poly_matches_eigenvalues(entries in prop::collection::vec(-3.0f64..3.0, 16)) {
            let m = Matrix4::from_iterator(entries);
            let c = char_poly(&m);
            let ev = eigenvalues4(&m).unwrap();
            // elementary symmetric polynomials of the eigenvalues
            let mut e = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
            for z in &ev {
                for k in (1..5).rev() {
                    e[k] += e[k - 1] * z;
                }
            }
            let scale = 1.0 + m.iter().map(|v| v.abs()).sum::<f64>().powi(4);
            for (got, want) in [(c.b3, e[1].re), (c.b2, e[2].re), (c.b1, e[3].re), (c.b0, e[4].re)] {
                prop_assert!((got - want).abs() < 1e-8 * scale, "{got} vs {want}");
            }
        }

        #[test]
        fn prop1_sign_agreement(tau in 0.0f64..2.0, omega in 0.01f64..200.0, gamma in 0.1f64..3.0, alpha in 0.001f64..0.5, n in 3usize..300) {
            let p = ModelParams::scenario_a(tau, gamma, alpha, omega, n);
            let margin = tau * (n as f64 - 2.0) - gamma - omega;
            prop_assume!(margin.abs() > 1e-10);
            let lead = eigenvalues4(&jacobian_dfe_a(&p)).unwrap().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lead > 0.0, margin > 0.0);
        }
    }
}
