//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Step-size control uses the embedded 4th-order estimate with a mixed
//! absolute/relative error norm. Output on a caller-chosen grid comes from
//! the 4th-order continuous extension, so the grid never constrains the
//! step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional upper bound on the step size.
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 10_000_000,
            h_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: SolverStats,
    pub rtol: f64,
    pub atol: f64,
    /// Set when some component dipped below `-10 * atol` at an output point.
    pub went_negative: bool,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }

    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[idx]).collect()
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / err.len().max(1) as f64).sqrt()
}

/// Integrates `dy/dt = rhs(t, y)` from `grid[0]` to the last grid point and
/// returns the solution at every grid point. The grid must be strictly
/// increasing.
pub fn integrate<F>(mut rhs: F, y0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(Error::InvalidParams("rtol and atol must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty output grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("output grid must be strictly increasing".into()));
    }
    let dim = y0.len();
    let (rtol, atol) = (opts.rtol, opts.atol);
    let t_end = *grid.last().unwrap();
    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
        stats: SolverStats::default(),
        rtol,
        atol,
        went_negative: false,
    };
    let record = |traj: &mut Trajectory, t: f64, y: Vec<f64>| {
        if y.iter().any(|&v| v < -10.0 * atol) {
            traj.went_negative = true;
        }
        traj.times.push(t);
        traj.states.push(y);
    };

    let mut t = grid[0];
    let mut y = y0.to_vec();
    record(&mut traj, t, y.clone());
    if grid.len() == 1 {
        return Ok(traj);
    }
    let mut next_out = 1;

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut cont = vec![[0.0f64; 5]; dim];

    rhs(t, &y, &mut k1);
    traj.stats.rhs_evals += 1;

    let span = t_end - t;
    let h_max = opts.h_max.unwrap_or(span).min(span);

    // initial step guess from the size of y and y'
    let mut h = {
        let d0 = error_norm(&y, &vec![0.0; dim], &y, rtol, atol);
        let d1 = error_norm(&k1, &vec![0.0; dim], &y, rtol, atol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..dim {
            ytmp[i] = y[i] + h0 * k1[i];
        }
        rhs(t + h0, &ytmp, &mut k2);
        traj.stats.rhs_evals += 1;
        for i in 0..dim {
            err[i] = (k2[i] - k1[i]) / h0;
        }
        let d2 = error_norm(&err, &vec![0.0; dim], &y, rtol, atol);
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(h_max)
    };

    let mut last_rejected = false;
    while next_out < grid.len() {
        if traj.stats.accepted + traj.stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        for i in 0..dim {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..dim {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ytmp, &mut k6);
        for i in 0..dim {
            ynew[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &ynew, &mut k7);
        traj.stats.rhs_evals += 6;

        for i in 0..dim {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &ynew, rtol, atol);
        if !en.is_finite() {
            traj.stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        if en <= 1.0 {
            traj.stats.accepted += 1;
            let t_new = t + h;
            if next_out < grid.len() && grid[next_out] <= t_new {
                for i in 0..dim {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i] = [
                        y[i],
                        ydiff,
                        bspl,
                        ydiff - h * k7[i] - bspl,
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]),
                    ];
                }
                while next_out < grid.len() && grid[next_out] <= t_new {
                    let tout = grid[next_out];
                    let out = if tout == t_new {
                        ynew.clone()
                    } else {
                        let th = (tout - t) / h;
                        let th1 = 1.0 - th;
                        cont.iter()
                            .map(|c| c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4]))))
                            .collect()
                    };
                    record(&mut traj, tout, out);
                    next_out += 1;
                }
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            traj.stats.rejected += 1;
            let fac = (0.9 * en.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
        }
    }
    Ok(traj)
}

/// `n + 1` evenly spaced points from `t0` to `t1`.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect()
}
