//! Reference solutions that share no code path with the Monte Carlo solver.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coeffs::{BoundaryDriver, Driver, Terminal};
use crate::convex::ConvexSpec;
use crate::scalar;
use crate::{Error, Result};

/// A one-dimensional problem on `[0, length]` for the finite-difference
/// oracle: `∂_t u + ½σ²∂_xx u + f(u) ∈ ∂φ(u)` inside,
/// `∂_x u + g(u) ∈ ∂ψ(u)` at `x = 0`, `∂_x u = 0` at `x = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fd1dProblem {
    pub sigma: f64,
    /// Evaluated with `x = 0` and `z = 0`; only `y` may enter.
    pub f: Driver,
    pub g: BoundaryDriver,
    pub chi: Terminal,
    pub phi: ConvexSpec,
    pub psi: ConvexSpec,
    pub t_end: f64,
    pub length: f64,
    /// Coarsest level: cells in space and steps in time.
    pub nx: usize,
    pub nt: usize,
    /// Number of grids, each halving both steps of the previous one.
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    /// `Y_t = χ·e^{a(T−t)}`.
    LinearExp {
        a: f64,
        chi: f64,
        t_end: f64,
    },
    /// `−dY = aY dt − ∂I_{[lo,hi]}(Y)dt`, `Y_T = χ`, by proximal backward
    /// Euler with the linear term implicit.
    ClampedOde {
        a: f64,
        chi: f64,
        lo: f64,
        hi: f64,
        t_end: f64,
        steps: usize,
    },
    /// `χ·exp(β(B_T − B_t) − ½β²(T − t))`; `delta_b[i] = B_T − B_{t_i}`.
    DossClosedForm {
        beta: f64,
        chi: f64,
        t_end: f64,
        delta_b: Vec<f64>,
    },
    Fd1d(Fd1dProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub times: Vec<f64>,
    /// Query points; empty for the ODE kinds.
    pub xs: Vec<f64>,
    /// `values[i·X + j]`, or `values[i]` without space.
    pub values: Vec<f64>,
    /// Sup-norm change between successive refinement levels.
    pub changes: Vec<f64>,
    /// `changes[0] / changes[1]` (smallest ratio when more levels exist).
    pub halving_factor: Option<f64>,
}

/// Evaluates the oracle at `times` (and at `xs` for [`OracleKind::Fd1d`]).
pub fn oracle_solve(kind: &OracleKind, times: &[f64], xs: &[f64]) -> Result<OracleSolution> {
    let ode = |values: Vec<f64>, changes: Vec<f64>, factor| OracleSolution {
        times: times.to_vec(),
        xs: Vec::new(),
        values,
        changes,
        halving_factor: factor,
    };
    match kind {
        OracleKind::LinearExp { a, chi, t_end } => {
            check_times(times, *t_end)?;
            Ok(ode(times.iter().map(|t| chi * (a * (t_end - t)).exp()).collect(), Vec::new(), None))
        }
        OracleKind::DossClosedForm { beta, chi, t_end, delta_b } => {
            check_times(times, *t_end)?;
            if delta_b.len() != times.len() {
                return Err(Error::bad("delta_b must have one entry per query time"));
            }
            let v = times
                .iter()
                .zip(delta_b)
                .map(|(t, db)| chi * (beta * db - 0.5 * beta * beta * (t_end - t)).exp())
                .collect();
            Ok(ode(v, Vec::new(), None))
        }
        OracleKind::ClampedOde { a, chi, lo, hi, t_end, steps } => {
            check_times(times, *t_end)?;
            if *steps < 1 || lo > hi || a * t_end / *steps as f64 >= 1.0 {
                return Err(Error::bad("clamped ODE needs steps >= 1, lo <= hi and a·dt < 1"));
            }
            let fine = clamped_ode(*a, *chi, *lo, *hi, *t_end, *steps, times);
            let half = clamped_ode(*a, *chi, *lo, *hi, *t_end, *steps / 2, times);
            let quarter = clamped_ode(*a, *chi, *lo, *hi, *t_end, *steps / 4, times);
            let c1 = sup_diff(&quarter, &half);
            let c2 = sup_diff(&half, &fine);
            let factor = if c2 > 0.0 { Some(c1 / c2) } else { None };
            Ok(ode(fine, vec![c1, c2], factor))
        }
        OracleKind::Fd1d(p) => fd1d(p, times, xs),
    }
}

fn check_times(times: &[f64], t_end: f64) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0 && *t <= t_end)) {
        return Err(Error::bad(alloc::format!("query times must lie in [0, {t_end}]")));
    }
    Ok(())
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Linear interpolation of `values` (on nodes `t_end − k·dt`, `k = 0..`)
/// at time `t`.
fn interp_backward(values: &[f64], t_end: f64, dt: f64, t: f64) -> f64 {
    let s = (t_end - t) / dt;
    let k = (s.floor() as usize).min(values.len() - 1);
    if k + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let w = s - k as f64;
    (1.0 - w) * values[k] + w * values[k + 1]
}

fn clamped_ode(a: f64, chi: f64, lo: f64, hi: f64, t_end: f64, steps: usize, times: &[f64]) -> Vec<f64> {
    let dt = t_end / steps as f64;
    let mut y = chi;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(y);
    for _ in 0..steps {
        y = (y / (1.0 - a * dt)).max(lo).min(hi);
        path.push(y);
    }
    times.iter().map(|&t| interp_backward(&path, t_end, dt, t)).collect()
}

fn fd1d(p: &Fd1dProblem, times: &[f64], xs: &[f64]) -> Result<OracleSolution> {
    check_times(times, p.t_end)?;
    if p.nx < 2 || p.nt < 1 || p.levels < 1 || !(p.length > 0.0) || !(p.sigma > 0.0) {
        return Err(Error::bad("FD oracle needs nx >= 2, nt >= 1, levels >= 1, length > 0, sigma > 0"));
    }
    if xs.iter().any(|x| !(*x >= 0.0 && *x <= p.length)) {
        return Err(Error::bad(alloc::format!("query points must lie in [0, {}]", p.length)));
    }
    p.phi.validate()?;
    p.psi.validate()?;
    p.chi.validate()?;
    let mut results = Vec::with_capacity(p.levels);
    for l in 0..p.levels {
        results.push(fd1d_level(p, p.nx << l, p.nt << l, times, xs));
    }
    let changes: Vec<f64> = results.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
    let halving_factor = if changes.len() >= 2 {
        changes.windows(2).map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY }).reduce(f64::min)
    } else {
        None
    };
    Ok(OracleSolution {
        times: times.to_vec(),
        xs: xs.to_vec(),
        values: results.pop().unwrap_or_default(),
        changes,
        halving_factor,
    })
}

/// One grid: implicit diffusion step, then the proximal maps of `φ`
/// (parameter `Δt`) and, at `x = 0`, of `ψ` (parameter `σ²Δt/Δx`).
fn fd1d_level(p: &Fd1dProblem, nx: usize, nt: usize, times: &[f64], xs: &[f64]) -> Vec<f64> {
    let dx = p.length / nx as f64;
    let dt = p.t_end / nt as f64;
    let n = nx + 1;
    let c = 0.5 * p.sigma * p.sigma * dt / (dx * dx);
    let lam_b = p.sigma * p.sigma * dt / dx;
    let mut u: Vec<f64> = (0..n).map(|i| p.chi.eval(&[i as f64 * dx])).collect();
    let lower: Vec<f64> = (0..n).map(|i| if i == nx { -2.0 * c } else { -c }).collect();
    let upper: Vec<f64> = (0..n).map(|i| if i == 0 { -2.0 * c } else { -c }).collect();
    let diag = vec![1.0 + 2.0 * c; n];
    let zero = [0.0];

    // snapshots at every step, read back by interpolation
    let mut snaps: Vec<Vec<f64>> = Vec::with_capacity(nt + 1);
    snaps.push(u.clone());
    let mut rhs = vec![0.0; n];
    for step in 0..nt {
        let t = p.t_end - step as f64 * dt;
        for i in 0..n {
            rhs[i] = u[i] + dt * p.f.eval(t, &zero, u[i], &zero);
        }
        rhs[0] += lam_b * p.g.eval(t, &zero, u[0]);
        scalar::solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        for i in 0..n {
            u[i] = p.phi.resolvent_unchecked(rhs[i], dt);
        }
        if !p.psi.is_zero() {
            u[0] = p.psi.resolvent_unchecked(u[0], lam_b);
        }
        snaps.push(u.clone());
    }

    let at = |row: &[f64], x: f64| {
        let s = x / dx;
        let i = (s.floor() as usize).min(nx - 1);
        let w = s - i as f64;
        (1.0 - w) * row[i] + w * row[i + 1]
    };
    let mut out = Vec::with_capacity(times.len() * xs.len());
    for &t in times {
        let s = (p.t_end - t) / dt;
        let k = (s.floor() as usize).min(nt);
        let w = s - k as f64;
        for &x in xs {
            let a = at(&snaps[k], x);
            let v = if k < nt && w > 0.0 { (1.0 - w) * a + w * at(&snaps[k + 1], x) } else { a };
            out.push(v);
        }
    }
    out
}
