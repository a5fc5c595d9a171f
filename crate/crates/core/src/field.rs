//! The random field `u(t, x) = Y_t^{t,x}` on a grid of starting points.
//!
//! Every grid point reuses the same noise bundle: one scenario path `B` and
//! common forward increments `W`. The forward path from `(t, x)` is frozen
//! at `x` up to node `t`, and the backward sweep stops at that node, so the
//! field value is the mean of `Y` there.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::backward::{self, NodeError, Observer, SolverConfig};
use crate::coeffs::CoefficientSet;
use crate::convex::ConvexSpec;
use crate::domain::{DomainSpec, TOL_PROJ};
use crate::forward::simulate_forward;
use crate::noise::PathBundle;
use crate::scalar;
use crate::{Error, Result};

/// Starting times (nodes of the solver grid) and starting points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl FieldGrid {
    fn validate(&self, dom: &DomainSpec) -> Result<()> {
        if self.times.is_empty() || self.points.is_empty() {
            return Err(Error::bad("field grid needs at least one time and one point"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::bad("field times must be strictly increasing"));
        }
        for p in &self.points {
            if p.len() != dom.dim() {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "field point has {} coordinates, domain has dimension {}",
                    p.len(),
                    dom.dim()
                )));
            }
            if !dom.contains_closure(p) {
                return Err(Error::bad(alloc::format!("field point {p:?} lies outside the closed domain")));
            }
        }
        Ok(())
    }
}

/// Field values `u[i·P + j] = u(times[i], points[j])` with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub std_err: Vec<f64>,
    pub scenario_seed: u64,
    pub forward_seed: u64,
    pub paths: usize,
    /// Regression fallbacks summed over all grid points.
    pub regression_fallbacks: usize,
}

impl FieldSamples {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.points.len() + j]
    }

    pub fn std_err_at(&self, i: usize, j: usize) -> f64 {
        self.std_err[i * self.points.len() + j]
    }
}

/// Keeps only the row at the start node.
struct StartRow {
    start: usize,
    mean: f64,
    std_err: f64,
}

impl Observer for StartRow {
    fn node(&mut self, k: usize, y: &[f64], _z: &[f64], _u: &[f64], _v: &[f64], err: NodeError) {
        if k == self.start {
            self.mean = y.iter().sum::<f64>() / y.len() as f64;
            self.std_err = err.monte_carlo;
        }
    }
}

/// Computes `u(t, x)` for every `(t, x)` of `grid` on the noise of `bundle`.
pub fn build_field(
    grid: &FieldGrid,
    dom: &DomainSpec,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    config: &SolverConfig,
    bundle: &PathBundle,
) -> Result<FieldSamples> {
    grid.validate(dom)?;
    config.validate()?;
    phi.validate()?;
    psi.validate()?;
    let tg = bundle.grid();
    let starts = grid
        .times
        .iter()
        .map(|&t| {
            tg.index_of(t).ok_or_else(|| Error::bad(alloc::format!("field time {t} is not a node of the solver grid")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let np = grid.points.len();
    let mut u = vec![0.0; grid.times.len() * np];
    let mut se = vec![0.0; grid.times.len() * np];
    let mut fallbacks = 0;
    for (i, &start) in starts.iter().enumerate() {
        for (j, x) in grid.points.iter().enumerate() {
            let fwd = simulate_forward(dom, coeffs, x, bundle, start)?;
            let mut obs = StartRow { start, mean: 0.0, std_err: 0.0 };
            let stats = if let backward::SolveMode::Picard { .. } = config.mode {
                let out = backward::picard_solve(&fwd, bundle, coeffs, phi, psi, config)?;
                obs.mean = out.solution.mean_y(start);
                obs.std_err = out.solution.std_err(start);
                out.solution.regression_fallbacks()
            } else {
                backward::sweep(&fwd, bundle, coeffs, phi, psi, config, None, &mut obs)?.fallbacks
            };
            fallbacks += stats;
            u[i * np + j] = obs.mean;
            se[i * np + j] = obs.std_err;
        }
    }
    Ok(FieldSamples {
        times: grid.times.clone(),
        points: grid.points.clone(),
        u,
        std_err: se,
        scenario_seed: bundle.scenario_seed(),
        forward_seed: bundle.forward_seed(),
        paths: bundle.paths(),
        regression_fallbacks: fallbacks,
    })
}

/// Continuity and consistency summary of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDiagnostics {
    /// Largest `|u|` jump between neighbouring points at a common time.
    pub max_jump_x: f64,
    /// Largest `|u|` jump between neighbouring times at a common point.
    pub max_jump_t: f64,
    /// Log-log slope of the mean-square increment against `|Δx|`.
    pub x_exponent: Option<f64>,
    /// Log-log slope of the mean-square increment against `|Δt|`.
    pub t_exponent: Option<f64>,
    /// Values outside `Dom(φ)` plus points outside `Θ̄`.
    pub membership_violations: usize,
    /// Points where `u(T, x) ≠ χ(x)` (only counted when `T` is a field time).
    pub terminal_mismatch: usize,
}

/// Mean-square increments grouped by lag, in increasing lag order.
fn binned_increments(pairs: &mut [(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut lags, mut ms) = (Vec::new(), Vec::new());
    let mut i = 0;
    while i < pairs.len() {
        let lag = pairs[i].0;
        let mut j = i;
        let mut sum = 0.0;
        while j < pairs.len() && (pairs[j].0 - lag).abs() <= 1e-9 * lag.max(1e-300) {
            sum += pairs[j].1;
            j += 1;
        }
        lags.push(lag);
        ms.push(sum / (j - i) as f64);
        i = j;
    }
    (lags, ms)
}

pub fn field_diagnostics(
    field: &FieldSamples,
    dom: &DomainSpec,
    phi: &ConvexSpec,
    coeffs: &CoefficientSet,
    t_end: f64,
) -> Result<FieldDiagnostics> {
    let (nt, np) = (field.times.len(), field.points.len());
    if nt < 2 || np < 2 {
        return Err(Error::bad(alloc::format!("diagnostics need at least 2 times and 2 points, got {nt} x {np}")));
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();

    // neighbours in x: nearest other point of each point
    let mut max_jump_x: f64 = 0.0;
    let mut x_pairs = Vec::new();
    for a in 0..np {
        let nearest =
            (0..np).filter(|&b| b != a).map(|b| dist(&field.points[a], &field.points[b])).fold(f64::INFINITY, f64::min);
        for b in 0..np {
            if b == a {
                continue;
            }
            let h = dist(&field.points[a], &field.points[b]);
            for i in 0..nt {
                let du = field.value(i, a) - field.value(i, b);
                if h <= nearest * (1.0 + 1e-9) {
                    max_jump_x = max_jump_x.max(du.abs());
                }
                if b > a {
                    x_pairs.push((h, du * du));
                }
            }
        }
    }
    let mut max_jump_t: f64 = 0.0;
    let mut t_pairs = Vec::new();
    for j in 0..np {
        for i in 0..nt {
            for i2 in i + 1..nt {
                let du = field.value(i2, j) - field.value(i, j);
                if i2 == i + 1 {
                    max_jump_t = max_jump_t.max(du.abs());
                }
                t_pairs.push((field.times[i2] - field.times[i], du * du));
            }
        }
    }
    let (xl, xm) = binned_increments(&mut x_pairs);
    let (tl, tm) = binned_increments(&mut t_pairs);

    let mut membership = field.points.iter().filter(|p| !dom.contains_closure(p)).count();
    membership += field
        .u
        .iter()
        .filter(|&&v| {
            let tol = TOL_PROJ * (1.0 + v.abs());
            !(phi.in_domain(v) || phi.in_domain(v - tol) || phi.in_domain(v + tol))
        })
        .count();

    let mut terminal = 0;
    if let Some(i) = field.times.iter().position(|&t| (t - t_end).abs() <= 1e-12 * t_end.abs().max(1.0)) {
        for (j, p) in field.points.iter().enumerate() {
            if field.value(i, j) != coeffs.chi.eval(p) {
                terminal += 1;
            }
        }
    }
    Ok(FieldDiagnostics {
        max_jump_x,
        max_jump_t,
        x_exponent: scalar::log_log_slope(&xl, &xm),
        t_exponent: scalar::log_log_slope(&tl, &tm),
        membership_violations: membership,
        terminal_mismatch: terminal,
    })
}
