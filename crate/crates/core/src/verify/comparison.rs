use alloc::vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::backward::{solve_backward, SolverConfig};
use crate::coeffs::CoefficientSet;
use crate::convex::ConvexSpec;
use crate::forward::ForwardBatch;
use crate::noise::PathBundle;
use crate::{Error, Result};

/// Share of path-nodes allowed above the tolerance band.
pub const VIOLATION_THRESHOLD: f64 = 0.005;
/// Width of the tolerance band in combined standard errors.
pub const TOL_STD_ERRS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub pass: bool,
    /// Share of path-nodes with `Y¹ > Y² + 3·se`.
    pub violation_fraction: f64,
    /// Largest `(Y¹ − Y²)/se` over all path-nodes, floored at 0.
    pub max_violation: f64,
    /// Largest raw `Y¹ − Y²`, floored at 0.
    pub max_gap: f64,
    pub path_nodes: usize,
    /// Coefficient evaluations used to confirm the ordering hypothesis.
    pub hypothesis_samples: usize,
}

/// Checks the ordering `χ¹ ≤ χ²`, `f¹ ≤ f²`, `g¹ ≤ g²` on the sampled
/// forward states and a fixed set of `(y, z)` values.
fn check_hypothesis(fwd: &ForwardBatch, c1: &CoefficientSet, c2: &CoefficientSet) -> Result<usize> {
    let grid = fwd.grid();
    let (m, d, n) = (fwd.paths(), fwd.dim(), grid.steps());
    let ys = [-3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0];
    let zs = [-1.0, 0.0, 1.0];
    let stride = (m / 64).max(1);
    let mut z = vec![0.0; d];
    let mut samples = 0;
    let tol = |a: f64, b: f64| 1e-12 * (1.0 + a.abs() + b.abs());
    for i in 0..m {
        let x = fwd.x(n, i);
        let (a, b) = (c1.chi.eval(x), c2.chi.eval(x));
        samples += 1;
        if a > b + tol(a, b) {
            return Err(Error::HypothesisViolation(alloc::format!(
                "terminal values not ordered on path {i}: {a} > {b}"
            )));
        }
    }
    for k in fwd.start_index()..n {
        let t = grid.node(k);
        for i in (0..m).step_by(stride) {
            let x = fwd.x(k, i);
            for &y in &ys {
                for &zv in &zs {
                    z.iter_mut().for_each(|v| *v = zv);
                    let (a, b) = (c1.f.eval(t, x, y, &z), c2.f.eval(t, x, y, &z));
                    samples += 1;
                    if a > b + tol(a, b) {
                        return Err(Error::HypothesisViolation(alloc::format!(
                            "drivers not ordered at t={t}, y={y}, z={zv}: {a} > {b}"
                        )));
                    }
                }
                let (a, b) = (c1.g.eval(t, x, y), c2.g.eval(t, x, y));
                samples += 1;
                if a > b + tol(a, b) {
                    return Err(Error::HypothesisViolation(alloc::format!(
                        "boundary drivers not ordered at t={t}, y={y}: {a} > {b}"
                    )));
                }
            }
        }
    }
    Ok(samples)
}

/// Solves both problems on the common paths of `fwd` and counts nodes
/// where `Y¹` exceeds `Y²` by more than the statistical band.
///
/// The problems must share the forward coefficients and the backward
/// driver `h`; they may differ in `χ`, `f` and `g`.
pub fn comparison_check(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    c1: &CoefficientSet,
    c2: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    config: &SolverConfig,
) -> Result<ComparisonReport> {
    if c1.b != c2.b || c1.sigma != c2.sigma || c1.h != c2.h {
        return Err(Error::bad("compared problems must share b, sigma and h"));
    }
    let hypothesis_samples = check_hypothesis(fwd, c1, c2)?;
    let s1 = solve_backward(fwd, bundle, c1, phi, psi, config)?;
    let s2 = solve_backward(fwd, bundle, c2, phi, psi, config)?;
    let (m, n) = (fwd.paths(), fwd.grid().steps());
    let mut bad = 0usize;
    let mut total = 0usize;
    let mut max_v: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for k in fwd.start_index()..=n {
        let se = (s1.std_err(k).powi(2) + s2.std_err(k).powi(2)).sqrt();
        let band = TOL_STD_ERRS * se;
        for i in 0..m {
            let gap = s1.y(k, i) - s2.y(k, i);
            total += 1;
            if gap > band + 1e-12 * (1.0 + s2.y(k, i).abs()) {
                bad += 1;
            }
            if gap > 0.0 {
                max_gap = max_gap.max(gap);
                max_v = max_v.max(if se > 0.0 { gap / se } else { f64::INFINITY });
            }
        }
    }
    let frac = bad as f64 / total as f64;
    Ok(ComparisonReport {
        pass: frac < VIOLATION_THRESHOLD && max_v < TOL_STD_ERRS,
        violation_fraction: frac,
        max_violation: max_v,
        max_gap,
        path_nodes: total,
        hypothesis_samples,
    })
}
