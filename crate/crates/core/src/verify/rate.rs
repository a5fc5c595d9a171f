use alloc::vec::Vec;

use crate::backward::{solve_backward, SolveMode, SolverConfig};
use crate::coeffs::CoefficientSet;
use crate::convex::ConvexSpec;
use crate::forward::ForwardBatch;
use crate::noise::PathBundle;
use crate::scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub eps: Vec<f64>,
    /// Mean over paths and nodes of `|Y^ε − Y^ref|²`.
    pub gaps: Vec<f64>,
    /// Log-log slope of `gaps` against `eps`; `None` when the gaps vanish.
    pub slope: Option<f64>,
    /// Mean over paths and nodes of `|Y^ε − Y^ref|`.
    pub abs_gaps: Vec<f64>,
    pub abs_slope: Option<f64>,
    /// Whether the gap never grows as `ε` decreases.
    pub nonincreasing: bool,
}

/// Compares Yosida solves at each `ε` against the resolvent solve on the
/// same paths.
pub fn yosida_rate_fit(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    base: &SolverConfig,
    eps_list: &[f64],
) -> Result<RateReport> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::bad("eps_list needs at least 3 strictly decreasing values"));
    }
    let reference =
        solve_backward(fwd, bundle, coeffs, phi, psi, &SolverConfig { mode: SolveMode::Resolvent, ..*base })?;
    let (m, n, start) = (fwd.paths(), fwd.grid().steps(), fwd.start_index());
    let count = (m * (n + 1 - start)) as f64;
    let mut gaps = Vec::with_capacity(eps_list.len());
    let mut abs_gaps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let sol =
            solve_backward(fwd, bundle, coeffs, phi, psi, &SolverConfig { mode: SolveMode::Yosida { eps }, ..*base })?;
        let (mut sq, mut ab) = (0.0, 0.0);
        for k in start..=n {
            for (a, b) in sol.y_row(k).iter().zip(reference.y_row(k)) {
                sq += (a - b) * (a - b);
                ab += (a - b).abs();
            }
        }
        gaps.push(sq / count);
        abs_gaps.push(ab / count);
    }
    let nonincreasing = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(RateReport {
        slope: scalar::log_log_slope(eps_list, &gaps),
        abs_slope: scalar::log_log_slope(eps_list, &abs_gaps),
        eps: eps_list.to_vec(),
        gaps,
        abs_gaps,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{BoundaryDriver, Diffusion, Drift, Driver, NoiseDriver, Terminal};
    use crate::domain::DomainSpec;
    use crate::forward::simulate_forward;
    use crate::noise::{make_time_grid, sample_noise};

    fn setup(f: Driver) -> (CoefficientSet, PathBundle, ForwardBatch) {
        let c = CoefficientSet::new(
            f,
            BoundaryDriver::Zero,
            NoiseDriver::Zero,
            Terminal::Constant { c: 1.0 },
            Drift::Zero,
            Diffusion::ScaledIdentity { s: 1.0 },
            1,
        );
        let grid = make_time_grid(0.0, 1.0, 50).unwrap();
        let bundle = sample_noise(&grid, 200, 1, 5).unwrap();
        let fwd = simulate_forward(&DomainSpec::WholeSpace { dim: 1 }, &c, &[0.0], &bundle, 0).unwrap();
        (c, bundle, fwd)
    }

    const EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

    #[test]
    fn unconstrained_gaps_vanish() {
        let (c, bundle, fwd) = setup(Driver::Linear { a: 1.0 });
        let r =
            yosida_rate_fit(&fwd, &bundle, &c, &ConvexSpec::Zero, &ConvexSpec::Zero, &SolverConfig::default(), &EPS)
                .unwrap();
        assert!(r.gaps.iter().all(|g| *g == 0.0));
        assert_eq!(r.slope, None);
    }

    #[test]
    fn clamped_gaps_shrink() {
        let (c, bundle, fwd) = setup(Driver::Linear { a: 1.0 });
        let phi = ConvexSpec::IndicatorInterval { lo: f64::NEG_INFINITY, hi: 2.0 };
        let r = yosida_rate_fit(&fwd, &bundle, &c, &phi, &ConvexSpec::Zero, &SolverConfig::default(), &EPS).unwrap();
        assert!(r.nonincreasing, "{r:?}");
        assert!(r.gaps.iter().all(|g| *g > 0.0));
        assert!(r.slope.unwrap() > 0.5);
    }

    #[test]
    fn rejects_short_or_unordered_lists() {
        let (c, bundle, fwd) = setup(Driver::Zero);
        let cfg = SolverConfig::default();
        let z = ConvexSpec::Zero;
        assert!(yosida_rate_fit(&fwd, &bundle, &c, &z, &z, &cfg, &[0.1, 0.05]).is_err());
        assert!(yosida_rate_fit(&fwd, &bundle, &c, &z, &z, &cfg, &[0.1, 0.2, 0.05]).is_err());
    }
}
