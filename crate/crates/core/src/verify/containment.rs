use crate::backward::BackwardSolution;
use crate::convex::ConvexSpec;
use crate::forward::ForwardBatch;
use crate::noise::GaussianStream;
use crate::{Error, Result};

/// Node-wise checks of `Y ∈ Dom(φ)`, `Y ∈ Dom(ψ)` at contact nodes and the
/// subgradient inequalities `U(Y − w) ≥ φ(Y) − φ(w)`,
/// `V(Y − w) ≥ ψ(Y) − ψ(w)` for sampled `w` in the domains.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContainmentReport {
    /// Path-nodes `k < N` inspected.
    pub path_nodes: usize,
    pub phi_membership_violations: usize,
    pub psi_membership_violations: usize,
    /// Sampled `(node, w)` pairs.
    pub sign_samples: usize,
    pub phi_sign_violations: usize,
    pub psi_sign_violations: usize,
}

impl ContainmentReport {
    pub fn pass(&self) -> bool {
        self.phi_membership_violations == 0
            && self.psi_membership_violations == 0
            && self.phi_sign_violations == 0
            && self.psi_sign_violations == 0
    }

    pub fn membership_fraction(&self) -> f64 {
        1.0 - self.phi_membership_violations as f64 / self.path_nodes.max(1) as f64
    }
}

/// A point of `Dom(θ)` near `y`: uniform on bounded intervals, a Gaussian
/// perturbation clamped into the domain otherwise.
fn sample_domain(theta: &ConvexSpec, y: f64, g: &mut GaussianStream) -> f64 {
    match *theta {
        ConvexSpec::IndicatorInterval { lo, hi } if lo.is_finite() && hi.is_finite() => {
            lo + (hi - lo) * g.next_uniform()
        }
        ConvexSpec::IndicatorInterval { lo, hi } => (y + 2.0 * g.next_normal()).max(lo).min(hi),
        _ => y + 2.0 * g.next_normal(),
    }
}

/// Checks every path-node of `sol` with `samples_per_node` draws of `w`.
pub fn containment_check(
    fwd: &ForwardBatch,
    sol: &BackwardSolution,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    samples_per_node: usize,
    seed: u64,
) -> Result<ContainmentReport> {
    if fwd.paths() != sol.paths() || fwd.grid() != sol.grid() || fwd.start_index() != sol.start_index() {
        return Err(Error::ShapeMismatch("forward batch and solution cover different paths".into()));
    }
    let mut g = GaussianStream::new(seed, 0xC0A7);
    let mut rep = ContainmentReport::default();
    let n = sol.grid().steps();
    for k in sol.start_index()..n {
        for m in 0..sol.paths() {
            let y = sol.y(k, m);
            let contact = fwd.da(k, m) > 0.0;
            rep.path_nodes += 1;
            if !phi.in_domain(y) {
                rep.phi_membership_violations += 1;
            }
            if contact && !psi.in_domain(y) {
                rep.psi_membership_violations += 1;
            }
            let (u, v) = (sol.u(k, m), sol.v(k, m));
            for _ in 0..samples_per_node {
                rep.sign_samples += 1;
                let w = sample_domain(phi, y, &mut g);
                let (lhs, rhs) = (u * (y - w), phi.eval(y) - phi.eval(w));
                if !(lhs >= rhs - 1e-10 * (1.0 + lhs.abs() + rhs.abs())) {
                    rep.phi_sign_violations += 1;
                }
                if contact {
                    let w = sample_domain(psi, y, &mut g);
                    let (lhs, rhs) = (v * (y - w), psi.eval(y) - psi.eval(w));
                    if !(lhs >= rhs - 1e-10 * (1.0 + lhs.abs() + rhs.abs())) {
                        rep.psi_sign_violations += 1;
                    }
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::{solve_backward, SolverConfig};
    use crate::coeffs::{BoundaryDriver, CoefficientSet, Diffusion, Drift, Driver, NoiseDriver, Terminal};
    use crate::domain::DomainSpec;
    use crate::forward::simulate_forward;
    use crate::noise::{make_time_grid, sample_noise};

    fn run(phi: ConvexSpec, cfg: SolverConfig) -> ContainmentReport {
        let c = CoefficientSet::new(
            Driver::Linear { a: 1.0 },
            BoundaryDriver::Constant { c: 0.5 },
            NoiseDriver::ExpBeta { beta: 0.3 },
            Terminal::Linear { a: 1.0, c: 0.2 },
            Drift::Zero,
            Diffusion::ScaledIdentity { s: 1.0 },
            1,
        );
        let grid = make_time_grid(0.0, 1.0, 30).unwrap();
        let bundle = sample_noise(&grid, 1000, 1, 21).unwrap();
        let fwd = simulate_forward(&DomainSpec::HalfSpace { dim: 1 }, &c, &[0.2], &bundle, 0).unwrap();
        let sol = solve_backward(&fwd, &bundle, &c, &phi, &ConvexSpec::Zero, &cfg).unwrap();
        containment_check(&fwd, &sol, &phi, &ConvexSpec::Zero, 3, 4).unwrap()
    }

    #[test]
    fn resolvent_mode_stays_inside() {
        let r = run(ConvexSpec::IndicatorInterval { lo: -0.5, hi: 1.0 }, SolverConfig::default());
        assert!(r.pass(), "{r:?}");
        assert_eq!(r.path_nodes, 30_000);
        assert_eq!(r.membership_fraction(), 1.0);
    }

    #[test]
    fn yosida_mode_leaks() {
        let cfg = SolverConfig::with_mode(crate::backward::SolveMode::Yosida { eps: 0.5 });
        let r = run(ConvexSpec::IndicatorInterval { lo: -0.5, hi: 1.0 }, cfg);
        assert!(r.phi_membership_violations > 0);
    }
}
