//! Monte Carlo solver for variational generalized backward doubly stochastic
//! differential equations driven by a forward Brownian motion `W` and an
//! independent backward Brownian motion `B`.
//!
//! The crate computes the random field `u(t, x) = Y_t^{t,x}` attached to a
//! reflected forward diffusion in a domain `Θ = {φ_d > 0}`, with convex
//! constraints `∂φ` (interior) and `∂ψ` (boundary) enforced through
//! resolvents or Yosida approximations.
//!
//! Layout:
//! * [`convex`]: scalar convex analysis (resolvents, Moreau envelopes).
//! * [`noise`]: seeded time grids and Brownian increments.
//! * [`domain`] and [`forward`]: reflected Euler scheme with local time.
//! * [`coeffs`]: parametric coefficient registry.
//! * [`regression`] and [`backward`]: regression Monte Carlo backward sweep.
//! * [`doss`]: Doss–Sussmann flow and transformed coefficients.
//! * [`field`]: assembly of `u(t, x)` over a grid.
//! * [`verify`]: moduli, Bihari bounds, comparison and rate checks, oracles.
//!
//! The crate is `no_std` and needs only `alloc`. The `parallel` feature
//! (default) pulls in `std` and rayon; results do not depend on it.

#![no_std]
#![allow(clippy::too_many_arguments)]
// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

mod error;
mod par;
pub mod scalar;

pub mod backward;
pub mod coeffs;
pub mod convex;
pub mod domain;
pub mod doss;
pub mod field;
pub mod forward;
pub mod modulus;
pub mod noise;
pub mod regression;
pub mod verify;

pub use error::{Error, Result};

pub use backward::{
    constraint_step, picard_solve, solve_backward, BackwardNoise, BackwardSolution, ConstraintOutput, PicardOutcome,
    SolveMode, SolverConfig, StepMode,
};
pub use coeffs::{BoundaryDriver, CoefficientSet, Diffusion, Drift, Driver, GrowthConstants, NoiseDriver, Terminal};
pub use convex::{ConvexSpec, SubdiffInterval};
pub use domain::DomainSpec;
pub use doss::FlowSpec;
pub use field::{build_field, field_diagnostics, FieldDiagnostics, FieldGrid, FieldSamples};
pub use forward::{forward_summary, simulate_forward, ForwardBatch, ForwardSummary};
pub use modulus::ModulusRho;
pub use noise::{make_time_grid, sample_noise, PathBundle, TimeGrid};
