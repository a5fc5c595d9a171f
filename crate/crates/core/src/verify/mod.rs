//! Executable checks of the structural guarantees: Moreau–Yosida
//! identities, Bihari bounds, the comparison principle, containment in the
//! constraint domains, the Yosida rate and independent reference solvers.

mod bihari;
mod comparison;
mod containment;
pub mod oracle;
mod properties;
mod rate;

pub use bihari::bihari_bound;
pub use comparison::{comparison_check, ComparisonReport};
pub use containment::{containment_check, ContainmentReport};
pub use oracle::{oracle_solve, OracleKind, OracleSolution};
pub use properties::{yosida_properties, YosidaPropertyReport};
pub use rate::{yosida_rate_fit, RateReport};

pub use crate::modulus::{divergence_witness, rho_eval, DivergenceWitness, Modulus, PowerModulus};
