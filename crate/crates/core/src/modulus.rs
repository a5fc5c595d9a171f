//! Moduli of continuity `ρ` for non-Lipschitz drivers.
//!
//! `ρ₁(u) = u·ln(1/u)` and `ρ₂(u) = u·ln(1/u)·ln ln(1/u)` near the origin,
//! continued affinely above a knot `δ` with the slope of the left branch at
//! `δ`, so both are C¹, concave and nondecreasing.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusRho {
    /// `ρ(u) = K·u`.
    Lipschitz {
        k: f64,
    },
    Rho1 {
        delta: f64,
    },
    Rho2 {
        delta: f64,
    },
}

impl ModulusRho {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModulusRho::Lipschitz { k } if !(k > 0.0 && k.is_finite()) => {
                Err(Error::bad(alloc::format!("Lipschitz modulus needs K > 0, got {k}")))
            }
            ModulusRho::Rho1 { delta } | ModulusRho::Rho2 { delta } if !(delta > 0.0 && delta < 1.0) => {
                Err(Error::bad(alloc::format!("knot delta={delta} must lie in (0, 1)")))
            }
            ModulusRho::Rho1 { delta } | ModulusRho::Rho2 { delta } if self.kappa() <= 0.0 => Err(Error::bad(
                alloc::format!("knot delta={delta} too large: continuation slope {} is not positive", self.kappa()),
            )),
            _ => Ok(()),
        }
    }

    /// Slope of the affine continuation above the knot (`K` for Lipschitz).
    pub fn kappa(&self) -> f64 {
        match *self {
            ModulusRho::Lipschitz { k } => k,
            ModulusRho::Rho1 { delta } => (1.0 / delta).ln() - 1.0,
            ModulusRho::Rho2 { delta } => {
                let l = (1.0 / delta).ln();
                l * l.ln() - l.ln() - 1.0
            }
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::bad(alloc::format!("modulus argument {u} must be >= 0")));
        }
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        match *self {
            ModulusRho::Lipschitz { k } => k * u,
            ModulusRho::Rho1 { delta } => {
                if u <= delta {
                    u * (1.0 / u).ln()
                } else {
                    delta * (1.0 / delta).ln() + self.kappa() * (u - delta)
                }
            }
            ModulusRho::Rho2 { delta } => {
                let branch = |v: f64| {
                    let l = (1.0 / v).ln();
                    v * l * l.ln()
                };
                if u <= delta {
                    branch(u)
                } else {
                    branch(delta) + self.kappa() * (u - delta)
                }
            }
        }
    }

    /// Largest `c` with `ρ(u) ≥ c·u` for all `u ≥ 0`; this is `κ` for every
    /// family since `ρ(u)/u` decreases towards the continuation slope.
    pub(crate) fn linear_floor(&self) -> f64 {
        self.kappa()
    }

    /// Grid checks of continuity, monotonicity, concavity and positivity.
    pub fn check_shape(&self, grid_points: usize, u_max: f64) -> ShapeReport {
        let n = grid_points.max(3);
        let us: Vec<f64> = (0..n).map(|i| u_max * i as f64 / (n - 1) as f64).collect();
        let vals: Vec<f64> = us.iter().map(|u| self.eval_unchecked(*u)).collect();
        let tol = 1e-12;
        let mut report = ShapeReport {
            zero_at_origin: vals[0] == 0.0,
            positive: vals[1..].iter().all(|v| *v > 0.0),
            nondecreasing: vals.windows(2).all(|w| w[1] >= w[0] - tol),
            concave: true,
            knot_gap: 0.0,
        };
        for i in 1..n - 1 {
            let mid = 0.5 * (vals[i - 1] + vals[i + 1]);
            if vals[i] < mid - tol * (1.0 + vals[i].abs()) {
                report.concave = false;
            }
        }
        if let ModulusRho::Rho1 { delta } | ModulusRho::Rho2 { delta } = *self {
            let below = self.eval_unchecked(delta * (1.0 - 1e-13));
            let above = self.eval_unchecked(delta * (1.0 + 1e-13));
            report.knot_gap = (above - below).abs();
        }
        report
    }
}

/// A continuous nondecreasing function `w` with `w(u) > 0` for `u > 0`.
pub trait Modulus {
    fn value(&self, u: f64) -> f64;

    /// Whether `∫_{0+} du/w(u) = +∞`, known in closed form for each family.
    fn diverges_at_zero(&self) -> bool;
}

impl Modulus for ModulusRho {
    fn value(&self, u: f64) -> f64 {
        self.eval_unchecked(u)
    }

    fn diverges_at_zero(&self) -> bool {
        true
    }
}

/// `w(u) = scale·u^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModulus {
    pub scale: f64,
    pub exponent: f64,
}

impl Modulus for PowerModulus {
    fn value(&self, u: f64) -> f64 {
        self.scale * u.powf(self.exponent)
    }

    fn diverges_at_zero(&self) -> bool {
        self.exponent >= 1.0
    }
}

/// `∫_a^b du/w(u)` computed in the variable `s = ln u`.
pub fn inverse_integral<M: Modulus + ?Sized>(w: &M, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::QuadratureFailure(alloc::format!("need 0 < a <= b, got a={a}, b={b}")));
    }
    let g = |s: f64| {
        let u = s.exp();
        u / w.value(u)
    };
    scalar::adaptive_simpson(&g, a.ln(), b.ln(), 1e-10)
}

/// Numerical witness that `∫_{0+} du/w(u) = +∞`.
///
/// The partial integrals `I(a) = ∫_a^1 du/w` are evaluated at
/// `a = 10^{-12·2^i}`, `i = 0..5`. For a log-type singularity the
/// increments between successive squarings of `a` decay at most
/// logarithmically; for an integrable singularity `u^{-q}`, `q < 1`, they
/// collapse geometrically. The witness passes when every increment is
/// positive and the last one keeps at least a quarter of the first.
pub fn divergence_witness<M: Modulus + ?Sized>(w: &M) -> Result<DivergenceWitness> {
    let mut exps = Vec::new();
    let mut partial = Vec::new();
    let mut e = 12.0;
    for _ in 0..5 {
        let a = 10f64.powf(-e);
        exps.push(e);
        partial.push(inverse_integral(w, a, 1.0)?);
        e *= 2.0;
    }
    let incs: Vec<f64> = partial.windows(2).map(|x| x[1] - x[0]).collect();
    let diverges = incs.iter().all(|d| *d > 0.0) && incs[incs.len() - 1] >= 0.25 * incs[0];
    Ok(DivergenceWitness { log10_lower: exps, partial_integrals: partial, diverges })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceWitness {
    pub log10_lower: Vec<f64>,
    pub partial_integrals: Vec<f64>,
    pub diverges: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub zero_at_origin: bool,
    pub positive: bool,
    pub nondecreasing: bool,
    pub concave: bool,
    /// `|ρ(δ⁺) − ρ(δ⁻)|` at the knot, 0 for Lipschitz.
    pub knot_gap: f64,
}

impl ShapeReport {
    pub fn ok(&self) -> bool {
        self.zero_at_origin && self.positive && self.nondecreasing && self.concave && self.knot_gap < 1e-12
    }
}

pub fn rho_eval(rho: &ModulusRho, u: f64) -> Result<f64> {
    rho.eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    #[test]
    fn rho1_examples() {
        let r = ModulusRho::Rho1 { delta: 0.2 };
        assert_eq!(r.eval(0.0).unwrap(), 0.0);
        let v = r.eval((-2.0f64).exp()).unwrap();
        assert!((v - 2.0 / (E * E)).abs() < 1e-15);
        assert!((v - 0.27067).abs() < 1e-5);
        assert!(r.eval(-1.0).is_err());
    }

    #[test]
    fn continuity_at_knot() {
        for r in [ModulusRho::Rho1 { delta: 0.2 }, ModulusRho::Rho2 { delta: 0.05 }] {
            let d = match r {
                ModulusRho::Rho1 { delta } | ModulusRho::Rho2 { delta } => delta,
                _ => unreachable!(),
            };
            let left = r.eval(d).unwrap();
            let right = r.eval(d + 1e-15).unwrap();
            assert!((left - right).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_is_left_derivative() {
        for r in [ModulusRho::Rho1 { delta: 0.1 }, ModulusRho::Rho2 { delta: 0.02 }] {
            let d = match r {
                ModulusRho::Rho1 { delta } | ModulusRho::Rho2 { delta } => delta,
                _ => unreachable!(),
            };
            let h = 1e-7;
            let fd = (r.eval(d).unwrap() - r.eval(d - h).unwrap()) / h;
            assert!((fd - r.kappa()).abs() < 1e-4, "{fd} vs {}", r.kappa());
        }
    }

    #[test]
    fn shapes() {
        for r in [ModulusRho::Lipschitz { k: 2.0 }, ModulusRho::Rho1 { delta: 0.2 }, ModulusRho::Rho2 { delta: 0.02 }] {
            r.validate().unwrap();
            let s = r.check_shape(2001, 2.0);
            assert!(s.ok(), "{r:?}: {s:?}");
        }
    }

    #[test]
    fn rho2_rejects_large_knot() {
        assert!(ModulusRho::Rho2 { delta: 0.2 }.validate().is_err());
        assert!(ModulusRho::Rho1 { delta: 0.5 }.validate().is_err());
    }

    #[test]
    fn divergence_witness_separates_log_from_power() {
        for r in [ModulusRho::Rho1 { delta: 0.2 }, ModulusRho::Rho2 { delta: 0.02 }] {
            let w = divergence_witness(&r).unwrap();
            assert!(w.diverges, "{r:?}: {:?}", w.partial_integrals);
        }
        // Lipschitz: ∫ du/(Ku) = ln(b/a)/K, increments double each squaring
        let w = divergence_witness(&ModulusRho::Lipschitz { k: 3.0 }).unwrap();
        assert!(w.diverges);
        let exact = 12.0 * 10f64.ln() / 3.0;
        assert!((w.partial_integrals[0] - exact).abs() < 1e-6);
        // √u is integrable at 0
        let w = divergence_witness(&PowerModulus { scale: 1.0, exponent: 0.5 }).unwrap();
        assert!(!w.diverges, "{:?}", w.partial_integrals);
        let w = divergence_witness(&PowerModulus { scale: 1.0, exponent: 0.9 }).unwrap();
        assert!(!w.diverges, "{:?}", w.partial_integrals);
    }
}
