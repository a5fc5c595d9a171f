//! Domains `Θ = {φ_d > 0}` with unit inward normal `∇φ_d` on the boundary.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Absolute containment tolerance of the projection step.
pub const TOL_PROJ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    /// `φ_d(x) = x₁`.
    HalfSpace { dim: usize },
    /// `φ_d(x) = R − |x|`, gradient `−x/|x|` for `|x| ≥ r_min`.
    Ball { radius: f64, r_min: f64, dim: usize },
    /// No boundary; the local time is identically zero.
    WholeSpace { dim: usize },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DomainSpec::HalfSpace { dim } | DomainSpec::Ball { dim, .. } | DomainSpec::WholeSpace { dim } => dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 1 {
            return Err(Error::bad("domain dimension must be >= 1"));
        }
        if let DomainSpec::Ball { radius, r_min, .. } = *self {
            if !(r_min > 0.0 && r_min < radius && radius.is_finite()) {
                return Err(Error::bad(alloc::format!("ball needs 0 < r_min < R, got r_min={r_min}, R={radius}")));
            }
        }
        Ok(())
    }

    /// `φ_d(x)`; defined everywhere.
    pub fn phi(&self, x: &[f64]) -> f64 {
        match *self {
            DomainSpec::HalfSpace { .. } => x[0],
            DomainSpec::Ball { radius, .. } => radius - norm(x),
            DomainSpec::WholeSpace { .. } => f64::INFINITY,
        }
    }

    /// Writes `∇φ_d(x)` into `grad` and returns `φ_d(x)`.
    pub fn geometry_into(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        match *self {
            DomainSpec::HalfSpace { .. } => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                grad[0] = 1.0;
                Ok(x[0])
            }
            DomainSpec::Ball { radius, r_min, .. } => {
                let r = norm(x);
                if r < r_min {
                    return Err(Error::GeometryUndefined { norm: r, r_min });
                }
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g = -xi / r;
                }
                Ok(radius - r)
            }
            DomainSpec::WholeSpace { .. } => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                Ok(f64::INFINITY)
            }
        }
    }

    pub fn contains_closure(&self, x: &[f64]) -> bool {
        self.phi(x) >= -TOL_PROJ
    }

    /// Projects `x` onto `Θ̄` along the normal, returning the displacement
    /// (the local-time increment). Interior points are left untouched.
    #[inline]
    pub fn reflect_in_place(&self, x: &mut [f64]) -> Result<f64> {
        match *self {
            DomainSpec::HalfSpace { .. } => {
                if x[0] >= 0.0 {
                    Ok(0.0)
                } else {
                    let d = -x[0];
                    x[0] = 0.0;
                    Ok(d)
                }
            }
            DomainSpec::Ball { radius, r_min, .. } => {
                let r = norm(x);
                if r <= radius {
                    return Ok(0.0);
                }
                if r < r_min {
                    return Err(Error::GeometryUndefined { norm: r, r_min });
                }
                let s = radius / r;
                x.iter_mut().for_each(|v| *v *= s);
                Ok(r - radius)
            }
            DomainSpec::WholeSpace { .. } => Ok(0.0),
        }
    }
}

pub fn domain_geometry(dom: &DomainSpec, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; x.len()];
    let phi = dom.geometry_into(x, &mut g)?;
    Ok((phi, g))
}

/// Returns the projected point and the displacement `dA ≥ 0`.
pub fn reflect_step(dom: &DomainSpec, x_candidate: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut x = x_candidate.to_vec();
    let da = dom.reflect_in_place(&mut x)?;
    Ok((x, da))
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_examples() {
        let (phi, g) = domain_geometry(&DomainSpec::HalfSpace { dim: 2 }, &[2.0, 0.0]).unwrap();
        assert_eq!((phi, g), (2.0, vec![1.0, 0.0]));

        let ball = DomainSpec::Ball { radius: 1.0, r_min: 0.05, dim: 2 };
        let (phi, g) = domain_geometry(&ball, &[0.6, 0.8]).unwrap();
        assert!(phi.abs() < 1e-15);
        assert!((g[0] + 0.6).abs() < 1e-15 && (g[1] + 0.8).abs() < 1e-15);

        let ball = DomainSpec::Ball { radius: 2.0, r_min: 0.1, dim: 2 };
        assert!(matches!(domain_geometry(&ball, &[0.0, 0.0]), Err(Error::GeometryUndefined { .. })));
    }

    #[test]
    fn reflect_examples() {
        let hs = DomainSpec::HalfSpace { dim: 2 };
        assert_eq!(reflect_step(&hs, &[0.4, -3.0]).unwrap(), (vec![0.4, -3.0], 0.0));
        let (x, da) = reflect_step(&hs, &[-0.3, 1.0]).unwrap();
        assert_eq!(x, vec![0.0, 1.0]);
        assert!((da - 0.3).abs() < 1e-15);

        let ball = DomainSpec::Ball { radius: 1.0, r_min: 0.05, dim: 2 };
        let (x, da) = reflect_step(&ball, &[1.5, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        assert!((da - 0.5).abs() < 1e-15);
        assert!(ball.contains_closure(&x));

        let ws = DomainSpec::WholeSpace { dim: 1 };
        assert_eq!(reflect_step(&ws, &[-5.0]).unwrap(), (vec![-5.0], 0.0));
    }

    #[test]
    fn unit_normal_on_ball() {
        let ball = DomainSpec::Ball { radius: 3.0, r_min: 0.5, dim: 3 };
        let (_, g) = domain_geometry(&ball, &[1.0, -2.0, 0.7]).unwrap();
        assert!((norm(&g) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(DomainSpec::Ball { radius: 1.0, r_min: 1.0, dim: 2 }.validate().is_err());
        assert!(DomainSpec::Ball { radius: 1.0, r_min: 0.0, dim: 2 }.validate().is_err());
        assert!(DomainSpec::HalfSpace { dim: 0 }.validate().is_err());
    }
}
