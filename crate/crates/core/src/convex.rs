//! Scalar convex analysis for the constraint functions `φ` and `ψ`.
//!
//! Every supported kind has a closed-form resolvent, so the Moreau envelope
//! and the Yosida gradient are exact up to rounding.

use crate::{Error, Result};

/// A proper, convex, lower semi-continuous function `θ: ℝ → [0, +∞]` with
/// `θ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexSpec {
    /// `θ ≡ 0`.
    Zero,
    /// Indicator of `[lo, hi]`; endpoints may be infinite.
    IndicatorInterval { lo: f64, hi: f64 },
    /// `θ(y) = c·y²/2`.
    Quadratic { c: f64 },
    /// `θ(y) = scale·|y|`.
    AbsValue { scale: f64 },
}

/// Subdifferential `∂θ(y) = [left, right]` of a scalar convex function;
/// endpoints may be `±∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffInterval {
    pub left: f64,
    pub right: f64,
}

impl SubdiffInterval {
    /// Membership with a relative slack `tol·(1 + |v|)` on finite endpoints.
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        let slack = tol * (1.0 + v.abs());
        v >= self.left - slack && v <= self.right + slack
    }
}

impl ConvexSpec {
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        let s = ConvexSpec::IndicatorInterval { lo, hi };
        s.validate()?;
        Ok(s)
    }

    /// Checks the normalisation `θ ≥ 0 = θ(0)` and parameter signs.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConvexSpec::Zero => Ok(()),
            ConvexSpec::IndicatorInterval { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    Err(Error::bad(alloc::format!("indicator interval [{lo}, {hi}] is empty")))
                } else if lo > 0.0 || hi < 0.0 {
                    Err(Error::bad(alloc::format!("indicator interval [{lo}, {hi}] must contain 0")))
                } else {
                    Ok(())
                }
            }
            ConvexSpec::Quadratic { c } if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::bad(alloc::format!("quadratic coefficient {c} must be finite and >= 0")))
            }
            ConvexSpec::AbsValue { scale } if !(scale >= 0.0 && scale.is_finite()) => {
                Err(Error::bad(alloc::format!("abs scale {scale} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ConvexSpec::Zero => true,
            ConvexSpec::IndicatorInterval { lo, hi } => lo == f64::NEG_INFINITY && hi == f64::INFINITY,
            ConvexSpec::Quadratic { c } => c == 0.0,
            ConvexSpec::AbsValue { scale } => scale == 0.0,
        }
    }

    pub fn in_domain(&self, y: f64) -> bool {
        match *self {
            ConvexSpec::IndicatorInterval { lo, hi } => y >= lo && y <= hi,
            _ => y.is_finite(),
        }
    }

    /// `θ(y)`; `+∞` exactly off the domain.
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            ConvexSpec::Zero => 0.0,
            ConvexSpec::IndicatorInterval { lo, hi } => {
                if y >= lo && y <= hi {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexSpec::Quadratic { c } => 0.5 * c * y * y,
            ConvexSpec::AbsValue { scale } => scale * y.abs(),
        }
    }

    /// Left and right derivatives at `y ∈ Dom(θ)`.
    pub fn subdiff(&self, y: f64) -> Result<SubdiffInterval> {
        if !self.in_domain(y) {
            return Err(Error::DomainViolation { value: y });
        }
        let (left, right) = match *self {
            ConvexSpec::Zero => (0.0, 0.0),
            ConvexSpec::IndicatorInterval { lo, hi } => {
                let left = if y == lo { f64::NEG_INFINITY } else { 0.0 };
                let right = if y == hi { f64::INFINITY } else { 0.0 };
                (left, right)
            }
            ConvexSpec::Quadratic { c } => (c * y, c * y),
            ConvexSpec::AbsValue { scale } => {
                if y > 0.0 {
                    (scale, scale)
                } else if y < 0.0 {
                    (-scale, -scale)
                } else {
                    (-scale, scale)
                }
            }
        };
        Ok(SubdiffInterval { left, right })
    }

    /// `J_λ(x) = (I + λ∂θ)⁻¹(x)`, the proximal map.
    pub fn resolvent(&self, x: f64, lam: f64) -> Result<f64> {
        check_lam(lam)?;
        Ok(self.resolvent_unchecked(x, lam))
    }

    #[inline]
    pub(crate) fn resolvent_unchecked(&self, x: f64, lam: f64) -> f64 {
        match *self {
            ConvexSpec::Zero => x,
            ConvexSpec::IndicatorInterval { lo, hi } => x.max(lo).min(hi),
            ConvexSpec::Quadratic { c } => x / (1.0 + lam * c),
            ConvexSpec::AbsValue { scale } => {
                let t = lam * scale;
                if x > t {
                    x - t
                } else if x < -t {
                    x + t
                } else {
                    0.0
                }
            }
        }
    }

    /// Moreau envelope `θ_λ(x) = min_y |x − y|²/(2λ) + θ(y)`.
    pub fn moreau_envelope(&self, x: f64, lam: f64) -> Result<f64> {
        check_lam(lam)?;
        let j = self.resolvent_unchecked(x, lam);
        Ok((x - j) * (x - j) / (2.0 * lam) + self.eval(j))
    }

    /// Yosida gradient `∇θ_λ(x) = (x − J_λ(x))/λ`.
    pub fn yosida_gradient(&self, x: f64, lam: f64) -> Result<f64> {
        check_lam(lam)?;
        Ok(self.yosida_gradient_unchecked(x, lam))
    }

    #[inline]
    pub(crate) fn yosida_gradient_unchecked(&self, x: f64, lam: f64) -> f64 {
        (x - self.resolvent_unchecked(x, lam)) / lam
    }
}

fn check_lam(lam: f64) -> Result<()> {
    if lam > 0.0 && lam.is_finite() {
        Ok(())
    } else {
        Err(Error::bad(alloc::format!("resolvent parameter {lam} must be > 0")))
    }
}

pub fn eval_convex(spec: &ConvexSpec, y: f64) -> f64 {
    spec.eval(y)
}

pub fn subdiff_interval(spec: &ConvexSpec, y: f64) -> Result<SubdiffInterval> {
    spec.subdiff(y)
}

pub fn resolvent(spec: &ConvexSpec, x: f64, lam: f64) -> Result<f64> {
    spec.resolvent(x, lam)
}

pub fn moreau_envelope(spec: &ConvexSpec, x: f64, lam: f64) -> Result<f64> {
    spec.moreau_envelope(x, lam)
}

pub fn yosida_gradient(spec: &ConvexSpec, x: f64, lam: f64) -> Result<f64> {
    spec.yosida_gradient(x, lam)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn ind02() -> ConvexSpec {
        ConvexSpec::IndicatorInterval { lo: 0.0, hi: 2.0 }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ind02().eval(1.0), 0.0);
        assert_eq!(ind02().eval(3.0), INF);
        assert_eq!(ConvexSpec::Quadratic { c: 1.0 }.eval(2.0), 2.0);
    }

    #[test]
    fn subdiff_examples() {
        assert_eq!(ind02().subdiff(1.0).unwrap(), SubdiffInterval { left: 0.0, right: 0.0 });
        assert_eq!(ind02().subdiff(0.0).unwrap(), SubdiffInterval { left: -INF, right: 0.0 });
        assert_eq!(ind02().subdiff(2.0).unwrap(), SubdiffInterval { left: 0.0, right: INF });
        assert_eq!(
            ConvexSpec::AbsValue { scale: 1.0 }.subdiff(0.0).unwrap(),
            SubdiffInterval { left: -1.0, right: 1.0 }
        );
        assert_eq!(ind02().subdiff(2.5), Err(Error::DomainViolation { value: 2.5 }));
    }

    #[test]
    fn resolvent_examples() {
        assert_eq!(ind02().resolvent(3.0, 0.7).unwrap(), 2.0);
        assert_eq!(ConvexSpec::Zero.resolvent(5.0, 1.0).unwrap(), 5.0);
        assert_eq!(ConvexSpec::Quadratic { c: 1.0 }.resolvent(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(ConvexSpec::AbsValue { scale: 2.0 }.resolvent(1.0, 0.25).unwrap(), 0.5);
        assert!(matches!(ind02().resolvent(1.0, 0.0), Err(Error::BadParameter(_))));
        assert!(matches!(ind02().resolvent(1.0, -1.0), Err(Error::BadParameter(_))));
    }

    /// Brute-force minimisation over a fine y-grid, independent of the
    /// closed-form resolvent.
    fn envelope_by_grid(spec: &ConvexSpec, x: f64, lam: f64) -> f64 {
        let n = 400_001;
        let (a, b) = (-10.0, 10.0);
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .map(|y| (x - y) * (x - y) / (2.0 * lam) + spec.eval(y))
            .fold(INF, f64::min)
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(ConvexSpec::Zero.moreau_envelope(7.0, 0.1).unwrap(), 0.0);
        assert_eq!(ind02().moreau_envelope(3.0, 1.0).unwrap(), 0.5);
        // grid oracle gives 0.25 for the quadratic case
        let q = ConvexSpec::Quadratic { c: 1.0 };
        let oracle = envelope_by_grid(&q, 1.0, 1.0);
        assert!((oracle - 0.25).abs() < 1e-9);
        assert!((q.moreau_envelope(1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        for spec in [ind02(), q, ConvexSpec::AbsValue { scale: 0.7 }] {
            for &x in &[-3.0, -0.2, 0.0, 0.4, 2.5, 6.0] {
                let e = spec.moreau_envelope(x, 0.3).unwrap();
                assert!((e - envelope_by_grid(&spec, x, 0.3)).abs() < 1e-6, "{spec:?} x={x}");
            }
        }
    }

    #[test]
    fn yosida_examples() {
        assert_eq!(ind02().yosida_gradient(3.0, 0.5).unwrap(), 2.0);
        assert_eq!(ind02().yosida_gradient(1.0, 0.5).unwrap(), 0.0);
        assert_eq!(ConvexSpec::Quadratic { c: 1.0 }.yosida_gradient(1.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn validation() {
        assert!(ConvexSpec::indicator(1.0, 2.0).is_err());
        assert!(ConvexSpec::indicator(2.0, -1.0).is_err());
        assert!(ConvexSpec::indicator(-INF, 2.0).is_ok());
        assert!(ConvexSpec::Quadratic { c: -1.0 }.validate().is_err());
    }
}
