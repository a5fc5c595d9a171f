#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::modulus::{inverse_integral, Modulus};
use crate::scalar;
use crate::{Error, Result};

/// Bihari bound `G⁻¹(G(α) + ∫₀ᵗ f)` with `G(u) = ∫_α^u ds/w(s)`.
///
/// Returns 0 for `α = 0` when `∫_{0+} ds/w` diverges, and `+∞` when the
/// bound escapes to infinity before `∫₀ᵗ f` is used up.
pub fn bihari_bound<M, F>(alpha: f64, f: F, w: &M, t: f64) -> Result<f64>
where
    M: Modulus + ?Sized,
    F: Fn(f64) -> f64,
{
    if !(alpha >= 0.0 && t >= 0.0) {
        return Err(Error::bad(alloc::format!("need alpha >= 0 and t >= 0, got alpha={alpha}, t={t}")));
    }
    let budget = scalar::adaptive_simpson(&f, 0.0, t, 1e-12)?;
    if budget < 0.0 {
        return Err(Error::QuadratureFailure(alloc::format!("integral of f is negative ({budget})")));
    }
    let lower = if alpha > 0.0 {
        alpha
    } else if w.diverges_at_zero() {
        return Ok(0.0);
    } else {
        1e-150
    };
    if budget == 0.0 {
        return Ok(alpha);
    }
    let tol = 1e-12 * (1.0 + budget);
    let excess = |u: f64| -> Result<f64> { Ok(inverse_integral(w, lower, u)? - budget) };
    let mut hi = (2.0 * lower).max(1.0);
    while excess(hi)? < 0.0 {
        hi *= 4.0;
        if hi > 1e150 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = lower;
    // bisection in log space
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid)?;
        if e.abs() <= tol {
            return Ok(mid);
        }
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{ModulusRho, PowerModulus};

    #[test]
    fn gronwall_case() {
        let w = PowerModulus { scale: 1.0, exponent: 1.0 };
        for &(a, c, t) in &[(1.0, 0.5, 2.0), (0.3, 2.0, 1.0)] {
            let b = bihari_bound(a, |_| c, &w, t).unwrap();
            let exact = a * (c * t).exp();
            assert!((b - exact).abs() < 1e-8 * exact, "{b} vs {exact}");
        }
    }

    #[test]
    fn square_root_ode() {
        // u' = √u, u(0) = 1 gives u(1) = (1 + 1/2)²
        let w = PowerModulus { scale: 1.0, exponent: 0.5 };
        let b = bihari_bound(1.0, |_| 1.0, &w, 1.0).unwrap();
        assert!((b - 2.25).abs() < 1e-8);
        // from zero the integrable modulus still grows: u = (t/2)²
        let b0 = bihari_bound(0.0, |_| 1.0, &w, 1.0).unwrap();
        assert!((b0 - 0.25).abs() < 1e-8, "{b0}");
    }

    #[test]
    fn zero_stays_zero_under_divergent_modulus() {
        let w = ModulusRho::Rho1 { delta: 0.2 };
        assert_eq!(bihari_bound(0.0, |_| 3.0, &w, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn monotone_in_alpha_and_budget() {
        let w = ModulusRho::Rho1 { delta: 0.2 };
        let mut prev = 0.0;
        for &a in &[1e-6, 1e-4, 1e-2, 0.1, 0.5] {
            let b = bihari_bound(a, |_| 1.0, &w, 1.0).unwrap();
            assert!(b >= a && b > prev);
            prev = b;
        }
        let mut prev = 0.0;
        for &c in &[0.1, 0.5, 1.0, 2.0] {
            let b = bihari_bound(0.01, |_| c, &w, 1.0).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn finite_escape() {
        let w = PowerModulus { scale: 1.0, exponent: 2.0 };
        // u' = u², u(0) = 1 blows up at t = 1
        assert_eq!(bihari_bound(1.0, |_| 1.0, &w, 2.0).unwrap(), f64::INFINITY);
        let b = bihari_bound(1.0, |_| 1.0, &w, 0.5).unwrap();
        assert!((b - 2.0).abs() < 1e-8);
    }
}
