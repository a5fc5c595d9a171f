//! Randomized checks of the Moreau–Yosida identities for every
//! [`ConvexSpec`] kind.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::convex::ConvexSpec;
use crate::noise::GaussianStream;

const INF: f64 = f64::INFINITY;

/// Violation counts per property; all zero on success.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct YosidaPropertyReport {
    pub draws: usize,
    /// Supporting-line test of the envelope: convex with gradient `∇θ_ε`.
    pub convexity: usize,
    /// `∇θ_ε(x) ∈ ∂θ(J_ε(x))`.
    pub subgradient: usize,
    /// `|∇θ_ε(x) − ∇θ_ε(y)| ≤ |x − y|/ε`.
    pub lipschitz: usize,
    /// `(∇θ_ε(x) − ∇θ_ε(y))(x − y) ≥ 0`.
    pub monotone: usize,
    /// `(∇θ_ε(x) − ∇θ_δ(y))(x − y) ≥ −(ε + δ)∇θ_ε(x)∇θ_δ(y)`.
    pub cross: usize,
}

impl YosidaPropertyReport {
    pub fn violations(&self) -> usize {
        self.convexity + self.subgradient + self.lipschitz + self.monotone + self.cross
    }
}

fn draw_spec(g: &mut GaussianStream, i: usize) -> ConvexSpec {
    let end = |g: &mut GaussianStream| if g.next_uniform() < 0.2 { INF } else { 3.0 * g.next_uniform() };
    match i % 4 {
        0 => ConvexSpec::Zero,
        1 => {
            let lo = -end(g);
            ConvexSpec::IndicatorInterval { lo, hi: end(g) }
        }
        2 => ConvexSpec::Quadratic { c: 5.0 * g.next_uniform() },
        _ => ConvexSpec::AbsValue { scale: 3.0 * g.next_uniform() },
    }
}

/// `ε` log-uniform on `[1e-3, 1]`.
fn draw_lam(g: &mut GaussianStream) -> f64 {
    10f64.powf(-3.0 * g.next_uniform())
}

/// Checks the five Moreau–Yosida properties on `draws` random
/// `(θ, x, y, ε, δ)`, cycling through the four kinds.
pub fn yosida_properties(draws: usize, seed: u64) -> YosidaPropertyReport {
    let mut g = GaussianStream::new(seed, 0x5EED);
    let mut rep = YosidaPropertyReport { draws, ..Default::default() };
    for i in 0..draws {
        let theta = draw_spec(&mut g, i);
        let x = 4.0 * g.next_normal();
        // every fourth pair is close, to probe the Lipschitz bound at small scale
        let y = if i % 4 == 3 { x + 1e-3 * g.next_normal() } else { 4.0 * g.next_normal() };
        let (eps, delta) = (draw_lam(&mut g), draw_lam(&mut g));
        let ge = |v: f64, l: f64| theta.yosida_gradient_unchecked(v, l);
        let env = |v: f64, l: f64| theta.moreau_envelope(v, l).unwrap_or(INF);
        let (gx, gy, gdy) = (ge(x, eps), ge(y, eps), ge(y, delta));
        let scale = 1.0 + x.abs() + y.abs() + (gx.abs() + gy.abs() + gdy.abs()) * (1.0 + x.abs() + y.abs());
        let tol = 1e-11 * scale * (1.0 + 1.0 / eps);

        if env(y, eps) < env(x, eps) + gx * (y - x) - tol {
            rep.convexity += 1;
        }
        let j = theta.resolvent_unchecked(x, eps);
        match theta.subdiff(j) {
            Ok(s) if s.contains(gx, 1e-12) => {}
            _ => rep.subgradient += 1,
        }
        if (gx - gy).abs() > (x - y).abs() / eps + tol {
            rep.lipschitz += 1;
        }
        if (gx - gy) * (x - y) < -tol {
            rep.monotone += 1;
        }
        if (gx - gdy) * (x - y) < -(eps + delta) * gx * gdy - tol {
            rep.cross += 1;
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_clean() {
        let r = yosida_properties(4000, 1);
        assert_eq!(r.violations(), 0, "{r:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(yosida_properties(100, 9), yosida_properties(100, 9));
    }
}
