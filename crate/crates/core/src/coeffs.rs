//! Parametric coefficient registry: drivers `f`, `g`, `h`, terminal map `χ`,
//! drift `b` and diffusion `σ`, plus the growth constants they are declared
//! to satisfy.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::convex::ConvexSpec;
use crate::modulus::ModulusRho;
use crate::noise::GaussianStream;
use crate::{Error, Result};

/// Interior driver `f(t, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Driver {
    Zero,
    Constant {
        c: f64,
    },
    /// `a·y`.
    Linear {
        a: f64,
    },
    /// `a·y + bz·Σⱼ zⱼ + c`.
    Affine {
        a: f64,
        bz: f64,
        c: f64,
    },
    /// `k·sgn(y)·√ρ₁(y²)`: continuous with modulus `ρ₁` but not Lipschitz at 0.
    LogLipschitz {
        k: f64,
        delta: f64,
    },
}

impl Driver {
    #[inline]
    pub fn eval(&self, _t: f64, _x: &[f64], y: f64, z: &[f64]) -> f64 {
        match *self {
            Driver::Zero => 0.0,
            Driver::Constant { c } => c,
            Driver::Linear { a } => a * y,
            Driver::Affine { a, bz, c } => a * y + bz * z.iter().sum::<f64>() + c,
            Driver::LogLipschitz { k, delta } => {
                let r = ModulusRho::Rho1 { delta }.eval_unchecked(y * y);
                k * y.signum() * r.sqrt()
            }
        }
    }

    pub fn depends_on_y(&self) -> bool {
        match *self {
            Driver::Zero | Driver::Constant { .. } => false,
            Driver::Linear { a } | Driver::Affine { a, .. } => a != 0.0,
            Driver::LogLipschitz { k, .. } => k != 0.0,
        }
    }

    pub fn depends_on_z(&self) -> bool {
        matches!(*self, Driver::Affine { bz, .. } if bz != 0.0)
    }
}

/// Boundary driver `g(t, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryDriver {
    Zero,
    Constant {
        c: f64,
    },
    /// `a·y`.
    Linear {
        a: f64,
    },
    /// `a·y + c`.
    Affine {
        a: f64,
        c: f64,
    },
}

impl BoundaryDriver {
    #[inline]
    pub fn eval(&self, _t: f64, _x: &[f64], y: f64) -> f64 {
        match *self {
            BoundaryDriver::Zero => 0.0,
            BoundaryDriver::Constant { c } => c,
            BoundaryDriver::Linear { a } => a * y,
            BoundaryDriver::Affine { a, c } => a * y + c,
        }
    }
}

/// The `y`-profile `m(y)` of a separable backward driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YProfile {
    /// `β·y`.
    Linear { beta: f64 },
    /// `amp·sin(y)`.
    Sine { amp: f64 },
}

impl YProfile {
    #[inline]
    fn eval(&self, y: f64) -> f64 {
        match *self {
            YProfile::Linear { beta } => beta * y,
            YProfile::Sine { amp } => amp * y.sin(),
        }
    }

    #[inline]
    fn dy(&self, y: f64) -> f64 {
        match *self {
            YProfile::Linear { beta } => beta,
            YProfile::Sine { amp } => amp * y.cos(),
        }
    }

    #[inline]
    fn dyy(&self, y: f64) -> f64 {
        match *self {
            YProfile::Linear { .. } => 0.0,
            YProfile::Sine { amp } => -amp * y.sin(),
        }
    }

    fn lipschitz(&self) -> f64 {
        match *self {
            YProfile::Linear { beta } => beta.abs(),
            YProfile::Sine { amp } => amp.abs(),
        }
    }
}

/// Backward-noise driver `h(t, x, y)` (no `z` dependence).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDriver {
    Zero,
    /// `h = β·y`, whose flow is `y·exp(β(B_T − B_t))`.
    ExpBeta {
        beta: f64,
    },
    /// `h = amp·sin(y)`.
    Sine {
        amp: f64,
    },
    /// `h = c(x)·m(y)` with `c(x) = 1 + amp·sin(freq·x₁)`.
    Separable {
        amp: f64,
        freq: f64,
        profile: YProfile,
    },
}

impl NoiseDriver {
    #[inline]
    fn spatial(&self, x: &[f64]) -> (f64, f64, f64) {
        match *self {
            NoiseDriver::Separable { amp, freq, .. } => {
                let s = (freq * x[0]).sin();
                let c = (freq * x[0]).cos();
                (1.0 + amp * s, amp * freq * c, -amp * freq * freq * s)
            }
            _ => (1.0, 0.0, 0.0),
        }
    }

    #[inline]
    fn profile(&self) -> Option<YProfile> {
        match *self {
            NoiseDriver::Zero => None,
            NoiseDriver::ExpBeta { beta } => Some(YProfile::Linear { beta }),
            NoiseDriver::Sine { amp } => Some(YProfile::Sine { amp }),
            NoiseDriver::Separable { profile, .. } => Some(profile),
        }
    }

    #[inline]
    pub fn eval(&self, _t: f64, x: &[f64], y: f64) -> f64 {
        match self.profile() {
            None => 0.0,
            Some(p) => self.spatial(x).0 * p.eval(y),
        }
    }

    /// `∂_y h`.
    #[inline]
    pub fn dy(&self, _t: f64, x: &[f64], y: f64) -> f64 {
        match self.profile() {
            None => 0.0,
            Some(p) => self.spatial(x).0 * p.dy(y),
        }
    }

    /// `∂_yy h`.
    #[inline]
    pub fn dyy(&self, _t: f64, x: &[f64], y: f64) -> f64 {
        match self.profile() {
            None => 0.0,
            Some(p) => self.spatial(x).0 * p.dyy(y),
        }
    }

    /// `∂_{x₁} h` and `∂_{x₁x₁} h` (other coordinates do not enter).
    #[inline]
    pub fn dx1(&self, _t: f64, x: &[f64], y: f64) -> (f64, f64) {
        match self.profile() {
            None => (0.0, 0.0),
            Some(p) => {
                let (_, c1, c2) = self.spatial(x);
                let m = p.eval(y);
                (c1 * m, c2 * m)
            }
        }
    }

    /// `∂_{x₁} ∂_y h`.
    #[inline]
    pub fn dx1y(&self, _t: f64, x: &[f64], y: f64) -> f64 {
        match self.profile() {
            None => 0.0,
            Some(p) => self.spatial(x).1 * p.dy(y),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            NoiseDriver::Zero => true,
            NoiseDriver::ExpBeta { beta } => beta == 0.0,
            NoiseDriver::Sine { amp } => amp == 0.0,
            NoiseDriver::Separable { profile, .. } => profile.lipschitz() == 0.0,
        }
    }

    pub fn is_x_free(&self) -> bool {
        match *self {
            NoiseDriver::Separable { amp, freq, .. } => amp == 0.0 || freq == 0.0,
            _ => true,
        }
    }

    fn lipschitz_y(&self) -> f64 {
        match *self {
            NoiseDriver::Separable { amp, profile, .. } => (1.0 + amp.abs()) * profile.lipschitz(),
            _ => self.profile().map_or(0.0, |p| p.lipschitz()),
        }
    }
}

/// Terminal map `χ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Constant {
        c: f64,
    },
    /// `a·x₁ + c`.
    Linear {
        a: f64,
        c: f64,
    },
    /// `|x|`.
    Abs,
    /// Piecewise-linear interpolation in `x₁` with flat extrapolation.
    Table {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl Terminal {
    pub fn validate(&self) -> Result<()> {
        if let Terminal::Table { xs, ys } = self {
            if xs.len() != ys.len() || xs.is_empty() {
                return Err(Error::bad("terminal table needs equally many (>= 1) xs and ys"));
            }
            if xs.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::bad("terminal table xs must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Terminal::Constant { c } => *c,
            Terminal::Linear { a, c } => a * x[0] + c,
            Terminal::Abs => crate::domain::norm(x),
            Terminal::Table { xs, ys } => {
                let v = x[0];
                if v <= xs[0] {
                    return ys[0];
                }
                let n = xs.len();
                if v >= xs[n - 1] {
                    return ys[n - 1];
                }
                let i = xs.partition_point(|p| *p <= v) - 1;
                let w = (v - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + w * (ys[i + 1] - ys[i])
            }
        }
    }
}

/// Forward drift `b(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    Constant {
        v: Vec<f64>,
    },
    /// `a·x`.
    Linear {
        a: f64,
    },
}

impl Drift {
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Drift::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Drift::Constant { v } => out.copy_from_slice(v),
            Drift::Linear { a } => out.iter_mut().zip(x).for_each(|(o, xi)| *o = a * xi),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Drift::Zero => true,
            Drift::Constant { v } => v.iter().all(|c| *c == 0.0),
            Drift::Linear { a } => *a == 0.0,
        }
    }
}

/// Forward diffusion `σ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusion {
    /// `σ = s·I`.
    ScaledIdentity { s: f64 },
}

impl Diffusion {
    /// Writes `σ(x)·dw` into `out`.
    #[inline]
    pub fn apply_into(&self, _x: &[f64], dw: &[f64], out: &mut [f64]) {
        match *self {
            Diffusion::ScaledIdentity { s } => out.iter_mut().zip(dw).for_each(|(o, w)| *o = s * w),
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Diffusion::ScaledIdentity { s } => s,
        }
    }
}

/// Constants the coefficients are declared to satisfy:
///
/// * `|f(y₁,z₁) − f(y₂,z₂)|² ≤ rho_scale·ρ(|y₁−y₂|²) + K·|z₁−z₂|²`,
/// * `|h(y₁) − h(y₂)|² ≤ rho_scale·ρ(|y₁−y₂|²)` (`α` is recorded; `h` is z-free),
/// * `(y₁−y₂)(g(y₁) − g(y₂)) ≤ β·|y₁−y₂|²`,
/// * `|f(y,z)| ≤ γ + K′(|y| + |z|)`,
/// * `|χ(x)| + φ(χ(x)) + ψ(χ(x)) ≤ K_χ(1 + |x|^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants {
    pub k: f64,
    pub k_prime: f64,
    /// Constant bound on |f| at the origin of (y, z).
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub k_chi: f64,
    pub rho: ModulusRho,
    pub rho_scale: f64,
}

impl GrowthConstants {
    /// Constants that hold by construction for the registry parameters.
    pub fn infer(f: &Driver, g: &BoundaryDriver, h: &NoiseDriver, chi: &Terminal, dim: usize) -> Self {
        let d = dim as f64;
        let (mut lip_f, mut k, k_prime, log_k) = match *f {
            Driver::Zero | Driver::Constant { .. } => (0.0, 0.0, 0.0, None),
            Driver::Linear { a } => (a * a, 0.0, a.abs(), None),
            Driver::Affine { a, bz, .. } => (2.0 * a * a, 2.0 * bz * bz * d, a.abs().max(bz.abs() * d.sqrt()), None),
            Driver::LogLipschitz { k, delta } => {
                let kap = ModulusRho::Rho1 { delta }.kappa();
                (0.0, 0.0, k.abs() * kap.sqrt().max(1.0), Some((k, delta)))
            }
        };
        let lip_h = h.lipschitz_y().powi(2);
        lip_f = lip_f.max(lip_h);
        if k == 0.0 {
            k = 1e-12;
        }
        let (rho, rho_scale) = match log_k {
            Some((kk, delta)) => {
                let r = ModulusRho::Rho1 { delta };
                (r, (4.0 * kk * kk).max(lip_f / r.linear_floor()))
            }
            None => (ModulusRho::Lipschitz { k: 1.0 }, lip_f.max(1e-12)),
        };
        let beta = match *g {
            BoundaryDriver::Linear { a } | BoundaryDriver::Affine { a, .. } => a,
            _ => 0.0,
        };
        let gamma = match *f {
            Driver::Zero => 0.0,
            Driver::Constant { c } | Driver::Affine { c, .. } => c.abs(),
            Driver::Linear { .. } => 0.0,
            // rho1(y^2) <= delta ln(1/delta) + kappa y^2 on the whole line
            Driver::LogLipschitz { k, delta } => k.abs() * (delta * (1.0 / delta).ln()).sqrt(),
        };
        let k_chi = match chi {
            Terminal::Constant { c } => c.abs(),
            Terminal::Linear { a, c } => a.abs().max(c.abs()),
            Terminal::Abs => 1.0,
            Terminal::Table { ys, .. } => ys.iter().fold(0.0, |m: f64, y| m.max(y.abs())),
        };
        GrowthConstants { k, k_prime, gamma, alpha: 0.5, beta, p: 1.0, k_chi, rho, rho_scale }
    }
}

/// All coefficients of the forward–backward system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub f: Driver,
    pub g: BoundaryDriver,
    pub h: NoiseDriver,
    pub chi: Terminal,
    pub b: Drift,
    pub sigma: Diffusion,
    pub constants: GrowthConstants,
}

impl CoefficientSet {
    /// Builds a set with inferred growth constants.
    pub fn new(
        f: Driver,
        g: BoundaryDriver,
        h: NoiseDriver,
        chi: Terminal,
        b: Drift,
        sigma: Diffusion,
        dim: usize,
    ) -> Self {
        let constants = GrowthConstants::infer(&f, &g, &h, &chi, dim);
        CoefficientSet { f, g, h, chi, b, sigma, constants }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.chi.validate()?;
        if let Drift::Constant { v } = &self.b {
            if v.len() != dim {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "constant drift has {} components, domain has dimension {dim}",
                    v.len()
                )));
            }
        }
        if let Driver::LogLipschitz { delta, .. } = self.f {
            ModulusRho::Rho1 { delta }.validate()?;
        }
        self.constants.rho.validate()?;
        if !(self.constants.alpha > 0.0 && self.constants.alpha < 1.0) {
            return Err(Error::bad(alloc::format!("alpha={} must lie in (0, 1)", self.constants.alpha)));
        }
        Ok(())
    }

    /// Spot-checks the declared constants on random pairs.
    pub fn check_assumptions(
        &self,
        phi: &ConvexSpec,
        psi: &ConvexSpec,
        dim: usize,
        samples: usize,
        seed: u64,
    ) -> AssumptionReport {
        let c = &self.constants;
        let mut g = GaussianStream::new(seed, 0xC0EF);
        let mut rep = AssumptionReport { samples, ..Default::default() };
        let mut x = alloc::vec![0.0; dim];
        let mut z1 = alloc::vec![0.0; dim];
        let mut z2 = alloc::vec![0.0; dim];
        for i in 0..samples {
            // differences spread over many scales to probe the modulus near 0
            let scale = 10f64.powi(-((i % 13) as i32));
            let y1 = 2.0 * g.next_normal();
            let y2 = y1 + scale * g.next_normal();
            for j in 0..dim {
                x[j] = g.next_normal();
                z1[j] = g.next_normal();
                z2[j] = z1[j] + scale * g.next_normal();
            }
            let t = 0.5;
            let du = (y1 - y2) * (y1 - y2);
            let dz: f64 = z1.iter().zip(&z2).map(|(a, b)| (a - b) * (a - b)).sum();
            let rho = c.rho_scale * c.rho.eval_unchecked(du);
            let tol = 1e-12 * (1.0 + y1.abs() + y2.abs());

            let df = self.f.eval(t, &x, y1, &z1) - self.f.eval(t, &x, y2, &z2);
            if df * df > rho + c.k * dz + tol {
                rep.f_modulus_violations += 1;
            }
            let dh = self.h.eval(t, &x, y1) - self.h.eval(t, &x, y2);
            if dh * dh > rho + tol {
                rep.h_modulus_violations += 1;
            }
            let dg = self.g.eval(t, &x, y1) - self.g.eval(t, &x, y2);
            if (y1 - y2) * dg > c.beta * du + tol {
                rep.g_monotonicity_violations += 1;
            }
            let f0 = self.f.eval(t, &x, 0.0, &alloc::vec![0.0; dim]).abs().max(c.gamma);
            let zn: f64 = z1.iter().map(|v| v * v).sum::<f64>().sqrt();
            if self.f.eval(t, &x, y1, &z1).abs() > f0 + c.k_prime * (y1.abs() + zn) + tol {
                rep.f_growth_violations += 1;
            }
            let chi = self.chi.eval(&x);
            let xn = crate::domain::norm(&x);
            let lhs = chi.abs() + phi.eval(chi) + psi.eval(chi);
            if !(lhs <= c.k_chi * (1.0 + xn.powf(c.p)) + tol) {
                rep.chi_growth_violations += 1;
            }
        }
        rep
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssumptionReport {
    pub samples: usize,
    pub f_modulus_violations: usize,
    pub h_modulus_violations: usize,
    pub g_monotonicity_violations: usize,
    pub f_growth_violations: usize,
    pub chi_growth_violations: usize,
}

impl AssumptionReport {
    pub fn ok(&self) -> bool {
        self.f_modulus_violations == 0
            && self.h_modulus_violations == 0
            && self.g_monotonicity_violations == 0
            && self.f_growth_violations == 0
            && self.chi_growth_violations == 0
    }
}
