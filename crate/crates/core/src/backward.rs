//! Backward regression sweep for the constrained doubly stochastic BSDE.
//!
//! For `k = N−1, …, start` every path forms
//!
//! ```text
//! S = Y_{k+1} + g(t_k, X_k, Y_{k+1})·ΔA_k + h(t_{k+1}, X_{k+1}, Y_{k+1})·ΔB_k
//!     [+ ½(h·∂_y h)(t_{k+1}, X_{k+1}, Y_{k+1})·(ΔB_k² − Δt)]
//! ẑ = E[S·ΔW_k | X_k]/Δt
//! R = S + f(t_k, X_k, Y_{k+1}, ẑ)·Δt
//! ỹ = E[R | X_k]
//! ```
//!
//! with conditional expectations taken by regression over `W` (the backward
//! path is shared and therefore frozen), and then applies the constraint
//! step to `ỹ`. The bracketed Milstein term is on by default; see
//! [`BackwardNoise`].

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coeffs::CoefficientSet;
use crate::convex::ConvexSpec;
use crate::forward::ForwardBatch;
use crate::noise::{PathBundle, TimeGrid};
use crate::par;
use crate::regression::{self, Basis};
use crate::scalar;
use crate::{Error, Result};

/// How a single constraint step is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepMode {
    /// Exact proximal steps `J^φ_{Δt}` then `J^ψ_{ΔA}`.
    Resolvent,
    /// Implicit step with the Yosida gradients `∇φ_ε`, `∇ψ_ε`.
    Yosida { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Resolvent,
    Yosida {
        eps: f64,
    },
    /// Picard iteration with `Y^{n−1}` frozen inside `f` and `h`.
    Picard {
        inner: StepMode,
        max_iter: usize,
        tol: f64,
    },
}

impl SolveMode {
    fn step_mode(&self) -> StepMode {
        match *self {
            SolveMode::Resolvent => StepMode::Resolvent,
            SolveMode::Yosida { eps } => StepMode::Yosida { eps },
            SolveMode::Picard { inner, .. } => inner,
        }
    }
}

/// Discretisation of the backward integral `∫h dB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackwardNoise {
    /// Euler term plus the Milstein correction `½h∂_yh(ΔB² − Δt)`.
    #[default]
    Milstein,
    /// Plain Euler term `h·ΔB`.
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mode: SolveMode,
    /// Total degree of the regression polynomials.
    pub basis_degree: usize,
    /// Componentwise clip applied to `Z`.
    pub z_clip: Option<f64>,
    pub backward_noise: BackwardNoise,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolveMode::Resolvent,
            basis_degree: 2,
            z_clip: None,
            backward_noise: BackwardNoise::Milstein,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mode: SolveMode) -> Self {
        SolverConfig { mode, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let check_eps = |eps: f64| {
            if eps > 0.0 && eps.is_finite() {
                Ok(())
            } else {
                Err(Error::bad(alloc::format!("Yosida eps={eps} must be > 0")))
            }
        };
        match self.mode {
            SolveMode::Resolvent => {}
            SolveMode::Yosida { eps } => check_eps(eps)?,
            SolveMode::Picard { inner, max_iter, tol } => {
                if let StepMode::Yosida { eps } = inner {
                    check_eps(eps)?;
                }
                if max_iter < 1 {
                    return Err(Error::bad("Picard max_iter must be >= 1"));
                }
                if !(tol > 0.0) {
                    return Err(Error::bad(alloc::format!("Picard tol={tol} must be > 0")));
                }
            }
        }
        if let Some(c) = self.z_clip {
            if !(c > 0.0) {
                return Err(Error::bad(alloc::format!("z_clip={c} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintOutput {
    pub y: f64,
    pub u: f64,
    pub v: f64,
}

/// Applies the interior constraint over `dt` and the boundary constraint
/// over `da` to the unconstrained value `r`.
pub fn constraint_step(
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    r: f64,
    dt: f64,
    da: f64,
    mode: &StepMode,
) -> Result<ConstraintOutput> {
    if !(dt > 0.0) {
        return Err(Error::bad(alloc::format!("dt={dt} must be > 0")));
    }
    if !(da >= 0.0) {
        return Err(Error::bad(alloc::format!("dA={da} must be >= 0")));
    }
    if let StepMode::Yosida { eps } = *mode {
        if !(eps > 0.0) {
            return Err(Error::bad(alloc::format!("Yosida eps={eps} must be > 0")));
        }
    }
    constraint_apply(phi, psi, r, dt, da, mode)
}

#[inline]
fn constraint_apply(
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    r: f64,
    dt: f64,
    da: f64,
    mode: &StepMode,
) -> Result<ConstraintOutput> {
    let psi_acts = da > 0.0 && !psi.is_zero();
    match *mode {
        StepMode::Resolvent => {
            let y_phi = phi.resolvent_unchecked(r, dt);
            let u = (r - y_phi) / dt;
            if psi_acts {
                let y = psi.resolvent_unchecked(y_phi, da);
                Ok(ConstraintOutput { y, u, v: (y_phi - y) / da })
            } else {
                Ok(ConstraintOutput { y: y_phi, u, v: 0.0 })
            }
        }
        StepMode::Yosida { eps } => {
            let phi_acts = !phi.is_zero();
            let y = match (phi_acts, psi_acts) {
                (false, false) => r,
                (true, false) => yosida_resolvent(phi, r, dt, eps),
                (false, true) => yosida_resolvent(psi, r, da, eps),
                (true, true) => {
                    let res = |y: f64| {
                        y + dt * phi.yosida_gradient_unchecked(y, eps) + da * psi.yosida_gradient_unchecked(y, eps) - r
                    };
                    scalar::monotone_root(res, r, 1e-14 * (1.0 + r.abs()))?
                }
            };
            let u = if phi_acts { phi.yosida_gradient_unchecked(y, eps) } else { 0.0 };
            let v = if psi_acts { psi.yosida_gradient_unchecked(y, eps) } else { 0.0 };
            Ok(ConstraintOutput { y, u, v })
        }
    }
}

/// Solves `y + λ∇θ_ε(y) = r` through the identity
/// `(I + λ∇θ_ε)⁻¹ = ε/(ε+λ)·I + λ/(ε+λ)·J_{ε+λ}`.
#[inline]
fn yosida_resolvent(theta: &ConvexSpec, r: f64, lam: f64, eps: f64) -> f64 {
    let s = eps + lam;
    (eps / s) * r + (lam / s) * theta.resolvent_unchecked(r, s)
}

/// Whether `φ` then `ψ` can differ from `ψ` then `φ` for these kinds.
fn order_may_matter(phi: &ConvexSpec, psi: &ConvexSpec) -> bool {
    let interval = |c: &ConvexSpec| matches!(c, ConvexSpec::IndicatorInterval { .. } | ConvexSpec::Zero);
    !(phi.is_zero() || psi.is_zero() || (interval(phi) && interval(psi)))
}

/// Per-path, per-node output of a backward sweep.
///
/// Rows cover nodes `start..=N`; accessors take absolute node indices.
#[derive(Debug, Clone)]
pub struct BackwardSolution {
    grid: TimeGrid,
    paths: usize,
    dim: usize,
    start: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    std_err: Vec<f64>,
    mc_std_err: Vec<f64>,
    regression_fallbacks: usize,
    order_sensitive_steps: usize,
}

impl BackwardSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start_index(&self) -> usize {
        self.start
    }

    #[inline]
    pub fn y(&self, k: usize, m: usize) -> f64 {
        self.y[(k - self.start) * self.paths + m]
    }

    pub fn y_row(&self, k: usize) -> &[f64] {
        let o = (k - self.start) * self.paths;
        &self.y[o..o + self.paths]
    }

    /// `Z_k` of path `m`, `k < N`.
    pub fn z(&self, k: usize, m: usize) -> &[f64] {
        let o = ((k - self.start) * self.paths + m) * self.dim;
        &self.z[o..o + self.dim]
    }

    pub fn u(&self, k: usize, m: usize) -> f64 {
        self.u[(k - self.start) * self.paths + m]
    }

    pub fn v(&self, k: usize, m: usize) -> f64 {
        self.v[(k - self.start) * self.paths + m]
    }

    /// Regression standard error of the conditional mean at node `k`
    /// (0 at the terminal node).
    /// Standard error of the regression surface fitted at node `k`.
    pub fn std_err(&self, k: usize) -> f64 {
        self.std_err[k - self.start]
    }

    /// Monte Carlo standard error of `mean_y(k)`, from the spread of the
    /// per-path residual sums over nodes `k..N`.
    pub fn mc_std_err(&self, k: usize) -> f64 {
        self.mc_std_err[k - self.start]
    }

    pub fn mean_y(&self, k: usize) -> f64 {
        self.y_row(k).iter().sum::<f64>() / self.paths as f64
    }

    pub fn mean_z(&self, k: usize, j: usize) -> f64 {
        (0..self.paths).map(|m| self.z(k, m)[j]).sum::<f64>() / self.paths as f64
    }

    pub fn mean_u(&self, k: usize) -> f64 {
        (0..self.paths).map(|m| self.u(k, m)).sum::<f64>() / self.paths as f64
    }

    pub fn mean_v(&self, k: usize) -> f64 {
        (0..self.paths).map(|m| self.v(k, m)).sum::<f64>() / self.paths as f64
    }

    /// Steps where the requested basis was rank deficient.
    pub fn regression_fallbacks(&self) -> usize {
        self.regression_fallbacks
    }

    /// Path-steps where applying `ψ` before `φ` would change `Y`.
    pub fn order_sensitive_steps(&self) -> usize {
        self.order_sensitive_steps
    }
}

/// Receives the rows of a sweep from `N` down to `start`.
pub(crate) trait Observer {
    /// `z`, `u`, `v` are empty at the terminal node.
    fn node(&mut self, k: usize, y: &[f64], z: &[f64], u: &[f64], v: &[f64], err: NodeError);
}

/// Error estimates attached to one node of a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NodeError {
    /// Standard error of the fitted regression surface.
    pub regression: f64,
    /// Standard error of the node mean built from the per-path sums of
    /// regression residuals between this node and `N`.
    pub monte_carlo: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SweepStats {
    pub fallbacks: usize,
    pub order_sensitive: usize,
}

struct Store {
    rows: usize,
    paths: usize,
    dim: usize,
    start: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    std_err: Vec<f64>,
    mc_std_err: Vec<f64>,
}

impl Store {
    fn new(start: usize, n: usize, paths: usize, dim: usize) -> Self {
        let rows = n - start;
        Store {
            rows,
            paths,
            dim,
            start,
            y: vec![0.0; (rows + 1) * paths],
            z: vec![0.0; rows * paths * dim],
            u: vec![0.0; rows * paths],
            v: vec![0.0; rows * paths],
            std_err: vec![0.0; rows + 1],
            mc_std_err: vec![0.0; rows + 1],
        }
    }
}

impl Observer for Store {
    fn node(&mut self, k: usize, y: &[f64], z: &[f64], u: &[f64], v: &[f64], err: NodeError) {
        let r = k - self.start;
        let p = self.paths;
        self.y[r * p..(r + 1) * p].copy_from_slice(y);
        self.std_err[r] = err.regression;
        self.mc_std_err[r] = err.monte_carlo;
        if r < self.rows {
            let w = p * self.dim;
            self.z[r * w..(r + 1) * w].copy_from_slice(z);
            self.u[r * p..(r + 1) * p].copy_from_slice(u);
            self.v[r * p..(r + 1) * p].copy_from_slice(v);
        }
    }
}

fn check_inputs(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    phi.validate()?;
    psi.validate()?;
    coeffs.validate(fwd.dim())?;
    if fwd.paths() != bundle.paths() || fwd.dim() != bundle.dim() || fwd.grid() != bundle.grid() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "forward batch (M={}, d={}, N={}) does not match noise bundle (M={}, d={}, N={})",
            fwd.paths(),
            fwd.dim(),
            fwd.grid().steps(),
            bundle.paths(),
            bundle.dim(),
            bundle.grid().steps()
        )));
    }
    Ok(())
}

/// Concatenates per-chunk vectors in chunk order.
fn gather(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    for p in parts {
        out.extend_from_slice(&p);
    }
    out
}

/// One chunk of a backward step: `Y`, `U`, `V`, regression residuals and
/// the count of order-sensitive paths.
type ChunkOut = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize);

fn chunk_range(c: usize, m: usize) -> core::ops::Range<usize> {
    c * par::CHUNK..((c + 1) * par::CHUNK).min(m)
}

/// Runs one backward sweep, feeding each node to `obs`.
///
/// With `frozen = Some(prev)` (rows `start..=N` of a previous iterate) the
/// drivers `f` and `h` read `prev` instead of the current `Y_{k+1}`.
pub(crate) fn sweep<O: Observer>(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    cfg: &SolverConfig,
    frozen: Option<&[f64]>,
    obs: &mut O,
) -> Result<SweepStats> {
    let grid = *fwd.grid();
    let (m, d, n, start) = (fwd.paths(), fwd.dim(), grid.steps(), fwd.start_index());
    let dt = grid.dt();
    let nc = par::n_chunks(m, par::CHUNK);
    let step = cfg.mode.step_mode();
    let milstein = cfg.backward_noise == BackwardNoise::Milstein && !coeffs.h.is_zero();
    let f_uses_z = coeffs.f.depends_on_z();
    let check_order = order_may_matter(phi, psi);
    let mut stats = SweepStats::default();

    let xn = fwd.x_step(n);
    let mut y_next: Vec<f64> = (0..m).map(|i| coeffs.chi.eval(&xn[i * d..(i + 1) * d])).collect();
    obs.node(n, &y_next, &[], &[], &[], NodeError::default());
    let mut cum = vec![0.0; m];

    for k in (start..n).rev() {
        let (tk, tk1) = (grid.node(k), grid.node(k + 1));
        let xk = fwd.x_step(k);
        let xk1 = fwd.x_step(k + 1);
        let da = fwd.da_step(k);
        let dw = bundle.dw_step(k);
        let db = bundle.db(k);
        let yf: &[f64] = match frozen {
            Some(prev) => &prev[(k + 1 - start) * m..(k + 2 - start) * m],
            None => &y_next,
        };

        let s = gather(
            par::map_chunks(nc, |c| {
                chunk_range(c, m)
                    .map(|i| {
                        let x0 = &xk[i * d..(i + 1) * d];
                        let x1 = &xk1[i * d..(i + 1) * d];
                        let (y, yy) = (y_next[i], yf[i]);
                        let mut s = y + coeffs.g.eval(tk, x0, y) * da[i];
                        let h = coeffs.h.eval(tk1, x1, yy);
                        s += h * db;
                        if milstein {
                            s += 0.5 * h * coeffs.h.dy(tk1, x1, yy) * (db * db - dt);
                        }
                        s
                    })
                    .collect()
            }),
            m,
        );

        let mut basis = Basis::fit(xk, d, cfg.basis_degree);
        let requested = basis.terms();
        if requested > m {
            basis = Basis::constant(d);
        }
        // targets: Z components first, then R when f ignores z
        let r_direct = |i: usize| {
            let x0 = &xk[i * d..(i + 1) * d];
            s[i] + coeffs.f.eval(tk, x0, yf[i], &[]) * dt
        };
        let targets = if f_uses_z { d } else { d + 1 };
        let fill = |i: usize, out: &mut [f64]| {
            for j in 0..d {
                out[j] = s[i] * dw[i * d + j] / dt;
            }
            if !f_uses_z {
                out[d] = r_direct(i);
            }
        };
        let mut normal = regression::accumulate(&basis, xk, targets, true, fill);
        let chol = match regression::factor(&normal) {
            Some(l) => l,
            None => {
                basis = Basis::constant(d);
                normal = regression::accumulate(&basis, xk, targets, true, fill);
                regression::factor(&normal).ok_or(Error::SingularRegression { terms: 1 })?
            }
        };
        if basis.terms() < requested {
            stats.fallbacks += 1;
        }
        let coef = regression::coefficients(&chol, &normal);
        let p = basis.terms();
        let clip = cfg.z_clip;

        // ẑ per path, clipped
        let z = gather(
            par::map_chunks(nc, |c| {
                let mut phi_v = vec![0.0; p];
                let mut out = Vec::with_capacity(par::CHUNK * d);
                for i in chunk_range(c, m) {
                    basis.features(&xk[i * d..(i + 1) * d], &mut phi_v);
                    for j in 0..d {
                        let mut zj = regression::predict(&coef, targets, j, &phi_v);
                        if let Some(cl) = clip {
                            zj = zj.max(-cl).min(cl);
                        }
                        out.push(zj);
                    }
                }
                out
            }),
            m * d,
        );

        let r: Vec<f64> = if f_uses_z {
            gather(
                par::map_chunks(nc, |c| {
                    chunk_range(c, m)
                        .map(|i| {
                            let x0 = &xk[i * d..(i + 1) * d];
                            s[i] + coeffs.f.eval(tk, x0, yf[i], &z[i * d..(i + 1) * d]) * dt
                        })
                        .collect()
                }),
                m,
            )
        } else {
            (0..m).map(r_direct).collect()
        };
        let (y_coef, y_targets, y_col) = if f_uses_z {
            let rn = regression::accumulate(&basis, xk, 1, false, |i, out| out[0] = r[i]);
            let rn = regression::Normal { gram: normal.gram.clone(), ..rn };
            (regression::coefficients(&chol, &rn), 1, 0)
        } else {
            (coef.clone(), targets, d)
        };

        // ỹ, residuals and the constraint step
        let parts = par::map_chunks(nc, |c| -> Result<ChunkOut> {
            let mut phi_v = vec![0.0; p];
            let range = chunk_range(c, m);
            let mut ys = Vec::with_capacity(range.len());
            let mut us = Vec::with_capacity(range.len());
            let mut vs = Vec::with_capacity(range.len());
            let mut res = Vec::with_capacity(range.len());
            let mut sensitive = 0;
            for i in range {
                basis.features(&xk[i * d..(i + 1) * d], &mut phi_v);
                let yt = regression::predict(&y_coef, y_targets, y_col, &phi_v);
                res.push(r[i] - yt);
                let out = constraint_apply(phi, psi, yt, dt, da[i], &step)?;
                if check_order && da[i] > 0.0 {
                    let alt = phi.resolvent_unchecked(psi.resolvent_unchecked(yt, da[i]), dt);
                    if (alt - out.y).abs() > 1e-12 * (1.0 + out.y.abs()) {
                        sensitive += 1;
                    }
                }
                ys.push(out.y);
                us.push(out.u);
                vs.push(out.v);
            }
            Ok((ys, us, vs, res, sensitive))
        });
        let mut y = Vec::with_capacity(m);
        let mut u = Vec::with_capacity(m);
        let mut v = Vec::with_capacity(m);
        let mut rss = 0.0;
        for part in parts {
            let (ys, us, vs, res, sens) = part?;
            for (c, e) in cum[y.len()..].iter_mut().zip(&res) {
                rss += e * e;
                *c += e;
            }
            y.extend_from_slice(&ys);
            u.extend_from_slice(&us);
            v.extend_from_slice(&vs);
            stats.order_sensitive += sens;
        }
        let std_err = if m > p {
            let rv = rss / (m - p) as f64;
            (rv * p as f64 / m as f64).sqrt()
        } else {
            0.0
        };
        let mean = cum.iter().sum::<f64>() / m as f64;
        let var = cum.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (m.max(2) - 1) as f64;
        let err = NodeError { regression: std_err, monte_carlo: (var / m as f64).sqrt() };
        obs.node(k, &y, &z, &u, &v, err);
        y_next = y;
    }
    Ok(stats)
}

/// Solves the backward equation on the paths of `fwd`.
///
/// In Picard mode this runs [`picard_solve`] and returns its final iterate.
pub fn solve_backward(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    config: &SolverConfig,
) -> Result<BackwardSolution> {
    if let SolveMode::Picard { .. } = config.mode {
        return picard_solve(fwd, bundle, coeffs, phi, psi, config).map(|o| o.solution);
    }
    check_inputs(fwd, bundle, coeffs, phi, psi, config)?;
    solve_once(fwd, bundle, coeffs, phi, psi, config, None)
}

fn solve_once(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    config: &SolverConfig,
    frozen: Option<&[f64]>,
) -> Result<BackwardSolution> {
    let n = fwd.grid().steps();
    let mut store = Store::new(fwd.start_index(), n, fwd.paths(), fwd.dim());
    let stats = sweep(fwd, bundle, coeffs, phi, psi, config, frozen, &mut store)?;
    Ok(BackwardSolution {
        grid: *fwd.grid(),
        paths: store.paths,
        dim: store.dim,
        start: store.start,
        y: store.y,
        z: store.z,
        u: store.u,
        v: store.v,
        std_err: store.std_err,
        mc_std_err: store.mc_std_err,
        regression_fallbacks: stats.fallbacks,
        order_sensitive_steps: stats.order_sensitive,
    })
}

/// Final iterate, iteration count and residual history of a Picard run.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: BackwardSolution,
    /// Number of Picard updates before the iterate stopped moving.
    pub iterations: usize,
    /// `residuals[n]` is the largest node-wise mean-square gap between
    /// iterates `n+1` and `n` (`Y⁰ ≡ 0`).
    pub residuals: Vec<f64>,
}

/// Picard iteration: each sweep freezes the previous iterate inside `f`
/// and `h`; `g`, the constraints and the `Z` coupling stay current.
pub fn picard_solve(
    fwd: &ForwardBatch,
    bundle: &PathBundle,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    config: &SolverConfig,
) -> Result<PicardOutcome> {
    check_inputs(fwd, bundle, coeffs, phi, psi, config)?;
    let SolveMode::Picard { max_iter, tol, .. } = config.mode else {
        return Err(Error::bad("picard_solve needs a Picard solver mode"));
    };
    let m = fwd.paths();
    let rows = fwd.grid().steps() - fwd.start_index() + 1;
    let mut prev = vec![0.0; rows * m];
    let mut residuals = Vec::new();
    for _ in 0..max_iter {
        let sol = solve_once(fwd, bundle, coeffs, phi, psi, config, Some(&prev))?;
        let gap = (0..rows)
            .map(|r| {
                let a = &sol.y[r * m..(r + 1) * m];
                let b = &prev[r * m..(r + 1) * m];
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / m as f64
            })
            .fold(0.0, f64::max);
        residuals.push(gap);
        if gap < tol {
            let iterations = residuals.len() - 1;
            return Ok(PicardOutcome { solution: sol, iterations, residuals });
        }
        prev = sol.y;
    }
    Err(Error::NonConvergence { residuals })
}
