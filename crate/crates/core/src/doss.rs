//! Doss–Sussmann flow `η(t, x, y) = y + ∫_t^T h(s, x, η(s, x, y)) ∘ dB_s`,
//! integrated backwards from `T` along the scenario path, and the
//! coefficients of the transformed (noise-free) equation.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coeffs::{CoefficientSet, NoiseDriver};
use crate::domain::DomainSpec;
use crate::noise::TimeGrid;
use crate::scalar;
use crate::{Error, Result};

/// The backward driver generating the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub h: NoiseDriver,
    /// Use `η = y·exp(β(B_T − B_t))` for [`NoiseDriver::ExpBeta`].
    pub closed_form: bool,
}

impl FlowSpec {
    pub fn new(h: NoiseDriver) -> Self {
        FlowSpec { h, closed_form: matches!(h, NoiseDriver::ExpBeta { .. }) }
    }

    pub fn numeric(h: NoiseDriver) -> Self {
        FlowSpec { h, closed_form: false }
    }
}

/// `η` and its first derivatives at one `(t, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub eta: f64,
    pub d_y: f64,
    /// `∂_{x₁}η`; the other coordinates never enter the supported drivers.
    pub d_x1: f64,
}

fn node_index(grid: &TimeGrid, b: &[f64], t: f64) -> Result<usize> {
    if b.len() != grid.steps() + 1 {
        return Err(Error::ShapeMismatch(alloc::format!(
            "backward path has {} nodes, grid has {}",
            b.len(),
            grid.steps() + 1
        )));
    }
    grid.index_of(t).ok_or_else(|| {
        Error::bad(alloc::format!("t={t} is not a node of the grid on [{}, {}]", grid.t0(), grid.t_end()))
    })
}

/// Integrates the flow from node `N` down to node `k`.
pub(crate) fn flow_at(spec: &FlowSpec, grid: &TimeGrid, b: &[f64], k: usize, x: &[f64], y: f64) -> FlowPoint {
    let n = grid.steps();
    if spec.h.is_zero() {
        return FlowPoint { eta: y, d_y: 1.0, d_x1: 0.0 };
    }
    if let (true, NoiseDriver::ExpBeta { beta }) = (spec.closed_form, spec.h) {
        let e = (beta * (b[n] - b[k])).exp();
        return FlowPoint { eta: y * e, d_y: e, d_x1: 0.0 };
    }
    let h = &spec.h;
    let (mut eta, mut dy, mut dx) = (y, 1.0, 0.0);
    for j in (k..n).rev() {
        let db = b[j + 1] - b[j];
        let tm = 0.5 * (grid.node(j) + grid.node(j + 1));
        // implicit midpoint: e = eta + h((e + eta)/2)·ΔB, by Newton
        let mut e = eta + h.eval(tm, x, eta) * db;
        for _ in 0..60 {
            let mid = 0.5 * (e + eta);
            let res = e - eta - h.eval(tm, x, mid) * db;
            let jac = 1.0 - 0.5 * h.dy(tm, x, mid) * db;
            let step = res / jac;
            e -= step;
            if step.abs() <= 1e-15 * (1.0 + e.abs()) {
                break;
            }
        }
        let mid = 0.5 * (e + eta);
        let a = h.dy(tm, x, mid) * db;
        let hx = h.dx1(tm, x, mid).0 * db;
        dy = dy * (1.0 + 0.5 * a) / (1.0 - 0.5 * a);
        dx = (dx * (1.0 + 0.5 * a) + hx) / (1.0 - 0.5 * a);
        eta = e;
    }
    FlowPoint { eta, d_y: dy, d_x1: dx }
}

/// `(η(t, x, y), D_yη(t, x, y))`; `t` must be a node of `grid`.
pub fn eta_flow(spec: &FlowSpec, t: f64, x: &[f64], y: f64, grid: &TimeGrid, b: &[f64]) -> Result<(f64, f64)> {
    let k = node_index(grid, b, t)?;
    let p = flow_at(spec, grid, b, k, x, y);
    Ok((p.eta, p.d_y))
}

/// The `y` with `η(t, x, y) = w`, to absolute tolerance `1e-10` or better.
pub fn eta_inverse(spec: &FlowSpec, t: f64, x: &[f64], w: f64, grid: &TimeGrid, b: &[f64]) -> Result<f64> {
    let k = node_index(grid, b, t)?;
    let n = grid.steps();
    if spec.h.is_zero() {
        return Ok(w);
    }
    if let (true, NoiseDriver::ExpBeta { beta }) = (spec.closed_form, spec.h) {
        return Ok(w * (-beta * (b[n] - b[k])).exp());
    }
    let res = |y: f64| flow_at(spec, grid, b, k, x, y).eta - w;
    scalar::monotone_root(res, w, 1e-13 * (1.0 + w.abs())).map_err(|_| Error::OutOfRange { value: w })
}

/// `(f̃, g̃)` at `(t, x, y)`:
///
/// ```text
/// f̃ = [f(t,x,η,0) − ½(h∂_yh)(t,x,η) + L_xη] / D_yη
/// g̃ = [g(t,x,η) − ⟨∇φ_d(x), D_xη⟩] / D_yη
/// ```
///
/// with `L_xη = ½ s²·Δ_xη + ⟨b(x), D_xη⟩` for `σ = s·I`.
pub fn transform_coefficients(
    spec: &FlowSpec,
    coeffs: &CoefficientSet,
    dom: &DomainSpec,
    t: f64,
    x: &[f64],
    y: f64,
    grid: &TimeGrid,
    b: &[f64],
) -> Result<(f64, f64)> {
    let k = node_index(grid, b, t)?;
    let d = x.len();
    let p = flow_at(spec, grid, b, k, x, y);

    let (mut lx, mut normal_term) = (0.0, 0.0);
    if p.d_x1 != 0.0 || !spec.h.is_x_free() {
        let mut xs = alloc::vec::Vec::from(x);
        let e = 1e-4 * (1.0 + x[0].abs());
        xs[0] = x[0] + e;
        let up = flow_at(spec, grid, b, k, &xs, y).d_x1;
        xs[0] = x[0] - e;
        let dn = flow_at(spec, grid, b, k, &xs, y).d_x1;
        let d_xx = (up - dn) / (2.0 * e);
        let s = coeffs.sigma.scale();
        let mut drift = alloc::vec![0.0; d];
        coeffs.b.eval_into(x, &mut drift);
        lx = 0.5 * s * s * d_xx + drift[0] * p.d_x1;
        let mut grad = alloc::vec![0.0; d];
        dom.geometry_into(x, &mut grad)?;
        normal_term = grad[0] * p.d_x1;
    }
    let zero = alloc::vec![0.0; d];
    let h = coeffs.h.eval(t, x, p.eta);
    let hy = coeffs.h.dy(t, x, p.eta);
    let f_t = (coeffs.f.eval(t, x, p.eta, &zero) - 0.5 * h * hy + lx) / p.d_y;
    let g_t = (coeffs.g.eval(t, x, p.eta) - normal_term) / p.d_y;
    Ok((f_t, g_t))
}
