//! Reflected Euler scheme for `dX = b(X)dt + σ(X)dW + ∇φ_d(X)dA`.
//!
//! Each step takes an explicit Euler candidate and projects it back onto
//! `Θ̄`; the projection distance is the local-time increment.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coeffs::CoefficientSet;
use crate::domain::{DomainSpec, TOL_PROJ};
use crate::noise::{GaussianStream, PathBundle, TimeGrid};
use crate::par;
use crate::{Error, Result};

/// Simulated states and local-time increments of `M` paths.
///
/// Storage is time-major: `X` at `(k·M + m)·d + j`, `ΔA` at `k·M + m`.
#[derive(Debug, Clone)]
pub struct ForwardBatch {
    grid: TimeGrid,
    paths: usize,
    dim: usize,
    start: usize,
    x: Vec<f64>,
    da: Vec<f64>,
}

impl ForwardBatch {
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

    /// States of all paths at node `k` (`M × d`).
    #[inline]
    pub fn x_step(&self, k: usize) -> &[f64] {
        let w = self.paths * self.dim;
        &self.x[k * w..(k + 1) * w]
    }

    #[inline]
    pub fn x(&self, k: usize, m: usize) -> &[f64] {
        let o = (k * self.paths + m) * self.dim;
        &self.x[o..o + self.dim]
    }

    /// `ΔA_k = A_{k+1} − A_k` of all paths.
    #[inline]
    pub fn da_step(&self, k: usize) -> &[f64] {
        &self.da[k * self.paths..(k + 1) * self.paths]
    }

    #[inline]
    pub fn da(&self, k: usize, m: usize) -> f64 {
        self.da[k * self.paths + m]
    }

    /// `A_T` of path `m`.
    pub fn a_terminal(&self, m: usize) -> f64 {
        (0..self.grid.steps()).map(|k| self.da(k, m)).sum()
    }

    /// Path `m` as a standalone trajectory.
    pub fn trajectory(&self, m: usize) -> ForwardTrajectory {
        let n = self.grid.steps();
        let mut x = Vec::with_capacity((n + 1) * self.dim);
        let mut a = Vec::with_capacity(n + 1);
        let mut contact = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        a.push(0.0);
        contact.push(false);
        x.extend_from_slice(self.x(0, m));
        for k in 0..n {
            let d = self.da(k, m);
            acc += d;
            a.push(acc);
            contact.push(d > 0.0);
            x.extend_from_slice(self.x(k + 1, m));
        }
        ForwardTrajectory { dim: self.dim, x, a, contact }
    }
}

/// One reflected path: states, cumulative local time and contact flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrajectory {
    pub dim: usize,
    /// `(N+1) × d`.
    pub x: Vec<f64>,
    /// `A[0] = 0`, nondecreasing.
    pub a: Vec<f64>,
    /// `contact[k]` is true when the step into node `k` was projected.
    pub contact: Vec<bool>,
}

impl ForwardTrajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }
}

fn check_start(dom: &DomainSpec, coeffs: &CoefficientSet, x0: &[f64], grid: &TimeGrid, start: usize) -> Result<()> {
    dom.validate()?;
    if x0.len() != dom.dim() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "start point has {} coordinates, domain has dimension {}",
            x0.len(),
            dom.dim()
        )));
    }
    coeffs.validate(dom.dim())?;
    if !dom.contains_closure(x0) {
        return Err(Error::bad(alloc::format!("start point lies outside the closed domain (phi_d = {})", dom.phi(x0))));
    }
    if start > grid.steps() {
        return Err(Error::bad(alloc::format!("start index {start} beyond the last node {}", grid.steps())));
    }
    Ok(())
}

/// One explicit Euler step with projection; returns `ΔA`.
#[inline]
fn euler_step(
    dom: &DomainSpec,
    coeffs: &CoefficientSet,
    dt: f64,
    x: &[f64],
    dw: &[f64],
    out: &mut [f64],
    drift: &mut [f64],
    noise: &mut [f64],
) -> Result<f64> {
    coeffs.b.eval_into(x, drift);
    coeffs.sigma.apply_into(x, dw, noise);
    for j in 0..x.len() {
        out[j] = x[j] + drift[j] * dt + noise[j];
    }
    dom.reflect_in_place(out)
}

/// Simulates all paths of `bundle` from `x0`, frozen at `x0` up to node
/// `start_index`.
pub fn simulate_forward(
    dom: &DomainSpec,
    coeffs: &CoefficientSet,
    x0: &[f64],
    bundle: &PathBundle,
    start_index: usize,
) -> Result<ForwardBatch> {
    let grid = *bundle.grid();
    check_start(dom, coeffs, x0, &grid, start_index)?;
    let d = dom.dim();
    if bundle.dim() != d {
        return Err(Error::ShapeMismatch(alloc::format!(
            "noise dimension {} differs from domain dimension {d}",
            bundle.dim()
        )));
    }
    let m = bundle.paths();
    let n = grid.steps();
    let dt = grid.dt();
    let w = m * d;
    let mut x = vec![0.0; (n + 1) * w];
    let da = vec![0.0; n * m];
    for k in 0..=start_index {
        for row in x[k * w..(k + 1) * w].chunks_exact_mut(d) {
            row.copy_from_slice(x0);
        }
    }
    let mut da = da;
    let mut failure: Option<Error> = None;
    for k in start_index..n {
        let (done, rest) = x.split_at_mut((k + 1) * w);
        let prev = &done[k * w..];
        let next = &mut rest[..w];
        let dw = bundle.dw_step(k);
        let da_k = &mut da[k * m..(k + 1) * m];
        let errs = step_rows(dom, coeffs, dt, d, prev, dw, next, da_k);
        if let Some(e) = errs {
            failure = Some(e);
            break;
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ForwardBatch { grid, paths: m, dim: d, start: start_index, x, da })
}

/// Advances every row by one step; chunks of rows run in parallel.
fn step_rows(
    dom: &DomainSpec,
    coeffs: &CoefficientSet,
    dt: f64,
    d: usize,
    prev: &[f64],
    dw: &[f64],
    next: &mut [f64],
    da: &mut [f64],
) -> Option<Error> {
    let m = da.len();
    let chunk = par::CHUNK;
    // pair each chunk of next-states with its chunk of ΔA
    let mut slots: Vec<(&mut [f64], &mut [f64])> = next.chunks_mut(chunk * d).zip(da.chunks_mut(chunk)).collect();
    let errors = par::map_slots(&mut slots, |c, (xs, das)| {
        let mut drift = vec![0.0; d];
        let mut noise = vec![0.0; d];
        let base = c * chunk;
        for i in 0..das.len() {
            let mm = base + i;
            let src = &prev[mm * d..(mm + 1) * d];
            let w = &dw[mm * d..(mm + 1) * d];
            match euler_step(dom, coeffs, dt, src, w, &mut xs[i * d..(i + 1) * d], &mut drift, &mut noise) {
                Ok(v) => das[i] = v,
                Err(e) => return Some(e),
            }
        }
        None
    });
    debug_assert!(m == 0 || !errors.is_empty());
    errors.into_iter().flatten().next()
}

/// Path-streamed summary of the forward process; no storage of the paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSummary {
    pub paths: usize,
    pub mean_a_terminal: f64,
    pub std_err_a_terminal: f64,
    /// Mean of the first coordinate of `X_T`.
    pub mean_x1_terminal: f64,
    /// Smallest `φ_d` over all paths and nodes.
    pub min_phi: f64,
    /// Node states with `φ_d < −TOL_PROJ`.
    pub containment_violations: usize,
    /// Path-nodes where `A` decreased or moved without contact.
    pub local_time_violations: usize,
    /// Per-node means of `X¹` and `A`, nodes `0..=N`.
    pub node_mean_x1: Vec<f64>,
    pub node_mean_a: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    sum_a: f64,
    sum_a2: f64,
    sum_x1: f64,
    min_phi: f64,
    bad_phi: usize,
    bad_a: usize,
    node_x1: Vec<f64>,
    node_a: Vec<f64>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Partial { min_phi: f64::INFINITY, node_x1: vec![0.0; n + 1], node_a: vec![0.0; n + 1], ..Default::default() }
    }
}

/// Simulates `paths` trajectories one at a time from their own noise
/// streams (the same increments [`crate::noise::sample_noise`] would draw)
/// and reduces them to a [`ForwardSummary`].
pub fn forward_summary(
    dom: &DomainSpec,
    coeffs: &CoefficientSet,
    x0: &[f64],
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<ForwardSummary> {
    check_start(dom, coeffs, x0, grid, 0)?;
    if paths < 1 {
        return Err(Error::bad("need at least one path"));
    }
    let d = dom.dim();
    let n = grid.steps();
    let dt = grid.dt();
    let sq = dt.sqrt();
    let parts = par::map_chunks(par::n_chunks(paths, par::CHUNK), |c| -> Result<Partial> {
        let mut p = Partial::new(n);
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut dw = vec![0.0; d];
        let mut drift = vec![0.0; d];
        let mut noise = vec![0.0; d];
        for m in c * par::CHUNK..((c + 1) * par::CHUNK).min(paths) {
            let mut g = GaussianStream::forward_path(seed, m);
            x.copy_from_slice(x0);
            let mut a = 0.0;
            p.node_x1[0] += x[0];
            for k in 0..n {
                for v in dw.iter_mut() {
                    *v = sq * g.next_normal();
                }
                let da = euler_step(dom, coeffs, dt, &x, &dw, &mut y, &mut drift, &mut noise)?;
                if !(da >= 0.0) {
                    p.bad_a += 1;
                }
                a += da;
                let phi = dom.phi(&y);
                p.min_phi = p.min_phi.min(phi);
                if phi < -TOL_PROJ {
                    p.bad_phi += 1;
                }
                core::mem::swap(&mut x, &mut y);
                p.node_x1[k + 1] += x[0];
                p.node_a[k + 1] += a;
            }
            p.sum_a += a;
            p.sum_a2 += a * a;
            p.sum_x1 += x[0];
        }
        Ok(p)
    });
    let mut t = Partial::new(n);
    for p in parts {
        let p = p?;
        for (acc, v) in t.node_x1.iter_mut().zip(&p.node_x1) {
            *acc += v;
        }
        for (acc, v) in t.node_a.iter_mut().zip(&p.node_a) {
            *acc += v;
        }
        t.sum_a += p.sum_a;
        t.sum_a2 += p.sum_a2;
        t.sum_x1 += p.sum_x1;
        t.min_phi = t.min_phi.min(p.min_phi);
        t.bad_phi += p.bad_phi;
        t.bad_a += p.bad_a;
    }
    let mf = paths as f64;
    let mean = t.sum_a / mf;
    let var = if paths > 1 { (t.sum_a2 - mf * mean * mean).max(0.0) / (mf - 1.0) } else { 0.0 };
    Ok(ForwardSummary {
        paths,
        mean_a_terminal: mean,
        std_err_a_terminal: (var / mf).sqrt(),
        mean_x1_terminal: t.sum_x1 / mf,
        min_phi: t.min_phi.min(dom.phi(x0)),
        containment_violations: t.bad_phi,
        local_time_violations: t.bad_a,
        node_mean_x1: t.node_x1.iter().map(|v| v / mf).collect(),
        node_mean_a: t.node_a.iter().map(|v| v / mf).collect(),
    })
}
