//! Least-squares regression on polynomials of the forward state.
//!
//! Features are total-degree monomials of the state, centred and scaled by
//! the batch mean and standard deviation of each coordinate. Several targets
//! share one Gram matrix, so `Y` and the `d` components of `Z` cost a single
//! Cholesky factorisation per step.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::par;
use crate::scalar;
use crate::{Error, Result};

/// Relative pivot threshold below which the Gram matrix counts as singular.
const PIVOT_TOL: f64 = 1e-10;

/// A standardised monomial basis fitted to one batch of states.
#[derive(Debug, Clone)]
pub struct Basis {
    dim: usize,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    /// Exponent tuples, `terms × dim`, constant term first.
    exps: Vec<u32>,
    terms: usize,
}

impl Basis {
    /// Builds the basis for `states` (`M × dim`, row per path).
    ///
    /// Coordinates with zero spread are dropped; if none is left the basis
    /// is the constant alone.
    pub fn fit(states: &[f64], dim: usize, degree: usize) -> Basis {
        let m = states.len() / dim;
        let (mean, var) = moments(states, dim, m);
        let active: Vec<usize> = (0..dim).filter(|&j| var[j] > 1e-24 * (1.0 + mean[j] * mean[j])).collect();
        let inv_std = (0..dim).map(|j| if active.contains(&j) { 1.0 / var[j].sqrt() } else { 0.0 }).collect();
        let degree = if active.is_empty() { 0 } else { degree };
        let exps = monomials(dim, &active, degree);
        let terms = exps.len() / dim;
        Basis { dim, mean, inv_std, exps, terms }
    }

    /// The constant basis (sample mean).
    pub fn constant(dim: usize) -> Basis {
        Basis { dim, mean: vec![0.0; dim], inv_std: vec![0.0; dim], exps: vec![0; dim], terms: 1 }
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn degree(&self) -> usize {
        (0..self.terms)
            .map(|t| self.exps[t * self.dim..(t + 1) * self.dim].iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Writes the feature vector of `x` into `out` (length `terms`).
    #[inline]
    pub fn features(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        if self.terms == 1 {
            return;
        }
        for t in 1..self.terms {
            let e = &self.exps[t * self.dim..(t + 1) * self.dim];
            let mut v = 1.0;
            for j in 0..self.dim {
                if e[j] > 0 {
                    let s = (x[j] - self.mean[j]) * self.inv_std[j];
                    v *= s.powi(e[j] as i32);
                }
            }
            out[t] = v;
        }
    }
}

fn moments(states: &[f64], dim: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let chunks = par::n_chunks(m, par::CHUNK);
    let sums = par::map_chunks(chunks, |c| {
        let rows = &states[c * par::CHUNK * dim..((c + 1) * par::CHUNK).min(m) * dim];
        let mut s = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            s.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
        s
    });
    let mut mean = vec![0.0; dim];
    for s in &sums {
        mean.iter_mut().zip(s).for_each(|(a, b)| *a += b);
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let sq = par::map_chunks(chunks, |c| {
        let rows = &states[c * par::CHUNK * dim..((c + 1) * par::CHUNK).min(m) * dim];
        let mut s = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            for j in 0..dim {
                let d = r[j] - mean[j];
                s[j] += d * d;
            }
        }
        s
    });
    let mut var = vec![0.0; dim];
    for s in &sq {
        var.iter_mut().zip(s).for_each(|(a, b)| *a += b);
    }
    var.iter_mut().for_each(|a| *a /= m as f64);
    (mean, var)
}

/// Exponent tuples of total degree `≤ degree` in the `active` coordinates,
/// graded (degree 0 first), lexicographic within a degree.
fn monomials(dim: usize, active: &[usize], degree: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    for deg in 0..=degree {
        push_degree(active, 0, deg as u32, &mut cur, &mut out);
    }
    out
}

fn push_degree(active: &[usize], i: usize, left: u32, cur: &mut [u32], out: &mut Vec<u32>) {
    if i == active.len() {
        if left == 0 {
            out.extend_from_slice(cur);
        }
        return;
    }
    let j = active[i];
    for e in (0..=left).rev() {
        cur[j] = e;
        push_degree(active, i + 1, left - e, cur, out);
    }
    cur[j] = 0;
}

/// Gram matrix and right-hand sides accumulated over one batch.
#[derive(Debug, Clone)]
pub(crate) struct Normal {
    pub terms: usize,
    pub targets: usize,
    pub gram: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Normal {
    fn new(terms: usize, targets: usize) -> Self {
        Normal { terms, targets, gram: vec![0.0; terms * terms], rhs: vec![0.0; terms * targets] }
    }

    fn add(&mut self, other: &Normal) {
        self.gram.iter_mut().zip(&other.gram).for_each(|(a, b)| *a += b);
        self.rhs.iter_mut().zip(&other.rhs).for_each(|(a, b)| *a += b);
    }
}

/// Accumulates `Σ φφᵀ` and `Σ φ·target` over all paths, where
/// `target(m, out)` writes the `targets` target values of path `m`.
/// When `with_gram` is false only the right-hand sides are formed.
pub(crate) fn accumulate<T>(basis: &Basis, states: &[f64], targets: usize, with_gram: bool, target: T) -> Normal
where
    T: Fn(usize, &mut [f64]) + Sync + Send,
{
    let dim = basis.dim;
    let m = states.len() / dim;
    let p = basis.terms;
    let parts = par::map_chunks(par::n_chunks(m, par::CHUNK), |c| {
        let mut acc = Normal::new(p, targets);
        let mut phi = vec![0.0; p];
        let mut tv = vec![0.0; targets];
        for i in c * par::CHUNK..((c + 1) * par::CHUNK).min(m) {
            basis.features(&states[i * dim..(i + 1) * dim], &mut phi);
            target(i, &mut tv);
            if with_gram {
                for a in 0..p {
                    for b in 0..=a {
                        acc.gram[a * p + b] += phi[a] * phi[b];
                    }
                }
            }
            for a in 0..p {
                for (s, t) in tv.iter().enumerate() {
                    acc.rhs[a * targets + s] += phi[a] * t;
                }
            }
        }
        acc
    });
    let mut total = Normal::new(p, targets);
    for part in &parts {
        total.add(part);
    }
    if with_gram {
        for a in 0..p {
            for b in 0..a {
                total.gram[b * p + a] = total.gram[a * p + b];
            }
        }
    }
    total
}

/// Cholesky factor of a Gram matrix, or `None` when rank deficient.
pub(crate) fn factor(normal: &Normal) -> Option<Vec<f64>> {
    let mut l = normal.gram.clone();
    scalar::cholesky(&mut l, normal.terms, PIVOT_TOL)?;
    Some(l)
}

/// Coefficients `terms × targets` from a factored Gram matrix.
pub(crate) fn coefficients(chol: &[f64], normal: &Normal) -> Vec<f64> {
    let (p, s) = (normal.terms, normal.targets);
    let mut coef = vec![0.0; p * s];
    let mut col = vec![0.0; p];
    for t in 0..s {
        for a in 0..p {
            col[a] = normal.rhs[a * s + t];
        }
        scalar::cholesky_solve(chol, p, &mut col);
        for a in 0..p {
            coef[a * s + t] = col[a];
        }
    }
    coef
}

/// Evaluates target `t` of the fitted regression at feature vector `phi`.
#[inline]
pub(crate) fn predict(coef: &[f64], targets: usize, t: usize, phi: &[f64]) -> f64 {
    phi.iter().enumerate().map(|(a, v)| v * coef[a * targets + t]).sum()
}

/// Result of [`conditional_moments`].
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub y_tilde: Vec<f64>,
    /// `M × d`, row per path.
    pub z_hat: Vec<f64>,
    /// Number of basis terms actually used.
    pub terms: usize,
    /// True when the requested basis was rank deficient and the fit fell
    /// back to the sample mean.
    pub fallback: bool,
}

/// Regresses `samples_next` and `samples_next·ΔW/Δt` on polynomials of the
/// state up to `degree`.
pub fn conditional_moments(
    samples_next: &[f64],
    states: &[f64],
    dw: &[f64],
    dt: f64,
    dim: usize,
    degree: usize,
) -> Result<Moments> {
    let m = samples_next.len();
    if dim == 0 || states.len() != m * dim || dw.len() != m * dim || m == 0 {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} samples, {} state entries and {} increments for dimension {dim}",
            m,
            states.len(),
            dw.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::bad("dt must be positive"));
    }
    let targets = 1 + dim;
    let target = |i: usize, out: &mut [f64]| {
        let s = samples_next[i];
        out[0] = s;
        for j in 0..dim {
            out[1 + j] = s * dw[i * dim + j] / dt;
        }
    };
    let mut basis = Basis::fit(states, dim, degree);
    let mut fallback = false;
    if basis.terms() > m {
        basis = Basis::constant(dim);
        fallback = true;
    }
    let mut normal = accumulate(&basis, states, targets, true, target);
    let chol = match factor(&normal) {
        Some(l) => l,
        None => {
            fallback = true;
            basis = Basis::constant(dim);
            normal = accumulate(&basis, states, targets, true, target);
            factor(&normal).ok_or(Error::SingularRegression { terms: 1 })?
        }
    };
    let coef = coefficients(&chol, &normal);
    let p = basis.terms();
    let mut y_tilde = vec![0.0; m];
    let mut z_hat = vec![0.0; m * dim];
    let mut phi = vec![0.0; p];
    for i in 0..m {
        basis.features(&states[i * dim..(i + 1) * dim], &mut phi);
        y_tilde[i] = predict(&coef, targets, 0, &phi);
        for j in 0..dim {
            z_hat[i * dim + j] = predict(&coef, targets, 1 + j, &phi);
        }
    }
    Ok(Moments { y_tilde, z_hat, terms: p, fallback })
}
