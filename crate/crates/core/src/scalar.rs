//! Small scalar numerics shared by the solver modules: monotone root finding,
//! adaptive quadrature, dense Cholesky, tridiagonal solves and slope fits.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Finds the root of a nondecreasing function `f` starting from a guess.
///
/// The bracket is grown geometrically from `x0` until the sign changes, then
/// refined by Illinois-modified regula falsi with a bisection safeguard. The
/// iteration stops when the bracket width is below `xtol` or `f` hits zero.
pub fn monotone_root<F>(f: F, x0: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f0 = f(x0);
    if f0 == 0.0 {
        return Ok(x0);
    }
    if !f0.is_finite() {
        return Err(Error::RootFindFailure(alloc::format!("non-finite residual {f0} at starting point {x0}")));
    }
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = 1.0_f64.max(x0.abs() * 1e-3);
    let (mut a, mut fa) = (x0, f0);
    let (mut b, mut fb);
    let mut grown = 0;
    loop {
        b = x0 + dir * step;
        fb = f(b);
        if fb == 0.0 {
            return Ok(b);
        }
        if fb.signum() != f0.signum() {
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
        grown += 1;
        if grown > 1100 || !b.is_finite() {
            return Err(Error::RootFindFailure(alloc::format!("no sign change found from {x0}")));
        }
    }
    bracketed_root(f, a, fa, b, fb, xtol)
}

/// Regula falsi (Illinois) on a bracket `[a, b]` with `fa`, `fb` of opposite sign.
pub fn bracketed_root<F>(f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if fa.signum() == fb.signum() {
        return Err(Error::RootFindFailure(alloc::format!("interval [{a}, {b}] does not bracket a root")));
    }
    let mut side = 0i8;
    for it in 0..400 {
        if (b - a).abs() <= xtol {
            break;
        }
        // every fourth iterate is a plain bisection to guarantee progress
        let mut c = if it % 4 == 3 { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        if c == a || c == b {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure(alloc::format!("non-finite integral on [{a}, {b}]")))
    }
}

fn simpson_rec<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::QuadratureFailure(alloc::format!("integrand not finite near {m}")));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// In-place Cholesky factorisation of a symmetric positive definite matrix
/// stored row-major in `a` (`n × n`). Returns `None` when a pivot falls below
/// `rel_tol` times the largest diagonal entry.
pub fn cholesky(a: &mut [f64], n: usize, rel_tol: f64) -> Option<()> {
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return None;
    }
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > rel_tol * max_diag) {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Some(())
}

/// Solves `L Lᵀ x = b` given the factor produced by [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Thomas algorithm for a tridiagonal system. `lower[0]` and `upper[n-1]`
/// are ignored. The right-hand side is overwritten with the solution.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = Vec::with_capacity(n);
    let mut beta = diag[0];
    c.push(upper[0] / beta);
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c.push(if i + 1 < n { upper[i] / beta } else { 0.0 });
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope of `ln y` against `ln x`, skipping pairs with nonpositive entries.
/// Returns `None` when fewer than two usable pairs remain.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    if lx.len() < 2 {
        return None;
    }
    Some(ls_slope(&lx, &ly))
}
