//! Time grids and seeded Brownian noise.
//!
//! Every forward path `m` draws from its own ChaCha8 stream (`stream = m + 1`
//! under the forward seed); the backward path `B` uses stream 0 under the
//! scenario seed. Gaussians come from the Marsaglia polar method, consuming
//! uniforms in pairs and emitting both normals of an accepted pair in order.
//! Together these fix the bit-level reproducibility contract: path `m`
//! depends only on `(seed, m)`, never on the batch size or the schedule.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::par;
use crate::{Error, Result};

/// Uniform grid `t_k = t0 + k·(T − t0)/N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, steps: usize) -> Result<Self> {
        if steps < 1 {
            return Err(Error::bad("time grid needs at least one step"));
        }
        if !(t0.is_finite() && t_end.is_finite()) || t0 < 0.0 || t0 >= t_end {
            return Err(Error::bad(alloc::format!("time grid needs 0 <= t0 < T, got t0={t0}, T={t_end}")));
        }
        Ok(TimeGrid { t0, t_end, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.steps as f64
    }

    /// Node `k`; the last node is `T` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    /// Index of the node equal to `t` (within `1e-9·(T − t0)`), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        if (self.node(k) - t).abs() <= 1e-9 * (self.t_end - self.t0) {
            Some(k)
        } else {
            None
        }
    }
}

pub fn make_time_grid(t0: f64, t_end: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(t0, t_end, steps)
}

/// Standard normal stream backed by one ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        GaussianStream { rng, spare: None }
    }

    /// Stream of forward path `m` under `seed`.
    pub fn forward_path(seed: u64, m: usize) -> Self {
        Self::new(seed, m as u64 + 1)
    }

    /// Stream of the backward driver under `seed`.
    pub fn backward(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    fn uniform_pm1(&mut self) -> f64 {
        2.0 * self.next_uniform() - 1.0
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.uniform_pm1();
            let v = self.uniform_pm1();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Forward increments `ΔW` for `M` paths plus one backward path `B`.
///
/// `dW` is stored time-major: entry `(k, m, j)` lives at `(k·M + m)·d + j`.
#[derive(Debug, Clone)]
pub struct PathBundle {
    grid: TimeGrid,
    paths: usize,
    dim: usize,
    forward_seed: u64,
    scenario_seed: u64,
    dw: Vec<f64>,
    b: Vec<f64>,
}

impl PathBundle {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward_seed(&self) -> u64 {
        self.forward_seed
    }

    pub fn scenario_seed(&self) -> u64 {
        self.scenario_seed
    }

    /// `ΔW_k` of path `m`.
    #[inline]
    pub fn dw(&self, k: usize, m: usize) -> &[f64] {
        let o = (k * self.paths + m) * self.dim;
        &self.dw[o..o + self.dim]
    }

    /// All `ΔW_k` for step `k`, path-major within the step.
    #[inline]
    pub fn dw_step(&self, k: usize) -> &[f64] {
        let o = k * self.paths * self.dim;
        &self.dw[o..o + self.paths * self.dim]
    }

    /// Backward path values `B[0..=N]`, `B[0] = 0`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `ΔB_k = B[k+1] − B[k]`.
    #[inline]
    pub fn db(&self, k: usize) -> f64 {
        self.b[k + 1] - self.b[k]
    }

    /// Replaces the backward path, e.g. with a stored test path.
    pub fn with_backward_path(mut self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.grid.steps() + 1 {
            return Err(Error::ShapeMismatch(alloc::format!(
                "backward path has {} nodes, grid has {}",
                b.len(),
                self.grid.steps() + 1
            )));
        }
        if b[0] != 0.0 {
            return Err(Error::bad("backward path must start at 0"));
        }
        self.b = b;
        Ok(self)
    }
}

/// Samples `M` forward paths and one backward path, all from `seed`.
pub fn sample_noise(grid: &TimeGrid, paths: usize, dim: usize, seed: u64) -> Result<PathBundle> {
    sample_noise_split(grid, paths, dim, seed, seed)
}

/// As [`sample_noise`] with separate seeds for `W` and the scenario `B`.
pub fn sample_noise_split(
    grid: &TimeGrid,
    paths: usize,
    dim: usize,
    forward_seed: u64,
    scenario_seed: u64,
) -> Result<PathBundle> {
    if paths < 1 || dim < 1 {
        return Err(Error::bad(alloc::format!("need at least one path and one dimension, got M={paths}, d={dim}")));
    }
    let n = grid.steps();
    let sq = grid.dt().sqrt();
    let mut dw = vec![0.0; n * paths * dim];

    // Paths are generated chunk by chunk (path-major scratch) and scattered
    // into the time-major layout.
    const BATCH: usize = 8;
    let chunks = par::n_chunks(paths, par::CHUNK);
    let mut c0 = 0;
    while c0 < chunks {
        let c1 = (c0 + BATCH).min(chunks);
        let scratch = par::map_chunks(c1 - c0, |ci| {
            let m0 = (c0 + ci) * par::CHUNK;
            let m1 = (m0 + par::CHUNK).min(paths);
            let mut buf = Vec::with_capacity((m1 - m0) * n * dim);
            for m in m0..m1 {
                let mut g = GaussianStream::forward_path(forward_seed, m);
                for _ in 0..n * dim {
                    buf.push(sq * g.next_normal());
                }
            }
            (m0, m1, buf)
        });
        for (m0, m1, buf) in scratch {
            for (i, m) in (m0..m1).enumerate() {
                let src = &buf[i * n * dim..(i + 1) * n * dim];
                for k in 0..n {
                    let o = (k * paths + m) * dim;
                    dw[o..o + dim].copy_from_slice(&src[k * dim..(k + 1) * dim]);
                }
            }
        }
        c0 = c1;
    }

    Ok(PathBundle { grid: *grid, paths, dim, forward_seed, scenario_seed, dw, b: backward_path(grid, scenario_seed) })
}

/// The scenario path `B` for `seed`: `B[0] = 0` and i.i.d. `N(0, Δt)` steps.
pub fn backward_path(grid: &TimeGrid, seed: u64) -> Vec<f64> {
    let sq = grid.dt().sqrt();
    let mut g = GaussianStream::backward(seed);
    let mut b = Vec::with_capacity(grid.steps() + 1);
    b.push(0.0);
    let mut acc = 0.0;
    for _ in 0..grid.steps() {
        acc += sq * g.next_normal();
        b.push(acc);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = make_time_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(make_time_grid(0.0, 1.0, 1).unwrap().nodes(), vec![0.0, 1.0]);
        assert!(matches!(make_time_grid(0.0, 1.0, 0), Err(Error::BadParameter(_))));
        assert!(matches!(make_time_grid(1.0, 1.0, 3), Err(Error::BadParameter(_))));
        let g = make_time_grid(0.1, 0.7, 3).unwrap();
        assert_eq!(g.node(3), 0.7);
        assert_eq!(g.index_of(0.3), Some(1));
        assert_eq!(g.index_of(0.35), None);
    }

    #[test]
    fn bundle_is_deterministic() {
        let g = make_time_grid(0.0, 1.0, 10).unwrap();
        let a = sample_noise(&g, 50, 2, 7).unwrap();
        let b = sample_noise(&g, 50, 2, 7).unwrap();
        assert_eq!(a.dw, b.dw);
        assert_eq!(a.b, b.b);
        assert_eq!(a.b()[0], 0.0);
        assert_eq!(a.b().len(), 11);
        assert!(sample_noise(&g, 0, 1, 7).is_err());
        assert!(sample_noise(&g, 3, 0, 7).is_err());
    }

    #[test]
    fn path_independent_of_batch_size() {
        let g = make_time_grid(0.0, 1.0, 6).unwrap();
        let small = sample_noise(&g, 3, 1, 11).unwrap();
        let large = sample_noise(&g, 5000, 1, 11).unwrap();
        for k in 0..6 {
            for m in 0..3 {
                assert_eq!(small.dw(k, m), large.dw(k, m));
            }
        }
    }

    #[test]
    fn increment_moments() {
        // N = 1, M = 1e5: mean within 4σ of 0 and variance within 4σ of Δt
        let g = make_time_grid(0.0, 1.0, 1).unwrap();
        let m = 100_000;
        let b = sample_noise(&g, m, 1, 2024).unwrap();
        let xs = b.dw_step(0);
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m as f64 - 1.0);
        assert!(mean.abs() < 4.0 / (m as f64).sqrt());
        // Var of the sample variance of N(0,1) is 2/M
        assert!((var - 1.0).abs() < 4.0 * (2.0 / m as f64).sqrt());
    }
}
