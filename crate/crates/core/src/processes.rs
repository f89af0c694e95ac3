//! Path ensembles on uniform time grids, exact Ornstein-Uhlenbeck sampling,
//! and Brownian increment blocks.
//!
//! Reproducibility contract: path `m` of any generator is a pure function of
//! `(seed_root, m, generator_id)`, so ensembles are bit-identical across
//! thread counts and across runs that only change the number of paths (a
//! prefix of a larger ensemble equals the smaller one). All cross-path
//! reductions must go through [`blockwise_reduce`], which fixes the fold
//! order regardless of how rayon schedules the blocks.
//!
//! The OU generator uses the exact transition kernel rather than any Euler
//! discretization: starting from the stationary law `N(0, sigma^2)`,
//!
//! ```text
//! x_{j+1} = e^{-alpha h} x_j + sigma sqrt(1 - e^{-2 alpha h}) xi_j
//! ```
//!
//! which has the stationary marginals and covariance
//! `cov(X_t, X_{t+tau}) = sigma^2 e^{-alpha |tau|}` at every step size.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const OU_GENERATOR_ID: &str = "ou-exact-v1";
const BM_GENERATOR_ID: &str = "bm-v1";

/// Fixed block size of the deterministic cross-path reduction.
pub const REDUCTION_BLOCK: usize = 256;

/// Refuse to allocate ensembles beyond this size; large studies must stream.
pub const MAX_ENSEMBLE_BYTES: usize = 2_000_000_000;

/// Uniform grid `t_j = t0 + j * step`, `j = 0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub step: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, step: f64, steps: usize) -> Result<Self> {
        let g = TimeGrid { t0, step, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() || !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidArgument("grid needs finite t0 and step > 0".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        Ok(())
    }

    /// Number of grid points, `steps + 1`.
    pub fn points(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.step
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }

    /// Index of a grid-aligned time, within 1e-9 absolute tolerance.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = ((t - self.t0) / self.step).round();
        if !((self.t0 + k * self.step - t).abs() <= 1e-9) {
            return Err(Error::OutOfRange { t });
        }
        if k < 0.0 || k > self.steps as f64 {
            return Err(Error::OutOfRange { t });
        }
        Ok(k as usize)
    }
}

/// Dense ensemble, row-major `[path][time][coordinate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub dim: usize,
    pub paths: usize,
    pub seed_root: u64,
    pub generator_id: String,
    pub data: Vec<f64>,
}

impl PathEnsemble {
    pub fn value(&self, m: usize, j: usize, c: usize) -> f64 {
        self.data[(m * self.grid.points() + j) * self.dim + c]
    }

    /// All samples of path `m`, length `points * dim`.
    pub fn path(&self, m: usize) -> &[f64] {
        let stride = self.grid.points() * self.dim;
        &self.data[m * stride..(m + 1) * stride]
    }

    /// State vector of path `m` at grid index `j`.
    pub fn state(&self, m: usize, j: usize) -> &[f64] {
        let base = (m * self.grid.points() + j) * self.dim;
        &self.data[base..base + self.dim]
    }

    fn same_shape(&self, other: &PathEnsemble) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("time grids differ".into()));
        }
        if self.dim != other.dim || self.paths != other.paths {
            return Err(Error::DimensionMismatch(format!(
                "shape {}x{} vs {}x{}",
                self.paths, self.dim, other.paths, other.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_alloc(paths: usize, points: usize, dim: usize) -> Result<()> {
    if paths == 0 || dim == 0 {
        return Err(Error::InvalidArgument("need at least one path and one coordinate".into()));
    }
    let bytes = paths
        .checked_mul(points)
        .and_then(|v| v.checked_mul(dim))
        .and_then(|v| v.checked_mul(8));
    match bytes {
        Some(b) if b <= MAX_ENSEMBLE_BYTES => Ok(()),
        _ => Err(Error::InvalidArgument(format!(
            "ensemble of {paths} paths x {points} points x {dim} coords exceeds the \
             {MAX_ENSEMBLE_BYTES}-byte cap; use a streaming reduction instead"
        ))),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument("ou alpha must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument("ou sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Stationary covariance `sigma^2 e^{-alpha |tau|}`.
pub fn ou_covariance(p: &OuParams, tau: f64) -> f64 {
    p.sigma * p.sigma * (-p.alpha * tau.abs()).exp()
}

/// Exact-in-law OU ensemble started from the stationary marginal.
pub fn simulate_ou(
    p: &OuParams,
    grid: &TimeGrid,
    paths: usize,
    seed_root: u64,
) -> Result<PathEnsemble> {
    p.validate()?;
    grid.validate()?;
    check_alloc(paths, grid.points(), 1)?;
    let points = grid.points();
    let decay = (-p.alpha * grid.step).exp();
    let innov = p.sigma * (1.0 - decay * decay).sqrt();
    let mut data = vec![0.0f64; paths * points];
    data.par_chunks_mut(points).enumerate().for_each(|(m, chunk)| {
        let mut rng = CounterRng::from_parts(seed_root, m as u64, OU_GENERATOR_ID);
        let mut x = p.sigma * rng.normal();
        chunk[0] = x;
        for slot in chunk.iter_mut().skip(1) {
            x = decay * x + innov * rng.normal();
            *slot = x;
        }
    });
    Ok(PathEnsemble {
        grid: grid.clone(),
        dim: 1,
        paths,
        seed_root,
        generator_id: OU_GENERATOR_ID.into(),
        data,
    })
}

/// Brownian increments over the grid cells, row-major `[path][cell][coord]`;
/// coordinate `c` has variance `trace_split[c] * step` per cell.
#[derive(Debug, Clone)]
pub struct BrownianBlock {
    pub grid: TimeGrid,
    pub dim_noise: usize,
    pub paths: usize,
    pub data: Vec<f64>,
}

impl BrownianBlock {
    /// Increment of coordinate `c` over `[t_j, t_{j+1}]`, `j < steps`.
    pub fn increment(&self, m: usize, j: usize, c: usize) -> f64 {
        self.data[(m * self.grid.steps + j) * self.dim_noise + c]
    }

    pub fn path(&self, m: usize) -> &[f64] {
        let stride = self.grid.steps * self.dim_noise;
        &self.data[m * stride..(m + 1) * stride]
    }
}

pub fn brownian_increments(
    grid: &TimeGrid,
    paths: usize,
    trace_split: &[f64],
    seed_root: u64,
) -> Result<BrownianBlock> {
    grid.validate()?;
    if trace_split.is_empty() {
        return Err(Error::InvalidArgument("noise needs at least one coordinate".into()));
    }
    if trace_split.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::InvalidArgument("per-coordinate variances must be >= 0".into()));
    }
    let dim = trace_split.len();
    check_alloc(paths, grid.steps, dim)?;
    let scale: Vec<f64> = trace_split.iter().map(|q| (q * grid.step).sqrt()).collect();
    let stride = grid.steps * dim;
    let mut data = vec![0.0f64; paths * stride];
    data.par_chunks_mut(stride).enumerate().for_each(|(m, chunk)| {
        let mut rng = CounterRng::from_parts(seed_root, m as u64, BM_GENERATOR_ID);
        for j in 0..grid.steps {
            for (c, s) in scale.iter().enumerate() {
                chunk[j * dim + c] = s * rng.normal();
            }
        }
    });
    Ok(BrownianBlock { grid: grid.clone(), dim_noise: dim, paths, data })
}

/// Time translate `Y(t) = X(t + tau)` for a grid-aligned `tau = k * step`.
/// The overlap shrinks by `|k|` steps; for `k >= 0` the output keeps the
/// input's `t0` and drops the head, for `k < 0` it starts `|k|` steps later
/// in label while reusing the leading samples.
pub fn translate(x: &PathEnsemble, tau: f64) -> Result<PathEnsemble> {
    let k = (tau / x.grid.step).round();
    if !((k * x.grid.step - tau).abs() <= 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "translate offset {tau} is not a multiple of the grid step {}",
            x.grid.step
        )));
    }
    let k = k as i64;
    let drop = k.unsigned_abs() as usize;
    if drop > x.grid.steps {
        return Err(Error::OutOfRange { t: tau });
    }
    let steps = x.grid.steps - drop;
    let t0 = if k >= 0 { x.grid.t0 } else { x.grid.t0 - k as f64 * x.grid.step };
    let grid = TimeGrid { t0, step: x.grid.step, steps };
    let points = grid.points();
    let src_points = x.grid.points();
    let src_offset = if k >= 0 { drop } else { 0 };
    let mut data = vec![0.0f64; x.paths * points * x.dim];
    for m in 0..x.paths {
        let src = &x.data[(m * src_points + src_offset) * x.dim..];
        let dst = &mut data[m * points * x.dim..(m + 1) * points * x.dim];
        dst.copy_from_slice(&src[..points * x.dim]);
    }
    Ok(PathEnsemble {
        grid,
        dim: x.dim,
        paths: x.paths,
        seed_root: x.seed_root,
        generator_id: format!("translate({},{tau})", x.generator_id),
        data,
    })
}

/// Pointwise sum of two shape-identical ensembles (paths are paired by
/// index, so summing processes driven by the same seed couples them).
pub fn sum_process(x: &PathEnsemble, y: &PathEnsemble) -> Result<PathEnsemble> {
    x.same_shape(y)?;
    let data = x.data.iter().zip(&y.data).map(|(a, b)| a + b).collect();
    Ok(PathEnsemble {
        grid: x.grid.clone(),
        dim: x.dim,
        paths: x.paths,
        seed_root: x.seed_root,
        generator_id: format!("sum({},{})", x.generator_id, y.generator_id),
        data,
    })
}

/// `Z(t) = X(t) + X(t_ref)` pathwise: adds each path's state at the anchor
/// time to the whole path.
pub fn broadcast_value(x: &PathEnsemble, t_ref: f64) -> Result<PathEnsemble> {
    let j_ref = x.grid.index_of(t_ref)?;
    let points = x.grid.points();
    let mut data = x.data.clone();
    for m in 0..x.paths {
        let base = m * points * x.dim;
        let anchor: Vec<f64> = x.state(m, j_ref).to_vec();
        for j in 0..points {
            for c in 0..x.dim {
                data[base + j * x.dim + c] += anchor[c];
            }
        }
    }
    Ok(PathEnsemble {
        grid: x.grid.clone(),
        dim: x.dim,
        paths: x.paths,
        seed_root: x.seed_root,
        generator_id: format!("broadcast({},{t_ref})", x.generator_id),
        data,
    })
}

/// Pathwise map `y(t) = f(t, x(t))` with output dimension `dim_out`; `f`
/// writes into the provided output slice.
pub fn map_ensemble(
    x: &PathEnsemble,
    dim_out: usize,
    f: impl Fn(f64, &[f64], &mut [f64]) + Sync,
) -> Result<PathEnsemble> {
    if dim_out == 0 {
        return Err(Error::InvalidArgument("map needs dim_out >= 1".into()));
    }
    let points = x.grid.points();
    check_alloc(x.paths, points, dim_out)?;
    let stride_out = points * dim_out;
    let mut data = vec![0.0f64; x.paths * stride_out];
    data.par_chunks_mut(stride_out).enumerate().for_each(|(m, chunk)| {
        for j in 0..points {
            let t = x.grid.time(j);
            f(t, x.state(m, j), &mut chunk[j * dim_out..(j + 1) * dim_out]);
        }
    });
    Ok(PathEnsemble {
        grid: x.grid.clone(),
        dim: dim_out,
        paths: x.paths,
        seed_root: x.seed_root,
        generator_id: format!("map({})", x.generator_id),
        data,
    })
}

/// Deterministic cross-path reduction: per-path values are folded inside
/// fixed 256-path blocks in path order, block partials may be computed in
/// parallel, and the partials are folded sequentially in block order. The
/// result is bitwise independent of the rayon thread count.
pub fn blockwise_reduce<T: Clone + Send + Sync>(
    n_paths: usize,
    zero: T,
    per_path: impl Fn(usize) -> T + Sync,
    fold: impl Fn(T, T) -> T + Send + Sync,
) -> T {
    let n_blocks = n_paths.div_ceil(REDUCTION_BLOCK);
    let partials: Vec<T> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = ((b + 1) * REDUCTION_BLOCK).min(n_paths);
            let mut acc = zero.clone();
            for m in lo..hi {
                acc = fold(acc, per_path(m));
            }
            acc
        })
        .collect();
    partials.into_iter().fold(zero, |a, b| fold(a, b))
}

const SAVE_MAGIC: &[u8; 8] = b"ERGOPATH";
const SAVE_VERSION: u32 = 1;

/// Binary snapshot of an ensemble (little-endian, versioned header).
pub fn save_ensemble(x: &PathEnsemble, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(SAVE_MAGIC)?;
    w.write_all(&SAVE_VERSION.to_le_bytes())?;
    w.write_all(&x.seed_root.to_le_bytes())?;
    let gen = x.generator_id.as_bytes();
    w.write_all(&(gen.len() as u32).to_le_bytes())?;
    w.write_all(gen)?;
    w.write_all(&x.grid.t0.to_le_bytes())?;
    w.write_all(&x.grid.step.to_le_bytes())?;
    w.write_all(&(x.grid.steps as u64).to_le_bytes())?;
    w.write_all(&(x.dim as u64).to_le_bytes())?;
    w.write_all(&(x.paths as u64).to_le_bytes())?;
    for v in &x.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_ensemble(path: &Path) -> Result<PathEnsemble> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SAVE_MAGIC {
        return Err(Error::Format("not an ensemble snapshot (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SAVE_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let seed_root = read_u64(&mut r)?;
    let gen_len = read_u32(&mut r)? as usize;
    if gen_len > 4096 {
        return Err(Error::Format("generator id implausibly long".into()));
    }
    let mut gen = vec![0u8; gen_len];
    r.read_exact(&mut gen)?;
    let generator_id = String::from_utf8(gen)
        .map_err(|_| Error::Format("generator id is not utf-8".into()))?;
    let t0 = read_f64(&mut r)?;
    let step = read_f64(&mut r)?;
    let steps = read_u64(&mut r)? as usize;
    let dim = read_u64(&mut r)? as usize;
    let paths = read_u64(&mut r)? as usize;
    let grid = TimeGrid { t0, step, steps };
    grid.validate().map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    check_alloc(paths, grid.points(), dim)
        .map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    let n = paths * grid.points() * dim;
    let mut data = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("snapshot has trailing bytes".into()));
    }
    Ok(PathEnsemble { grid, dim, paths, seed_root, generator_id, data })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
