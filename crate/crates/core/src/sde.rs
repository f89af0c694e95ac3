//! Semilinear mild-solution machinery: dx = (A x + f(t,x)) dt + g(t,x) dW
//! with diagonal A = -diag(delta_i), delta_i > 0, so the semigroup bound
//! |S(t)| <= e^{-delta t} holds exactly. Provides the contraction constants
//! theta and theta', an exponential-Euler simulator, the pathwise Picard
//! operator with measured contraction ratios, a Gronwall-variant bound
//! checker, and the convolution-ergodicity check.
//!
//! Discretization: per coordinate, with a = e^{-delta_i h} and
//! b = (1 - a)/delta_i,
//!
//!   x_{j+1,i} = a x_{j,i} + b f_i(t_j, x_j) + a (g(t_j, x_j) dW_j)_i
//!
//! (left-point Ito rule; the factor a on the noise keeps the whole step in
//! the exponential-Euler family). The Picard operator runs the same sweep
//! but reads the coefficient arguments from the input path, so its exact
//! fixed point is the simulated recursion itself.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::SampledFunction;
use crate::measures::{ergodic_mean_fn, ErgodicMeanCurve, WeightMeasure};
use crate::processes::{
    blockwise_reduce, brownian_increments, check_alloc, BrownianBlock, PathEnsemble, TimeGrid,
};
use crate::quad;
use crate::rng::CounterRng;

pub const MILD_GENERATOR_ID: &str = "mild-expeuler-v1";
pub const PICARD_GENERATOR_ID: &str = "picard-sweep-v1";

/// Simulation aborts once any coordinate exceeds this.
pub const BLOW_UP_NORM: f64 = 1e6;

/// Scalar coefficient expression in (t, x). Models are diagonal: coordinate
/// i of the drift is the expression evaluated at (t, x_i), and the diffusion
/// matrix is diag of the expression at (t, x_i). The state primitives are
/// exactly {x, tanh(x), clip(x)} so a Lipschitz constant is certifiable by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefExpr {
    Const(f64),
    /// depends on time only
    Time(SampledFunction),
    State,
    TanhState,
    /// clip-linear: x clamped to [-1, 1]
    ClipState,
    Scale(f64, Box<CoefExpr>),
    Add(Box<CoefExpr>, Box<CoefExpr>),
    Mul(Box<CoefExpr>, Box<CoefExpr>),
}

impl CoefExpr {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            CoefExpr::Const(c) => *c,
            CoefExpr::Time(f) => f.eval(t),
            CoefExpr::State => x,
            CoefExpr::TanhState => x.tanh(),
            CoefExpr::ClipState => x.clamp(-1.0, 1.0),
            CoefExpr::Scale(c, e) => c * e.eval(t, x),
            CoefExpr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            CoefExpr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
        }
    }

    pub fn zero() -> CoefExpr {
        CoefExpr::Const(0.0)
    }

    pub fn add(a: CoefExpr, b: CoefExpr) -> CoefExpr {
        CoefExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn scale(c: f64, e: CoefExpr) -> CoefExpr {
        CoefExpr::Scale(c, Box::new(e))
    }
}

#[derive(Debug, Clone)]
pub struct SdeModel {
    pub dim: usize,
    /// per-coordinate semigroup decays, all positive
    pub deltas: Vec<f64>,
    pub drift: CoefExpr,
    pub diffusion: CoefExpr,
    /// per-coordinate noise variances; the sum is Tr Q
    pub trace_split: Vec<f64>,
    /// declared growth constant: |f| + |g| <= K_growth (1 + |x|)
    pub k_growth: f64,
    /// declared Lipschitz constant in x for |f(t,x)-f(t,y)| + |g(t,x)-g(t,y)|
    pub k_lip: f64,
}

impl SdeModel {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("model dimension must be positive".into()));
        }
        if self.deltas.len() != self.dim || self.trace_split.len() != self.dim {
            return Err(Error::InvalidArgument(
                "deltas and trace_split must have one entry per coordinate".into(),
            ));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidArgument("decays must be positive and finite".into()));
        }
        if self.trace_split.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err(Error::InvalidArgument("noise variances must be >= 0".into()));
        }
        if !(self.k_growth >= 0.0) || !(self.k_lip >= 0.0) {
            return Err(Error::InvalidArgument("declared constants must be >= 0".into()));
        }
        Ok(())
    }

    /// Uniform decay rate: delta = min over coordinates.
    pub fn delta(&self) -> f64 {
        self.deltas.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn trace_q(&self) -> f64 {
        self.trace_split.iter().sum()
    }

    /// Shared constant feeding theta and theta': the larger of the declared
    /// growth and Lipschitz bounds.
    pub fn k(&self) -> f64 {
        self.k_growth.max(self.k_lip)
    }
}

pub fn theta(model: &SdeModel) -> f64 {
    let (k, d, q) = (model.k(), model.delta(), model.trace_q());
    (k * k / d) * (1.0 / (2.0 * d) + q)
}

pub fn theta_prime(model: &SdeModel) -> f64 {
    let (k, d, q) = (model.k(), model.delta(), model.trace_q());
    (4.0 * k * k / d) * (1.0 / d + q)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaReport {
    pub theta: f64,
    pub theta_prime: f64,
    pub theta_valid: bool,
    pub theta_prime_valid: bool,
}

pub fn validity_report(model: &SdeModel) -> ThetaReport {
    let t = theta(model);
    let tp = theta_prime(model);
    ThetaReport { theta: t, theta_prime: tp, theta_valid: t < 1.0, theta_prime_valid: tp < 1.0 }
}

/// Spot-check the declared growth and Lipschitz constants on random
/// (t, x, y) samples; a violation means the declared model is inconsistent.
pub fn validate_constants(model: &SdeModel, samples: usize, seed: u64) -> Result<()> {
    model.validate()?;
    let mut rng = CounterRng::from_parts(seed, 0, "coef-spot-check");
    for _ in 0..samples {
        let t = 200.0 * (rng.uniform() - 0.5);
        let x = 40.0 * (rng.uniform() - 0.5);
        let y = 40.0 * (rng.uniform() - 0.5);
        let (fx, gx) = (model.drift.eval(t, x), model.diffusion.eval(t, x));
        let (fy, gy) = (model.drift.eval(t, y), model.diffusion.eval(t, y));
        let growth = fx.abs() + gx.abs();
        if growth > model.k_growth * (1.0 + x.abs()) + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "growth bound fails at t={t}, x={x}: |f|+|g| = {growth} exceeds \
                 K(1+|x|) = {}",
                model.k_growth * (1.0 + x.abs())
            )));
        }
        let lip = (fx - fy).abs() + (gx - gy).abs();
        if lip > model.k_lip * (x - y).abs() + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz bound fails at t={t}: increment {lip} exceeds \
                 K|x-y| = {}",
                model.k_lip * (x - y).abs()
            )));
        }
    }
    Ok(())
}

/// Declared decomposition f = f_aa + f_erg, g = g_aa + g_erg.
#[derive(Debug, Clone)]
pub struct CoefficientSplit {
    pub f_aa: CoefExpr,
    pub f_erg: CoefExpr,
    pub g_aa: CoefExpr,
    pub g_erg: CoefExpr,
}

impl CoefficientSplit {
    /// Check the pointwise sum identity against the model on random (t, x).
    pub fn validate_against(&self, model: &SdeModel, samples: usize, seed: u64) -> Result<()> {
        let mut rng = CounterRng::from_parts(seed, 0, "split-spot-check");
        for _ in 0..samples {
            let t = 200.0 * (rng.uniform() - 0.5);
            let x = 40.0 * (rng.uniform() - 0.5);
            let df = (self.f_aa.eval(t, x) + self.f_erg.eval(t, x) - model.drift.eval(t, x)).abs();
            let dg = (self.g_aa.eval(t, x) + self.g_erg.eval(t, x)
                - model.diffusion.eval(t, x))
            .abs();
            if df > 1e-12 || dg > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "split does not sum to the model coefficients at t={t}, x={x}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-coordinate step weights of the exponential-Euler scheme.
struct StepWeights {
    a: Vec<f64>,
    b: Vec<f64>,
    /// noise scale sqrt(q_i h), for the simulator's inline draws
    s: Vec<f64>,
}

impl StepWeights {
    fn new(model: &SdeModel, h: f64) -> StepWeights {
        let a: Vec<f64> = model.deltas.iter().map(|d| (-d * h).exp()).collect();
        let b: Vec<f64> =
            model.deltas.iter().zip(&a).map(|(d, a)| (1.0 - a) / d).collect();
        let s: Vec<f64> = model.trace_split.iter().map(|q| (q * h).sqrt()).collect();
        StepWeights { a, b, s }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MildSimReport {
    #[serde(skip)]
    pub ensemble: PathEnsemble,
    /// bound on the burn-in truncation bias: K (1 + sup|x|) e^{-delta B}/delta
    pub bias_bound: f64,
    pub warnings: Vec<String>,
}

fn burn_steps(model: &SdeModel, grid: &TimeGrid, burn_in: f64) -> Result<usize> {
    let d = model.delta();
    if !(burn_in >= 10.0 / d - 1e-9) || !burn_in.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "burn-in {burn_in} is below 10/delta = {}; the truncated history \
             would dominate the bias",
            10.0 / d
        )));
    }
    Ok(((burn_in / grid.step) - 1e-9).ceil() as usize)
}

fn theta_prime_warning(model: &SdeModel) -> Option<String> {
    let tp = theta_prime(model);
    (tp >= 1.0).then(|| {
        format!("theta-prime = {tp} is not below 1; uniqueness constants do not apply")
    })
}

/// Exponential-Euler simulation started at 0 at time t0 - burn_in; only the
/// window on `grid` is returned. Noise draws happen on every step in fixed
/// coordinate order, so trajectories for a given (seed, path) never depend
/// on the thread count or on whether the diffusion is zero.
pub fn simulate_mild(
    model: &SdeModel,
    grid: &TimeGrid,
    burn_in: f64,
    paths: usize,
    seed_root: u64,
) -> Result<MildSimReport> {
    model.validate()?;
    grid.validate()?;
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    check_alloc(paths, grid.points(), model.dim)?;
    let j_burn = burn_steps(model, grid, burn_in)?;
    let h = grid.step;
    let t_start = grid.t0 - j_burn as f64 * h;
    let total_steps = j_burn + grid.steps;
    let w = StepWeights::new(model, h);
    let dim = model.dim;
    let points = grid.points();
    let stride = points * dim;

    let mut data = vec![0.0f64; paths * stride];
    let blow: Vec<Option<(f64, f64)>> = data
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(m, chunk)| {
            let mut rng = CounterRng::from_parts(seed_root, m as u64, MILD_GENERATOR_ID);
            let mut x = vec![0.0f64; dim];
            let mut noise = vec![0.0f64; dim];
            for j in 0..=total_steps {
                if j >= j_burn {
                    chunk[(j - j_burn) * dim..(j - j_burn + 1) * dim].copy_from_slice(&x);
                }
                if j == total_steps {
                    break;
                }
                let t = t_start + j as f64 * h;
                rng.fill_normals(&mut noise);
                for i in 0..dim {
                    let xi = x[i];
                    x[i] = w.a[i] * xi
                        + w.b[i] * model.drift.eval(t, xi)
                        + w.a[i] * model.diffusion.eval(t, xi) * w.s[i] * noise[i];
                }
                for &xi in x.iter() {
                    if !(xi.abs() <= BLOW_UP_NORM) {
                        return Some((t + h, xi.abs()));
                    }
                }
            }
            None
        })
        .collect();
    if let Some((m, Some((time, norm)))) =
        blow.iter().enumerate().find(|(_, b)| b.is_some()).map(|(m, b)| (m, *b))
    {
        return Err(Error::BlowUp { path: m, time, norm });
    }

    let sup_norm = data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let d = model.delta();
    let bias_bound = model.k() * (1.0 + sup_norm) * (-d * (j_burn as f64 * h)).exp() / d;
    let mut warnings = Vec::new();
    if let Some(wn) = theta_prime_warning(model) {
        warnings.push(wn);
    }
    Ok(MildSimReport {
        ensemble: PathEnsemble {
            grid: grid.clone(),
            dim,
            paths,
            seed_root,
            generator_id: MILD_GENERATOR_ID.into(),
            data,
        },
        bias_bound,
        warnings,
    })
}

/// One application of the discretized Picard operator L: the same sweep as
/// the simulator, but every coefficient reads the INPUT path, and the noise
/// comes from a fixed Brownian block shared across iterations. Truncation at
/// the grid start stands in for the lower integration limit, so the grid
/// should include the burn-in region.
pub fn picard_step(
    model: &SdeModel,
    current: &PathEnsemble,
    increments: &BrownianBlock,
) -> Result<PathEnsemble> {
    model.validate()?;
    if current.dim != model.dim {
        return Err(Error::DimensionMismatch(format!(
            "model dimension {} vs path dimension {}",
            model.dim, current.dim
        )));
    }
    if increments.dim_noise != model.dim {
        return Err(Error::DimensionMismatch(format!(
            "model needs {} noise coordinates, block has {}",
            model.dim, increments.dim_noise
        )));
    }
    if increments.grid != current.grid || increments.paths != current.paths {
        return Err(Error::DimensionMismatch(
            "Brownian block and path ensemble shapes differ".into(),
        ));
    }
    check_alloc(current.paths, current.grid.points(), model.dim)?;
    let grid = &current.grid;
    let h = grid.step;
    let w = StepWeights::new(model, h);
    let dim = model.dim;
    let stride = grid.points() * dim;

    let mut data = vec![0.0f64; current.paths * stride];
    data.par_chunks_mut(stride).enumerate().for_each(|(m, out)| {
        let input = current.path(m);
        let mut y = vec![0.0f64; dim];
        for j in 0..=grid.steps {
            out[j * dim..(j + 1) * dim].copy_from_slice(&y);
            if j == grid.steps {
                break;
            }
            let t = grid.t0 + j as f64 * h;
            let xj = &input[j * dim..(j + 1) * dim];
            for i in 0..dim {
                y[i] = w.a[i] * y[i]
                    + w.b[i] * model.drift.eval(t, xj[i])
                    + w.a[i] * model.diffusion.eval(t, xj[i]) * increments.increment(m, j, i);
            }
        }
    });
    Ok(PathEnsemble {
        grid: grid.clone(),
        dim,
        paths: current.paths,
        seed_root: current.seed_root,
        generator_id: PICARD_GENERATOR_ID.into(),
        data,
    })
}

/// sup over grid points of the ensemble mean of |X(t_j) - Y(t_j)|^2,
/// reduced blockwise so the value is thread-count independent.
fn sup_mean_sq_diff(x: &PathEnsemble, y: &PathEnsemble) -> f64 {
    let points = x.grid.points();
    let dim = x.dim;
    let sums = blockwise_reduce(
        x.paths,
        vec![0.0f64; points],
        |m| {
            let (px, py) = (x.path(m), y.path(m));
            (0..points)
                .map(|j| {
                    let mut n2 = 0.0;
                    for c in 0..dim {
                        let d = px[j * dim + c] - py[j * dim + c];
                        n2 += d * d;
                    }
                    n2
                })
                .collect()
        },
        |mut acc: Vec<f64>, v: Vec<f64>| {
            for (a, b) in acc.iter_mut().zip(&v) {
                *a += b;
            }
            acc
        },
    );
    sums.iter().fold(0.0f64, |acc, s| acc.max(s / x.paths as f64))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub theta: f64,
    /// s_k = sup-grid mean |X_{k+1} - X_k|^2, k = 0..
    pub sup_sq: Vec<f64>,
    /// r_k = s_k / s_{k-1}
    pub ratios: Vec<f64>,
    /// max ratio over the later half of the list
    pub max_tail_ratio: Option<f64>,
    /// iteration hit the fixed point to within 1e-28, list truncated
    pub converged: bool,
}

/// Run the Picard iteration from X_0 = 0 with one fixed noise block and
/// measure the decay of successive differences. Requires theta < 1.
pub fn contraction_rate(
    model: &SdeModel,
    grid: &TimeGrid,
    paths: usize,
    seed_root: u64,
    iterations: usize,
) -> Result<ContractionReport> {
    model.validate()?;
    grid.validate()?;
    let th = theta(model);
    if !(th < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contraction requires theta < 1, model has theta = {th}"
        )));
    }
    if iterations < 2 {
        return Err(Error::InvalidArgument("need at least two iterations".into()));
    }
    let block = brownian_increments(grid, paths, &model.trace_split, seed_root)?;
    let x0 = PathEnsemble {
        grid: grid.clone(),
        dim: model.dim,
        paths,
        seed_root,
        generator_id: "picard-x0".into(),
        data: vec![0.0; paths * grid.points() * model.dim],
    };
    let mut cur = picard_step(model, &x0, &block)?;
    let mut sup_sq = vec![sup_mean_sq_diff(&cur, &x0)];
    let mut converged = false;
    for _ in 1..iterations {
        let next = picard_step(model, &cur, &block)?;
        let s = sup_mean_sq_diff(&next, &cur);
        cur = next;
        sup_sq.push(s);
        if s < 1e-28 {
            converged = true;
            break;
        }
    }
    // a zero denominator means the fixed point was hit exactly; no ratio
    let ratios: Vec<f64> =
        sup_sq.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let tail = ratios.len().div_ceil(2);
    let max_tail_ratio = ratios[ratios.len() - tail..]
        .iter()
        .cloned()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(ContractionReport { theta: th, sup_sq, ratios, max_tail_ratio, converged })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentCurve {
    pub times: Vec<f64>,
    /// ensemble mean of |x(t_j)|^2 per grid point
    pub values: Vec<f64>,
    pub bias_bound: f64,
    pub warnings: Vec<String>,
}

/// Second-moment curve of the mild simulation without materializing the
/// ensemble: each path is swept privately and only per-block partial sums
/// are kept, so arbitrarily long grids fit in memory. Trajectories are the
/// exact ones simulate_mild would produce for the same seed.
pub fn mild_second_moment_curve(
    model: &SdeModel,
    grid: &TimeGrid,
    burn_in: f64,
    paths: usize,
    seed_root: u64,
) -> Result<MomentCurve> {
    model.validate()?;
    grid.validate()?;
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let j_burn = burn_steps(model, grid, burn_in)?;
    let h = grid.step;
    let t_start = grid.t0 - j_burn as f64 * h;
    let total_steps = j_burn + grid.steps;
    let w = StepWeights::new(model, h);
    let dim = model.dim;
    let points = grid.points();

    type Acc = (Vec<f64>, f64, Option<(usize, f64, f64)>);
    let zero: Acc = (vec![0.0; points], 0.0, None);
    let (sums, sup_norm, blow) = blockwise_reduce(
        paths,
        zero,
        |m| {
            let mut rng = CounterRng::from_parts(seed_root, m as u64, MILD_GENERATOR_ID);
            let mut x = vec![0.0f64; dim];
            let mut noise = vec![0.0f64; dim];
            let mut sq = vec![0.0f64; points];
            let mut sup = 0.0f64;
            let mut blow = None;
            'sweep: for j in 0..=total_steps {
                if j >= j_burn {
                    let mut n2 = 0.0;
                    for &xi in x.iter() {
                        n2 += xi * xi;
                        sup = sup.max(xi.abs());
                    }
                    sq[j - j_burn] = n2;
                }
                if j == total_steps {
                    break;
                }
                let t = t_start + j as f64 * h;
                rng.fill_normals(&mut noise);
                for i in 0..dim {
                    let xi = x[i];
                    x[i] = w.a[i] * xi
                        + w.b[i] * model.drift.eval(t, xi)
                        + w.a[i] * model.diffusion.eval(t, xi) * w.s[i] * noise[i];
                }
                for &xi in x.iter() {
                    if !(xi.abs() <= BLOW_UP_NORM) {
                        blow = Some((m, t + h, xi.abs()));
                        break 'sweep;
                    }
                }
            }
            (sq, sup, blow)
        },
        |mut acc: Acc, v: Acc| {
            for (a, b) in acc.0.iter_mut().zip(&v.0) {
                *a += b;
            }
            acc.1 = acc.1.max(v.1);
            acc.2 = match (acc.2, v.2) {
                (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                (a, b) => a.or(b),
            };
            acc
        },
    );
    if let Some((m, time, norm)) = blow {
        return Err(Error::BlowUp { path: m, time, norm });
    }
    let d = model.delta();
    let bias_bound = model.k() * (1.0 + sup_norm) * (-d * (j_burn as f64 * h)).exp() / d;
    let mut warnings = Vec::new();
    if let Some(wn) = theta_prime_warning(model) {
        warnings.push(wn);
    }
    Ok(MomentCurve {
        times: (0..points).map(|j| grid.time(j)).collect(),
        values: sums.iter().map(|s| s / paths as f64).collect(),
        bias_bound,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    pub window: (f64, f64),
    pub grid_step: f64,
    /// g(t) <= alpha(t) + sum_i beta_i int e^{-delta_i (t-s)} g(s) ds held
    /// on the whole window grid
    pub hypothesis_holds: bool,
    /// min over the grid of (right side - g); negative means a violation
    pub hypothesis_margin: f64,
    /// the conclusion is only claimed when the hypothesis held
    pub conclusion_checked: bool,
    pub conclusion_holds: bool,
    pub conclusion_margin: f64,
    /// for constant alpha: the bound alpha * delta / (delta - beta)
    pub constant_alpha_bound: Option<f64>,
    pub constant_alpha_holds: Option<bool>,
    /// bound on what the truncated left tails can contribute
    pub tail_bias: f64,
    pub notes: Vec<String>,
}

const GRONWALL_STEP: f64 = 0.125;
const GRONWALL_TOL: f64 = 1e-7;

/// Numerical check of the Gronwall variant: IF g satisfies the integral
/// hypothesis THEN g(t) <= alpha(t) + beta int_{-inf}^t e^{-gamma(t-s)}
/// alpha(s) ds, and for constant alpha also g <= alpha delta/(delta - beta),
/// where beta = sum beta_i and delta = min delta_i. Both sides are evaluated
/// on a grid over `window` with the left tails truncated far enough that the
/// reported bias is negligible.
pub fn gronwall_bound_check(
    alpha: &SampledFunction,
    betas: &[f64],
    deltas: &[f64],
    gamma: f64,
    g: &SampledFunction,
    window: (f64, f64),
) -> Result<GronwallReport> {
    if betas.is_empty() || betas.len() != deltas.len() {
        return Err(Error::InvalidArgument(
            "need matching nonempty beta and delta lists".into(),
        ));
    }
    if betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite())
        || deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite())
    {
        return Err(Error::InvalidArgument(
            "betas must be >= 0 and deltas must be > 0".into(),
        ));
    }
    let beta: f64 = betas.iter().sum();
    let delta = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(delta > beta) {
        return Err(Error::InvalidArgument(format!(
            "requires min delta {delta} > sum beta {beta}"
        )));
    }
    if !(gamma > 0.0 && gamma <= delta - beta + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, delta - beta] = (0, {}]",
            delta - beta
        )));
    }
    if !(window.1 > window.0) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(Error::InvalidArgument("window must be a finite interval".into()));
    }

    let min_rate = deltas.iter().cloned().fold(gamma, f64::min);
    let tail_span = 30.0 / min_rate;
    let t_start = window.0 - tail_span;
    let n_cells = ((window.1 - t_start) / GRONWALL_STEP).ceil() as usize;

    // march every convolution from the truncation point on one shared grid;
    // each cell is integrated adaptively so the only real error is the tail
    let mut conv_g: Vec<f64> = vec![0.0; deltas.len()];
    let mut conv_alpha = 0.0f64;
    let mut hyp_margin = f64::INFINITY;
    let mut conc_margin = f64::INFINITY;
    let mut sup_g = f64::NEG_INFINITY;
    let mut alpha_lo = f64::INFINITY;
    let mut alpha_hi = f64::NEG_INFINITY;
    for cell in 0..=n_cells {
        let t = t_start + cell as f64 * GRONWALL_STEP;
        if t >= window.0 - 1e-12 {
            let gt = g.eval(t);
            let at = alpha.eval(t);
            sup_g = sup_g.max(gt);
            alpha_lo = alpha_lo.min(at);
            alpha_hi = alpha_hi.max(at);
            let rhs_hyp: f64 =
                at + betas.iter().zip(&conv_g).map(|(b, c)| b * c).sum::<f64>();
            hyp_margin = hyp_margin.min(rhs_hyp - gt);
            let rhs_conc = at + beta * conv_alpha;
            conc_margin = conc_margin.min(rhs_conc - gt);
        }
        if cell == n_cells {
            break;
        }
        let t1 = t + GRONWALL_STEP;
        for (k, &dk) in deltas.iter().enumerate() {
            let inner = quad::integrate(|s| (-dk * (t1 - s)).exp() * g.eval(s), t, t1)?;
            conv_g[k] = (-dk * GRONWALL_STEP).exp() * conv_g[k] + inner;
        }
        let inner_a =
            quad::integrate(|s| (-gamma * (t1 - s)).exp() * alpha.eval(s), t, t1)?;
        conv_alpha = (-gamma * GRONWALL_STEP).exp() * conv_alpha + inner_a;
    }

    let hypothesis_holds = hyp_margin >= -GRONWALL_TOL;
    let conclusion_holds = conc_margin >= -GRONWALL_TOL;
    let mut notes = Vec::new();
    if !hypothesis_holds {
        notes.push("hypothesis fails; the conclusion is not claimed".into());
        if !conclusion_holds {
            notes.push(
                "conclusion bound also fails, consistent with the failed hypothesis".into(),
            );
        }
    } else if !conclusion_holds {
        notes.push(
            "hypothesis holds but the conclusion margin is negative; this contradicts \
             the implication and indicates a numerical artifact worth investigating"
                .into(),
        );
    }

    let (constant_alpha_bound, constant_alpha_holds) = if alpha_hi - alpha_lo <= 1e-12 {
        let bound = alpha_hi * delta / (delta - beta);
        (Some(bound), Some(sup_g <= bound + GRONWALL_TOL))
    } else {
        (None, None)
    };

    // truncated tails can hide at most this much of either convolution
    let g_amp = sup_g.abs().max(1.0);
    let tail_bias = betas
        .iter()
        .zip(deltas)
        .map(|(b, d)| b * g_amp * (-d * tail_span).exp() / d)
        .sum::<f64>()
        + beta * alpha_hi.abs() * (-gamma * tail_span).exp() / gamma;

    Ok(GronwallReport {
        window,
        grid_step: GRONWALL_STEP,
        hypothesis_holds,
        hypothesis_margin: hyp_margin,
        conclusion_checked: hypothesis_holds,
        conclusion_holds: hypothesis_holds && conclusion_holds,
        conclusion_margin: conc_margin,
        constant_alpha_bound,
        constant_alpha_holds,
        tail_bias,
        notes,
    })
}

#[derive(Debug, Clone)]
pub struct ConvolutionReport {
    pub curve: ErgodicMeanCurve,
    /// sup of m over the probed grid
    pub sup_m: f64,
    /// truncation bias bound on F itself
    pub tail_bias: f64,
}

const CONV_MESH: f64 = 0.05;

/// Build F(t) = (int_{-inf}^t e^{-2 delta (t-s)} m(s)^2 ds)^{1/2} on a fine
/// grid covering the radii, then take its weighted ergodic mean curve. A
/// decaying curve corroborates that the convolution inherits the ergodic
/// smallness of m.
pub fn convolution_ergodicity_check(
    m_fn: &SampledFunction,
    delta: f64,
    mu: &WeightMeasure,
    radii: &[f64],
) -> Result<ConvolutionReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument("delta must be positive and finite".into()));
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("need at least one radius".into()));
    }
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    let lo = -r_max - 1.0;
    let hi = r_max + 1.0;
    let tail_span = 30.0 / (2.0 * delta);
    // whole number of mesh cells for the truncated tail, so the first
    // stored sample lands on lo exactly
    let n_tail = (tail_span / CONV_MESH).ceil() as usize;
    let t_start = lo - n_tail as f64 * CONV_MESH;
    let n_cells = n_tail + ((hi - lo) / CONV_MESH).ceil() as usize;

    let mut sup_m = 0.0f64;
    let mut f_sq = 0.0f64;
    let mut values = Vec::with_capacity(n_cells - n_tail + 1);
    for cell in 0..=n_cells {
        let t = t_start + cell as f64 * CONV_MESH;
        let mt = m_fn.eval(t);
        if mt < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "m must be nonnegative; m({t}) = {mt}"
            )));
        }
        sup_m = sup_m.max(mt);
        if cell >= n_tail {
            values.push(f_sq.max(0.0).sqrt());
        }
        if cell == n_cells {
            break;
        }
        let t1 = t + CONV_MESH;
        let inner = quad::integrate(
            |s| {
                let ms = m_fn.eval(s);
                (-2.0 * delta * (t1 - s)).exp() * ms * ms
            },
            t,
            t1,
        )?;
        f_sq = (-2.0 * delta * CONV_MESH).exp() * f_sq + inner;
    }

    let f_grid = crate::functions::GridFunction::new(lo, CONV_MESH, values)?;
    let f_interp = move |t: f64| f_grid.eval(t);
    let curve = ergodic_mean_fn(f_interp, mu, radii, false)?;
    let tail_bias = sup_m * (-delta * tail_span).exp() / (2.0 * delta).sqrt();
    Ok(ConvolutionReport { curve, sup_m, tail_bias })
}
