//! Empirical measures on sampled state spaces and the bounded-Lipschitz
//! distance between them, plus the two compactness diagnostics (uniform
//! integrability and tightness) that the distribution experiments report.
//!
//! The distance is computed exactly: d(mu, nu) = max { sum f d(mu - nu) }
//! over |f| <= 1, |f(x) - f(y)| <= min(d(x, y), 2). Truncating the metric at
//! 2 folds the sup-norm box into the Lipschitz class, which turns the
//! problem into optimal transport of the positive part of mu - nu onto the
//! negative part under the truncated metric. Two engines solve it: a dense
//! transportation simplex, and a chain dynamic program for one-dimensional
//! supports where adjacent constraints imply all others. Both return a
//! maximizing f and are verified against each other and against a
//! brute-force grid oracle on tiny supports.

mod chain;
mod transport;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{blockwise_reduce, PathEnsemble};

/// Hard cap on the union support size for the dense engine; larger inputs
/// should be subsampled by the caller (the curve builders do).
pub const DENSE_SUPPORT_CAP: usize = 4096;

/// Feasibility slack for all optimality certificates.
const CERT_TOL: f64 = 1e-9;

/// Distance on the sampled state space.
///
/// `WindowedPath` treats each atom as a path sampled uniformly on
/// [-k_max, k_max] with `pts_per_unit` samples per unit (so the atom
/// dimension is 2 * k_max * pts_per_unit + 1) and compares paths by
/// sum_k 2^{-k} min(1, sup over |t| <= k of |x(t) - y(t)|). That sum is
/// below 1, so the truncation at 2 never binds for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    MaxCoordinate,
    WindowedPath { k_max: usize, pts_per_unit: usize },
}

impl MetricKind {
    /// Dimension the metric requires, if it pins one down.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            MetricKind::WindowedPath { k_max, pts_per_unit } => {
                Some(2 * k_max * pts_per_unit + 1)
            }
            _ => None,
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            MetricKind::Euclidean => {
                let mut s = 0.0;
                for (a, b) in x.iter().zip(y) {
                    s += (a - b) * (a - b);
                }
                s.sqrt()
            }
            MetricKind::MaxCoordinate => {
                let mut s: f64 = 0.0;
                for (a, b) in x.iter().zip(y) {
                    s = s.max((a - b).abs());
                }
                s
            }
            MetricKind::WindowedPath { k_max, pts_per_unit } => {
                let center = k_max * pts_per_unit;
                let mut total = 0.0;
                let mut weight = 0.5;
                let mut sup: f64 = 0.0;
                // windows are nested, so grow the sup outward one rung at a time
                for k in 1..=k_max {
                    let lo = center - k * pts_per_unit;
                    let hi = center + k * pts_per_unit;
                    let prev_lo = center - (k - 1) * pts_per_unit;
                    let prev_hi = center + (k - 1) * pts_per_unit;
                    for i in (lo..prev_lo).chain(prev_hi + 1..=hi) {
                        sup = sup.max((x[i] - y[i]).abs());
                    }
                    if k == 1 {
                        for i in prev_lo..=prev_hi {
                            sup = sup.max((x[i] - y[i]).abs());
                        }
                    }
                    total += weight * sup.min(1.0);
                    weight *= 0.5;
                }
                total
            }
        }
    }
}

/// Finitely supported probability measure with a chosen state-space metric.
/// Atoms with bitwise-identical coordinates are merged on construction.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    pub dim: usize,
    /// row-major atom coordinates, `n_atoms * dim` long
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub metric: MetricKind,
}

impl EmpiricalMeasure {
    pub fn new(
        dim: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        metric: MetricKind,
    ) -> Result<EmpiricalMeasure> {
        if dim == 0 {
            return Err(Error::InvalidArgument("measure dimension must be positive".into()));
        }
        if let Some(want) = metric.expected_dim() {
            if want != dim {
                return Err(Error::InvalidArgument(format!(
                    "windowed-path metric needs dimension {want}, measure has {dim}"
                )));
            }
        }
        if points.len() != dim * weights.len() || weights.is_empty() {
            return Err(Error::InvalidArgument(
                "points length must be dim * weights length, with at least one atom".into(),
            ));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("atom coordinates must be finite".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        // bitwise merge of duplicate atoms
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut mpoints = Vec::with_capacity(points.len());
        let mut mweights: Vec<f64> = Vec::with_capacity(weights.len());
        for (a, w) in weights.iter().enumerate() {
            let coords = &points[a * dim..(a + 1) * dim];
            let key: Vec<u64> = coords.iter().map(|c| c.to_bits()).collect();
            match index.get(&key) {
                Some(&k) => mweights[k] += w,
                None => {
                    index.insert(key, mweights.len());
                    mweights.push(*w);
                    mpoints.extend_from_slice(coords);
                }
            }
        }
        Ok(EmpiricalMeasure { dim, points: mpoints, weights: mweights, metric })
    }

    /// Equal weights on the given atoms.
    pub fn uniform(dim: usize, points: Vec<f64>, metric: MetricKind) -> Result<EmpiricalMeasure> {
        if dim == 0 || points.len() % dim != 0 || points.is_empty() {
            return Err(Error::InvalidArgument(
                "points length must be a positive multiple of dim".into(),
            ));
        }
        let n = points.len() / dim;
        let w = 1.0 / n as f64;
        // uniform weights sum to 1 only up to rounding; rebalance the last
        let mut weights = vec![w; n];
        let head: f64 = weights[..n - 1].iter().sum();
        weights[n - 1] = 1.0 - head;
        EmpiricalMeasure::new(dim, points, weights, metric)
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Merge atoms whose metric distance is at most 1e-9; coordinates of the
    /// survivor are kept as-is (no averaging, so merging is conservative).
    pub fn coalesce(&self) -> Result<EmpiricalMeasure> {
        let n = self.n_atoms();
        let mut rep: Vec<usize> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for i in 0..n {
            let mut merged = false;
            for (k, &r) in rep.iter().enumerate() {
                if self.metric.distance(self.atom(i), self.atom(r)) <= 1e-9 {
                    weights[k] += self.weights[i];
                    merged = true;
                    break;
                }
            }
            if !merged {
                rep.push(i);
                weights.push(self.weights[i]);
            }
        }
        let mut points = Vec::with_capacity(rep.len() * self.dim);
        for &r in &rep {
            points.extend_from_slice(self.atom(r));
        }
        EmpiricalMeasure::new(self.dim, points, weights, self.metric)
    }

    /// Columnar CSV: one atom per row, coordinates then weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in 0..self.dim {
            out.push_str(&format!("c{c},"));
        }
        out.push_str("weight\n");
        for i in 0..self.n_atoms() {
            for c in self.atom(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{}\n", self.weights[i]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlMethod {
    /// exact linear-programming solve (dense transport or 1-d chain engine)
    Lp,
    /// brute-force grid search, only for supports of up to three atoms
    Oracle,
}

/// Distance value together with a maximizing test function, reported on the
/// union support of the two measures. JSON output carries exactly the
/// `value`, `optimizer`, and `method` fields.
#[derive(Debug, Clone, Serialize)]
pub struct BlDistanceResult {
    pub value: f64,
    /// f at each union-support atom, |f| <= 1
    pub optimizer: Vec<f64>,
    pub method: BlMethod,
    /// flattened union-support coordinates, in `optimizer` order
    #[serde(skip)]
    pub support: Vec<f64>,
    #[serde(skip)]
    pub dim: usize,
}

struct SignedSupport {
    dim: usize,
    metric: MetricKind,
    points: Vec<f64>,
    /// mu weight minus nu weight per union atom
    w: Vec<f64>,
}

impl SignedSupport {
    fn atom(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn n(&self) -> usize {
        self.w.len()
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.atom(i), self.atom(j)).min(2.0)
    }
}

fn union_signed(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<SignedSupport> {
    if mu.metric != nu.metric {
        return Err(Error::MetricMismatch(
            "measures carry different state-space metrics".into(),
        ));
    }
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch(format!(
            "measures have dimensions {} and {}",
            mu.dim, nu.dim
        )));
    }
    let dim = mu.dim;
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut w = Vec::new();
    for i in 0..mu.n_atoms() {
        let key: Vec<u64> = mu.atom(i).iter().map(|c| c.to_bits()).collect();
        index.insert(key, w.len());
        points.extend_from_slice(mu.atom(i));
        w.push(mu.weights[i]);
    }
    for j in 0..nu.n_atoms() {
        let key: Vec<u64> = nu.atom(j).iter().map(|c| c.to_bits()).collect();
        match index.get(&key) {
            Some(&k) => w[k] -= nu.weights[j],
            None => {
                points.extend_from_slice(nu.atom(j));
                w.push(-nu.weights[j]);
            }
        }
    }
    Ok(SignedSupport { dim, metric: mu.metric, points, w })
}

/// Shared feasibility checks on a candidate optimizer, plus the claim that
/// it attains `value`. Any failure is a solver defect, not a user error.
fn certify_optimizer(
    sup: &SignedSupport,
    f: &[f64],
    value: f64,
    pairwise: bool,
) -> Result<()> {
    for fi in f {
        if fi.abs() > 1.0 + CERT_TOL {
            return Err(Error::Solver(format!("optimizer leaves the unit box: {fi}")));
        }
    }
    if pairwise {
        for i in 0..sup.n() {
            for j in (i + 1)..sup.n() {
                if (f[i] - f[j]).abs() > sup.cost(i, j) + CERT_TOL {
                    return Err(Error::Solver(format!(
                        "optimizer violates the Lipschitz bound between atoms {i} and {j}"
                    )));
                }
            }
        }
    }
    let attained: f64 = f.iter().zip(&sup.w).map(|(fi, wi)| fi * wi).sum();
    if (attained - value).abs() > CERT_TOL * value.abs().max(1.0) {
        return Err(Error::Solver(format!(
            "optimizer attains {attained}, solver claimed {value}"
        )));
    }
    Ok(())
}

fn zero_result(sup: &SignedSupport) -> BlDistanceResult {
    BlDistanceResult {
        value: 0.0,
        optimizer: vec![0.0; sup.n()],
        method: BlMethod::Lp,
        support: sup.points.clone(),
        dim: sup.dim,
    }
}

/// Bounded-Lipschitz distance with a verified maximizer.
///
/// One-dimensional supports route through the chain engine (thousands of
/// atoms are fine); everything else solves a dense transport problem capped
/// at [`DENSE_SUPPORT_CAP`] union atoms.
pub fn bl_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<BlDistanceResult> {
    let sup = union_signed(mu, nu)?;
    if sup.dim == 1 {
        bl_chain(&sup)
    } else {
        bl_dense(&sup)
    }
}

/// Dense-engine entry that skips the 1-d fast path, so callers can
/// cross-validate the chain route against the full transport solver.
pub fn bl_distance_dense(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<BlDistanceResult> {
    bl_dense(&union_signed(mu, nu)?)
}

fn bl_chain(sup: &SignedSupport) -> Result<BlDistanceResult> {
    let n = sup.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sup.points[a].partial_cmp(&sup.points[b]).unwrap());

    // group numerically equal coordinates (distinct bit patterns such as
    // -0.0 and 0.0 may share a value); each group is one chain node
    let mut z: Vec<f64> = Vec::with_capacity(n);
    let mut w: Vec<f64> = Vec::with_capacity(n);
    let mut node_of: Vec<usize> = vec![0; n];
    for &idx in &order {
        let x = sup.points[idx];
        if z.last() == Some(&x) {
            let k = z.len() - 1;
            w[k] += sup.w[idx];
            node_of[idx] = k;
        } else {
            node_of[idx] = z.len();
            z.push(x);
            w.push(sup.w[idx]);
        }
    }
    if w.iter().all(|wi| wi.abs() <= 1e-15) {
        return Ok(zero_result(sup));
    }

    let sol = chain::solve_chain(&z, &w)?;
    let f: Vec<f64> = (0..n).map(|i| sol.f[node_of[i]]).collect();
    let value = sol.value.max(0.0);
    if value > 2.0 + CERT_TOL {
        return Err(Error::Solver(format!("distance {value} exceeds the diameter bound 2")));
    }
    // adjacent Lipschitz feasibility plus the box implies every pairwise
    // constraint on the line (gaps telescope, the box caps at 2)
    for k in 1..z.len() {
        if (sol.f[k] - sol.f[k - 1]).abs() > (z[k] - z[k - 1]) + CERT_TOL {
            return Err(Error::Solver("chain optimizer violates an adjacent bound".into()));
        }
    }
    certify_optimizer(sup, &f, value, false)?;
    Ok(BlDistanceResult {
        value,
        optimizer: f,
        method: BlMethod::Lp,
        support: sup.points.clone(),
        dim: sup.dim,
    })
}

fn bl_dense(sup: &SignedSupport) -> Result<BlDistanceResult> {
    let n = sup.n();
    if n > DENSE_SUPPORT_CAP {
        return Err(Error::InvalidArgument(format!(
            "union support {n} exceeds the dense cap {DENSE_SUPPORT_CAP}; subsample first"
        )));
    }
    let pos: Vec<usize> = (0..n).filter(|&i| sup.w[i] > 1e-15).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| sup.w[i] < -1e-15).collect();
    if pos.is_empty() || neg.is_empty() {
        return Ok(zero_result(sup));
    }
    let a: Vec<f64> = pos.iter().map(|&i| sup.w[i]).collect();
    let b: Vec<f64> = neg.iter().map(|&j| -sup.w[j]).collect();
    let mut cost = vec![0.0; pos.len() * neg.len()];
    for (pi, &i) in pos.iter().enumerate() {
        for (qj, &j) in neg.iter().enumerate() {
            cost[pi * neg.len() + qj] = sup.cost(i, j);
        }
    }
    let out = transport::min_cost_transport(&a, &b, &cost)?;

    let scale = out.value.abs().max(1.0);
    // primal feasibility of the basic flows
    let mut row_sum = vec![0.0; a.len()];
    let mut col_sum = vec![0.0; b.len()];
    for &(i, j, fl) in &out.cells {
        if fl < -1e-12 {
            return Err(Error::Solver(format!("negative flow {fl} in transport basis")));
        }
        row_sum[i] += fl;
        col_sum[j] += fl;
    }
    for (i, (&got, &want)) in row_sum.iter().zip(&a).enumerate() {
        if (got - want).abs() > CERT_TOL {
            return Err(Error::Solver(format!("row {i} ships {got}, has mass {want}")));
        }
    }
    for (j, (&got, &want)) in col_sum.iter().zip(&b).enumerate() {
        if (got - want).abs() > CERT_TOL {
            return Err(Error::Solver(format!("col {j} receives {got}, needs {want}")));
        }
    }
    // dual feasibility and complementary slackness
    for pi in 0..a.len() {
        for qj in 0..b.len() {
            if out.u[pi] + out.v[qj] > cost[pi * neg.len() + qj] + CERT_TOL {
                return Err(Error::Solver("infeasible dual potentials".into()));
            }
        }
    }
    for &(i, j, fl) in &out.cells {
        if fl > 1e-12 {
            let r = cost[i * neg.len() + j] - out.u[i] - out.v[j];
            if r.abs() > CERT_TOL {
                return Err(Error::Solver("complementary slackness fails on a basic cell".into()));
            }
        }
    }
    let dual: f64 = out.u.iter().zip(&a).map(|(u, a)| u * a).sum::<f64>()
        + out.v.iter().zip(&b).map(|(v, b)| v * b).sum::<f64>();
    if (dual - out.value).abs() > CERT_TOL * scale {
        return Err(Error::Solver(format!("duality gap {} exceeds tolerance", dual - out.value)));
    }

    // extend the optimal potentials to the whole union support: the lower
    // envelope over sinks is 1-Lipschitz for the truncated metric and agrees
    // with the potentials on both sides of the transport
    let mut f: Vec<f64> = (0..n)
        .map(|z| {
            let mut best = f64::INFINITY;
            for (qj, &j) in neg.iter().enumerate() {
                best = best.min(sup.cost(z, j) - out.v[qj]);
            }
            best
        })
        .collect();
    let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo > 2.0 + CERT_TOL {
        return Err(Error::Solver("optimizer oscillation exceeds 2".into()));
    }
    let center = 0.5 * (hi + lo);
    for fi in &mut f {
        *fi = (*fi - center).clamp(-1.0, 1.0);
    }

    let value = out.value.max(0.0);
    if value > 2.0 + CERT_TOL {
        return Err(Error::Solver(format!("distance {value} exceeds the diameter bound 2")));
    }
    certify_optimizer(sup, &f, value, true)?;
    Ok(BlDistanceResult {
        value,
        optimizer: f,
        method: BlMethod::Lp,
        support: sup.points.clone(),
        dim: sup.dim,
    })
}

/// Brute-force reference for supports of at most three union atoms: grid
/// search over (f1, f2) at step 1e-3 with the third value placed at the
/// endpoint of its feasible interval that the signed weight prefers, which
/// is where the objective, linear in f3, is maximized.
pub fn bl_distance_oracle(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<BlDistanceResult> {
    let sup = union_signed(mu, nu)?;
    let n = sup.n();
    if n > 3 {
        return Err(Error::OracleSupport(n));
    }
    if sup.w.iter().all(|wi| wi.abs() <= 1e-15) {
        let mut r = zero_result(&sup);
        r.method = BlMethod::Oracle;
        return Ok(r);
    }
    let grid = |i: i64| -> f64 { (i as f64) * 1e-3 };
    let (mut best, mut best_f) = (f64::NEG_INFINITY, vec![0.0; n]);
    match n {
        1 => {
            // a single shared atom with canceled weight was handled above;
            // with one atom the weight difference must be zero anyway
            best = 0.0;
        }
        2 => {
            let d01 = sup.cost(0, 1);
            for i in -1000..=1000 {
                let f0 = grid(i);
                for j in -1000..=1000 {
                    let f1 = grid(j);
                    if (f0 - f1).abs() > d01 + 1e-12 {
                        continue;
                    }
                    let v = sup.w[0] * f0 + sup.w[1] * f1;
                    if v > best {
                        best = v;
                        best_f = vec![f0, f1];
                    }
                }
            }
        }
        _ => {
            let (d01, d02, d12) = (sup.cost(0, 1), sup.cost(0, 2), sup.cost(1, 2));
            for i in -1000..=1000 {
                let f0 = grid(i);
                for j in -1000..=1000 {
                    let f1 = grid(j);
                    if (f0 - f1).abs() > d01 + 1e-12 {
                        continue;
                    }
                    let lo = (f0 - d02).max(f1 - d12).max(-1.0);
                    let hi = (f0 + d02).min(f1 + d12).min(1.0);
                    if lo > hi + 1e-12 {
                        continue;
                    }
                    let f2 = if sup.w[2] > 0.0 { hi } else { lo };
                    let v = sup.w[0] * f0 + sup.w[1] * f1 + sup.w[2] * f2;
                    if v > best {
                        best = v;
                        best_f = vec![f0, f1, f2];
                    }
                }
            }
        }
    }
    Ok(BlDistanceResult {
        value: best.max(0.0),
        optimizer: best_f,
        method: BlMethod::Oracle,
        support: sup.points.clone(),
        dim: sup.dim,
    })
}

/// Tail p-th moments above each cutoff, maximized over a family of
/// marginals. `norms` holds the raw sample norms of each marginal.
#[derive(Debug, Clone, Serialize)]
pub struct UiProfile {
    pub p: f64,
    pub cutoffs: Vec<f64>,
    /// sup over marginals of mean(norm^p ; norm > cutoff)
    pub sup_values: Vec<f64>,
    /// which marginal attains each sup
    pub argmax_marginal: Vec<usize>,
}

impl UiProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cutoff,sup_value,argmax_marginal\n");
        for ((c, v), m) in self.cutoffs.iter().zip(&self.sup_values).zip(&self.argmax_marginal) {
            out.push_str(&format!("{c},{v},{m}\n"));
        }
        out
    }
}

pub fn uniform_integrability_profile(
    norms: &[Vec<f64>],
    p: f64,
    cutoffs: &[f64],
) -> Result<UiProfile> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument("exponent p must be positive and finite".into()));
    }
    if norms.is_empty() || norms.iter().any(|m| m.is_empty()) {
        return Err(Error::InvalidArgument("every marginal needs at least one sample".into()));
    }
    if cutoffs.is_empty()
        || cutoffs.iter().any(|c| !c.is_finite() || *c < 0.0)
        || cutoffs.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(
            "cutoffs must be nonnegative, finite, strictly increasing".into(),
        ));
    }
    for m in norms {
        if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument("norms must be finite and nonnegative".into()));
        }
    }
    let mut sup_values = Vec::with_capacity(cutoffs.len());
    let mut argmax = Vec::with_capacity(cutoffs.len());
    for &c in cutoffs {
        let (mut best, mut who) = (f64::NEG_INFINITY, 0);
        for (k, m) in norms.iter().enumerate() {
            let mean = m
                .iter()
                .filter(|&&x| x > c)
                .map(|&x| x.powf(p))
                .sum::<f64>()
                / m.len() as f64;
            if mean > best {
                best = mean;
                who = k;
            }
        }
        sup_values.push(best);
        argmax.push(who);
    }
    Ok(UiProfile { p, cutoffs: cutoffs.to_vec(), sup_values, argmax_marginal: argmax })
}

#[derive(Debug, Clone, Serialize)]
pub struct TightnessRow {
    pub delta: f64,
    pub recenter: f64,
    /// empirical probability that some max-coordinate oscillation within
    /// delta inside the window exceeds eta
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TightnessTable {
    pub eta: f64,
    pub window: (f64, f64),
    pub rows: Vec<TightnessRow>,
}

impl TightnessTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,recenter,probability\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.delta, r.recenter, r.probability));
        }
        out
    }
}

/// Empirical modulus of continuity table. For each delta and each recenter r,
/// reports the fraction of paths whose max-coordinate oscillation over pairs
/// closer than delta inside [r + window.0, r + window.1] exceeds eta.
/// Deltas at or below the grid step are rejected: they admit no pair.
pub fn tightness_modulus(
    ens: &PathEnsemble,
    window: (f64, f64),
    deltas: &[f64],
    eta: f64,
    recenters: &[f64],
) -> Result<TightnessTable> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument("eta must be nonnegative and finite".into()));
    }
    if !(window.1 > window.0) {
        return Err(Error::InvalidArgument("window must have positive length".into()));
    }
    if deltas.is_empty() || recenters.is_empty() {
        return Err(Error::InvalidArgument("need at least one delta and one recenter".into()));
    }
    let h = ens.grid.step;
    let mut rows = Vec::with_capacity(deltas.len() * recenters.len());
    for &delta in deltas {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument("deltas must be positive and finite".into()));
        }
        // largest index gap with gap * h strictly below delta
        let k = ((delta / h - 1e-9).ceil() as isize) - 1;
        if k < 1 {
            return Err(Error::InvalidArgument(format!(
                "delta {delta} is at or below the grid step {h}; no pair qualifies"
            )));
        }
        let k = k as usize;
        for &r in recenters {
            let i0 = ens.grid.index_of(r + window.0)?;
            let i1 = ens.grid.index_of(r + window.1)?;
            if i1 <= i0 {
                return Err(Error::InvalidArgument("window collapses on the grid".into()));
            }
            let exceed = blockwise_reduce(
                ens.paths,
                0usize,
                |m| usize::from(path_oscillates(ens, m, i0, i1, k, eta)),
                |acc, x| acc + x,
            );
            rows.push(TightnessRow {
                delta,
                recenter: r,
                probability: exceed as f64 / ens.paths as f64,
            });
        }
    }
    Ok(TightnessTable { eta, window, rows })
}

/// Does path `m` have a window of `k + 1` consecutive samples inside
/// [i0, i1] whose max-coordinate spread exceeds eta?
fn path_oscillates(
    ens: &PathEnsemble,
    m: usize,
    i0: usize,
    i1: usize,
    k: usize,
    eta: f64,
) -> bool {
    for c in 0..ens.dim {
        if i1 - i0 <= k {
            // the whole range sits within one delta-window
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in i0..=i1 {
                let x = ens.value(m, i, c);
                lo = lo.min(x);
                hi = hi.max(x);
            }
            if hi - lo > eta {
                return true;
            }
            continue;
        }
        // monotonic deques over sliding windows of k + 1 samples
        let mut maxq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        let mut minq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        for i in i0..=i1 {
            let x = ens.value(m, i, c);
            while let Some(&b) = maxq.back() {
                if ens.value(m, b, c) <= x {
                    maxq.pop_back();
                } else {
                    break;
                }
            }
            maxq.push_back(i);
            while let Some(&b) = minq.back() {
                if ens.value(m, b, c) >= x {
                    minq.pop_back();
                } else {
                    break;
                }
            }
            minq.push_back(i);
            if let Some(&fr) = maxq.front() {
                if fr + k < i {
                    maxq.pop_front();
                }
            }
            if let Some(&fr) = minq.front() {
                if fr + k < i {
                    minq.pop_front();
                }
            }
            if i >= i0 + k {
                let hi = ens.value(m, *maxq.front().unwrap(), c);
                let lo = ens.value(m, *minq.front().unwrap(), c);
                if hi - lo > eta {
                    return true;
                }
            }
        }
    }
    false
}
