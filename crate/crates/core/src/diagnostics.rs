//! Distribution-flatness battery on path ensembles: how far the law of the
//! process at time t drifts as t is shifted, measured with the empirical
//! bounded-Lipschitz distance on one-time marginals, finite-dimensional
//! marginals, and windowed path segments.
//!
//! Every flat-or-not verdict is a ratio against a noise floor computed with
//! the same atom caps and the same solver settings: the self-distance
//! between two disjoint half-ensembles at the unshifted marginal. Raw d_BL
//! values are reported but never judged in absolute terms.

use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{
    bl_distance, uniform_integrability_profile, EmpiricalMeasure, MetricKind, UiProfile,
};
use crate::error::{Error, Result};
use crate::functions::GridFunction;
use crate::measures::{ergodic_mean_fn, ErgodicMeanCurve, WeightMeasure};
use crate::processes::{blockwise_reduce, translate, PathEnsemble};
use crate::rng::CounterRng;

/// Atom cap per side for scalar marginals (chain solver, effectively linear).
pub const ONEDIM_ATOM_CAP: usize = 5000;
/// Atom cap per side for everything that goes through the dense transport
/// solver (tuple marginals with k >= 2 and windowed path atoms).
pub const DENSE_ATOM_CAP: usize = 500;
/// Largest tuple arity for finite-dimensional marginals.
pub const MAX_TUPLE_LEN: usize = 4;
/// Number of grid times sampled for the uniform-integrability attachment.
pub const UI_MARGINAL_CAP: usize = 33;
/// Fixed sub-seed of the atom-subsampling protocol. Part of the noise-floor
/// contract: both sides of every ratio use it.
pub const DIAG_SUB_SEED: u64 = 0xD1A6;

const UI_CUTOFFS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    OneDim,
    FinDim,
    Path,
}

/// d_BL-vs-shift curve with its noise floor. `ratios[i] = values[i]/floor`;
/// a zero floor with a nonzero value yields an infinite ratio, and 0/0 is
/// reported as 0.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionCurve {
    pub kind: CurveKind,
    pub shifts: Vec<f64>,
    pub values: Vec<f64>,
    pub noise_floor: f64,
    pub ratios: Vec<f64>,
    pub ui: Option<UiProfile>,
}

impl DistributionCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("shift,d_bl,noise_floor,ratio\n");
        for i in 0..self.shifts.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.shifts[i], self.values[i], self.noise_floor, self.ratios[i]
            ));
        }
        s
    }

    /// Largest ratio over all shifts; infinite when any floor division was.
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

fn finish_curve(
    kind: CurveKind,
    shifts: &[f64],
    values: Vec<f64>,
    floor: f64,
) -> DistributionCurve {
    let ratios = values
        .iter()
        .map(|v| {
            if *v == 0.0 {
                0.0
            } else if floor == 0.0 {
                f64::INFINITY
            } else {
                v / floor
            }
        })
        .collect();
    DistributionCurve { kind, shifts: shifts.to_vec(), values, noise_floor: floor, ratios, ui: None }
}

/// Window placement and depth for path-space atoms: samples cover
/// `[base_time - k_max, base_time + k_max]` at the grid resolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowSpec {
    pub k_max: usize,
    pub base_time: f64,
}

impl WindowSpec {
    fn pts_per_unit(grid_step: f64) -> Result<usize> {
        let ppu = (1.0 / grid_step).round();
        if !(ppu >= 1.0) || (ppu * grid_step - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "path windows need a grid step that divides one time unit; step = {grid_step}"
            )));
        }
        Ok(ppu as usize)
    }

    fn validate(&self) -> Result<usize> {
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("window depth k_max must be at least 1".into()));
        }
        if !self.base_time.is_finite() {
            return Err(Error::InvalidArgument("window base time must be finite".into()));
        }
        Ok(self.k_max)
    }
}

/// Deterministic subsample of path indices: identity when the ensemble fits
/// under the cap, otherwise the first `cap` entries of a seeded shuffle,
/// sorted. `stream` separates the numerator draw from the two floor halves.
fn subsample_indices(n: usize, cap: usize, stream: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = CounterRng::from_parts(DIAG_SUB_SEED, stream, "diag-subsample");
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..cap {
        let rest = (n - i) as f64;
        let j = i + ((rng.uniform() * rest) as usize).min(n - i - 1);
        idx.swap(i, j);
    }
    idx.truncate(cap);
    idx.sort_unstable();
    idx
}

/// States at one grid point for the chosen paths, flattened.
fn gather_states(ens: &PathEnsemble, j: usize, idx: &[usize]) -> Vec<f64> {
    let mut pts = Vec::with_capacity(idx.len() * ens.dim);
    for &m in idx {
        pts.extend_from_slice(ens.state(m, j));
    }
    pts
}

fn onedim_measure(ens: &PathEnsemble, j: usize, idx: &[usize]) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(ens.dim, gather_states(ens, j, idx), MetricKind::Euclidean)
}

/// Disjoint halves of the path index range, each subsampled to the cap under
/// its own stream. The floor protocol requires at least one path per half.
fn floor_halves(paths: usize, cap: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let half = paths / 2;
    if half == 0 {
        return Err(Error::InvalidArgument(
            "noise floor needs at least two paths to split".into(),
        ));
    }
    let a = subsample_indices(half, cap, 1);
    let b: Vec<usize> = subsample_indices(paths - half, cap, 2).iter().map(|i| i + half).collect();
    Ok((a, b))
}

fn validate_shifts(shifts: &[f64]) -> Result<()> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("need at least one shift".into()));
    }
    if shifts.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("shifts must be finite".into()));
    }
    Ok(())
}

/// d_BL between the laws of X(t) and X(t + tau), maximized over base times,
/// per shift. Scalar ensembles ride the chain solver and keep a large atom
/// cap; higher dimensions are capped for the dense solver.
pub fn onedim_distribution_curve(
    ens: &PathEnsemble,
    base_times: &[f64],
    shifts: &[f64],
) -> Result<DistributionCurve> {
    if base_times.is_empty() {
        return Err(Error::InvalidArgument("need at least one base time".into()));
    }
    validate_shifts(shifts)?;
    let cap = if ens.dim == 1 { ONEDIM_ATOM_CAP } else { DENSE_ATOM_CAP };
    let base_idx: Vec<usize> =
        base_times.iter().map(|t| ens.grid.index_of(*t)).collect::<Result<_>>()?;

    let (ha, hb) = floor_halves(ens.paths, cap)?;
    let mut floor = 0.0f64;
    for &j in &base_idx {
        let d = bl_distance(&onedim_measure(ens, j, &ha)?, &onedim_measure(ens, j, &hb)?)?;
        floor = floor.max(d.value);
    }

    let idx = subsample_indices(ens.paths, cap, 0);
    let values: Vec<f64> = shifts
        .par_iter()
        .map(|tau| {
            let mut worst = 0.0f64;
            for (&t, &j) in base_times.iter().zip(&base_idx) {
                let j_shift = ens.grid.index_of(t + tau)?;
                let d = bl_distance(
                    &onedim_measure(ens, j, &idx)?,
                    &onedim_measure(ens, j_shift, &idx)?,
                )?;
                worst = worst.max(d.value);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(finish_curve(CurveKind::OneDim, shifts, values, floor))
}

fn tuple_measure(
    ens: &PathEnsemble,
    tuple_idx: &[usize],
    idx: &[usize],
) -> Result<EmpiricalMeasure> {
    let k = tuple_idx.len();
    let mut pts = Vec::with_capacity(idx.len() * k);
    for &m in idx {
        for &j in tuple_idx {
            pts.push(ens.value(m, j, 0));
        }
    }
    EmpiricalMeasure::uniform(k, pts, MetricKind::MaxCoordinate)
}

/// d_BL between the joint laws (X(t1),...,X(tk)) and the tuple shifted by
/// tau, under the max-coordinate metric, maximized over tuples. Requires a
/// scalar state space: the max-over-components metric for vector blocks is
/// not implemented.
pub fn findim_distribution_curve(
    ens: &PathEnsemble,
    time_tuples: &[Vec<f64>],
    shifts: &[f64],
) -> Result<DistributionCurve> {
    if ens.dim != 1 {
        return Err(Error::InvalidArgument(
            "tuple marginals are defined here for scalar ensembles only".into(),
        ));
    }
    if time_tuples.is_empty() {
        return Err(Error::InvalidArgument("need at least one time tuple".into()));
    }
    validate_shifts(shifts)?;
    let mut tuples_idx = Vec::with_capacity(time_tuples.len());
    for tuple in time_tuples {
        if tuple.is_empty() || tuple.len() > MAX_TUPLE_LEN {
            return Err(Error::InvalidArgument(format!(
                "tuple arity must be between 1 and {MAX_TUPLE_LEN}, got {}",
                tuple.len()
            )));
        }
        tuples_idx.push(tuple.iter().map(|t| ens.grid.index_of(*t)).collect::<Result<Vec<_>>>()?);
    }
    let cap_for = |k: usize| if k == 1 { ONEDIM_ATOM_CAP } else { DENSE_ATOM_CAP };

    let mut floor = 0.0f64;
    for tuple_idx in &tuples_idx {
        let cap = cap_for(tuple_idx.len());
        let (ha, hb) = floor_halves(ens.paths, cap)?;
        let d = bl_distance(
            &tuple_measure(ens, tuple_idx, &ha)?,
            &tuple_measure(ens, tuple_idx, &hb)?,
        )?;
        floor = floor.max(d.value);
    }

    let values: Vec<f64> = shifts
        .par_iter()
        .map(|tau| {
            let mut worst = 0.0f64;
            for (tuple, tuple_idx) in time_tuples.iter().zip(&tuples_idx) {
                let shifted: Vec<usize> =
                    tuple.iter().map(|t| ens.grid.index_of(t + tau)).collect::<Result<_>>()?;
                let cap = cap_for(tuple.len());
                let idx = subsample_indices(ens.paths, cap, 0);
                let d = bl_distance(
                    &tuple_measure(ens, tuple_idx, &idx)?,
                    &tuple_measure(ens, &shifted, &idx)?,
                )?;
                worst = worst.max(d.value);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(finish_curve(CurveKind::FinDim, shifts, values, floor))
}

/// Window sample indices centered on grid point `j_center`.
fn window_indices(
    ens: &PathEnsemble,
    j_center: usize,
    k_max: usize,
    ppu: usize,
) -> Result<(usize, usize)> {
    let reach = k_max * ppu;
    if j_center < reach || j_center + reach > ens.grid.steps {
        return Err(Error::OutOfRange { t: ens.grid.time(j_center) });
    }
    Ok((j_center - reach, j_center + reach))
}

fn window_measure(
    ens: &PathEnsemble,
    j_center: usize,
    k_max: usize,
    ppu: usize,
    idx: &[usize],
) -> Result<EmpiricalMeasure> {
    let (j_lo, j_hi) = window_indices(ens, j_center, k_max, ppu)?;
    let width = j_hi - j_lo + 1;
    let mut pts = Vec::with_capacity(idx.len() * width);
    for &m in idx {
        let p = ens.path(m);
        pts.extend_from_slice(&p[j_lo..=j_hi]);
    }
    EmpiricalMeasure::uniform(width, pts, MetricKind::WindowedPath { k_max, pts_per_unit: ppu })
}

/// d_BL between the laws of the windowed translated path at the base time
/// and at base + tau, under the level-weighted path metric. Scalar state
/// only; window samples at the grid resolution.
pub fn path_distribution_curve(
    ens: &PathEnsemble,
    spec: &WindowSpec,
    shifts: &[f64],
) -> Result<DistributionCurve> {
    if ens.dim != 1 {
        return Err(Error::InvalidArgument(
            "path-space atoms are defined here for scalar ensembles only".into(),
        ));
    }
    let k_max = spec.validate()?;
    validate_shifts(shifts)?;
    let ppu = WindowSpec::pts_per_unit(ens.grid.step)?;
    let j_base = ens.grid.index_of(spec.base_time)?;
    window_indices(ens, j_base, k_max, ppu)?;

    let (ha, hb) = floor_halves(ens.paths, DENSE_ATOM_CAP)?;
    let floor = bl_distance(
        &window_measure(ens, j_base, k_max, ppu, &ha)?,
        &window_measure(ens, j_base, k_max, ppu, &hb)?,
    )?
    .value;

    let idx = subsample_indices(ens.paths, DENSE_ATOM_CAP, 0);
    let values: Vec<f64> = shifts
        .par_iter()
        .map(|tau| {
            let j_shift = ens.grid.index_of(spec.base_time + tau)?;
            let d = bl_distance(
                &window_measure(ens, j_base, k_max, ppu, &idx)?,
                &window_measure(ens, j_shift, k_max, ppu, &idx)?,
            )?;
            Ok(d.value)
        })
        .collect::<Result<_>>()?;
    Ok(finish_curve(CurveKind::Path, shifts, values, floor))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub t: f64,
    pub value: f64,
    /// exact-zero identity; any nonzero value means the translation and
    /// window indexing disagree
    pub pass: bool,
}

/// Structural identity check: windowing the time-translated process at the
/// base time must give byte-identical atoms to windowing the original
/// process at base + t, so the distance is exactly zero. The two sides take
/// genuinely different index paths (one through the translate combinator,
/// one through direct window indexing), which is what makes this a real
/// plumbing test rather than a tautology.
pub fn consistency_relation_check(
    ens: &PathEnsemble,
    t: f64,
    spec: &WindowSpec,
) -> Result<ConsistencyReport> {
    if ens.dim != 1 {
        return Err(Error::InvalidArgument(
            "path-space atoms are defined here for scalar ensembles only".into(),
        ));
    }
    let k_max = spec.validate()?;
    let ppu = WindowSpec::pts_per_unit(ens.grid.step)?;
    let idx = subsample_indices(ens.paths, DENSE_ATOM_CAP, 0);

    let translated = translate(ens, t)?;
    let j_a = translated.grid.index_of(spec.base_time)?;
    let mu = window_measure(&translated, j_a, k_max, ppu, &idx)?;

    let j_b = ens.grid.index_of(spec.base_time + t)?;
    let nu = window_measure(ens, j_b, k_max, ppu, &idx)?;

    let value = bl_distance(&mu, &nu)?.value;
    Ok(ConsistencyReport { t, value, pass: value == 0.0 })
}

/// Empirical law of the path window at the window's base time over the
/// deterministic capped subsample, as a standalone measure. `half` picks one
/// of the two disjoint noise-floor halves; `None` uses the full-range
/// subsample stream. Equal-shape ensembles produce metric-compatible
/// measures, so laws of two different processes can be compared, which the
/// single-ensemble curves above cannot do.
pub fn window_law(
    ens: &PathEnsemble,
    spec: &WindowSpec,
    half: Option<bool>,
) -> Result<EmpiricalMeasure> {
    if ens.dim != 1 {
        return Err(Error::InvalidArgument(
            "path-space atoms are defined here for scalar ensembles only".into(),
        ));
    }
    let k_max = spec.validate()?;
    let ppu = WindowSpec::pts_per_unit(ens.grid.step)?;
    let j = ens.grid.index_of(spec.base_time)?;
    let idx = match half {
        None => subsample_indices(ens.paths, DENSE_ATOM_CAP, 0),
        Some(h) => {
            let (a, b) = floor_halves(ens.paths, DENSE_ATOM_CAP)?;
            if h {
                b
            } else {
                a
            }
        }
    };
    window_measure(ens, j, k_max, ppu, &idx)
}

#[derive(Debug, Clone, Serialize)]
pub struct PaaReport {
    pub p: f64,
    /// weighted ergodic mean of t -> (mean |Z(t)|^p)^{1/p} (or the clipped
    /// mean at p = 0); must decay for a genuine ergodic remainder
    #[serde(skip)]
    pub residual_curve: ErgodicMeanCurve,
    pub y_onedim: DistributionCurve,
    pub y_path: DistributionCurve,
}

/// Decomposition check for X = Y + Z: the residual Z = X - Y must be
/// ergodically small in pth mean under mu, while Y must have flat
/// distribution curves. With p > 0 the one-dimensional curve carries the
/// uniform-integrability profile of |Y(t)| sampled along the grid.
pub fn paa_p_distribution_check(
    x: &PathEnsemble,
    y: &PathEnsemble,
    p: f64,
    mu: &WeightMeasure,
    radii: &[f64],
    shifts: &[f64],
    spec: &WindowSpec,
) -> Result<PaaReport> {
    if x.grid != y.grid || x.paths != y.paths || x.dim != y.dim {
        return Err(Error::DimensionMismatch(
            "decomposition requires ensembles with identical shape and grid".into(),
        ));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument("p must be finite and >= 0".into()));
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("need at least one radius".into()));
    }
    let covered = (-x.grid.t0).min(x.grid.t_end());
    for &r in radii {
        if !(r > 0.0) || r > covered + 1e-9 {
            return Err(Error::OutOfRange { t: r });
        }
    }

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
                    let n = n2.sqrt();
                    if p == 0.0 {
                        n.min(1.0)
                    } else {
                        n.powf(p)
                    }
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
    let moment: Vec<f64> = sums
        .iter()
        .map(|s| {
            let mean = s / x.paths as f64;
            if p == 0.0 {
                mean
            } else {
                mean.powf(1.0 / p)
            }
        })
        .collect();
    let z_grid = GridFunction::new(x.grid.t0, x.grid.step, moment)?;
    let residual_curve = ergodic_mean_fn(move |t| z_grid.eval(t), mu, radii, false)?;

    let mut y_onedim = onedim_distribution_curve(y, &[spec.base_time], shifts)?;
    let y_path = path_distribution_curve(y, spec, shifts)?;
    if p > 0.0 {
        let stride = (points / UI_MARGINAL_CAP).max(1);
        let marginals: Vec<Vec<f64>> = (0..points)
            .step_by(stride)
            .map(|j| {
                (0..y.paths)
                    .map(|m| {
                        let s = y.state(m, j);
                        s.iter().map(|v| v * v).sum::<f64>().sqrt()
                    })
                    .collect()
            })
            .collect();
        y_onedim.ui = Some(uniform_integrability_profile(&marginals, p, &UI_CUTOFFS)?);
    }
    Ok(PaaReport { p, residual_curve, y_onedim, y_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::FunctionSpec;
    use crate::processes::{broadcast_value, map_ensemble, simulate_ou, OuParams, TimeGrid};

    fn ou(var: f64, grid: &TimeGrid, paths: usize, seed: u64) -> PathEnsemble {
        let p = OuParams { alpha: 1.0, sigma: var.sqrt() };
        simulate_ou(&p, grid, paths, seed).unwrap()
    }

    #[test]
    fn self_comparison_at_shift_zero_is_exactly_zero() {
        let grid = TimeGrid::new(0.0, 0.25, 80).unwrap();
        let ens = ou(1.0, &grid, 400, 11);
        let c = onedim_distribution_curve(&ens, &[2.0], &[0.0]).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert_eq!(c.ratios[0], 0.0);

        let spec = WindowSpec { k_max: 2, base_time: 5.0 };
        let cp = path_distribution_curve(&ens, &spec, &[0.0]).unwrap();
        assert_eq!(cp.values[0], 0.0);
    }

    #[test]
    fn standalone_window_laws_reproduce_the_path_curve_values() {
        let grid = TimeGrid::new(0.0, 0.25, 80).unwrap();
        let ens = ou(1.0, &grid, 300, 31);
        let spec = WindowSpec { k_max: 2, base_time: 4.0 };
        let tau = 6.0;
        let curve = path_distribution_curve(&ens, &spec, &[tau]).unwrap();

        let mu = window_law(&ens, &spec, None).unwrap();
        let shifted = WindowSpec { k_max: 2, base_time: spec.base_time + tau };
        let nu = window_law(&ens, &shifted, None).unwrap();
        assert_eq!(bl_distance(&mu, &nu).unwrap().value, curve.values[0]);

        let lo = window_law(&ens, &spec, Some(false)).unwrap();
        let hi = window_law(&ens, &spec, Some(true)).unwrap();
        assert_eq!(bl_distance(&lo, &hi).unwrap().value, curve.noise_floor);
    }

    #[test]
    fn stationary_onedim_curve_sits_at_the_noise_floor() {
        let grid = TimeGrid::new(0.0, 0.25, 160).unwrap();
        let ens = ou(1.0, &grid, 4000, 23);
        let c = onedim_distribution_curve(&ens, &[10.0], &[5.0, 10.0, 20.0]).unwrap();
        assert!(c.noise_floor > 0.0);
        for (tau, ratio) in c.shifts.iter().zip(&c.ratios) {
            assert!(*ratio <= 2.0, "shift {tau}: ratio {ratio} (floor {})", c.noise_floor);
        }
        for v in &c.values {
            assert!((0.0..=2.0).contains(v));
        }
    }

    #[test]
    fn anchored_sum_process_breaks_flatness() {
        // Z(t) = X(t) + X(0) for stationary unit-variance X: the law at 0
        // is N(0,4) but at t = 20 it is essentially N(0,2), so the curve
        // must rise far above the floor
        let grid = TimeGrid::new(0.0, 0.25, 120).unwrap();
        let x = ou(1.0, &grid, 4000, 31);
        let z = broadcast_value(&x, 0.0).unwrap();
        let c = onedim_distribution_curve(&z, &[0.0], &[20.0]).unwrap();
        assert!(
            c.values[0] > 5.0 * c.noise_floor,
            "value {} vs floor {}",
            c.values[0],
            c.noise_floor
        );
    }

    #[test]
    fn single_time_tuple_reduces_to_the_scalar_curve_exactly() {
        let grid = TimeGrid::new(0.0, 0.25, 80).unwrap();
        let ens = ou(1.0, &grid, 600, 7);
        let a = onedim_distribution_curve(&ens, &[3.0], &[1.0, 2.0]).unwrap();
        let b = findim_distribution_curve(&ens, &[vec![3.0]], &[1.0, 2.0]).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.noise_floor, b.noise_floor);
    }

    #[test]
    fn stationary_pair_tuple_stays_at_the_floor() {
        let grid = TimeGrid::new(0.0, 0.25, 120).unwrap();
        let ens = ou(1.0, &grid, 1200, 41);
        let c = findim_distribution_curve(&ens, &[vec![10.0, 11.0]], &[5.0, 10.0]).unwrap();
        for ratio in &c.ratios {
            assert!(*ratio <= 2.0, "ratio {ratio} (floor {})", c.noise_floor);
        }
    }

    #[test]
    fn drifted_ensemble_tuple_shift_matches_the_translation_oracle() {
        // adding the deterministic ramp t to a tight stationary ensemble
        // makes the shifted marginal a near-translate; in one dimension the
        // chain distance then equals 1 + (mean(atoms at t=1) - mean(atoms
        // at t=0)) exactly, because the quantile coupling moves every atom
        // by that signed amount and nothing hits the truncation
        let grid = TimeGrid::new(0.0, 0.25, 40).unwrap();
        let base = ou(0.01, &grid, 600, 13);
        let drifted = map_ensemble(&base, 1, |t, s, out| out[0] = s[0] + t).unwrap();
        let c = findim_distribution_curve(&drifted, &[vec![0.0]], &[1.0]).unwrap();
        let j1 = grid.index_of(1.0).unwrap();
        let (mut m0, mut m1) = (0.0, 0.0);
        for m in 0..drifted.paths {
            m0 += drifted.value(m, 0, 0);
            m1 += drifted.value(m, j1, 0);
        }
        // the ramp contributes the +1 inside m1, so the oracle is the raw
        // mean gap between the two atom clouds
        let expected = (m1 - m0) / drifted.paths as f64;
        assert!(
            (c.values[0] - expected).abs() <= 1e-9,
            "distance {} vs oracle {expected}",
            c.values[0]
        );

        // degenerate variant: zero noise gives exact unit point masses
        let flat = ou(0.0, &grid, 50, 1);
        let ramp = map_ensemble(&flat, 1, |t, s, out| out[0] = s[0] + t).unwrap();
        let d = findim_distribution_curve(&ramp, &[vec![0.0]], &[1.0]).unwrap();
        assert!((d.values[0] - 1.0).abs() <= 1e-12);
        assert!(d.noise_floor == 0.0);
        assert!(d.ratios[0].is_infinite());
    }

    #[test]
    fn deterministic_ramp_path_curve_grows_then_saturates() {
        // single path atom t -> t: at window depth 3 the metric value for a
        // time shift tau is (2^-1 + 2^-2 + 2^-3) min(1, tau) exactly
        let grid = TimeGrid::new(-10.0, 0.25, 80).unwrap();
        let flat = ou(0.0, &grid, 40, 3);
        let ramp = map_ensemble(&flat, 1, |t, s, out| out[0] = s[0] + t).unwrap();
        let spec = WindowSpec { k_max: 3, base_time: 0.0 };
        let c = path_distribution_curve(&ramp, &spec, &[0.5, 1.0, 3.0]).unwrap();
        let w = 0.875; // 2^-1 + 2^-2 + 2^-3
        for (got, want) in c.values.iter().zip([0.5 * w, w, w]) {
            assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        }
        assert!(c.values[0] < c.values[1]);
        assert_eq!(c.values[1], c.values[2]);
    }

    #[test]
    fn dropping_window_levels_never_increases_the_path_distance() {
        let grid = TimeGrid::new(0.0, 0.25, 120).unwrap();
        let ens = ou(1.0, &grid, 400, 17);
        let shifts = [2.0, 6.0];
        let deep = path_distribution_curve(
            &ens,
            &WindowSpec { k_max: 3, base_time: 10.0 },
            &shifts,
        )
        .unwrap();
        let shallow = path_distribution_curve(
            &ens,
            &WindowSpec { k_max: 2, base_time: 10.0 },
            &shifts,
        )
        .unwrap();
        for (s, d) in shallow.values.iter().zip(&deep.values) {
            assert!(s <= &(d + 1e-9), "shallow {s} vs deep {d}");
        }
    }

    #[test]
    fn stationary_path_curve_stays_at_the_floor() {
        let grid = TimeGrid::new(0.0, 0.25, 120).unwrap();
        let ens = ou(1.0, &grid, 1600, 29);
        let spec = WindowSpec { k_max: 3, base_time: 10.0 };
        let c = path_distribution_curve(&ens, &spec, &[4.0, 8.0]).unwrap();
        for ratio in &c.ratios {
            assert!(*ratio <= 2.0, "ratio {ratio} (floor {})", c.noise_floor);
        }
    }

    #[test]
    fn randomized_translations_keep_the_consistency_identity_exact() {
        let grid = TimeGrid::new(-10.0, 0.25, 120).unwrap();
        let ens = ou(1.0, &grid, 300, 53);
        let spec = WindowSpec { k_max: 2, base_time: -2.0 };
        let mut rng = CounterRng::from_parts(99, 0, "consistency-draws");
        for _ in 0..10 {
            // keep base + t and its window inside [-10, 20]
            let k = (rng.uniform() * 57.0).floor() as i64 - 20; // steps of 0.25 in [-5, 9]
            let t = k as f64 * 0.25;
            let rep = consistency_relation_check(&ens, t, &spec).unwrap();
            assert!(rep.pass, "t = {t} gave nonzero distance {}", rep.value);
            assert_eq!(rep.value, 0.0);
        }
    }

    #[test]
    fn zero_residual_decomposition_reports_zero_curve() {
        let grid = TimeGrid::new(-20.0, 0.25, 160).unwrap();
        let y = ou(1.0, &grid, 500, 61);
        let x = y.clone();
        let spec = WindowSpec { k_max: 2, base_time: 0.0 };
        let rep = paa_p_distribution_check(
            &x,
            &y,
            2.0,
            &WeightMeasure::lebesgue(),
            &[5.0, 15.0],
            &[4.0],
            &spec,
        )
        .unwrap();
        assert!(rep.residual_curve.values.iter().all(|v| *v == 0.0));
        assert!(rep.y_onedim.ui.is_some());
        assert!(rep.y_path.values[0] <= 2.0);
    }

    #[test]
    fn deterministic_residual_curve_matches_the_arctan_oracle() {
        // Z(t) = 1/(1 + t^2) deterministic: mean |Z|^p then the 1/p root is
        // |Z| itself for every p, and its Lebesgue window mean is
        // arctan(r)/r in closed form
        let grid = TimeGrid::new(-50.0, 0.05, 2000).unwrap();
        let y = ou(1.0, &grid, 200, 71);
        let spec_fn = FunctionSpec::erg1();
        let x = map_ensemble(&y, 1, |t, s, out| out[0] = s[0] + spec_fn.eval(t)).unwrap();
        let radii = [5.0, 20.0, 45.0];
        let spec = WindowSpec { k_max: 1, base_time: 0.0 };
        for p in [2.0, 0.0] {
            let rep = paa_p_distribution_check(
                &x,
                &y,
                p,
                &WeightMeasure::lebesgue(),
                &radii,
                &[10.0],
                &spec,
            )
            .unwrap();
            for (r, got) in radii.iter().zip(&rep.residual_curve.values) {
                let want = r.atan() / r;
                assert!(
                    (got - want).abs() < 1e-3,
                    "p = {p}, r = {r}: curve {got} vs arctan oracle {want}"
                );
            }
            assert_eq!(rep.y_onedim.ui.is_some(), p > 0.0);
        }
    }

    #[test]
    fn shape_and_range_validation() {
        let grid = TimeGrid::new(0.0, 0.25, 40).unwrap();
        let ens = ou(1.0, &grid, 60, 5);

        assert!(onedim_distribution_curve(&ens, &[], &[1.0]).is_err());
        assert!(onedim_distribution_curve(&ens, &[0.0], &[]).is_err());
        assert!(matches!(
            onedim_distribution_curve(&ens, &[0.0], &[100.0]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(findim_distribution_curve(&ens, &[vec![0.0; 5]], &[1.0]).is_err());

        let two_d = map_ensemble(&ens, 2, |_, s, out| {
            out[0] = s[0];
            out[1] = -s[0];
        })
        .unwrap();
        assert!(findim_distribution_curve(&two_d, &[vec![0.0]], &[1.0]).is_err());
        assert!(path_distribution_curve(&two_d, &WindowSpec { k_max: 1, base_time: 5.0 }, &[1.0])
            .is_err());
        // vector states are fine for one-time marginals (dense route)
        assert!(onedim_distribution_curve(&two_d, &[2.0], &[1.0]).is_ok());

        assert!(path_distribution_curve(&ens, &WindowSpec { k_max: 0, base_time: 5.0 }, &[1.0])
            .is_err());
        // window reaching past the grid edge
        assert!(matches!(
            path_distribution_curve(&ens, &WindowSpec { k_max: 3, base_time: 1.0 }, &[1.0]),
            Err(Error::OutOfRange { .. })
        ));
        // grid step that does not divide the unit interval
        let odd = TimeGrid::new(0.0, 0.3, 40).unwrap();
        let odd_ens = ou(1.0, &odd, 60, 5);
        assert!(path_distribution_curve(
            &odd_ens,
            &WindowSpec { k_max: 1, base_time: 6.0 },
            &[0.6]
        )
        .is_err());

        let other = ou(1.0, &TimeGrid::new(0.0, 0.25, 30).unwrap(), 60, 5);
        assert!(paa_p_distribution_check(
            &ens,
            &other,
            2.0,
            &WeightMeasure::lebesgue(),
            &[1.0],
            &[1.0],
            &WindowSpec { k_max: 1, base_time: 5.0 }
        )
        .is_err());
    }

    #[test]
    fn curve_serializes_to_the_expected_csv_shape() {
        let grid = TimeGrid::new(0.0, 0.25, 40).unwrap();
        let ens = ou(1.0, &grid, 100, 5);
        let c = onedim_distribution_curve(&ens, &[2.0], &[1.0, 4.0]).unwrap();
        let csv = c.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "shift,d_bl,noise_floor,ratio");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn subsampling_is_deterministic_and_respects_the_cap() {
        let a = subsample_indices(10_000, 500, 0);
        let b = subsample_indices(10_000, 500, 0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        let c = subsample_indices(10_000, 500, 1);
        assert_ne!(a, c);
        assert_eq!(subsample_indices(300, 500, 0), (0..300).collect::<Vec<_>>());
    }
}
