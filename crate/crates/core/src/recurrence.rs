//! Recurrence diagnostics: almost-period scans, double-shift (automorphy)
//! probes, and residual averaging.
//!
//! These are finite-window, finite-grid probes of properties that are defined
//! by limits, so every verdict is phrased as `consistent-with` or `refutes`:
//! a scan can certify a counterexample on the probed grid, but it can only
//! ever be consistent with (never prove) the limiting property.
//!
//! The double-shift probe follows the classical recipe: given a shift
//! sequence `s_1 < ... < s_N`, treat `g(t) = f(t + s_N)` as the putative
//! limit along the tail, measure
//!
//! ```text
//! cauchy oscillation   sup_t max_{i<j in tail} |f(t + s_i) - f(t + s_j)|
//! return moduli        sup_t |f(t - s_n + s_N) - f(t)|   for tail s_n
//! ```
//!
//! over the observation window, and call the pair consistent when both stay
//! under the tolerance. Only the last three shifts enter (the prefix of the
//! sequence is scaffolding for the caller's subsequence bookkeeping); a test
//! pins that invariance.

use crate::error::{Error, Result};
use crate::functions::SampledFunction;
use crate::measures::{ergodic_mean_fn, ErgodicMeanCurve, WeightMeasure};
use serde::Serialize;

/// Sup-norm scans cap their recorded witnesses at this many entries;
/// `witness_count` still reports the true total.
pub const WITNESS_CAP: usize = 100;

/// Observation window `[-half_width, half_width]` sampled at `step`.
#[derive(Debug, Clone, Serialize)]
pub struct WindowGrid {
    pub half_width: f64,
    pub step: f64,
}

impl Default for WindowGrid {
    fn default() -> Self {
        WindowGrid { half_width: 10.0, step: 0.01 }
    }
}

impl WindowGrid {
    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !(self.step > 0.0) || self.step > self.half_width {
            return Err(Error::InvalidArgument(
                "window needs 0 < step <= half_width".into(),
            ));
        }
        Ok(())
    }

    fn n_points(&self) -> usize {
        (2.0 * self.half_width / self.step).round() as usize + 1
    }

    fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWith,
    Refutes,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWith => "consistent-with",
            Verdict::Refutes => "refutes",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub location: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub test: String,
    pub parameters: Vec<(String, f64)>,
    pub verdict: Verdict,
    pub moduli: Vec<(String, f64)>,
    pub witnesses: Vec<Witness>,
    pub witness_count: usize,
}

impl RecurrenceReport {
    pub fn modulus(&self, name: &str) -> Option<f64> {
        self.moduli.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

/// Sup over the window with its argmax; rejects non-finite samples.
fn window_sup(window: &WindowGrid, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let mut sup = f64::NEG_INFINITY;
    let mut arg = window.point(0);
    for j in 0..window.n_points() {
        let t = window.point(j);
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::NonFinite { t, value: v });
        }
        if v > sup {
            sup = v;
            arg = t;
        }
    }
    Ok((sup, arg))
}

/// Scan shifts `tau = 0, shift_step, ..., shift_max` for eps-almost periods:
/// `sup_window |f(t + tau) - f(t)| <= eps`. The verdict compares the largest
/// gap between qualifying shifts (boundary gaps included) against
/// `density_len` (default `shift_max / 10`), a proxy for relative density of
/// the almost-period set.
pub fn almost_period_scan(
    f: &SampledFunction,
    eps: f64,
    shift_max: f64,
    shift_step: f64,
    window: &WindowGrid,
    density_len: Option<f64>,
) -> Result<RecurrenceReport> {
    window.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    if !(shift_step > 0.0) || !(shift_max > shift_step) {
        return Err(Error::InvalidArgument("need 0 < shift_step < shift_max".into()));
    }
    let density_len = density_len.unwrap_or(shift_max / 10.0);
    if !(density_len > 0.0) {
        return Err(Error::InvalidArgument("density_len must be positive".into()));
    }

    let n_tau = (shift_max / shift_step).floor() as usize;
    let mut qualifying: Vec<(f64, f64)> = Vec::new();
    for k in 0..=n_tau {
        let tau = k as f64 * shift_step;
        let (dev, _) = window_sup(window, |t| (f.eval(t + tau) - f.eval(t)).abs())?;
        if dev <= eps {
            qualifying.push((tau, dev));
        }
    }

    let mut max_gap = shift_max; // no qualifier at all
    if !qualifying.is_empty() {
        max_gap = qualifying[0].0; // leading boundary gap
        for w in qualifying.windows(2) {
            max_gap = max_gap.max(w[1].0 - w[0].0);
        }
        max_gap = max_gap.max(shift_max - qualifying.last().unwrap().0);
    }

    let witness_count = qualifying.len();
    let witnesses = qualifying
        .iter()
        .take(WITNESS_CAP)
        .map(|&(tau, dev)| Witness { location: tau, value: dev })
        .collect();
    let verdict =
        if max_gap <= density_len { Verdict::ConsistentWith } else { Verdict::Refutes };
    Ok(RecurrenceReport {
        test: "almost-period-scan".into(),
        parameters: vec![
            ("eps".into(), eps),
            ("shift_max".into(), shift_max),
            ("shift_step".into(), shift_step),
            ("window_half_width".into(), window.half_width),
            ("window_step".into(), window.step),
            ("density_len".into(), density_len),
        ],
        verdict,
        moduli: vec![
            ("max-gap".into(), max_gap),
            ("qualifying-fraction".into(), witness_count as f64 / (n_tau + 1) as f64),
            ("density-length".into(), density_len),
        ],
        witnesses,
        witness_count,
    })
}

fn check_shift_args(shifts: &[f64], tol: f64, window: &WindowGrid) -> Result<()> {
    window.validate()?;
    if shifts.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 shifts (a prefix plus a tail of 3), got {}",
            shifts.len()
        )));
    }
    if shifts.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("shifts must be finite".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(())
}

/// Double-shift probe along the tail of `shifts` (see the module doc).
/// Moduli: `cauchy-oscillation` plus one `return-sup-*` per tail shift; the
/// witnesses record the argmax window position of each modulus in the same
/// order.
pub fn aa_double_shift_test(
    f: &SampledFunction,
    shifts: &[f64],
    tol: f64,
    window: &WindowGrid,
) -> Result<RecurrenceReport> {
    check_shift_args(shifts, tol, window)?;
    let tail = &shifts[shifts.len() - 3..];
    let s_last = tail[2];

    let (worst_osc, osc_arg) = window_sup(window, |t| {
        let a = f.eval(t + tail[0]);
        let b = f.eval(t + tail[1]);
        let c = f.eval(t + tail[2]);
        (a - b).abs().max((a - c).abs()).max((b - c).abs())
    })?;

    let mut moduli = vec![("cauchy-oscillation".to_string(), worst_osc)];
    let mut witnesses = vec![Witness { location: osc_arg, value: worst_osc }];
    let mut worst_return = f64::NEG_INFINITY;
    for &s in tail {
        let (ret, arg) = window_sup(window, |t| (f.eval(t - s + s_last) - f.eval(t)).abs())?;
        moduli.push((format!("return-sup-tau-{s:.4}"), ret));
        witnesses.push(Witness { location: arg, value: ret });
        worst_return = worst_return.max(ret);
    }

    let verdict = if worst_osc <= tol && worst_return <= tol {
        Verdict::ConsistentWith
    } else {
        Verdict::Refutes
    };
    let witness_count = witnesses.len();
    Ok(RecurrenceReport {
        test: "aa-double-shift".into(),
        parameters: vec![
            ("tol".into(), tol),
            ("shift_count".into(), shifts.len() as f64),
            ("window_half_width".into(), window.half_width),
            ("window_step".into(), window.step),
        ],
        verdict,
        moduli,
        witnesses,
        witness_count,
    })
}

/// Stronger uniformity probe: consecutive moduli
/// `c_n = sup_t |f(t + s_{n+1}) - f(t + s_n)|` for every consecutive pair,
/// and the same return moduli as the double-shift probe but for every shift.
/// Consistency requires the last two `c_n` and last three return moduli under
/// `tol`. When the shifts make `f(t + s_n)` uniformly Cauchy this probe and
/// the double-shift one agree; a gap between them flags convergence that is
/// pointwise but not uniform.
pub fn compact_aa_uniformity(
    f: &SampledFunction,
    shifts: &[f64],
    tol: f64,
    window: &WindowGrid,
) -> Result<RecurrenceReport> {
    check_shift_args(shifts, tol, window)?;
    let s_last = *shifts.last().unwrap();

    let mut moduli = Vec::new();
    let mut witnesses = Vec::new();
    let mut consec = Vec::new();
    for n in 0..shifts.len() - 1 {
        let (a, b) = (shifts[n], shifts[n + 1]);
        let (c, arg) = window_sup(window, |t| (f.eval(t + b) - f.eval(t + a)).abs())?;
        moduli.push((format!("consecutive-{n}"), c));
        witnesses.push(Witness { location: arg, value: c });
        consec.push(c);
    }
    let mut returns = Vec::new();
    for (n, &s) in shifts.iter().enumerate() {
        let (r, arg) = window_sup(window, |t| (f.eval(t - s + s_last) - f.eval(t)).abs())?;
        moduli.push((format!("return-{n}"), r));
        witnesses.push(Witness { location: arg, value: r });
        returns.push(r);
    }

    let tail_ok = consec[consec.len() - 2..].iter().all(|c| *c <= tol)
        && returns[returns.len() - 3..].iter().all(|r| *r <= tol);
    let verdict = if tail_ok { Verdict::ConsistentWith } else { Verdict::Refutes };

    let witness_count = witnesses.len();
    witnesses.truncate(WITNESS_CAP);
    Ok(RecurrenceReport {
        test: "compact-aa-uniformity".into(),
        parameters: vec![
            ("tol".into(), tol),
            ("shift_count".into(), shifts.len() as f64),
            ("window_half_width".into(), window.half_width),
            ("window_step".into(), window.step),
        ],
        verdict,
        moduli,
        witnesses,
        witness_count,
    })
}

/// Clipped weighted mean of the residual `|f - g|`: the curve that must
/// vanish along the radius ladder for `g` to absorb the recurrent part of
/// `f`. Clipping at 1 keeps a single excursion from dominating the average.
pub fn paa_residual_test(
    f: &SampledFunction,
    g: &SampledFunction,
    mu: &WeightMeasure,
    radii: &[f64],
) -> Result<ErgodicMeanCurve> {
    ergodic_mean_fn(|t| f.eval(t) - g.eval(t), mu, radii, true)
}
