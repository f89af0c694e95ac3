//! Weight measures on the line and weighted ergodic means.
//!
//! A weight measure is given by a pointwise density against Lebesgue measure.
//! All catalog densities are locally integrable with infinite total mass, so
//! they are usable as averaging weights: finite on bounded intervals, mass of
//! `[-r, r]` growing without bound.
//!
//! The ergodic mean of `f` under `mu` at radius `r` is
//!
//! ```text
//! M_r(f) = (1/mu([-r,r])) * int_{-r}^{r} |f| dmu      (optionally |f| ∧ 1)
//! ```
//!
//! and `f` counts as ergodic (mean-vanishing) when `M_r -> 0` along the radius
//! ladder. The clipped variant is what the wide-sense residual tests use, so a
//! single far-out excursion cannot dominate the average.

use crate::error::{Error, Result};
use crate::functions::SampledFunction;
use crate::quad;

/// Density catalog. `Custom` takes any evaluable function; it must be
/// nonnegative on the probed ranges (validated at quadrature time).
#[derive(Debug, Clone)]
pub enum WeightDensity {
    /// density 1
    Lebesgue,
    /// density `1 + |t|^k`
    Polynomial { k: u32 },
    /// density `exp(-a|t|) + 1`; the `+1` keeps total mass infinite
    ExpWindow { a: f64 },
    Custom(SampledFunction),
}

#[derive(Debug, Clone)]
pub struct WeightMeasure {
    pub density: WeightDensity,
}

impl WeightMeasure {
    pub fn lebesgue() -> Self {
        WeightMeasure { density: WeightDensity::Lebesgue }
    }

    pub fn polynomial(k: u32) -> Self {
        WeightMeasure { density: WeightDensity::Polynomial { k } }
    }

    pub fn exp_window(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidMeasure("exp_window rate must be positive".into()));
        }
        Ok(WeightMeasure { density: WeightDensity::ExpWindow { a } })
    }

    pub fn custom(f: SampledFunction) -> Self {
        WeightMeasure { density: WeightDensity::Custom(f) }
    }

    pub fn density_at(&self, t: f64) -> f64 {
        match &self.density {
            WeightDensity::Lebesgue => 1.0,
            WeightDensity::Polynomial { k } => 1.0 + t.abs().powi(*k as i32),
            WeightDensity::ExpWindow { a } => (-a * t.abs()).exp() + 1.0,
            WeightDensity::Custom(f) => f.eval(t),
        }
    }

    /// Measure of an interval `[a, b]`, by the shared quadrature.
    /// Negative or non-finite density samples invalidate the measure.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::InvalidArgument(format!("interval [{a}, {b}] is reversed")));
        }
        let v = quad::integrate(|t| self.density_at(t), a, b).map_err(invalidate)?;
        if v < -1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "density integrates negative on [{a}, {b}]: {v}"
            )));
        }
        Ok(v.max(0.0))
    }

    /// Mass of the symmetric window `[-r, r]`, `r > 0`.
    pub fn mass(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument("mass radius must be positive".into()));
        }
        self.interval_mass(-r, r)
    }

    /// Mass of a finite union of intervals.
    pub fn union_mass(&self, intervals: &[(f64, f64)]) -> Result<f64> {
        let mut total = 0.0;
        for &(a, b) in intervals {
            total += self.interval_mass(a, b)?;
        }
        Ok(total)
    }

    /// Numeric probe that total mass is unbounded: window masses at the probe
    /// radii must be strictly increasing and the last must exceed `bound`.
    pub fn validate_unbounded(&self, bound: f64) -> Result<UnboundednessReport> {
        let radii = [1e2, 1e3, 1e4];
        let mut masses = Vec::with_capacity(radii.len());
        for &r in &radii {
            masses.push(self.mass(r)?);
        }
        let increasing = masses.windows(2).all(|w| w[1] > w[0]);
        let pass = increasing && *masses.last().unwrap() > bound;
        Ok(UnboundednessReport { radii: radii.to_vec(), masses, bound, pass })
    }
}

fn invalidate(e: Error) -> Error {
    match e {
        Error::NonFinite { t, value } => {
            Error::InvalidMeasure(format!("non-finite density sample at t = {t}: {value}"))
        }
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct UnboundednessReport {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Weighted ergodic mean curve over a radius ladder; serializes to CSV `(r, value)`.
#[derive(Debug, Clone)]
pub struct ErgodicMeanCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub clipped: bool,
}

impl ErgodicMeanCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            s.push_str(&format!("{r},{v}\n"));
        }
        s
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("curve is never empty")
    }
}

/// Weighted ergodic mean of `|f|` (clipped at 1 when `clip`) over `[-r, r]`
/// for each radius. Radii must be positive and strictly increasing.
pub fn ergodic_mean(
    f: &SampledFunction,
    mu: &WeightMeasure,
    radii: &[f64],
    clip: bool,
) -> Result<ErgodicMeanCurve> {
    ergodic_mean_fn(|t| f.eval(t), mu, radii, clip)
}

/// Same as [`ergodic_mean`] for a plain evaluator, so callers can average
/// quantities that are not catalog functions (residuals, moment curves).
pub fn ergodic_mean_fn(
    f: impl Fn(f64) -> f64,
    mu: &WeightMeasure,
    radii: &[f64],
    clip: bool,
) -> Result<ErgodicMeanCurve> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("ergodic mean needs at least one radius".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument("ergodic mean radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ergodic mean radii must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let denom = mu.mass(r)?;
        if !(denom > 0.0) {
            return Err(Error::InvalidMeasure(format!("mu([-{r}, {r}]) is not positive")));
        }
        let num = quad::integrate(
            |t| {
                let a = f(t).abs();
                let a = if clip { a.min(1.0) } else { a };
                a * mu.density_at(t)
            },
            -r,
            r,
        )
        .map_err(invalidate)?;
        values.push(num / denom);
    }
    Ok(ErgodicMeanCurve { radii: radii.to_vec(), values, clipped: clip })
}

/// One probed translate in the translation-boundedness check.
#[derive(Debug, Clone)]
pub struct TranslationBoundRow {
    pub tau: f64,
    /// max over accepted probe sets of `mu(A + tau)/mu(A)`; infinite when some
    /// probe has `mu(A) = 0` but `mu(A + tau) > 0`.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Report of the translation-boundedness probe. This is a necessary-condition
/// check only: bounded ratios on the probed sets cannot certify the property
/// for all sets, but an unbounded probe refutes it.
#[derive(Debug, Clone)]
pub struct TranslationBoundReport {
    pub rows: Vec<TranslationBoundRow>,
    pub notices: Vec<String>,
    pub pass: bool,
}

/// For each shift `tau`, bound `mu(A + tau)/mu(A)` over probe sets `A`
/// (finite unions of intervals) that avoid the central interval `central`.
/// Probes touching the central interval are rejected with a notice, since the
/// property being probed only constrains sets away from a bounded core.
pub fn check_condition_h(
    mu: &WeightMeasure,
    taus: &[f64],
    probes: &[Vec<(f64, f64)>],
    central: (f64, f64),
) -> Result<TranslationBoundReport> {
    if taus.is_empty() {
        return Err(Error::InvalidArgument("translation check needs at least one tau".into()));
    }
    if probes.is_empty() {
        return Err(Error::InvalidArgument("translation check needs at least one probe set".into()));
    }
    if !(central.0 <= central.1) {
        return Err(Error::InvalidArgument("central interval is reversed".into()));
    }
    let mut notices = Vec::new();
    let mut accepted: Vec<&Vec<(f64, f64)>> = Vec::new();
    for (i, probe) in probes.iter().enumerate() {
        if probe.is_empty() {
            notices.push(format!("probe {i} rejected: empty"));
            continue;
        }
        if probe.iter().any(|&(a, b)| !(a <= b)) {
            notices.push(format!("probe {i} rejected: reversed interval"));
            continue;
        }
        let hits_central = probe.iter().any(|&(a, b)| a <= central.1 && b >= central.0);
        if hits_central {
            notices.push(format!(
                "probe {i} rejected: intersects central interval [{}, {}]",
                central.0, central.1
            ));
            continue;
        }
        accepted.push(probe);
    }
    if accepted.is_empty() {
        return Err(Error::InvalidArgument(
            "all probe sets were rejected; nothing to check".into(),
        ));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut max_ratio: f64 = 0.0;
        for probe in &accepted {
            let base = mu.union_mass(probe)?;
            let shifted: Vec<(f64, f64)> = probe.iter().map(|&(a, b)| (a + tau, b + tau)).collect();
            let moved = mu.union_mass(&shifted)?;
            let ratio = if base > 0.0 {
                moved / base
            } else if moved > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            max_ratio = max_ratio.max(ratio);
        }
        rows.push(TranslationBoundRow { tau, max_ratio, pass: max_ratio.is_finite() });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(TranslationBoundReport { rows, notices, pass })
}

#[derive(Debug, Clone)]
pub struct HalfLineFractionReport {
    pub rows: Vec<(f64, f64)>,
    pub min_ratio: f64,
    pub floor: f64,
    pub pass: bool,
}

/// Fraction of window mass on the right half-line, `mu([0,r]) / mu([-r,r])`,
/// per radius; passes when the minimum stays above `floor` (a liminf proxy).
pub fn check_r_plus(mu: &WeightMeasure, radii: &[f64], floor: f64) -> Result<HalfLineFractionReport> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("half-line check needs radii".into()));
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("half-line floor must be positive".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut min_ratio = f64::INFINITY;
    for &r in radii {
        let whole = mu.mass(r)?;
        if !(whole > 0.0) {
            return Err(Error::InvalidMeasure(format!("mu([-{r}, {r}]) is not positive")));
        }
        let right = mu.interval_mass(0.0, r)?;
        let ratio = right / whole;
        min_ratio = min_ratio.min(ratio);
        rows.push((r, ratio));
    }
    Ok(HalfLineFractionReport { rows, min_ratio, floor, pass: min_ratio > floor })
}

#[derive(Debug, Clone)]
pub struct VanishingSequence {
    pub times: Vec<f64>,
    pub tolerances: Vec<f64>,
    /// true when the horizon ran out before `count` times were found
    pub exhausted: bool,
    /// set when the quick decay probe of the ergodic mean is not decreasing
    pub decay_warning: bool,
    pub diagnostic: Option<String>,
}

/// Scan `[0, horizon]` for times `t_1 < t_2 < ...` with `|f(t_k)| < tol0 * 10^-k`
/// (k = 0-based), a constructive witness that `|f|` dips under ever-smaller
/// thresholds. Returns a partial list with `exhausted = true` when the horizon
/// runs out.
pub fn find_vanishing_sequence(
    f: &SampledFunction,
    mu: &WeightMeasure,
    count: usize,
    horizon: f64,
    tol0: f64,
    scan_step: f64,
) -> Result<VanishingSequence> {
    if count == 0 {
        return Err(Error::InvalidArgument("vanishing sequence needs count >= 1".into()));
    }
    if !(horizon > 0.0) || !(scan_step > 0.0) || scan_step >= horizon {
        return Err(Error::InvalidArgument("need 0 < scan_step < horizon".into()));
    }
    if !(tol0 > 0.0) {
        return Err(Error::InvalidArgument("tol0 must be positive".into()));
    }
    // quick decay probe at three radii: warn unless the widest-window mean
    // dropped well under the narrowest one (or is already essentially zero)
    let probe_radii = [horizon / 100.0, horizon / 10.0, horizon];
    let decay_warning = match ergodic_mean(f, mu, &probe_radii, true) {
        Ok(curve) => {
            let first = curve.values[0];
            let last = *curve.values.last().unwrap();
            !(last < 1e-9 || last <= 0.9 * first + 1e-12)
        }
        Err(_) => true,
    };

    let tolerances: Vec<f64> = (0..count).map(|k| tol0 * 10f64.powi(-(k as i32))).collect();
    let mut times = Vec::with_capacity(count);
    let steps = (horizon / scan_step).floor() as usize;
    let mut j = 0usize;
    for tol in &tolerances {
        let mut found = None;
        while j <= steps {
            let t = j as f64 * scan_step;
            // keep times strictly increasing: always advance the cursor
            j += 1;
            if f.eval(t).abs() < *tol {
                found = Some(t);
                break;
            }
        }
        match found {
            Some(t) => times.push(t),
            None => break,
        }
    }
    let exhausted = times.len() < count;
    let diagnostic = if exhausted {
        Some(format!(
            "horizon {horizon} exhausted after {} of {count} times (next tolerance {})",
            times.len(),
            tolerances[times.len()]
        ))
    } else {
        None
    };
    Ok(VanishingSequence { times, tolerances, exhausted, decay_warning, diagnostic })
}
