//! Experiment configuration: one TOML file per run, schema-checked before
//! any computation. Unknown keys are rejected everywhere so a typo cannot
//! silently fall back to a default. The resolved config (all defaults
//! filled in) is embedded in every bundle, which together with the seed
//! makes a run bit-reproducible.

use crate::error::{Error, Result};
use crate::processes::{OuParams, TimeGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The five named scenarios the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    OuCounterexample,
    AnchoredSum,
    AaSolution,
    Decomposition,
    Superposition,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::OuCounterexample,
        Scenario::AnchoredSum,
        Scenario::AaSolution,
        Scenario::Decomposition,
        Scenario::Superposition,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::OuCounterexample => "ou-counterexample",
            Scenario::AnchoredSum => "anchored-sum",
            Scenario::AaSolution => "aa-solution",
            Scenario::Decomposition => "decomposition",
            Scenario::Superposition => "superposition",
        }
    }

    pub fn parse(name: &str) -> Result<Scenario> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown scenario {name:?}; known scenarios: {}",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovCase {
    pub alpha: f64,
    pub sigma: f64,
    pub tau: f64,
}

/// Knobs of the stationary-process counterexample run: covariance spot
/// checks, mean-square gap ladder, and the path-window flatness scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSection {
    /// each case simulates its own ensemble on the shared grid
    pub cov_cases: Vec<CovCase>,
    pub gap_deltas: Vec<f64>,
    /// relative tolerance of the gap estimate against its closed form
    pub gap_tolerance: f64,
    /// path-curve shifts are 1, 2, .., path_shift_count time units
    pub path_shift_count: usize,
    pub window_k: usize,
    pub window_base: f64,
    pub flatness_bound: f64,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        CounterexampleSection {
            cov_cases: vec![
                CovCase { alpha: 1.0, sigma: 1.0, tau: 0.5 },
                CovCase { alpha: 0.5, sigma: 2.0, tau: 1.0 },
            ],
            gap_deltas: vec![0.5, 2.0, 5.0],
            gap_tolerance: 0.05,
            path_shift_count: 20,
            window_k: 3,
            window_base: 4.0,
            flatness_bound: 2.0,
        }
    }
}

/// Knobs of the anchored-sum run Z(t) = X(t) + X(0): variance spot checks,
/// the distance-to-limit-law table, and the one-point flatness refutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchoredSumSection {
    pub probe_times: Vec<f64>,
    pub curve_shift: f64,
    /// the flatness ratio at curve_shift must EXCEED this bound
    pub refute_bound: f64,
}

impl Default for AnchoredSumSection {
    fn default() -> Self {
        AnchoredSumSection {
            probe_times: vec![0.0, 1.0, 5.0, 20.0],
            curve_shift: 20.0,
            refute_bound: 5.0,
        }
    }
}

/// Knobs of the recurrent-coefficient solution run: burn-in, near-period
/// search range, flatness bounds, tail-mass bound, and the fixed-point
/// contraction probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AaSolutionSection {
    pub burn_in: f64,
    pub window_k: usize,
    pub window_base: f64,
    pub shift_count: usize,
    pub shift_min: f64,
    pub shift_max: f64,
    pub flatness_bound: f64,
    pub ui_tail_cutoff: f64,
    pub ui_tail_bound: f64,
    pub contraction_paths: usize,
    pub contraction_steps: usize,
    pub contraction_step: f64,
    pub contraction_iterations: usize,
    pub contraction_bound: f64,
}

impl Default for AaSolutionSection {
    fn default() -> Self {
        AaSolutionSection {
            burn_in: 8.0,
            window_k: 3,
            window_base: 4.0,
            shift_count: 2,
            shift_min: 40.0,
            shift_max: 400.0,
            flatness_bound: 2.0,
            ui_tail_cutoff: 2.0,
            ui_tail_bound: 0.01,
            contraction_paths: 1000,
            contraction_steps: 200,
            contraction_step: 0.01,
            contraction_iterations: 8,
            contraction_bound: 0.2,
        }
    }
}

/// Knobs of the coupled two-model decomposition run and its shifted-
/// coefficient probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionSection {
    pub burn_in: f64,
    pub p: f64,
    /// weight of the averaging measure: "lebesgue", "polynomial-<k>", or
    /// "exp-<a>"
    pub weight: String,
    pub radii: Vec<f64>,
    /// residual mean at the largest radius must fall below this fraction of
    /// its value at the smallest radius
    pub decay_fraction: f64,
    pub window_k: usize,
    pub window_base: f64,
    pub shift_count: usize,
    pub shift_min: f64,
    pub shift_max: f64,
    pub flatness_bound: f64,
    /// the probe re-simulates on its own short grid
    pub probe_t0: f64,
    pub probe_steps: usize,
    pub probe_shift_count: usize,
    pub probe_shift_min: f64,
    pub probe_shift_max: f64,
    pub probe_bound: f64,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        DecompositionSection {
            burn_in: 8.0,
            p: 2.0,
            weight: "lebesgue".into(),
            radii: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            decay_fraction: 0.25,
            window_k: 3,
            window_base: 0.0,
            shift_count: 2,
            shift_min: 20.0,
            shift_max: 380.0,
            flatness_bound: 2.0,
            probe_t0: -8.0,
            probe_steps: 480,
            probe_shift_count: 3,
            probe_shift_min: 10.0,
            probe_shift_max: 300.0,
            probe_bound: 2.0,
        }
    }
}

/// Knobs of the composite-map run over a stationary base process.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuperpositionSection {
    pub window_k: usize,
    pub window_base: f64,
    pub shift_count: usize,
    pub shift_min: f64,
    pub shift_max: f64,
    pub flatness_bound: f64,
    pub radii: Vec<f64>,
    /// absolute tolerance of the residual curve against its closed form
    pub residual_tolerance: f64,
    pub decay_fraction: f64,
    /// composite is aa_scale * clock(t) + lip_scale * tanh x, residual part
    /// is ergodic_scale / (1 + t^2). The clock enters the output additively
    /// with no damping, so the law offset at a near period is exactly
    /// aa_scale times the period's score; keep the scale small enough for
    /// the reachable near periods to clear flatness_bound.
    pub aa_scale: f64,
    pub lip_scale: f64,
    pub ergodic_scale: f64,
}

impl Default for SuperpositionSection {
    fn default() -> Self {
        SuperpositionSection {
            window_k: 3,
            window_base: 0.0,
            shift_count: 2,
            shift_min: 20.0,
            shift_max: 400.0,
            flatness_bound: 3.0,
            radii: vec![10.0, 50.0, 200.0],
            residual_tolerance: 3e-3,
            decay_fraction: 0.25,
            aa_scale: 0.1,
            lip_scale: 0.3,
            ergodic_scale: 0.4,
        }
    }
}

fn default_ou() -> OuParams {
    OuParams { alpha: 1.0, sigma: 1.0 }
}

/// One experiment run: scenario name, seed, ensemble size, time grid, and
/// per-scenario sections (sections irrelevant to the scenario are carried
/// at their defaults so the resolved config is always complete).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    pub paths: usize,
    pub grid: TimeGrid,
    #[serde(default = "default_ou")]
    pub ou: OuParams,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    #[serde(default)]
    pub anchored_sum: AnchoredSumSection,
    #[serde(default)]
    pub aa_solution: AaSolutionSection,
    #[serde(default)]
    pub decomposition: DecompositionSection,
    #[serde(default)]
    pub superposition: SuperpositionSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::parse(&self.scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Structural validation; scenario runners add context-specific checks
    /// (grid alignment of shifts, anchor coverage) before computing.
    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        self.grid.validate().map_err(reword)?;
        self.ou.validate().map_err(reword)?;
        if self.paths < 2 {
            return Err(Error::Config("paths must be at least 2".into()));
        }
        let c = &self.counterexample;
        if c.cov_cases.is_empty() || c.gap_deltas.is_empty() || c.path_shift_count == 0 {
            return Err(Error::Config(
                "counterexample needs cov cases, gap deltas, and at least one shift".into(),
            ));
        }
        if !(c.gap_tolerance > 0.0) || !(c.flatness_bound > 0.0) {
            return Err(Error::Config("counterexample tolerances must be positive".into()));
        }
        let a = &self.anchored_sum;
        if a.probe_times.is_empty() || !(a.refute_bound > 0.0) {
            return Err(Error::Config(
                "anchored-sum needs probe times and a positive refute bound".into(),
            ));
        }
        for s in [&self.aa_solution.shift_min, &self.aa_solution.shift_max] {
            if !s.is_finite() {
                return Err(Error::Config("aa-solution shift range must be finite".into()));
            }
        }
        if self.aa_solution.shift_count == 0 || self.decomposition.shift_count == 0 {
            return Err(Error::Config("shift_count must be at least 1".into()));
        }
        if self.decomposition.probe_shift_count == 0 || self.superposition.shift_count == 0 {
            return Err(Error::Config("shift_count must be at least 1".into()));
        }
        Ok(())
    }
}

fn reword(e: Error) -> Error {
    Error::Config(e.to_string())
}
