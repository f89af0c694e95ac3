//! ergolab: a numerical laboratory for recurrence and ergodicity diagnostics
//! of stochastic processes.
//!
//! The crate provides, roughly bottom-up:
//!
//! * [`functions`]: closed-form expression trees and grid-sampled functions of time,
//!   with a small catalog of recurrence benchmarks.
//! * [`measures`]: locally finite weight measures on the line, weighted ergodic means,
//!   and structural checks on the weights (translation-boundedness probes, half-line
//!   mass fractions, vanishing-time sequences).
//! * [`seminorms`]: Stepanov / Weyl / Besicovitch window seminorms with explicit
//!   scan ladders.
//! * [`recurrence`]: almost-period scans and double-shift (return) tests for
//!   almost-automorphy-style recurrence, plus clipped ergodic residuals.
//! * [`processes`]: deterministic path ensembles on uniform grids. The
//!   Ornstein-Uhlenbeck sampler uses the exact transition kernel; every path is a
//!   pure function of (seed root, path index, generator id, parameters).
//! * [`empirical`]: empirical measures with exact bounded-Lipschitz distance
//!   (dual transportation solver plus a 1-D chain solver), a brute-force grid
//!   oracle, uniform-integrability profiles, and tightness moduli.
//! * [`sde`]: semilinear mild-solution simulation with a diagonal stable linear part,
//!   Picard iteration with frozen noise, contraction-rate measurement, and
//!   convolution-inequality checkers.
//! * [`diagnostics`]: distribution-flatness curves (one-dimensional, finite-dimensional,
//!   and path-space marginals) against a split-half noise floor.
//! * [`experiments`]: config-driven scenario runners emitting CSV bundles and verdicts
//!   re-derived from the emitted tables by an independent judge step.

pub mod cli;
pub mod diagnostics;
pub mod empirical;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod measures;
pub mod processes;
pub mod quad;
pub mod recurrence;
pub mod rng;
pub mod sde;
pub mod seminorms;

pub use error::{Error, Result};
