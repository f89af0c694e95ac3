//! Deterministic functions of real time: closed-form expression trees and
//! grid-sampled functions, plus the benchmark catalog.
//!
//! The expression language is intentionally small. Primitives:
//! constants, affine time maps `a*t + b`, `sin`, `cos`, `tanh`, `exp`,
//! absolute value, reciprocal with a nonnegative floor, sums, and products.
//! Composition is expressed by nesting.

use crate::error::{Error, Result};

/// Reciprocal arguments smaller than this in magnitude are treated as this
/// magnitude (sign preserved) when the floor is zero, so `sin(1/u)`-style
/// expressions stay evaluable at denominator near-zeros.
pub const RECIP_CLAMP_EPS: f64 = 1e-12;

/// Closed-form expression tree over time.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Const(f64),
    /// `a*t + b`
    Affine { a: f64, b: f64 },
    Sin(Box<FunctionSpec>),
    Cos(Box<FunctionSpec>),
    Tanh(Box<FunctionSpec>),
    Exp(Box<FunctionSpec>),
    Abs(Box<FunctionSpec>),
    /// `1/u` with `|u|` floored at `floor`. With `floor = 0` the reciprocal is
    /// unfloored and near-zeros are clamped to `1/RECIP_CLAMP_EPS` (sign kept).
    Recip { floor: f64, arg: Box<FunctionSpec> },
    Add(Box<FunctionSpec>, Box<FunctionSpec>),
    Mul(Box<FunctionSpec>, Box<FunctionSpec>),
}

impl FunctionSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FunctionSpec::Const(c) => *c,
            FunctionSpec::Affine { a, b } => a * t + b,
            FunctionSpec::Sin(e) => e.eval(t).sin(),
            FunctionSpec::Cos(e) => e.eval(t).cos(),
            FunctionSpec::Tanh(e) => e.eval(t).tanh(),
            FunctionSpec::Exp(e) => e.eval(t).exp(),
            FunctionSpec::Abs(e) => e.eval(t).abs(),
            FunctionSpec::Recip { floor, arg } => {
                let u = arg.eval(t);
                let m = u.abs().max(*floor);
                let m = if m < RECIP_CLAMP_EPS { RECIP_CLAMP_EPS } else { m };
                let s = if u < 0.0 { -1.0 } else { 1.0 };
                s / m
            }
            FunctionSpec::Add(x, y) => x.eval(t) + y.eval(t),
            FunctionSpec::Mul(x, y) => x.eval(t) * y.eval(t),
        }
    }

    pub fn time() -> Self {
        FunctionSpec::Affine { a: 1.0, b: 0.0 }
    }

    pub fn scaled(c: f64, e: FunctionSpec) -> Self {
        FunctionSpec::Mul(Box::new(FunctionSpec::Const(c)), Box::new(e))
    }

    pub fn sum(x: FunctionSpec, y: FunctionSpec) -> Self {
        FunctionSpec::Add(Box::new(x), Box::new(y))
    }

    /// The translate `t -> self(t + gamma)`, exact over the whole language:
    /// time enters only through affine leaves, so shifting rewrites
    /// `a*t + b` into `a*t + (b + a*gamma)`.
    pub fn shifted(&self, gamma: f64) -> FunctionSpec {
        match self {
            FunctionSpec::Const(c) => FunctionSpec::Const(*c),
            FunctionSpec::Affine { a, b } => FunctionSpec::Affine { a: *a, b: b + a * gamma },
            FunctionSpec::Sin(e) => FunctionSpec::Sin(Box::new(e.shifted(gamma))),
            FunctionSpec::Cos(e) => FunctionSpec::Cos(Box::new(e.shifted(gamma))),
            FunctionSpec::Tanh(e) => FunctionSpec::Tanh(Box::new(e.shifted(gamma))),
            FunctionSpec::Exp(e) => FunctionSpec::Exp(Box::new(e.shifted(gamma))),
            FunctionSpec::Abs(e) => FunctionSpec::Abs(Box::new(e.shifted(gamma))),
            FunctionSpec::Recip { floor, arg } => {
                FunctionSpec::Recip { floor: *floor, arg: Box::new(arg.shifted(gamma)) }
            }
            FunctionSpec::Add(x, y) => {
                FunctionSpec::Add(Box::new(x.shifted(gamma)), Box::new(y.shifted(gamma)))
            }
            FunctionSpec::Mul(x, y) => {
                FunctionSpec::Mul(Box::new(x.shifted(gamma)), Box::new(y.shifted(gamma)))
            }
        }
    }

    /// `sin(a t) + sin(b t)`: almost periodic for any frequency pair.
    pub fn ap2(a: f64, b: f64) -> Self {
        FunctionSpec::sum(
            FunctionSpec::Sin(Box::new(FunctionSpec::Affine { a, b: 0.0 })),
            FunctionSpec::Sin(Box::new(FunctionSpec::Affine { a: b, b: 0.0 })),
        )
    }

    /// `sin(1/(2 + cos t + cos(sqrt2 t)))`: the classic recurrent-but-not-uniform
    /// benchmark. The denominator approaches 0 without attaining it; evaluation
    /// clamps the reciprocal near the spikes (see [`RECIP_CLAMP_EPS`]).
    pub fn levitan() -> Self {
        let denom = FunctionSpec::sum(
            FunctionSpec::Const(2.0),
            FunctionSpec::sum(
                FunctionSpec::Cos(Box::new(FunctionSpec::time())),
                FunctionSpec::Cos(Box::new(FunctionSpec::Affine {
                    a: std::f64::consts::SQRT_2,
                    b: 0.0,
                })),
            ),
        );
        FunctionSpec::Sin(Box::new(FunctionSpec::Recip {
            floor: 0.0,
            arg: Box::new(denom),
        }))
    }

    /// `1/(1 + t^2)`: integrable, vanishes at infinity.
    pub fn erg1() -> Self {
        let one_plus_t2 = FunctionSpec::sum(
            FunctionSpec::Const(1.0),
            FunctionSpec::Mul(Box::new(FunctionSpec::time()), Box::new(FunctionSpec::time())),
        );
        FunctionSpec::Recip { floor: 1.0, arg: Box::new(one_plus_t2) }
    }

    /// `exp(-|t|)`: integrable with a kink at 0.
    pub fn erg2() -> Self {
        FunctionSpec::Exp(Box::new(FunctionSpec::scaled(
            -1.0,
            FunctionSpec::Abs(Box::new(FunctionSpec::time())),
        )))
    }

    /// Catalog lookup by name, for CLI/config addressing.
    /// `params` are interpreted per entry (only `ap2`, `const` and `sin` take any).
    pub fn from_catalog(name: &str, params: &[f64]) -> Result<Self> {
        match name {
            "ap2" => {
                if params.len() != 2 {
                    return Err(Error::InvalidArgument(
                        "ap2 takes exactly two frequencies".into(),
                    ));
                }
                Ok(FunctionSpec::ap2(params[0], params[1]))
            }
            "levitan" => Ok(FunctionSpec::levitan()),
            "erg1" => Ok(FunctionSpec::erg1()),
            "erg2" => Ok(FunctionSpec::erg2()),
            "const" => {
                if params.len() != 1 {
                    return Err(Error::InvalidArgument("const takes one value".into()));
                }
                Ok(FunctionSpec::Const(params[0]))
            }
            "sin" => {
                let a = match params {
                    [] => 1.0,
                    [a] => *a,
                    _ => {
                        return Err(Error::InvalidArgument(
                            "sin takes at most one frequency".into(),
                        ))
                    }
                };
                Ok(FunctionSpec::Sin(Box::new(FunctionSpec::Affine { a, b: 0.0 })))
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown catalog function '{other}' (known: ap2, levitan, erg1, erg2, const, sin)"
            ))),
        }
    }
}

/// Uniform-grid samples with linear interpolation, clamped to the edge values
/// outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(t0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidArgument("grid function needs finite t0 and step > 0".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("grid function needs at least 2 samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite grid sample {v}")));
        }
        Ok(GridFunction { t0, step, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let u = (t - self.t0) / self.step;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = u.floor() as usize;
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.step * (self.values.len() - 1) as f64
    }
}

/// A deterministic function of real time, evaluable anywhere: either a
/// closed-form expression or grid samples with interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum SampledFunction {
    Expr(FunctionSpec),
    Grid(GridFunction),
}

impl SampledFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SampledFunction::Expr(e) => e.eval(t),
            SampledFunction::Grid(g) => g.eval(t),
        }
    }

    pub fn constant(c: f64) -> Self {
        SampledFunction::Expr(FunctionSpec::Const(c))
    }
}

impl From<FunctionSpec> for SampledFunction {
    fn from(e: FunctionSpec) -> Self {
        SampledFunction::Expr(e)
    }
}

impl From<GridFunction> for SampledFunction {
    fn from(g: GridFunction) -> Self {
        SampledFunction::Grid(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ap2_evaluates_as_sum_of_sines() {
        let f = FunctionSpec::ap2(1.0, std::f64::consts::SQRT_2);
        for &t in &[0.0f64, 0.7, -3.2, 11.0] {
            let want = t.sin() + (std::f64::consts::SQRT_2 * t).sin();
            assert!((f.eval(t) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn shifted_tree_agrees_with_shifted_argument() {
        let catalog = [
            FunctionSpec::ap2(1.0, std::f64::consts::SQRT_2),
            FunctionSpec::levitan(),
            FunctionSpec::erg1(),
            FunctionSpec::erg2(),
            FunctionSpec::scaled(0.3, FunctionSpec::Exp(Box::new(FunctionSpec::time()))),
        ];
        for f in &catalog {
            for &gamma in &[0.0f64, 0.5, -7.25, 31.0] {
                let g = f.shifted(gamma);
                for &t in &[-4.1f64, 0.0, 0.3, 2.0, 9.9] {
                    let want = f.eval(t + gamma);
                    assert!(
                        (g.eval(t) - want).abs() <= 1e-9 * (1.0 + want.abs()),
                        "shift {gamma} at t={t}: {} vs {want}",
                        g.eval(t)
                    );
                }
            }
        }
    }

    #[test]
    fn erg1_is_floored_reciprocal() {
        let f = FunctionSpec::erg1();
        assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((f.eval(3.0) - 0.1).abs() < 1e-15);
        assert!((f.eval(-3.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn erg2_has_kink_at_zero() {
        let f = FunctionSpec::erg2();
        assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((f.eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((f.eval(-1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn levitan_stays_bounded_and_clamps_near_zero_denominator() {
        let f = FunctionSpec::levitan();
        // scan a long stretch including denominator dips; output must stay in [-1,1]
        let mut t = -500.0;
        while t <= 500.0 {
            let v = f.eval(t);
            assert!(v.is_finite() && v.abs() <= 1.0, "t={t} v={v}");
            t += 0.37;
        }
        // direct clamp check on the raw primitive
        let r = FunctionSpec::Recip { floor: 0.0, arg: Box::new(FunctionSpec::Const(0.0)) };
        assert_eq!(r.eval(0.0), 1e12);
        let r = FunctionSpec::Recip { floor: 0.0, arg: Box::new(FunctionSpec::Const(-1e-15)) };
        assert_eq!(r.eval(0.0), -1e12);
    }

    #[test]
    fn grid_function_interpolates_and_clamps() {
        let g = GridFunction::new(0.0, 0.5, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(g.eval(0.25), 0.5);
        assert_eq!(g.eval(-5.0), 0.0);
        assert_eq!(g.eval(5.0), 0.0);
        assert_eq!(g.eval(0.5), 1.0);
    }

    #[test]
    fn grid_function_rejects_bad_input() {
        assert!(GridFunction::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn catalog_lookup_rejects_unknown_names_and_bad_arity() {
        assert!(FunctionSpec::from_catalog("nope", &[]).is_err());
        assert!(FunctionSpec::from_catalog("ap2", &[1.0]).is_err());
        assert!(FunctionSpec::from_catalog("const", &[]).is_err());
        assert!(FunctionSpec::from_catalog("ap2", &[1.0, 2.0]).is_ok());
    }
}
