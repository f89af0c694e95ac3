//! One-dimensional fast path for the bounded-Lipschitz distance.
//!
//! On the line, the pairwise Lipschitz constraints collapse to adjacent
//! ones: |f_i - f_j| telescopes along the sorted support, and the box
//! |f| <= 1 already enforces the truncation at 2. So the distance is
//!
//!   max sum_i w_i f_i   s.t.  f_i in [-1, 1], |f_{i+1} - f_i| <= z_{i+1} - z_i
//!
//! with w the signed weight difference on the sorted union support. The
//! maximization runs as a dynamic program whose value function in f_i is
//! concave piecewise-linear; a sliding-window max keeps it concave, so each
//! step is a breakpoint surgery instead of a grid. This is what makes
//! distribution curves with thousands of atoms per side affordable.

use crate::error::{Error, Result};

pub(crate) struct ChainSolution {
    pub value: f64,
    /// maximizer at the sorted support points, |f| <= 1
    pub f: Vec<f64>,
}

/// Concave piecewise-linear function on [-1, 1] as breakpoints with
/// strictly increasing x; slopes are nonincreasing left to right.
#[derive(Clone)]
struct Concave {
    pts: Vec<(f64, f64)>,
}

impl Concave {
    fn linear(w: f64) -> Concave {
        Concave { pts: vec![(-1.0, -w), (1.0, w)] }
    }

    /// Argmax interval and max value.
    fn peak(&self) -> (f64, f64, f64) {
        let mut best = f64::NEG_INFINITY;
        for &(_, v) in &self.pts {
            if v > best {
                best = v;
            }
        }
        // the plateau is the contiguous run of breakpoints attaining the max;
        // equality tolerance covers slope arithmetic noise
        let tol = 1e-14 * best.abs().max(1.0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, v) in &self.pts {
            if best - v <= tol {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo, hi, best)
    }

    /// y -> max over x in [y - d, y + d] of self(x), restricted back to
    /// [-1, 1]. Concavity is preserved: the rising flank shifts left by d,
    /// the falling flank shifts right by d, a plateau bridges them.
    fn slide_max(&self, d: f64) -> Concave {
        let (p_lo, p_hi, top) = self.peak();
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.pts.len() + 2);
        for &(x, v) in &self.pts {
            if x < p_lo && top - v > 0.0 {
                pts.push((x - d, v));
            }
        }
        pts.push((p_lo - d, top));
        pts.push((p_hi + d, top));
        for &(x, v) in &self.pts {
            if x > p_hi && top - v > 0.0 {
                pts.push((x + d, v));
            }
        }
        Concave { pts }.clip_unit()
    }

    fn eval(&self, y: f64) -> f64 {
        let pts = &self.pts;
        if y <= pts[0].0 {
            return pts[0].1;
        }
        if y >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let k = pts.partition_point(|&(x, _)| x < y);
        let (x0, v0) = pts[k - 1];
        let (x1, v1) = pts[k];
        if x1 == x0 {
            return v0.max(v1);
        }
        v0 + (v1 - v0) * (y - x0) / (x1 - x0)
    }

    fn clip_unit(&self) -> Concave {
        let mut pts = Vec::with_capacity(self.pts.len() + 2);
        pts.push((-1.0, self.eval(-1.0)));
        for &(x, v) in &self.pts {
            if x > -1.0 && x < 1.0 {
                pts.push((x, v));
            }
        }
        pts.push((1.0, self.eval(1.0)));
        Concave { pts }
    }

    fn add_linear(&mut self, w: f64) {
        for (x, v) in &mut self.pts {
            *v += w * *x;
        }
    }
}

/// Maximize the signed sum over the chain polytope. `z` must be strictly
/// increasing; `w` carries the signed weights (sum ~ 0 for measure pairs,
/// but the solver does not rely on that).
pub(crate) fn solve_chain(z: &[f64], w: &[f64]) -> Result<ChainSolution> {
    let n = z.len();
    if n == 0 || w.len() != n {
        return Err(Error::Solver("chain solver needs matching nonempty inputs".into()));
    }
    if z.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Solver("chain support must be strictly increasing".into()));
    }

    let mut val = Concave::linear(w[0]);
    // plateaus[i] = argmax interval of the value function after atom i,
    // which is all the backtrack needs
    let mut plateaus = Vec::with_capacity(n);
    {
        let (lo, hi, _) = val.peak();
        plateaus.push((lo, hi));
    }
    for i in 1..n {
        let mut next = val.slide_max(z[i] - z[i - 1]);
        next.add_linear(w[i]);
        let (lo, hi, _) = next.peak();
        plateaus.push((lo, hi));
        val = next;
    }
    let (p_lo, p_hi, value) = val.peak();

    let mut f = vec![0.0; n];
    f[n - 1] = 0.0f64.clamp(p_lo, p_hi);
    for i in (0..n - 1).rev() {
        let d = z[i + 1] - z[i];
        let lo = (f[i + 1] - d).max(-1.0);
        let hi = (f[i + 1] + d).min(1.0);
        let (q_lo, q_hi) = plateaus[i];
        // concave value function: clamp toward its plateau inside the window
        f[i] = if hi < q_lo {
            hi
        } else if lo > q_hi {
            lo
        } else {
            f[i + 1].clamp(q_lo.max(lo), q_hi.min(hi))
        };
    }

    // the backtracked point must achieve the DP value; anything else means
    // the breakpoint surgery lost the optimum
    let achieved: f64 = f.iter().zip(w).map(|(fi, wi)| fi * wi).sum();
    if (achieved - value).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(Error::Solver(format!(
            "chain backtrack reached {achieved}, dynamic program claimed {value}"
        )));
    }
    Ok(ChainSolution { value, f })
}
