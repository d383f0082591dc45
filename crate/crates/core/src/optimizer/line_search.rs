use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strong-Wolfe constants and the evaluation budget of one search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
}

impl Default for WolfeParams {
    fn default() -> Self {
        WolfeParams {
            c1: 1e-4,
            c2: 0.9,
            max_iters: 25,
        }
    }
}

impl WolfeParams {
    pub fn check(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_line_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Both strong-Wolfe conditions hold at `alpha`. When false the budget
    /// ran out and `alpha` is the best point found (0 if nothing decreased).
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Sample {
    alpha: f64,
    value: f64,
    slope: f64,
    gradient: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of the cubic through two samples, or `None` when undefined.
fn cubic_min(a: &Sample, b: &Sample) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Step length satisfying the strong Wolfe conditions along `d`, by
/// bracketing followed by zoom with safeguarded cubic interpolation.
/// Failed evaluations (for example a degenerate rotation far along `d`)
/// count as an infinite value.
pub fn line_search_strong_wolfe<F>(
    mut f: F,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    d: &[f64],
    alpha0: f64,
    params: &WolfeParams,
) -> Result<LineSearchResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let slope0 = dot(gx, d);
    if !(slope0 < 0.0) {
        return Err(Error::NotDescent(slope0));
    }
    let mut evaluations = 0;
    let mut eval = |alpha: f64, evaluations: &mut usize| -> Sample {
        *evaluations += 1;
        let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        match f(&xt) {
            Ok((value, gradient)) if value.is_finite() => Sample {
                alpha,
                value,
                slope: dot(&gradient, d),
                gradient,
            },
            _ => Sample {
                alpha,
                value: f64::INFINITY,
                slope: f64::NAN,
                gradient: Vec::new(),
            },
        }
    };
    let armijo = |s: &Sample| s.value <= fx + params.c1 * s.alpha * slope0;
    let curvature = |s: &Sample| s.slope.abs() <= -params.c2 * slope0;
    let done = |s: Sample, converged: bool, evaluations: usize| LineSearchResult {
        alpha: s.alpha,
        value: s.value,
        gradient: s.gradient,
        converged,
        evaluations,
    };

    let origin = Sample {
        alpha: 0.0,
        value: fx,
        slope: slope0,
        gradient: gx.to_vec(),
    };
    let mut prev = origin.clone();
    let mut alpha = alpha0;
    let (mut lo, mut hi);
    loop {
        let cur = eval(alpha, &mut evaluations);
        if !armijo(&cur) || (prev.alpha > 0.0 && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Ok(done(cur, true, evaluations));
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        if evaluations >= params.max_iters {
            return Ok(done(cur, false, evaluations));
        }
        prev = cur;
        alpha *= 2.0;
    }

    // Zoom: `lo` satisfies Armijo and has the lowest value seen so far.
    while evaluations < params.max_iters {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        let mut t = if hi.value.is_finite() && hi.slope.is_finite() {
            cubic_min(&lo, &hi).unwrap_or(0.5 * (a + b))
        } else {
            0.5 * (a + b)
        };
        if !(t >= a + 0.1 * width && t <= b - 0.1 * width) {
            t = 0.5 * (a + b);
        }
        if width <= f64::EPSILON * b.max(1.0) {
            break;
        }
        let trial = eval(t, &mut evaluations);
        if !armijo(&trial) || trial.value >= lo.value {
            hi = trial;
        } else {
            if curvature(&trial) {
                return Ok(done(trial, true, evaluations));
            }
            if trial.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    if lo.alpha > 0.0 {
        Ok(done(lo, false, evaluations))
    } else {
        Ok(done(origin, false, evaluations))
    }
}
