use crate::dual::Real;
use crate::error::{Error, Result};

/// Quadratic hinge: zero inside `[lo, hi]`, squared excess outside.
pub fn interval_penalty(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    Ok(interval_value(x, lo, hi))
}

pub(crate) fn interval_value<T: Real>(x: T, lo: f64, hi: f64) -> T {
    let v = x.value();
    if v > hi {
        let e = x - T::cst(hi);
        e * e
    } else if v < lo {
        let e = T::cst(lo) - x;
        e * e
    } else {
        T::cst(0.0)
    }
}

/// Value and derivative with respect to `x`.
pub(crate) fn interval_with_slope(x: f64, lo: f64, hi: f64) -> (f64, f64) {
    if x > hi {
        ((x - hi) * (x - hi), 2.0 * (x - hi))
    } else if x < lo {
        ((lo - x) * (lo - x), 2.0 * (x - lo))
    } else {
        (0.0, 0.0)
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) {
            return Err(Error::InvalidInterval { lo: min, hi: max });
        }
        Ok(Interval { min, max })
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Interval {
            min: center - half_width,
            max: center + half_width,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        assert_eq!(interval_penalty(0.5, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(interval_penalty(1.3, 0.0, 1.0).unwrap(), 0.09, epsilon = 1e-15);
        assert_eq!(interval_penalty(-2.0, 0.0, 1.0).unwrap(), 4.0);
        assert!(matches!(
            interval_penalty(0.0, 1.0, 0.0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn c1_at_both_endpoints() {
        let (lo, hi) = (-0.4, 0.7);
        for edge in [lo, hi] {
            let h = 1e-9;
            let left = (interval_value(edge, lo, hi) - interval_value(edge - h, lo, hi)) / h;
            let right = (interval_value(edge + h, lo, hi) - interval_value(edge, lo, hi)) / h;
            assert!((left - right).abs() < 1e-8);
            assert_eq!(interval_with_slope(edge, lo, hi).1, 0.0);
        }
    }

    #[test]
    fn tightening_never_decreases() {
        for i in 0..100 {
            let x = -1.0 + 0.03 * i as f64;
            let wide = interval_penalty(x, -0.5, 0.5).unwrap();
            let tight = interval_penalty(x, -0.2, 0.3).unwrap();
            assert!(tight >= wide);
        }
    }
}
