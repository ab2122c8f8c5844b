//! Safeguarded Newton iteration for scalar monotone equations.

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 200;

/// Finds a root of an increasing function on `[lo, hi]`, given `g(lo) ≤ 0 ≤ g(hi)`.
///
/// `eval` returns `(g(s), g'(s))`. Newton steps that leave the current bracket
/// fall back to bisection. Iteration stops once `accept(g)` holds or the bracket
/// collapses to floating-point resolution.
pub(crate) fn increasing_root(
    what: &'static str,
    mut eval: impl FnMut(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    accept: impl Fn(f64) -> bool,
) -> Result<f64> {
    let mut s = start.clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let (g, dg) = eval(s)?;
        if accept(g) {
            return Ok(s);
        }
        if g < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            return Ok(s);
        }
        let newton = s - g / dg;
        s = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NumericFailure {
        what,
        iterations: MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = increasing_root(
            "test",
            |s| Ok((s * s * s - 2.0, 3.0 * s * s)),
            0.0,
            4.0,
            0.0,
            |g| g.abs() < 1e-14,
        )
        .unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn survives_bad_derivative() {
        let r = increasing_root(
            "test",
            |s| Ok((s - 0.3, 0.0)),
            0.0,
            1.0,
            0.0,
            |g| g.abs() < 1e-15,
        )
        .unwrap();
        assert!((r - 0.3).abs() < 1e-14);
    }
}
