//! Bracketed scalar root finding: bisection with a safeguarded secant
//! refinement. Never pure Newton — the gap-equation residuals have
//! unbounded derivatives at the transition temperature.

use crate::error::{Error, Result};

/// Finds a root of `f` in `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs. Stops when the bracket is narrower than `tol` (absolute,
/// plus the same amount relative to the bracket magnitude) or the residual
/// is exactly zero.
pub fn solve_bracketed(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::domain("solve_bracketed", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::domain(
            "solve_bracketed",
            format!("no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"),
        ));
    }

    for _ in 0..200 {
        let width = hi - lo;
        if width <= tol * (1.0 + 0.5 * (lo.abs() + hi.abs())) {
            break;
        }
        // Secant candidate, accepted only when it lands safely inside the
        // bracket; otherwise bisect.
        let mid = 0.5 * (lo + hi);
        let secant = lo - flo * width / (fhi - flo);
        let x = if secant.is_finite() && secant > lo + 0.01 * width && secant < hi - 0.01 * width {
            secant
        } else {
            mid
        };
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        // Guard against one-sided stagnation of the secant step.
        if hi - lo > 0.9 * width {
            let m = 0.5 * (lo + hi);
            let fm = f(m)?;
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == flo.signum() {
                lo = m;
                flo = fm;
            } else {
                hi = m;
                fhi = fm;
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `[lo, hi]` geometrically until `f` changes sign, then refines with
/// [`solve_bracketed`]. `f(lo)` fixes the reference sign.
pub fn grow_bracket_and_solve(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    mut hi: f64,
    tol: f64,
    max_growth: usize,
) -> Result<f64> {
    let flo = f(lo)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut a = lo;
    for _ in 0..max_growth {
        let fhi = f(hi)?;
        if fhi == 0.0 {
            return Ok(hi);
        }
        if fhi.signum() != flo.signum() {
            return solve_bracketed(f, a, hi, tol);
        }
        a = hi;
        hi *= 2.0;
    }
    Err(Error::domain(
        "grow_bracket_and_solve",
        format!("no sign change found up to {hi}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_simple_root() {
        let r = solve_bracketed(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn handles_steep_sqrt_branch() {
        // root with infinite slope on one side, like Δ(T) near τ
        let r = solve_bracketed(|x: f64| Ok((1.0 - x).max(0.0).sqrt() - 0.25), 0.0, 2.0, 1e-13)
            .unwrap();
        assert_abs_diff_eq!(r, 1.0 - 0.0625, epsilon = 1e-10);
    }

    #[test]
    fn rejects_unbracketed_input() {
        assert!(solve_bracketed(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12).is_err());
        assert!(solve_bracketed(|x| Ok(x), 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn grows_bracket_geometrically() {
        let r = grow_bracket_and_solve(|x| Ok(x - 37.5), 0.001, 0.002, 1e-12, 60).unwrap();
        assert_abs_diff_eq!(r, 37.5, epsilon = 1e-9);
    }
}
