//! The constant-coupling gap equation and its transition temperatures.
//!
//! For a constant coupling `U` the gap function depends on `T` only and
//! solves `1 = U ∫_ε^{ħω_D} tanh(√(ξ²+Δ²)/2T)/√(ξ²+Δ²) dξ`. The solutions
//! Δ₁ (at `U₁`) and Δ₂ (at `U₂`) sandwich the full kernel's solution, and
//! their transition temperatures τ₁ < τ₂ bracket `T_c`.

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::model::PhysicalParams;
use crate::quadrature::integrate;
use crate::roots::solve_bracketed;

/// Quadrature tolerance used inside the scalar gap-equation residuals.
const RHS_QUAD_TOL: f64 = 1e-13;

/// Bracket tolerance (in Δ² space) for the scalar gap solves.
const GAP_BRACKET_TOL: f64 = 1e-14;

/// Closed-form zero-temperature gap
/// `Δ = √((ħω_D − ε e^{1/U})(ħω_D − ε e^{-1/U})) / sinh(1/U)`.
///
/// Requires `ħω_D − ε e^{1/U} > 0`; equivalently `U ln(ħω_D/ε) > 1`, the
/// same condition under which the transition temperature exists.
pub fn delta0_closed_form(u: f64, params: &PhysicalParams) -> Result<f64> {
    check_coupling(u)?;
    let (eps, hw) = params.window();
    let r1 = hw - eps * (1.0 / u).exp();
    let r2 = hw - eps * (-1.0 / u).exp();
    if r1 <= 0.0 {
        return Err(Error::Parameter(format!(
            "cutoff ε = {eps} too large for coupling U = {u}: ħω_D − ε e^{{1/U}} = {r1:.3e} <= 0"
        )));
    }
    Ok((r1 * r2).sqrt() / (1.0 / u).sinh())
}

/// Right-hand side `U ∫_ε^{ħω_D} tanh(√(ξ²+Δ²)/2T)/√(ξ²+Δ²) dξ` of the
/// scalar gap equation; the tanh factor is 1 exactly at `T = 0`.
pub fn simplified_rhs(u: f64, t: f64, delta: f64, params: &PhysicalParams) -> Result<f64> {
    check_coupling(u)?;
    if t < 0.0 {
        return Err(Error::domain("simplified_rhs", format!("temperature {t} < 0")));
    }
    if delta < 0.0 {
        return Err(Error::domain("simplified_rhs", format!("delta {delta} < 0")));
    }
    let (eps, hw) = params.window();
    let f = move |xi: f64| {
        let e = xi.hypot(delta);
        tanh_factor(e, t) / e
    };
    Ok(u * integrate(f, eps, hw, RHS_QUAD_TOL)?.value)
}

/// `tanh(e/2T)`, with the `T → 0` pointwise limit 1 applied exactly at zero.
#[inline]
pub(crate) fn tanh_factor(e: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (e / (2.0 * t)).tanh()
    }
}

/// Unique nonnegative solution Δ(T) of the scalar gap equation; zero for
/// `T ≥ τ`. The residual of the returned value satisfies
/// `|simplified_rhs − 1| ≤ tol`.
///
/// The root is located in Δ² space, where the residual is smooth; this
/// keeps Δ accurate even near τ where dΔ/dT diverges.
pub fn solve_simplified(u: f64, t: f64, params: &PhysicalParams, tol: f64) -> Result<f64> {
    check_coupling(u)?;
    if t < 0.0 {
        return Err(Error::domain("solve_simplified", format!("temperature {t} < 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("solve_simplified", "tolerance must be > 0"));
    }
    // rhs at Δ = 0 is strictly decreasing in T and equals 1 at τ, so this
    // test is the "T >= τ" test without computing τ.
    let rhs0 = simplified_rhs(u, t, 0.0, params)?;
    if rhs0 <= 1.0 {
        return Ok(0.0);
    }
    let delta0 = delta0_closed_form(u, params)?;
    let s_hi = (delta0 * (1.0 + 1e-6)).powi(2);
    let f = |s: f64| Ok(simplified_rhs(u, t, s.max(0.0).sqrt(), params)? - 1.0);
    let s = solve_bracketed(f, 0.0, s_hi, GAP_BRACKET_TOL)?;
    let delta = s.max(0.0).sqrt();
    let residual = simplified_rhs(u, t, delta, params)? - 1.0;
    if residual.abs() > tol {
        return Err(Error::NonConvergence {
            iterations: 0,
            last_residual: residual.abs(),
            residual_history: vec![residual.abs()],
        });
    }
    Ok(delta)
}

/// Transition temperature τ of the scalar equation:
/// `1 = U ∫_ε^{ħω_D} tanh(ξ/2τ)/ξ dξ`.
pub fn transition_temperature(u: f64, params: &PhysicalParams, tol: f64) -> Result<f64> {
    check_coupling(u)?;
    let (eps, hw) = params.window();
    let log_window = (hw / eps).ln();
    if u * log_window <= 1.0 {
        return Err(Error::Parameter(format!(
            "cutoff ε = {eps} too large for coupling U = {u}: U ln(ħω_D/ε) = {:.6} <= 1, no transition temperature exists",
            u * log_window
        )));
    }
    let f = |tau: f64| Ok(simplified_rhs(u, tau, 0.0, params)? - 1.0);
    // rhs(Δ=0) decreases from U ln(ħω_D/ε) toward 0, so grow the bracket
    // geometrically from below the weak-coupling scale.
    let mut lo = (eps / 40.0).min(0.25 * hw * (-1.0 / u).exp());
    let mut flo = f(lo)?;
    for _ in 0..120 {
        if flo > 0.0 {
            break;
        }
        lo *= 0.1;
        flo = f(lo)?;
    }
    if flo <= 0.0 {
        return Err(Error::Parameter(format!(
            "failed to bracket the transition temperature for U = {u}"
        )));
    }
    let mut hi = lo * 2.0;
    let mut fhi = f(hi)?;
    for _ in 0..200 {
        if fhi < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        fhi = f(hi)?;
    }
    let width_tol = (tol * 1e-2).min(1e-12);
    let tau = solve_bracketed(f, lo, hi, width_tol)?;
    Ok(tau)
}

/// The coupling whose scalar transition temperature equals `tc`:
/// `U₃ = 1 / ∫_ε^{ħω_D} tanh(ξ/2tc)/ξ dξ`.
pub fn coupling_for_tc(tc: f64, params: &PhysicalParams, tol: f64) -> Result<f64> {
    if !(tc > 0.0) {
        return Err(Error::domain("coupling_for_tc", format!("tc must be positive, got {tc}")));
    }
    let (eps, hw) = params.window();
    let quad_tol = tol.min(RHS_QUAD_TOL).max(1e-15);
    let integral = integrate(
        move |xi: f64| (xi / (2.0 * tc)).tanh() / xi,
        eps,
        hw,
        quad_tol,
    )?;
    Ok(1.0 / integral.value)
}

fn check_coupling(u: f64) -> Result<()> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::Parameter(format!("coupling must be positive, got {u}")));
    }
    Ok(())
}

/// A solved scalar gap curve: Δ(T) on `[0, τ]`, memoized on a
/// Chebyshev–Lobatto temperature grid with monotone-cubic interpolation.
///
/// Thermodynamic sweeps query the curve thousands of times; the memo keeps
/// that cheap. Wherever tight accuracy matters (solver bounds, acceptance
/// checks) callers use [`solve_simplified`] directly instead.
#[derive(Debug, Clone)]
pub struct SimplifiedSolution {
    coupling: f64,
    tau: f64,
    delta0: f64,
    interp: MonotoneCubic,
}

impl SimplifiedSolution {
    pub fn build(u: f64, params: &PhysicalParams, n_nodes: usize, tol: f64) -> Result<Self> {
        let tau = transition_temperature(u, params, tol)?;
        let delta0 = delta0_closed_form(u, params)?;
        let n = n_nodes.max(9);
        let mut ts = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for k in 0..n {
            let theta = std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let t = 0.5 * tau * (1.0 - theta.cos());
            let d = if k == 0 {
                delta0
            } else if k == n - 1 {
                0.0
            } else {
                solve_simplified(u, t, params, tol)?
            };
            ts.push(t);
            ds.push(d);
        }
        // Solver noise (~1e-14) can locally invert the order where the true
        // curve is exponentially flat; project onto non-increasing data.
        for k in 1..n {
            ds[k] = ds[k].min(ds[k - 1]);
        }
        let interp = MonotoneCubic::new(&ts, &ds)?;
        Ok(SimplifiedSolution {
            coupling: u,
            tau,
            delta0,
            interp,
        })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Memoized Δ(T); exactly zero within `1e-12·τ` of τ and beyond.
    pub fn delta(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.delta0;
        }
        if t >= self.tau * (1.0 - 1e-12) {
            return 0.0;
        }
        self.interp.eval(t).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> PhysicalParams {
        PhysicalParams::new(0.01, 1.0, 10.0, 1.0).unwrap()
    }

    fn weak_params() -> PhysicalParams {
        PhysicalParams::new(1e-6, 1.0, 10.0, 1.0).unwrap()
    }

    #[test]
    fn delta0_closed_form_reference_value() {
        // direct evaluation, cross-checked against the T = 0 asinh
        // antiderivative: asinh(ħω_D/Δ) − asinh(ε/Δ) = 1/U
        let d = delta0_closed_form(0.5, &params()).unwrap();
        assert_abs_diff_eq!(d, 0.265_158_918_402_065, epsilon = 1e-12);
        let lhs = (1.0f64 / d).asinh() - (0.01f64 / d).asinh();
        assert_abs_diff_eq!(lhs, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn delta0_small_cutoff_limit() {
        // ε → 0 limit is ħω_D / sinh(1/U)
        let p = PhysicalParams::new(1e-12, 1.0, 10.0, 1.0).unwrap();
        let d = delta0_closed_form(0.5, &p).unwrap();
        assert_abs_diff_eq!(d, 1.0 / 2.0f64.sinh(), epsilon = 1e-9);
        assert_abs_diff_eq!(d, 0.275_720_564_771_783, epsilon = 1e-9);
    }

    #[test]
    fn delta0_rejects_too_weak_coupling() {
        // e^10 ≈ 22026 makes the first radicand factor negative
        let err = delta0_closed_form(0.1, &params()).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)), "got {err}");
    }

    #[test]
    fn rhs_is_one_at_tau_with_zero_gap() {
        let p = params();
        let tau = transition_temperature(0.5, &p, 1e-12).unwrap();
        let r = simplified_rhs(0.5, tau, 0.0, &p).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rhs_is_one_at_zero_temperature_closed_form_gap() {
        let p = params();
        let d = delta0_closed_form(0.5, &p).unwrap();
        let r = simplified_rhs(0.5, 0.0, d, &p).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rhs_decays_for_large_gap() {
        let p = params();
        // integrand bound U(ħω_D − ε)/Δ
        let r3 = simplified_rhs(0.5, 0.05, 1e3, &p).unwrap();
        assert!(r3 < 1e-2 && r3 > 0.0);
        assert_abs_diff_eq!(r3, 0.000_494_999_916_667, epsilon = 1e-10);
        let r1 = simplified_rhs(0.5, 0.05, 10.0, &p).unwrap();
        let r2 = simplified_rhs(0.5, 0.05, 100.0, &p).unwrap();
        assert!(r1 > r2 && r2 > r3);
    }

    #[test]
    fn solve_matches_closed_form_at_zero_temperature() {
        let p = params();
        let d = solve_simplified(0.5, 0.0, &p, 1e-10).unwrap();
        assert_abs_diff_eq!(d, delta0_closed_form(0.5, &p).unwrap(), epsilon = 1e-11);
    }

    #[test]
    fn solve_vanishes_at_and_above_tau() {
        let p = params();
        let tau = transition_temperature(0.5, &p, 1e-12).unwrap();
        assert_eq!(solve_simplified(0.5, tau * (1.0 + 1e-12), &p, 1e-10).unwrap(), 0.0);
        assert_eq!(solve_simplified(0.5, 2.0 * tau, &p, 1e-10).unwrap(), 0.0);
        // at τ itself the residual of Δ = 0 is zero by definition of τ
        let d = solve_simplified(0.5, tau, &p, 1e-10).unwrap();
        assert!(d < 1e-5, "Δ(τ) = {d}");
    }

    /// Plain bisection on the rhs residual, used as an independent oracle
    /// for the hybrid solver path.
    fn bisect_oracle(u: f64, t: f64, p: &PhysicalParams) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if simplified_rhs(u, t, mid, p).unwrap() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn solve_interior_matches_bisection_oracle_and_decreases() {
        let p = params();
        let tau = transition_temperature(0.5, &p, 1e-12).unwrap();
        let d_half = solve_simplified(0.5, 0.5 * tau, &p, 1e-10).unwrap();
        assert_abs_diff_eq!(d_half, bisect_oracle(0.5, 0.5 * tau, &p), epsilon = 1e-10);
        assert_abs_diff_eq!(d_half, 0.254_205_418_799_915, epsilon = 1e-9);
        let d0 = delta0_closed_form(0.5, &p).unwrap();
        assert!(d_half > 0.0 && d_half < d0);
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let t = tau * (k as f64 + 0.5) / 10.0;
            let d = solve_simplified(0.5, t, &p, 1e-10).unwrap();
            assert!(d < prev, "Δ(T) not strictly decreasing at T = {t}");
            prev = d;
        }
    }

    #[test]
    fn transition_temperature_weak_coupling_asymptotic() {
        let p = weak_params();
        let tau = transition_temperature(0.3, &p, 1e-12).unwrap();
        // frozen bisection oracle value; the weak-coupling asymptote
        // (2 e^γ / π) ħω_D e^{-1/U} = 0.0404495 agrees to 2%
        assert_abs_diff_eq!(tau, 0.040_449_025_187_8, epsilon = 1e-9);
        assert!((tau / 0.040_449_5 - 1.0).abs() < 0.02);
    }

    #[test]
    fn transition_temperature_monotone_in_coupling() {
        let p = params();
        let t3 = transition_temperature(0.3, &p, 1e-12).unwrap();
        let t5 = transition_temperature(0.5, &p, 1e-12).unwrap();
        assert!(t5 > t3);
    }

    #[test]
    fn transition_temperature_requires_strong_enough_coupling() {
        // U ln(ħω_D/ε) = 0.1·ln(100) ≈ 0.46 < 1
        assert!(transition_temperature(0.1, &params(), 1e-12).is_err());
    }

    #[test]
    fn coupling_round_trips() {
        let p = params();
        let tau = transition_temperature(0.5, &p, 1e-12).unwrap();
        let u3 = coupling_for_tc(tau, &p, 1e-12).unwrap();
        assert_abs_diff_eq!(u3, 0.5, epsilon = 1e-10);

        let u = coupling_for_tc(0.1, &p, 1e-12).unwrap();
        let tau_back = transition_temperature(u, &p, 1e-12).unwrap();
        assert_abs_diff_eq!(tau_back, 0.1, epsilon = 1e-10);

        assert!(coupling_for_tc(0.0, &p, 1e-12).is_err());
        assert!(coupling_for_tc(-1.0, &p, 1e-12).is_err());
    }

    #[test]
    fn coupling_ordering_between_tau1_and_tau2() {
        let p = params();
        let (u1, u2) = (0.4, 0.5);
        let tau1 = transition_temperature(u1, &p, 1e-12).unwrap();
        let tau2 = transition_temperature(u2, &p, 1e-12).unwrap();
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let tc = tau1 + frac * (tau2 - tau1);
            let u3 = coupling_for_tc(tc, &p, 1e-12).unwrap();
            assert!(u1 - 1e-10 <= u3 && u3 <= u2 + 1e-10, "U3 = {u3} at tc = {tc}");
        }
    }

    #[test]
    fn sandwich_ordering_of_delta1_delta2() {
        let p = params();
        let tau2 = transition_temperature(0.5, &p, 1e-12).unwrap();
        for k in 0..12 {
            let t = tau2 * k as f64 / 12.0;
            let d1 = solve_simplified(0.4, t, &p, 1e-10).unwrap();
            let d2 = solve_simplified(0.5, t, &p, 1e-10).unwrap();
            assert!(d1 < d2, "Δ1 = {d1} !< Δ2 = {d2} at T = {t}");
        }
        for t in [tau2, 1.3 * tau2] {
            assert_eq!(solve_simplified(0.4, t, &p, 1e-10).unwrap(), 0.0);
            assert_eq!(solve_simplified(0.5, t, &p, 1e-10).unwrap(), 0.0);
        }
    }

    #[test]
    fn flat_start_and_steep_end_of_gap_curve() {
        let p = params();
        let tau = transition_temperature(0.5, &p, 1e-12).unwrap();
        let d0 = delta0_closed_form(0.5, &p).unwrap();
        // Δ'(0) = 0: forward quotients stay at the solver's noise floor,
        // orders of magnitude below the bulk slope scale Δ(0)/τ ≈ 1.8.
        // (The true difference Δ(h) − Δ(0) ~ e^{-Δ/h} underflows here, so
        // strict monotone decrease is only visible down to that floor.)
        let mut prev = f64::INFINITY;
        for h_frac in [1e-2, 1e-3, 1e-4] {
            let h = h_frac * tau;
            let q = ((solve_simplified(0.5, h, &p, 1e-11).unwrap() - d0) / h).abs();
            assert!(q <= prev.max(1e-8), "quotient {q} grew past noise at h = {h}");
            assert!(q < 1e-6, "quotient {q} too large at h = {h}");
            prev = q;
        }
        // Δ'(τ⁻) = -∞: one-sided quotient exceeds M = 10³
        let h = 1e-8 * tau;
        let q = solve_simplified(0.5, tau - h, &p, 1e-11).unwrap() / h;
        assert!(q > 1e3, "divergent quotient only reached {q}");
    }

    #[test]
    fn memoized_curve_tracks_exact_solution() {
        let p = params();
        let sol = SimplifiedSolution::build(0.5, &p, 65, 1e-11).unwrap();
        assert_abs_diff_eq!(sol.delta(0.0), sol.delta0(), epsilon = 1e-14);
        assert_eq!(sol.delta(sol.tau()), 0.0);
        assert_eq!(sol.delta(2.0), 0.0);
        let tau = sol.tau();
        let mut worst: f64 = 0.0;
        for k in 1..40 {
            let t = 0.9 * tau * k as f64 / 40.0;
            let exact = solve_simplified(0.5, t, &p, 1e-11).unwrap();
            worst = worst.max((sol.delta(t) - exact).abs());
        }
        // monotone-cubic interpolation on 65 Lobatto nodes; bulk queries
        // only — exact solves are used wherever tolerances are tight
        assert!(worst < 1e-4, "memo error {worst} on [0, 0.9τ]");
        // near τ the sqrt-type slope limits interpolation accuracy
        let t = 0.999 * tau;
        let exact = solve_simplified(0.5, t, &p, 1e-11).unwrap();
        assert!((sol.delta(t) - exact).abs() < 5e-3);
        // monotone by construction
        let mut prev = f64::INFINITY;
        for k in 0..=200 {
            let d = sol.delta(tau * k as f64 / 200.0);
            assert!(d <= prev + 1e-15);
            prev = d;
        }
    }
}
