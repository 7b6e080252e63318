//! Deterministic numerical integration.
//!
//! [`integrate`] is an adaptive 15-point Gauss–Kronrod rule with
//! worst-panel-first subdivision and an absolute-plus-relative stopping
//! test. [`integrate_fermi_tail`] handles the semi-infinite integral
//! `∫_a^∞ N(x) ln(1 + e^{-x/T}) dx` by certified truncation: the discarded
//! tail is bounded through `N(x) ≤ C √x` and the incomplete-gamma closed
//! form.

use crate::error::{Error, Result};
use crate::model::DensityOfStates;
use std::collections::BinaryHeap;

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// 15-point Kronrod abscissae (positive half) and the embedded 7-point
// Gauss weights; standard QUADPACK values.
#[allow(clippy::excessive_precision)]
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One Gauss–Kronrod 15(7) panel. Returns (integral, error estimate).
fn qk15(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { abscissa: x });
        }
        Ok(v)
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK15[7];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv = [0.0f64; 14];
    for j in 0..7 {
        let dx = half * XGK15[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = f1;
        fv[7 + j] = f2;
        kronrod += WGK15[j] * (f1 + f2);
        res_abs += WGK15[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG7[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK15[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK15[j] * ((fv[j] - mean).abs() + (fv[7 + j] - mean).abs());
    }
    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // worst error first; tie-break on the left endpoint for determinism
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

const MAX_PANELS: usize = 4000;

/// Adaptive integration of `f` over `[a, b]`.
///
/// The returned value satisfies `|value - exact| <= max(tol, error_estimate)`
/// for integrands smooth on the closed interval. `tol` acts as both the
/// absolute and the relative target.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    let mut g = |x: f64| Ok(f(x));
    integrate_fallible(&mut g, a, b, tol)
}

/// Like [`integrate`] for integrands that can themselves fail.
pub fn integrate_fallible(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(a < b) {
        return Err(Error::domain("integrate", format!("need a < b, got [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("integrate", format!("tolerance must be > 0, got {tol}")));
    }
    let (value, error) = qk15(f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_value = value;
    let mut total_error = error;
    let mut total_abs = value.abs();

    // Below ~100 eps of the accumulated magnitude the panel estimates are
    // pure roundoff; subdividing past that floor never converges.
    let attainable =
        |total_abs: f64, tv: f64| tol.max(tol * tv.abs()).max(100.0 * f64::EPSILON * total_abs);

    while total_error > attainable(total_abs, total_value) && heap.len() < MAX_PANELS {
        let worst = heap.pop().expect("heap never empty here");
        // Bisection below floating-point resolution cannot improve anything.
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = qk15(f, worst.a, mid)?;
        let (v2, e2) = qk15(f, mid, worst.b)?;
        evaluations += 30;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        total_abs += v1.abs() + v2.abs() - worst.value.abs();
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Refresh the accumulated sums to remove cancellation drift.
    let panels = heap.into_sorted_vec();
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(QuadratureResult { value, error_estimate: error, evaluations })
}

/// `∫_a^∞ N(x) ln(1 + e^{-x/T}) dx`.
///
/// The truncation point solves `x_max = a + T ln(C √x_max / tol)` by two
/// fixed-point passes; the discarded tail is then bounded by
/// `C ∫_{x_max}^∞ √x e^{-x/T} dx = C T^{3/2} Γ(3/2, x_max/T)` and folded
/// into the error estimate.
pub fn integrate_fermi_tail(
    n: &DensityOfStates,
    a: f64,
    t: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(t > 0.0) {
        return Err(Error::domain(
            "integrate_fermi_tail",
            format!("temperature must be positive, got {t}"),
        ));
    }
    if !(a > 0.0) {
        return Err(Error::domain(
            "integrate_fermi_tail",
            format!("lower limit must be positive, got {a}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("integrate_fermi_tail", "tolerance must be > 0"));
    }
    let c = n.growth_constant(a);
    if c == 0.0 {
        return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    let mut x_max = a;
    for _ in 0..2 {
        x_max = a + t * (c * x_max.max(a).sqrt() / tol).max(1.0).ln();
    }
    if x_max <= a {
        // ln(...) clamped to 0: everything past `a` is already below tol.
        return Ok(QuadratureResult { value: 0.0, error_estimate: tol, evaluations: 0 });
    }
    let integrand = move |x: f64| n.eval(x) * (-x / t).exp().ln_1p();
    let mut r = integrate(integrand, a, x_max, tol)?;
    r.error_estimate += c * t.powf(1.5) * gamma_upper_3_2_bound(x_max / t);
    Ok(r)
}

/// Upper bound for `Γ(3/2, z)`: `e^{-z} (√z + 1/(2√z))` for `z > 0`,
/// from `erfc(y) ≤ e^{-y²}/(y√π)`.
fn gamma_upper_3_2_bound(z: f64) -> f64 {
    let s = z.sqrt();
    (-z).exp() * (s + 0.5 / s)
}
