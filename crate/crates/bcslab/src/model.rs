//! Physical parameters, interaction kernels, energy grids and densities of
//! states — the fixed stage every computation runs on.

use crate::error::{Error, Result};
use crate::interp::{BicubicSpline, CubicSpline};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};

/// Relative slack allowed when checking interval membership, to absorb
/// roundoff at interval endpoints.
const DOMAIN_SLACK: f64 = 1e-12;

/// Energy cutoffs, chemical potential and Fermi-surface density of states.
///
/// Invariants: `0 < ε < ħω_D < μ` and `N₀ > 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub epsilon: f64,
    pub hbar_omega_d: f64,
    pub mu: f64,
    pub n0: f64,
}

impl PhysicalParams {
    pub fn new(epsilon: f64, hbar_omega_d: f64, mu: f64, n0: f64) -> Result<Self> {
        let p = PhysicalParams {
            epsilon,
            hbar_omega_d,
            mu,
            n0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.hbar_omega_d.is_finite() && self.hbar_omega_d > self.epsilon) {
            return Err(Error::Parameter(format!(
                "hbar_omega_d must exceed epsilon ({} <= {})",
                self.hbar_omega_d, self.epsilon
            )));
        }
        if !(self.mu.is_finite() && self.mu > self.hbar_omega_d) {
            return Err(Error::Parameter(format!(
                "mu must exceed hbar_omega_d ({} <= {})",
                self.mu, self.hbar_omega_d
            )));
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return Err(Error::Parameter(format!(
                "n0 must be positive, got {}",
                self.n0
            )));
        }
        Ok(())
    }

    /// The energy window `[ε, ħω_D]` the gap equation lives on.
    pub fn window(&self) -> (f64, f64) {
        (self.epsilon, self.hbar_omega_d)
    }
}

/// Interaction kernel `U(x, ξ)` on `[ε, ħω_D]²` with declared bounds
/// `U₁ ≤ U ≤ U₂`.
#[derive(Debug, Clone)]
pub struct Kernel {
    form: KernelForm,
    u1: f64,
    u2: f64,
    window: (f64, f64),
}

#[derive(Debug, Clone)]
pub enum KernelForm {
    /// Exactly constant coupling; represented without tabulation so the
    /// constant-kernel collapse can be checked to near machine precision.
    Constant(f64),
    /// `U(x, ξ) = base + Σ_k c_k (x·ξ)^k`, `k = 1..`.
    Separable { base: f64, coefficients: Vec<f64> },
    /// Values on a rectilinear grid, interpolated with a C² bicubic spline
    /// (the near-`T_c` diagnostics differentiate the kernel's output twice).
    Tabulated(BicubicSpline),
}

impl Kernel {
    pub fn constant(value: f64, params: &PhysicalParams) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Parameter(format!(
                "constant kernel value must be positive, got {value}"
            )));
        }
        Ok(Kernel {
            form: KernelForm::Constant(value),
            u1: value,
            u2: value,
            window: params.window(),
        })
    }

    pub fn separable(
        base: f64,
        coefficients: Vec<f64>,
        u1: f64,
        u2: f64,
        params: &PhysicalParams,
    ) -> Result<Self> {
        check_bounds(u1, u2)?;
        if !base.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("separable kernel has non-finite coefficients".into()));
        }
        Ok(Kernel {
            form: KernelForm::Separable { base, coefficients },
            u1,
            u2,
            window: params.window(),
        })
    }

    pub fn tabulated(
        xs: &[f64],
        xis: &[f64],
        values: &[f64],
        u1: f64,
        u2: f64,
        params: &PhysicalParams,
    ) -> Result<Self> {
        check_bounds(u1, u2)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("tabulated kernel has non-finite values".into()));
        }
        let spline = BicubicSpline::new(xs, xis, values)?;
        let (a, b) = params.window();
        let slack = DOMAIN_SLACK * b;
        let (x0, x1) = spline.x_domain();
        let (y0, y1) = spline.xi_domain();
        if x0 > a + slack || x1 < b - slack || y0 > a + slack || y1 < b - slack {
            return Err(Error::Parameter(format!(
                "kernel table [{x0}, {x1}]x[{y0}, {y1}] does not cover the energy window [{a}, {b}]"
            )));
        }
        Ok(Kernel {
            form: KernelForm::Tabulated(spline),
            u1,
            u2,
            window: params.window(),
        })
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    pub fn u2(&self) -> f64 {
        self.u2
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.form, KernelForm::Constant(_))
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    /// Evaluates `U(x, ξ)`. Both arguments must lie in `[ε, ħω_D]`.
    pub fn eval(&self, x: f64, xi: f64) -> Result<f64> {
        let (a, b) = self.window;
        let slack = DOMAIN_SLACK * b;
        if !(x >= a - slack && x <= b + slack) || !(xi >= a - slack && xi <= b + slack) {
            return Err(Error::domain(
                "Kernel::eval",
                format!("arguments ({x}, {xi}) outside [{a}, {b}]"),
            ));
        }
        Ok(match &self.form {
            KernelForm::Constant(v) => *v,
            KernelForm::Separable { base, coefficients } => {
                let p = x * xi;
                let mut acc = *base;
                let mut pk = 1.0;
                for c in coefficients {
                    pk *= p;
                    acc += c * pk;
                }
                acc
            }
            KernelForm::Tabulated(spline) => spline.eval(x, xi),
        })
    }

    /// Scans `U` over `grid × grid` and reports whether the declared bounds
    /// `U₁ ≤ U ≤ U₂` hold. Failures are reported, never thrown.
    pub fn validate(&self, grid: &EnergyGrid) -> KernelReport {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut worst: Option<(f64, f64)> = None;
        for &x in grid.nodes() {
            for &xi in grid.nodes() {
                // nodes lie inside the window by construction
                let v = self.eval(x, xi).unwrap_or(f64::NAN);
                if v < min {
                    min = v;
                }
                if v > max {
                    max = v;
                }
                if v < self.u1 || v > self.u2 || !v.is_finite() {
                    worst = Some((x, xi));
                }
            }
        }
        KernelReport {
            min,
            max,
            u1: self.u1,
            u2: self.u2,
            passed: worst.is_none() && min.is_finite(),
            first_violation: worst,
        }
    }
}

fn check_bounds(u1: f64, u2: f64) -> Result<()> {
    if !(u1.is_finite() && u2.is_finite() && 0.0 < u1 && u1 <= u2) {
        return Err(Error::Parameter(format!(
            "kernel bounds must satisfy 0 < U1 <= U2, got U1={u1}, U2={u2}"
        )));
    }
    Ok(())
}

/// Outcome of scanning a kernel against its declared bounds.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub min: f64,
    pub max: f64,
    pub u1: f64,
    pub u2: f64,
    pub passed: bool,
    pub first_violation: Option<(f64, f64)>,
}

/// Quadrature nodes and weights on `[ε, ħω_D]`.
///
/// Defaults to Gauss–Legendre nodes mapped onto the window: the in-scope
/// integrands are smooth, so spectral accuracy is cheap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl EnergyGrid {
    /// `n`-point Gauss–Legendre rule mapped to `[ε, ħω_D]`.
    pub fn gauss_legendre(params: &PhysicalParams, n: usize) -> Result<Self> {
        let (a, b) = params.window();
        if n < 2 {
            return Err(Error::Parameter(format!("energy grid needs >= 2 nodes, got {n}")));
        }
        let (z, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let nodes: Vec<f64> = z.iter().map(|&t| mid + half * t).collect();
        let weights: Vec<f64> = w.iter().map(|&wi| wi * half).collect();
        let g = EnergyGrid { nodes, weights };
        g.validate(params)?;
        Ok(g)
    }

    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, params: &PhysicalParams) -> Result<Self> {
        let g = EnergyGrid { nodes, weights };
        g.validate(params)?;
        Ok(g)
    }

    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        let (a, b) = params.window();
        if self.nodes.len() != self.weights.len() || self.nodes.len() < 2 {
            return Err(Error::Parameter("grid nodes/weights length mismatch".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("grid nodes must be strictly increasing".into()));
        }
        if self.nodes[0] < a || *self.nodes.last().unwrap() > b {
            return Err(Error::Parameter(format!(
                "grid nodes must lie in [{a}, {b}]"
            )));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Parameter("grid weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        let width = b - a;
        if (total - width).abs() > 1e-10 * width {
            return Err(Error::Parameter(format!(
                "grid weights sum to {total}, expected interval width {width}"
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature sum `Σ w_i f(x_i)` over the grid.
    pub fn integrate_nodes(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Density of states `N(x)` on `[-μ, ∞)`, with `N(x) = O(√x)` as `x → ∞`
/// so the semi-infinite thermodynamic integrals converge.
#[derive(Debug, Clone)]
pub enum DensityOfStates {
    Zero,
    Constant(f64),
    /// `N(x) = c·√(x + μ)`, the free-electron form.
    FreeElectron { c: f64, mu: f64 },
    /// Knots on `[-μ, x_last]`, natural-spline interpolated, extended by
    /// the last knot value beyond the table.
    Tabulated {
        spline: CubicSpline,
        max_value: f64,
    },
}

impl DensityOfStates {
    pub fn constant(n0: f64) -> Result<Self> {
        if !(n0.is_finite() && n0 >= 0.0) {
            return Err(Error::Parameter(format!("constant DoS must be >= 0, got {n0}")));
        }
        Ok(DensityOfStates::Constant(n0))
    }

    pub fn free_electron(c: f64, params: &PhysicalParams) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Parameter(format!(
                "free-electron DoS coefficient must be >= 0, got {c}"
            )));
        }
        Ok(DensityOfStates::FreeElectron { c, mu: params.mu })
    }

    pub fn tabulated(xs: &[f64], values: &[f64], params: &PhysicalParams) -> Result<Self> {
        if values.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::Parameter("tabulated DoS values must be >= 0".into()));
        }
        let spline = CubicSpline::natural(xs, values)?;
        let (lo, _) = spline.domain();
        if lo > -params.mu + DOMAIN_SLACK * params.mu {
            return Err(Error::Parameter(format!(
                "DoS table must start at or below -mu = {}, starts at {lo}",
                -params.mu
            )));
        }
        let max_value = values.iter().cloned().fold(0.0, f64::max);
        Ok(DensityOfStates::Tabulated { spline, max_value })
    }

    /// `N(x)`; clamped at zero so spline undershoot cannot turn the density
    /// negative between non-negative knots.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DensityOfStates::Zero => 0.0,
            DensityOfStates::Constant(n0) => *n0,
            DensityOfStates::FreeElectron { c, mu } => {
                let arg = x + mu;
                if arg <= 0.0 {
                    0.0
                } else {
                    c * arg.sqrt()
                }
            }
            DensityOfStates::Tabulated { spline, .. } => {
                let (lo, hi) = spline.domain();
                let xc = x.clamp(lo, hi);
                spline.eval(xc).max(0.0)
            }
        }
    }

    /// A constant `C` with `N(x) ≤ C·√x` for all `x ≥ a` (`a > 0`), used to
    /// certify truncation of the semi-infinite tail integral.
    pub fn growth_constant(&self, a: f64) -> f64 {
        debug_assert!(a > 0.0);
        match self {
            DensityOfStates::Zero => 0.0,
            DensityOfStates::Constant(n0) => n0 / a.sqrt(),
            // sup_{x >= a} sqrt((x+mu)/x) is attained at x = a
            DensityOfStates::FreeElectron { c, mu } => c * (1.0 + mu / a).sqrt(),
            DensityOfStates::Tabulated { max_value, .. } => max_value / a.sqrt(),
        }
    }
}
