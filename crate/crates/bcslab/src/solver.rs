//! Nyström discretization of the gap-equation integral operator `B` and
//! its positive fixed point.
//!
//! The operator is discretized on the shared Gauss–Legendre grid,
//! `(Bu)(x_i) = Σ_j w_j U(x_i, ξ_j) φ(ξ_j, u_j, T)`, and iterated from the
//! upper envelope `u ≡ Δ₂(T)`. Starting at the supersolution makes a
//! collapse to zero meaningful — it is the normal state, not an artifact
//! of the start — because every fixed point in `V_T` lies below the start.
//! Damped iteration plus optional Anderson acceleration handles the loss
//! of contraction near `T_c`, where the paper-level Lipschitz constant
//! `3 U₂ ln(ħω_D/ε)` exceeds one.

use crate::error::{Error, Result};
use crate::model::{EnergyGrid, Kernel, PhysicalParams};
use crate::simplified::{self, tanh_factor, SimplifiedSolution};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::Mutex;

/// Iteration controls for [`GapProblem::solve_fixed_point`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Sup-norm target for the fixed-point residual `‖u − Bu‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial mixing weight λ of `u ← (1−λ) u + λ Bu`; halved
    /// automatically whenever the residual increases.
    pub damping: f64,
    /// History depth for Anderson acceleration; 0 disables it.
    pub anderson_depth: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iter: 50_000,
            damping: 1.0,
            anderson_depth: 3,
        }
    }
}

/// A converged point is accepted as superconducting only if its residual
/// is also this small relative to the iterate itself. States crawling
/// toward zero just above `T_c` have relative residual `≈ 1 − ρ(T)` and
/// keep iterating instead of being misread as converged positive gaps.
const REL_RESIDUAL_CAP: f64 = 1e-7;

const MIN_DAMPING: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Superconducting,
    Normal,
}

/// The solved gap slice `u₀(T, ·)` on the energy grid.
#[derive(Debug, Clone, Serialize)]
pub struct GapSolution {
    pub t: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub phase: Phase,
}

impl GapSolution {
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Result of the two-start uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub agree: bool,
    pub gap: f64,
}

/// `u₀(T, x)` over a temperature grid, with the located `T_c`.
#[derive(Debug, Clone, Serialize)]
pub struct GapSurface {
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// `values[i][j] = u₀(T_i, x_j)`; slices at `T ≥ tc` are identically zero.
    pub values: Vec<Vec<f64>>,
    pub tc: f64,
    /// Diagnostic `sup_T |Δ₂(T) − Δ₁(T)|` over the sweep range (reported,
    /// not enforced).
    pub closeness: f64,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

/// A kernel fixed on a grid: the full context needed to apply `B`, solve
/// for gap slices, and locate the critical temperature.
pub struct GapProblem {
    params: PhysicalParams,
    kernel: Kernel,
    grid: EnergyGrid,
    /// Row-major `n×n` table `w_j · U(x_i, ξ_j)`.
    kmat: Vec<f64>,
    tau1: f64,
    tau2: f64,
    delta1_curve: SimplifiedSolution,
    delta2_curve: SimplifiedSolution,
    zero_threshold: f64,
    bounds_cache: Mutex<HashMap<u64, (f64, f64)>>,
}

impl GapProblem {
    pub fn new(params: PhysicalParams, kernel: Kernel, n_nodes: usize) -> Result<Self> {
        params.validate()?;
        let grid = EnergyGrid::gauss_legendre(&params, n_nodes)?;
        Self::with_grid(params, kernel, grid)
    }

    pub fn with_grid(params: PhysicalParams, kernel: Kernel, grid: EnergyGrid) -> Result<Self> {
        let n = grid.len();
        let mut kmat = vec![0.0; n * n];
        for (i, &x) in grid.nodes().iter().enumerate() {
            for (j, (&xi, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
                kmat[i * n + j] = w * kernel.eval(x, xi)?;
            }
        }
        let delta1_curve = SimplifiedSolution::build(kernel.u1(), &params, 65, 1e-11)?;
        let delta2_curve = if kernel.u1() == kernel.u2() {
            delta1_curve.clone()
        } else {
            SimplifiedSolution::build(kernel.u2(), &params, 65, 1e-11)?
        };
        let zero_threshold = 1e-10 * delta2_curve.delta0();
        Ok(GapProblem {
            params,
            kernel,
            grid,
            kmat,
            tau1: delta1_curve.tau(),
            tau2: delta2_curve.tau(),
            delta1_curve,
            delta2_curve,
            zero_threshold,
            bounds_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    /// Transition temperature of the scalar equation at coupling `U₁`.
    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    /// Transition temperature of the scalar equation at coupling `U₂`.
    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// Gaps below `1e-10·Δ₂(0)` count as the zero solution; Δ₂(0) sets the
    /// natural scale of the problem.
    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    /// Memoized envelope curves (bulk queries; exact solves via
    /// [`GapProblem::bounds`] are used inside the solver).
    pub fn delta1_memo(&self, t: f64) -> f64 {
        self.delta1_curve.delta(t)
    }

    pub fn delta2_memo(&self, t: f64) -> f64 {
        self.delta2_curve.delta(t)
    }

    /// Exact `(Δ₁(T), Δ₂(T))`, solved on demand and cached per temperature.
    pub fn bounds(&self, t: f64) -> Result<(f64, f64)> {
        if let Some(&b) = self.bounds_cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(b);
        }
        let d1 = simplified::solve_simplified(self.kernel.u1(), t, &self.params, 1e-10)?;
        let d2 = if self.kernel.u1() == self.kernel.u2() {
            d1
        } else {
            simplified::solve_simplified(self.kernel.u2(), t, &self.params, 1e-10)?
        };
        self.bounds_cache.lock().unwrap().insert(t.to_bits(), (d1, d2));
        Ok((d1, d2))
    }

    /// Applies the discretized operator `B` at temperature `t`.
    pub fn apply_b(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if t < 0.0 {
            return Err(Error::domain("apply_b", format!("temperature {t} < 0")));
        }
        let n = self.grid.len();
        if u.len() != n {
            return Err(Error::domain(
                "apply_b",
                format!("expected {n} node values, got {}", u.len()),
            ));
        }
        if let Some(bad) = u.iter().find(|&&v| !(v >= 0.0)) {
            return Err(Error::domain(
                "apply_b",
                format!("node values must be nonnegative, found {bad}"),
            ));
        }
        let phi: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(u)
            .map(|(&xi, &uj)| phi_factor(xi, uj, t))
            .collect();
        Ok((0..n)
            .map(|i| {
                let row = &self.kmat[i * n..(i + 1) * n];
                row.iter().zip(&phi).map(|(&k, &p)| k * p).sum()
            })
            .collect())
    }

    /// Nyström extension: evaluates the converged slice at arbitrary
    /// `x ∈ [ε, ħω_D]` through the quadrature representation of `B`.
    pub fn extend(&self, sol: &GapSolution, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for ((&xi, &w), &uj) in self
            .grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&sol.values)
        {
            acc += w * self.kernel.eval(x, xi)? * phi_factor(xi, uj, sol.t);
        }
        Ok(acc)
    }

    /// `‖Bu − Bv‖_∞ / ‖u − v‖_∞` for two admissible slices.
    pub fn lipschitz_ratio(&self, t: f64, u: &[f64], v: &[f64]) -> Result<f64> {
        let (d1, d2) = self.bounds(t)?;
        let slack = 1e-9 * (1.0 + d2);
        for s in [u, v] {
            if s.iter().any(|&y| y < d1 - slack || y > d2 + slack) {
                return Err(Error::domain(
                    "lipschitz_ratio",
                    format!("values must lie in [Δ1(T), Δ2(T)] = [{d1}, {d2}]"),
                ));
            }
        }
        let diff = sup_diff(u, v);
        if diff == 0.0 {
            return Err(Error::UndefinedRatio);
        }
        let bu = self.apply_b(t, u)?;
        let bv = self.apply_b(t, v)?;
        Ok(sup_diff(&bu, &bv) / diff)
    }

    /// The closed-form Lipschitz bound `3 U₂ ln(ħω_D/ε)` for `B` on `V_T`.
    pub fn lipschitz_bound(&self) -> f64 {
        let (eps, hw) = self.params.window();
        3.0 * self.kernel.u2() * (hw / eps).ln()
    }

    /// Solves for the positive fixed point from the upper envelope
    /// `u ≡ Δ₂(T)`; returns the zero solution immediately for `T ≥ τ₂`.
    pub fn solve_fixed_point(&self, t: f64, opts: &SolveOptions) -> Result<GapSolution> {
        if t < 0.0 {
            return Err(Error::domain("solve_fixed_point", format!("temperature {t} < 0")));
        }
        let n = self.grid.len();
        if t >= self.tau2 * (1.0 - 1e-12) {
            return Ok(GapSolution {
                t,
                values: vec![0.0; n],
                iterations: 0,
                residual: 0.0,
                phase: Phase::Normal,
            });
        }
        let (_, d2) = self.bounds(t)?;
        self.iterate(t, vec![d2; n], opts)
    }

    /// Solves from a caller-provided start (used for warm starts along a
    /// sweep); the start is clamped into `[Δ₁(T), Δ₂(T)]` so iterates stay
    /// in `V_T` where the envelope bounds apply.
    pub fn solve_from(&self, t: f64, initial: &[f64], opts: &SolveOptions) -> Result<GapSolution> {
        if t < 0.0 {
            return Err(Error::domain("solve_from", format!("temperature {t} < 0")));
        }
        let n = self.grid.len();
        if initial.len() != n {
            return Err(Error::domain(
                "solve_from",
                format!("expected {n} initial values, got {}", initial.len()),
            ));
        }
        if t >= self.tau2 * (1.0 - 1e-12) {
            return Ok(GapSolution {
                t,
                values: vec![0.0; n],
                iterations: 0,
                residual: 0.0,
                phase: Phase::Normal,
            });
        }
        self.iterate(t, initial.to_vec(), opts)
    }

    fn classify(&self, sup: f64) -> Phase {
        if sup < self.zero_threshold {
            Phase::Normal
        } else {
            Phase::Superconducting
        }
    }

    fn iterate(&self, t: f64, mut u: Vec<f64>, opts: &SolveOptions) -> Result<GapSolution> {
        let (d1, d2) = self.bounds(t)?;
        clamp_slice(&mut u, d1, d2);
        let mut lambda = opts.damping.clamp(MIN_DAMPING, 1.0);
        let mut window: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut prev_res = f64::INFINITY;
        let mut history = Vec::new();

        for it in 0..opts.max_iter {
            let bu = self.apply_b(t, &u)?;
            let f: Vec<f64> = bu.iter().zip(&u).map(|(b, x)| b - x).collect();
            let res = f.iter().fold(0.0f64, |m, &y| m.max(y.abs()));
            history.push(res);
            let sup = u.iter().cloned().fold(0.0, f64::max);
            let done = sup < self.zero_threshold
                || (res <= opts.tol && res <= REL_RESIDUAL_CAP * sup);
            if done {
                return Ok(GapSolution {
                    t,
                    values: u,
                    iterations: it,
                    residual: res,
                    phase: self.classify(sup),
                });
            }
            if res > prev_res {
                lambda = (0.5 * lambda).max(MIN_DAMPING);
                window.clear();
                prev = None;
            }
            prev_res = res;

            if let Some((pu, pf)) = &prev {
                let du: Vec<f64> = u.iter().zip(pu).map(|(a, b)| a - b).collect();
                let df: Vec<f64> = f.iter().zip(pf).map(|(a, b)| a - b).collect();
                window.push((du, df));
                if window.len() > opts.anderson_depth {
                    window.remove(0);
                }
            }
            let mut next = if opts.anderson_depth > 0 && !window.is_empty() {
                anderson_step(&window, &u, &f, lambda)
                    .unwrap_or_else(|| damped_step(&u, &f, lambda))
            } else {
                damped_step(&u, &f, lambda)
            };
            clamp_slice(&mut next, d1, d2);
            prev = Some((u, f));
            u = next;
        }

        let last = *history.last().unwrap_or(&f64::NAN);
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            last_residual: last,
            residual_history: compress_history(history),
        })
    }

    /// Runs the solver from the upper envelope and from
    /// `u ≡ max(Δ₁(T), floor)` and reports the sup-norm distance between
    /// the two converged slices.
    pub fn uniqueness_probe(&self, t: f64, opts: &SolveOptions) -> Result<ProbeReport> {
        if t >= self.tau2 {
            return Err(Error::domain(
                "uniqueness_probe",
                format!("temperature {t} is not below tau2 = {}", self.tau2),
            ));
        }
        let upper = self.solve_fixed_point(t, opts)?;
        let (d1, _) = self.bounds(t)?;
        let floor = 1e-3 * self.delta2_curve.delta0();
        let start = vec![d1.max(floor); self.grid.len()];
        let lower = self.solve_from(t, &start, opts)?;
        let gap = sup_diff(&upper.values, &lower.values);
        Ok(ProbeReport {
            agree: gap <= 10.0 * opts.tol,
            gap,
        })
    }

    /// `T_c = inf { T > 0 : u₀(T, ·) = 0 }`, located by bisection of the
    /// normal/superconducting classification over `[τ₁, τ₂]`.
    pub fn critical_temperature(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::domain("critical_temperature", "tolerance must be > 0"));
        }
        let opts = SolveOptions {
            tol: 1e-13,
            max_iter: 200_000,
            ..SolveOptions::default()
        };
        let mut lo = self.tau1;
        let mut hi = self.tau2;
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mut history = Vec::new();
        let normal_at = |temp: f64, hist: &mut Vec<(f64, bool)>| -> Result<bool> {
            let p = self.solve_fixed_point(temp, &opts)?.phase == Phase::Normal;
            hist.push((temp, p));
            Ok(p)
        };
        if normal_at(lo, &mut history)? {
            // already normal at τ₁: the infimum is the lower edge itself
            return Ok(lo);
        }
        if !normal_at(hi * (1.0 - 1e-13), &mut history)? {
            return Err(Error::BracketDiagnostic {
                message: format!("still superconducting at tau2 = {hi}"),
                history,
            });
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if normal_at(mid, &mut history)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Solves every slice of an increasing temperature grid. Slices at or
    /// above the located `T_c` are identically zero; below it each slice
    /// warm-starts from its predecessor (or runs cold in parallel when
    /// `warm_start` is off).
    pub fn sweep(
        &self,
        t_grid: &[f64],
        tc_tol: f64,
        opts: &SolveOptions,
        warm_start: bool,
    ) -> Result<GapSurface> {
        if t_grid.is_empty() {
            return Err(Error::domain("sweep", "empty temperature grid"));
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sweep", "temperature grid must be strictly increasing"));
        }
        if t_grid[0] < 0.0 {
            return Err(Error::domain("sweep", "temperatures must be nonnegative"));
        }
        let tc = self.critical_temperature(tc_tol)?;
        let n = self.grid.len();

        let solve_slice = |t: f64, start: Option<&[f64]>| -> Result<GapSolution> {
            if t >= tc {
                return Ok(GapSolution {
                    t,
                    values: vec![0.0; n],
                    iterations: 0,
                    residual: 0.0,
                    phase: Phase::Normal,
                });
            }
            let sol = match start {
                Some(s) => self.solve_from(t, s, opts),
                None => self.solve_fixed_point(t, opts),
            }
            .map_err(|e| annotate_slice_error(e, t))?;
            self.audit_profile(&sol)?;
            Ok(sol)
        };

        let slices: Vec<GapSolution> = if warm_start {
            let mut acc: Vec<GapSolution> = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let start = acc
                    .last()
                    .filter(|s| s.phase == Phase::Superconducting)
                    .map(|s| s.values.clone());
                acc.push(solve_slice(t, start.as_deref())?);
            }
            acc
        } else {
            t_grid
                .par_iter()
                .map(|&t| solve_slice(t, None))
                .collect::<Result<Vec<_>>>()?
        };

        let closeness = t_grid
            .iter()
            .copied()
            .chain((0..=64).map(|k| self.tau2 * k as f64 / 64.0))
            .filter(|&t| t <= self.tau2)
            .map(|t| self.delta2_memo(t) - self.delta1_memo(t))
            .fold(0.0f64, f64::max);

        Ok(GapSurface {
            t_grid: t_grid.to_vec(),
            x_grid: self.grid.nodes().to_vec(),
            values: slices.iter().map(|s| s.values.clone()).collect(),
            tc,
            closeness,
            iterations: slices.iter().map(|s| s.iterations).collect(),
            residuals: slices.iter().map(|s| s.residual).collect(),
        })
    }

    /// A slice must not mix zero and positive nodes: if one node vanished,
    /// all must (zero propagation).
    fn audit_profile(&self, sol: &GapSolution) -> Result<()> {
        let min = sol.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = sol.sup();
        if min < self.zero_threshold && max > 10.0 * self.zero_threshold {
            return Err(Error::InvariantViolation(format!(
                "mixed zero/positive gap profile at T = {}: min {min:.3e}, max {max:.3e}",
                sol.t
            )));
        }
        Ok(())
    }
}

fn annotate_slice_error(e: Error, t: f64) -> Error {
    match e {
        Error::NonConvergence {
            iterations,
            last_residual,
            residual_history,
        } => Error::NonConvergence {
            iterations,
            last_residual,
            residual_history: {
                // first entry marks the failing temperature
                let mut h = residual_history;
                h.insert(0, t);
                h
            },
        },
        other => other,
    }
}

#[inline]
fn phi_factor(xi: f64, u: f64, t: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let e = xi.hypot(u);
    u * tanh_factor(e, t) / e
}

fn damped_step(u: &[f64], f: &[f64], lambda: f64) -> Vec<f64> {
    u.iter().zip(f).map(|(x, y)| x + lambda * y).collect()
}

fn clamp_slice(u: &mut [f64], lo: f64, hi: f64) {
    for v in u {
        *v = v.clamp(lo, hi);
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One Anderson (type-II) step with mixing `beta`: minimizes
/// `‖f − ΔF γ‖₂` over the history window and combines
/// `u + β f − (ΔU + β ΔF) γ`. Returns `None` when the tiny normal-equation
/// system cannot be trusted.
fn anderson_step(
    window: &[(Vec<f64>, Vec<f64>)],
    u: &[f64],
    f: &[f64],
    beta: f64,
) -> Option<Vec<f64>> {
    let m = window.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in i..m {
            let v = dot(&window[i].1, &window[j].1);
            a[i][j] = v;
            a[j][i] = v;
        }
        rhs[i] = dot(&window[i].1, f);
    }
    let reg = 1e-12
        * (0..m)
            .map(|i| a[i][i])
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += reg;
    }
    let gamma = solve_small(&mut a, &mut rhs)?;
    if gamma.iter().any(|g| !g.is_finite() || g.abs() > 1e8) {
        return None;
    }
    let mut next: Vec<f64> = u.iter().zip(f).map(|(x, y)| x + beta * y).collect();
    for (k, g) in gamma.iter().enumerate() {
        let (du, df) = &window[k];
        for i in 0..next.len() {
            next[i] -= g * (du[i] + beta * df[i]);
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(next)
}

/// Gaussian elimination with partial pivoting for the m×m (m = Anderson
/// depth) system; `a` and `b` are consumed.
fn solve_small(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in col + 1..m {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Keeps non-convergence errors readable: a coarse subsample of the long
/// run plus the tail.
fn compress_history(h: Vec<f64>) -> Vec<f64> {
    if h.len() <= 64 {
        return h;
    }
    let stride = h.len() / 48;
    let mut out: Vec<f64> = h.iter().step_by(stride).cloned().collect();
    out.extend_from_slice(&h[h.len() - 8..]);
    out
}
