//! Resolvent families of the PC pair and the Yosida kernels built from them.
//!
//! For `λ > 0`, `s_λ` solves `s_λ + λ⁻¹ (l ∗ s_λ) = 1`. Then
//! `k_λ = s_λ/λ = k ∗ r_λ` with `r_λ = −s_λ'`.
//!
//! `s_λ` behaves like `1 − c t^β` near zero (β the small-time exponent of
//! `l`) and, for small `λ`, drops to zero on a time scale `λ^{1/β}`. The
//! solve therefore runs product-trapezoid on a graded mesh `T (j/M)^r`
//! and evaluates the uniform grid through the Nyström interpolant.

mod mittag_leffler;

pub use mittag_leffler::mittag_leffler;

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};
use crate::kernels::{KernelPairHandle, KernelSpec, TimeGrid};

/// Samples of `s_λ`, `k_λ` and cell increments of `r_λ` for one `λ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct YosidaFamily {
    pub lambda: f64,
    pub grid: TimeGrid,
    /// `s_λ(t_i)`, `i = 0..=n`.
    pub s_values: Vec<f64>,
    /// `k_λ(t_i) = s_λ(t_i)/λ`.
    pub klambda_values: Vec<f64>,
    /// `∫_{t_i}^{t_{i+1}} r_λ = s_λ(t_i) − s_λ(t_{i+1})`, `i = 0..n`.
    pub r_increments: Vec<f64>,
    /// Graded solve mesh and the values of `s_λ` on it.
    pub mesh: Vec<f64>,
    pub mesh_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Number of mesh cells; `None` uses `max(grid steps, 64)`.
    pub mesh_cells: Option<usize>,
    /// Grading exponent; `None` uses `clamp(2/β, 1, 8)`.
    pub grading: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mesh_cells: None,
            grading: None,
        }
    }
}

pub fn solve_s_lambda(
    pair: &KernelPairHandle,
    lambda: f64,
    grid: TimeGrid,
) -> Result<YosidaFamily> {
    solve_s_lambda_with(pair, lambda, grid, SolveOptions::default())
}

pub fn solve_s_lambda_with(
    pair: &KernelPairHandle,
    lambda: f64,
    grid: TimeGrid,
    opts: SolveOptions,
) -> Result<YosidaFamily> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be > 0, got {lambda}")));
    }
    let l = &pair.l;
    l.validate()?;
    let cells = opts.mesh_cells.unwrap_or(grid.steps.max(64)).max(2);
    let grading = opts
        .grading
        .unwrap_or_else(|| (2.0 / l.small_time_exponent()).clamp(1.0, 8.0));
    let mesh = graded_mesh(grid.horizon, cells, grading);
    let inv_lambda = 1.0 / lambda;

    let mut values = vec![0.0; mesh.len()];
    values[0] = 1.0;
    let mut m = Vec::with_capacity(mesh.len());
    for i in 1..mesh.len() {
        cell_moments(l, mesh[i], &mesh[..=i], &mut m);
        let (history, diag) = history_sum(&m, &mesh[..=i], &values[..i]);
        values[i] = (1.0 - inv_lambda * history) / (1.0 + inv_lambda * diag);
    }

    let s_values: Vec<f64> = (0..=grid.steps)
        .map(|i| nystrom(l, inv_lambda, &mesh, &values, grid.time(i), &mut m))
        .collect();
    let klambda_values = s_values.iter().map(|s| s * inv_lambda).collect();
    let r_increments = s_values.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(YosidaFamily {
        lambda,
        grid,
        s_values,
        klambda_values,
        r_increments,
        mesh,
        mesh_values: values,
    })
}

fn graded_mesh(horizon: f64, cells: usize, grading: f64) -> Vec<f64> {
    (0..=cells)
        .map(|j| {
            if j == cells {
                horizon
            } else {
                horizon * (j as f64 / cells as f64).powf(grading)
            }
        })
        .collect()
}

/// `(∫ l, ∫ (ρ − lo) l)` over the lag interval `[t − mesh[c+1], t − mesh[c]]`
/// of every cell `c`.
fn cell_moments(l: &KernelSpec, t: f64, mesh: &[f64], out: &mut Vec<(f64, f64)>) {
    out.clear();
    out.extend(mesh.windows(2).map(|c| l.moments((t - c[1]).max(0.0), t - c[0])));
}

/// Product-trapezoid sum `Σ_c ∫_{mesh_c}^{mesh_{c+1}} l(t − σ) ŝ(σ) dσ` over
/// the given cells, split into the part known from `known` and the weight
/// multiplying the value at the last mesh point (the unknown).
fn history_sum(moments: &[(f64, f64)], mesh: &[f64], known: &[f64]) -> (f64, f64) {
    let cells = mesh.len() - 1;
    let mut history = 0.0;
    let mut diag = 0.0;
    for (c, &(m0, m1)) in moments.iter().enumerate() {
        // ρ = t − σ runs backwards, so ρ − lo weights the left end σ = mesh[c]
        let w = mesh[c + 1] - mesh[c];
        let (w_left, w_right) = if w > 0.0 { (m1 / w, m0 - m1 / w) } else { (0.0, 0.0) };
        history += w_left * known[c];
        if c + 1 < cells {
            history += w_right * known[c + 1];
        } else {
            diag = w_right;
        }
    }
    (history, diag)
}

/// Nyström evaluation of `s_λ(t)` from the mesh solution.
fn nystrom(
    l: &KernelSpec,
    inv_lambda: f64,
    mesh: &[f64],
    values: &[f64],
    t: f64,
    m: &mut Vec<(f64, f64)>,
) -> f64 {
    let last = mesh.partition_point(|&x| x <= t) - 1;
    if mesh[last] == t {
        return values[last];
    }
    let mut nodes = mesh[..=last].to_vec();
    nodes.push(t);
    cell_moments(l, t, &nodes, m);
    let (history, diag) = history_sum(m, &nodes, &values[..=last]);
    (1.0 - inv_lambda * history) / (1.0 + inv_lambda * diag)
}

/// `max |ŝ(t_c) + λ⁻¹ (l ∗ ŝ)(t_c) − 1|` over the solve mesh, with `ŝ` the
/// piecewise-linear interpolant of the stored mesh values and the convolution
/// recomputed cell by cell from [`KernelSpec::moments`].
pub fn volterra_residual(family: &YosidaFamily, pair: &KernelPairHandle) -> f64 {
    let mesh = &family.mesh;
    let s = &family.mesh_values;
    let mut worst: f64 = (s[0] - 1.0).abs();
    for i in 1..mesh.len() {
        let t = mesh[i];
        let mut conv = 0.0;
        for c in 0..i {
            let lo = t - mesh[c + 1];
            let hi = t - mesh[c];
            let (m0, m1) = pair.l.moments(lo.max(0.0), hi);
            let w = hi - lo;
            conv += s[c] * m1 / w + s[c + 1] * (m0 - m1 / w);
        }
        worst = worst.max((s[i] + conv / family.lambda - 1.0).abs());
    }
    worst
}

/// `k_λ = s_λ/λ` on the uniform grid.
pub fn yosida_kernel(family: &YosidaFamily) -> &[f64] {
    &family.klambda_values
}

/// Relative `L¹(0,T)` distance between `s_λ/λ` and the Stieltjes sum
/// `∫ k(t − σ) dR(σ)`, `R = 1 − s_λ`, both on the solve mesh.
pub fn yosida_cross_check(family: &YosidaFamily, k: &KernelSpec) -> f64 {
    let mesh = &family.mesh;
    let s = &family.mesh_values;
    let inv_lambda = 1.0 / family.lambda;
    let mut via_r = vec![0.0; mesh.len()];
    for i in 1..mesh.len() {
        let t = mesh[i];
        let mut acc = 0.0;
        for c in 0..i {
            let w = mesh[c + 1] - mesh[c];
            let rate = (s[c] - s[c + 1]) / w;
            acc += rate * (k.antiderivative(t - mesh[c]) - k.antiderivative(t - mesh[c + 1]));
        }
        via_r[i] = acc;
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 1..mesh.len() {
        let w = mesh[i] - mesh[i - 1];
        let a = |j: usize| s[j] * inv_lambda;
        // skip the first cell, where (k ∗ r)(0) = 0 but k_λ(0) = 1/λ
        if i > 1 {
            diff += 0.5 * w * ((a(i) - via_r[i]).abs() + (a(i - 1) - via_r[i - 1]).abs());
        }
        norm += 0.5 * w * (a(i) + a(i - 1));
    }
    diff / norm
}

/// `‖k_λ − k‖_{L¹(0,T)}`, cell by cell on the solve mesh: `k` integrated
/// exactly, `k_λ` by the trapezoidal rule.
pub fn l1_distance(family: &YosidaFamily, k: &KernelSpec) -> f64 {
    let mesh = &family.mesh;
    let s = &family.mesh_values;
    (1..mesh.len())
        .map(|i| {
            let exact = k.integral(mesh[i - 1], mesh[i]);
            let approx = 0.5 * (mesh[i] - mesh[i - 1]) * (s[i] + s[i - 1]) / family.lambda;
            (exact - approx).abs()
        })
        .sum()
}

/// `v_μ(t) = ∫_t^T r_μ(τ − t) v(τ) dτ` as a Stieltjes sum against the
/// increments of `s_μ`, with `v` averaged over each cell.
pub fn time_regularize(v: &[f64], family_mu: &YosidaFamily) -> Result<Vec<f64>> {
    let n = family_mu.grid.steps;
    if v.len() != n + 1 {
        return Err(usage(format!(
            "field has {} time samples but the resolvent grid has {}",
            v.len(),
            n + 1
        )));
    }
    let r = &family_mu.r_increments;
    Ok((0..=n)
        .map(|i| {
            (i..n)
                .map(|m| r[m - i] * 0.5 * (v[m] + v[m + 1]))
                .sum()
        })
        .collect())
}

/// [`time_regularize`] applied node by node to a time-major field.
pub fn time_regularize_field(v: &[Vec<f64>], family_mu: &YosidaFamily) -> Result<Vec<Vec<f64>>> {
    let width = v.first().map_or(0, Vec::len);
    if v.iter().any(|row| row.len() != width) {
        return Err(usage("ragged field"));
    }
    let mut out = vec![vec![0.0; width]; v.len()];
    let mut column = vec![0.0; v.len()];
    for x in 0..width {
        for (c, row) in column.iter_mut().zip(v) {
            *c = row[x];
        }
        for (row, val) in out.iter_mut().zip(time_regularize(&column, family_mu)?) {
            row[x] = val;
        }
    }
    Ok(out)
}

/// Fitted constants for `0 ≤ k_λ ≤ C₁ k + C₂` on the grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    /// Smallest value of the bounded quantity; negative means the sign condition failed.
    pub min_value: f64,
    pub violation: bool,
}

/// Minimal `C₁` with `C₂ = k_λ(T)`, fitted on `t_1..t_n`.
pub fn check_k1(family: &YosidaFamily, k: &KernelSpec) -> BoundFit {
    let times = family.grid.nodes();
    let kl = &family.klambda_values;
    let c2 = *kl.last().unwrap();
    let mut c1: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    let mut unbounded = false;
    for i in 1..times.len() {
        min_value = min_value.min(kl[i]);
        let excess = kl[i] - c2;
        if excess > 0.0 {
            let kv = k.value(times[i]);
            if kv > 0.0 {
                c1 = c1.max(excess / kv);
            } else {
                unbounded = true;
            }
        }
    }
    BoundFit {
        c1,
        c2,
        min_value: min_value.min(kl[0]),
        violation: unbounded || min_value < 0.0 || kl[0] < 0.0,
    }
}

/// True when `0 ≤ k_λ(t_i) ≤ c1 k(t_i) + c2` at every positive grid node.
pub fn k1_holds(family: &YosidaFamily, k: &KernelSpec, c1: f64, c2: f64) -> bool {
    let times = family.grid.nodes();
    (1..times.len()).all(|i| {
        let v = family.klambda_values[i];
        v >= 0.0 && v <= c1 * k.value(times[i]) + c2
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct K2Report {
    pub fit: BoundFit,
    /// `(t_i, |k_λ'(t_i) − k'(t_i)|)` on interior nodes.
    pub derivative_error: Vec<(f64, f64)>,
}

/// Central differences of `k_λ` at interior nodes `i = 2..n−1` (the first
/// cell is excluded); `k'` analytic when available.
pub fn klambda_derivative(family: &YosidaFamily) -> Vec<(f64, f64)> {
    let tau = family.grid.tau();
    let kl = &family.klambda_values;
    (2..family.grid.steps)
        .map(|i| (family.grid.time(i), (kl[i + 1] - kl[i - 1]) / (2.0 * tau)))
        .collect()
}

fn kernel_derivative(k: &KernelSpec, t: f64, tau: f64) -> f64 {
    k.derivative(t)
        .unwrap_or_else(|| (k.value(t + tau) - k.value(t - tau)) / (2.0 * tau))
}

/// Fit `−k_λ' ≤ −C₁ k' + C₂` with `C₂ = −k_λ'` at the last interior node.
pub fn check_k2(family: &YosidaFamily, k: &KernelSpec) -> K2Report {
    let tau = family.grid.tau();
    let deriv = klambda_derivative(family);
    let c2 = deriv.last().map_or(0.0, |&(_, d)| -d).max(0.0);
    let mut c1: f64 = 0.0;
    let mut c2_flat = c2;
    let mut min_value = f64::INFINITY;
    let mut errors = Vec::with_capacity(deriv.len());
    for &(t, dl) in &deriv {
        let dk = kernel_derivative(k, t, tau);
        errors.push((t, (dl - dk).abs()));
        let neg = -dl;
        min_value = min_value.min(neg);
        let excess = neg - c2;
        if excess > 0.0 {
            if -dk > 0.0 {
                c1 = c1.max(excess / -dk);
            } else {
                c2_flat = c2_flat.max(neg);
            }
        }
    }
    K2Report {
        fit: BoundFit {
            c1,
            c2: c2_flat,
            min_value,
            violation: min_value < 0.0,
        },
        derivative_error: errors,
    }
}
