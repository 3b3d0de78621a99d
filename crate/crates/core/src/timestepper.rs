//! Implicit product-integration scheme for `∂t(k ∗ (u − u0)) + A u = f`.
//!
//! With `a_j = ∫_{jτ}^{(j+1)τ} k` and `v^j = u^j − u^0`, the memory term at
//! `t_n` is
//!
//! ```text
//! D_n(u) = (1/τ) [a_0 v^n − Σ_{j=1}^{n−1} d_{n−j} v^j],   d_m = a_{m−1} − a_m,
//! ```
//!
//! the L1 scheme when `k = g_{1−α}`. Each step solves
//! `((a_0/τ) I + A) u^n = f^n + (a_0/τ) u^0 + (1/τ) Σ d_{n−j} v^j`; the matrix is
//! an M-matrix and `d_m ≥ 0` for non-increasing `k`, so the scheme is monotone.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use crate::fraclap::{assemble, NonlocalOperator, SpaceGrid1D};
use crate::kernels::{cell_integrals, CellIntegrals, KernelPairHandle, TimeGrid};

/// Space-time samples: `rows[i]` holds the nodal values at `t_i`.
pub type Field = Vec<Vec<f64>>;

#[derive(Clone, Debug)]
pub struct ProblemData {
    pub pair: KernelPairHandle,
    pub s: f64,
    pub grid: SpaceGrid1D,
    pub time: TimeGrid,
    /// `f` at every time node, `time.steps + 1` rows of `grid.n` values.
    pub f: Field,
    pub u0: Vec<f64>,
    /// Allow data of either sign (comparison tests); otherwise `f, u0 ≥ 0`.
    pub signed: bool,
}

impl ProblemData {
    /// Data constant in time.
    pub fn stationary(
        pair: KernelPairHandle,
        s: f64,
        grid: SpaceGrid1D,
        time: TimeGrid,
        f: Vec<f64>,
        u0: Vec<f64>,
    ) -> Self {
        let f = vec![f; time.steps + 1];
        Self {
            pair,
            s,
            grid,
            time,
            f,
            u0,
            signed: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        if self.u0.len() != n {
            return Err(usage(format!("u0 has {} values, grid has {n} nodes", self.u0.len())));
        }
        if self.f.len() != self.time.steps + 1 {
            return Err(usage(format!(
                "f has {} time rows, expected {}",
                self.f.len(),
                self.time.steps + 1
            )));
        }
        if let Some(row) = self.f.iter().position(|r| r.len() != n) {
            return Err(usage(format!("f row {row} has the wrong length")));
        }
        let values = self.f.iter().flatten().chain(&self.u0);
        if values.clone().any(|v| !v.is_finite()) {
            return Err(domain("data contains non-finite values"));
        }
        if !self.signed && values.clone().any(|&v| v < 0.0) {
            return Err(domain("f and u0 must be non-negative unless signed data is enabled"));
        }
        Ok(())
    }

    /// Copy with `f` and `u0` replaced by `T_m(f)`, `T_m(u0)`.
    pub fn truncated(&self, m: f64) -> Self {
        let t = |v: &f64| v.clamp(-m, m);
        Self {
            f: self.f.iter().map(|r| r.iter().map(t).collect()).collect(),
            u0: self.u0.iter().map(t).collect(),
            ..self.clone()
        }
    }
}

/// Cell integrals `a_j` of `k` and the history weights `d_j = a_{j−1} − a_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeWeights {
    pub a: CellIntegrals,
    /// `d[0]` is unused and set to 0.
    pub d: Vec<f64>,
}

impl SchemeWeights {
    pub fn new(a: CellIntegrals) -> Self {
        let mut d = vec![0.0; a.len()];
        for j in 1..a.len() {
            d[j] = a.values[j - 1] - a.values[j];
        }
        Self { a, d }
    }

    pub fn for_problem(problem: &ProblemData) -> Result<Self> {
        let a = cell_integrals(&problem.pair.k, problem.time.tau(), problem.time.steps)?;
        Ok(Self::new(a))
    }

    pub fn tau(&self) -> f64 {
        self.a.tau
    }

    pub fn is_monotone(&self) -> bool {
        self.a.is_non_negative() && self.d.iter().all(|&d| d >= 0.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteSolution {
    pub time: TimeGrid,
    pub grid: SpaceGrid1D,
    pub s: f64,
    pub pair: KernelPairHandle,
    /// `u[i]` at `t_i`; `u[0] = u0`.
    pub u: Field,
    /// `max_x |D_n(u) + A u^n − f^n|` relative to `1 + max |f^n|`, per step.
    pub step_residuals: Vec<f64>,
}

impl DiscreteSolution {
    pub fn max_step_residual(&self) -> f64 {
        self.step_residuals.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.u.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `D_n(u)`: the discrete `∂t(k ∗ (u − u0))` at `t_n`.
pub fn memory_apply(weights: &SchemeWeights, history: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(usage("memory term is defined for n >= 1"));
    }
    if history.len() <= n {
        return Err(usage(format!(
            "history has {} levels, step {n} needs {}",
            history.len(),
            n + 1
        )));
    }
    if n > weights.a.len() {
        return Err(usage(format!("weights cover {} steps, asked for {n}", weights.a.len())));
    }
    let a = &weights.a.values;
    let u0 = &history[0];
    let inv_tau = 1.0 / weights.tau();
    let mut out: Vec<f64> = history[n].iter().zip(u0).map(|(u, z)| a[0] * (u - z)).collect();
    for j in 1..n {
        let c = a[n - j] - a[n - 1 - j];
        for ((o, u), z) in out.iter_mut().zip(&history[j]).zip(u0) {
            *o += c * (u - z);
        }
    }
    out.iter_mut().for_each(|o| *o *= inv_tau);
    Ok(out)
}

/// Factorized `(a_0/τ) I + A`.
pub struct Stepper {
    pub operator: NonlocalOperator,
    pub weights: SchemeWeights,
    factor: Cholesky<f64, Dyn>,
}

impl Stepper {
    pub fn new(operator: NonlocalOperator, weights: SchemeWeights) -> Result<Self> {
        let n = operator.len();
        let shift = weights.a.values[0] / weights.tau();
        let system = &operator.entries + DMatrix::identity(n, n) * shift;
        let factor = Cholesky::new(system).ok_or_else(|| {
            Error::Internal("system matrix is not positive definite".to_string())
        })?;
        Ok(Self {
            operator,
            weights,
            factor,
        })
    }

    /// Solves for `u^n` given `u^0..u^{n−1}` in `history` and `f^n`.
    pub fn step(&self, history: &[Vec<f64>], f_n: &[f64], n: usize) -> Result<Vec<f64>> {
        if n == 0 || history.len() < n {
            return Err(usage(format!("step {n} needs {n} previous levels")));
        }
        let w = &self.weights;
        let inv_tau = 1.0 / w.tau();
        let u0 = &history[0];
        let mut rhs: Vec<f64> = f_n
            .iter()
            .zip(u0)
            .map(|(f, z)| f + w.a.values[0] * inv_tau * z)
            .collect();
        for j in 1..n {
            let c = w.d[n - j] * inv_tau;
            if c == 0.0 {
                continue;
            }
            for ((r, u), z) in rhs.iter_mut().zip(&history[j]).zip(u0) {
                *r += c * (u - z);
            }
        }
        let x = self.factor.solve(&DVector::from_vec(rhs));
        Ok(x.as_slice().to_vec())
    }
}

pub fn solve(problem: &ProblemData) -> Result<DiscreteSolution> {
    problem.validate()?;
    let operator = assemble(problem.grid, problem.s)?;
    let weights = SchemeWeights::for_problem(problem)?;
    let stepper = Stepper::new(operator, weights)?;
    solve_with(problem, &stepper)
}

/// Marches with a prebuilt stepper; the stepper must match the problem grids.
pub fn solve_with(problem: &ProblemData, stepper: &Stepper) -> Result<DiscreteSolution> {
    problem.validate()?;
    let steps = problem.time.steps;
    if stepper.operator.grid != problem.grid || stepper.weights.a.len() != steps {
        return Err(usage("stepper was built for a different grid"));
    }
    let mut u = Vec::with_capacity(steps + 1);
    u.push(problem.u0.clone());
    let mut step_residuals = Vec::with_capacity(steps);
    for n in 1..=steps {
        let next = stepper.step(&u, &problem.f[n], n)?;
        u.push(next);
        let mem = memory_apply(&stepper.weights, &u, n)?;
        let au = stepper.operator.apply(&u[n])?;
        let f = &problem.f[n];
        let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = mem
            .iter()
            .zip(&au)
            .zip(f)
            .fold(0.0f64, |m, ((d, a), f)| m.max((d + a - f).abs()));
        step_residuals.push(r / scale);
    }
    Ok(DiscreteSolution {
        time: problem.time,
        grid: problem.grid,
        s: problem.s,
        pair: problem.pair.clone(),
        u,
        step_residuals,
    })
}

/// `τ h Σ_{n≥1} Σ_i |v^n_i|`: the right-endpoint rule the scheme is built on.
pub fn space_time_l1(field: &[Vec<f64>], tau: f64, h: f64) -> f64 {
    tau * h * field.iter().skip(1).flatten().map(|v| v.abs()).sum::<f64>()
}

/// Same rule applied to the positive part.
pub fn space_time_l1_positive(field: &[Vec<f64>], tau: f64, h: f64) -> f64 {
    tau * h * field.iter().skip(1).flatten().map(|v| v.max(0.0)).sum::<f64>()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxReport {
    pub levels: Vec<f64>,
    /// Node/step pairs with `u^m > u^{m'}` for consecutive levels `m < m'`.
    pub monotonicity_violations: usize,
    pub negative_values: usize,
    /// `‖u^m‖_{L¹}` and the bound `T ‖T_m u0‖ + ‖l‖ ‖T_m f‖`, per level.
    pub l1_norms: Vec<f64>,
    pub l1_bounds: Vec<f64>,
}

/// Solves the truncated problems `(T_m f, T_m u0)` for every level.
pub fn approx_driver(
    problem: &ProblemData,
    levels: &[f64],
) -> Result<(Vec<DiscreteSolution>, ApproxReport)> {
    if levels.is_empty() {
        return Err(usage("approximation needs at least one level"));
    }
    if levels.iter().any(|m| !(*m > 0.0)) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("truncation levels must be positive and strictly increasing"));
    }
    problem.validate()?;
    let operator = assemble(problem.grid, problem.s)?;
    let stepper = Stepper::new(operator, SchemeWeights::for_problem(problem)?)?;
    let (tau, h) = (problem.time.tau(), problem.grid.h);
    let l_norm = problem.pair.l_norm_l1(problem.time.horizon);

    let mut sols = Vec::with_capacity(levels.len());
    let mut l1_norms = Vec::new();
    let mut l1_bounds = Vec::new();
    let mut negative_values = 0;
    for &m in levels {
        let data = problem.truncated(m);
        let sol = solve_with(&data, &stepper)?;
        negative_values += sol.u.iter().flatten().filter(|&&v| v < 0.0).count();
        l1_norms.push(space_time_l1(&sol.u, tau, h));
        l1_bounds.push(
            problem.time.horizon * problem.grid.l1_norm(&data.u0)
                + l_norm * space_time_l1(&data.f, tau, h),
        );
        sols.push(sol);
    }
    let monotonicity_violations = sols
        .windows(2)
        .map(|w| {
            w[0].u
                .iter()
                .flatten()
                .zip(w[1].u.iter().flatten())
                .filter(|(lo, hi)| lo > hi)
                .count()
        })
        .sum();
    let report = ApproxReport {
        levels: levels.to_vec(),
        monotonicity_violations,
        negative_values,
        l1_norms,
        l1_bounds,
    };
    Ok((sols, report))
}

/// Builtin spatial profiles on `(a, b)`, centred at the midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `exp(1 − 1/(1 − r²))` for `r = |x − c|/(L/4) < 1`.
    Bump,
    /// `|x − c|^{−1/2}`, with `|x − c|` floored at `h/2`.
    Spike,
    /// `1` on `|x − c| ≤ L/4`.
    Indicator,
}

impl Profile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(Self::Zero),
            "bump" => Some(Self::Bump),
            "spike" => Some(Self::Spike),
            "indicator" => Some(Self::Indicator),
            _ => None,
        }
    }

    pub fn sample(self, grid: &SpaceGrid1D) -> Vec<f64> {
        let c = 0.5 * (grid.a + grid.b);
        let quarter = 0.25 * (grid.b - grid.a);
        grid.nodes()
            .into_iter()
            .map(|x| {
                let d = (x - c).abs();
                match self {
                    Self::Zero => 0.0,
                    Self::Bump => {
                        let r = d / quarter;
                        if r < 1.0 {
                            (1.0 - 1.0 / (1.0 - r * r)).exp()
                        } else {
                            0.0
                        }
                    }
                    Self::Spike => d.max(0.5 * grid.h).powf(-0.5),
                    Self::Indicator => {
                        if d <= quarter {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn backward_euler_for_constant_kernel() {
        let k = KernelSpec::tabulated(vec![0.0], vec![1.0]).unwrap();
        let w = SchemeWeights::new(cell_integrals(&k, 0.1, 4).unwrap());
        let hist = vec![vec![1.0, 2.0], vec![1.5, 1.0]];
        let d = memory_apply(&w, &hist, 1).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
        assert!((d[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_history_is_usage_error() {
        let k = KernelSpec::riemann_liouville(0.5).unwrap();
        let w = SchemeWeights::new(cell_integrals(&k, 0.1, 4).unwrap());
        assert!(memory_apply(&w, &[vec![0.0]], 1).is_err());
        assert!(memory_apply(&w, &[vec![0.0], vec![0.0]], 0).is_err());
    }

    #[test]
    fn profiles_are_non_negative() {
        let grid = SpaceGrid1D::new(-1.0, 1.0, 31).unwrap();
        for p in [Profile::Bump, Profile::Spike, Profile::Indicator] {
            let v = p.sample(&grid);
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!(v.iter().any(|&x| x > 0.0));
        }
        assert_eq!(Profile::parse("spike"), Some(Profile::Spike));
        assert_eq!(Profile::parse("nope"), None);
    }
}
