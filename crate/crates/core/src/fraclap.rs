//! Dense 1D discretization of `(−Δ)ˢ` on `(a, b)` with `u = 0` outside.
//!
//! Row `i` splits the principal-value integral at `|y − x_i| = h`. The inner
//! part is replaced by the second difference times `∫_{|z|<h} z²/2 |z|^{−1−2s}`,
//! the outer part integrates the kernel exactly against the piecewise-linear
//! interpolant of `u` (zero at `a`, `b` and beyond). Everything is scaled by
//! `C_{1,s} = 4ˢ s Γ(½ + s) / (√π Γ(1 − s))`, so smooth functions see the
//! Fourier-symbol operator `|ξ|^{2s}`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use crate::special::gamma;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid1D {
    pub a: f64,
    pub b: f64,
    /// Interior node count.
    pub n: usize,
    pub h: f64,
}

impl SpaceGrid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(domain(format!("interval needs a < b, got ({a}, {b})")));
        }
        if n == 0 {
            return Err(domain("space grid needs at least one interior node"));
        }
        Ok(Self {
            a,
            b,
            n,
            h: (b - a) / (n + 1) as f64,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// `h Σ |u_i|`.
    pub fn l1_norm(&self, u: &[f64]) -> f64 {
        self.h * u.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Normalizing constant of the 1D fractional Laplacian.
pub fn normalization(s: f64) -> f64 {
    4f64.powf(s) * s * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

/// `(−Δ)ˢ (1 − x²)ˢ₊ ≡ 4ˢ Γ(1 + s) Γ(½ + s) / Γ(½)` inside `(−1, 1)`.
pub fn getoor_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s) / gamma(0.5)
}

#[derive(Clone, Debug)]
pub struct NonlocalOperator {
    pub s: f64,
    pub grid: SpaceGrid1D,
    pub entries: DMatrix<f64>,
}

/// `∫_{k−1}^{k+1} hat(t − k) t^{−1−2s} dt`, restricted to `t ≥ 1` when `k = 1`.
fn far_weight(s: f64, k: usize) -> f64 {
    let p = -1.0 - 2.0 * s;
    let kf = k as f64;
    if k >= 3 {
        let mut acc = 0.0;
        for (x, w) in GL16 {
            for sign in [-1.0, 1.0] {
                // on [k−1, k] the hat is t − k + 1, on [k, k+1] it is k + 1 − t
                let t_left = kf - 0.5 + sign * 0.5 * x;
                let t_right = kf + 0.5 + sign * 0.5 * x;
                acc += 0.5 * w * ((t_left - kf + 1.0) * t_left.powf(p) + (kf + 1.0 - t_right) * t_right.powf(p));
            }
        }
        return acc;
    }
    // ∫ t^{−1−2s} and ∫ t^{−2s} in closed form
    let m0 = |lo: f64, hi: f64| (lo.powf(-2.0 * s) - hi.powf(-2.0 * s)) / (2.0 * s);
    let m1 = |lo: f64, hi: f64| {
        if (s - 0.5).abs() < 1e-12 {
            (hi / lo).ln()
        } else {
            (hi.powf(1.0 - 2.0 * s) - lo.powf(1.0 - 2.0 * s)) / (1.0 - 2.0 * s)
        }
    };
    let right = (kf + 1.0) * m0(kf, kf + 1.0) - m1(kf, kf + 1.0);
    if k == 1 {
        return right;
    }
    let left = m1(kf - 1.0, kf) - (kf - 1.0) * m0(kf - 1.0, kf);
    left + right
}

const GL16: [(f64, f64); 8] = [
    (0.0950125098376374401853193, 0.1894506104550684962853967),
    (0.2816035507792589132304605, 0.1826034150449235888667637),
    (0.4580167776572273863424194, 0.1691565193950025381893121),
    (0.6178762444026437484466718, 0.1495959888165767320815017),
    (0.7554044083550030338951012, 0.1246289712555338720524763),
    (0.8656312023878317438804679, 0.0951585116824927848099251),
    (0.9445750230732325760779884, 0.0622535239386478928628438),
    (0.9894009349916499325961542, 0.0271524594117540948517806),
];

pub fn assemble(grid: SpaceGrid1D, s: f64) -> Result<NonlocalOperator> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("fractional order must lie in (0,1), got {s}")));
    }
    let n = grid.n;
    let scale = normalization(s) * grid.h.powf(-2.0 * s);
    let near = 1.0 / (2.0 - 2.0 * s);
    // the operator is Toeplitz: one weight per distance
    let band: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| match k {
            0 => scale * (1.0 / s + 2.0 * near),
            1 => -scale * (far_weight(s, 1) + near),
            _ => -scale * far_weight(s, k),
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |i, j| band[i.abs_diff(j)]);
    Ok(NonlocalOperator { s, grid, entries })
}

impl NonlocalOperator {
    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.n {
            return Err(usage(format!(
                "vector has {} entries but the operator has {} nodes",
                u.len(),
                self.grid.n
            )));
        }
        Ok(())
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok((&self.entries * DVector::from_column_slice(u)).as_slice().to_vec())
    }

    /// `uᵀ A u`.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let v = DVector::from_column_slice(u);
        Ok(v.dot(&(&self.entries * &v)))
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let v = DVector::from_column_slice(v);
        Ok(DVector::from_column_slice(u).dot(&(&self.entries * &v)))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    /// Writes the dense matrix, one row per line, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.entries.row_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| Error::Internal(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }
}
