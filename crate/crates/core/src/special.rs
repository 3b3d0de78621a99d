//! Gamma-family helpers shared by the kernel and resolvent code.

use crate::error::{domain, Result};

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `1/Γ(x)`, which is entire: zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Riemann–Liouville kernel `g_β(t) = t^(β−1)/Γ(β)`.
pub fn eval_g(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain(format!("g_beta needs beta > 0, got {beta}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("g_beta needs t > 0, got {t}")));
    }
    Ok(g(beta, t))
}

/// Unchecked `g_β(t)` for `t ≥ 0`; returns `0` at `t = 0` when `β > 1`,
/// `1` when `β = 1` and `+∞` when `β < 1`.
#[inline]
pub(crate) fn g(beta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if beta > 1.0 {
            0.0
        } else if beta == 1.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    t.powf(beta - 1.0) * rgamma(beta)
}

/// Regularized lower incomplete gamma `P(a, x)`, extended by `P(a, 0) = 0`.
#[inline]
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// `∫₀ᵗ g_β(ρ) e^(−μρ) dρ = μ^(−β) P(β, μt)`.
#[inline]
pub(crate) fn damped_g_integral(beta: f64, mu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // P(β, x) ~ x^β/Γ(β+1) for small x; avoid the 0·∞ form when μt underflows.
    let x = mu * t;
    if x < 1e-300 {
        return g(beta + 1.0, t);
    }
    mu.powf(-beta) * gamma_p(beta, x)
}
