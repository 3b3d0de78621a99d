//! Memory kernels of type PC: non-negative, non-increasing `k` with a
//! partner `l` such that `k ∗ l ≡ 1`.
//!
//! Every kernel exposes exact antiderivatives (zeroth and first moments), so
//! the weakly singular behaviour at `t = 0` is never sampled pointwise.

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};
use crate::special::{damped_g_integral, g};

/// Uniform time grid `t_i = i τ`, `i = 0..=steps`, on `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(domain(format!("time horizon must be > 0, got {horizon}")));
        }
        if steps == 0 {
            return Err(domain("time grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.tau()
        }
    }

    /// All nodes `t_0 = 0, …, t_n = T`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// Nodes strictly inside `(0, T]`.
    pub fn positive_nodes(&self) -> Vec<f64> {
        (1..=self.steps).map(|i| self.time(i)).collect()
    }
}

/// A memory kernel.
///
/// `RiemannLiouville(α)` is `g_{1−α}`; `ExpWeighted(α, μ_w)` is
/// `g_{1−α}(t) e^{−μ_w t}`. `ExpWeightedPartner` is the Sonine partner of the
/// latter, and `Excess`/`Clipped` are the two pieces produced by
/// [`split_kernel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    RiemannLiouville {
        alpha: f64,
    },
    ExpWeighted {
        alpha: f64,
        mu_w: f64,
    },
    /// `g_α(t) e^{−μ_w t} + μ_w (1 ∗ [g_α e^{−μ_w ·}])(t)`.
    ExpWeightedPartner {
        alpha: f64,
        mu_w: f64,
    },
    /// Piecewise constant, left-continuous value on `[t_i, t_{i+1})`,
    /// extended by the first value on `[0, t_0)` and the last one after `t_last`.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// `(k − k(t_cut))⁺`.
    Excess {
        base: Box<KernelSpec>,
        t_cut: f64,
    },
    /// `min(k, k(t_cut))`.
    Clipped {
        base: Box<KernelSpec>,
        t_cut: f64,
    },
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

fn check_mu(mu_w: f64) -> Result<()> {
    if mu_w > 0.0 && mu_w.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("mu_w must be > 0, got {mu_w}")))
    }
}

impl KernelSpec {
    pub fn riemann_liouville(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::RiemannLiouville { alpha })
    }

    pub fn exp_weighted(alpha: f64, mu_w: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_mu(mu_w)?;
        Ok(Self::ExpWeighted { alpha, mu_w })
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let k = Self::Tabulated { times, values };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::RiemannLiouville { alpha } => check_alpha(*alpha),
            Self::ExpWeighted { alpha, mu_w } | Self::ExpWeightedPartner { alpha, mu_w } => {
                check_alpha(*alpha)?;
                check_mu(*mu_w)
            }
            Self::Tabulated { times, values } => {
                if times.is_empty() {
                    return Err(usage("tabulated kernel has no samples"));
                }
                if times.len() != values.len() {
                    return Err(usage(format!(
                        "tabulated kernel has {} times but {} values",
                        times.len(),
                        values.len()
                    )));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(domain("tabulated kernel has non-finite entries"));
                }
                if times[0] < 0.0 {
                    return Err(domain("tabulated kernel times must be >= 0"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(domain("tabulated kernel times must be strictly increasing"));
                }
                if values.iter().any(|&v| v < 0.0) {
                    return Err(domain("tabulated kernel values must be non-negative"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(domain("tabulated kernel values must be non-increasing"));
                }
                Ok(())
            }
            Self::Excess { base, t_cut } | Self::Clipped { base, t_cut } => {
                base.validate()?;
                if *t_cut > 0.0 && t_cut.is_finite() {
                    Ok(())
                } else {
                    Err(domain(format!("split point must be > 0, got {t_cut}")))
                }
            }
        }
    }

    /// Kernel value at `t > 0`. Singular kernels return `+∞` at `t = 0`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::RiemannLiouville { alpha } => g(1.0 - alpha, t),
            Self::ExpWeighted { alpha, mu_w } => g(1.0 - alpha, t) * (-mu_w * t).exp(),
            Self::ExpWeightedPartner { alpha, mu_w } => {
                g(*alpha, t) * (-mu_w * t).exp() + mu_w * damped_g_integral(*alpha, *mu_w, t)
            }
            Self::Tabulated { times, values } => values[piece_index(times, t)],
            Self::Excess { base, t_cut } => {
                let level = base.value(*t_cut);
                (base.value(t) - level).max(0.0)
            }
            Self::Clipped { base, t_cut } => base.value(t).min(base.value(*t_cut)),
        }
    }

    /// Analytic derivative where one exists; `None` for piecewise-constant kernels.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Self::RiemannLiouville { alpha } => Some(-alpha * g(1.0 - alpha, t) / t),
            Self::ExpWeighted { alpha, mu_w } => {
                let k = g(1.0 - alpha, t) * (-mu_w * t).exp();
                Some(-k * (alpha / t + mu_w))
            }
            // The integral term differentiates to μ g_α e^{−μt}, cancelling the
            // product-rule term of the first summand.
            Self::ExpWeightedPartner { alpha, mu_w } => {
                Some((alpha - 1.0) * g(*alpha, t) / t * (-mu_w * t).exp())
            }
            Self::Tabulated { .. } => None,
            Self::Excess { base, t_cut } => {
                if t < *t_cut {
                    base.derivative(t)
                } else {
                    Some(0.0)
                }
            }
            Self::Clipped { base, t_cut } => {
                if t < *t_cut {
                    Some(0.0)
                } else {
                    base.derivative(t)
                }
            }
        }
    }

    /// Exponent `β` with `k(t) ~ t^(β−1)` as `t → 0⁺`; `1` for bounded kernels.
    pub fn small_time_exponent(&self) -> f64 {
        match self {
            Self::RiemannLiouville { alpha } | Self::ExpWeighted { alpha, .. } => 1.0 - alpha,
            Self::ExpWeightedPartner { alpha, .. } => *alpha,
            Self::Tabulated { .. } | Self::Clipped { .. } => 1.0,
            Self::Excess { base, .. } => base.small_time_exponent(),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.small_time_exponent() < 1.0
    }

    /// `∫₀ᵗ k`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::RiemannLiouville { alpha } => g(2.0 - alpha, t),
            Self::ExpWeighted { alpha, mu_w } => damped_g_integral(1.0 - alpha, *mu_w, t),
            Self::ExpWeightedPartner { alpha, mu_w } => {
                let i = damped_g_integral(*alpha, *mu_w, t);
                // ∫₀ᵗ I = t I(t) − ∫₀ᵗ ρ g_α e^{−μρ}, and ρ g_α = α g_{α+1}.
                let int_i = t * i - alpha * damped_g_integral(alpha + 1.0, *mu_w, t);
                i + mu_w * int_i
            }
            Self::Tabulated { times, values } => tabulated_moment(times, values, t, 0),
            Self::Excess { base, t_cut } => {
                let c = base.value(*t_cut);
                let m = t.min(*t_cut);
                base.antiderivative(m) - c * m
            }
            Self::Clipped { base, t_cut } => {
                let c = base.value(*t_cut);
                let m = t.min(*t_cut);
                c * m + (base.antiderivative(t) - base.antiderivative(m))
            }
        }
    }

    /// `∫₀ᵗ ρ k(ρ) dρ`.
    pub fn first_moment(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            // ρ g_β(ρ) = β g_{β+1}(ρ)
            Self::RiemannLiouville { alpha } => {
                let beta = 1.0 - alpha;
                beta * g(beta + 2.0, t)
            }
            Self::ExpWeighted { alpha, mu_w } => {
                let beta = 1.0 - alpha;
                beta * damped_g_integral(beta + 1.0, *mu_w, t)
            }
            Self::ExpWeightedPartner { alpha, mu_w } => {
                let direct = alpha * damped_g_integral(alpha + 1.0, *mu_w, t);
                let i = damped_g_integral(*alpha, *mu_w, t);
                // ∫₀ᵗ ρ I = t²/2 I(t) − ½∫₀ᵗ ρ² g_α e^{−μρ}, ρ² g_α = α(α+1) g_{α+2}.
                let rho_i = 0.5 * t * t * i
                    - 0.5 * alpha * (alpha + 1.0) * damped_g_integral(alpha + 2.0, *mu_w, t);
                direct + mu_w * rho_i
            }
            Self::Tabulated { times, values } => tabulated_moment(times, values, t, 1),
            Self::Excess { base, t_cut } => {
                let c = base.value(*t_cut);
                let m = t.min(*t_cut);
                base.first_moment(m) - 0.5 * c * m * m
            }
            Self::Clipped { base, t_cut } => {
                let c = base.value(*t_cut);
                let m = t.min(*t_cut);
                0.5 * c * m * m + (base.first_moment(t) - base.first_moment(m))
            }
        }
    }

    /// `∫_a^b k`, `0 ≤ a ≤ b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Tabulated { times, values } => tabulated_integral(times, values, a, b, None),
            _ => self.antiderivative(b) - self.antiderivative(a),
        }
    }

    /// `(∫_a^b k, ∫_a^b (ρ − a) k(ρ) dρ)`.
    ///
    /// Short cells far from the origin are integrated by Gauss–Legendre on
    /// the cell itself; differencing the antiderivatives there loses most
    /// digits to cancellation.
    pub fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let w = b - a;
        if let Some(m) = self.local_moments(a, b) {
            return m;
        }
        let m0 = self.integral(a, b);
        let m1 = self.first_moment(b) - self.first_moment(a) - a * m0;
        (m0, m1.clamp(0.0, w * m0.max(0.0)))
    }

    fn local_moments(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let w = b - a;
        if !(w > 0.0) {
            return Some((0.0, 0.0));
        }
        match self {
            Self::Tabulated { times, values } => {
                let i = piece_index(times, a);
                let same = piece_index(times, b) == i || (i + 1 < times.len() && times[i + 1] == b);
                same.then(|| (values[i] * w, 0.5 * values[i] * w * w))
            }
            Self::Excess { base, t_cut } | Self::Clipped { base, t_cut } => {
                let excess = matches!(self, Self::Excess { .. });
                if b <= *t_cut {
                    if excess {
                        let c = base.value(*t_cut);
                        let (m0, m1) = base.local_moments(a, b)?;
                        Some((m0 - c * w, m1 - 0.5 * c * w * w))
                    } else {
                        let c = base.value(*t_cut);
                        Some((c * w, 0.5 * c * w * w))
                    }
                } else if a >= *t_cut {
                    if excess {
                        Some((0.0, 0.0))
                    } else {
                        base.local_moments(a, b)
                    }
                } else {
                    None
                }
            }
            _ if w <= 0.5 * a => {
                let (mid, half) = (0.5 * (a + b), 0.5 * w);
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for (x, wt) in GAUSS_LEGENDRE_16 {
                    for sign in [-1.0, 1.0] {
                        let rho = mid + sign * x * half;
                        let v = wt * half * self.value(rho);
                        m0 += v;
                        m1 += v * (rho - a);
                    }
                }
                Some((m0, m1))
            }
            _ => None,
        }
    }

    /// Piecewise-constant resampling on the given times.
    pub fn tabulate(&self, times: &[f64]) -> Result<KernelSpec> {
        let values = times.iter().map(|&t| self.value(t)).collect();
        KernelSpec::tabulated(times.to_vec(), values)
    }
}

/// Positive nodes and weights of the 16-point Gauss–Legendre rule on `[−1, 1]`.
const GAUSS_LEGENDRE_16: [(f64, f64); 8] = [
    (0.0950125098376374401853193, 0.1894506104550684962853967),
    (0.2816035507792589132304605, 0.1826034150449235888667637),
    (0.4580167776572273863424194, 0.1691565193950025381893121),
    (0.6178762444026437484466718, 0.1495959888165767320815017),
    (0.7554044083550030338951012, 0.1246289712555338720524763),
    (0.8656312023878317438804679, 0.0951585116824927848099251),
    (0.9445750230732325760779884, 0.0622535239386478928628438),
    (0.9894009349916499325961542, 0.0271524594117540948517806),
];

fn piece_index(times: &[f64], t: f64) -> usize {
    // index of the last breakpoint <= t, clamped to 0
    times.partition_point(|&x| x <= t).saturating_sub(1)
}

/// Integral of the piecewise-constant table over `[a, b]`. When the interval
/// sits inside one piece and `width` is given, `width` is used verbatim so
/// equal cells produce bit-identical integrals.
fn tabulated_integral(times: &[f64], values: &[f64], a: f64, b: f64, width: Option<f64>) -> f64 {
    let ia = piece_index(times, a);
    let ib = piece_index(times, b);
    // [0, t_0) carries values[0] as well, so piece 0 covers [0, t_1).
    if ia == ib || (ib == ia + 1 && times[ib] == b) {
        return values[ia] * width.unwrap_or(b - a);
    }
    tabulated_moment(times, values, b, 0) - tabulated_moment(times, values, a, 0)
}

fn tabulated_moment(times: &[f64], values: &[f64], t: f64, order: u8) -> f64 {
    let piece = |lo: f64, hi: f64, v: f64| match order {
        0 => v * (hi - lo),
        _ => 0.5 * v * (hi * hi - lo * lo),
    };
    let mut acc = piece(0.0, t.min(times[0]), values[0]);
    for i in 0..times.len() {
        let lo = times[i];
        if lo >= t {
            break;
        }
        let hi = times.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
        acc += piece(lo, hi, values[i]);
    }
    acc
}

/// Exact integrals `a_j = ∫_{jτ}^{(j+1)τ} k`, `j = 0..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellIntegrals {
    pub tau: f64,
    pub values: Vec<f64>,
}

impl CellIntegrals {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&a| a >= 0.0)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn cell_integrals(k: &KernelSpec, tau: f64, n: usize) -> Result<CellIntegrals> {
    k.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(domain(format!("tau must be > 0, got {tau}")));
    }
    if n == 0 {
        return Err(domain("need at least one cell"));
    }
    let values = match k {
        KernelSpec::Tabulated { times, values } => (0..n)
            .map(|j| {
                let a = j as f64 * tau;
                tabulated_integral(times, values, a, a + tau, Some(tau))
            })
            .collect(),
        _ => (0..n)
            .map(|j| {
                let a = j as f64 * tau;
                k.moments(a, a + tau).0.max(0.0)
            })
            .collect(),
    };
    Ok(CellIntegrals { tau, values })
}

/// A PC pair `(k, l)` with `k ∗ l ≡ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelPairHandle {
    pub k: KernelSpec,
    pub l: KernelSpec,
    /// The `p > 1` with `l ∈ L^p(0, T)`. Recorded, not used by any estimate.
    pub lp_exponent: f64,
}

impl KernelPairHandle {
    /// Builds the pair from an arbitrary `(k, l)` without checking `k ∗ l ≡ 1`.
    /// Use [`sonine_residual`] to measure how far the pair is from Sonine.
    pub fn from_parts(k: KernelSpec, l: KernelSpec, lp_exponent: f64) -> Result<Self> {
        k.validate()?;
        l.validate()?;
        if !(lp_exponent > 1.0) {
            return Err(domain(format!("lp_exponent must be > 1, got {lp_exponent}")));
        }
        Ok(Self { k, l, lp_exponent })
    }

    pub fn riemann_liouville(alpha: f64) -> Result<Self> {
        make_pair(&KernelSpec::riemann_liouville(alpha)?)
    }

    pub fn exp_weighted(alpha: f64, mu_w: f64) -> Result<Self> {
        make_pair(&KernelSpec::exp_weighted(alpha, mu_w)?)
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.k {
            KernelSpec::RiemannLiouville { alpha } | KernelSpec::ExpWeighted { alpha, .. } => {
                Some(alpha)
            }
            _ => None,
        }
    }

    /// `‖l‖_{L¹(0,T)}`.
    pub fn l_norm_l1(&self, horizon: f64) -> f64 {
        self.l.antiderivative(horizon)
    }

    pub fn k_norm_l1(&self, horizon: f64) -> f64 {
        self.k.antiderivative(horizon)
    }
}

/// Partner construction for the two closed-form PC families.
pub fn make_pair(k: &KernelSpec) -> Result<KernelPairHandle> {
    k.validate()?;
    // l = g_α-like lies in L^p for every p < 1/(1−α); record the midpoint of (1, 1/(1−α)).
    let lp = |alpha: f64| 0.5 * (1.0 + 1.0 / (1.0 - alpha));
    match *k {
        KernelSpec::RiemannLiouville { alpha } => Ok(KernelPairHandle {
            k: k.clone(),
            l: KernelSpec::RiemannLiouville { alpha: 1.0 - alpha },
            lp_exponent: lp(alpha),
        }),
        KernelSpec::ExpWeighted { alpha, mu_w } => Ok(KernelPairHandle {
            k: k.clone(),
            l: KernelSpec::ExpWeightedPartner { alpha, mu_w },
            lp_exponent: lp(alpha),
        }),
        _ => Err(domain(
            "partner kernels are only known for the Riemann-Liouville and exp-weighted families",
        )),
    }
}

/// Product-trapezoid evaluation of `(k ∗ l)(t)`.
///
/// `[0, t/2]` integrates `k` exactly against the linear interpolant of
/// `l(t − ·)`; `[t/2, t]` swaps the roles, so each half only meets one
/// endpoint singularity. `cells` is the number of sub-cells per half.
pub fn convolve_at(k: &KernelSpec, l: &KernelSpec, t: f64, cells: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * t;
    half_convolution(k, l, t, half, cells) + half_convolution(l, k, t, half, cells)
}

/// `∫₀^{half} singular(σ) smooth(t − σ) dσ` with exact moments of `singular`.
fn half_convolution(
    singular: &KernelSpec,
    smooth: &KernelSpec,
    t: f64,
    half: f64,
    cells: usize,
) -> f64 {
    let cells = cells.max(1);
    let h = half / cells as f64;
    let node = |j: usize| if j == cells { half } else { j as f64 * h };
    let mut acc = 0.0;
    let mut c0_lo = singular.antiderivative(0.0);
    let mut c1_lo = singular.first_moment(0.0);
    let mut f_lo = smooth.value(t);
    for j in 0..cells {
        let (a, b) = (node(j), node(j + 1));
        let c0_hi = singular.antiderivative(b);
        let c1_hi = singular.first_moment(b);
        let f_hi = smooth.value(t - b);
        let m0 = c0_hi - c0_lo;
        let m1 = c1_hi - c1_lo - a * m0;
        let w = b - a;
        acc += f_lo * (m0 - m1 / w) + f_hi * (m1 / w);
        c0_lo = c0_hi;
        c1_lo = c1_hi;
        f_lo = f_hi;
    }
    acc
}

/// `max_i |(k ∗ l)(t_i) − 1|` over the given strictly increasing grid in `(0, ∞)`.
///
/// Each point uses `grid.len()` sub-cells in total, so the residual tightens
/// as the grid is refined.
pub fn sonine_residual(pair: &KernelPairHandle, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(usage("sonine_residual needs a non-empty grid"));
    }
    if grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("grid must be strictly increasing in (0, T]"));
    }
    let cells = (grid.len() / 2).max(1);
    Ok(grid
        .iter()
        .map(|&t| (convolve_at(&pair.k, &pair.l, t, cells) - 1.0).abs())
        .fold(0.0, f64::max))
}

/// Splits `k = k₁ + k₂` at `t_cut`: `k₂ = min(k, k(t_cut))` is bounded,
/// `k₁ = (k − k(t_cut))⁺` carries the singularity.
pub fn split_kernel(
    k: &KernelSpec,
    t_cut: f64,
    horizon: f64,
) -> Result<(KernelSpec, KernelSpec)> {
    k.validate()?;
    if !(t_cut > 0.0 && t_cut < horizon) {
        return Err(domain(format!("t_cut must lie in (0, {horizon}), got {t_cut}")));
    }
    let base = Box::new(k.clone());
    Ok((
        KernelSpec::Excess {
            base: base.clone(),
            t_cut,
        },
        KernelSpec::Clipped { base, t_cut },
    ))
}
