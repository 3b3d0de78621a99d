//! Scalar functions used to renormalize solutions.

/// `T_K(r) = max(min(r, K), −K)`.
pub fn truncate(k: f64, r: f64) -> f64 {
    r.clamp(-k, k)
}

/// `T_{K,M} = T_M − T_K` for `M > K`.
pub fn truncate_band(k: f64, m: f64, r: f64) -> f64 {
    truncate(m, r) - truncate(k, r)
}

/// `∫₀ʳ T_K(σ) dσ`.
pub fn truncate_primitive(k: f64, r: f64) -> f64 {
    let a = r.abs();
    if a <= k {
        0.5 * r * r
    } else {
        k * a - 0.5 * k * k
    }
}

/// Cut-off `h_l(u) = min((l + 1 − |u|)⁺, 1)`.
pub fn cutoff(l: f64, u: f64) -> f64 {
    (l + 1.0 - u.abs()).max(0.0).min(1.0)
}

/// `H_ε(y) = √(y² + ε²) − ε`, a convex smoothing of `|y|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothAbs {
    pub eps: f64,
}

impl SmoothAbs {
    pub fn value(&self, y: f64) -> f64 {
        y.hypot(self.eps) - self.eps
    }

    pub fn derivative(&self, y: f64) -> f64 {
        y / y.hypot(self.eps)
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        let r = y.hypot(self.eps);
        self.eps * self.eps / (r * r * r)
    }
}

/// Odd `C¹` ramp in the class of admissible entropy functions: `S′ = 1` on
/// `[−K, K]`, then `S′` drops linearly to 0 over `[K, K + δ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ramp {
    pub level: f64,
    pub width: f64,
}

impl Ramp {
    pub fn new(level: f64, width: f64) -> Self {
        assert!(level > 0.0 && width > 0.0, "ramp needs positive level and width");
        Self { level, width }
    }

    pub fn value(&self, v: f64) -> f64 {
        let (k, d) = (self.level, self.width);
        let a = v.abs();
        let mag = if a <= k {
            a
        } else if a <= k + d {
            let e = a - k;
            k + e - 0.5 * e * e / d
        } else {
            k + 0.5 * d
        };
        mag.copysign(v)
    }

    pub fn derivative(&self, v: f64) -> f64 {
        let a = v.abs();
        if a <= self.level {
            1.0
        } else {
            (1.0 - (a - self.level) / self.width).max(0.0)
        }
    }

    /// `∫₀ᵛ S`, even in `v`.
    pub fn primitive(&self, v: f64) -> f64 {
        let (k, d) = (self.level, self.width);
        let a = v.abs();
        if a <= k {
            return 0.5 * a * a;
        }
        let e = (a - k).min(d);
        let mid = 0.5 * k * k + k * e + 0.5 * e * e - e * e * e / (6.0 * d);
        if a <= k + d {
            mid
        } else {
            mid + (k + 0.5 * d) * (a - k - d)
        }
    }

    /// Beyond `K + δ` the ramp is flat, so `S(v) = S(T_{K+δ}(v))`.
    pub fn saturation(&self) -> f64 {
        self.level + self.width
    }
}

/// A `C¹` function together with its derivative.
pub trait Renormalizer {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
}

/// `H(y) = y`.
pub struct Identity;

impl Renormalizer for Identity {
    fn value(&self, y: f64) -> f64 {
        y
    }
    fn derivative(&self, _: f64) -> f64 {
        1.0
    }
}

impl Renormalizer for SmoothAbs {
    fn value(&self, y: f64) -> f64 {
        SmoothAbs::value(self, y)
    }
    fn derivative(&self, y: f64) -> f64 {
        SmoothAbs::derivative(self, y)
    }
}

/// `H(y) = ∫₀ʸ T_K`, so `H′ = T_K`.
pub struct TruncatedSquare {
    pub level: f64,
}

impl Renormalizer for TruncatedSquare {
    fn value(&self, y: f64) -> f64 {
        truncate_primitive(self.level, y)
    }
    fn derivative(&self, y: f64) -> f64 {
        truncate(self.level, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_primitive_matches_quadrature() {
        let s = Ramp::new(1.0, 0.5);
        for &v in &[-3.0, -1.2, -0.4, 0.0, 0.7, 1.1, 1.5, 4.0] {
            let n = 20_000;
            let h = v / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                acc += s.value((i as f64 + 0.5) * h) * h;
            }
            assert!((acc - s.primitive(v)).abs() < 1e-7, "v={v}");
        }
    }

    #[test]
    fn ramp_is_c1_at_breakpoints() {
        let s = Ramp::new(2.0, 1.0);
        for &b in &[2.0, 3.0] {
            let (l, r) = (s.derivative(b - 1e-9), s.derivative(b + 1e-9));
            assert!((l - r).abs() < 1e-8);
        }
        assert_eq!(s.value(0.0), 0.0);
    }

    #[test]
    fn cutoff_decomposition() {
        for i in -400..=400 {
            let u = i as f64 * 0.0125;
            let l = 2.0;
            let band = truncate_band(l, l + 1.0, u);
            let expected = band.min(0.0) - band.max(0.0) + 1.0;
            assert!((cutoff(l, u) - expected).abs() < 1e-15, "u={u}");
        }
    }
}
