//! Reference implementations used by the integration tests. None of them
//! shares code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Lanczos approximation, g = 7, nine coefficients.
pub fn lanczos_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos_gamma(1.0 - x));
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `g_β(t) = t^{β−1}/Γ(β)`.
pub fn g(beta: f64, t: f64) -> f64 {
    t.powf(beta - 1.0) / lanczos_gamma(beta)
}

/// `exp(x²) erfc(x)` for `x ≥ 0`: Taylor series of erf below 2, continued
/// fraction above.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < 2.0 {
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x * x / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        let erf = 2.0 / PI.sqrt() * sum;
        return (x * x).exp() * (1.0 - erf);
    }
    let mut f = x;
    for n in (1..=600).rev() {
        f = x + 0.5 * n as f64 / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// `E_{1/2}(−z) = erfcx(z)` for `z ≥ 0`.
pub fn ml_half(z: f64) -> f64 {
    erfcx(z)
}

/// Power series `Σ z^k / Γ(αk + 1)`. Terms grow like `exp(|z|^{1/α})`
/// before they decay, so this is only usable while that stays small.
pub fn ml_series(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..400 {
        let term = z.powi(k) / lanczos_gamma(alpha * k as f64 + 1.0);
        sum += term;
        if k > 5 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson; the integrand must be finite at both endpoints.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫₀¹ w^{a−1}(1 − w)^{b−1} dw` by splitting at ½ and substituting
/// `w = v^{1/a}` (resp. `1 − w = v^{1/b}`), which removes both endpoint
/// singularities.
pub fn beta_quadrature(a: f64, b: f64) -> f64 {
    let half = |p: f64, q: f64| {
        let top = 0.5f64.powf(p);
        let f = move |v: f64| (1.0 - v.powf(1.0 / p)).powf(q - 1.0) / p;
        adaptive_simpson(&f, 0.0, top, 1e-13)
    };
    half(a, b) + half(b, a)
}

/// `(g_a ∗ g_b)(t)` through the Beta integral.
pub fn g_convolution(a: f64, b: f64, t: f64) -> f64 {
    t.powf(a + b - 1.0) * beta_quadrature(a, b) / (lanczos_gamma(a) * lanczos_gamma(b))
}

/// `(−Δ)ˢ (1 − x²)ˢ₊` at `|x| < 1` from the principal value
/// `C ∫₀^∞ [2u(x) − u(x + z) − u(x − z)] z^{−1−2s} dz`.
pub fn getoor_pv(s: f64, x: f64) -> f64 {
    let c = 4f64.powf(s) * s * lanczos_gamma(0.5 + s) / (PI.sqrt() * lanczos_gamma(1.0 - s));
    let u = |y: f64| if y.abs() < 1.0 { (1.0 - y * y).powf(s) } else { 0.0 };
    let ux = u(x);
    let near = 1.0 - x.abs();
    let far = 1.0 + x.abs();
    // z = w² on the first piece tames both the z^{1−2s} behaviour at 0
    // and the (near − z)^s kink at the far end
    // for tiny z the difference cancels; use −u''(x) z² instead
    let r = 1.0 - x * x;
    let upp = -2.0 * s * r.powf(s - 1.0) + 4.0 * s * (s - 1.0) * x * x * r.powf(s - 2.0);
    let f = |z: f64| {
        if z < 1e-4 {
            -upp * z * z
        } else {
            2.0 * ux - u(x + z) - u(x - z)
        }
    };
    let inner = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let z = w * w;
        f(z) * z.powf(-1.0 - 2.0 * s) * 2.0 * w
    };
    let middle = |z: f64| f(z) * z.powf(-1.0 - 2.0 * s);
    let p1 = adaptive_simpson(&inner, 0.0, near.sqrt(), 1e-9);
    let p2 = adaptive_simpson(&middle, near, far, 1e-9);
    let tail = 2.0 * ux * far.powf(-2.0 * s) / (2.0 * s);
    c * (p1 + p2 + tail)
}

/// `Σ E_{1/2}(−λᵢ t^{1/2}) (φᵢ · u0) φᵢ` for the symmetric matrix `a`.
pub fn spectral_solution(a: &DMatrix<f64>, u0: &[f64], t: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let u0 = DVector::from_column_slice(u0);
    let mut out = DVector::zeros(u0.len());
    for i in 0..u0.len() {
        let phi = eig.eigenvectors.column(i);
        let coeff = phi.dot(&u0) * ml_half(eig.eigenvalues[i] * t.sqrt());
        out += coeff * phi;
    }
    out.as_slice().to_vec()
}
