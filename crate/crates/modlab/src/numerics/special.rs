//! Special functions and one-dimensional quadrature.
//!
//! - [`log_gamma`]: Lanczos approximation (g = 7, 9 coefficients, Godfrey's
//!   tableau) with the reflection formula below 0.5; relative error is below
//!   1e-13 across `[0.5, 1e6]` and degrades gracefully outside.
//! - [`erf`]/[`erfc`]: Maclaurin-type series in `|x| ≤ 2` and the Legendre
//!   continued fraction (modified Lentz evaluation) beyond; both branches are
//!   accurate to a few ulps and `erfc` keeps full *relative* accuracy far into
//!   the tail, which the normal CDF inherits.
//! - [`reg_inc_beta`]: regularized incomplete beta via the standard continued
//!   fraction with the symmetry switch at `x = (a+1)/(a+b+2)`.
//! - [`adaptive_simpson`]: recursive Simpson with Richardson update and an
//!   absolute-error budget split across subintervals.

use std::f64::consts::PI;

/// ln √(2π), used by the Lanczos formula and the normal density.
// Tabulated digits are kept in full even where they exceed f64 precision, so
// the literals can be checked against the published tables digit for digit.
#[allow(clippy::excessive_precision)]
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Lanczos coefficients for g = 7 (Godfrey), giving ~15 significant digits.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
///
/// Uses the Lanczos approximation; arguments below 0.5 go through the
/// reflection formula `Γ(x)Γ(1−x) = π / sin(πx)`. Returns `f64::NAN` for
/// `x ≤ 0` at integer points where the reflection blows up.
pub fn log_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        // Reflection: ln Γ(x) = ln(π / sin(πx)) − ln Γ(1 − x).
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        return (PI / s.abs()).ln() - log_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Error function, accurate to a few ulps over the whole real line.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= 2.0 {
        erf_series(x)
    } else {
        let tail = erfc_cf(ax);
        let v = 1.0 - tail;
        if x >= 0.0 {
            v
        } else {
            -v
        }
    }
}

/// Complementary error function `1 − erf(x)` with full relative accuracy in
/// the upper tail (no cancellation for large positive `x`).
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 2.0 {
        erfc_cf(x)
    } else if x >= -2.0 {
        1.0 - erf_series(x)
    } else {
        2.0 - erfc_cf(-x)
    }
}

/// erf via the confluent series erf(x) = 2/√π · e^{−x²} Σ_{n≥0} x^{2n+1} 2ⁿ / (1·3···(2n+1)).
///
/// All terms are positive, so there is no cancellation; for |x| ≤ 2 the series
/// needs at most ~40 terms.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / (2.0 * n as f64 + 1.0);
        let next = sum + term;
        if next == sum || n > 200 {
            break;
        }
        sum = next;
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// erfc via the Legendre continued fraction, for x > 2:
/// erfc(x) = e^{−x²}/√π · 1/(x + 1/2/(x + 2/2/(x + 3/2/(x + …)))).
///
/// Evaluated with the modified Lentz algorithm.
fn erfc_cf(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..=300 {
        // In the arrangement erfc(x)√π e^{x²} = 1/(x + (1/2)/(x + (2/2)/(x + …)))
        // every partial denominator is x and the k-th partial numerator is k/2.
        let a = k as f64 / 2.0;
        let b = x;
        d = b + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 4e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Standard normal density `φ(x)`.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF `Φ(x) = erfc(−x/√2)/2`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x ∈ [0,1]`.
///
/// Continued-fraction evaluation with the symmetry switch
/// `I_x(a,b) = 1 − I_{1−x}(b,a)` applied when `x > (a+1)/(a+b+2)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0,1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front =
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// Classic recursive scheme with the Richardson correction `(s2 − s1)/15`;
/// each bisection halves the error budget. Depth is capped at 60, which is far
/// beyond what any smooth integrand here needs.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    assert!(a.is_finite() && b.is_finite(), "bounds must be finite");
    assert!(tol > 0.0, "tolerance must be positive");
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}
