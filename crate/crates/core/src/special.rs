//! Scalar special functions shared by the activation and gate modules.
//!
//! Everything here is double precision and total over finite inputs. The error
//! function comes from `libm` (the fdlibm rational approximations, accurate to about
//! one ulp); the rest are short closed forms arranged to avoid overflow.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Error function.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function, accurate in the far tails where `1 - erf` would cancel.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x) = ½(1 + erf(x/√2)), evaluated through `erfc` so the
/// left tail keeps full relative precision.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Logistic sigmoid, branch-split so neither side overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// softplus(x) = ln(1 + eˣ).
///
/// Above 20 the identity x + ln(1 + e⁻ˣ) keeps eˣ from overflowing; below that
/// `ln_1p(eˣ)` is exact to rounding, including the deep negative tail where the
/// result is ≈ eˣ.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 20.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mish gate tanh(softplus(x)).
#[inline]
pub fn mish_gate(x: f64) -> f64 {
    softplus(x).tanh()
}

/// 1 − tanh(softplus(−x)), evaluated as 2t/(1+t) with t = e^{−2·softplus(−x)} so the
/// left tail keeps full relative precision.
#[inline]
pub fn fmish_gate(x: f64) -> f64 {
    let t = (-2.0 * softplus(-x)).exp();
    2.0 * t / (1.0 + t)
}

/// d/dx tanh(softplus(x)) = sech²(softplus(x)) · σ(x).
///
/// sech² is taken as 1/cosh² rather than 1 − tanh², which would round to zero once
/// tanh saturates and lose the whole right tail.
#[inline]
pub fn mish_gate_derivative(x: f64) -> f64 {
    let c = softplus(x).cosh();
    sigmoid(x) / (c * c)
}

/// Gompertz function e^{-e^{-x}}, the CDF of the standard Gumbel distribution.
///
/// Returns exactly 0 for x ≤ -30; the true value there is below 1e-100.
#[inline]
pub fn gompertz(x: f64) -> f64 {
    if x <= GOMPERTZ_CUTOFF {
        0.0
    } else {
        (-(-x).exp()).exp()
    }
}

/// Standard Gumbel density e^{-(x + e^{-x})}, with the same cutoff as [`gompertz`].
#[inline]
pub fn gumbel_pdf(x: f64) -> f64 {
    if x <= GOMPERTZ_CUTOFF {
        0.0
    } else {
        (-x - (-x).exp()).exp()
    }
}

/// Inputs at or below this are treated as the double-exponential tail (value 0).
pub const GOMPERTZ_CUTOFF: f64 = -30.0;

/// Logistic density σ(x)(1 − σ(x)).
#[inline]
pub fn logistic_pdf(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Euler–Mascheroni constant, the mean of Gumbel(0, 1).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Skewness of Gumbel(0, 1): 12√6 ζ(3) / π³.
pub fn gumbel_skewness() -> f64 {
    const ZETA3: f64 = 1.202_056_903_159_594_3;
    12.0 * 6f64.sqrt() * ZETA3 / (PI * PI * PI)
}
