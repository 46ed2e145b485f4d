//! Gate functions viewed as CDFs, their densities, and the flip construction.
//!
//! A self-gated activation `x · g(x)` pairs with the distribution whose CDF is `g`.
//! Reflecting that density about the origin, D̃(x) = D(−x), gives the gate
//! g̃(x) = 1 − g(−x). Mish's left-skewed density flips into FMish's right-skewed one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::special::{
    fmish_gate, gompertz, gumbel_pdf, logistic_pdf, mish_gate, mish_gate_derivative, normal_cdf, normal_pdf,
    sigmoid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// e^{-e^{-x}}, CDF of Gumbel(0, 1).
    Gompertz,
    /// Φ(x).
    #[serde(rename = "gaussiancdf")]
    GaussianCdf,
    /// 1 / (1 + e^{-x}).
    Sigmoid,
    /// tanh(softplus(x)).
    #[serde(rename = "mishgate")]
    MishGate,
    /// 1 − tanh(softplus(−x)).
    #[serde(rename = "fmishgate")]
    FMishGate,
    /// 1 − e^{-e^{x}}, CDF of the reflected (minimum) Gumbel.
    #[serde(rename = "flippedgompertz")]
    FlippedGompertz,
}

impl GateKind {
    pub const ALL: [Self; 6] = [
        Self::Gompertz,
        Self::GaussianCdf,
        Self::Sigmoid,
        Self::MishGate,
        Self::FMishGate,
        Self::FlippedGompertz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gompertz => "Gompertz",
            Self::GaussianCdf => "GaussianCDF",
            Self::Sigmoid => "Sigmoid",
            Self::MishGate => "MishGate",
            Self::FMishGate => "FMishGate",
            Self::FlippedGompertz => "FlippedGompertz",
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::Gompertz => gompertz(x),
            Self::GaussianCdf => normal_cdf(x),
            Self::Sigmoid => sigmoid(x),
            Self::MishGate => mish_gate(x),
            Self::FMishGate => fmish_gate(x),
            Self::FlippedGompertz => 1.0 - gompertz(-x),
        }
    }

    #[inline]
    pub fn density(self, x: f64) -> f64 {
        match self {
            Self::Gompertz => gumbel_pdf(x),
            Self::GaussianCdf => normal_pdf(x),
            Self::Sigmoid => logistic_pdf(x),
            Self::MishGate => mish_gate_derivative(x),
            Self::FMishGate => mish_gate_derivative(-x),
            Self::FlippedGompertz => gumbel_pdf(-x),
        }
    }

    /// The gate of the reflected density, x ↦ 1 − g(−x).
    pub fn flip(self) -> Self {
        match self {
            Self::GaussianCdf => Self::GaussianCdf,
            Self::Sigmoid => Self::Sigmoid,
            Self::MishGate => Self::FMishGate,
            Self::FMishGate => Self::MishGate,
            Self::Gompertz => Self::FlippedGompertz,
            Self::FlippedGompertz => Self::Gompertz,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Self::ALL
            .into_iter()
            .find(|g| g.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "gumbel" => Some(Self::Gompertz),
                "gaussian" | "normal" | "phi" => Some(Self::GaussianCdf),
                "logistic" => Some(Self::Sigmoid),
                "mish" => Some(Self::MishGate),
                "fmish" => Some(Self::FMishGate),
                _ => None,
            })
            .ok_or_else(|| Error::Usage(format!("unknown gate '{s}'")))
    }
}

/// Checked gate evaluation, in [0, 1].
pub fn gate_value(kind: GateKind, x: f64) -> Result<f64> {
    ensure_finite(x, "gate input")?;
    Ok(kind.value(x))
}

/// Checked density evaluation, ≥ 0.
pub fn gate_density(kind: GateKind, x: f64) -> Result<f64> {
    ensure_finite(x, "gate input")?;
    Ok(kind.density(x))
}

pub fn flip_gate(kind: GateKind) -> GateKind {
    kind.flip()
}

/// A density sampled on a uniform grid together with its trapezoid-rule moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub gate: GateKind,
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    /// Trapezoid integral of `pdf`; moments below are normalized by it.
    pub integral: f64,
    pub mean: f64,
    pub variance: f64,
    /// Third standardized moment.
    pub skewness: f64,
    /// Grid point of the largest density value.
    pub mode: f64,
}

impl DensityProfile {
    /// `x,pdf` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,pdf\n");
        for (x, p) in self.grid.iter().zip(&self.pdf) {
            out.push_str(&format!("{x},{p}\n"));
        }
        out
    }
}

/// Largest tolerated deviation of the grid integral from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

pub fn density_profile(kind: GateKind, lo: f64, hi: f64, n: usize) -> Result<DensityProfile> {
    ensure_finite(lo, "lo")?;
    ensure_finite(hi, "hi")?;
    if lo >= hi {
        return Err(Error::Usage(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if n < 100 {
        return Err(Error::Usage(format!("need at least 100 grid points, got {n}")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let pdf: Vec<f64> = grid.iter().map(|&x| kind.density(x)).collect();

    let trapz = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let inner: f64 = grid[1..n - 1].iter().zip(&pdf[1..n - 1]).map(|(&x, &p)| f(x, p)).sum();
        step * (inner + 0.5 * (f(grid[0], pdf[0]) + f(grid[n - 1], pdf[n - 1])))
    };
    let integral = trapz(&|_, p| p);
    if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Resolution(format!(
            "{kind} density integrates to {integral} on [{lo}, {hi}] with {n} points"
        )));
    }
    let mean = trapz(&|x, p| x * p) / integral;
    let variance = trapz(&|x, p| (x - mean).powi(2) * p) / integral;
    let third = trapz(&|x, p| (x - mean).powi(3) * p) / integral;
    let skewness = third / variance.powf(1.5);
    let mode = grid
        .iter()
        .zip(&pdf)
        .fold((lo, f64::NEG_INFINITY), |best, (&x, &p)| if p > best.1 { (x, p) } else { best })
        .0;

    Ok(DensityProfile { gate: kind, grid, pdf, integral, mean, variance, skewness, mode })
}

/// σ(x) − Gompertz(x) and the same gap divided by e^{-2x}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub x: f64,
    pub gap: f64,
    pub normalized: f64,
}

/// Gap between the sigmoid and Gompertz gates for x ≥ 0.
///
/// With u = e^{-x}, 1 − σ(x) = u/(1+u) and 1 − Gompertz(x) = −expm1(−u); the gap is
/// their difference, which avoids subtracting two numbers near 1. For u < 1e-3 the
/// series u²(½ − 5u/6 + 23u²/24 − 119u³/120) is used so the normalized value never
/// underflows.
pub fn sigmoid_gompertz_gap(x: f64) -> Result<GapPoint> {
    ensure_finite(x, "gap input")?;
    if x < 0.0 {
        return Err(Error::Domain(format!("gap is defined for x >= 0, got {x}")));
    }
    let u = (-x).exp();
    let (gap, normalized) = if u < 1e-3 {
        let normalized = 0.5 + u * (-5.0 / 6.0 + u * (23.0 / 24.0 - u * 119.0 / 120.0));
        (normalized * u * u, normalized)
    } else {
        let gap = -(-u).exp_m1() - u / (1.0 + u);
        (gap, gap / (u * u))
    };
    Ok(GapPoint { x, gap, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use std::f64::consts::E;

    fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn value_examples() {
        assert!((gate_value(GateKind::Gompertz, 0.0).unwrap() - 1.0 / E).abs() < 1e-16);
        assert_eq!(gate_value(GateKind::Sigmoid, 0.0).unwrap(), 0.5);
        assert_eq!(gate_value(GateKind::GaussianCdf, 0.0).unwrap(), 0.5);
        assert!(gate_value(GateKind::Sigmoid, f64::NAN).is_err());
    }

    #[test]
    fn density_examples() {
        assert!((gate_density(GateKind::Gompertz, 0.0).unwrap() - 1.0 / E).abs() < 1e-16);
        assert_eq!(gate_density(GateKind::Sigmoid, 0.0).unwrap(), 0.25);
        // e^{-(-5 + e^5)} = 5.205427108e-63 (mpmath)
        let d = gate_density(GateKind::Gompertz, -5.0).unwrap();
        assert!((d / 5.205_427_108e-63 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip_gate(GateKind::MishGate), GateKind::FMishGate);
        for x in grid(-8.0, 8.0, 161) {
            let s = flip_gate(GateKind::Sigmoid);
            assert!((s.value(x) - (1.0 - GateKind::Sigmoid.value(-x))).abs() < 1e-15);
            assert!((s.value(x) - GateKind::Sigmoid.value(x)).abs() < 1e-15);
        }
        for g in GateKind::ALL {
            let back = g.flip().flip();
            assert_eq!(back, g);
            for x in grid(-8.0, 8.0, 33) {
                assert!((g.flip().value(x) - (1.0 - g.value(-x))).abs() < 1e-15, "{g} at {x}");
            }
        }
    }

    #[test]
    fn monotone_with_unit_limits() {
        for g in GateKind::ALL {
            let vals: Vec<f64> = grid(-40.0, 40.0, 4001).map(|x| g.value(x)).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{g} not monotone");
            assert!(vals[0] < 1e-15 && vals[0] >= 0.0, "{g} left limit {}", vals[0]);
            assert!((1.0 - vals[vals.len() - 1]) < 1e-15, "{g} right limit");
        }
    }

    #[test]
    fn cdf_and_pdf_agree() {
        let h = 1e-5;
        for g in GateKind::ALL {
            for x in grid(-8.0, 8.0, 321) {
                let fd = (g.value(x + h) - g.value(x - h)) / (2.0 * h);
                assert!((fd - g.density(x)).abs() < 1e-6, "{g} at {x}");
            }
        }
    }

    #[test]
    fn profile_examples() {
        let gumbel = density_profile(GateKind::Gompertz, -20.0, 40.0, 60001).unwrap();
        assert!((gumbel.mean - 0.577_215_664_901_532_9).abs() < 1e-4);
        assert!((gumbel.skewness - 1.139_547_099_404_648_7).abs() < 1e-2);
        assert!(gumbel.mean > gumbel.mode);
        assert!(gumbel.mode.abs() < 1e-3);

        let logistic = density_profile(GateKind::Sigmoid, -40.0, 40.0, 80001).unwrap();
        assert!(logistic.skewness.abs() < 1e-6);

        let fmish = density_profile(GateKind::FMishGate, -40.0, 40.0, 80001).unwrap();
        let mish = density_profile(GateKind::MishGate, -40.0, 40.0, 80001).unwrap();
        assert!(fmish.skewness > 0.0);
        assert!((fmish.skewness + mish.skewness).abs() < 1e-9);
    }

    #[test]
    fn every_density_normalizes() {
        for g in GateKind::ALL {
            let (lo, hi) = match g {
                GateKind::Gompertz => (-20.0, 40.0),
                GateKind::FlippedGompertz => (-40.0, 20.0),
                _ => (-40.0, 40.0),
            };
            let p = density_profile(g, lo, hi, 80001).unwrap();
            assert!((p.integral - 1.0).abs() < 1e-6, "{g}: {}", p.integral);
            assert!(p.pdf.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn coarse_or_truncated_grid_is_rejected() {
        assert!(matches!(
            density_profile(GateKind::Sigmoid, -2.0, 2.0, 1000),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(density_profile(GateKind::Sigmoid, 1.0, -1.0, 1000), Err(Error::Usage(_))));
        assert!(matches!(density_profile(GateKind::Sigmoid, -1.0, 1.0, 10), Err(Error::Usage(_))));
    }

    #[test]
    fn gompertz_below_gaussian_cdf_and_sigmoid() {
        for x in grid(-10.0, 10.0, 2001) {
            let g = GateKind::Gompertz.value(x);
            assert!(g < GateKind::GaussianCdf.value(x), "x={x}");
            assert!(g < GateKind::Sigmoid.value(x), "x={x}");
        }
    }

    #[test]
    fn fmish_gate_reproduces_activation() {
        for x in grid(-10.0, 10.0, 2001) {
            let gate = GateKind::FMishGate.value(x);
            assert!((gate - (1.0 - mish_gate(-x))).abs() <= 1e-15);
            assert!((x * gate - ActivationKind::FMish.value(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn fmish_gate_left_tail_keeps_relative_precision() {
        // mpmath, 40 digits
        for (x, want) in [(-10.0, 4.1219329569517790001e-9), (-30.0, 1.7513021525389762695e-26)] {
            let got = GateKind::FMishGate.value(x);
            assert!(((got - want) / want).abs() < 1e-14, "x={x}: {got}");
        }
        let d = ActivationKind::FMish.derivative(-10.0);
        assert!(((d + 7.8312983472764602553e-8) / 7.8312983472764602553e-8).abs() < 1e-13, "{d}");
    }

    #[test]
    fn gap_examples() {
        // mpmath: 3.0594506126841893e-6, 0.49794024632415898
        let p = sigmoid_gompertz_gap(6.0).unwrap();
        assert!((p.gap / 3.059_450_612_684_189_3e-6 - 1.0).abs() < 1e-9);
        assert!((p.normalized - 0.497_940_246_324_158_98).abs() < 1e-9);
        let p = sigmoid_gompertz_gap(10.0).unwrap();
        assert!((0.499..=0.501).contains(&p.normalized));
        assert!((p.normalized - 0.499_962_168_700_377_36).abs() < 1e-9);
        let p = sigmoid_gompertz_gap(15.0).unwrap();
        assert!((p.normalized - 0.499_999_745_081_489_26).abs() < 1e-9);
        let p = sigmoid_gompertz_gap(0.0).unwrap();
        assert!((p.gap - 0.132_120_558_828_557_68).abs() < 1e-15);
        assert!(sigmoid_gompertz_gap(-1.0).is_err());
        let far = sigmoid_gompertz_gap(1000.0).unwrap();
        assert!((far.normalized - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gap_is_nonnegative() {
        for x in grid(0.0, 50.0, 5001) {
            assert!(sigmoid_gompertz_gap(x).unwrap().gap >= 0.0);
        }
    }
}
