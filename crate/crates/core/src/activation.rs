//! Scalar activation functions with closed-form first derivatives.
//!
//! Every activation is total over finite inputs and returns finite values. The
//! gated family (GELU, Swish, Mish, GoLU, FMish) has the form `x · g(x)` for a
//! CDF-like gate `g`; see [`crate::gate`] for the gates on their own.
//!
//! Conventions at the kink of the piecewise activations: ReLU′(0) = 0,
//! LeakyReLU′(0) = slope, ELU′(0) = 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::gate::GateKind;
use crate::special::{
    fmish_gate, gompertz, mish_gate, mish_gate_derivative, normal_cdf, normal_pdf, sigmoid, GOMPERTZ_CUTOFF,
};

/// Default LeakyReLU negative slope.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
/// Default ELU saturation scale.
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;

/// An activation function and its fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    #[serde(rename = "leakyrelu")]
    LeakyRelu { slope: f64 },
    Elu { alpha: f64 },
    Gelu,
    Swish,
    Mish,
    Golu,
    #[serde(rename = "fmish")]
    FMish,
}

impl ActivationKind {
    pub const LEAKY_RELU: Self = Self::LeakyRelu { slope: DEFAULT_LEAKY_SLOPE };
    pub const ELU: Self = Self::Elu { alpha: DEFAULT_ELU_ALPHA };

    /// All eight kinds with default parameters.
    pub const ALL: [Self; 8] = [
        Self::Relu,
        Self::LEAKY_RELU,
        Self::ELU,
        Self::Gelu,
        Self::Swish,
        Self::Mish,
        Self::Golu,
        Self::FMish,
    ];

    /// The seven activations compared in the original benchmarks (everything but FMish).
    pub const BENCHMARKED: [Self; 7] = [
        Self::Relu,
        Self::LEAKY_RELU,
        Self::ELU,
        Self::Gelu,
        Self::Swish,
        Self::Mish,
        Self::Golu,
    ];

    /// LeakyReLU with a validated slope in (0, 1]. A slope of exactly 1 is the identity.
    pub fn leaky_relu(slope: f64) -> Result<Self> {
        if slope.is_finite() && slope > 0.0 && slope <= 1.0 {
            Ok(Self::LeakyRelu { slope })
        } else {
            Err(Error::Usage(format!("leaky slope must lie in (0, 1], got {slope}")))
        }
    }

    /// ELU with a validated α > 0.
    pub fn elu(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self::Elu { alpha })
        } else {
            Err(Error::Usage(format!("elu alpha must be positive, got {alpha}")))
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Self::LeakyRelu { slope } => Self::leaky_relu(slope),
            Self::Elu { alpha } => Self::elu(alpha),
            other => Ok(other),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "ReLU",
            Self::LeakyRelu { .. } => "LeakyReLU",
            Self::Elu { .. } => "ELU",
            Self::Gelu => "GELU",
            Self::Swish => "Swish",
            Self::Mish => "Mish",
            Self::Golu => "GoLU",
            Self::FMish => "FMish",
        }
    }

    /// Location of the non-differentiable point, if any.
    pub fn kink(self) -> Option<f64> {
        match self {
            Self::Relu | Self::LeakyRelu { .. } | Self::Elu { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn is_smooth(self) -> bool {
        self.kink().is_none()
    }

    /// The gate `g` for self-gated kinds, where `f(x) = x · g(x)`.
    pub fn gate(self) -> Option<GateKind> {
        match self {
            Self::Gelu => Some(GateKind::GaussianCdf),
            Self::Swish => Some(GateKind::Sigmoid),
            Self::Mish => Some(GateKind::MishGate),
            Self::Golu => Some(GateKind::Gompertz),
            Self::FMish => Some(GateKind::FMishGate),
            _ => None,
        }
    }

    /// f(x). NaN in, NaN out; use [`act_forward`] for a checked call.
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Self::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Self::Elu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x.exp_m1()
                }
            }
            Self::Gelu => x * normal_cdf(x),
            Self::Swish => x * sigmoid(x),
            Self::Mish => x * mish_gate(x),
            Self::Golu => {
                if x <= GOMPERTZ_CUTOFF {
                    0.0
                } else {
                    x * gompertz(x)
                }
            }
            Self::FMish => x * fmish_gate(x),
        }
    }

    /// f′(x) in closed form.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Self::Elu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha * x.exp()
                }
            }
            Self::Gelu => normal_cdf(x) + x * normal_pdf(x),
            Self::Swish => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            Self::Mish => mish_gate(x) + x * mish_gate_derivative(x),
            // GoLU′ = G(x) + x G(x) e^{-x} = G(x) (1 + x e^{-x})
            Self::Golu => {
                if x <= GOMPERTZ_CUTOFF {
                    0.0
                } else {
                    let g = gompertz(x);
                    g + x * g * (-x).exp()
                }
            }
            // d/dx [x (1 - g(-x))] = 1 - g(-x) + x g'(-x)
            Self::FMish => fmish_gate(x) + x * mish_gate_derivative(-x),
        }
    }

    /// f″(x). GoLU uses its closed form; the piecewise kinds are exact off the kink;
    /// the remaining smooth kinds use a five-point central difference of [`Self::derivative`].
    pub fn second_derivative(self, x: f64) -> Result<f64> {
        if self.kink() == Some(x) {
            return Err(Error::UndefinedDerivative(format!(
                "{} has a kink at {x}",
                self.name()
            )));
        }
        Ok(match self {
            Self::Relu | Self::LeakyRelu { .. } => 0.0,
            Self::Elu { alpha } => {
                if x > 0.0 {
                    0.0
                } else {
                    alpha * x.exp()
                }
            }
            // GoLU″ = G(x) e^{-x} (2 + x e^{-x} - x)
            Self::Golu => {
                if x <= GOMPERTZ_CUTOFF {
                    0.0
                } else {
                    let e = (-x).exp();
                    gompertz(x) * e * (2.0 + x * e - x)
                }
            }
            Self::Gelu | Self::Swish | Self::Mish | Self::FMish => {
                let h = 1e-4f64.max(1e-4 * x.abs());
                let d = |t: f64| self.derivative(t);
                (-d(x + 2.0 * h) + 8.0 * d(x + h) - 8.0 * d(x - h) + d(x - 2.0 * h)) / (12.0 * h)
            }
        })
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LeakyRelu { slope } if *slope != DEFAULT_LEAKY_SLOPE => {
                write!(f, "LeakyReLU({slope})")
            }
            Self::Elu { alpha } if *alpha != DEFAULT_ELU_ALPHA => write!(f, "ELU({alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Accepts case-insensitive names, optionally with a parameter: `leakyrelu:0.2`, `elu:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, param) = match lower.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad activation parameter in '{s}'")))?;
                (n.to_string(), Some(v))
            }
            None => (lower, None),
        };
        let kind = match (name.replace(['-', '_'], "").as_str(), param) {
            ("relu", None) => Self::Relu,
            ("leakyrelu", p) => Self::leaky_relu(p.unwrap_or(DEFAULT_LEAKY_SLOPE))?,
            ("elu", p) => Self::elu(p.unwrap_or(DEFAULT_ELU_ALPHA))?,
            ("gelu", None) => Self::Gelu,
            ("swish" | "silu", None) => Self::Swish,
            ("mish", None) => Self::Mish,
            ("golu", None) => Self::Golu,
            ("fmish", None) => Self::FMish,
            _ => return Err(Error::Usage(format!("unknown activation '{s}'"))),
        };
        Ok(kind)
    }
}

/// f, f′ and f″ at one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Checked forward evaluation.
pub fn act_forward(kind: ActivationKind, x: f64) -> Result<f64> {
    ensure_finite(x, "activation input")?;
    Ok(kind.value(x))
}

/// Checked first derivative.
pub fn act_derivative(kind: ActivationKind, x: f64) -> Result<f64> {
    ensure_finite(x, "activation input")?;
    Ok(kind.derivative(x))
}

/// Checked second derivative; errors at a kink.
pub fn act_second_derivative(kind: ActivationKind, x: f64) -> Result<f64> {
    ensure_finite(x, "activation input")?;
    kind.second_derivative(x)
}

pub fn eval_point(kind: ActivationKind, x: f64) -> Result<EvalPoint> {
    Ok(EvalPoint {
        x,
        value: act_forward(kind, x)?,
        d1: act_derivative(kind, x)?,
        d2: act_second_derivative(kind, x)?,
    })
}
