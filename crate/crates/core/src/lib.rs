//! Numerics for the Gompertz Linear Unit (GoLU) and the activations it is compared with.
//!
//! The crate is organised by concern:
//!
//! - [`activation`]: scalar forward values and closed-form derivatives.
//! - [`gate`]: gate functions as CDFs, their densities, the flip construction.
//! - [`kernels`]: batched elementwise application over [`Tensor`]s and a throughput benchmark.
//! - [`net`]: a small deterministic network engine (dense, conv3×3, batchnorm) with SGD.
//! - [`variance`]: delta-method moments, quadrature and Monte-Carlo oracles, the squeeze experiment.
//! - [`landscape`]: loss surfaces along two frozen random directions.
//! - [`ranking`]: Friedman / Nemenyi critical-difference analysis.

pub mod activation;
pub mod error;
pub mod gate;
pub mod kernels;
pub mod landscape;
pub mod net;
pub mod quadrature;
pub mod ranking;
pub mod rng;
pub mod special;
pub mod tensor;
pub mod variance;

pub use activation::{act_derivative, act_forward, act_second_derivative, ActivationKind, EvalPoint};
pub use error::{Error, Result};
pub use net::{LayerSpec, MicroNet, TrainConfig};
pub use gate::{density_profile, flip_gate, gate_density, gate_value, sigmoid_gompertz_gap, GateKind};
pub use kernels::{apply_backward, apply_forward, bench_kernel, BenchReport, ExecPath, Precision};
pub use rng::Rng;
pub use tensor::{Element, Tensor};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
