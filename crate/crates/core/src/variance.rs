//! How much an activation squeezes the spread of its input.
//!
//! For `x ~ N(μ, σ²)` the first-order (delta) approximation is
//! `Var[f(x)] ≈ f′(μ)² σ²` and the second-order mean is `E[f(x)] ≈ f(μ) + ½ f″(μ) σ²`.
//! Two independent oracles check it: Gaussian quadrature and seeded Monte-Carlo.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{ensure_finite, Error, Result};
use crate::kernels::{apply_forward, ExecPath};
use crate::net::{LayerSpec, MicroNet};
use crate::quadrature::{composite, gauss_hermite, gauss_legendre};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Delta,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Delta => "delta",
            Self::Quadrature => "quadrature",
            Self::MonteCarlo => "montecarlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub method: Method,
    /// Sample count (Monte-Carlo) or node count (quadrature).
    pub n_or_nodes: usize,
    pub seed: Option<u64>,
    /// Standard error of `variance`, Monte-Carlo only.
    pub variance_se: Option<f64>,
}

fn check_inputs(kind: ActivationKind, mu: f64, sigma: f64) -> Result<()> {
    kind.validate()?;
    ensure_finite(mu, "mu")?;
    ensure_finite(sigma, "sigma")?;
    if sigma < 0.0 {
        return Err(Error::Usage(format!("sigma must be non-negative, got {sigma}")));
    }
    Ok(())
}

fn at_kink(kind: ActivationKind, mu: f64) -> Result<()> {
    if kind.kink() == Some(mu) {
        return Err(Error::UndefinedDerivative(format!("{kind} has a kink at {mu}")));
    }
    Ok(())
}

/// `f′(μ)² σ²`. Zero when `σ = 0`.
pub fn delta_variance(kind: ActivationKind, mu: f64, sigma: f64) -> Result<f64> {
    check_inputs(kind, mu, sigma)?;
    if sigma == 0.0 {
        return Ok(0.0);
    }
    at_kink(kind, mu)?;
    let d = kind.derivative(mu);
    Ok(d * d * sigma * sigma)
}

/// `f(μ) + ½ f″(μ) σ²`. Equal to `f(μ)` when `σ = 0`.
pub fn delta_mean(kind: ActivationKind, mu: f64, sigma: f64) -> Result<f64> {
    check_inputs(kind, mu, sigma)?;
    if sigma == 0.0 {
        return Ok(kind.value(mu));
    }
    at_kink(kind, mu)?;
    Ok(kind.value(mu) + 0.5 * kind.second_derivative(mu)? * sigma * sigma)
}

/// Delta estimate packaged like the oracles.
pub fn delta_moments(kind: ActivationKind, mu: f64, sigma: f64) -> Result<MomentEstimate> {
    Ok(MomentEstimate {
        mean: delta_mean(kind, mu, sigma)?,
        variance: delta_variance(kind, mu, sigma)?,
        method: Method::Delta,
        n_or_nodes: 0,
        seed: None,
        variance_se: None,
    })
}

pub const MIN_QUADRATURE_NODES: usize = 64;
/// Agreement required between the `n`- and `2n`-node results.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Half-width of the truncated integration range for kinked kinds, in σ.
const TRUNCATION: f64 = 12.0;
const PANELS: usize = 4;

fn expectation(kind: ActivationKind, mu: f64, sigma: f64, nodes: usize, g: impl Fn(f64) -> f64) -> f64 {
    match kind.kink() {
        None => {
            // E[g(f(x))] = π^{-1/2} Σ w_i g(f(μ + √2 σ t_i))
            let rule = gauss_hermite(nodes);
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(t, w)| w * g(kind.value(mu + SQRT_2 * sigma * t)))
                .sum();
            s / PI.sqrt()
        }
        Some(k) => {
            // Gauss–Legendre on each smooth piece of [μ − 12σ, μ + 12σ]
            let rule = gauss_legendre((nodes / PANELS).max(8));
            let (a, b) = (mu - TRUNCATION * sigma, mu + TRUNCATION * sigma);
            let density = |x: f64| {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            };
            let h = |x: f64| density(x) * g(kind.value(x));
            if k > a && k < b {
                composite(&rule, a, k, PANELS, h) + composite(&rule, k, b, PANELS, h)
            } else {
                composite(&rule, a, b, 2 * PANELS, h)
            }
        }
    }
}

fn quadrature_at(kind: ActivationKind, mu: f64, sigma: f64, nodes: usize) -> (f64, f64) {
    let mean = expectation(kind, mu, sigma, nodes, |y| y);
    let variance = expectation(kind, mu, sigma, nodes, |y| (y - mean) * (y - mean));
    (mean, variance.max(0.0))
}

/// Mean and variance of `f(x)`, `x ~ N(μ, σ²)`, by Gauss–Hermite quadrature for smooth
/// kinds and by Gauss–Legendre split at the kink for the ReLU family. The result at
/// `nodes` is checked against `2·nodes`; the finer one is returned.
pub fn quadrature_moments(kind: ActivationKind, mu: f64, sigma: f64, nodes: usize) -> Result<MomentEstimate> {
    check_inputs(kind, mu, sigma)?;
    if nodes < MIN_QUADRATURE_NODES {
        return Err(Error::Usage(format!("quadrature needs at least {MIN_QUADRATURE_NODES} nodes")));
    }
    if sigma == 0.0 {
        return Err(Error::Usage("quadrature needs sigma > 0".into()));
    }
    let (m1, v1) = quadrature_at(kind, mu, sigma, nodes);
    let (m2, v2) = quadrature_at(kind, mu, sigma, 2 * nodes);
    let gap = (m1 - m2).abs().max((v1 - v2).abs());
    if !(gap <= QUADRATURE_TOLERANCE) {
        return Err(Error::Resolution(format!(
            "{kind} at mu={mu}, sigma={sigma}: {nodes} and {} nodes differ by {gap:e}",
            2 * nodes
        )));
    }
    Ok(MomentEstimate {
        mean: m2,
        variance: v2,
        method: Method::Quadrature,
        n_or_nodes: 2 * nodes,
        seed: None,
        variance_se: None,
    })
}

pub const MIN_MC_SAMPLES: usize = 10_000;

/// Sample mean and variance of `f(μ + σ z)` over `n` Box–Muller normals from `seed`.
/// The variance's standard error is `√((m₄ − s⁴)/n)` with `m₄` the fourth central moment.
pub fn mc_moments(kind: ActivationKind, mu: f64, sigma: f64, n: usize, seed: u64) -> Result<MomentEstimate> {
    check_inputs(kind, mu, sigma)?;
    if n < MIN_MC_SAMPLES {
        return Err(Error::Usage(format!("Monte-Carlo needs at least {MIN_MC_SAMPLES} samples")));
    }
    let mut rng = Rng::new(seed);
    let ys: Vec<f64> = (0..n).map(|_| kind.value(mu + sigma * rng.normal())).collect();
    let nf = n as f64;
    let mean = ys.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for y in &ys {
        let d2 = (y - mean) * (y - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    // a point mass has no spread; skip the rounding residue of the mean
    let (variance, m4) = if sigma == 0.0 { (0.0, 0.0) } else { (m2 / nf, m4 / nf) };
    Ok(MomentEstimate {
        mean,
        variance,
        method: Method::MonteCarlo,
        n_or_nodes: n,
        seed: Some(seed),
        variance_se: Some(((m4 - variance * variance).max(0.0) / nf).sqrt()),
    })
}

pub const MOMENT_CSV_HEADER: &str = "kind,mu,sigma,method,mean,variance";

pub fn moment_csv_row(kind: ActivationKind, mu: f64, sigma: f64, m: &MomentEstimate) -> String {
    format!("{kind},{mu},{sigma},{},{},{}", m.method, m.mean, m.variance)
}

/// Quadrature variance of every kind under `N(0, 1)`.
pub fn standard_normal_variances(kinds: &[ActivationKind]) -> Result<Vec<(ActivationKind, f64)>> {
    kinds
        .iter()
        .map(|&k| Ok((k, quadrature_moments(k, 0.0, 1.0, 128)?.variance)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRow {
    pub activation: ActivationKind,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub rows: Vec<SqueezeRow>,
    /// Variance of the normalized pre-activation (the identity control).
    pub pre_activation_variance: f64,
    /// Set when the image is constant or a conv channel has variance below the batchnorm eps.
    pub degenerate: bool,
    pub out_channels: usize,
    pub seed: u64,
}

impl SqueezeReport {
    pub fn variance_of(&self, kind: ActivationKind) -> Option<f64> {
        self.rows.iter().find(|r| r.activation == kind).map(|r| r.variance)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("activation,variance\n");
        s.push_str(&format!("identity,{}\n", self.pre_activation_variance));
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", r.activation, r.variance));
        }
        s
    }
}

pub const DEFAULT_SQUEEZE_CHANNELS: usize = 16;

/// A `[3, h, w]` image of independent uniform integer intensities in `0..=255`.
pub fn synthetic_image(h: usize, w: usize, seed: u64) -> Tensor {
    let mut rng = Rng::new(seed);
    let data = (0..3 * h * w).map(|_| rng.below(256) as f64).collect();
    Tensor::new(vec![3, h, w], data).expect("shape matches buffer")
}

/// One seeded conv3×3 (3 → `out_channels`, Kaiming-uniform, zero bias) followed by
/// train-mode batchnorm (eps 1e-5, scale 1, shift 0) yields a shared pre-activation;
/// each kind is applied to it and the variance over all output elements reported.
pub fn squeeze_experiment(
    image: &Tensor,
    out_channels: usize,
    seed: u64,
    kinds: &[ActivationKind],
) -> Result<SqueezeReport> {
    let shape = image.shape();
    if shape.len() != 3 || shape[0] != 3 || shape[1] < 8 || shape[2] < 8 {
        return Err(Error::Usage(format!("squeeze needs a [3, H, W] image with H, W >= 8, got {shape:?}")));
    }
    if out_channels == 0 {
        return Err(Error::Usage("out_channels must be positive".into()));
    }
    let batch = image.clone().reshape(vec![1, 3, shape[1], shape[2]])?;
    let conv = LayerSpec::conv3x3(3, out_channels);
    let mut net = MicroNet::new(vec![conv, LayerSpec::batchnorm(out_channels)], seed)?;
    let pre = net.forward(&batch)?;

    // same seed and first layer, so identical conv weights
    let raw = MicroNet::new(vec![conv], seed)?.infer(&batch)?;
    let plane = shape[1] * shape[2];
    let constant_image = image.data().iter().all(|&v| v == image.data()[0]);
    let flat_channel = raw.data().chunks(plane).any(|c| {
        let m = c.iter().sum::<f64>() / plane as f64;
        c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (plane as f64) <= crate::net::DEFAULT_BN_EPS
    });

    let rows = kinds
        .par_iter()
        .map(|&kind| {
            let out = apply_forward(kind, &pre, ExecPath::Scalar)?;
            Ok(SqueezeRow { activation: kind, variance: out.mean_variance().1 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SqueezeReport {
        rows,
        pre_activation_variance: pre.mean_variance().1,
        degenerate: constant_image || flat_channel,
        out_channels,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the data. Constant data gets a unit-wide range centred on it.
    pub fn of(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 || values.is_empty() {
            return Err(Error::Usage("histogram needs values and at least one bin".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0; bins];
        for v in values {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
        Ok(Self { edges: (0..=bins).map(|i| lo + width * i as f64).collect(), counts })
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        s
    }
}

pub const MIN_DENSITY_BINS: usize = 50;

/// Histogram of `f` applied to every sample.
pub fn output_density(kind: ActivationKind, samples: &Tensor, bins: usize) -> Result<Histogram> {
    if bins < MIN_DENSITY_BINS {
        return Err(Error::Usage(format!("density needs at least {MIN_DENSITY_BINS} bins")));
    }
    let out = apply_forward(kind, samples, ExecPath::Vector)?;
    Histogram::of(out.data(), bins)
}

/// Interquartile range with linear interpolation between order statistics.
pub fn interquartile_range(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    q(0.75) - q(0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn delta_examples() {
        let v = delta_variance(ActivationKind::Golu, 0.0, 0.1).unwrap();
        assert!((v - (-2f64).exp() * 0.01).abs() < 1e-17);
        assert!((v - 1.3534e-3).abs() < 1e-7);
        assert!((delta_variance(ActivationKind::Swish, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        for kind in ActivationKind::ALL {
            assert_eq!(delta_variance(kind, 0.3, 0.0).unwrap(), 0.0);
            assert_eq!(delta_mean(kind, 0.3, 0.0).unwrap(), kind.value(0.3));
        }
        let m = delta_mean(ActivationKind::Golu, 0.0, 0.1).unwrap();
        assert!((m - 0.01 / E).abs() < 1e-12, "{m}");
        let g = delta_mean(ActivationKind::Gelu, 0.0, 0.2).unwrap();
        assert!((g - 0.0159577).abs() < 1e-7, "{g}");
    }

    #[test]
    fn kink_is_undefined() {
        assert!(matches!(
            delta_variance(ActivationKind::Relu, 0.0, 0.1),
            Err(Error::UndefinedDerivative(_))
        ));
        assert!(matches!(delta_mean(ActivationKind::ELU, 0.0, 0.1), Err(Error::UndefinedDerivative(_))));
    }

    #[test]
    fn relu_half_normal_moments() {
        let m = quadrature_moments(ActivationKind::Relu, 0.0, 1.0, 64).unwrap();
        let mean = 1.0 / (2.0 * PI).sqrt();
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((m.variance - (0.5 - 1.0 / (2.0 * PI))).abs() < 1e-12);
    }

    #[test]
    fn identity_leaky_relu() {
        let id = ActivationKind::leaky_relu(1.0).unwrap();
        let m = quadrature_moments(id, 0.7, 1.3, 64).unwrap();
        assert!((m.mean - 0.7).abs() < 1e-12);
        assert!((m.variance - 1.69).abs() < 1e-12);
    }

    #[test]
    fn quadrature_preconditions() {
        assert!(quadrature_moments(ActivationKind::Golu, 0.0, 1.0, 32).is_err());
        assert!(quadrature_moments(ActivationKind::Golu, 0.0, 0.0, 64).is_err());
    }

    #[test]
    fn small_sigma_delta_agreement() {
        let q = quadrature_moments(ActivationKind::Golu, 0.0, 0.05, 64).unwrap();
        let d = delta_variance(ActivationKind::Golu, 0.0, 0.05).unwrap();
        assert!((q.variance - d).abs() / q.variance < 0.01);
    }

    #[test]
    fn monte_carlo_determinism_and_degenerate() {
        let a = mc_moments(ActivationKind::Mish, 0.1, 0.5, 20_000, 9).unwrap();
        let b = mc_moments(ActivationKind::Mish, 0.1, 0.5, 20_000, 9).unwrap();
        assert_eq!(a, b);
        let z = mc_moments(ActivationKind::Gelu, 0.4, 0.0, 10_000, 1).unwrap();
        assert_eq!(z.variance, 0.0);
        assert!(mc_moments(ActivationKind::Gelu, 0.0, 1.0, 100, 1).is_err());
    }

    #[test]
    fn squeeze_control_and_determinism() {
        let img = synthetic_image(16, 16, 7);
        let a = squeeze_experiment(&img, 16, 7, &ActivationKind::BENCHMARKED).unwrap();
        let b = squeeze_experiment(&img, 16, 7, &ActivationKind::BENCHMARKED).unwrap();
        assert_eq!(a, b);
        assert!((a.pre_activation_variance - 1.0).abs() < 1e-5);
        assert!(!a.degenerate);
    }

    #[test]
    fn constant_image_is_flagged() {
        let img = Tensor::filled(vec![3, 8, 8], 0.0);
        let r = squeeze_experiment(&img, 4, 1, &[ActivationKind::Golu]).unwrap();
        assert!(r.degenerate);
        assert!(r.rows[0].variance.is_finite());
    }

    #[test]
    fn single_bin_cases() {
        let zeros = Tensor::zeros(vec![100]);
        let h = output_density(ActivationKind::Golu, &zeros, 50).unwrap();
        assert_eq!(h.occupied(), 1);
        let negatives = Tensor::vector((1..=100).map(|i| -(i as f64)).collect());
        let h = output_density(ActivationKind::Relu, &negatives, 50).unwrap();
        assert_eq!(h.occupied(), 1);
        assert!(h.edges[0] <= 0.0 && h.edges[50] >= 0.0);
        assert!(output_density(ActivationKind::Relu, &negatives, 10).is_err());
    }
}
