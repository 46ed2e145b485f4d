//! A small deterministic network engine: dense, 3×3 convolution, batch normalization
//! and activation layers over one flat parameter vector.

mod checkpoint;
mod data;
mod gradcheck;
mod layers;
mod stats;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use data::{rings, two_moons, Dataset};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_FLOOR};
pub use layers::{LayerSpec, DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM};
pub use stats::{central_interval, intersect_intervals, weight_stats, weight_stats_in, WeightStats};
pub use train::{
    accuracy, curve_csv, softmax_cross_entropy, train, train_net, EpochRecord, TrainConfig,
};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::kernels::{apply_backward, apply_forward, ExecPath};
use crate::rng::Rng;
use crate::tensor::Tensor;
use layers::ConvShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Running statistics of one batchnorm layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Cache {
    Dense { input: Vec<f64>, batch: usize },
    Conv { input: Vec<f64>, shape: ConvShape },
    Norm { xhat: Vec<f64>, inv_std: Vec<f64>, batch: usize, spatial: usize, train: bool },
    Act { input: Tensor },
}

#[derive(Debug, Clone)]
pub struct MicroNet {
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    params: Vec<f64>,
    grads: Vec<f64>,
    running: Vec<Option<RunningStats>>,
    mode: Mode,
    cache: Option<(Vec<usize>, Vec<Cache>)>,
}

impl MicroNet {
    /// Builds the network and initializes it from `seed`: dense and conv weights are
    /// Kaiming-uniform on `±√(6/fan_in)`, biases zero, batchnorm scale 1 and shift 0.
    pub fn new(layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        validate_layers(&layers)?;
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        offsets.push(total);

        let mut params = vec![0.0; total];
        let mut running = Vec::with_capacity(layers.len());
        let mut rng = Rng::stream(seed, 0);
        for (i, l) in layers.iter().enumerate() {
            let p = &mut params[offsets[i]..offsets[i + 1]];
            match *l {
                LayerSpec::Dense { .. } | LayerSpec::Conv3x3 { .. } => {
                    let bound = (6.0 / l.fan_in() as f64).sqrt();
                    for w in &mut p[..l.weight_count()] {
                        *w = rng.uniform_range(-bound, bound);
                    }
                }
                LayerSpec::BatchNorm { features, .. } => p[..features].fill(1.0),
                LayerSpec::Act { .. } => {}
            }
            running.push(match *l {
                LayerSpec::BatchNorm { features, .. } => {
                    Some(RunningStats { mean: vec![0.0; features], var: vec![1.0; features] })
                }
                _ => None,
            });
        }
        Ok(Self {
            layers,
            offsets,
            grads: vec![0.0; total],
            params,
            running,
            mode: Mode::Train,
            cache: None,
        })
    }

    /// Dense stack `sizes[0] → … → sizes[n]` with `kind` between consecutive dense layers.
    pub fn mlp(sizes: &[usize], kind: ActivationKind, seed: u64) -> Result<Self> {
        Self::new(mlp_layers(sizes, kind)?, seed)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Parameter range `[start, end)` of layer `i`.
    pub fn layer_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn running_stats(&self) -> &[Option<RunningStats>] {
        &self.running
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn has_kinked_activation(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l, LayerSpec::Act { kind } if !kind.is_smooth()))
    }

    /// Forward pass that caches intermediates for [`Self::backward`]. In train mode
    /// batchnorm uses batch statistics and updates its running averages.
    pub fn forward(&mut self, batch: &Tensor) -> Result<Tensor> {
        let mut trace = Trace::default();
        let out = forward_pass(self, batch, Some(&mut trace))?;
        for (i, mean, var) in trace.batch_stats {
            if let (LayerSpec::BatchNorm { momentum, .. }, Some(stats)) = (self.layers[i], self.running[i].as_mut()) {
                for f in 0..mean.len() {
                    stats.mean[f] = (1.0 - momentum) * stats.mean[f] + momentum * mean[f];
                    stats.var[f] = (1.0 - momentum) * stats.var[f] + momentum * var[f];
                }
            }
        }
        self.cache = Some((batch.shape().to_vec(), trace.caches));
        Ok(out)
    }

    /// Forward pass without caching or state updates.
    pub fn infer(&self, batch: &Tensor) -> Result<Tensor> {
        forward_pass(self, batch, None)
    }

    /// Fills the gradient vector with ∂loss/∂params given ∂loss/∂output, and returns
    /// ∂loss/∂input.
    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<Tensor> {
        let (input_shape, caches) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("backward called before forward".into()))?;
        self.grads.fill(0.0);
        let mut grad = loss_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let range = self.offsets[i]..self.offsets[i + 1];
            let p = &self.params[range.clone()];
            let g = &mut self.grads[range];
            grad = match (layer, &caches[i]) {
                (LayerSpec::Dense { inputs, .. }, Cache::Dense { input, batch }) => {
                    let (w, b) = p.split_at(layer.weight_count());
                    let (dw, db) = g.split_at_mut(layer.weight_count());
                    check_len(&grad, batch * b.len())?;
                    let dx = layers::dense_backward(w, input, grad.data(), *batch, *inputs, dw, db);
                    Tensor::new(vec![*batch, *inputs], dx)?
                }
                (LayerSpec::Conv3x3 { .. }, Cache::Conv { input, shape }) => {
                    let (w, _) = p.split_at(layer.weight_count());
                    let (dw, db) = g.split_at_mut(layer.weight_count());
                    check_len(&grad, shape.batch * shape.out_ch * shape.h * shape.w)?;
                    let dx = layers::conv3x3_backward(w, input, grad.data(), *shape, dw, db);
                    Tensor::new(vec![shape.batch, shape.in_ch, shape.h, shape.w], dx)?
                }
                (LayerSpec::BatchNorm { features, .. }, Cache::Norm { xhat, inv_std, batch, spatial, train }) => {
                    let (gamma, _) = p.split_at(*features);
                    let (dgamma, dbeta) = g.split_at_mut(*features);
                    check_len(&grad, xhat.len())?;
                    let dx = layers::bn_backward(
                        grad.data(),
                        xhat,
                        gamma,
                        inv_std,
                        *batch,
                        *spatial,
                        *train,
                        dgamma,
                        dbeta,
                    );
                    Tensor::new(grad.shape().to_vec(), dx)?
                }
                (LayerSpec::Act { kind }, Cache::Act { input }) => {
                    let up = grad.reshape(input.shape().to_vec())?;
                    apply_backward(*kind, input, &up, ExecPath::Vector)?
                }
                _ => unreachable!("cache layout follows layer layout"),
            };
        }
        grad.reshape(input_shape.clone())
    }

    /// Parameter indices belonging to dense and conv layers (weights and biases).
    pub fn non_normalization_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Dense { .. } | LayerSpec::Conv3x3 { .. }))
            .flat_map(|(i, _)| self.layer_range(i))
            .collect()
    }

    /// Inputs of every kinked activation layer in the last cached forward pass.
    pub(crate) fn kinked_activation_inputs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if let Some((_, caches)) = &self.cache {
            for (l, c) in self.layers.iter().zip(caches) {
                if let (LayerSpec::Act { kind }, Cache::Act { input }) = (l, c) {
                    if let Some(k) = kind.kink() {
                        out.extend(input.data().iter().map(|&x| (x, k)));
                    }
                }
            }
        }
        out
    }

    pub(crate) fn replace_state(&mut self, params: Vec<f64>, running: Vec<Option<RunningStats>>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Data(format!(
                "expected {} parameters, found {}",
                self.params.len(),
                params.len()
            )));
        }
        if running.len() != self.layers.len() {
            return Err(Error::Data("running statistics do not match layer count".into()));
        }
        self.params = params;
        self.running = running;
        self.cache = None;
        Ok(())
    }
}

#[derive(Default)]
struct Trace {
    caches: Vec<Cache>,
    batch_stats: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

fn check_len(t: &Tensor, expected: usize) -> Result<()> {
    if t.len() != expected {
        return Err(Error::Usage(format!(
            "gradient has {} elements, layer output has {expected}",
            t.len()
        )));
    }
    Ok(())
}

pub fn mlp_layers(sizes: &[usize], kind: ActivationKind) -> Result<Vec<LayerSpec>> {
    if sizes.len() < 2 {
        return Err(Error::Usage("an MLP needs at least input and output sizes".into()));
    }
    let mut layers = Vec::new();
    for (i, pair) in sizes.windows(2).enumerate() {
        layers.push(LayerSpec::dense(pair[0], pair[1]));
        if i + 2 < sizes.len() {
            layers.push(LayerSpec::act(kind));
        }
    }
    Ok(layers)
}

fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    // channel or feature width of the current activation, when statically known
    let mut width: Option<usize> = None;
    let mut spatial = false;
    for (i, l) in layers.iter().enumerate() {
        let bad = |msg: String| Err(Error::Usage(format!("layer {i}: {msg}")));
        match *l {
            LayerSpec::Dense { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return bad("dense extents must be positive".into());
                }
                if !spatial {
                    if let Some(w) = width {
                        if w != inputs {
                            return bad(format!("dense expects {inputs} inputs but receives {w}"));
                        }
                    }
                }
                width = Some(outputs);
                spatial = false;
            }
            LayerSpec::Conv3x3 { in_ch, out_ch } => {
                if in_ch == 0 || out_ch == 0 {
                    return bad("conv channel counts must be positive".into());
                }
                if let Some(w) = width {
                    if w != in_ch || !spatial {
                        return bad(format!("conv expects {in_ch} spatial channels"));
                    }
                }
                width = Some(out_ch);
                spatial = true;
            }
            LayerSpec::BatchNorm { features, eps, momentum } => {
                if features == 0 || !(eps > 0.0) || !(0.0..=1.0).contains(&momentum) {
                    return bad("batchnorm needs features > 0, eps > 0, momentum in [0,1]".into());
                }
                if let Some(w) = width {
                    if w != features {
                        return bad(format!("batchnorm over {features} features follows width {w}"));
                    }
                }
            }
            LayerSpec::Act { kind } => {
                kind.validate()?;
            }
        }
    }
    Ok(())
}

fn forward_pass(net: &MicroNet, batch: &Tensor, mut trace: Option<&mut Trace>) -> Result<Tensor> {
    if !batch.all_finite() {
        return Err(Error::Domain("network input contains non-finite values".into()));
    }
    let mut x = batch.clone();
    for (i, layer) in net.layers.iter().enumerate() {
        let p = &net.params[net.layer_range(i)];
        let shape = x.shape().to_vec();
        let bad_shape = |what: &str| {
            Err(Error::Usage(format!("layer {i} ({what}) cannot take input of shape {shape:?}")))
        };
        x = match *layer {
            LayerSpec::Dense { inputs, outputs } => {
                if shape.is_empty() || shape[1..].iter().product::<usize>() != inputs {
                    return bad_shape("dense");
                }
                let n = shape[0];
                let (w, b) = p.split_at(layer.weight_count());
                let y = layers::dense_forward(w, b, x.data(), n, inputs);
                if let Some(t) = trace.as_deref_mut() {
                    t.caches.push(Cache::Dense { input: x.into_data(), batch: n });
                }
                Tensor::new(vec![n, outputs], y)?
            }
            LayerSpec::Conv3x3 { in_ch, out_ch } => {
                if shape.len() != 4 || shape[1] != in_ch {
                    return bad_shape("conv3x3");
                }
                let s = ConvShape { batch: shape[0], in_ch, out_ch, h: shape[2], w: shape[3] };
                let (w, b) = p.split_at(layer.weight_count());
                let y = layers::conv3x3_forward(w, b, x.data(), s);
                if let Some(t) = trace.as_deref_mut() {
                    t.caches.push(Cache::Conv { input: x.into_data(), shape: s });
                }
                Tensor::new(vec![s.batch, out_ch, s.h, s.w], y)?
            }
            LayerSpec::BatchNorm { features, eps, .. } => {
                if shape.len() < 2 || shape[1] != features {
                    return bad_shape("batchnorm");
                }
                let n = shape[0];
                let spatial: usize = shape[2..].iter().product();
                let (gamma, beta) = p.split_at(features);
                let train = net.mode == Mode::Train;
                let stats = net.running[i].as_ref().expect("batchnorm layers carry running stats");
                let (mean, inv_std) = if train {
                    let (mean, var) = layers::feature_moments(x.data(), n, features, spatial);
                    let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
                    if let Some(t) = trace.as_deref_mut() {
                        t.batch_stats.push((i, mean.clone(), var));
                    }
                    (mean, inv)
                } else {
                    let inv: Vec<f64> = stats.var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
                    (stats.mean.clone(), inv)
                };
                let (y, xhat) = layers::bn_apply(x.data(), gamma, beta, &mean, &inv_std, n, spatial);
                if let Some(t) = trace.as_deref_mut() {
                    t.caches.push(Cache::Norm { xhat, inv_std, batch: n, spatial, train });
                }
                Tensor::new(shape, y)?
            }
            LayerSpec::Act { kind } => {
                let y = apply_forward(kind, &x, ExecPath::Vector)?;
                if let Some(t) = trace.as_deref_mut() {
                    t.caches.push(Cache::Act { input: x });
                }
                y
            }
        };
    }
    Ok(x)
}
