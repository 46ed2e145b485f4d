use serde::{Deserialize, Serialize};

use super::{Dataset, LayerSpec, MicroNet, Mode};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.1, momentum: 0.9, weight_decay: 0.0, epochs: 300, batch_size: 32, seed: 42 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it freezes the parameters
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Usage(format!("lr must be finite and non-negative, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Usage(format!("momentum must lie in [0,1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Usage("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Usage("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval_loss: f64,
    pub accuracy: f64,
    pub eval_accuracy: f64,
}

pub fn curve_csv(curve: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,eval_loss,accuracy,eval_accuracy\n");
    for r in curve {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.eval_loss, r.accuracy, r.eval_accuracy
        ));
    }
    s
}

/// Mean softmax cross-entropy over the batch and its gradient with respect to the logits.
/// Logits of any shape `[batch, …]` are treated as `[batch, classes]`.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    let batch = targets.len();
    if batch == 0 || logits.shape().first() != Some(&batch) {
        return Err(Error::Usage(format!(
            "logits {:?} do not match {batch} targets",
            logits.shape()
        )));
    }
    let k = logits.len() / batch;
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    let scale = 1.0 / batch as f64;
    for (b, &t) in targets.iter().enumerate() {
        if t >= k {
            return Err(Error::Usage(format!("target {t} out of range for {k} classes")));
        }
        let z = &logits.data()[b * k..(b + 1) * k];
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
        let lse = m + sum.ln();
        loss += lse - z[t];
        let g = &mut grad[b * k..(b + 1) * k];
        for j in 0..k {
            g[j] = (z[j] - lse).exp() * scale;
        }
        g[t] -= scale;
    }
    Ok((loss * scale, Tensor::new(logits.shape().to_vec(), grad)?))
}

/// Fraction of rows whose arg-max logit equals the target.
pub fn accuracy(logits: &Tensor, targets: &[usize]) -> f64 {
    if targets.is_empty() {
        return f64::NAN;
    }
    let k = logits.len() / targets.len();
    let hits = logits
        .data()
        .chunks(k)
        .zip(targets)
        .filter(|(row, &t)| {
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best == t
        })
        .count();
    hits as f64 / targets.len() as f64
}

/// Non-finite values inside the network mean the run blew up.
fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Domain(reason) => Error::TrainingFailure { epoch, reason },
        other => other,
    }
}

fn evaluate(net: &MicroNet, data: &Dataset) -> Result<(f64, f64)> {
    let logits = net.infer(&data.features)?;
    let (loss, _) = softmax_cross_entropy(&logits, &data.labels)?;
    Ok((loss, accuracy(&logits, &data.labels)))
}

/// Builds a network from `layers` (initialized from `cfg.seed`) and trains it.
pub fn train(
    layers: Vec<LayerSpec>,
    train_set: &Dataset,
    eval_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MicroNet, Vec<EpochRecord>)> {
    let mut net = MicroNet::new(layers, cfg.seed)?;
    let curve = train_net(&mut net, train_set, eval_set, cfg)?;
    Ok((net, curve))
}

/// Minibatch SGD with heavy-ball momentum:
///
/// ```text
/// g ← ∇L + λ·W
/// v ← m·v + g
/// W ← W − lr·v
/// ```
///
/// Minibatch order is reshuffled every epoch from `cfg.seed`. After each epoch the
/// net is scored in eval mode on both sets.
pub fn train_net(
    net: &mut MicroNet,
    train_set: &Dataset,
    eval_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Usage("training set is empty".into()));
    }
    let mut rng = Rng::stream(cfg.seed, 2);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut velocity = vec![0.0; net.param_count()];
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        net.set_mode(Mode::Train);
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, y) = train_set.batch(idx);
            let logits = net.forward(&x).map_err(|e| diverged(epoch, e))?;
            let (loss, grad) = softmax_cross_entropy(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::TrainingFailure { epoch, reason: format!("minibatch loss is {loss}") });
            }
            loss_sum += loss * idx.len() as f64;
            net.backward(&grad)?;
            let grads = net.grads().to_vec();
            let params = net.params_mut();
            for ((w, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
                *v = cfg.momentum * *v + (g + cfg.weight_decay * *w);
                *w -= cfg.lr * *v;
            }
        }
        net.set_mode(Mode::Eval);
        let (_, acc) = evaluate(net, train_set).map_err(|e| diverged(epoch, e))?;
        let (eval_loss, eval_acc) = evaluate(net, eval_set).map_err(|e| diverged(epoch, e))?;
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() || !eval_loss.is_finite() {
            return Err(Error::TrainingFailure { epoch, reason: "loss diverged".into() });
        }
        curve.push(EpochRecord { epoch, train_loss, eval_loss, accuracy: acc, eval_accuracy: eval_acc });
    }
    net.set_mode(Mode::Eval);
    Ok(curve)
}
