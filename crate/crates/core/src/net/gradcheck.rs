use serde::{Deserialize, Serialize};

use super::{softmax_cross_entropy, MicroNet};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Denominator floor of the relative error, so gradients near zero are compared
/// against the finite-difference noise level rather than against themselves.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

/// Networks larger than this are checked on a random subsample.
const FULL_CHECK_LIMIT: usize = 2000;
const SUBSAMPLE: usize = 600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter index where `max_rel_err` occurred.
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Parameters skipped because the ±eps probe moved a pre-activation across a kink.
    pub excluded: Vec<usize>,
}

/// Compares backpropagated gradients of the mean softmax cross-entropy against central
/// differences `(L(w+ε) − L(w−ε)) / 2ε`, with error `|a − n| / max(|a|, |n|, floor)`.
///
/// Every parameter is probed when there are at most 2000; otherwise 600 indices drawn
/// from `seed`. The net is cloned, so its state (including batchnorm running averages)
/// is untouched.
pub fn grad_check(
    net: &MicroNet,
    batch: &Tensor,
    targets: &[usize],
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::Usage(format!("eps must lie in [1e-7, 1e-4], got {eps}")));
    }
    let mut work = net.clone();
    let logits = work.forward(batch)?;
    let (_, g) = softmax_cross_entropy(&logits, targets)?;
    work.backward(&g)?;
    let analytic = work.grads().to_vec();

    let n = work.param_count();
    let indices: Vec<usize> = if n <= FULL_CHECK_LIMIT {
        (0..n).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        Rng::new(seed).shuffle(&mut all);
        all.truncate(SUBSAMPLE);
        all.sort_unstable();
        all
    };

    let kinked = work.has_kinked_activation();
    let probe = |w: &mut MicroNet, i: usize, value: f64| -> Result<(f64, Vec<bool>)> {
        w.params_mut()[i] = value;
        let out = w.forward(batch)?;
        let (loss, _) = softmax_cross_entropy(&out, targets)?;
        let sides = if kinked {
            w.kinked_activation_inputs().iter().map(|&(x, k)| x > k).collect()
        } else {
            Vec::new()
        };
        Ok((loss, sides))
    };

    let mut report = GradCheckReport { max_rel_err: 0.0, worst_index: None, checked: 0, excluded: Vec::new() };
    for i in indices {
        let original = work.params()[i];
        let (lp, sp) = probe(&mut work, i, original + eps)?;
        let (lm, sm) = probe(&mut work, i, original - eps)?;
        work.params_mut()[i] = original;
        if sp != sm {
            report.excluded.push(i);
            continue;
        }
        let numeric = (lp - lm) / (2.0 * eps);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        report.checked += 1;
        if report.worst_index.is_none() || err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst_index = Some(i);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::net::LayerSpec;

    fn random_batch(shape: Vec<usize>, seed: u64) -> Tensor {
        let n = shape.iter().product();
        let mut rng = Rng::new(seed);
        Tensor::new(shape, (0..n).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn small_mlp_passes_for_smooth_kinds() {
        for kind in [
            ActivationKind::Golu,
            ActivationKind::Gelu,
            ActivationKind::Swish,
            ActivationKind::Mish,
            ActivationKind::FMish,
        ] {
            let layers = vec![LayerSpec::dense(4, 3), LayerSpec::act(kind), LayerSpec::dense(3, 2)];
            let net = MicroNet::new(layers, 17).unwrap();
            let x = random_batch(vec![5, 4], 3);
            let r = grad_check(&net, &x, &[0, 1, 1, 0, 1], 1e-5, 0).unwrap();
            assert_eq!(r.checked, net.param_count());
            assert!(r.max_rel_err < 1e-5, "{kind}: {r:?}");
        }
    }

    #[test]
    fn kink_crossing_is_excluded() {
        // input 0 into dense(1,1) with weight 1 and bias 0 sits exactly on the ReLU kink
        let layers = vec![LayerSpec::dense(1, 1), LayerSpec::act(ActivationKind::Relu), LayerSpec::dense(1, 2)];
        let mut net = MicroNet::new(layers, 1).unwrap();
        net.params_mut()[..2].copy_from_slice(&[1.0, 0.0]);
        let x = Tensor::new(vec![1, 1], vec![0.0]).unwrap();
        let r = grad_check(&net, &x, &[1], 1e-6, 0).unwrap();
        // the bias probe crosses the kink; the weight probe does not move a zero input
        assert_eq!(r.excluded, vec![1]);
    }

    #[test]
    fn eps_outside_range_rejected() {
        let net = MicroNet::mlp(&[2, 2], ActivationKind::Golu, 1).unwrap();
        let x = random_batch(vec![1, 2], 1);
        assert!(grad_check(&net, &x, &[0], 1e-2, 0).is_err());
    }
}
