//! Layer arithmetic on raw row-major slices.
//!
//! Every routine walks its loops in a fixed order so results are reproducible bit
//! for bit. Shapes are passed explicitly; callers validate them.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;

pub const DEFAULT_BN_EPS: f64 = 1e-5;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    /// Fully connected. Inputs with more than two axes are flattened per sample.
    Dense { inputs: usize, outputs: usize },
    /// 3×3 convolution, stride 1, zero padding 1.
    Conv3x3 { in_ch: usize, out_ch: usize },
    /// Per-feature normalization over batch (and spatial) axes.
    BatchNorm { features: usize, eps: f64, momentum: f64 },
    Act { kind: ActivationKind },
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        Self::Dense { inputs, outputs }
    }

    pub fn conv3x3(in_ch: usize, out_ch: usize) -> Self {
        Self::Conv3x3 { in_ch, out_ch }
    }

    pub fn batchnorm(features: usize) -> Self {
        Self::BatchNorm { features, eps: DEFAULT_BN_EPS, momentum: DEFAULT_BN_MOMENTUM }
    }

    pub fn act(kind: ActivationKind) -> Self {
        Self::Act { kind }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            Self::Dense { inputs, outputs } => inputs * outputs + outputs,
            Self::Conv3x3 { in_ch, out_ch } => out_ch * in_ch * 9 + out_ch,
            Self::BatchNorm { features, .. } => 2 * features,
            Self::Act { .. } => 0,
        }
    }

    /// Number of leading parameters that are weights (the rest are biases or shifts).
    pub fn weight_count(&self) -> usize {
        match *self {
            Self::Dense { inputs, outputs } => inputs * outputs,
            Self::Conv3x3 { in_ch, out_ch } => out_ch * in_ch * 9,
            Self::BatchNorm { features, .. } => features,
            Self::Act { .. } => 0,
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            Self::Dense { inputs, .. } => inputs,
            Self::Conv3x3 { in_ch, .. } => in_ch * 9,
            _ => 0,
        }
    }

    pub fn is_normalization(&self) -> bool {
        matches!(self, Self::BatchNorm { .. })
    }
}

/// `y[b,o] = Σ_i w[o,i] x[b,i] + bias[o]`.
pub fn dense_forward(w: &[f64], bias: &[f64], x: &[f64], batch: usize, inputs: usize) -> Vec<f64> {
    let outputs = bias.len();
    let mut y = vec![0.0; batch * outputs];
    for b in 0..batch {
        let xr = &x[b * inputs..(b + 1) * inputs];
        for o in 0..outputs {
            let wr = &w[o * inputs..(o + 1) * inputs];
            let mut acc = 0.0;
            for i in 0..inputs {
                acc += wr[i] * xr[i];
            }
            y[b * outputs + o] = acc + bias[o];
        }
    }
    y
}

/// Returns dx; accumulates into `dw` and `db`.
pub fn dense_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    batch: usize,
    inputs: usize,
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let outputs = db.len();
    let mut dx = vec![0.0; batch * inputs];
    for b in 0..batch {
        let xr = &x[b * inputs..(b + 1) * inputs];
        let dxr = &mut dx[b * inputs..(b + 1) * inputs];
        for o in 0..outputs {
            let g = dy[b * outputs + o];
            db[o] += g;
            let wr = &w[o * inputs..(o + 1) * inputs];
            let dwr = &mut dw[o * inputs..(o + 1) * inputs];
            for i in 0..inputs {
                dwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
    dx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub batch: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub h: usize,
    pub w: usize,
}

pub fn conv3x3_forward(w: &[f64], bias: &[f64], x: &[f64], s: ConvShape) -> Vec<f64> {
    let (hh, ww) = (s.h as isize, s.w as isize);
    let plane = s.h * s.w;
    let mut y = vec![0.0; s.batch * s.out_ch * plane];
    for b in 0..s.batch {
        for o in 0..s.out_ch {
            let yo = &mut y[(b * s.out_ch + o) * plane..(b * s.out_ch + o + 1) * plane];
            yo.fill(bias[o]);
            for c in 0..s.in_ch {
                let xc = &x[(b * s.in_ch + c) * plane..(b * s.in_ch + c + 1) * plane];
                let k = &w[(o * s.in_ch + c) * 9..(o * s.in_ch + c + 1) * 9];
                for i in 0..hh {
                    for j in 0..ww {
                        let mut acc = 0.0;
                        for ki in 0..3isize {
                            let r = i + ki - 1;
                            if r < 0 || r >= hh {
                                continue;
                            }
                            for kj in 0..3isize {
                                let q = j + kj - 1;
                                if q < 0 || q >= ww {
                                    continue;
                                }
                                acc += k[(ki * 3 + kj) as usize] * xc[(r * ww + q) as usize];
                            }
                        }
                        yo[(i * ww + j) as usize] += acc;
                    }
                }
            }
        }
    }
    y
}

/// Returns dx; accumulates into `dw` and `db`.
pub fn conv3x3_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    s: ConvShape,
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let (hh, ww) = (s.h as isize, s.w as isize);
    let plane = s.h * s.w;
    let mut dx = vec![0.0; x.len()];
    for b in 0..s.batch {
        for o in 0..s.out_ch {
            let dyo = &dy[(b * s.out_ch + o) * plane..(b * s.out_ch + o + 1) * plane];
            db[o] += dyo.iter().sum::<f64>();
            for c in 0..s.in_ch {
                let base = (b * s.in_ch + c) * plane;
                let kidx = (o * s.in_ch + c) * 9;
                for i in 0..hh {
                    for j in 0..ww {
                        let g = dyo[(i * ww + j) as usize];
                        for ki in 0..3isize {
                            let r = i + ki - 1;
                            if r < 0 || r >= hh {
                                continue;
                            }
                            for kj in 0..3isize {
                                let q = j + kj - 1;
                                if q < 0 || q >= ww {
                                    continue;
                                }
                                let t = kidx + (ki * 3 + kj) as usize;
                                let p = base + (r * ww + q) as usize;
                                dw[t] += g * x[p];
                                dx[p] += g * w[t];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// Batch statistics of a `[batch, features, spatial]` buffer, per feature.
/// Returns (mean, biased variance).
pub fn feature_moments(x: &[f64], batch: usize, features: usize, spatial: usize) -> (Vec<f64>, Vec<f64>) {
    let count = (batch * spatial) as f64;
    let mut mean = vec![0.0; features];
    let mut var = vec![0.0; features];
    for f in 0..features {
        let mut s = 0.0;
        for b in 0..batch {
            let off = (b * features + f) * spatial;
            s += x[off..off + spatial].iter().sum::<f64>();
        }
        let m = s / count;
        let mut v = 0.0;
        for b in 0..batch {
            let off = (b * features + f) * spatial;
            v += x[off..off + spatial].iter().map(|t| (t - m) * (t - m)).sum::<f64>();
        }
        mean[f] = m;
        var[f] = v / count;
    }
    (mean, var)
}

/// `y = γ (x − mean) · inv_std + β`; returns (y, x̂).
pub fn bn_apply(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    mean: &[f64],
    inv_std: &[f64],
    batch: usize,
    spatial: usize,
) -> (Vec<f64>, Vec<f64>) {
    let features = gamma.len();
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    for b in 0..batch {
        for f in 0..features {
            let off = (b * features + f) * spatial;
            for k in off..off + spatial {
                let h = (x[k] - mean[f]) * inv_std[f];
                xhat[k] = h;
                y[k] = gamma[f] * h + beta[f];
            }
        }
    }
    (y, xhat)
}

/// Backward through batch normalization.
///
/// Train mode (statistics depend on the batch):
/// `dx = inv_std/M · (M·dx̂ − Σdx̂ − x̂·Σ(dx̂·x̂))` with `dx̂ = γ·dy`.
/// Eval mode: `dx = γ·inv_std·dy`.
#[allow(clippy::too_many_arguments)]
pub fn bn_backward(
    dy: &[f64],
    xhat: &[f64],
    gamma: &[f64],
    inv_std: &[f64],
    batch: usize,
    spatial: usize,
    train: bool,
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let features = gamma.len();
    let m = (batch * spatial) as f64;
    let mut dx = vec![0.0; dy.len()];
    for f in 0..features {
        let mut sum_dy = 0.0;
        let mut sum_dy_xhat = 0.0;
        for b in 0..batch {
            let off = (b * features + f) * spatial;
            for k in off..off + spatial {
                sum_dy += dy[k];
                sum_dy_xhat += dy[k] * xhat[k];
            }
        }
        dgamma[f] += sum_dy_xhat;
        dbeta[f] += sum_dy;
        let g = gamma[f] * inv_std[f];
        for b in 0..batch {
            let off = (b * features + f) * spatial;
            for k in off..off + spatial {
                dx[k] = if train {
                    g * (dy[k] - sum_dy / m - xhat[k] * sum_dy_xhat / m)
                } else {
                    g * dy[k]
                };
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matches_hand_product() {
        // [[1,2],[3,4]] · [1,1] + [0.5,-0.5]
        let y = dense_forward(&[1.0, 2.0, 3.0, 4.0], &[0.5, -0.5], &[1.0, 1.0], 1, 2);
        assert_eq!(y, vec![3.5, 6.5]);
    }

    #[test]
    fn conv_identity_kernel_copies_input() {
        let mut k = [0.0; 9];
        k[4] = 1.0;
        let x: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let s = ConvShape { batch: 1, in_ch: 1, out_ch: 1, h: 4, w: 4 };
        assert_eq!(conv3x3_forward(&k, &[0.0], &x, s), x);
    }

    #[test]
    fn conv_zero_padding_at_border() {
        let k = [1.0; 9];
        let x = vec![1.0; 9];
        let s = ConvShape { batch: 1, in_ch: 1, out_ch: 1, h: 3, w: 3 };
        let y = conv3x3_forward(&k, &[0.0], &x, s);
        assert_eq!(y, vec![4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn batchnorm_normalizes_each_feature() {
        let x = [1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 6.0, 60.0];
        let (mean, var) = feature_moments(&x, 4, 2, 1);
        let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + 1e-5f64).sqrt()).collect();
        let (y, _) = bn_apply(&x, &[1.0, 1.0], &[0.0, 0.0], &mean, &inv, 4, 1);
        let (m2, v2) = feature_moments(&y, 4, 2, 1);
        for f in 0..2 {
            assert!(m2[f].abs() < 1e-12);
            assert!((v2[f] - 1.0).abs() < 1e-5);
        }
    }
}
