use serde::{Deserialize, Serialize};

use super::MicroNet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStats {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub included: usize,
    /// Clipping interval the bulk variance was computed on.
    pub interval: (f64, f64),
    /// Number of weights inside `interval`.
    pub bulk_count: usize,
    /// Population variance of the weights inside `interval`.
    pub bulk_variance: f64,
}

impl WeightStats {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        s
    }
}

/// Histogram and bulk variance over dense and conv parameters (weights and biases);
/// batchnorm scale and shift are left out. With no `interval` the bulk variance uses
/// the central-98% interval of the included values.
pub fn weight_stats(net: &MicroNet, bins: usize, interval: Option<(f64, f64)>) -> Result<WeightStats> {
    let params = net.params();
    let values: Vec<f64> = net.non_normalization_indices().into_iter().map(|i| params[i]).collect();
    if values.is_empty() {
        return Err(Error::Usage("network has no non-normalization parameters".into()));
    }
    let interval = match interval {
        Some(iv) => iv,
        None => central_interval(&values, 0.98)?,
    };
    weight_stats_in(&values, bins, interval)
}

/// [`weight_stats`] over an explicit list of values.
pub fn weight_stats_in(values: &[f64], bins: usize, interval: (f64, f64)) -> Result<WeightStats> {
    if bins < 20 {
        return Err(Error::Usage(format!("weight histogram needs at least 20 bins, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::Usage("no weights to summarize".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }

    let (a, b) = interval;
    let inside: Vec<f64> = values.iter().copied().filter(|v| (a..=b).contains(v)).collect();
    let bulk_variance = if inside.is_empty() {
        0.0
    } else {
        let m = inside.iter().sum::<f64>() / inside.len() as f64;
        inside.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / inside.len() as f64
    };
    Ok(WeightStats {
        edges,
        counts,
        included: values.len(),
        interval,
        bulk_count: inside.len(),
        bulk_variance,
    })
}

/// Linear-interpolation percentile on sorted data (position `q·(n−1)`).
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Interval holding the middle `mass` of the values, e.g. `[p1, p99]` for 0.98.
pub fn central_interval(values: &[f64], mass: f64) -> Result<(f64, f64)> {
    if values.is_empty() || !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::Usage("central interval needs values and mass in (0,1]".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - mass) / 2.0;
    Ok((percentile(&sorted, tail), percentile(&sorted, 1.0 - tail)))
}

/// Common part of several intervals. Errors when they do not overlap.
pub fn intersect_intervals(intervals: &[(f64, f64)]) -> Result<(f64, f64)> {
    let lo = intervals.iter().map(|iv| iv.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = intervals.iter().map(|iv| iv.1).fold(f64::INFINITY, f64::min);
    if intervals.is_empty() || lo > hi {
        return Err(Error::Usage("intervals have no common part".into()));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::net::LayerSpec;

    #[test]
    fn hand_example() {
        let full = weight_stats_in(&[-1.0, 0.0, 1.0], 20, (-1.0, 1.0)).unwrap();
        assert!((full.bulk_variance - 2.0 / 3.0).abs() < 1e-15);
        let clipped = weight_stats_in(&[-1.0, 0.0, 1.0], 20, (-0.5, 0.5)).unwrap();
        assert_eq!(clipped.bulk_variance, 0.0);
        assert_eq!(full.counts.iter().sum::<usize>(), 3);
    }

    #[test]
    fn batchnorm_parameters_are_excluded() {
        let layers = vec![
            LayerSpec::conv3x3(1, 2),
            LayerSpec::batchnorm(2),
            LayerSpec::act(ActivationKind::Golu),
            LayerSpec::dense(8, 3),
        ];
        let net = MicroNet::new(layers, 4).unwrap();
        let s = weight_stats(&net, 20, None).unwrap();
        // conv 2·1·9 + 2, dense 8·3 + 3; batchnorm's 4 are not counted
        assert_eq!(s.included, 20 + 27);
        assert_eq!(net.param_count(), 20 + 4 + 27);
    }

    #[test]
    fn needs_non_normalization_parameters() {
        let net = MicroNet::new(vec![LayerSpec::batchnorm(3)], 0).unwrap();
        assert!(matches!(weight_stats(&net, 20, None), Err(Error::Usage(_))));
    }

    #[test]
    fn percentiles_and_intersection() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let (lo, hi) = central_interval(&v, 0.98).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 99.0).abs() < 1e-12);
        assert_eq!(intersect_intervals(&[(0.0, 5.0), (1.0, 7.0)]).unwrap(), (1.0, 5.0));
        assert!(intersect_intervals(&[(0.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn too_few_bins() {
        assert!(weight_stats_in(&[1.0], 10, (0.0, 1.0)).is_err());
    }
}
