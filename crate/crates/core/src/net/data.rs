//! Synthetic two-dimensional classification sets.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `[n, features]`.
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.shape().len() != 2 || features.shape()[0] != labels.len() {
            return Err(Error::Usage(format!(
                "features {:?} do not match {} labels",
                features.shape(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Usage(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self { features, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    /// Rows `idx` as a `[idx.len(), dim]` batch and their labels.
    pub fn batch(&self, idx: &[usize]) -> (Tensor, Vec<usize>) {
        let d = self.dim();
        let src = self.features.data();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let t = Tensor::new(vec![idx.len(), d], data).expect("row gather keeps the shape");
        (t, idx.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s: String = (0..d).map(|j| format!("x{j},")).collect();
        s.push_str("label\n");
        for (row, label) in self.features.data().chunks(d).zip(&self.labels) {
            for v in row {
                s.push_str(&format!("{v},"));
            }
            s.push_str(&format!("{label}\n"));
        }
        s
    }
}

fn linspace(n: usize, hi: f64) -> impl Iterator<Item = f64> {
    let step = if n > 1 { hi / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| i as f64 * step)
}

fn assemble(mut pts: Vec<([f64; 2], usize)>, noise: f64, rng: &mut Rng) -> Result<Dataset> {
    rng.shuffle(&mut pts);
    let mut data = Vec::with_capacity(pts.len() * 2);
    let mut labels = Vec::with_capacity(pts.len());
    for (p, l) in pts {
        data.push(p[0] + noise * rng.normal());
        data.push(p[1] + noise * rng.normal());
        labels.push(l);
    }
    Dataset::new(Tensor::new(vec![labels.len(), 2], data)?, labels, 2)
}

/// Two interleaving half circles. The outer moon (label 0) is `(cos t, sin t)` and the
/// inner moon (label 1) is `(1 − cos t, ½ − sin t)` for `t ∈ [0, π]`, plus Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || !(noise >= 0.0) {
        return Err(Error::Usage("two_moons needs n >= 2 and noise >= 0".into()));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let mut pts: Vec<([f64; 2], usize)> = linspace(n_outer, PI).map(|t| ([t.cos(), t.sin()], 0)).collect();
    pts.extend(linspace(n_inner, PI).map(|t| ([1.0 - t.cos(), 0.5 - t.sin()], 1)));
    assemble(pts, noise, &mut Rng::stream(seed, 1))
}

/// Two concentric circles: radius 1 (label 0) and radius `factor` (label 1).
pub fn rings(n: usize, noise: f64, factor: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || !(noise >= 0.0) || !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Usage("rings needs n >= 2, noise >= 0 and factor in (0,1)".into()));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let ring = |m: usize, r: f64, label: usize| {
        let step = 2.0 * PI / m as f64;
        (0..m).map(move |i| {
            let t = i as f64 * step;
            ([r * t.cos(), r * t.sin()], label)
        })
    };
    let mut pts: Vec<_> = ring(n_outer, 1.0, 0).collect();
    pts.extend(ring(n_inner, factor, 1));
    assemble(pts, noise, &mut Rng::stream(seed, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moons_shape_and_balance() {
        let d = two_moons(501, 0.1, 42).unwrap();
        assert_eq!(d.features.shape(), &[501, 2]);
        assert_eq!(d.labels.iter().filter(|&&l| l == 0).count(), 250);
        assert_eq!(d, two_moons(501, 0.1, 42).unwrap());
        assert_ne!(d, two_moons(501, 0.1, 43).unwrap());
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let d = two_moons(100, 0.0, 1).unwrap();
        for (p, &l) in d.features.data().chunks(2).zip(&d.labels) {
            let (cx, cy) = if l == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let r = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rings_radii() {
        let d = rings(200, 0.0, 0.5, 3).unwrap();
        for (p, &l) in d.features.data().chunks(2).zip(&d.labels) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - if l == 0 { 1.0 } else { 0.5 }).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_gathers_rows() {
        let d = two_moons(10, 0.0, 0).unwrap();
        let (x, y) = d.batch(&[3, 7]);
        assert_eq!(x.data()[..2], d.features.data()[6..8]);
        assert_eq!(y, vec![d.labels[3], d.labels[7]]);
    }
}
