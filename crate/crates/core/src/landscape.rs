//! Test loss on a two-dimensional slice of weight space around a trained network.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{softmax_cross_entropy, Dataset, MicroNet, Mode};
use crate::rng::Rng;

pub const DEFAULT_GRID: usize = 41;
/// Largest fraction of NaN cells [`surface_stats`] accepts.
pub const MAX_NAN_FRACTION: f64 = 0.05;

/// Two unit-norm directions laid out like [`MicroNet::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directions {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub seed: u64,
}

impl Directions {
    pub fn swapped(&self) -> Self {
        Self { d1: self.d2.clone(), d2: self.d1.clone(), seed: self.seed }
    }
}

fn unit_normal(len: usize, rng: &mut Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

pub fn sample_directions(len: usize, seed: u64) -> Result<Directions> {
    if len == 0 {
        return Err(Error::Usage("direction layout is empty".into()));
    }
    Ok(Directions {
        d1: unit_normal(len, &mut Rng::stream(seed, 0)),
        d2: unit_normal(len, &mut Rng::stream(seed, 1)),
        seed,
    })
}

/// `n` equally spaced points on `[-half_range, half_range]`; a single point sits at 0.
pub fn coefficients(n: usize, half_range: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let last = (n - 1) as f64;
    (0..n).map(|i| half_range * (((2 * i) as f64 - last) / last)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSurface {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `losses[i][j]` at `(alphas[i], betas[j])`.
    pub losses: Vec<Vec<f64>>,
    pub base_loss: f64,
    /// Grid indices whose loss was not finite.
    pub nan_cells: Vec<(usize, usize)>,
    pub half_range: f64,
}

impl LossSurface {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,beta,loss\n");
        for (i, a) in self.alphas.iter().enumerate() {
            for (j, b) in self.betas.iter().enumerate() {
                let _ = writeln!(s, "{a},{b},{}", self.losses[i][j]);
            }
        }
        s
    }

    pub fn cells(&self) -> usize {
        self.alphas.len() * self.betas.len()
    }
}

fn test_loss(net: &MicroNet, data: &Dataset) -> Result<f64> {
    let logits = net.infer(&data.features)?;
    Ok(softmax_cross_entropy(&logits, &data.labels)?.0)
}

/// Evaluates the test loss at `W + (α d1 + β d2)` over a `grid_n × grid_n` grid with
/// `α, β ∈ [-half_range, half_range]`. The network is evaluated in eval mode on private
/// copies; the argument is never modified.
pub fn loss_surface(
    net: &MicroNet,
    testset: &Dataset,
    dirs: &Directions,
    grid_n: usize,
    half_range: f64,
) -> Result<LossSurface> {
    if grid_n == 0 || grid_n % 2 == 0 {
        return Err(Error::Usage(format!("grid size must be odd, got {grid_n}")));
    }
    if !(half_range.is_finite() && half_range > 0.0) {
        return Err(Error::Usage(format!("half range must be positive, got {half_range}")));
    }
    let len = net.param_count();
    if dirs.d1.len() != len || dirs.d2.len() != len {
        return Err(Error::Usage(format!(
            "directions have {}/{} entries, network has {len} parameters",
            dirs.d1.len(),
            dirs.d2.len()
        )));
    }
    if testset.is_empty() {
        return Err(Error::Usage("test set is empty".into()));
    }

    let mut frozen = net.clone();
    frozen.set_mode(Mode::Eval);
    let base_loss = test_loss(&frozen, testset)?;
    let w0 = frozen.params().to_vec();
    let alphas = coefficients(grid_n, half_range);
    let betas = alphas.clone();

    let losses: Vec<Vec<f64>> = alphas
        .par_iter()
        .map(|&a| {
            let mut worker = frozen.clone();
            betas
                .iter()
                .map(|&b| {
                    for (((w, &base), &u), &v) in
                        worker.params_mut().iter_mut().zip(&w0).zip(&dirs.d1).zip(&dirs.d2)
                    {
                        *w = base + (a * u + b * v);
                    }
                    test_loss(&worker, testset).ok().filter(|l| l.is_finite()).unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect();

    let nan_cells = losses
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, l)| l.is_nan()).map(move |(j, _)| (i, j)))
        .collect();
    Ok(LossSurface { alphas, betas, losses, base_loss, nan_cells, half_range })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceStats {
    pub mean: f64,
    /// Population variance over finite cells.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub argmin: (f64, f64),
    pub base_loss: f64,
    pub cells: usize,
    pub nan_cells: usize,
}

pub fn surface_stats(s: &LossSurface) -> Result<SurfaceStats> {
    let total = s.cells();
    let nan = s.losses.iter().flatten().filter(|l| l.is_nan()).count();
    if total == 0 || nan as f64 > MAX_NAN_FRACTION * total as f64 {
        return Err(Error::DegenerateSurface(format!("{nan} of {total} cells are NaN")));
    }
    let finite = || s.losses.iter().flatten().copied().filter(|l| !l.is_nan());
    let count = (total - nan) as f64;
    let mean = finite().sum::<f64>() / count;
    let variance = finite().map(|l| (l - mean) * (l - mean)).sum::<f64>() / count;
    let max = finite().fold(f64::NEG_INFINITY, f64::max);
    let mut min = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    for (i, row) in s.losses.iter().enumerate() {
        for (j, &l) in row.iter().enumerate() {
            if l < min {
                min = l;
                argmin = (s.alphas[i], s.betas[j]);
            }
        }
    }
    Ok(SurfaceStats { mean, variance, min, max, argmin, base_loss: s.base_loss, cells: total, nan_cells: nan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{train, two_moons, TrainConfig};
    use crate::ActivationKind;

    fn surface(losses: Vec<Vec<f64>>) -> LossSurface {
        let n = losses.len();
        LossSurface {
            alphas: coefficients(n, 1.0),
            betas: coefficients(losses[0].len(), 1.0),
            losses,
            base_loss: 0.0,
            nan_cells: Vec::new(),
            half_range: 1.0,
        }
    }

    #[test]
    fn hand_statistics() {
        let s = surface_stats(&surface(vec![vec![0.0, 2.0], vec![2.0, 0.0]])).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 1.0));
        assert_eq!(s.argmin, (-1.0, -1.0));
        let c = surface_stats(&surface(vec![vec![3.5; 3]; 3])).unwrap();
        assert_eq!((c.mean, c.variance, c.min, c.max), (3.5, 0.0, 3.5, 3.5));
    }

    #[test]
    fn too_many_nans_is_degenerate() {
        let mut grid = vec![vec![1.0; 5]; 5];
        grid[0][0] = f64::NAN;
        assert!(surface_stats(&surface(grid.clone())).is_ok());
        grid[1][1] = f64::NAN;
        assert!(matches!(surface_stats(&surface(grid)), Err(Error::DegenerateSurface(_))));
    }

    #[test]
    fn directions_are_unit_and_reproducible() {
        let d = sample_directions(5000, 9).unwrap();
        for v in [&d.d1, &d.d2] {
            assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
        assert_eq!(d, sample_directions(5000, 9).unwrap());
        assert!(matches!(sample_directions(0, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn coefficient_grid() {
        assert_eq!(coefficients(1, 1.0), vec![0.0]);
        assert_eq!(coefficients(5, 1.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(coefficients(41, 1.0)[20], 0.0);
    }

    #[test]
    fn single_cell_surface_is_base_loss() {
        let data = two_moons(100, 0.1, 1).unwrap();
        let (net, _) =
            train(crate::net::mlp_layers(&[2, 8, 2], ActivationKind::Golu).unwrap(), &data, &data, &TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            })
            .unwrap();
        let dirs = sample_directions(net.param_count(), 4).unwrap();
        let s = loss_surface(&net, &data, &dirs, 1, 1.0).unwrap();
        assert_eq!(s.losses, vec![vec![s.base_loss]]);
        assert!(matches!(loss_surface(&net, &data, &dirs, 4, 1.0), Err(Error::Usage(_))));
    }
}
