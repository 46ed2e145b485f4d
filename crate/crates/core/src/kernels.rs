//! Batched elementwise activation kernels and a throughput benchmark.
//!
//! Three execution paths share one per-element routine, so their outputs are
//! bit-identical:
//!
//! - `Scalar`: a plain loop.
//! - `Vector`: fixed-width lanes of [`LANES`] elements loaded into a local array,
//!   evaluated, and stored back; the tail falls back to the scalar loop.
//! - `Parallel`: the buffer is cut into contiguous chunks of at least 64 KiB, one or
//!   more per worker of the current rayon pool, each processed by the vector path.
//!
//! Every path uses full-precision `exp`. No polynomial shortcut is taken.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

/// Lane width of the vector path.
pub const LANES: usize = 8;

/// Minimum chunk handed to one worker on the parallel path, in bytes.
pub const MIN_CHUNK_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPath {
    Scalar,
    Vector,
    Parallel,
}

impl ExecPath {
    pub const ALL: [Self; 3] = [Self::Scalar, Self::Vector, Self::Parallel];

    pub fn name(self) -> &'static str {
        match self {
            Self::Scalar => "scalar",
            Self::Vector => "vector",
            Self::Parallel => "parallel",
        }
    }
}

impl fmt::Display for ExecPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExecPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(Self::Scalar),
            "vector" => Ok(Self::Vector),
            "parallel" => Ok(Self::Parallel),
            _ => Err(Error::Usage(format!("unknown execution path '{s}'"))),
        }
    }
}

#[inline]
fn forward_one<T: Element>(kind: ActivationKind, x: T) -> T {
    T::from_f64(kind.value(x.to_f64()))
}

#[inline]
fn backward_one<T: Element>(kind: ActivationKind, x: T, g: T) -> T {
    T::from_f64(kind.derivative(x.to_f64()) * g.to_f64())
}

fn scalar_map<T: Element>(kind: ActivationKind, x: &[T], out: &mut [T]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = forward_one(kind, v);
    }
}

fn vector_map<T: Element>(kind: ActivationKind, x: &[T], out: &mut [T]) {
    let mut xs = x.chunks_exact(LANES);
    let mut os = out.chunks_exact_mut(LANES);
    for (xc, oc) in (&mut xs).zip(&mut os) {
        let mut lane = [T::default(); LANES];
        lane.copy_from_slice(xc);
        for v in lane.iter_mut() {
            *v = forward_one(kind, *v);
        }
        oc.copy_from_slice(&lane);
    }
    scalar_map(kind, xs.remainder(), os.into_remainder());
}

fn scalar_zip<T: Element>(kind: ActivationKind, x: &[T], g: &[T], out: &mut [T]) {
    for ((o, &v), &u) in out.iter_mut().zip(x).zip(g) {
        *o = backward_one(kind, v, u);
    }
}

fn vector_zip<T: Element>(kind: ActivationKind, x: &[T], g: &[T], out: &mut [T]) {
    let mut xs = x.chunks_exact(LANES);
    let mut gs = g.chunks_exact(LANES);
    let mut os = out.chunks_exact_mut(LANES);
    for ((xc, gc), oc) in (&mut xs).zip(&mut gs).zip(&mut os) {
        let mut lane = [T::default(); LANES];
        for i in 0..LANES {
            lane[i] = backward_one(kind, xc[i], gc[i]);
        }
        oc.copy_from_slice(&lane);
    }
    scalar_zip(kind, xs.remainder(), gs.remainder(), os.into_remainder());
}

/// Elements per parallel chunk: an even split across workers, never below 64 KiB.
fn parallel_chunk_len<T>(n: usize) -> usize {
    let workers = rayon::current_num_threads().max(1);
    let min = MIN_CHUNK_BYTES / std::mem::size_of::<T>().max(1);
    n.div_ceil(workers).max(min).max(1)
}

fn check_input<T: Element>(x: &Tensor<T>) -> Result<()> {
    if !x.all_finite() {
        return Err(Error::Domain("kernel input contains non-finite values".into()));
    }
    Ok(())
}

/// `out[i] = f(x[i])` on a freshly allocated tensor of the same shape.
pub fn apply_forward<T: Element>(
    kind: ActivationKind,
    x: &Tensor<T>,
    path: ExecPath,
) -> Result<Tensor<T>> {
    check_input(x)?;
    let src = x.data();
    let mut out = vec![T::default(); src.len()];
    match path {
        ExecPath::Scalar => scalar_map(kind, src, &mut out),
        ExecPath::Vector => vector_map(kind, src, &mut out),
        ExecPath::Parallel => {
            let chunk = parallel_chunk_len::<T>(src.len());
            out.par_chunks_mut(chunk)
                .zip(src.par_chunks(chunk))
                .for_each(|(o, s)| vector_map(kind, s, o));
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// `out[i] = f′(x[i]) · upstream[i]`.
pub fn apply_backward<T: Element>(
    kind: ActivationKind,
    x: &Tensor<T>,
    upstream: &Tensor<T>,
    path: ExecPath,
) -> Result<Tensor<T>> {
    if x.shape() != upstream.shape() {
        return Err(Error::Usage(format!(
            "input shape {:?} does not match upstream shape {:?}",
            x.shape(),
            upstream.shape()
        )));
    }
    check_input(x)?;
    let (src, g) = (x.data(), upstream.data());
    let mut out = vec![T::default(); src.len()];
    match path {
        ExecPath::Scalar => scalar_zip(kind, src, g, &mut out),
        ExecPath::Vector => vector_zip(kind, src, g, &mut out),
        ExecPath::Parallel => {
            let chunk = parallel_chunk_len::<T>(src.len());
            out.par_chunks_mut(chunk)
                .zip(src.par_chunks(chunk).zip(g.par_chunks(chunk)))
                .for_each(|(o, (s, u))| vector_zip(kind, s, u, o));
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "single" => Ok(Self::F32),
            "f64" | "double" => Ok(Self::F64),
            _ => Err(Error::Usage(format!("unknown precision '{s}'"))),
        }
    }
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub kind: ActivationKind,
    pub n: usize,
    pub reps: usize,
    pub path: ExecPath,
    pub precision: Precision,
    pub ns_per_elem: f64,
    pub relative_to_relu: f64,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "kind,n,reps,path,ns_per_elem,relative_to_relu";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.kind, self.n, self.reps, self.path, self.ns_per_elem, self.relative_to_relu
        )
    }
}

pub const MIN_BENCH_ELEMENTS: usize = 1_000_000;
pub const MIN_BENCH_REPS: usize = 10;

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2
    }
}

/// Smallest nonzero step observed between consecutive clock reads.
fn timer_resolution() -> Duration {
    let mut best = Duration::from_secs(1);
    for _ in 0..64 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

fn bench_typed<T: Element>(
    kinds: &[ActivationKind],
    n: usize,
    reps: usize,
    path: ExecPath,
    precision: Precision,
    seed: u64,
) -> Result<Vec<BenchReport>> {
    let mut rng = Rng::new(seed);
    let input = Tensor::vector((0..n).map(|_| T::from_f64(4.0 * rng.normal())).collect::<Vec<T>>());

    // ReLU first, then the requested kinds; each round visits all of them in turn.
    let mut roster = vec![ActivationKind::Relu];
    roster.extend(kinds.iter().copied().filter(|k| *k != ActivationKind::Relu));
    let mut times: Vec<Vec<Duration>> = vec![Vec::with_capacity(reps); roster.len()];

    for &kind in &roster {
        std::hint::black_box(apply_forward(kind, &input, path)?);
    }
    for _ in 0..reps {
        for (slot, &kind) in roster.iter().enumerate() {
            let start = Instant::now();
            let out = apply_forward(kind, &input, path)?;
            let elapsed = start.elapsed();
            std::hint::black_box(&out);
            drop(out);
            times[slot].push(elapsed);
        }
    }

    let resolution = timer_resolution();
    let medians: Vec<Duration> = times.into_iter().map(median).collect();
    for (kind, m) in roster.iter().zip(&medians) {
        if *m < resolution * 100 {
            return Err(Error::Measurement(format!(
                "{kind}: median {m:?} is within 100x of the timer resolution {resolution:?}; increase n"
            )));
        }
    }
    let relu = medians[0].as_secs_f64();
    let wanted = |k: &ActivationKind| kinds.contains(k);
    Ok(roster
        .iter()
        .zip(&medians)
        .filter(|(k, _)| wanted(k))
        .map(|(&kind, m)| BenchReport {
            kind,
            n,
            reps,
            path,
            precision,
            ns_per_elem: m.as_secs_f64() * 1e9 / n as f64,
            relative_to_relu: m.as_secs_f64() / relu,
        })
        .collect())
}

/// Median forward-pass time of each kind relative to ReLU, measured round-robin in one process.
pub fn bench_suite(
    kinds: &[ActivationKind],
    n: usize,
    reps: usize,
    path: ExecPath,
    precision: Precision,
    seed: u64,
) -> Result<Vec<BenchReport>> {
    if n < MIN_BENCH_ELEMENTS {
        return Err(Error::Usage(format!("bench needs n >= {MIN_BENCH_ELEMENTS}, got {n}")));
    }
    if reps < MIN_BENCH_REPS {
        return Err(Error::Usage(format!("bench needs reps >= {MIN_BENCH_REPS}, got {reps}")));
    }
    if kinds.is_empty() {
        return Err(Error::Usage("bench needs at least one activation".into()));
    }
    match precision {
        Precision::F32 => bench_typed::<f32>(kinds, n, reps, path, precision, seed),
        Precision::F64 => bench_typed::<f64>(kinds, n, reps, path, precision, seed),
    }
}

/// Benchmark a single kind against ReLU in double precision.
pub fn bench_kernel(kind: ActivationKind, n: usize, reps: usize, path: ExecPath) -> Result<BenchReport> {
    let mut reports = bench_suite(&[kind], n, reps, path, Precision::F64, 0x5eed)?;
    Ok(reports.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn forward_examples() {
        let x = Tensor::vector(vec![0.0f64, 1.0, -30.0]);
        let y = apply_forward(ActivationKind::Golu, &x, ExecPath::Scalar).unwrap();
        assert_eq!(y.data()[0], 0.0);
        assert!((y.data()[1] - 0.692_200_627_555_346_4).abs() < 1e-15);
        assert_eq!(y.data()[2], 0.0);

        let y = apply_forward(ActivationKind::Relu, &Tensor::vector(vec![-1.0, 2.0]), ExecPath::Vector)
            .unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);

        for path in ExecPath::ALL {
            let empty = Tensor::<f64>::new(vec![0], vec![]).unwrap();
            assert!(apply_forward(ActivationKind::Mish, &empty, path).unwrap().is_empty());
        }
    }

    #[test]
    fn backward_examples() {
        let one = Tensor::vector(vec![0.0]);
        let g = apply_backward(ActivationKind::Golu, &one, &Tensor::vector(vec![1.0]), ExecPath::Scalar)
            .unwrap();
        assert!((g.data()[0] - 1.0 / E).abs() < 1e-15);

        let g = apply_backward(ActivationKind::Swish, &one, &Tensor::vector(vec![2.0]), ExecPath::Vector)
            .unwrap();
        assert_eq!(g.data(), &[1.0]);

        let x = Tensor::vector((0..37).map(|i| i as f64 * 0.3 - 5.0).collect());
        let zeros = Tensor::zeros(vec![37]);
        for kind in ActivationKind::ALL {
            let g = apply_backward(kind, &x, &zeros, ExecPath::Parallel).unwrap();
            assert!(g.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let x = Tensor::vector(vec![0.0, 1.0]);
        let u = Tensor::vector(vec![1.0]);
        assert!(matches!(
            apply_backward(ActivationKind::Relu, &x, &u, ExecPath::Scalar),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn non_finite_input_rejected() {
        let x = Tensor::vector(vec![0.0, f64::NAN]);
        assert!(apply_forward(ActivationKind::Relu, &x, ExecPath::Scalar).is_err());
    }

    #[test]
    fn single_precision_paths_agree() {
        let mut rng = Rng::new(11);
        let x = Tensor::vector((0..10_001).map(|_| (3.0 * rng.normal()) as f32).collect::<Vec<f32>>());
        for kind in ActivationKind::ALL {
            let a = apply_forward(kind, &x, ExecPath::Scalar).unwrap();
            for path in [ExecPath::Vector, ExecPath::Parallel] {
                let b = apply_forward(kind, &x, path).unwrap();
                for (p, q) in a.data().iter().zip(b.data()) {
                    let ulps = (p.to_bits() as i64 - q.to_bits() as i64).abs();
                    assert!(ulps <= 2, "{kind} {path}: {p} vs {q}");
                }
            }
        }
    }

    #[test]
    fn chunking_respects_minimum() {
        assert!(parallel_chunk_len::<f64>(10) >= MIN_CHUNK_BYTES / 8);
        assert!(parallel_chunk_len::<f32>(10) >= MIN_CHUNK_BYTES / 4);
    }

    #[test]
    fn bench_preconditions() {
        assert!(matches!(
            bench_kernel(ActivationKind::Golu, 1000, 20, ExecPath::Scalar),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            bench_kernel(ActivationKind::Golu, 1_000_000, 3, ExecPath::Scalar),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn relu_is_self_relative() {
        let r = bench_kernel(ActivationKind::Relu, 1_000_000, 10, ExecPath::Vector).unwrap();
        assert_eq!(r.relative_to_relu, 1.0);
        assert!(r.ns_per_elem > 0.0);
    }
}
