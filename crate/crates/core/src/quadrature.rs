//! Gaussian quadrature rules, computed by Newton iteration on the orthogonal polynomials.

use std::f64::consts::PI;

/// Nodes and weights with `∫ w(x) f(x) dx ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Orthonormal Hermite values `(p_n(z), p_{n−1}(z))` from
/// `p_j = z √(2/j) p_{j−1} − √((j−1)/j) p_{j−2}`, `p_0 = π^{-1/4}`, and the power of
/// [`RESCALE`] both were divided by to stay finite.
fn hermite_pair(n: usize, z: f64) -> (f64, f64, i32) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut scale = 0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            scale += 1;
        }
    }
    (p1, p2, scale)
}

const RESCALE: f64 = 1e100;

/// Gauss–Hermite rule for the weight `e^{-x²}` on the real line.
///
/// Positive roots of the orthonormal Hermite polynomial are bracketed by sign changes on
/// a grid finer than the smallest root spacing, then polished by Newton steps kept
/// inside the bracket. Weight `w = 2 / p′_n(x)²` with `p′_n = √(2n) p_{n−1}`; weights
/// below the double range flush to zero.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    let nf = n as f64;
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let h = 0.25 * PI / (2.0 * nf + 1.0).sqrt();
    let sign = |z: f64| hermite_pair(n, z).0.signum();

    let mut positive = Vec::with_capacity(n / 2);
    let mut a = 0.5 * h;
    let mut sa = sign(a);
    while a < upper && positive.len() < n / 2 {
        let b = a + h;
        let sb = sign(b);
        if sa != sb {
            positive.push(polish(n, a, b));
        }
        a = b;
        sa = sb;
    }
    assert_eq!(positive.len(), n / 2, "bracketing missed Hermite roots for n={n}");

    let weight = |z: f64| {
        let (_, p2, scale) = hermite_pair(n, z);
        let pp = (2.0 * nf).sqrt() * p2;
        if scale > 1 {
            0.0
        } else {
            2.0 / (pp * pp) / RESCALE.powi(2 * scale)
        }
    };
    let mut nodes: Vec<f64> = positive.iter().rev().map(|z| -z).collect();
    if n % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(positive.iter().copied());
    let weights = nodes.iter().map(|&z| weight(z.abs())).collect();
    Rule { nodes, weights }
}

fn polish(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let slo = hermite_pair(n, lo).0.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p1, p2, _) = hermite_pair(n, z);
        if p1 == 0.0 {
            return z;
        }
        if p1.signum() == slo {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p1 / ((2.0 * n as f64).sqrt() * p2);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs() {
            return next;
        }
        z = next;
    }
    z
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// `∫_a^b f` by `panels` equal sub-intervals, each with the given Legendre rule.
pub fn composite(rule: &Rule, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}
