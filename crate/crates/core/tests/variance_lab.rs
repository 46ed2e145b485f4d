use golu_core::variance::{
    interquartile_range, mc_moments, quadrature_moments, squeeze_experiment, standard_normal_variances,
    synthetic_image,
};
use golu_core::{ActivationKind, Rng};

// (mean, variance) of f(x), x ~ N(0, 1), from 30-digit adaptive quadrature
const STANDARD_NORMAL: [(ActivationKind, f64, f64); 8] = [
    (ActivationKind::Relu, 0.39894228040143268, 0.34084505690810466),
    (ActivationKind::LEAKY_RELU, 0.39495285759741835, 0.34406224027563338),
    (ActivationKind::ELU, 0.16052057226655605, 0.61917856337214122),
    (ActivationKind::Gelu, 0.28209479177387814, 0.34564401102435101),
    (ActivationKind::Swish, 0.20662096414190704, 0.31308329699442092),
    (ActivationKind::Mish, 0.24040388837479144, 0.39454816283016359),
    (ActivationKind::Golu, 0.25885612278077703, 0.25262786074980508),
    (ActivationKind::FMish, 0.24040388837479144, 0.26705304825340228),
];

#[test]
fn quadrature_matches_high_precision_fixtures() {
    for (kind, mean, var) in STANDARD_NORMAL {
        let m = quadrature_moments(kind, 0.0, 1.0, 64).unwrap();
        assert!((m.mean - mean).abs() < 1e-10, "{kind} mean {}", m.mean);
        assert!((m.variance - var).abs() < 1e-10, "{kind} variance {}", m.variance);
    }
    let shifted = [
        (ActivationKind::Golu, -2.0, 0.5, -0.0085903994830542646, 0.00027259627781699609),
        (ActivationKind::Golu, 1.0, 0.1, 0.6939452015086081, 0.0089265827233456689),
        (ActivationKind::Gelu, -2.0, 0.5, -0.055627847784225822, 0.0016852804386450087),
        (ActivationKind::Gelu, 1.0, 0.1, 0.84256055914440242, 0.011660806954533572),
    ];
    for (kind, mu, sigma, mean, var) in shifted {
        let m = quadrature_moments(kind, mu, sigma, 64).unwrap();
        assert!((m.mean - mean).abs() < 1e-10, "{kind} {mu} {sigma}");
        assert!((m.variance - var).abs() < 1e-10, "{kind} {mu} {sigma}");
    }
}

#[test]
fn golu_has_the_smallest_standard_normal_variance() {
    let vars = standard_normal_variances(&ActivationKind::ALL).unwrap();
    let golu = vars.iter().find(|(k, _)| *k == ActivationKind::Golu).unwrap().1;
    for (kind, v) in &vars {
        if *kind != ActivationKind::Golu {
            assert!(golu < *v, "{kind}: {v} <= {golu}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    for kind in [ActivationKind::Golu, ActivationKind::Relu, ActivationKind::ELU] {
        let q = quadrature_moments(kind, 0.0, 1.0, 64).unwrap();
        let mc = mc_moments(kind, 0.0, 1.0, 1_000_000, 42).unwrap();
        let se = mc.variance_se.unwrap();
        assert!((mc.variance - q.variance).abs() < 3.0 * se, "{kind}: {} vs {}", mc.variance, q.variance);
    }
}

#[test]
fn squeeze_orderings_on_seeded_images() {
    for seed in 0..3u64 {
        let img = synthetic_image(32, 32, seed);
        let r = squeeze_experiment(&img, 16, seed, &ActivationKind::BENCHMARKED).unwrap();
        let v = |k| r.variance_of(k).unwrap();
        assert!(v(ActivationKind::Golu) < v(ActivationKind::Swish));
        assert!(v(ActivationKind::Swish) < v(ActivationKind::Gelu));
        let max = r.rows.iter().map(|row| row.variance).fold(f64::MIN, f64::max);
        assert_eq!(max, v(ActivationKind::ELU));
    }
}

#[test]
fn golu_outputs_are_more_concentrated_than_gelu() {
    let mut rng = Rng::new(5);
    let xs: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
    let golu: Vec<f64> = xs.iter().map(|&x| ActivationKind::Golu.value(x)).collect();
    let gelu: Vec<f64> = xs.iter().map(|&x| ActivationKind::Gelu.value(x)).collect();
    assert!(interquartile_range(&golu) < interquartile_range(&gelu));
}

#[test]
fn monte_carlo_agrees_with_quadrature_across_the_grid() {
    let mut misses = Vec::new();
    for kind in ActivationKind::ALL {
        for mu in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for sigma in [0.1, 0.5, 1.0] {
                let q = quadrature_moments(kind, mu, sigma, 128).unwrap();
                let mc = mc_moments(kind, mu, sigma, 1_000_000, 7).unwrap();
                // every sample identical: the standard error is zero and says nothing, so the
                // quadrature value must be below what 1e6 draws could ever detect
                let agrees = if mc.variance == 0.0 {
                    q.variance < 1e-20
                } else {
                    (mc.variance - q.variance).abs() <= 3.0 * mc.variance_se.unwrap()
                };
                if !agrees {
                    misses.push((kind, mu, sigma));
                }
            }
        }
    }
    assert!(misses.is_empty(), "{misses:?}");
}
