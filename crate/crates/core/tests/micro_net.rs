use golu_core::net::{grad_check, mlp_layers, train, two_moons, LayerSpec, MicroNet, TrainConfig};
use golu_core::{ActivationKind, Rng, Tensor};

fn normal_batch(shape: Vec<usize>, seed: u64) -> Tensor {
    let n = shape.iter().product();
    let mut rng = Rng::new(seed);
    Tensor::new(shape, (0..n).map(|_| rng.normal()).collect()).unwrap()
}

fn architectures(kind: ActivationKind) -> Vec<(Vec<LayerSpec>, Vec<usize>)> {
    vec![
        (
            vec![
                LayerSpec::dense(4, 6),
                LayerSpec::act(kind),
                LayerSpec::dense(6, 5),
                LayerSpec::act(kind),
                LayerSpec::dense(5, 3),
            ],
            vec![6, 4],
        ),
        (
            vec![
                LayerSpec::conv3x3(2, 3),
                LayerSpec::batchnorm(3),
                LayerSpec::act(kind),
                LayerSpec::dense(3 * 4 * 4, 3),
            ],
            vec![6, 2, 4, 4],
        ),
        (
            vec![LayerSpec::conv3x3(2, 3), LayerSpec::act(kind), LayerSpec::conv3x3(3, 1)],
            vec![6, 2, 3, 3],
        ),
    ]
}

#[test]
fn gradients_match_finite_differences_for_every_kind() {
    for kind in ActivationKind::ALL {
        for (arch, (layers, shape)) in architectures(kind).into_iter().enumerate() {
            let net = MicroNet::new(layers, 100 + arch as u64).unwrap();
            let x = normal_batch(shape, 7 + arch as u64);
            let targets = [0, 1, 2, 1, 0, 2];
            let r = grad_check(&net, &x, &targets, 1e-5, 0).unwrap();
            assert!(r.checked > 0);
            assert!(r.max_rel_err < 1e-5, "{kind} arch {arch}: {r:?}");
        }
    }
}

#[test]
fn two_moons_reaches_95_percent_for_every_kind() {
    let data = two_moons(500, 0.1, 42).unwrap();
    let held_out = two_moons(500, 0.1, 43).unwrap();
    let cfg = TrainConfig::default();
    for kind in ActivationKind::ALL {
        let (_, curve) = train(mlp_layers(&[2, 32, 32, 2], kind).unwrap(), &data, &held_out, &cfg).unwrap();
        let best = curve.iter().map(|r| r.accuracy).fold(0.0, f64::max);
        assert!(best >= 0.95, "{kind}: best train accuracy {best}");
    }
}

#[test]
fn training_is_bitwise_reproducible() {
    let data = two_moons(200, 0.1, 42).unwrap();
    let cfg = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let layers = mlp_layers(&[2, 16, 2], ActivationKind::Golu).unwrap();
    let (a, ca) = train(layers.clone(), &data, &data, &cfg).unwrap();
    let (b, cb) = train(layers, &data, &data, &cfg).unwrap();
    let bits = |n: &MicroNet| n.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(ca, cb);
}
