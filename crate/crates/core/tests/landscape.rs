use golu_core::landscape::{loss_surface, sample_directions, surface_stats, Directions};
use golu_core::net::{mlp_layers, train, two_moons, Dataset, TrainConfig};
use golu_core::{ActivationKind, MicroNet};

fn trained(kind: ActivationKind) -> (MicroNet, Dataset) {
    let data = two_moons(300, 0.1, 42).unwrap();
    let test = two_moons(200, 0.1, 43).unwrap();
    let cfg = TrainConfig { epochs: 60, ..TrainConfig::default() };
    let (net, _) = train(mlp_layers(&[2, 16, 16, 2], kind).unwrap(), &data, &test, &cfg).unwrap();
    (net, test)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn protocol_invariants() {
    let (net, test) = trained(ActivationKind::Golu);
    let before = bits(net.params());
    let dirs = sample_directions(net.param_count(), 7).unwrap();
    let s = loss_surface(&net, &test, &dirs, 11, 1.0).unwrap();
    assert_eq!(bits(net.params()), before);
    assert_eq!(s.losses[5][5].to_bits(), s.base_loss.to_bits());

    let t = loss_surface(&net, &test, &dirs.swapped(), 11, 1.0).unwrap();
    for i in 0..11 {
        for j in 0..11 {
            assert_eq!(s.losses[i][j].to_bits(), t.losses[j][i].to_bits());
        }
    }

    assert!(loss_surface(&net, &test, &dirs, 6, 0.5).is_err());
    let half = loss_surface(&net, &test, &dirs, 5, 0.5).unwrap();
    let wide = loss_surface(&net, &test, &dirs, 9, 1.0).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(half.losses[i][j].to_bits(), wide.losses[i + 2][j + 2].to_bits());
        }
    }

    let stats = surface_stats(&s).unwrap();
    assert!(stats.min <= s.base_loss && s.base_loss <= stats.max);
}

#[test]
fn random_directions_are_nearly_orthogonal() {
    let dim = 4000;
    for seed in 0..20 {
        let d = sample_directions(dim, seed).unwrap();
        let dot: f64 = d.d1.iter().zip(&d.d2).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 3.0 / (dim as f64).sqrt(), "seed {seed}: {dot}");
    }
}

#[test]
fn overflowing_cells_are_flagged() {
    let (net, test) = trained(ActivationKind::Relu);
    let huge = Directions {
        d1: vec![f64::MAX; net.param_count()],
        d2: vec![0.0; net.param_count()],
        seed: 0,
    };
    let s = loss_surface(&net, &test, &huge, 3, 1.0).unwrap();
    assert_eq!(s.losses[1][1], s.base_loss);
    assert_eq!(s.nan_cells.len(), 6);
    assert!(surface_stats(&s).is_err());
}
