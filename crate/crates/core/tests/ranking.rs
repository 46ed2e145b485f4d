use golu_core::ranking::{cd_report, friedman_statistic, mean_ranks, nemenyi_cd, row_ranks, ScoreMatrix};
use proptest::prelude::*;

fn table2() -> ScoreMatrix {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table2.csv");
    ScoreMatrix::from_csv(&std::fs::read_to_string(path).unwrap(), true).unwrap()
}

#[test]
fn table2_ranks_golu_first_and_gelu_second() {
    let m = table2();
    assert_eq!((m.n(), m.k()), (9, 7));
    let r = cd_report(&m, 0.05).unwrap();
    let order = r.ordering();
    assert_eq!(order[0].0, "GoLU");
    assert!((order[0].1 - 10.0 / 9.0).abs() < 1e-12);
    assert_eq!(order[1].0, "GELU");
    assert!(r.friedman_chi2 > 12.591587, "{}", r.friedman_chi2);
    assert!(r.friedman_p < 0.05);
    assert!((r.mean_ranks.iter().sum::<f64>() - 28.0).abs() < 1e-12);
}

#[test]
fn combined_scores_parse() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/combined.csv");
    let m = ScoreMatrix::from_csv(&std::fs::read_to_string(path).unwrap(), true).unwrap();
    assert_eq!(m.k(), 7);
    assert!(m.n() > 9);
    cd_report(&m, 0.05).unwrap();
}

#[test]
fn cd_matches_hand_formula() {
    for n in [2, 9, 18, 100] {
        let expected = 2.949 * (7.0 * 8.0 / (6.0 * n as f64)).sqrt();
        assert!((nemenyi_cd(7, n, 0.05).unwrap() - expected).abs() < 1e-12);
    }
}

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..8, 2usize..8).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::collection::vec((-20i32..20).prop_map(|v| v as f64 * 0.5), k), n)
    })
}

fn build(scores: Vec<Vec<f64>>, higher: bool) -> ScoreMatrix {
    let rows = (0..scores.len()).map(|i| format!("r{i}")).collect();
    let cols = (0..scores[0].len()).map(|i| format!("c{i}")).collect();
    ScoreMatrix::new(rows, cols, scores, higher).unwrap()
}

proptest! {
    #[test]
    fn rank_sums_are_conserved(scores in matrix_strategy()) {
        let k = scores[0].len() as f64;
        for row in &scores {
            let s: f64 = row_ranks(row, true).iter().sum();
            prop_assert!((s - k * (k + 1.0) / 2.0).abs() < 1e-9);
        }
        let m = build(scores, true);
        let total: f64 = mean_ranks(&m).unwrap().iter().sum();
        prop_assert!((total - k * (k + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_transform_leaves_result_unchanged(scores in matrix_strategy()) {
        let k = scores[0].len();
        let base = cd_report(&build(scores.clone(), true), 0.05);
        let moved: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|v| v.powi(3) + 4.0 * v).collect()).collect();
        let other = cd_report(&build(moved, true), 0.05);
        match (base, other) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => prop_assert!(k > 10),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn orientation_duality(scores in matrix_strategy()) {
        let negated: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let a = build(scores, true);
        let b = build(negated, false);
        prop_assert_eq!(mean_ranks(&a).unwrap(), mean_ranks(&b).unwrap());
        prop_assert_eq!(cd_report(&a, 0.10).unwrap(), cd_report(&b, 0.10).unwrap());
    }

    #[test]
    fn friedman_is_non_negative(scores in matrix_strategy()) {
        let m = build(scores, true);
        prop_assert!(friedman_statistic(&mean_ranks(&m).unwrap(), m.n()) >= -1e-9);
    }
}
