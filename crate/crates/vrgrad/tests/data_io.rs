mod common;

use common::*;
use proptest::prelude::*;
use vrgrad::data::{
    drop_zero_columns, parse_libsvm, sparsity, to_problem, tune_l1_for_sparsity, write_csv, write_libsvm, Dataset,
    DataError,
};
use vrgrad_core::ProblemError;

#[test]
fn crafted_file_round_trips_byte_for_byte() {
    let d = parse_libsvm(CRAFTED_LIBSVM.as_bytes()).unwrap();
    assert_eq!(d.len(), 5);
    assert_eq!(d.n_features, 4);
    let mut out = Vec::new();
    write_libsvm(&d, &mut out).unwrap();
    assert_eq!(String::from_utf8(out.clone()).unwrap(), CRAFTED_LIBSVM);
    assert_eq!(parse_libsvm(out.as_slice()).unwrap(), d);
}

#[test]
fn csv_export_has_header_and_one_row_per_example() {
    let d = parse_libsvm(CRAFTED_LIBSVM.as_bytes()).unwrap();
    let mut out = Vec::new();
    write_csv(&d, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,idx:val;idx:val");
    assert_eq!(lines[1], "1,1:0.5;3:2");
    assert_eq!(lines.len(), 6);
}

#[test]
fn dropping_the_empty_column_restores_strong_convexity() {
    let d = parse_libsvm(ZERO_COLUMN_LIBSVM.as_bytes()).unwrap();
    assert!(matches!(to_problem(&d, 0.0), Err(DataError::Problem(ProblemError::NotStronglyConvex { .. }))));
    let (kept, dropped) = drop_zero_columns(&d);
    assert_eq!(dropped, vec![2]);
    assert_eq!(kept.n_features, 2);
    let p = to_problem(&kept, 0.0).unwrap();
    // (2/n)AᵀA on the two surviving columns
    let cols: Vec<[f64; 2]> = vec![[1.0, 2.0], [0.5, -1.0], [-1.5, 0.25]];
    let s = 2.0 / cols.len() as f64;
    let g11 = s * cols.iter().map(|r| r[0] * r[0]).sum::<f64>();
    let g12 = s * cols.iter().map(|r| r[0] * r[1]).sum::<f64>();
    let g22 = s * cols.iter().map(|r| r[1] * r[1]).sum::<f64>();
    let oracle = min_eigenvalue_2x2(g11, g12, g22);
    assert!(oracle > 0.0);
    assert!((p.mu() - oracle).abs() <= 1e-12 * oracle, "{} vs {oracle}", p.mu());
    for j in 1..=kept.n_features as u32 {
        assert!(kept.rows.iter().flatten().any(|(k, v)| *k == j && *v != 0.0));
    }
}

fn check_tuning(n: usize, dim: usize, seed: u64) {
    let d = gaussian_instance(n, dim, seed);
    let t = tune_l1_for_sparsity(&d.sparse_rows(), &d.labels, dim, (0.15, 0.20)).unwrap();
    assert!(t.sparsity >= 0.15 && t.sparsity <= 0.20 + 1.0 / dim as f64, "{t:?}");
    // the reported solution is the lasso optimum for the reported ξ
    let p = to_problem(&d, t.xi).unwrap();
    let again = p.proximal_gradient(&vec![0.0; dim], 1e-10, 1_000_000).x;
    assert!((sparsity(&again) - t.sparsity).abs() < 1e-12);
}

#[test]
fn tuning_hits_the_band_on_10_by_5() {
    check_tuning(10, 5, 7);
}

#[test]
fn tuning_hits_the_band_on_50_by_10() {
    check_tuning(50, 10, 11);
}

fn dataset() -> impl Strategy<Value = Dataset> {
    let row = prop::collection::btree_map(1u32..40, prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0)], 0..6)
        .prop_map(|m| m.into_iter().collect::<Vec<_>>());
    prop::collection::vec((row, -10.0..10.0f64), 1..8).prop_map(|rows| {
        let n_features = rows.iter().flat_map(|(r, _)| r.iter().map(|(j, _)| *j as usize)).max().unwrap_or(0);
        let (rows, labels) = rows.into_iter().unzip();
        Dataset { rows, labels, n_features }
    })
}

proptest! {
    #[test]
    fn parser_accepts_what_the_writer_emits(d in dataset()) {
        let mut out = Vec::new();
        write_libsvm(&d, &mut out).unwrap();
        let back = parse_libsvm(out.as_slice()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn dropped_data_has_no_empty_column(d in dataset()) {
        let (kept, dropped) = drop_zero_columns(&d);
        prop_assert_eq!(kept.n_features + dropped.len(), d.n_features);
        for j in 1..=kept.n_features as u32 {
            prop_assert!(kept.rows.iter().flatten().any(|(k, v)| *k == j && *v != 0.0));
        }
    }
}
