mod common;

use common::rng;
use ndarray::{arr2, Array2};
use proptest::prelude::*;
use rand::Rng;
use tfcw_core::bank::{compute_metrics, gamma_accuracies, read_bank, sweep_gamma, write_bank, MemoryBank, Task, GAMMA_GRID};

fn random_rows(seed: u64, n: usize, f: usize) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((n, f), |_| r.random_range(-1.0..1.0))
}

fn unit(row: &[f64]) -> Vec<f64> {
    let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    row.iter().map(|v| v / n).collect()
}

/// Class scores as a sum over bank rows of exp(-gamma (1 - cosine)).
fn logits_oracle(bank: &Array2<f64>, labels: &[usize], classes: usize, query: &[f64], gamma: f64) -> Vec<f64> {
    let q = unit(query);
    let mut out = vec![0.0; classes];
    for (row, &l) in bank.rows().into_iter().zip(labels) {
        let b = unit(&row.to_vec());
        let s: f64 = b.iter().zip(&q).map(|(x, y)| x * y).sum();
        out[l] += (-gamma * (1.0 - s)).exp();
    }
    out
}

#[test]
fn stored_rows_are_normalised() {
    let bank = MemoryBank::build(arr2(&[[3.0, 4.0]]).view(), &[0], 1, 1.0).unwrap();
    assert_eq!(bank.features().row(0).to_vec(), vec![0.6, 0.8]);
}

#[test]
fn orthogonal_pair_closed_form() {
    let bank = MemoryBank::build(arr2(&[[1.0, 0.0], [0.0, 1.0]]).view(), &[0, 1], 2, 1.0).unwrap();
    let p = bank.predict(arr2(&[[1.0, 0.0]]).view()).unwrap();
    assert!((p.logits[[0, 0]] - 1.0).abs() < 1e-12);
    assert!((p.logits[[0, 1]] - (-1.0f64).exp()).abs() < 1e-12);
    assert_eq!(p.labels, vec![0]);
}

#[test]
fn nearest_cluster_wins_for_points() {
    let mut r = rng(6);
    let a = [1.0, 0.2, 0.0];
    let b = [0.0, 0.3, 1.0];
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let c = if i % 2 == 0 { a } else { b };
        feats.extend(c.iter().map(|v| v + r.random_range(-0.05..0.05)));
        labels.push(i % 2);
    }
    let bank = MemoryBank::build(Array2::from_shape_vec((40, 3), feats).unwrap().view(), &labels, 2, 10.0).unwrap();
    let query = arr2(&[[0.9, 0.25, 0.1], [0.1, 0.3, 0.8]]);
    assert_eq!(bank.predict_pointwise(query.view()).unwrap(), vec![0, 1]);
}

#[test]
fn sweep_matches_exhaustive_grid_evaluation() {
    let feats = arr2(&[[1.0, 0.0], [0.95, 0.3], [0.0, 1.0], [0.3, 0.95], [0.3, 0.95]]);
    let labels = [0, 0, 1, 1, 1];
    let val = arr2(&[[0.99, 0.1], [0.1, 0.99], [0.72, 0.69]]);
    let val_labels = [0, 1, 0];
    let grid = [0.5, 5.0, 50.0, 500.0];
    let best = sweep_gamma(feats.view(), &labels, 2, val.view(), &val_labels, &grid).unwrap();

    let mut scored: Vec<(f64, f64)> = grid
        .iter()
        .map(|&g| {
            let hits = val
                .rows()
                .into_iter()
                .zip(&val_labels)
                .filter(|(q, &t)| {
                    let l = logits_oracle(&feats, &labels, 2, &q.to_vec(), g);
                    usize::from(l[1] > l[0]) == t
                })
                .count();
            (hits as f64 / 3.0, g)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(best, scored[0].1);
    assert!(scored[0].0 > scored.last().unwrap().0, "the ambiguous point must make gamma matter");
}

#[test]
fn bank_file_round_trip() {
    let feats = random_rows(8, 12, 5);
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let bank = MemoryBank::build(feats.view(), &labels, 3, 42.0).unwrap();
    let mut buf = Vec::new();
    write_bank(&bank, &mut buf).unwrap();
    let back = read_bank(buf.as_slice()).unwrap();
    assert_eq!(back.labels(), bank.labels());
    assert_eq!(back.gamma(), 42.0);
    for (a, b) in back.features().iter().zip(bank.features().iter()) {
        assert!((a - b).abs() < 1e-7);
    }
    for cut in [0, 7, 20, buf.len() - 1] {
        assert!(read_bank(&buf[..cut]).is_err(), "cut at {cut}");
    }
}

#[test]
fn segmentation_metrics_by_hand() {
    let truth = vec![vec![0, 0, 1, 1]];
    let all_zero = compute_metrics(&[vec![0, 0, 0, 0]], &truth, 2, Task::PartSegmentation).unwrap();
    // part 0: 2/4, part 1: 0/2
    assert!((all_zero.miou.unwrap() - 0.25).abs() < 1e-12);
    let flipped = compute_metrics(&[vec![0, 1, 0, 1]], &truth, 2, Task::PartSegmentation).unwrap();
    assert!((flipped.miou.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((flipped.overall_accuracy - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn logits_match_closed_form(seed in any::<u64>(), m in 1usize..30, f in 1usize..10, classes in 1usize..5, gamma in 0.1f64..200.0) {
        let feats = random_rows(seed, m, f);
        let labels: Vec<usize> = (0..m).map(|i| (i * 7 + seed as usize) % classes).collect();
        let bank = MemoryBank::build(feats.view(), &labels, classes, gamma).unwrap();
        let test = random_rows(seed ^ 1, 4, f);
        let p = bank.predict(test.view()).unwrap();
        for (t, q) in test.rows().into_iter().enumerate() {
            let expect = logits_oracle(&feats, &labels, classes, &q.to_vec(), gamma);
            for (c, e) in expect.iter().enumerate() {
                prop_assert!((p.logits[[t, c]] - e).abs() <= 1e-9 * e.max(1.0));
            }
        }
    }

    #[test]
    fn prediction_ignores_query_scale_and_batching(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let feats = random_rows(seed, 20, 6);
        let labels: Vec<usize> = (0..20).map(|i| i % 4).collect();
        let bank = MemoryBank::build(feats.view(), &labels, 4, 30.0).unwrap();
        let test = random_rows(seed ^ 2, 9, 6);
        let full = bank.predict(test.view()).unwrap();
        let scaled = bank.predict((&test * scale).view()).unwrap();
        prop_assert_eq!(&full.labels, &scaled.labels);
        for t in 0..9 {
            let single = bank.predict(test.slice(ndarray::s![t..t + 1, ..])).unwrap();
            prop_assert_eq!(single.logits.row(0), full.logits.row(t));
        }
    }

    #[test]
    fn logits_grow_with_similarity(seed in any::<u64>(), gamma in 0.1f64..100.0) {
        let feats = random_rows(seed, 1, 5);
        let bank = MemoryBank::build(feats.view(), &[0], 1, gamma).unwrap();
        let test = random_rows(seed ^ 3, 16, 5);
        let p = bank.predict(test.view()).unwrap();
        let b = unit(&feats.row(0).to_vec());
        let mut pairs: Vec<(f64, f64)> = test
            .rows()
            .into_iter()
            .zip(p.logits.column(0))
            .map(|(q, &l)| (unit(&q.to_vec()).iter().zip(&b).map(|(x, y)| x * y).sum(), l))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            prop_assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn gamma_accuracies_follow_single_gamma_predictions(seed in any::<u64>()) {
        let feats = random_rows(seed, 15, 4);
        let labels: Vec<usize> = (0..15).map(|i| i % 3).collect();
        let val = random_rows(seed ^ 4, 10, 4);
        let val_labels: Vec<usize> = (0..10).map(|i| (i * 2) % 3).collect();
        let bank = MemoryBank::build(feats.view(), &labels, 3, 1.0).unwrap();
        let accs = gamma_accuracies(&bank, val.view(), &val_labels, &GAMMA_GRID).unwrap();
        for (&g, acc) in GAMMA_GRID.iter().zip(accs) {
            let p = bank.clone().with_gamma(g).predict(val.view()).unwrap();
            let hits = p.labels.iter().zip(&val_labels).filter(|(a, b)| a == b).count();
            prop_assert_eq!(acc, hits as f64 / 10.0);
        }
    }

    #[test]
    fn metrics_stay_in_the_unit_interval(seed in any::<u64>(), shapes in 1usize..6, parts in 1usize..5) {
        let mut r = rng(seed);
        let truth: Vec<Vec<usize>> = (0..shapes).map(|_| (0..20).map(|_| r.random_range(0..parts)).collect()).collect();
        let pred: Vec<Vec<usize>> = (0..shapes).map(|_| (0..20).map(|_| r.random_range(0..parts)).collect()).collect();
        let m = compute_metrics(&pred, &truth, parts, Task::PartSegmentation).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.overall_accuracy));
        let miou = m.miou.unwrap();
        prop_assert!((0.0..=1.0).contains(&miou));
        let perfect = compute_metrics(&truth, &truth, parts, Task::PartSegmentation).unwrap();
        prop_assert_eq!(perfect.miou, Some(1.0));
        prop_assert_eq!(perfect.overall_accuracy, 1.0);
        for acc in m.per_class_accuracy.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(acc));
        }
    }
}
