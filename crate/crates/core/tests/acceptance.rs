//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

mod common;

use std::panic;
use std::time::Instant;

use common::*;
use ndarray::{Array2, Array3};
use rand::Rng;
use tfcw_core::alloc::{self, TrackingAllocator};
use tfcw_core::bank::{build_bank, GAMMA_GRID};
use tfcw_core::descriptors::{pcsd_geo, pcsd_xyz, with_estimated_normals, DescriptorKind};
use tfcw_core::experiment::{run_classify, run_segment, segmentation_features, select_gamma_segment};
use tfcw_core::geometry::{apply_rotation, farthest_point_sample_points, knn, random_rotation, RotationMode, StartRule};
use tfcw_core::io::Split;
use tfcw_core::pipeline::{encode_classification, interpolation_weights, propagate_features, PipelineConfig};
use tfcw_core::robustness::{stability_study, volume_scaling_run, STABILITY_BATCH_SIZES};
use tfcw_core::tfcw::{
    empowered_block, gram_form, pairwise_dim_distance, tfcw_empowered, tfcw_global, united_block, GramVariant,
    Pooling, TfcwParams,
};
use tfcw_core::{synthetic, PointCloud};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn coords_matrix(points: &[[f64; 3]]) -> Array2<f64> {
    Array2::from_shape_fn((3, points.len()), |(a, i)| points[i][a])
}

fn grouped_xyz(cloud: &PointCloud, k: usize) -> Array3<f64> {
    let nb = knn(cloud.points(), cloud.points(), k).unwrap();
    pcsd_xyz(cloud.points(), cloud.points(), &nb).unwrap().values
}

fn gram_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = r.random_range(1..=16);
        let n = r.random_range(1..=256);
        let m = Array2::from_shape_fn((d, n), |_| r.random_range(-10.0..=10.0));
        let direct = pairwise_dim_distance(m.view()).unwrap();
        let gram = gram_form(m.view());
        for (a, b) in direct.iter().zip(gram.iter()) {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst < 1e-6 && secs < 5.0,
        format!("max relative deviation {worst:.2e} over 1000 matrices, {secs:.2}s"),
    )
}

fn permutation_invariance() -> Outcome {
    let mut r = rng(2);
    let cfg = PipelineConfig::default().with_uniform_k(16);
    let (mut block_dev, mut pipe_dev): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let n = r.random_range(32..=384);
        let cloud = if i % 2 == 0 {
            PointCloud::new(random_points(&mut r, n, 1.0)).unwrap()
        } else {
            synthetic::random_blob(n, i)
        };
        let perm = shuffled(&mut r, n);
        let moved = cloud.permuted(&perm);
        let (g0, g1) = (grouped_xyz(&cloud, 12), grouped_xyz(&moved, 12));
        for pool in [Pooling::Max, Pooling::Avg] {
            let a = tfcw_global(g0.view(), 1.0, pool);
            let b = tfcw_global(g1.view(), 1.0, pool);
            block_dev = block_dev.max(max_abs_diff(&a, &b));
        }
        let fa = encode_classification(&cloud, &cfg).unwrap();
        let fb = encode_classification(&moved, &cfg).unwrap();
        pipe_dev = pipe_dev.max(max_abs_diff(&fa, &fb));
    }
    outcome(
        block_dev <= 1e-9 && pipe_dev < 1e-6,
        format!("global block deviation {block_dev:.2e}, pipeline deviation {pipe_dev:.2e} over 200 clouds"),
    )
}

fn rotation_variance() -> Outcome {
    let mut changed = 0;
    let mut smallest = f64::INFINITY;
    let mut tried = 0;
    let mut seed = 0u64;
    while tried < 100 {
        let rot = random_rotation(10_000 + seed, RotationMode::SO3);
        seed += 1;
        if rot.is_identity() {
            continue;
        }
        let cloud = synthetic::random_blob(256, tried as u64);
        let before = gram_form(coords_matrix(cloud.points()).view());
        let after = gram_form(coords_matrix(apply_rotation(&cloud, &rot).points()).view());
        let dev = max_abs_diff(&before, &after);
        smallest = smallest.min(dev);
        if dev > 1e-3 {
            changed += 1;
        }
        tried += 1;
    }
    outcome(
        changed >= 99,
        format!("{changed}/100 rotations changed the Gram form by > 1e-3 (smallest change {smallest:.3e})"),
    )
}

fn risp_rotation_invariance() -> Outcome {
    let mut cfg = PipelineConfig::default().with_uniform_k(16);
    cfg.descriptor = DescriptorKind::Risp;
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let base = match i % 3 {
            0 => synthetic::random_blob(512, i),
            1 => synthetic::capped_cylinder(512, i),
            _ => synthetic::sphere_cube_dataset(1, 512, i, Split::Test).clouds[1].clone(),
        };
        let cloud = with_estimated_normals(&base, cfg.k_normal).unwrap();
        let rotated = apply_rotation(&cloud, &random_rotation(500 + i, RotationMode::SO3));
        let a = encode_classification(&cloud, &cfg).unwrap();
        let b = encode_classification(&rotated, &cfg).unwrap();
        worst = worst.max(max_abs_diff(&a, &b));
    }
    outcome(worst < 1e-5, format!("max feature deviation {worst:.2e} over 50 rotated clouds"))
}

fn decoder_soundness() -> Outcome {
    let mut r = rng(5);
    let (mut sum_dev, mut const_dev, mut hit_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut coincident = 0;
    for _ in 0..500 {
        let s = r.random_range(3..=64);
        let t = r.random_range(1..=64);
        let k = r.random_range(1..=s.min(6));
        let src = random_points(&mut r, s, 2.0);
        let mut tgt = random_points(&mut r, t, 2.5);
        let mut hits = Vec::new();
        for ti in 0..t {
            if r.random_bool(0.3) {
                hits.push((ti, r.random_range(0..s)));
            }
        }
        for &(ti, si) in &hits {
            tgt[ti] = src[si];
        }
        coincident += hits.len();

        for row in interpolation_weights(&src, &tgt, k).unwrap() {
            sum_dev = sum_dev.max((row.iter().map(|w| w.1).sum::<f64>() - 1.0).abs());
        }
        let c: f64 = r.random_range(-5.0..5.0);
        let constant = Array2::from_elem((s, 4), c);
        let out = propagate_features(&src, constant.view(), &tgt, k).unwrap();
        const_dev = const_dev.max(out.iter().map(|v| (v - c).abs()).fold(0.0, f64::max));

        let feats = Array2::from_shape_fn((s, 5), |_| r.random_range(-1.0..1.0));
        let out = propagate_features(&src, feats.view(), &tgt, k).unwrap();
        for &(ti, si) in &hits {
            hit_dev = hit_dev.max(max_abs_diff(out.row(ti), feats.row(si)));
        }
    }
    outcome(
        sum_dev <= 1e-9 && const_dev <= 1e-9 && hit_dev <= 1e-6,
        format!(
            "weight-sum {sum_dev:.1e}, constant {const_dev:.1e}, coincident {hit_dev:.1e} ({coincident} coincident targets) over 500 instances"
        ),
    )
}

fn sampling_oracles() -> Outcome {
    let mut r = rng(6);
    let mut mismatches = 0;
    for i in 0..500 {
        let n = r.random_range(1..=128);
        let pts = if i % 2 == 0 { random_points(&mut r, n, 1.0) } else { grid_points(&mut r, n) };
        let count = r.random_range(1..=n);
        let start = if i % 4 < 2 {
            StartRule::FixedIndex(r.random_range(0..n))
        } else {
            StartRule::CanonicalFarthestFromCentroid
        };
        if farthest_point_sample_points(&pts, count, start).unwrap() != brute_fps(&pts, count, start) {
            mismatches += 1;
        }
        let q = if i % 3 == 0 {
            pts.clone()
        } else {
            let m = r.random_range(1..=32);
            random_points(&mut r, m, 1.5)
        };
        let k = r.random_range(1..=n);
        let fast = knn(&q, &pts, k).unwrap();
        let slow = brute_knn(&q, &pts, k);
        for (qi, row) in slow.iter().enumerate() {
            let idx: Vec<usize> = row.iter().map(|p| p.0).collect();
            let dist: Vec<f64> = row.iter().map(|p| p.1).collect();
            if fast.indices.row(qi).to_vec() != idx || fast.distances.row(qi).to_vec() != dist {
                mismatches += 1;
                break;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatching instances out of 500"))
}

fn shuffle_stability() -> Outcome {
    let train = synthetic::sphere_cube_dataset(16, 512, 70, Split::Train);
    let test = synthetic::sphere_cube_dataset(16, 512, 71, Split::Test);
    let cfg = PipelineConfig::default().with_uniform_k(16);
    let report = stability_study(&train, &test, &STABILITY_BATCH_SIZES, &cfg, 100.0).unwrap();
    let accs: Vec<f64> = report.rows.iter().map(|r| r.accuracy.unwrap()).collect();
    let same = accs.iter().all(|&a| a == accs[0]);
    let dev = report.max_deviation();
    outcome(
        dev == 0.0 && same && report.rows.len() == 12,
        format!("{} configurations, max deviation {dev:e}, accuracy {:?}", report.rows.len(), accs[0]),
    )
}

fn synthetic_end_to_end() -> Outcome {
    let t0 = Instant::now();
    let cfg = PipelineConfig::default();
    let train = synthetic::sphere_cube_dataset(50, 1024, 80, Split::Train);
    let test = synthetic::sphere_cube_dataset(50, 1024, 81, Split::Test);
    let cls = run_classify(&train, &test, &cfg, 100.0).unwrap();

    let strain = synthetic::capped_cylinder_dataset(4, 1024, 82, Split::Train);
    let sval = synthetic::capped_cylinder_dataset(4, 1024, 83, Split::Val);
    let stest = synthetic::capped_cylinder_dataset(8, 1024, 84, Split::Test);
    let gamma = select_gamma_segment(&strain, &sval, &cfg, &GAMMA_GRID).unwrap();
    let seg = run_segment(&strain, &stest, &cfg, gamma).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let acc = cls.metrics.overall_accuracy;
    let miou = seg.metrics.miou.unwrap();
    outcome(
        acc >= 0.90 && miou >= 0.75 && secs < 60.0,
        format!("sphere/cube accuracy {acc:.3}, part mIoU {miou:.3} (gamma {gamma} picked on a validation split), {secs:.1}s"),
    )
}

fn scaling() -> Outcome {
    let cfg = PipelineConfig::default();
    let report = volume_scaling_run(1024, 1024, 65536, 1, &cfg).unwrap();
    let slope = report.time_slope().unwrap_or(f64::NAN);
    let mut worst_ratio: f64 = 0.0;
    for (i, &n) in report.point_counts.iter().enumerate() {
        if n < 8192 {
            continue;
        }
        if let Some(j) = report.point_counts.iter().position(|&m| m == 2 * n) {
            let ratio = report.peak_memory[j] as f64 / report.peak_memory[i].max(1) as f64;
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    let finished = report.allocation_failure_at.is_none() && report.point_counts.last() == Some(&65536);
    let total: f64 = report.wall_times.iter().sum();
    outcome(
        finished && (0.8..=1.3).contains(&slope) && alloc::is_active() && worst_ratio <= 2.5,
        format!(
            "{} sizes up to {} points, log-log slope {slope:.3}, worst memory ratio at 2N {worst_ratio:.2}, peak {:.1} MiB, {total:.1}s",
            report.point_counts.len(),
            report.point_counts.last().unwrap_or(&0),
            *report.peak_memory.last().unwrap_or(&0) as f64 / (1 << 20) as f64
        ),
    )
}

fn all_finite<'a>(v: impl IntoIterator<Item = &'a f64>) -> bool {
    v.into_iter().all(|x| x.is_finite())
}

fn degeneracies() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let constant = Array3::from_elem((10, 6, 14), 3.7);
    for pool in [Pooling::Max, Pooling::Avg] {
        check("constant global", all_finite(&tfcw_global(constant.view(), 1.0, pool)));
    }
    check("constant empowered", all_finite(&tfcw_empowered(constant.view(), 1.0, 1e-5)));
    check("constant united", all_finite(&united_block(constant.view(), 1.0)));
    check("constant empowered block", all_finite(&empowered_block(constant.view(), 1.0)));
    for variant in GramVariant::ALL {
        let p = TfcwParams { variant, ..TfcwParams::default() };
        check(
            "constant gram variant",
            all_finite(&tfcw_core::tfcw::tfcw_global_with(constant.view(), &p)),
        );
    }

    let line: Vec<[f64; 3]> = (0..64).map(|i| [i as f64 * 0.1, 2.0 * i as f64 * 0.1, 0.5]).collect();
    let line = PointCloud::new(line).unwrap();
    check("collinear geo", pcsd_geo(&line).unwrap().all_finite());

    let src = random_points(&mut rng(10), 8, 1.0);
    let dup_src: Vec<[f64; 3]> = src.iter().chain(src.iter()).copied().collect();
    let feats = Array2::from_shape_fn((16, 3), |(i, j)| (i * 3 + j) as f64);
    let out = propagate_features(&dup_src, feats.view(), &src, 3).unwrap();
    check("zero-distance interpolation", all_finite(&out));

    let bank = build_bank(Array2::eye(3).view(), &[0, 1, 2], 3, 1000.0).unwrap();
    check("zero query", all_finite(&bank.predict(Array2::zeros((2, 3)).view()).unwrap().logits));

    let tiny = synthetic::random_blob(16, 3);
    let same = PointCloud::new(vec![[0.25, -0.5, 1.0]; 16]).unwrap();
    let mut fallbacks = 0;
    for kind in [DescriptorKind::Xyz, DescriptorKind::Geo, DescriptorKind::Risp] {
        let mut cfg = PipelineConfig::default().with_uniform_k(8);
        cfg.descriptor = kind;
        for cloud in [&tiny, &same, &line] {
            match tfcw_core::pipeline::encode_classification_detailed(cloud, &cfg) {
                Ok(f) => {
                    fallbacks += f.degeneracies;
                    check("degenerate classification", all_finite(&f.vector));
                }
                Err(e) => check(&format!("classification error {e}"), false),
            }
            match segmentation_features(cloud, &cfg) {
                Ok(f) => check("degenerate segmentation", all_finite(&f)),
                Err(e) => check(&format!("segmentation error {e}"), false),
            }
        }
    }
    let ok = failures.is_empty();
    outcome(
        ok,
        if ok {
            format!("all outputs finite; {fallbacks} padded or zero-length descriptor entries handled")
        } else {
            format!("non-finite or failing cases: {failures:?}")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gram-form equivalence", gram_equivalence),
        ("permutation invariance", permutation_invariance),
        ("rotation variance of raw coordinates", rotation_variance),
        ("rotation invariance with RISP", risp_rotation_invariance),
        ("decoder soundness", decoder_soundness),
        ("FPS and k-NN match brute force", sampling_oracles),
        ("batch/shuffle stability", shuffle_stability),
        ("synthetic classification and segmentation", synthetic_end_to_end),
        ("volume scaling", scaling),
        ("degeneracy suite", degeneracies),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !res.pass {
            failed += 1;
        }
        println!(
            "{} {:>2}. {name}: {} [{:.1}s]",
            if res.pass { "PASS" } else { "FAIL" },
            i + 1,
            res.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
