//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfcw_core::geometry::StartRule;
use tfcw_core::Point3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn d2(a: &Point3, b: &Point3) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

fn lex(a: &Point3, b: &Point3) -> Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Greedy max-min sampling by full rescans.
pub fn brute_fps(points: &[Point3], count: usize, start: StartRule) -> Vec<usize> {
    let n = points.len();
    let canonical = matches!(start, StartRule::CanonicalFarthestFromCentroid);
    // `better(i, j)`: is candidate i preferred over j at equal score?
    let better_tie = |i: usize, j: usize| {
        if canonical {
            lex(&points[i], &points[j]).then(i.cmp(&j)) == Ordering::Less
        } else {
            i < j
        }
    };
    let first = match start {
        StartRule::FixedIndex(i) => i,
        StartRule::CanonicalFarthestFromCentroid => {
            let c = [0, 1, 2].map(|a| points.iter().map(|p| p[a]).sum::<f64>() / n as f64);
            let mut best = 0;
            for i in 1..n {
                let (di, db) = (d2(&points[i], &c), d2(&points[best], &c));
                if di > db || (di == db && better_tie(i, best)) {
                    best = i;
                }
            }
            best
        }
    };
    let mut chosen = vec![first];
    while chosen.len() < count {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if chosen.contains(&i) {
                continue;
            }
            let score = chosen.iter().map(|&s| d2(&points[i], &points[s])).fold(f64::INFINITY, f64::min);
            best = match best {
                Some((bs, bi)) if bs > score || (bs == score && better_tie(bi, i)) => Some((bs, bi)),
                _ => Some((score, i)),
            };
        }
        chosen.push(best.expect("points remain").1);
    }
    chosen
}

/// Full sort of the reference set per query.
pub fn brute_knn(query: &[Point3], reference: &[Point3], k: usize) -> Vec<Vec<(usize, f64)>> {
    query
        .iter()
        .map(|q| {
            let mut all: Vec<(f64, usize)> = reference.iter().enumerate().map(|(i, r)| (d2(q, r), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(d, i)| (i, d.sqrt())).collect()
        })
        .collect()
}

/// Naive two-loop pairwise row distances of a D×N matrix.
pub fn brute_row_distances(m: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
    let d = m.nrows();
    ndarray::Array2::from_shape_fn((d, d), |(i, j)| {
        m.row(i)
            .iter()
            .zip(m.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    })
}

pub fn random_points(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| [0; 3].map(|_| r.random_range(-scale..scale)))
        .collect()
}

/// Small integer coordinates: lots of exact distance ties.
pub fn grid_points(r: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|_| [0; 3].map(|_| r.random_range(-3i32..=3) as f64))
        .collect()
}

pub fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn shuffled(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(r);
    v
}
