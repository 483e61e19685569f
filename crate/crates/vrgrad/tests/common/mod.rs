//! Crafted instances shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vrgrad::data::Dataset;

/// Five lines in the writer's canonical form, including a label-only row.
pub const CRAFTED_LIBSVM: &str = "1 1:0.5 3:2\n-1 2:1.25 4:-7\n0.5 1:-3 2:4e-5 3:1e-20\n-2\n3 4:123456.5\n";

/// Three columns, the middle one never used: singular Gram matrix until it is dropped.
pub const ZERO_COLUMN_LIBSVM: &str = "1 1:1 3:2\n-1 1:0.5 3:-1\n2 1:-1.5 3:0.25\n";

/// Dense Gaussian design with targets `A·w + noise`, deterministic in `seed`.
pub fn gaussian_instance(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let w: Vec<f64> = (0..dim).map(|j| if j % 3 == 0 { 0.1 * draw() } else { draw() }).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: Vec<f64> = (0..dim).map(|_| draw()).collect();
        labels.push(a.iter().zip(&w).map(|(u, v)| u * v).sum::<f64>() + 0.1 * draw());
        rows.push(a.iter().enumerate().map(|(j, v)| (j as u32 + 1, *v)).collect());
    }
    Dataset { rows, labels, n_features: dim }
}

/// Smallest eigenvalue of a symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn min_eigenvalue_2x2(a: f64, b: f64, c: f64) -> f64 {
    0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
}
