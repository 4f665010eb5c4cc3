//! Seeded synthetic dataset generators for tests, benchmarks, and smoke
//! runs. All generators are pure functions of their arguments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::rng::derive_rng;

/// 2-attribute, 3-class data generated from the increasing utility
/// `x1 + x2`: three utility levels on the diagonal, far enough apart that a
/// margin-based fit separates the classes exactly within the default epoch
/// budget. Class sizes differ by at most one; row order is shuffled.
pub fn separable_three_class(n: usize, seed: u64) -> Dataset {
    const CENTERS: [f64; 3] = [0.15, 0.5, 0.85];
    let mut rng = derive_rng(seed, &[0x7365_70]);
    let mut objects = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    for &slot in &slots {
        let c = slot % 3;
        objects.push(vec![CENTERS[c], CENTERS[c]]);
        labels.push(c as u32 + 1);
    }
    Dataset::new(objects, labels, vec!["x1".into(), "x2".into()]).expect("valid synthetic data")
}

/// Data whose labels come from a utility that increases in every attribute
/// (positive weights), binned by rank into `h` classes.
pub fn monotone_utility_dataset(n: usize, m: usize, h: u32, seed: u64) -> Dataset {
    let weights: Vec<f64> = (0..m).map(|j| 1.0 + j as f64 * 0.5).collect();
    latent_dataset(n, m, h, 0.0, seed, &weights, &vec![1.0; m])
}

/// Noisy ordinal data: mixed-sign attribute weights, Gaussian noise on the
/// latent score, rank-binned labels. The `noise` argument is the noise
/// standard deviation relative to the latent spread.
pub fn noisy_ordinal_dataset(n: usize, m: usize, h: u32, noise: f64, seed: u64) -> Dataset {
    let weights: Vec<f64> =
        (0..m).map(|j| (1.0 + j as f64) * if j % 2 == 0 { 1.0 } else { -0.7 }).collect();
    let scales: Vec<f64> = (0..m).map(|j| 10f64.powi((j % 4) as i32 - 1)).collect();
    latent_dataset(n, m, h, noise, seed, &weights, &scales)
}

fn latent_dataset(
    n: usize,
    m: usize,
    h: u32,
    noise: f64,
    seed: u64,
    weights: &[f64],
    scales: &[f64],
) -> Dataset {
    assert!(h >= 2 && n >= h as usize && m >= 1);
    let mut rng = derive_rng(seed, &[0x6c61_74]);
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let mut objects = Vec::with_capacity(n);
    let mut latents = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut latent: f64 = z.iter().zip(weights).map(|(x, w)| x * w).sum();
        if noise > 0.0 {
            latent += noise * gauss.sample(&mut rng);
        }
        latents.push(latent);
        objects.push(z.iter().zip(scales).map(|(x, s)| x * s).collect());
    }
    // Rank-bin the latent scores into h classes of near-equal size, so
    // every class is present.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| latents[a].total_cmp(&latents[b]));
    let mut labels = vec![0u32; n];
    let base = n / h as usize;
    let extra = n % h as usize;
    let mut pos = 0;
    for c in 0..h as usize {
        let size = base + usize::from(c < extra);
        for &idx in &order[pos..pos + size] {
            labels[idx] = c as u32 + 1;
        }
        pos += size;
    }
    let names = (0..m).map(|j| format!("a{j}")).collect();
    Dataset::new(objects, labels, names).expect("valid synthetic data")
}

/// Fully random data: uniform attributes with labels drawn independently of
/// them. Used for gradient checks where no structure is wanted.
pub fn random_dataset(n: usize, m: usize, h: u32, seed: u64) -> Dataset {
    assert!(h >= 2 && n >= 2);
    let mut rng = derive_rng(seed, &[0x726e_64]);
    let objects: Vec<Vec<f64>> =
        (0..n).map(|_| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let mut labels: Vec<u32> = (0..n).map(|_| rng.random_range(1..=h)).collect();
    // Guarantee at least two distinct labels.
    labels[0] = 1;
    labels[1] = h;
    let names = (0..m).map(|j| format!("a{j}")).collect();
    Dataset::new(objects, labels, names).expect("valid synthetic data")
}
