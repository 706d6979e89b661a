//! Shared fixtures for the criterion benchmarks.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use skillmaze_core::nn::Tensor;

/// Deterministic generator for benchmark inputs.
pub fn bench_rng(seed: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

/// Row-normalized feature matrix with entries drawn uniformly from [-1, 1].
pub fn unit_rows(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let mut t = Tensor::zeros(rows, cols);
    for i in 0..rows {
        let mut norm = 0.0;
        for j in 0..cols {
            let v: f64 = rng.gen_range(-1.0..1.0);
            t.set(i, j, v);
            norm += v * v;
        }
        let norm = norm.sqrt().max(1e-12);
        for j in 0..cols {
            t.set(i, j, t.get(i, j) / norm);
        }
    }
    t
}

/// Pair batch for the contrastive loss: anchors, positives, and skill labels
/// cycling through `m` skills.
pub fn pair_batch(
    pairs: usize,
    dim: usize,
    m: usize,
    rng: &mut impl Rng,
) -> (Tensor, Tensor, Vec<usize>) {
    let anchors = unit_rows(pairs, dim, rng);
    let positives = unit_rows(pairs, dim, rng);
    let skills = (0..pairs).map(|i| i % m).collect();
    (anchors, positives, skills)
}
