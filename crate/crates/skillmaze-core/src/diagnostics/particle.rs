//! Nonparametric entropy proxy from nearest-neighbour distances.

use crate::nn::Tensor;
use crate::{Error, Result};

/// Average of `log(1 + mean distance to the k nearest other rows)`.
///
/// Unlike the per-state exploration bonus, which averages logs over
/// neighbours, this scores a whole point cloud with the log of the mean
/// neighbour distance per point. Spread-out clouds score higher; a cloud of
/// identical points scores exactly zero.
pub fn particle_entropy(features: &Tensor, k: usize) -> Result<f64> {
    let n = features.rows();
    if k == 0 {
        return Err(Error::Config("need at least one neighbour".into()));
    }
    if n < k + 1 {
        return Err(Error::Degenerate {
            op: "particle_entropy",
            details: format!("{n} rows cannot supply {k} neighbours each"),
        });
    }
    features.check_finite("particle_entropy")?;
    let mut total = 0.0;
    let mut dists = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        let a = features.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2: f64 = a
                .iter()
                .zip(features.row(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d2);
        }
        dists.select_nth_unstable_by(k - 1, |x, y| x.total_cmp(y));
        let mean: f64 = dists[..k].iter().map(|d2| d2.sqrt()).sum::<f64>() / k as f64;
        total += (1.0 + mean).ln();
    }
    Ok(total / n as f64)
}
