//! Particle-style exploration reward: mean `log(1 + distance)` to the k
//! nearest reference features.
//!
//! `log(1 + d)` (rather than `log d`) keeps the reward finite when a
//! reference coincides with the query. Features are whatever the caller
//! passes; the maze agent uses raw 2D states.

use crate::nn::Tensor;
use crate::{Error, Result};

/// Exploration reward of one query against a reference feature set.
pub fn entropy_reward(query: &[f64], references: &Tensor, k: usize) -> Result<f64> {
    if references.rows() == 0 {
        return Err(Error::Degenerate {
            op: "entropy_reward",
            details: "empty reference set".into(),
        });
    }
    if k == 0 || k > references.rows() {
        return Err(Error::Config(format!(
            "k = {k} must lie in 1..={} (reference count)",
            references.rows()
        )));
    }
    if references.cols() != query.len() {
        return Err(Error::Shape {
            op: "entropy_reward",
            details: format!(
                "query has {} dims, references have {}",
                query.len(),
                references.cols()
            ),
        });
    }
    if query.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("entropy_reward query".into()));
    }
    references.check_finite("entropy_reward references")?;

    let mut dists: Vec<f64> = (0..references.rows())
        .map(|j| {
            query
                .iter()
                .zip(references.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite distances"));
    }
    let sum: f64 = dists[..k].iter().map(|d| (1.0 + d).ln()).sum();
    Ok(sum / k as f64)
}
