//! Numerical verification of the contrastive bound, the mutual-information
//! decomposition identities, and the large-negative-set entropy limit.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::skills::becl_loss;
use crate::{Error, Result};

use super::vmf::{vmf_entropy, VmfKde};

/// Enumerate the batch distribution exactly up to this many configurations;
/// beyond it, fall back to Monte-Carlo with a reported standard error.
pub const MAX_ENUMERATION: usize = 1_000_000;

/// A finite joint distribution p(z, s1, s2) over one shared state alphabet.
#[derive(Debug, Clone)]
pub struct ToyJoint {
    /// `p[z][a][b]`, non-negative, summing to 1.
    pub p: Vec<Vec<Vec<f64>>>,
}

impl ToyJoint {
    pub fn new(p: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let joint = Self { p };
        joint.validate()?;
        Ok(joint)
    }

    pub fn num_skills(&self) -> usize {
        self.p.len()
    }

    pub fn num_states(&self) -> usize {
        self.p[0].len()
    }

    fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p[0].is_empty() {
            return Err(Error::Degenerate { op: "toy_joint", details: "empty table".into() });
        }
        let n = self.p[0].len();
        let mut total = 0.0;
        for plane in &self.p {
            if plane.len() != n || plane.iter().any(|row| row.len() != n) {
                return Err(Error::Shape {
                    op: "toy_joint",
                    details: "state alphabet must be square and shared".into(),
                });
            }
            for row in plane {
                for &v in row {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::NonFinite(format!("joint probability {v}")));
                    }
                    total += v;
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Degenerate {
                op: "toy_joint",
                details: format!("probabilities sum to {total}"),
            });
        }
        Ok(())
    }

    pub fn p_skill(&self, z: usize) -> f64 {
        self.p[z].iter().flatten().sum()
    }

    fn p_s1_s2(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut out = vec![vec![0.0; n]; n];
        for plane in &self.p {
            for (a, row) in plane.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    out[a][b] += v;
                }
            }
        }
        out
    }

    /// I(S1; S2) of the (s1, s2) marginal, in nats.
    pub fn mi_s1_s2(&self) -> f64 {
        let joint = self.p_s1_s2();
        let n = self.num_states();
        let pa: Vec<f64> = (0..n).map(|a| joint[a].iter().sum()).collect();
        let pb: Vec<f64> = (0..n).map(|b| (0..n).map(|a| joint[a][b]).sum()).collect();
        let mut mi = 0.0;
        for a in 0..n {
            for b in 0..n {
                let v = joint[a][b];
                if v > 0.0 {
                    mi += v * (v / (pa[a] * pb[b])).ln();
                }
            }
        }
        mi.max(0.0)
    }

    /// I(S1; Z) (or I(S2; Z) with `second`), in nats.
    pub fn mi_state_skill(&self, second: bool) -> f64 {
        let n = self.num_states();
        let m = self.num_skills();
        let mut joint = vec![vec![0.0; m]; n];
        for (z, plane) in self.p.iter().enumerate() {
            for (a, row) in plane.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    let s = if second { b } else { a };
                    joint[s][z] += v;
                }
            }
        }
        let ps: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let pz: Vec<f64> = (0..m).map(|z| self.p_skill(z)).collect();
        let mut mi = 0.0;
        for s in 0..n {
            for z in 0..m {
                let v = joint[s][z];
                if v > 0.0 {
                    mi += v * (v / (ps[s] * pz[z])).ln();
                }
            }
        }
        mi.max(0.0)
    }

    /// I(S1; S2 | Z), in nats.
    pub fn mi_s1_s2_given_z(&self) -> f64 {
        let n = self.num_states();
        let mut mi = 0.0;
        for plane in &self.p {
            let pz: f64 = plane.iter().flatten().sum();
            if pz == 0.0 {
                continue;
            }
            let pa: Vec<f64> = (0..n).map(|a| plane[a].iter().sum()).collect();
            let pb: Vec<f64> = (0..n).map(|b| (0..n).map(|a| plane[a][b]).sum()).collect();
            for a in 0..n {
                for b in 0..n {
                    let v = plane[a][b];
                    if v > 0.0 {
                        mi += v * (v * pz / (pa[a] * pb[b])).ln();
                    }
                }
            }
        }
        mi.max(0.0)
    }

    /// I(S1; Z | S2) (or I(S2; Z | S1) with `swap`), in nats.
    pub fn mi_state_skill_given_other(&self, swap: bool) -> f64 {
        let n = self.num_states();
        let m = self.num_skills();
        // cond[c][s][z]: joint over (conditioning state c, scored state s, z).
        let mut table = vec![vec![vec![0.0; m]; n]; n];
        for (z, plane) in self.p.iter().enumerate() {
            for (a, row) in plane.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    let (c, s) = if swap { (a, b) } else { (b, a) };
                    table[c][s][z] += v;
                }
            }
        }
        let mut mi = 0.0;
        for cond in &table {
            let pc: f64 = cond.iter().flatten().sum();
            if pc == 0.0 {
                continue;
            }
            let ps: Vec<f64> = cond.iter().map(|r| r.iter().sum()).collect();
            let pz: Vec<f64> = (0..m).map(|z| (0..n).map(|s| cond[s][z]).sum()).collect();
            for s in 0..n {
                for z in 0..m {
                    let v = cond[s][z];
                    if v > 0.0 {
                        mi += v * (v * pc / (ps[s] * pz[z])).ln();
                    }
                }
            }
        }
        mi.max(0.0)
    }

    /// Per-skill pair support: `(s1, s2, p(s1, s2 | z))` for entries > 0.
    fn conditional_support(&self, z: usize) -> Vec<(usize, usize, f64)> {
        let pz = self.p_skill(z);
        let mut out = Vec::new();
        for (a, row) in self.p[z].iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    out.push((a, b, v / pz));
                }
            }
        }
        out
    }
}

/// Outcome of one contrastive-bound verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// Exact I(S1; S2) of the toy joint.
    pub i_true: f64,
    /// log(2m - 1): the log candidate count of the batch softmax.
    pub log_n: f64,
    /// Expected contrastive loss over batch draws.
    pub loss_estimate: f64,
    /// Standard error of the loss estimate (0 under exact enumeration).
    pub sigma: f64,
    /// `log_n - loss_estimate`, the claimed lower bound on `i_true`.
    pub bound_value: f64,
    /// `i_true + 3 sigma - bound_value`; non-negative when the bound holds.
    pub margin: f64,
    pub holds: bool,
    /// Whether the loss expectation was enumerated exactly.
    pub exact: bool,
}

/// Verifies `log N - E[loss] <= I(S1; S2) + 3 sigma` for one toy joint and
/// one feature table (`features` row per alphabet state, unit rows).
///
/// Batches contain every skill exactly once with its pair drawn from
/// `p(s1, s2 | z)`; the skill marginal must be uniform so that batch pairs
/// marginalize to `p(s1, s2)`.
pub fn contrastive_bound_check(
    joint: &ToyJoint,
    features: &Tensor,
    kappa: f64,
    mc_trials: usize,
    rng: &mut ChaCha12Rng,
) -> Result<BoundReport> {
    let m = joint.num_skills();
    if m < 2 {
        return Err(Error::Degenerate {
            op: "contrastive_bound_check",
            details: "need at least two skills".into(),
        });
    }
    if features.rows() != joint.num_states() {
        return Err(Error::Shape {
            op: "contrastive_bound_check",
            details: format!(
                "{} feature rows for {} states",
                features.rows(),
                joint.num_states()
            ),
        });
    }
    for z in 0..m {
        let pz = joint.p_skill(z);
        if (pz - 1.0 / m as f64).abs() > 1e-9 {
            return Err(Error::Degenerate {
                op: "contrastive_bound_check",
                details: format!("skill marginal must be uniform; p({z}) = {pz}"),
            });
        }
    }

    let supports: Vec<Vec<(usize, usize, f64)>> =
        (0..m).map(|z| joint.conditional_support(z)).collect();
    let combos: usize = supports
        .iter()
        .map(|s| s.len())
        .try_fold(1usize, |acc, len| acc.checked_mul(len))
        .unwrap_or(usize::MAX);

    let skills: Vec<usize> = (0..m).collect();
    let batch_loss = |choice: &[usize]| -> Result<f64> {
        let mut anchors = Vec::with_capacity(m);
        let mut positives = Vec::with_capacity(m);
        for (z, &pick) in choice.iter().enumerate() {
            let (a, b, _) = supports[z][pick];
            anchors.push(features.row(a).to_vec());
            positives.push(features.row(b).to_vec());
        }
        becl_loss(
            &Tensor::from_rows(&anchors)?,
            &Tensor::from_rows(&positives)?,
            &skills,
            kappa,
        )
    };

    let (loss_estimate, sigma, exact) = if combos <= MAX_ENUMERATION {
        let mut expect = 0.0;
        let mut choice = vec![0usize; m];
        loop {
            let prob: f64 = choice.iter().enumerate().map(|(z, &i)| supports[z][i].2).product();
            expect += prob * batch_loss(&choice)?;
            // Mixed-radix increment over the per-skill supports.
            let mut done = true;
            for z in 0..m {
                choice[z] += 1;
                if choice[z] < supports[z].len() {
                    done = false;
                    break;
                }
                choice[z] = 0;
            }
            if done {
                break;
            }
        }
        (expect, 0.0, true)
    } else {
        if mc_trials < 2 {
            return Err(Error::Config(format!(
                "{combos} configurations exceed the enumeration cap; need mc_trials >= 2"
            )));
        }
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..mc_trials {
            let choice: Vec<usize> = supports
                .iter()
                .map(|support| {
                    let mut u: f64 = rng.gen();
                    let mut idx = support.len() - 1;
                    for (i, &(_, _, p)) in support.iter().enumerate() {
                        if u < p {
                            idx = i;
                            break;
                        }
                        u -= p;
                    }
                    idx
                })
                .collect();
            let loss = batch_loss(&choice)?;
            sum += loss;
            sum_sq += loss * loss;
        }
        let mean = sum / mc_trials as f64;
        let var = (sum_sq / mc_trials as f64 - mean * mean).max(0.0);
        (mean, (var / mc_trials as f64).sqrt(), false)
    };

    let i_true = joint.mi_s1_s2();
    let log_n = (2.0 * m as f64 - 1.0).ln();
    let bound_value = log_n - loss_estimate;
    let margin = i_true + 3.0 * sigma - bound_value;
    Ok(BoundReport {
        i_true,
        log_n,
        loss_estimate,
        sigma,
        bound_value,
        margin,
        holds: margin >= 0.0,
        exact,
    })
}

/// Outcome of the decomposition-identity verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub i_s1_z: f64,
    pub i_s2_z: f64,
    /// Tri-variate interaction I(S1; S2; Z) = I(S1; S2) - I(S1; S2 | Z).
    pub interaction: f64,
    pub i_s1_s2: f64,
    pub i_s1_s2_given_z: f64,
    /// Largest deviation from the two identities.
    pub max_violation: f64,
}

/// Verifies, for joints where each view determines the skill given the other
/// (`I(S1; Z | S2) = I(S2; Z | S1) = 0`):
/// `I(S1;Z) = I(S2;Z) = I(S1;S2;Z)` and
/// `I(S1;S2) = (I(S1;Z) + I(S2;Z)) / 2 + I(S1;S2|Z)`.
///
/// Errors when the redundancy precondition fails, reporting the measured
/// conditional information.
pub fn decomposition_check(joint: &ToyJoint) -> Result<DecompositionReport> {
    let leak1 = joint.mi_state_skill_given_other(false);
    let leak2 = joint.mi_state_skill_given_other(true);
    if leak1 > 1e-12 || leak2 > 1e-12 {
        return Err(Error::Degenerate {
            op: "decomposition_check",
            details: format!(
                "views are not mutually redundant: I(S1;Z|S2) = {leak1:.6}, I(S2;Z|S1) = {leak2:.6}"
            ),
        });
    }
    let i_s1_z = joint.mi_state_skill(false);
    let i_s2_z = joint.mi_state_skill(true);
    let i_s1_s2 = joint.mi_s1_s2();
    let i_s1_s2_given_z = joint.mi_s1_s2_given_z();
    let interaction = i_s1_s2 - i_s1_s2_given_z;
    let violations = [
        (i_s1_z - i_s2_z).abs(),
        (i_s1_z - interaction).abs(),
        (i_s2_z - interaction).abs(),
        (i_s1_s2 - (0.5 * (i_s1_z + i_s2_z) + i_s1_s2_given_z)).abs(),
    ];
    Ok(DecompositionReport {
        i_s1_z,
        i_s2_z,
        interaction,
        i_s1_s2,
        i_s1_s2_given_z,
        max_violation: violations.into_iter().fold(0.0, f64::max),
    })
}

/// One entry of the negative-set limit check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitGap {
    pub negatives: usize,
    pub gap: f64,
}

/// Outcome of the negative-set limit check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitReport {
    pub gaps: Vec<LimitGap>,
    /// Whether the gap shrinks monotonically along the schedule.
    pub monotone: bool,
}

/// Compares the single-positive contrastive loss against its infinite-negative
/// limit, `-(1/kappa) E[f1.f2] - H_kde - log Z`, for growing nested prefixes
/// of a negative pool.
///
/// The left side keeps the positive term inside its softmax denominator; the
/// right side estimates entropy by kernel density over exactly the `M`
/// negatives, so the reported gap isolates the finite-`M` positive-term
/// contribution and must shrink as `M` grows.
pub fn negative_limit_check(
    anchors: &Tensor,
    positives: &Tensor,
    negatives: &Tensor,
    kappa: f64,
    schedule: &[usize],
) -> Result<LimitReport> {
    if anchors.rows() != positives.rows() || anchors.cols() != positives.cols() {
        return Err(Error::Shape {
            op: "negative_limit_check",
            details: "anchors and positives must pair up".into(),
        });
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("schedule must be strictly increasing".into()));
    }
    let max_m = *schedule.last().unwrap();
    if negatives.rows() < max_m {
        return Err(Error::Shape {
            op: "negative_limit_check",
            details: format!("pool of {} negatives < max schedule {max_m}", negatives.rows()),
        });
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
    }
    let u = 1.0 / kappa;
    let n = anchors.rows();
    let mean_pos: f64 = (0..n)
        .map(|i| {
            anchors
                .row(i)
                .iter()
                .zip(positives.row(i))
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum::<f64>()
        / n as f64;

    let mut gaps = Vec::with_capacity(schedule.len());
    for &m in schedule {
        let prefix_rows: Vec<Vec<f64>> = (0..m).map(|j| negatives.row(j).to_vec()).collect();
        let prefix = Tensor::from_rows(&prefix_rows)?;

        // Left side: E[-u f1.f2 + log(e^{u f1.f2} + sum_j e^{u f1.g_j})] - log M.
        let mut lhs = 0.0;
        for i in 0..n {
            let pos: f64 =
                anchors.row(i).iter().zip(positives.row(i)).map(|(a, b)| a * b).sum();
            let mut terms = Vec::with_capacity(m + 1);
            terms.push(u * pos);
            for j in 0..m {
                let dot: f64 =
                    anchors.row(i).iter().zip(prefix.row(j)).map(|(a, b)| a * b).sum();
                terms.push(u * dot);
            }
            let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
            lhs += -u * pos + lse;
        }
        lhs = lhs / n as f64 - (m as f64).ln();

        // Right side: -u E[f1.f2] - H_kde(anchors; M negatives) - log Z.
        let kde = VmfKde::new(kappa, prefix)?;
        let rhs = -u * mean_pos - vmf_entropy(&kde, anchors)? - kde.log_normalizer();

        gaps.push(LimitGap { negatives: m, gap: (lhs - rhs).abs() });
    }
    let monotone = gaps.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12);
    Ok(LimitReport { gaps, monotone })
}

/// Random joint with uniform skills and a dense random pair table per skill.
pub fn random_uniform_skill_joint(
    m: usize,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Result<ToyJoint> {
    if m < 2 || n < 1 {
        return Err(Error::Config(format!("need m >= 2, n >= 1 (got {m}, {n})")));
    }
    let mut p = vec![vec![vec![0.0; n]; n]; m];
    for plane in &mut p {
        let mut total = 0.0;
        for row in plane.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen::<f64>() + 1e-3;
                total += *v;
            }
        }
        for row in plane.iter_mut() {
            for v in row.iter_mut() {
                *v /= total * m as f64;
            }
        }
    }
    ToyJoint::new(p)
}

/// Random joint where each skill owns a private block of states: both views
/// land in the block, so either view pins down the skill given the other.
pub fn random_block_joint(
    m: usize,
    states_per_block: usize,
    rng: &mut ChaCha12Rng,
) -> Result<ToyJoint> {
    if m < 1 || states_per_block < 1 {
        return Err(Error::Config("need m >= 1 and states_per_block >= 1".into()));
    }
    let n = m * states_per_block;
    let mut weights: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.1).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    let mut p = vec![vec![vec![0.0; n]; n]; m];
    for (z, plane) in p.iter_mut().enumerate() {
        let base = z * states_per_block;
        let mut total = 0.0;
        let mut cells = Vec::new();
        for a in 0..states_per_block {
            for b in 0..states_per_block {
                let v = rng.gen::<f64>() + 1e-3;
                cells.push((base + a, base + b, v));
                total += v;
            }
        }
        for (a, b, v) in cells {
            plane[a][b] = v / total * weights[z];
        }
    }
    ToyJoint::new(p)
}
