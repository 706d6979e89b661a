//! Serializable summary of a run's behaviour measurements and theory checks.

use serde::{Deserialize, Serialize};

use super::theorems::LimitGap;

/// Results of the synthetic theory checks bundled into a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremChecks {
    /// Slack of the contrastive lower bound on a synthetic joint
    /// (non-negative when the bound holds).
    pub bound_margin: f64,
    /// Gap between the two kernel-entropy evaluation routes on the run's
    /// own features.
    pub identity_gap: f64,
    /// Worst violation of the mutual-information decomposition identities
    /// on synthetic redundant-view joints.
    pub decomposition_violation: f64,
    /// Loss-versus-limit gaps for a growing negative set.
    pub limit_gaps: Vec<LimitGap>,
}

/// Behaviour measurements for one run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// Fraction of reachable occupancy cells visited by evaluation states.
    pub coverage: f64,
    /// Plug-in mutual information between occupancy cell and skill, nats.
    pub binned_mi: f64,
    /// Neural (Donsker–Varadhan) estimate of state–skill mutual information.
    pub mine_mi: f64,
    /// Nearest-neighbour spread score of the deduplicated evaluation states.
    pub particle_entropy: f64,
    /// Plug-in entropy of the occupancy-cell distribution, nats.
    pub state_entropy_binned: f64,
    /// Whether the binned state entropy exceeds log(number of skills),
    /// the premise under which high mutual information forces coverage.
    pub assumption1_ok: bool,
    /// Visit counts per cell for each skill (outer index: skill).
    pub per_skill_cell_histograms: Vec<Vec<u64>>,
    pub theorem_checks: TheoremChecks,
}
