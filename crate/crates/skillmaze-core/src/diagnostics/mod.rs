//! Measurement and verification: occupancy statistics, entropy and
//! mutual-information estimators, and numerical checks of the bounds behind
//! the contrastive objective.

pub mod bessel;
pub mod mine;
pub mod occupancy;
pub mod particle;
pub mod report;
pub mod theorems;
pub mod vmf;

pub use bessel::bessel_i;
pub use mine::{correlated_gaussian_pairs, mine_estimate, mine_loss_graph, MineConfig};
pub use occupancy::{
    binned_mi, binned_state_entropy, coverage, reachable_cells, OccupancyGrid,
};
pub use particle::particle_entropy;
pub use report::{DiagnosticReport, TheoremChecks};
pub use theorems::{
    contrastive_bound_check, decomposition_check, negative_limit_check, random_block_joint,
    random_uniform_skill_joint, BoundReport, DecompositionReport, LimitGap, LimitReport,
    ToyJoint, MAX_ENUMERATION,
};
pub use vmf::{log_kernel_normalizer, random_unit_features, vmf_entropy, VmfKde};
