//! Randomized invariants: properties that must hold for every valid input,
//! checked over proptest-generated batches, grids, and clouds.

use proptest::prelude::*;

use skillmaze_core::diagnostics::{
    binned_mi, binned_state_entropy, coverage, particle_entropy, reachable_cells, vmf_entropy,
    OccupancyGrid, VmfKde,
};
use skillmaze_core::env::{builtin_layout, Maze};
use skillmaze_core::nn::Tensor;
use skillmaze_core::skills::{becl_loss, becl_reward};

/// Row-normalizes raw coordinates into unit-sphere features.
fn normalize_rows(rows: Vec<Vec<f64>>) -> Tensor {
    let normed: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-9 {
                let mut unit = vec![0.0; r.len()];
                unit[0] = 1.0;
                unit
            } else {
                r.iter().map(|v| v / norm).collect()
            }
        })
        .collect();
    Tensor::from_rows(&normed).unwrap()
}

/// A contrastive batch: anchors, positives, and labels covering >= 2 skills.
fn pair_batch_strategy() -> impl Strategy<Value = (Tensor, Tensor, Vec<usize>)> {
    (2usize..=8, 2usize..=6, 2usize..=4)
        .prop_flat_map(|(pairs, dim, m)| {
            let coords = prop::collection::vec(
                prop::collection::vec(-10.0f64..10.0, dim),
                2 * pairs,
            );
            (coords, Just(pairs), Just(m))
        })
        .prop_map(|(coords, pairs, m)| {
            let anchors = normalize_rows(coords[..pairs].to_vec());
            let positives = normalize_rows(coords[pairs..].to_vec());
            // Cycle labels, then force the first two apart so at least two
            // distinct skills appear even when pairs < m.
            let mut skills: Vec<usize> = (0..pairs).map(|i| i % m).collect();
            skills[1] = (skills[0] + 1) % m;
            (anchors, positives, skills)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every reward lies strictly inside (0, 1), so -log r is positive and
    /// the batch loss is positive.
    #[test]
    fn rewards_are_valid_probabilities(
        (anchors, positives, skills) in pair_batch_strategy(),
        kappa in 0.05f64..5.0,
    ) {
        let rewards = becl_reward(&anchors, &positives, &skills, kappa).unwrap();
        for &r in &rewards {
            prop_assert!(r > 0.0 && r < 1.0, "reward {r} outside (0,1)");
        }
        let loss = becl_loss(&anchors, &positives, &skills, kappa).unwrap();
        prop_assert!(loss > 0.0);
    }

    /// The direct-ratio rewards and the log-space loss are two routes to the
    /// same number: mean(-log r) must match the loss to near machine noise.
    #[test]
    fn reward_and_loss_agree(
        (anchors, positives, skills) in pair_batch_strategy(),
        kappa in 0.05f64..5.0,
    ) {
        let rewards = becl_reward(&anchors, &positives, &skills, kappa).unwrap();
        let loss = becl_loss(&anchors, &positives, &skills, kappa).unwrap();
        let from_rewards =
            rewards.iter().map(|r| -r.ln()).sum::<f64>() / rewards.len() as f64;
        prop_assert!(
            (from_rewards - loss).abs() <= 1e-12,
            "identity gap {}",
            (from_rewards - loss).abs()
        );
    }

    /// Reordering the batch permutes the rewards the same way and leaves the
    /// loss unchanged.
    #[test]
    fn batch_order_is_irrelevant(
        (anchors, positives, skills) in pair_batch_strategy(),
        seed in 0u64..1000,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let kappa = 0.5;
        let rewards = becl_reward(&anchors, &positives, &skills, kappa).unwrap();
        let loss = becl_loss(&anchors, &positives, &skills, kappa).unwrap();

        let mut order: Vec<usize> = (0..skills.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha12Rng::seed_from_u64(seed));
        let perm_anchors =
            Tensor::from_rows(&order.iter().map(|&i| anchors.row(i).to_vec()).collect::<Vec<_>>())
                .unwrap();
        let perm_positives =
            Tensor::from_rows(&order.iter().map(|&i| positives.row(i).to_vec()).collect::<Vec<_>>())
                .unwrap();
        let perm_skills: Vec<usize> = order.iter().map(|&i| skills[i]).collect();

        let perm_rewards =
            becl_reward(&perm_anchors, &perm_positives, &perm_skills, kappa).unwrap();
        let perm_loss = becl_loss(&perm_anchors, &perm_positives, &perm_skills, kappa).unwrap();
        prop_assert!((perm_loss - loss).abs() < 1e-9);
        for (slot, &src) in order.iter().enumerate() {
            prop_assert!((perm_rewards[slot] - rewards[src]).abs() < 1e-9);
        }
    }

    /// Plug-in mutual information from an occupancy grid is bounded by both
    /// the binned state entropy and log(number of skills).
    #[test]
    fn binned_mi_respects_entropy_bounds(
        points in prop::collection::vec(((0.0f64..1.0), (0.0f64..1.0), 0usize..5), 1..300),
        g in 2usize..8,
    ) {
        let m = 5;
        let mut grid = OccupancyGrid::unit(g, m).unwrap();
        for &(x, y, skill) in &points {
            grid.add_state([x, y], skill).unwrap();
        }
        let mi = binned_mi(&grid).unwrap();
        let h = binned_state_entropy(&grid).unwrap();
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= h + 1e-9, "MI {mi} exceeds state entropy {h}");
        prop_assert!(mi <= (m as f64).ln() + 1e-9);
    }

    /// Coverage is a fraction in [0, 1] and never decreases as states stream in.
    #[test]
    fn coverage_is_monotone(
        points in prop::collection::vec(((0.0f64..1.0), (0.0f64..1.0)), 1..200),
    ) {
        let spec = builtin_layout("bottleneck").unwrap();
        let g = 10;
        let reachable = reachable_cells(&spec, g).unwrap();
        let mut grid = OccupancyGrid::new(g, 1, spec.bounds).unwrap();
        let [x0, y0, x1, y1] = spec.bounds;
        let mut last = 0.0;
        for &(u, v) in &points {
            let p = [x0 + u * (x1 - x0), y0 + v * (y1 - y0)];
            grid.add_state(p, 0).unwrap();
            let c = coverage(&grid, &reachable).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(c >= last - 1e-12, "coverage dropped from {last} to {c}");
            last = c;
        }
        prop_assert!(last > 0.0);
    }

    /// The two evaluation routes for the kernel-density entropy term agree:
    /// max-shifted log-mean-kernel minus the normalizer versus the direct
    /// unshifted sum.
    #[test]
    fn kernel_entropy_routes_agree(
        refs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 5..40),
        evals in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 3..20),
        kappa in 0.1f64..3.0,
    ) {
        let references = normalize_rows(refs);
        let eval = normalize_rows(evals);
        let kde = VmfKde::new(kappa, references.clone()).unwrap();
        let route1 = -vmf_entropy(&kde, &eval).unwrap() - kde.log_normalizer();
        let u = 1.0 / kappa;
        let mut direct = 0.0;
        for i in 0..eval.rows() {
            let mut mean = 0.0;
            for j in 0..references.rows() {
                let dot: f64 = eval
                    .row(i)
                    .iter()
                    .zip(references.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                mean += (u * dot).exp();
            }
            direct += (mean / references.rows() as f64).ln();
        }
        let route2 = direct / eval.rows() as f64;
        prop_assert!((route1 - route2).abs() < 1e-9, "gap {}", (route1 - route2).abs());
    }

    /// Nearest-neighbor entropy of a particle cloud is never negative and is
    /// invariant under permuting the rows.
    #[test]
    fn particle_entropy_is_stable(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..60),
        k in 1usize..5,
        seed in 0u64..1000,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let cloud = Tensor::from_rows(&rows).unwrap();
        let h = particle_entropy(&cloud, k).unwrap();
        prop_assert!(h >= 0.0);

        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha12Rng::seed_from_u64(seed));
        let shuffled =
            Tensor::from_rows(&order.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()).unwrap();
        let h2 = particle_entropy(&shuffled, k).unwrap();
        prop_assert!((h - h2).abs() < 1e-9);
    }

    /// The agent can never escape the maze or start outside it: every step
    /// lands inside the bounds regardless of the action stream.
    #[test]
    fn maze_steps_stay_in_bounds(
        actions in prop::collection::vec(((-3.0f64..3.0), (-3.0f64..3.0)), 1..120),
        layout_idx in 0usize..2,
    ) {
        let name = ["bottleneck", "tree"][layout_idx];
        let spec = builtin_layout(name).unwrap();
        let [x0, y0, x1, y1] = spec.bounds;
        let mut maze = Maze::new(spec).unwrap();
        let p = maze.reset();
        prop_assert!(p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1);
        for &(ax, ay) in &actions {
            let p = maze.step([ax, ay]).unwrap();
            prop_assert!(
                p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1,
                "escaped to {p:?}"
            );
        }
    }
}
