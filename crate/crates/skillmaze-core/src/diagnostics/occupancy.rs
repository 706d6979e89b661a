//! Visitation histograms over the maze: coverage and plug-in mutual
//! information between grid cells and skills.

use crate::env::{segments_strictly_cross, MazeSpec, Point};
use crate::{Error, Result};

/// A `G x G x m` visitation histogram (cell x skill) over a rectangle.
///
/// This is the undiscounted empirical state-visitation measure: every logged
/// state adds one count to its cell/skill bin.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    g: usize,
    m: usize,
    bounds: [f64; 4],
    counts: Vec<u64>,
}

impl OccupancyGrid {
    /// Grid with `g` cells per side for `m` skills over `[x0,y0,x1,y1]`.
    pub fn new(g: usize, m: usize, bounds: [f64; 4]) -> Result<Self> {
        let [x0, y0, x1, y1] = bounds;
        if g == 0 || m == 0 {
            return Err(Error::Config(format!("grid needs g >= 1, m >= 1 (got {g}, {m})")));
        }
        if !bounds.iter().all(|v| v.is_finite()) || x0 >= x1 || y0 >= y1 {
            return Err(Error::Config(format!("bad grid bounds {bounds:?}")));
        }
        Ok(Self { g, m, bounds, counts: vec![0; g * g * m] })
    }

    /// Grid over the unit square.
    pub fn unit(g: usize, m: usize) -> Result<Self> {
        Self::new(g, m, [0.0, 0.0, 1.0, 1.0])
    }

    pub fn cells_per_side(&self) -> usize {
        self.g
    }

    pub fn num_skills(&self) -> usize {
        self.m
    }

    /// Flat cell index of a point; coordinates are clamped into the bounds.
    pub fn cell_index(&self, p: Point) -> Result<usize> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("grid point {p:?}")));
        }
        let [x0, y0, x1, y1] = self.bounds;
        let axis = |v: f64, lo: f64, hi: f64| -> usize {
            let n = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            ((n * self.g as f64) as usize).min(self.g - 1)
        };
        Ok(axis(p[1], y0, y1) * self.g + axis(p[0], x0, x1))
    }

    /// Counts one visited state for `skill`.
    pub fn add_state(&mut self, p: Point, skill: usize) -> Result<()> {
        if skill >= self.m {
            return Err(Error::Config(format!("skill {skill} out of range for {} skills", self.m)));
        }
        let cell = self.cell_index(p)?;
        self.counts[cell * self.m + skill] += 1;
        Ok(())
    }

    /// Count in (flat cell, skill).
    pub fn count(&self, cell: usize, skill: usize) -> u64 {
        self.counts[cell * self.m + skill]
    }

    /// Total over all skills for one cell.
    pub fn cell_total(&self, cell: usize) -> u64 {
        let row = &self.counts[cell * self.m..(cell + 1) * self.m];
        row.iter().sum()
    }

    /// Total logged states.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-skill flattened `G^2` histograms (report payload).
    pub fn per_skill_histograms(&self) -> Vec<Vec<u64>> {
        (0..self.m)
            .map(|z| (0..self.g * self.g).map(|c| self.count(c, z)).collect())
            .collect()
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Exact plug-in mutual information I(cell; skill) of the histogram, in nats.
pub fn binned_mi(grid: &OccupancyGrid) -> Result<f64> {
    let n = grid.total();
    if n == 0 {
        return Err(Error::Degenerate { op: "binned_mi", details: "empty grid".into() });
    }
    let n = n as f64;
    let cells = grid.g * grid.g;
    let mut p_skill = vec![0.0; grid.m];
    for z in 0..grid.m {
        p_skill[z] = (0..cells).map(|c| grid.count(c, z)).sum::<u64>() as f64 / n;
    }
    let mut mi = 0.0;
    for c in 0..cells {
        let p_cell = grid.cell_total(c) as f64 / n;
        if p_cell == 0.0 {
            continue;
        }
        for z in 0..grid.m {
            let joint = grid.count(c, z) as f64 / n;
            if joint > 0.0 {
                mi += joint * (joint / (p_cell * p_skill[z])).ln();
            }
        }
    }
    // The sum is non-negative up to rounding; snap tiny negative residue.
    if mi < 0.0 && mi > -1e-12 {
        mi = 0.0;
    }
    Ok(mi)
}

/// Entropy of the cell marginal (binned state entropy), in nats.
pub fn binned_state_entropy(grid: &OccupancyGrid) -> Result<f64> {
    let n = grid.total();
    if n == 0 {
        return Err(Error::Degenerate { op: "binned_state_entropy", details: "empty grid".into() });
    }
    let n = n as f64;
    let h = -(0..grid.g * grid.g).map(|c| plogp(grid.cell_total(c) as f64 / n)).sum::<f64>();
    Ok(h.max(0.0))
}

/// Fraction of reachable cells visited by any skill.
pub fn coverage(grid: &OccupancyGrid, reachable: &[bool]) -> Result<f64> {
    let cells = grid.g * grid.g;
    if reachable.len() != cells {
        return Err(Error::Shape {
            op: "coverage",
            details: format!("{} reachability flags for {cells} cells", reachable.len()),
        });
    }
    let total = reachable.iter().filter(|&&r| r).count();
    if total == 0 {
        return Ok(0.0);
    }
    let visited = (0..cells).filter(|&c| reachable[c] && grid.cell_total(c) > 0).count();
    Ok(visited as f64 / total as f64)
}

/// Cells reachable from the start by walks between adjacent cell centers
/// that do not cross a wall. Cell adjacency is 4-connected; a step is open
/// when the straight segment between the two centers crosses no wall.
pub fn reachable_cells(spec: &MazeSpec, g: usize) -> Result<Vec<bool>> {
    if g == 0 {
        return Err(Error::Config("reachable_cells needs g >= 1".into()));
    }
    let [x0, y0, x1, y1] = spec.bounds;
    let center = |ix: usize, iy: usize| -> Point {
        [
            x0 + (ix as f64 + 0.5) / g as f64 * (x1 - x0),
            y0 + (iy as f64 + 0.5) / g as f64 * (y1 - y0),
        ]
    };
    let open = |a: Point, b: Point| -> bool {
        !spec.walls.iter().any(|w| segments_strictly_cross(a, b, w.a, w.b))
    };
    let probe = OccupancyGrid::new(g, 1, spec.bounds)?;
    let start = probe.cell_index(spec.start)?;
    let mut seen = vec![false; g * g];
    let mut queue = std::collections::VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(cell) = queue.pop_front() {
        let (iy, ix) = (cell / g, cell % g);
        let mut neighbors = Vec::with_capacity(4);
        if ix > 0 {
            neighbors.push((ix - 1, iy));
        }
        if ix + 1 < g {
            neighbors.push((ix + 1, iy));
        }
        if iy > 0 {
            neighbors.push((ix, iy - 1));
        }
        if iy + 1 < g {
            neighbors.push((ix, iy + 1));
        }
        for (jx, jy) in neighbors {
            let next = jy * g + jx;
            if !seen[next] && open(center(ix, iy), center(jx, jy)) {
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builtin_layout;

    fn grid_from_counts(g: usize, m: usize, fill: impl Fn(usize, usize) -> u64) -> OccupancyGrid {
        let mut grid = OccupancyGrid::unit(g, m).unwrap();
        for c in 0..g * g {
            for z in 0..m {
                grid.counts[c * m + z] = fill(c, z);
            }
        }
        grid
    }

    #[test]
    fn identical_per_skill_distributions_give_zero_mi() {
        let grid = grid_from_counts(4, 3, |c, _| (c % 5) as u64 + 1);
        let mi = binned_mi(&grid).unwrap();
        assert!(mi.abs() < 1e-12, "mi = {mi}");
    }

    #[test]
    fn private_cells_give_log_m() {
        let grid = grid_from_counts(5, 10, |c, z| u64::from(c == z) * 7);
        let mi = binned_mi(&grid).unwrap();
        assert!((mi - (10.0f64).ln()).abs() < 1e-12, "mi = {mi}");
        assert!((binned_state_entropy(&grid).unwrap() - (10.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn random_table_matches_entropy_decomposition() {
        let grid = grid_from_counts(6, 4, |c, z| ((c * 31 + z * 17 + 3) % 13) as u64);
        let n = grid.total() as f64;
        let cells = 36;
        let h = |probs: Vec<f64>| -> f64 { -probs.into_iter().map(plogp).sum::<f64>() };
        let h_cell = h((0..cells).map(|c| grid.cell_total(c) as f64 / n).collect());
        let h_skill = h((0..4)
            .map(|z| (0..cells).map(|c| grid.count(c, z)).sum::<u64>() as f64 / n)
            .collect());
        let h_joint = h((0..cells)
            .flat_map(|c| (0..4).map(move |z| (c, z)))
            .map(|(c, z)| grid.count(c, z) as f64 / n)
            .collect());
        let oracle = h_cell + h_skill - h_joint;
        let mi = binned_mi(&grid).unwrap();
        assert!((mi - oracle).abs() < 1e-12, "{mi} vs {oracle}");
        assert!(mi <= h_skill + 1e-12 && mi <= h_cell + 1e-12);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let grid = OccupancyGrid::unit(3, 2).unwrap();
        assert!(binned_mi(&grid).is_err());
        assert!(binned_state_entropy(&grid).is_err());
    }

    #[test]
    fn add_state_bins_by_bounds_and_clamps() {
        let mut grid = OccupancyGrid::new(4, 1, [0.0, 0.0, 2.0, 1.0]).unwrap();
        grid.add_state([0.9, 0.1], 0).unwrap();
        assert_eq!(grid.cell_index([0.9, 0.1]).unwrap(), 1, "x 0.9 of 2.0 is column 1");
        grid.add_state([5.0, -3.0], 0).unwrap();
        assert_eq!(grid.count(3, 0), 1, "out-of-bounds clamps to the edge cell");
        assert!(grid.add_state([0.5, 0.5], 1).is_err());
        assert!(grid.add_state([f64::NAN, 0.5], 0).is_err());
    }

    #[test]
    fn coverage_counts_only_reachable_cells() {
        let mut grid = OccupancyGrid::unit(2, 1).unwrap();
        let reachable = vec![true, true, false, false];
        assert_eq!(coverage(&grid, &reachable).unwrap(), 0.0);
        grid.add_state([0.25, 0.25], 0).unwrap();
        assert_eq!(coverage(&grid, &reachable).unwrap(), 0.5);
        // A visit to an unreachable cell does not move coverage.
        grid.add_state([0.25, 0.75], 0).unwrap();
        assert_eq!(coverage(&grid, &reachable).unwrap(), 0.5);
        grid.add_state([0.75, 0.25], 0).unwrap();
        assert_eq!(coverage(&grid, &reachable).unwrap(), 1.0);
        assert!(coverage(&grid, &[true; 3]).is_err());
    }

    #[test]
    fn coverage_is_monotone_under_added_states() {
        let spec = builtin_layout("bottleneck").unwrap();
        let reachable = reachable_cells(&spec, 10).unwrap();
        let mut grid = OccupancyGrid::new(10, 1, spec.bounds).unwrap();
        let mut last = 0.0;
        for i in 0..40 {
            let p = [(i as f64 * 0.023) % 1.0, (i as f64 * 0.061) % 1.0];
            grid.add_state(p, 0).unwrap();
            let c = coverage(&grid, &reachable).unwrap();
            assert!(c >= last);
            last = c;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn bottleneck_cells_beyond_the_gap_are_reachable() {
        let spec = builtin_layout("bottleneck").unwrap();
        let reachable = reachable_cells(&spec, 20).unwrap();
        let grid = OccupancyGrid::new(20, 1, spec.bounds).unwrap();
        let left = grid.cell_index([0.25, 0.5]).unwrap();
        let right = grid.cell_index([0.9, 0.5]).unwrap();
        assert!(reachable[left] && reachable[right], "the gap connects both halves");
        let count = reachable.iter().filter(|&&r| r).count();
        assert!(count > 300, "most of the arena is open (got {count})");
    }

    #[test]
    fn a_full_dividing_wall_blocks_reachability() {
        let spec = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.25, 0.5],
            vec![crate::env::Wall::new([0.5, 0.0], [0.5, 1.0])],
        )
        .unwrap();
        let reachable = reachable_cells(&spec, 20).unwrap();
        let grid = OccupancyGrid::new(20, 1, spec.bounds).unwrap();
        assert!(reachable[grid.cell_index([0.25, 0.5]).unwrap()]);
        for iy in 0..20 {
            for ix in 10..20 {
                assert!(!reachable[iy * 20 + ix], "({ix},{iy}) is behind the wall");
            }
        }
    }
}
