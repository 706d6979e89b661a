//! Maze geometry and the blocking step rule.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A 2D position or displacement.
pub type Point = [f64; 2];

/// Default displacement per unit action.
pub const STEP_SCALE: f64 = 0.05;

/// Distance by which blocked motion stops short of the wall it would hit.
pub const CONTACT_EPS: f64 = 1e-4;

/// A thin wall segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
}

impl Wall {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }
}

/// Static description of a maze arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    /// `[x0, y0, x1, y1]` with `x0 < x1`, `y0 < y1`.
    pub bounds: [f64; 4],
    pub start: Point,
    pub walls: Vec<Wall>,
    pub step_scale: f64,
    pub contact_eps: f64,
}

impl MazeSpec {
    pub fn new(bounds: [f64; 4], start: Point, walls: Vec<Wall>) -> Result<Self> {
        let spec = Self { bounds, start, walls, step_scale: STEP_SCALE, contact_eps: CONTACT_EPS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let [x0, y0, x1, y1] = self.bounds;
        if !self.bounds.iter().all(|v| v.is_finite()) || x0 >= x1 || y0 >= y1 {
            return Err(Error::Layout(format!("bad bounds {:?}", self.bounds)));
        }
        if self.step_scale <= 0.0 || !self.step_scale.is_finite() {
            return Err(Error::Layout(format!("bad step_scale {}", self.step_scale)));
        }
        if self.contact_eps <= 0.0 || !self.contact_eps.is_finite() {
            return Err(Error::Layout(format!("bad contact_eps {}", self.contact_eps)));
        }
        let [sx, sy] = self.start;
        if !(sx > x0 && sx < x1 && sy > y0 && sy < y1) {
            return Err(Error::Layout(format!("start {:?} outside bounds", self.start)));
        }
        for (i, w) in self.walls.iter().enumerate() {
            if ![w.a[0], w.a[1], w.b[0], w.b[1]].iter().all(|v| v.is_finite()) {
                return Err(Error::Layout(format!("wall {i} has non-finite endpoint")));
            }
            if w.a == w.b {
                return Err(Error::Layout(format!("wall {i} has zero length")));
            }
            if point_segment_distance(self.start, w.a, w.b) <= self.contact_eps {
                return Err(Error::Layout(format!("start {:?} lies on wall {i}", self.start)));
            }
        }
        Ok(())
    }

    /// The four boundary edges as wall segments.
    pub fn boundary_walls(&self) -> [Wall; 4] {
        let [x0, y0, x1, y1] = self.bounds;
        [
            Wall::new([x0, y0], [x1, y0]),
            Wall::new([x1, y0], [x1, y1]),
            Wall::new([x1, y1], [x0, y1]),
            Wall::new([x0, y1], [x0, y0]),
        ]
    }
}

/// A running maze: a spec plus the current position.
#[derive(Debug, Clone)]
pub struct Maze {
    spec: MazeSpec,
    pos: Point,
}

impl Maze {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        spec.validate()?;
        let pos = spec.start;
        Ok(Self { spec, pos })
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    pub fn pos(&self) -> Point {
        self.pos
    }

    /// Returns to the deterministic start position.
    pub fn reset(&mut self) -> Point {
        self.pos = self.spec.start;
        self.pos
    }

    /// Applies an action (clipped to `[-1,1]^2`, scaled by `step_scale`) and
    /// returns the new position. Motion stops `contact_eps` short of the
    /// first wall or boundary crossing along the movement segment.
    pub fn step(&mut self, action: Point) -> Result<Point> {
        if !action.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("maze action".into()));
        }
        let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
        let d = [a[0] * self.spec.step_scale, a[1] * self.spec.step_scale];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if len == 0.0 {
            return Ok(self.pos);
        }

        let mut t_min = f64::INFINITY;
        let mut check = |w: &Wall| {
            if let Some(t) = segment_intersection_t(self.pos, d, w.a, w.b) {
                if t < t_min {
                    t_min = t;
                }
            }
        };
        for w in &self.spec.walls {
            check(w);
        }
        for w in &self.spec.boundary_walls() {
            check(w);
        }

        self.pos = if t_min.is_finite() {
            // Stop contact_eps short of the hit point, measured along the
            // motion direction; tiny approaches collapse to no motion.
            let travel = (t_min * len - self.spec.contact_eps).max(0.0);
            [self.pos[0] + d[0] / len * travel, self.pos[1] + d[1] / len * travel]
        } else {
            [self.pos[0] + d[0], self.pos[1] + d[1]]
        };
        Ok(self.pos)
    }
}

/// Parameter `t in [0,1]` along `p -> p + d` of the first crossing with
/// segment `a -> b`, or `None`. Parallel segments never report a crossing;
/// endpoint touches count as crossings.
fn segment_intersection_t(p: Point, d: Point, a: Point, b: Point) -> Option<f64> {
    let s = [b[0] - a[0], b[1] - a[1]];
    let denom = cross(d, s);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ap = [a[0] - p[0], a[1] - p[1]];
    let t = cross(ap, s) / denom;
    let u = cross(ap, d) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        Some(t.clamp(0.0, 1.0))
    } else {
        None
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Distance from a point to a segment.
pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}

/// True if segments `p1-p2` and `q1-q2` properly cross (interiors intersect).
/// Orientation-based; used by tests as an independent oracle and by
/// diagnostics for grid reachability.
pub fn segments_strictly_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let orient = |a: Point, b: Point, c: Point| -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builtin_layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn empty_arena() -> MazeSpec {
        MazeSpec::new([0.0, 0.0, 1.0, 1.0], [0.5, 0.5], vec![]).unwrap()
    }

    #[test]
    fn reset_returns_start() {
        let mut maze = Maze::new(empty_arena()).unwrap();
        maze.step([1.0, 0.5]).unwrap();
        assert_eq!(maze.reset(), [0.5, 0.5]);
    }

    #[test]
    fn free_space_step_is_scaled_displacement() {
        let mut maze = Maze::new(empty_arena()).unwrap();
        let p = maze.step([1.0, -0.5]).unwrap();
        assert!((p[0] - 0.55).abs() < 1e-15);
        assert!((p[1] - 0.475).abs() < 1e-15);
    }

    #[test]
    fn null_action_stays_put() {
        let mut maze = Maze::new(empty_arena()).unwrap();
        assert_eq!(maze.step([0.0, 0.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn action_is_clipped_to_unit_box() {
        let mut maze = Maze::new(empty_arena()).unwrap();
        let p = maze.step([10.0, 0.0]).unwrap();
        assert!((p[0] - 0.55).abs() < 1e-15, "clipped action moves step_scale, got {}", p[0]);
    }

    #[test]
    fn wall_blocks_and_stops_contact_eps_short() {
        let spec = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.5, 0.5],
            vec![Wall::new([0.52, 0.0], [0.52, 1.0])],
        )
        .unwrap();
        let mut maze = Maze::new(spec).unwrap();
        let p = maze.step([1.0, 0.0]).unwrap();
        assert!((p[0] - (0.52 - 1e-4)).abs() < 1e-12, "stopped at {}", p[0]);
        assert!((p[1] - 0.5).abs() < 1e-12);
        // Pushing again into the wall makes no further progress.
        let p2 = maze.step([1.0, 0.0]).unwrap();
        assert!(p2[0] <= 0.52 - 1e-4 + 1e-12, "second push reached {}", p2[0]);
    }

    #[test]
    fn boundary_blocks_motion() {
        let mut maze = Maze::new(empty_arena()).unwrap();
        for _ in 0..20 {
            maze.step([1.0, 0.0]).unwrap();
        }
        let p = maze.pos();
        assert!(p[0] < 1.0 && p[0] > 1.0 - 2.0 * CONTACT_EPS, "resting near east wall, got {}", p[0]);
    }

    #[test]
    fn motion_parallel_to_nearby_wall_is_free() {
        let spec = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.5, 0.5],
            vec![Wall::new([0.52, 0.0], [0.52, 1.0])],
        )
        .unwrap();
        let mut maze = Maze::new(spec).unwrap();
        maze.step([1.0, 0.0]).unwrap(); // up against the wall
        let before = maze.pos();
        let p = maze.step([0.0, 1.0]).unwrap(); // slide along it
        assert!((p[1] - (before[1] + 0.05)).abs() < 1e-12);
        assert!((p[0] - before[0]).abs() < 1e-15);
    }

    #[test]
    fn diagonal_approach_stops_short_of_wall() {
        let spec = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.5, 0.5],
            vec![Wall::new([0.52, 0.0], [0.52, 1.0])],
        )
        .unwrap();
        let mut maze = Maze::new(spec).unwrap();
        let p = maze.step([1.0, 1.0]).unwrap();
        assert!(p[0] < 0.52, "must not cross x=0.52, got {}", p[0]);
        // Stop point lies on the motion ray from (0.5, 0.5) along (1, 1).
        assert!(((p[1] - 0.5) - (p[0] - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn start_on_wall_is_rejected() {
        let r = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.5, 0.5],
            vec![Wall::new([0.5, 0.0], [0.5, 1.0])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_length_wall_is_rejected() {
        let r = MazeSpec::new(
            [0.0, 0.0, 1.0, 1.0],
            [0.25, 0.5],
            vec![Wall::new([0.5, 0.5], [0.5, 0.5])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn random_walk_never_crosses_walls_or_leaves_bounds() {
        // Property: with the orientation predicate as an independent oracle,
        // no consecutive positions straddle a wall, in either builtin layout.
        for layout in ["bottleneck", "tree"] {
            let spec = builtin_layout(layout).unwrap();
            let mut maze = Maze::new(spec.clone()).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(42);
            let mut prev = maze.pos();
            for _ in 0..5000 {
                let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let p = maze.step(a).unwrap();
                for w in &spec.walls {
                    assert!(
                        !segments_strictly_cross(prev, p, w.a, w.b),
                        "{layout}: segment {:?}->{:?} crosses wall {:?}",
                        prev,
                        p,
                        w
                    );
                }
                let [x0, y0, x1, y1] = spec.bounds;
                assert!(p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1);
                prev = p;
            }
        }
    }

    #[test]
    fn parametric_intersection_agrees_with_orientation_oracle() {
        // Random segment pairs: whenever the oracle says "properly crossing",
        // the parametric test must report a hit, and a reported t must lie on
        // both segments.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut crossings = 0;
        for _ in 0..20000 {
            let p: Point = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let q: Point = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let d: Point = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let s: Point = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let p2 = [p[0] + d[0], p[1] + d[1]];
            let q2 = [q[0] + s[0], q[1] + s[1]];
            let oracle = segments_strictly_cross(p, p2, q, q2);
            let t = segment_intersection_t(p, d, q, q2);
            if oracle {
                crossings += 1;
                assert!(t.is_some(), "oracle crossing missed: {:?} {:?} {:?} {:?}", p, p2, q, q2);
            }
            if let Some(t) = t {
                assert!((0.0..=1.0).contains(&t));
            }
        }
        assert!(crossings > 100, "test exercised too few crossings ({crossings})");
    }
}
