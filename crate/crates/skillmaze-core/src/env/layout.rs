//! Plain-text maze layout files.
//!
//! Format, one entry per line:
//! - `# ...` comment (blank lines are ignored)
//! - `bounds x0 y0 x1 y1`
//! - `start x y`
//! - `x1 y1 x2 y2` — one wall segment
//!
//! `bounds` and `start` must each appear exactly once.

use crate::{Error, Result};

use super::{MazeSpec, Point, Wall};

const BOTTLENECK: &str = include_str!("../../data/bottleneck.maze");
const TREE: &str = include_str!("../../data/tree.maze");

/// Returns one of the shipped layouts: `"bottleneck"` or `"tree"`.
pub fn builtin_layout(name: &str) -> Result<MazeSpec> {
    match name {
        "bottleneck" => parse_layout(BOTTLENECK),
        "tree" => parse_layout(TREE),
        _ => Err(Error::Layout(format!("unknown builtin layout '{name}' (try bottleneck or tree)"))),
    }
}

/// Parses layout text into a validated [`MazeSpec`].
pub fn parse_layout(text: &str) -> Result<MazeSpec> {
    let mut bounds: Option<[f64; 4]> = None;
    let mut start: Option<Point> = None;
    let mut walls = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Layout(format!("line {}: {} ({:?})", lineno + 1, msg, line));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "bounds" => {
                if bounds.is_some() {
                    return Err(err("duplicate bounds"));
                }
                let v = parse_floats(&fields[1..], 4).ok_or_else(|| err("expected bounds x0 y0 x1 y1"))?;
                bounds = Some([v[0], v[1], v[2], v[3]]);
            }
            "start" => {
                if start.is_some() {
                    return Err(err("duplicate start"));
                }
                let v = parse_floats(&fields[1..], 2).ok_or_else(|| err("expected start x y"))?;
                start = Some([v[0], v[1]]);
            }
            _ => {
                let v = parse_floats(&fields, 4).ok_or_else(|| err("expected wall x1 y1 x2 y2"))?;
                walls.push(Wall::new([v[0], v[1]], [v[2], v[3]]));
            }
        }
    }

    let bounds = bounds.ok_or_else(|| Error::Layout("missing bounds line".into()))?;
    let start = start.ok_or_else(|| Error::Layout("missing start line".into()))?;
    MazeSpec::new(bounds, start, walls)
}

/// Renders a spec back into layout text; `parse_layout` inverts it.
pub fn serialize_layout(spec: &MazeSpec) -> String {
    let mut out = String::new();
    let [x0, y0, x1, y1] = spec.bounds;
    out.push_str(&format!("bounds {} {} {} {}\n", x0, y0, x1, y1));
    out.push_str(&format!("start {} {}\n", spec.start[0], spec.start[1]));
    for w in &spec.walls {
        out.push_str(&format!("{} {} {} {}\n", w.a[0], w.a[1], w.b[0], w.b[1]));
    }
    out
}

fn parse_floats(fields: &[&str], n: usize) -> Option<Vec<f64>> {
    if fields.len() != n {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    for f in fields {
        out.push(f.parse::<f64>().ok().filter(|v| v.is_finite())?);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_layouts_parse_and_validate() {
        for name in ["bottleneck", "tree"] {
            let spec = builtin_layout(name).unwrap();
            assert!(!spec.walls.is_empty(), "{name} has walls");
            spec.validate().unwrap();
        }
        assert!(builtin_layout("spiral").is_err());
    }

    #[test]
    fn bottleneck_has_expected_geometry() {
        let spec = builtin_layout("bottleneck").unwrap();
        assert_eq!(spec.start, [0.25, 0.5]);
        assert_eq!(spec.bounds, [0.0, 0.0, 1.0, 1.0]);
        assert_eq!(spec.walls.len(), 2);
    }

    #[test]
    fn parse_serialize_round_trips() {
        for name in ["bottleneck", "tree"] {
            let spec = builtin_layout(name).unwrap();
            let text = serialize_layout(&spec);
            let reparsed = parse_layout(&text).unwrap();
            assert_eq!(spec, reparsed);
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a maze\n\nbounds 0 0 2 1\n  # indented comment\nstart 1 0.5\n0.5 0 0.5 0.8\n";
        let spec = parse_layout(text).unwrap();
        assert_eq!(spec.bounds, [0.0, 0.0, 2.0, 1.0]);
        assert_eq!(spec.walls.len(), 1);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_layout("bounds 0 0 1 1\nstart 0.5 0.5\n0.1 0.2 0.3\n").is_err());
        assert!(parse_layout("bounds 0 0 1 1\nstart 0.5 0.5\n0.1 0.2 0.3 fish\n").is_err());
        assert!(parse_layout("bounds 0 0 1 1\nstart 0.5 0.5\nbounds 0 0 1 1\n").is_err());
        assert!(parse_layout("start 0.5 0.5\n").is_err(), "missing bounds");
        assert!(parse_layout("bounds 0 0 1 1\n").is_err(), "missing start");
        assert!(parse_layout("bounds 0 0 1 1\nstart 2 0.5\n").is_err(), "start outside");
    }
}
