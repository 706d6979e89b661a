//! Trajectory figures: deterministic SVG renderings of evaluation rollouts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use skillmaze_core::env::{read_trajectories, MazeSpec, TrajectoryRow};

use crate::config::{load_layout, read_run_dir_config, CONFIG_FILE};
use crate::palette::skill_color;
use crate::{err, Result};

/// Renders walls, the start marker, and one polyline per episode colored by
/// skill. Output bytes depend only on the inputs.
pub fn render_trajectories(spec: &MazeSpec, rows: &[TrajectoryRow]) -> String {
    let [x0, y0, x1, y1] = spec.bounds;
    let (w, h) = (x1 - x0, y1 - y0);
    let scale = w.max(h);
    let margin = 0.03 * scale;
    let (vw, vh) = (w + 2.0 * margin, h + 2.0 * margin);
    let height = (640.0 * vh / vw).round();

    let mut episodes: BTreeMap<u64, Vec<&TrajectoryRow>> = BTreeMap::new();
    for row in rows {
        episodes.entry(row.episode_id).or_default().push(row);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" \
         width=\"640\" height=\"{height}\">",
        x0 - margin,
        y0 - margin,
        vw,
        vh
    );
    // Flip the y axis so larger y is drawn upward.
    let _ = writeln!(out, "<g transform=\"translate(0,{}) scale(1,-1)\">", y0 + y1);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>"
    );
    let wall_width = 0.008 * scale;
    for wall in spec.boundary_walls().iter().chain(&spec.walls) {
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\" \
             stroke-width=\"{wall_width}\" stroke-linecap=\"round\"/>",
            wall.a[0], wall.a[1], wall.b[0], wall.b[1]
        );
    }
    let line_width = 0.004 * scale;
    for (_, mut steps) in episodes {
        steps.sort_by_key(|r| r.step);
        let skill = steps[0].skill;
        let mut points = format!("{},{}", spec.start[0], spec.start[1]);
        for row in &steps {
            let _ = write!(points, " {},{}", row.x, row.y);
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{line_width}\" \
             stroke-opacity=\"0.85\" points=\"{points}\"/>",
            skill_color(skill)
        );
    }
    let _ = writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#000000\"/>",
        spec.start[0],
        spec.start[1],
        0.012 * scale
    );
    out.push_str("</g>\n</svg>\n");
    out
}

/// Renders an SVG next to every `trajectories.csv` under a run directory
/// (the directory itself or its `seed-*` children). Returns the written
/// paths; errors when no trajectory file exists.
pub fn plot_directory(dir: &Path) -> Result<Vec<PathBuf>> {
    let config = if dir.join(CONFIG_FILE).is_file() {
        read_run_dir_config(dir)?
    } else if let Some(parent) = dir.parent().filter(|p| p.join(CONFIG_FILE).is_file()) {
        read_run_dir_config(parent)?
    } else {
        return Err(err(format!(
            "no {CONFIG_FILE} in {} or its parent; cannot recover the maze layout",
            dir.display()
        )));
    };
    let spec = load_layout(&config.layout)?;

    let mut csvs: Vec<PathBuf> = Vec::new();
    let direct = dir.join("trajectories.csv");
    if direct.is_file() {
        csvs.push(direct);
    }
    let mut children: Vec<PathBuf> = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() && path.join("trajectories.csv").is_file() {
                children.push(path.join("trajectories.csv"));
            }
        }
    }
    children.sort();
    csvs.extend(children);
    if csvs.is_empty() {
        return Err(err(format!("no trajectories.csv under {}", dir.display())));
    }

    let mut written = Vec::with_capacity(csvs.len());
    for csv in csvs {
        let rows = read_trajectories(&csv)?;
        let svg = render_trajectories(&spec, &rows);
        let path = csv.with_file_name("trajectories.svg");
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use skillmaze_core::env::builtin_layout;

    fn row(episode_id: u64, step: usize, skill: usize, x: f64, y: f64) -> TrajectoryRow {
        TrajectoryRow { episode_id, step, skill, x, y, ax: 0.0, ay: 0.0, reward: 0.0 }
    }

    #[test]
    fn empty_input_draws_walls_and_start_only() {
        let spec = builtin_layout("bottleneck").unwrap();
        let svg = render_trajectories(&spec, &[]);
        let lines = svg.matches("<line ").count();
        assert_eq!(lines, 4 + spec.walls.len(), "boundary plus interior walls");
        assert_eq!(svg.matches("<circle ").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn one_polyline_per_episode_with_skill_colors() {
        let spec = builtin_layout("bottleneck").unwrap();
        let mut rows = Vec::new();
        for ep in 0..6u64 {
            let skill = (ep % 3) as usize;
            for step in 0..5 {
                rows.push(row(ep, step, skill, 0.1 + 0.01 * step as f64, 0.5));
            }
        }
        let svg = render_trajectories(&spec, &rows);
        assert_eq!(svg.matches("<polyline").count(), 6);
        for skill in 0..3 {
            assert!(svg.contains(skill_color(skill)));
        }
        // Every polyline starts at the maze start.
        let first_point = format!("points=\"{},{}", spec.start[0], spec.start[1]);
        assert_eq!(svg.matches(first_point.as_str()).count(), 6);
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let spec = builtin_layout("tree").unwrap();
        let rows: Vec<TrajectoryRow> =
            (0..20).map(|i| row(i / 5, (i % 5) as usize, (i % 7) as usize, 0.3, 0.4)).collect();
        assert_eq!(render_trajectories(&spec, &rows), render_trajectories(&spec, &rows));
    }

    #[test]
    fn steps_are_ordered_within_an_episode_regardless_of_input_order() {
        let spec = builtin_layout("bottleneck").unwrap();
        let ordered = vec![row(0, 0, 0, 0.1, 0.1), row(0, 1, 0, 0.2, 0.2)];
        let shuffled = vec![ordered[1], ordered[0]];
        assert_eq!(
            render_trajectories(&spec, &ordered),
            render_trajectories(&spec, &shuffled)
        );
    }
}
