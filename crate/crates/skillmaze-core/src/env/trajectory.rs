//! Trajectory CSV files.
//!
//! Schema: `episode_id,step,skill,x,y,ax,ay,reward`, one row per step, where
//! `(x, y)` is the arrival position of the step and `(ax, ay)` the action
//! taken. Floats are written in shortest round-trippable form, so files are
//! byte-deterministic and parse back exactly.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

use super::Transition;

/// One parsed CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub episode_id: u64,
    pub step: usize,
    pub skill: usize,
    pub x: f64,
    pub y: f64,
    pub ax: f64,
    pub ay: f64,
    pub reward: f64,
}

const HEADER: &str = "episode_id,step,skill,x,y,ax,ay,reward";

/// Writes transitions to a CSV file.
pub fn write_trajectories(path: &Path, transitions: &[Transition]) -> Result<()> {
    let mut out = String::with_capacity(transitions.len() * 48 + 64);
    out.push_str(HEADER);
    out.push('\n');
    for t in transitions {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            t.episode, t.step, t.skill, t.next_state[0], t.next_state[1], t.action[0], t.action[1], t.reward
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a trajectory CSV back into rows.
pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(Error::Parse(format!("bad trajectory header: {:?}", other))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Parse(format!("trajectory row {}: {} fields", i + 2, f.len())));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("trajectory row {}: bad float {:?}", i + 2, s)))
        };
        rows.push(TrajectoryRow {
            episode_id: f[0].parse().map_err(|_| Error::Parse(format!("row {}: bad episode", i + 2)))?,
            step: f[1].parse().map_err(|_| Error::Parse(format!("row {}: bad step", i + 2)))?,
            skill: f[2].parse().map_err(|_| Error::Parse(format!("row {}: bad skill", i + 2)))?,
            x: parse_f(f[3])?,
            y: parse_f(f[4])?,
            ax: parse_f(f[5])?,
            ay: parse_f(f[6])?,
            reward: parse_f(f[7])?,
        });
    }
    Ok(rows)
}
