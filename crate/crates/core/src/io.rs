//! Text formats: trajectory CSV (`t,agent,x,y`) and metrics CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::metrics::{MetricSeries, STREAM_NAMES};
use crate::sim::{ArenaConfig, SwarmState, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,agent,x,y";

/// Writes one row per (frame, agent), frames then agents ascending.
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for frame in &traj.frames {
        for (agent, p) in frame.positions.iter().enumerate() {
            writeln!(out, "{},{},{:.12},{:.12}", frame.t, agent, p.x, p.y)?;
        }
    }
    out.flush()
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(traj, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a trajectory. Agent count and step count come from the data; the remaining arena
/// parameters come from `config`. Row numbers in errors are 1-based file lines.
pub fn read_trajectory<R: BufRead>(input: R, config: &ArenaConfig) -> Result<Trajectory> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let bad = |row: usize, reason: String| Error::Trajectory { row, reason };

    match lines.next() {
        Some((_, Ok(header))) if header.trim() == TRAJECTORY_HEADER => {}
        Some((row, Ok(header))) => {
            return Err(bad(
                row,
                format!("expected header `{TRAJECTORY_HEADER}`, found `{header}`"),
            ))
        }
        Some((row, Err(e))) => return Err(bad(row, e.to_string())),
        None => return Err(bad(1, "empty file".into())),
    }

    let mut frames: Vec<Vec<Vec2>> = Vec::new();
    let mut agents_per_frame: Option<usize> = None;
    let mut last_row = 1;
    for (row, line) in lines {
        let line = line.map_err(|e| bad(row, e.to_string()))?;
        last_row = row;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad(
                row,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| bad(row, format!("bad time step `{}`", fields[0])))?;
        let agent: usize = fields[1]
            .parse()
            .map_err(|_| bad(row, format!("bad agent index `{}`", fields[1])))?;
        let coord = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(row, format!("bad coordinate `{s}`")))
        };
        let p = Vec2::new(coord(fields[2])?, coord(fields[3])?);

        if t == frames.len() {
            // A new frame starts; the previous one must be complete.
            if let Some(prev) = frames.last() {
                let n = *agents_per_frame.get_or_insert(prev.len());
                if prev.len() != n {
                    return Err(bad(
                        row,
                        format!("frame {} has {} agents, expected {n}", t - 1, prev.len()),
                    ));
                }
            }
            frames.push(Vec::new());
        } else if t + 1 != frames.len() {
            return Err(bad(row, format!("time step {t} out of order")));
        }
        let frame = frames.last_mut().expect("frame pushed above");
        if agent != frame.len() {
            return Err(bad(
                row,
                format!(
                    "agent {agent} out of order in frame {t}, expected {}",
                    frame.len()
                ),
            ));
        }
        if agents_per_frame.is_some_and(|n| agent >= n) {
            return Err(bad(row, format!("frame {t} has more agents than frame 0")));
        }
        frame.push(p);
    }

    let Some(last) = frames.last() else {
        return Err(bad(last_row + 1, "no data rows".into()));
    };
    let n = agents_per_frame.unwrap_or(last.len());
    if last.len() != n {
        return Err(bad(
            last_row + 1,
            format!(
                "truncated: frame {} has {} of {n} agents",
                frames.len() - 1,
                last.len()
            ),
        ));
    }

    let origins = frames[0].clone();
    let states = frames
        .into_iter()
        .enumerate()
        .map(|(t, positions)| SwarmState {
            positions,
            origins: origins.clone(),
            t,
        })
        .collect::<Vec<_>>();
    let config = ArenaConfig {
        agent_count: n,
        steps: states.len() - 1,
        ..*config
    };
    Trajectory::new(config, states)
}

pub fn read_trajectory_file(path: &Path, config: &ArenaConfig) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(BufReader::new(file), config)
}

pub fn metrics_header() -> String {
    std::iter::once("t")
        .chain(STREAM_NAMES)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_metrics<W: Write>(series: &MetricSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", metrics_header())?;
    for t in 0..series.len() {
        write!(out, "{t}")?;
        for v in series.row(t) {
            write!(out, ",{v:.12}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_metrics_file(series: &MetricSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics(series, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
