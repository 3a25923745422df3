//! Brute-force metric oracle, written straight from the metric definitions with plain
//! tuples and loops so it shares no code with the library.

#![allow(dead_code)]

use rand::Rng;
use swarmbt::{ArenaConfig, SwarmState, Trajectory, Vec2};

pub type P = (f64, f64);

fn dist(a: P, b: P) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn com(p: &[P]) -> P {
    let n = p.len() as f64;
    (
        p.iter().map(|q| q.0).sum::<f64>() / n,
        p.iter().map(|q| q.1).sum::<f64>() / n,
    )
}

fn axis_mode(c: &[f64]) -> f64 {
    let mut best = (0usize, f64::INFINITY);
    for &l in c {
        let freq = c.iter().filter(|&&li| (l - li).abs() < 0.1).count();
        if freq > best.0 || (freq == best.0 && l < best.1) {
            best = (freq, l);
        }
    }
    best.1
}

/// Order: com_x, com_y, max_shift, mode_index, longest_path, max_radius, avg_local_density,
/// avg_nn_distance, beta_index.
pub fn frame_metrics(prev: Option<&[P]>, pos: &[P], origins: &[P], r: f64) -> [f64; 9] {
    let n = pos.len();
    let c = com(pos);

    let shift = match prev {
        None => 0.0,
        Some(prev) => (0..n).map(|i| dist(prev[i], pos[i])).fold(0.0, f64::max),
    };

    let xs: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pos.iter().map(|p| p.1).collect();
    let mode = (axis_mode(&xs), axis_mode(&ys));

    let path = (0..n).map(|i| dist(origins[i], pos[i])).fold(0.0, f64::max);
    let radius = pos.iter().map(|&p| dist(p, c)).fold(0.0, f64::max);

    let mut density = 0.0;
    let mut nn_sum = 0.0;
    for i in 0..n {
        let mut count = 0;
        let mut nn = f64::INFINITY;
        for j in 0..n {
            if i != j {
                let d = dist(pos[i], pos[j]);
                if d < r {
                    count += 1;
                }
                nn = nn.min(d);
            }
        }
        density += count as f64;
        nn_sum += nn;
    }

    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(dist(pos[i], pos[j]));
        }
    }
    let mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let edges = pairs.iter().filter(|&&d| d < mean).count();

    [
        c.0,
        c.1,
        shift,
        dist(c, mode),
        path,
        radius,
        density / n as f64,
        nn_sum / n as f64,
        edges as f64 / n as f64,
    ]
}

pub fn to_vec2(p: &[P]) -> Vec<Vec2> {
    p.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

pub fn state(t: usize, pos: &[P], origins: &[P]) -> SwarmState {
    SwarmState {
        positions: to_vec2(pos),
        origins: to_vec2(origins),
        t,
    }
}

/// Random 5-agent frames. Half are packed into a 1 m box so the short-range metrics
/// (density, mode window, beta edges) see non-trivial structure.
pub fn random_frame<R: Rng>(rng: &mut R, agents: usize) -> Vec<P> {
    let span = if rng.random::<bool>() { 1.0 } else { 8.0 };
    (0..agents)
        .map(|_| (rng.random_range(0.0..span), rng.random_range(0.0..span)))
        .collect()
}

/// A random-walk trajectory of `steps` moves of at most 1 m, kept inside the arena.
pub fn random_trajectory<R: Rng>(
    rng: &mut R,
    agents: usize,
    steps: usize,
) -> (Trajectory, Vec<Vec<P>>) {
    let config = ArenaConfig {
        agent_count: agents,
        steps,
        ..ArenaConfig::default()
    };
    let side = config.side_length;
    let first = random_frame(rng, agents);
    let mut frames = vec![first.clone()];
    for _ in 0..steps {
        let last = frames.last().unwrap();
        let next = last
            .iter()
            .map(|&(x, y)| {
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let s = rng.random_range(0.0..1.0);
                (
                    (x + s * a.cos()).clamp(0.0, side),
                    (y + s * a.sin()).clamp(0.0, side),
                )
            })
            .collect();
        frames.push(next);
    }
    let states = frames
        .iter()
        .enumerate()
        .map(|(t, f)| state(t, f, &first))
        .collect();
    (Trajectory::new(config, states).unwrap(), frames)
}
