//! Deterministic 2D swarm simulator.
//!
//! Agents are points in a square arena. Each time step every agent ticks the shared behavior
//! tree against the previous frame (synchronous update), the summed leaf forces are scaled
//! to the agent speed, and positions are advanced by one Euler step and clamped to the walls.
//! Bodies may overlap; there is no collision physics.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bt::{BehaviorTree, LeafAction};
use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArenaConfig {
    pub side_length: f64,
    pub agent_count: usize,
    pub agent_radius: f64,
    pub sensing_range: f64,
    pub speed: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            side_length: 8.0,
            agent_count: 20,
            agent_radius: 0.25,
            sensing_range: 0.5,
            speed: 1.0,
            dt: 1.0,
            steps: 100,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("side_length", self.side_length),
            ("agent_radius", self.agent_radius),
            ("sensing_range", self.sensing_range),
            ("speed", self.speed),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.agent_count == 0 {
            return Err(Error::invalid("agent_count must be at least 1"));
        }
        if self.sensing_range < self.agent_radius {
            return Err(Error::invalid(
                "sensing_range must be at least agent_radius",
            ));
        }
        if 2.0 * self.agent_radius > self.side_length {
            return Err(Error::invalid("agent diameter exceeds the arena side"));
        }
        Ok(())
    }

    /// Upper bound on one agent's displacement per step.
    pub fn max_step(&self) -> f64 {
        self.speed * self.dt
    }
}

/// Positions of every agent at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Vec2>,
    /// Initial positions, the reference for distance travelled.
    pub origins: Vec<Vec2>,
    pub t: usize,
}

impl SwarmState {
    /// A frame at t = 0 whose origins are its own positions.
    pub fn initial(positions: Vec<Vec2>) -> Self {
        Self {
            origins: positions.clone(),
            positions,
            t: 0,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.positions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: ArenaConfig,
    pub frames: Vec<SwarmState>,
}

impl Trajectory {
    /// Checks frame indexing and a constant agent count.
    pub fn new(config: ArenaConfig, frames: Vec<SwarmState>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::invalid("a trajectory needs at least one frame"));
        };
        let n = first.agent_count();
        if n == 0 {
            return Err(Error::invalid("a trajectory needs at least one agent"));
        }
        for (t, frame) in frames.iter().enumerate() {
            if frame.t != t {
                return Err(Error::invalid(format!(
                    "frame {t} is labelled t={}",
                    frame.t
                )));
            }
            if frame.agent_count() != n || frame.origins.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: frame.agent_count(),
                });
            }
        }
        Ok(Self { config, frames })
    }

    pub fn agent_count(&self) -> usize {
        self.frames[0].agent_count()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn initial(&self) -> &SwarmState {
        &self.frames[0]
    }
}

/// Uniform placement with no two centers closer than one body diameter.
pub fn init_state<R: Rng + ?Sized>(config: &ArenaConfig, rng: &mut R) -> Result<SwarmState> {
    const ATTEMPTS_PER_AGENT: usize = 10_000;
    config.validate()?;
    let lo = config.agent_radius;
    let hi = config.side_length - config.agent_radius;
    let min_gap_sq = (2.0 * config.agent_radius).powi(2);
    let mut positions: Vec<Vec2> = Vec::with_capacity(config.agent_count);
    for _ in 0..config.agent_count {
        let placed = (0..ATTEMPTS_PER_AGENT).find_map(|_| {
            let p = Vec2::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi));
            positions
                .iter()
                .all(|q| (p - *q).norm_sq() >= min_gap_sq)
                .then_some(p)
        });
        match placed {
            Some(p) => positions.push(p),
            None => {
                return Err(Error::Capacity {
                    agents: config.agent_count,
                    side: config.side_length,
                    attempts: ATTEMPTS_PER_AGENT,
                })
            }
        }
    }
    Ok(SwarmState::initial(positions))
}

/// Other agents strictly inside the sensing range, sorted by position so every reduction
/// over them is independent of agent labelling.
fn neighbors(agent: usize, state: &SwarmState, config: &ArenaConfig) -> Vec<Vec2> {
    let me = state.positions[agent];
    let range_sq = config.sensing_range * config.sensing_range;
    let mut found: Vec<Vec2> = state
        .positions
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != agent && (*p - me).norm_sq() < range_sq)
        .map(|(_, p)| *p)
        .collect();
    found.sort_by(Vec2::total_cmp);
    found
}

fn aggregation(me: Vec2, around: &[Vec2]) -> Vec2 {
    if around.is_empty() {
        return Vec2::ZERO;
    }
    let sum = around.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
    let centroid = sum * (1.0 / around.len() as f64);
    (centroid - me).normalized_or_zero()
}

/// Direction contributed by one leaf. `random_angle` is consumed only by RandomMotion.
pub(crate) fn leaf_direction_with(
    action: LeafAction,
    agent: usize,
    state: &SwarmState,
    config: &ArenaConfig,
    random_angle: f64,
) -> Vec2 {
    let me = state.positions[agent];
    match action {
        LeafAction::NorthEast => Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        LeafAction::NorthWest => Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        LeafAction::SouthEast => Vec2::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        LeafAction::SouthWest => Vec2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        LeafAction::RandomMotion => Vec2::new(random_angle.cos(), random_angle.sin()),
        LeafAction::Aggregation => aggregation(me, &neighbors(agent, state, config)),
        LeafAction::Dispersion => -aggregation(me, &neighbors(agent, state, config)),
        LeafAction::Separation => {
            // Unit repulsions weighted by 1/d^2; coincident neighbors give no direction.
            neighbors(agent, state, config)
                .iter()
                .filter_map(|p| {
                    let away = me - *p;
                    let d = away.norm();
                    (d > 0.0).then(|| away * (1.0 / (d * d * d)))
                })
                .fold(Vec2::ZERO, |acc, v| acc + v)
                .normalized_or_zero()
        }
        LeafAction::Clustering => neighbors(agent, state, config)
            .iter()
            .min_by(|a, b| (**a - me).norm_sq().total_cmp(&(**b - me).norm_sq()))
            .map(|nearest| (*nearest - me).normalized_or_zero())
            .unwrap_or(Vec2::ZERO),
    }
}

/// Unit (or zero) direction of one leaf for one agent.
pub fn leaf_direction<R: Rng + ?Sized>(
    action: LeafAction,
    agent: usize,
    state: &SwarmState,
    config: &ArenaConfig,
    rng: &mut R,
) -> Vec2 {
    let angle = if action.is_stochastic() {
        draw_angle(rng)
    } else {
        0.0
    };
    leaf_direction_with(action, agent, state, config, angle)
}

fn draw_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

fn tick_with(
    tree: &BehaviorTree,
    agent: usize,
    state: &SwarmState,
    config: &ArenaConfig,
    angles: &[f64],
) -> Vec2 {
    let mut angles = angles.iter();
    let force = tree.leaves().iter().fold(Vec2::ZERO, |acc, &leaf| {
        let angle = if leaf.is_stochastic() {
            *angles.next().expect("one pre-drawn angle per random leaf")
        } else {
            0.0
        };
        acc + leaf_direction_with(leaf, agent, state, config, angle)
    });
    force.normalized_or_zero() * config.speed
}

/// Velocity of one agent: leaves ticked left to right, forces summed and scaled to `speed`.
/// A zero sum leaves the agent at rest.
pub fn tick<R: Rng + ?Sized>(
    tree: &BehaviorTree,
    agent: usize,
    state: &SwarmState,
    config: &ArenaConfig,
    rng: &mut R,
) -> Vec2 {
    let angles: Vec<f64> = tree
        .leaves()
        .iter()
        .filter(|l| l.is_stochastic())
        .map(|_| draw_angle(rng))
        .collect();
    tick_with(tree, agent, state, config, &angles)
}

/// One synchronous update. Random angles are drawn up front in agent-index order, then every
/// velocity is computed from the same input frame.
pub fn step<R: Rng + ?Sized>(
    state: &SwarmState,
    tree: &BehaviorTree,
    config: &ArenaConfig,
    rng: &mut R,
) -> SwarmState {
    let random_leaves = tree.leaves().iter().filter(|l| l.is_stochastic()).count();
    let n = state.agent_count();
    let angles: Vec<f64> = (0..n * random_leaves).map(|_| draw_angle(rng)).collect();
    let positions = (0..n)
        .map(|i| {
            let drawn = &angles[i * random_leaves..(i + 1) * random_leaves];
            let v = tick_with(tree, i, state, config, drawn);
            (state.positions[i] + v * config.dt).clamp(0.0, config.side_length)
        })
        .collect();
    SwarmState {
        positions,
        origins: state.origins.clone(),
        t: state.t + 1,
    }
}

/// `config.steps` updates from `init`; the result holds `steps + 1` frames.
pub fn simulate<R: Rng + ?Sized>(
    tree: &BehaviorTree,
    init: &SwarmState,
    config: &ArenaConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    config.validate()?;
    let mut first = init.clone();
    first.t = 0;
    let mut frames = Vec::with_capacity(config.steps + 1);
    frames.push(first);
    for _ in 0..config.steps {
        let next = step(frames.last().expect("non-empty"), tree, config, rng);
        frames.push(next);
    }
    Trajectory::new(*config, frames)
}
