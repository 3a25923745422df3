//! Swarm metrics: nine per-frame time series (center of mass split into x and y) computed
//! from positions only, plus min/max normalization against recorded bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sim::{SwarmState, Trajectory};

pub const STREAM_COUNT: usize = 9;

pub const STREAM_NAMES: [&str; STREAM_COUNT] = [
    "com_x",
    "com_y",
    "max_shift",
    "mode_index",
    "longest_path",
    "max_radius",
    "avg_local_density",
    "avg_nn_distance",
    "beta_index",
];

/// Axis distance under which two coordinates count toward each other's frequency.
pub const MODE_WINDOW: f64 = 0.1;

/// Which agent pairs are linked in the proximity graph behind the beta index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BetaEdgeRule {
    /// Linked when closer than the mean pairwise distance.
    #[default]
    CloserThanMean,
    /// Linked when farther than the mean pairwise distance.
    FartherThanMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Radius for the local-density count.
    pub density_radius: f64,
    pub beta_rule: BetaEdgeRule,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            density_radius: 0.5,
            beta_rule: BetaEdgeRule::CloserThanMean,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.density_radius.is_finite() && self.density_radius > 0.0) {
            return Err(Error::invalid("density radius must be positive"));
        }
        Ok(())
    }
}

/// One value per frame for each of the nine streams.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSeries {
    pub com_x: Vec<f64>,
    pub com_y: Vec<f64>,
    pub max_shift: Vec<f64>,
    pub mode_index: Vec<f64>,
    pub longest_path: Vec<f64>,
    pub max_radius: Vec<f64>,
    pub avg_local_density: Vec<f64>,
    pub avg_nn_distance: Vec<f64>,
    pub beta_index: Vec<f64>,
}

impl MetricSeries {
    /// Streams in [`STREAM_NAMES`] order.
    pub fn streams(&self) -> [&[f64]; STREAM_COUNT] {
        [
            &self.com_x,
            &self.com_y,
            &self.max_shift,
            &self.mode_index,
            &self.longest_path,
            &self.max_radius,
            &self.avg_local_density,
            &self.avg_nn_distance,
            &self.beta_index,
        ]
    }

    fn streams_mut(&mut self) -> [&mut Vec<f64>; STREAM_COUNT] {
        [
            &mut self.com_x,
            &mut self.com_y,
            &mut self.max_shift,
            &mut self.mode_index,
            &mut self.longest_path,
            &mut self.max_radius,
            &mut self.avg_local_density,
            &mut self.avg_nn_distance,
            &mut self.beta_index,
        ]
    }

    pub fn from_streams(streams: [Vec<f64>; STREAM_COUNT]) -> Result<Self> {
        let len = streams[0].len();
        if let Some(bad) = streams.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        let [com_x, com_y, max_shift, mode_index, longest_path, max_radius, avg_local_density, avg_nn_distance, beta_index] =
            streams;
        Ok(Self {
            com_x,
            com_y,
            max_shift,
            mode_index,
            longest_path,
            max_radius,
            avg_local_density,
            avg_nn_distance,
            beta_index,
        })
    }

    /// Number of time steps (frames) per stream.
    pub fn len(&self) -> usize {
        self.com_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.com_x.is_empty()
    }

    /// Per-frame row in stream order.
    pub fn row(&self, t: usize) -> [f64; STREAM_COUNT] {
        self.streams().map(|s| s[t])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBounds {
    pub min: [f64; STREAM_COUNT],
    pub max: [f64; STREAM_COUNT],
}

impl MetricBounds {
    /// Per-stream extremes over every value of every series.
    pub fn from_series<'a>(series: impl IntoIterator<Item = &'a MetricSeries>) -> Result<Self> {
        let mut bounds = MetricBounds {
            min: [f64::INFINITY; STREAM_COUNT],
            max: [f64::NEG_INFINITY; STREAM_COUNT],
        };
        let mut seen = false;
        for s in series {
            for (k, stream) in s.streams().into_iter().enumerate() {
                for &v in stream {
                    bounds.min[k] = bounds.min[k].min(v);
                    bounds.max[k] = bounds.max[k].max(v);
                    seen = true;
                }
            }
        }
        if !seen {
            return Err(Error::invalid("bounds need at least one metric value"));
        }
        Ok(bounds)
    }

    pub fn is_valid(&self) -> bool {
        self.min
            .iter()
            .zip(&self.max)
            .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi)
    }
}

/// Maps each stream through `(v - min) / (max - min)`; a degenerate range maps to 0.
/// Values outside the bounds are not clipped.
pub fn normalize(series: &MetricSeries, bounds: &MetricBounds) -> MetricSeries {
    let mut out = series.clone();
    for (k, stream) in out.streams_mut().into_iter().enumerate() {
        let (lo, hi) = (bounds.min[k], bounds.max[k]);
        let span = hi - lo;
        for v in stream.iter_mut() {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
    out
}

fn com(positions: &[Vec2]) -> Vec2 {
    let sum = positions.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
    sum * (1.0 / positions.len() as f64)
}

pub fn center_of_mass(frame: &SwarmState) -> Vec2 {
    com(&frame.positions)
}

/// Largest single-agent displacement between two frames.
pub fn max_shift(prev: &SwarmState, curr: &SwarmState) -> Result<f64> {
    if prev.agent_count() != curr.agent_count() {
        return Err(Error::LengthMismatch {
            expected: prev.agent_count(),
            found: curr.agent_count(),
        });
    }
    Ok(prev
        .positions
        .iter()
        .zip(&curr.positions)
        .map(|(a, b)| a.distance(*b))
        .fold(0.0, f64::max))
}

/// Most frequent coordinate on one axis: each agent coordinate scored by how many agents lie
/// strictly within [`MODE_WINDOW`] of it (itself included); ties go to the smallest value.
fn axis_mode(coords: &[f64]) -> f64 {
    let mut best = (0usize, f64::INFINITY);
    for &l in coords {
        let freq = coords
            .iter()
            .filter(|&&li| (l - li).abs() < MODE_WINDOW)
            .count();
        if freq > best.0 || (freq == best.0 && l < best.1) {
            best = (freq, l);
        }
    }
    best.1
}

/// The per-axis mode point.
pub fn swarm_mode(frame: &SwarmState) -> Vec2 {
    let xs: Vec<f64> = frame.positions.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = frame.positions.iter().map(|p| p.y).collect();
    Vec2::new(axis_mode(&xs), axis_mode(&ys))
}

/// Distance from the center of mass to the swarm mode.
pub fn mode_index(frame: &SwarmState) -> f64 {
    center_of_mass(frame).distance(swarm_mode(frame))
}

/// Largest distance any agent has travelled from its initial position.
pub fn longest_path(frame: &SwarmState) -> f64 {
    frame
        .positions
        .iter()
        .zip(&frame.origins)
        .map(|(p, o)| p.distance(*o))
        .fold(0.0, f64::max)
}

/// Largest agent distance from the center of mass.
pub fn max_radius(frame: &SwarmState) -> f64 {
    let c = center_of_mass(frame);
    frame
        .positions
        .iter()
        .map(|p| p.distance(c))
        .fold(0.0, f64::max)
}

/// Mean count of other agents strictly within `radius`.
pub fn avg_local_density(frame: &SwarmState, radius: f64) -> f64 {
    let p = &frame.positions;
    let r_sq = radius * radius;
    let mut close_pairs = 0usize;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if (p[i] - p[j]).norm_sq() < r_sq {
                close_pairs += 1;
            }
        }
    }
    2.0 * close_pairs as f64 / p.len() as f64
}

fn require_pairs(frame: &SwarmState) -> Result<()> {
    if frame.agent_count() < 2 {
        return Err(Error::invalid("metric needs at least two agents"));
    }
    Ok(())
}

/// Mean distance to the nearest other agent.
pub fn avg_nn_distance(frame: &SwarmState) -> Result<f64> {
    require_pairs(frame)?;
    let p = &frame.positions;
    let mut nearest = vec![f64::INFINITY; p.len()];
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let d = p[i].distance(p[j]);
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    Ok(nearest.iter().sum::<f64>() / p.len() as f64)
}

/// Edges per node of the proximity graph whose edges compare pair distance with the mean
/// pairwise distance (strictly).
pub fn beta_index(frame: &SwarmState, rule: BetaEdgeRule) -> Result<f64> {
    require_pairs(frame)?;
    let p = &frame.positions;
    let mut dists = Vec::with_capacity(p.len() * (p.len() - 1) / 2);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            dists.push(p[i].distance(p[j]));
        }
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let edges = dists
        .iter()
        .filter(|&&d| match rule {
            BetaEdgeRule::CloserThanMean => d < mean,
            BetaEdgeRule::FartherThanMean => d > mean,
        })
        .count();
    Ok(edges as f64 / p.len() as f64)
}

/// All nine streams for every frame; `max_shift` is 0 at the first frame.
pub fn compute_metrics(traj: &Trajectory, params: &MetricParams) -> Result<MetricSeries> {
    params.validate()?;
    let mut out = MetricSeries::default();
    let mut prev: Option<&SwarmState> = None;
    for frame in &traj.frames {
        let c = center_of_mass(frame);
        out.com_x.push(c.x);
        out.com_y.push(c.y);
        out.max_shift.push(match prev {
            Some(p) => max_shift(p, frame)?,
            None => 0.0,
        });
        out.mode_index.push(mode_index(frame));
        out.longest_path.push(longest_path(frame));
        out.max_radius.push(max_radius(frame));
        out.avg_local_density
            .push(avg_local_density(frame, params.density_radius));
        out.avg_nn_distance.push(avg_nn_distance(frame)?);
        out.beta_index.push(beta_index(frame, params.beta_rule)?);
        prev = Some(frame);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{BehaviorTree, LeafAction};
    use crate::rng::seeded;
    use crate::sim::{init_state, simulate, ArenaConfig};

    fn frame(points: &[(f64, f64)]) -> SwarmState {
        SwarmState::initial(points.iter().map(|&(x, y)| Vec2::new(x, y)).collect())
    }

    fn approx(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn center_of_mass_examples() {
        assert_eq!(
            center_of_mass(&frame(&[(0.0, 0.0), (2.0, 0.0)])),
            Vec2::new(1.0, 0.0)
        );
        assert_eq!(center_of_mass(&frame(&[(3.0, 5.0)])), Vec2::new(3.0, 5.0));
        let square = frame(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(center_of_mass(&square), Vec2::new(0.5, 0.5));
    }

    #[test]
    fn max_shift_examples() {
        let a = frame(&[(1.0, 1.0), (2.0, 2.0)]);
        approx(max_shift(&a, &a).unwrap(), 0.0);
        let b = frame(&[(1.3, 1.4), (2.0, 2.0)]);
        approx(max_shift(&a, &b).unwrap(), 0.5);
        let c = frame(&[(1.0, 1.0)]);
        assert!(max_shift(&a, &c).is_err());
    }

    #[test]
    fn max_shift_at_full_speed() {
        let cfg = ArenaConfig::default();
        let init = init_state(&cfg, &mut seeded(2)).unwrap();
        let t = BehaviorTree::new(vec![LeafAction::SouthEast]).unwrap();
        let cfg1 = ArenaConfig { steps: 1, ..cfg };
        let traj = simulate(&t, &init, &cfg1, &mut seeded(0)).unwrap();
        // Agents near the south or east wall get clamped; the rest move a full 1 m.
        let shift = max_shift(&traj.frames[0], &traj.frames[1]).unwrap();
        approx(shift, 1.0);
    }

    #[test]
    fn mode_examples() {
        let same = frame(&[(2.0, 3.0), (2.0, 3.0), (2.0, 3.0)]);
        approx(mode_index(&same), 0.0);
        assert_eq!(axis_mode(&[0.0, 0.05, 1.0]), 0.0);
        assert_eq!(axis_mode(&[1.0, 0.05, 0.0]), 0.0);
        let pair = frame(&[(0.0, 0.0), (2.0, 0.0)]);
        assert_eq!(swarm_mode(&pair), Vec2::new(0.0, 0.0));
        approx(mode_index(&pair), 1.0);
    }

    #[test]
    fn mode_window_is_strict() {
        assert_eq!(axis_mode(&[0.5, 0.7, 0.7]), 0.7);
        // 0.125 apart is outside the window; ties go to the smaller coordinate.
        assert_eq!(axis_mode(&[0.25, 0.375, 0.375, 0.5]), 0.375);
        assert_eq!(axis_mode(&[1.0, 1.125]), 1.0);
    }

    #[test]
    fn longest_path_examples() {
        let mut f = frame(&[(1.0, 1.0), (2.0, 2.0)]);
        approx(longest_path(&f), 0.0);
        f.positions[1] = Vec2::new(5.0, 6.0);
        approx(longest_path(&f), 5.0);
    }

    #[test]
    fn longest_path_grows_until_the_wall() {
        let cfg = ArenaConfig::default();
        let init = init_state(&cfg, &mut seeded(6)).unwrap();
        let t = BehaviorTree::new(vec![LeafAction::NorthEast]).unwrap();
        let traj = simulate(&t, &init, &cfg, &mut seeded(0)).unwrap();
        let series = compute_metrics(&traj, &MetricParams::default()).unwrap();
        let lp = &series.longest_path;
        for w in lp.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(lp[1] > lp[0]);
        // Everyone ends up in the corner, so the tail is flat.
        assert_eq!(lp[99], lp[100]);
    }

    #[test]
    fn radius_density_nn_examples() {
        approx(max_radius(&frame(&[(0.0, 0.0), (2.0, 0.0)])), 1.0);
        approx(max_radius(&frame(&[(1.0, 1.0), (1.0, 1.0)])), 0.0);
        let square = frame(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        approx(max_radius(&square), 0.5f64.sqrt());

        approx(
            avg_local_density(&frame(&[(0.0, 0.0), (2.0, 0.0)]), 0.5),
            0.0,
        );
        approx(
            avg_local_density(&frame(&[(0.0, 0.0), (0.3, 0.0)]), 0.5),
            1.0,
        );
        approx(avg_local_density(&frame(&[(1.0, 1.0); 3]), 0.5), 2.0);

        approx(
            avg_nn_distance(&frame(&[(0.0, 0.0), (2.0, 0.0)])).unwrap(),
            2.0,
        );
        approx(
            avg_nn_distance(&frame(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)])).unwrap(),
            4.0 / 3.0,
        );
        approx(
            avg_nn_distance(&frame(&[(1.0, 1.0), (1.0, 1.0)])).unwrap(),
            0.0,
        );
        assert!(avg_nn_distance(&frame(&[(1.0, 1.0)])).is_err());
    }

    #[test]
    fn beta_index_examples() {
        let rule = BetaEdgeRule::CloserThanMean;
        approx(
            beta_index(&frame(&[(0.0, 0.0), (3.0, 0.0)]), rule).unwrap(),
            0.0,
        );
        let three = frame(&[(0.0, 0.0), (0.1, 0.0), (5.0, 0.0)]);
        approx(beta_index(&three, rule).unwrap(), 1.0 / 3.0);
        approx(
            beta_index(&three, BetaEdgeRule::FartherThanMean).unwrap(),
            2.0 / 3.0,
        );
        assert!(beta_index(&frame(&[(0.0, 0.0)]), rule).is_err());
    }

    #[test]
    fn beta_index_near_coincident_cluster() {
        // n agents packed tightly plus one far outlier: every packed pair is closer than the
        // mean, every outlier pair is farther.
        let n = 10;
        let mut pts: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + 1e-6 * i as f64, 1.0)).collect();
        pts.push((7.0, 7.0));
        let f = frame(&pts);
        let brute_edges = n * (n - 1) / 2;
        approx(
            beta_index(&f, BetaEdgeRule::CloserThanMean).unwrap(),
            brute_edges as f64 / (n + 1) as f64,
        );
    }

    #[test]
    fn normalize_examples() {
        let mut s =
            MetricSeries::from_streams(std::array::from_fn(|_| vec![0.5, 2.0, 0.0])).unwrap();
        s.beta_index = vec![3.0, 3.0, 3.0];
        let mut bounds = MetricBounds {
            min: [0.0; STREAM_COUNT],
            max: [2.0; STREAM_COUNT],
        };
        bounds.min[8] = 3.0;
        bounds.max[8] = 3.0;
        let n = normalize(&s, &bounds);
        assert_eq!(n.com_x, vec![0.25, 1.0, 0.0]);
        assert_eq!(n.beta_index, vec![0.0, 0.0, 0.0]);
        // Out-of-range values are not clipped.
        bounds.max[0] = 1.0;
        assert_eq!(normalize(&s, &bounds).com_x, vec![0.5, 2.0, 0.0]);
    }

    #[test]
    fn bounds_cover_all_series() {
        let a = MetricSeries::from_streams(std::array::from_fn(|k| vec![k as f64, 1.0])).unwrap();
        let b = MetricSeries::from_streams(std::array::from_fn(|_| vec![-1.0, 4.0])).unwrap();
        let bounds = MetricBounds::from_series([&a, &b]).unwrap();
        assert!(bounds.is_valid());
        assert_eq!(bounds.min[0], -1.0);
        assert_eq!(bounds.max[8], 8.0);
        assert!(MetricBounds::from_series(std::iter::empty()).is_err());
    }

    #[test]
    fn from_streams_checks_lengths() {
        let mut streams: [Vec<f64>; STREAM_COUNT] = std::array::from_fn(|_| vec![0.0; 3]);
        streams[4].pop();
        assert!(MetricSeries::from_streams(streams).is_err());
    }

    #[test]
    fn stationary_swarm_streams() {
        let cfg = ArenaConfig {
            steps: 10,
            ..Default::default()
        };
        let init = init_state(&cfg, &mut seeded(1)).unwrap();
        // Sparse swarm plus aggregation: nobody has a neighbor, nobody moves.
        let t = BehaviorTree::new(vec![LeafAction::Aggregation]).unwrap();
        let traj = simulate(&t, &init, &cfg, &mut seeded(0)).unwrap();
        let s = compute_metrics(&traj, &MetricParams::default()).unwrap();
        assert_eq!(s.len(), 11);
        for stream in s.streams() {
            assert_eq!(stream.len(), 11);
        }
        assert!(s.max_shift.iter().all(|&v| v == 0.0));
        assert!(s.longest_path.iter().all(|&v| v == 0.0));
    }
}
