//! Controller extraction by genetic programming.
//!
//! Candidates are scored by the Euclidean distance between their normalized metric series and
//! the observation's. Normalization bounds are fixed once, from the observation and the
//! whole first generation, and reused for the rest of the run.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bt::{self, BehaviorTree};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricBounds, MetricParams, MetricSeries};
use crate::rng::{self, SimRng};
use crate::sim::{simulate, ArenaConfig, Trajectory};

const TAG_INITIAL: u64 = 1;
const TAG_BREED: u64 = 2;
const TAG_SIMULATE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elitism_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub leaf_count: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 30,
            elitism_size: 3,
            tournament_size: 3,
            crossover_rate: 0.5,
            mutation_rate: 0.3,
            leaf_count: 3,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::invalid("population_size must be at least 1"));
        }
        if self.elitism_size >= self.population_size {
            return Err(Error::invalid("elitism_size must be below population_size"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::invalid(
                "tournament_size must be in 1..=population_size",
            ));
        }
        if self.generations == 0 {
            return Err(Error::invalid("generations must be at least 1"));
        }
        if self.leaf_count == 0 {
            return Err(Error::invalid("leaf_count must be at least 1"));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid(format!(
                    "{name} must be in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_tree: BehaviorTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub best_tree: BehaviorTree,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub bounds: MetricBounds,
}

/// Euclidean distance between the two series after normalizing both with `bounds`, taken
/// over every (stream, time step) entry.
pub fn fitness(
    original: &MetricSeries,
    assessed: &MetricSeries,
    bounds: &MetricBounds,
) -> Result<f64> {
    if original.len() != assessed.len() {
        return Err(Error::LengthMismatch {
            expected: original.len(),
            found: assessed.len(),
        });
    }
    let mut sum_sq = 0.0;
    for (k, (a, b)) in original
        .streams()
        .into_iter()
        .zip(assessed.streams())
        .enumerate()
    {
        let span = bounds.max[k] - bounds.min[k];
        if span <= 0.0 {
            continue;
        }
        for (x, y) in a.iter().zip(b) {
            let d = (x - y) / span;
            sum_sq += d * d;
        }
    }
    Ok(sum_sq.sqrt())
}

/// The observed behavior a population is scored against.
#[derive(Debug, Clone)]
pub struct Observation {
    trajectory: Trajectory,
    sim_config: ArenaConfig,
    series: MetricSeries,
    params: MetricParams,
}

impl Observation {
    pub fn new(trajectory: Trajectory, params: MetricParams) -> Result<Self> {
        if trajectory.frame_count() < 2 {
            return Err(Error::invalid("an observation needs at least two frames"));
        }
        if trajectory.agent_count() < 2 {
            return Err(Error::invalid("an observation needs at least two agents"));
        }
        // Candidates replay the observation's horizon and swarm size.
        let sim_config = ArenaConfig {
            agent_count: trajectory.agent_count(),
            steps: trajectory.frame_count() - 1,
            ..trajectory.config
        };
        sim_config.validate()?;
        let series = compute_metrics(&trajectory, &params)?;
        Ok(Self {
            trajectory,
            sim_config,
            series,
            params,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn series(&self) -> &MetricSeries {
        &self.series
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    /// Simulates `tree` from the observed initial frame and measures it.
    pub fn assess(&self, tree: &BehaviorTree, rng: &mut SimRng) -> Result<MetricSeries> {
        let run = simulate(tree, self.trajectory.initial(), &self.sim_config, rng)
            .and_then(|traj| compute_metrics(&traj, &self.params));
        run.map_err(|e| Error::Individual {
            tree: tree.serialize(),
            source: Box::new(e),
        })
    }

    /// Metric series of every tree, each simulated on its own stream `(seed, generation, index)`.
    fn assess_all(
        &self,
        trees: &[BehaviorTree],
        seed: u64,
        generation: usize,
        first_index: usize,
    ) -> Result<Vec<MetricSeries>> {
        trees
            .par_iter()
            .enumerate()
            .map(|(i, tree)| {
                let mut rng = rng::stream(
                    seed,
                    &[TAG_SIMULATE, generation as u64, (first_index + i) as u64],
                );
                self.assess(tree, &mut rng)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: Vec<f64>,
    pub bounds: MetricBounds,
}

/// Scores a population against the observation. Without `bounds` (the first generation) the
/// bounds are first fixed from the observation plus every assessed series, then used to score.
pub fn evaluate_population(
    trees: &[BehaviorTree],
    observation: &Observation,
    bounds: Option<&MetricBounds>,
    seed: u64,
    generation: usize,
) -> Result<Evaluation> {
    let series = observation.assess_all(trees, seed, generation, 0)?;
    let bounds = match bounds {
        Some(b) => *b,
        None => MetricBounds::from_series(std::iter::once(observation.series()).chain(&series))?,
    };
    let fitness = series
        .iter()
        .map(|s| fitness(observation.series(), s, &bounds))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { fitness, bounds })
}

/// Index of the fittest of `k` uniform draws with replacement; ties keep the earlier draw.
pub fn tournament_index<R: Rng + ?Sized>(
    fitnesses: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<usize> {
    if fitnesses.is_empty() {
        return Err(Error::invalid("tournament over an empty population"));
    }
    if k == 0 {
        return Err(Error::invalid("tournament size must be at least 1"));
    }
    let mut best = rng.random_range(0..fitnesses.len());
    for _ in 1..k {
        let challenger = rng.random_range(0..fitnesses.len());
        if fitnesses[challenger] < fitnesses[best] {
            best = challenger;
        }
    }
    Ok(best)
}

pub fn tournament_select<'a, R: Rng + ?Sized>(
    population: &'a [BehaviorTree],
    fitnesses: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<&'a BehaviorTree> {
    if population.len() != fitnesses.len() {
        return Err(Error::LengthMismatch {
            expected: population.len(),
            found: fitnesses.len(),
        });
    }
    tournament_index(fitnesses, k, rng).map(|i| &population[i])
}

/// Indices sorted by fitness, ties by position.
fn ranking(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(a.cmp(&b)));
    order
}

/// Elites first, unchanged, then tournament-bred offspring up to the same size.
pub fn next_generation<R: Rng + ?Sized>(
    population: &[BehaviorTree],
    fitnesses: &[f64],
    config: &EvolutionConfig,
    rng: &mut R,
) -> Result<Vec<BehaviorTree>> {
    if population.len() != fitnesses.len() {
        return Err(Error::LengthMismatch {
            expected: population.len(),
            found: fitnesses.len(),
        });
    }
    if population.len() < config.elitism_size {
        return Err(Error::invalid("population smaller than elitism_size"));
    }
    let size = population.len();
    let mut next: Vec<BehaviorTree> = ranking(fitnesses)
        .into_iter()
        .take(config.elitism_size)
        .map(|i| population[i].clone())
        .collect();
    while next.len() < size {
        let a = tournament_select(population, fitnesses, config.tournament_size, rng)?;
        let b = tournament_select(population, fitnesses, config.tournament_size, rng)?;
        let (c1, c2) = if rng.random::<f64>() < config.crossover_rate {
            bt::crossover(a, b, rng)?
        } else {
            (a.clone(), b.clone())
        };
        for child in [c1, c2] {
            if next.len() == size {
                break;
            }
            let child = if rng.random::<f64>() < config.mutation_rate {
                bt::mutate(&child, rng)
            } else {
                child
            };
            next.push(child);
        }
    }
    Ok(next)
}

fn stats(generation: usize, population: &[BehaviorTree], fitness: &[f64]) -> GenerationStats {
    let best = ranking(fitness)[0];
    GenerationStats {
        generation,
        best_fitness: fitness[best],
        mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
        best_tree: population[best].clone(),
    }
}

/// Runs the full extraction with default metric parameters.
pub fn extract(trajectory: &Trajectory, config: &EvolutionConfig) -> Result<ExtractionResult> {
    let observation = Observation::new(trajectory.clone(), MetricParams::default())?;
    extract_with(&observation, config, |_| {})
}

/// Runs the full extraction, reporting each finished generation to `on_generation`.
///
/// Elites keep the fitness they were selected with, so the best fitness never increases.
pub fn extract_with(
    observation: &Observation,
    config: &EvolutionConfig,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<ExtractionResult> {
    config.validate()?;
    let mut init_rng = rng::stream(config.seed, &[TAG_INITIAL]);
    let mut population = (0..config.population_size)
        .map(|_| bt::random_tree(config.leaf_count, &mut init_rng))
        .collect::<Result<Vec<_>>>()?;

    let Evaluation {
        mut fitness,
        bounds,
    } = evaluate_population(&population, observation, None, config.seed, 0)?;
    let mut history = Vec::with_capacity(config.generations);
    history.push(stats(0, &population, &fitness));
    on_generation(&history[0]);

    for generation in 1..config.generations {
        let mut breed_rng = rng::stream(config.seed, &[TAG_BREED, generation as u64]);
        let elite_fitness: Vec<f64> = ranking(&fitness)
            .into_iter()
            .take(config.elitism_size)
            .map(|i| fitness[i])
            .collect();
        population = next_generation(&population, &fitness, config, &mut breed_rng)?;

        let offspring = &population[config.elitism_size..];
        let series =
            observation.assess_all(offspring, config.seed, generation, config.elitism_size)?;
        fitness = elite_fitness;
        for s in &series {
            fitness.push(self::fitness(observation.series(), s, &bounds)?);
        }

        history.push(stats(generation, &population, &fitness));
        on_generation(history.last().expect("just pushed"));
    }

    let last = history.last().expect("at least one generation");
    Ok(ExtractionResult {
        best_tree: last.best_tree.clone(),
        best_fitness: last.best_fitness,
        history,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::LeafAction::{self, *};
    use crate::metrics::STREAM_COUNT;
    use crate::rng::seeded;
    use crate::sim::init_state;

    fn tree(leaves: &[LeafAction]) -> BehaviorTree {
        BehaviorTree::new(leaves.to_vec()).unwrap()
    }

    fn observe(leaves: &[LeafAction], seed: u64) -> Observation {
        let cfg = ArenaConfig::default();
        let init = init_state(&cfg, &mut seeded(seed)).unwrap();
        let traj = simulate(&tree(leaves), &init, &cfg, &mut seeded(seed + 1)).unwrap();
        Observation::new(traj, MetricParams::default()).unwrap()
    }

    fn constant_series(value: f64, len: usize) -> MetricSeries {
        MetricSeries::from_streams(std::array::from_fn(|_| vec![value; len])).unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = EvolutionConfig::default();
        assert_eq!(
            (
                cfg.population_size,
                cfg.generations,
                cfg.elitism_size,
                cfg.tournament_size
            ),
            (50, 30, 3, 3)
        );
        assert_eq!((cfg.crossover_rate, cfg.mutation_rate), (0.5, 0.3));
        assert!(cfg.validate().is_ok());
        for bad in [
            EvolutionConfig {
                elitism_size: 50,
                ..cfg
            },
            EvolutionConfig {
                mutation_rate: 1.5,
                ..cfg
            },
            EvolutionConfig {
                tournament_size: 0,
                ..cfg
            },
            EvolutionConfig {
                generations: 0,
                ..cfg
            },
            EvolutionConfig {
                leaf_count: 0,
                ..cfg
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn fitness_single_stream_closed_form() {
        let zeros = constant_series(0.0, 101);
        let mut ones = zeros.clone();
        ones.com_x = vec![1.0; 101];
        let mut bounds = MetricBounds {
            min: [0.0; STREAM_COUNT],
            max: [0.0; STREAM_COUNT],
        };
        bounds.max[0] = 1.0;
        let f = fitness(&zeros, &ones, &bounds).unwrap();
        assert!((f - 101f64.sqrt()).abs() < 1e-9);
        assert!((f - 10.0499).abs() < 1e-4);
    }

    #[test]
    fn fitness_is_a_distance() {
        let obs = observe(&[NorthEast, Aggregation, Separation], 3);
        let other = observe(&[SouthWest, Clustering, RandomMotion], 4);
        let bounds = MetricBounds::from_series([obs.series(), other.series()]).unwrap();
        assert_eq!(fitness(obs.series(), obs.series(), &bounds).unwrap(), 0.0);
        let ab = fitness(obs.series(), other.series(), &bounds).unwrap();
        let ba = fitness(other.series(), obs.series(), &bounds).unwrap();
        assert!(ab > 0.0);
        assert_eq!(ab, ba);
        let short = constant_series(0.0, 5);
        assert!(fitness(obs.series(), &short, &bounds).is_err());
    }

    #[test]
    fn original_tree_scores_zero() {
        let original = [NorthEast, Aggregation, Separation];
        let obs = observe(&original, 10);
        let mut pop: Vec<BehaviorTree> = (0..9)
            .map(|i| bt::random_tree(3, &mut seeded(i)).unwrap())
            .collect();
        pop.push(tree(&original));
        let eval = evaluate_population(&pop, &obs, None, 77, 0).unwrap();
        assert_eq!(eval.fitness.len(), 10);
        assert_eq!(eval.fitness[9], 0.0);
        assert!(eval.bounds.is_valid());
        let again = evaluate_population(&pop, &obs, None, 77, 0).unwrap();
        assert_eq!(eval, again);
        // Given bounds are used verbatim.
        let fixed = evaluate_population(&pop, &obs, Some(&eval.bounds), 5, 3).unwrap();
        assert_eq!(fixed.bounds, eval.bounds);
    }

    #[test]
    fn first_generation_bounds_include_observation() {
        let obs = observe(&[NorthEast, NorthEast, NorthEast], 1);
        let pop = vec![tree(&[SouthWest, SouthWest, SouthWest])];
        let eval = evaluate_population(&pop, &obs, None, 0, 0).unwrap();
        let com_x = &obs.series().com_x;
        let obs_max = com_x.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(eval.bounds.max[0], obs_max);
    }

    #[test]
    fn tournament_limits() {
        let fit = [5.0, 3.0, 9.0, 1.0, 7.0];
        // With k draws over distinct indices the global best always wins whenever sampled.
        let mut rng = seeded(1);
        let mut wins = 0;
        for _ in 0..1000 {
            if tournament_index(&fit, 50, &mut rng).unwrap() == 3 {
                wins += 1;
            }
        }
        // P(index 3 never drawn in 50 draws) = 0.8^50 ~ 1.4e-5.
        assert!(wins >= 995);
        assert!(tournament_index(&[], 3, &mut rng).is_err());
    }

    #[test]
    fn tournament_uniform_when_fitness_is_flat() {
        let fit = [1.0; 5];
        let mut rng = seeded(2);
        let mut hits = [0usize; 5];
        for _ in 0..10_000 {
            hits[tournament_index(&fit, 3, &mut rng).unwrap()] += 1;
        }
        for h in hits {
            assert!((h as f64 / 10_000.0 - 0.2).abs() < 0.02, "{hits:?}");
        }
    }

    #[test]
    fn tournament_favors_the_best() {
        let fit = [4.0, 2.0, 0.5, 3.0, 1.0];
        let mut rng = seeded(3);
        let mut hits = [0usize; 5];
        for _ in 0..10_000 {
            hits[tournament_index(&fit, 3, &mut rng).unwrap()] += 1;
        }
        // Exact probability for rank r (0 = best) of 5 with k = 3: ((5-r)^3 - (4-r)^3) / 125.
        for (idx, rank) in [(2usize, 0i32), (4, 1), (1, 2), (3, 3), (0, 4)] {
            let p = ((5 - rank).pow(3) - (4 - rank).pow(3)) as f64 / 125.0;
            assert!((hits[idx] as f64 / 10_000.0 - p).abs() < 0.02, "{hits:?}");
        }
        assert!(hits.iter().all(|&h| h <= hits[2]));
    }

    #[test]
    fn pure_selection_only_copies() {
        let mut rng = seeded(4);
        let pop: Vec<BehaviorTree> = (0..50)
            .map(|_| bt::random_tree(3, &mut rng).unwrap())
            .collect();
        let fit: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64).collect();
        let cfg = EvolutionConfig {
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            ..Default::default()
        };
        let next = next_generation(&pop, &fit, &cfg, &mut rng).unwrap();
        assert_eq!(next.len(), 50);
        assert!(next.iter().all(|t| pop.contains(t)));
    }

    #[test]
    fn elites_survive_verbatim() {
        let mut rng = seeded(5);
        let pop: Vec<BehaviorTree> = (0..50)
            .map(|_| bt::random_tree(3, &mut rng).unwrap())
            .collect();
        let fit: Vec<f64> = (0..50).map(|i| ((i * 13) % 50) as f64 + 0.5).collect();
        let cfg = EvolutionConfig {
            crossover_rate: 1.0,
            mutation_rate: 1.0,
            ..Default::default()
        };
        let next = next_generation(&pop, &fit, &cfg, &mut rng).unwrap();
        assert_eq!(next.len(), 50);
        let order = ranking(&fit);
        for (slot, &i) in order.iter().take(3).enumerate() {
            assert_eq!(next[slot], pop[i]);
        }
    }

    #[test]
    fn odd_offspring_count_fills_exactly() {
        let mut rng = seeded(6);
        let pop: Vec<BehaviorTree> = (0..10)
            .map(|_| bt::random_tree(4, &mut rng).unwrap())
            .collect();
        let fit: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let cfg = EvolutionConfig {
            population_size: 10,
            elitism_size: 2,
            ..Default::default()
        };
        let next = next_generation(&pop, &fit, &cfg, &mut rng).unwrap();
        assert_eq!(next.len(), 10);
        assert!(next.iter().all(|t| t.len() == 4));
    }

    #[test]
    fn extraction_history_is_monotone_and_reproducible() {
        let obs = observe(&[NorthEast, Clustering, RandomMotion], 20);
        let cfg = EvolutionConfig {
            population_size: 20,
            generations: 8,
            seed: 4,
            ..Default::default()
        };
        let a = extract_with(&obs, &cfg, |_| {}).unwrap();
        assert_eq!(a.history.len(), 8);
        for w in a.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        assert_eq!(a.best_fitness, a.history[7].best_fitness);
        let b = extract_with(&obs, &cfg, |_| {}).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extraction_reports_each_generation() {
        let obs = observe(&[SouthEast], 2);
        let cfg = EvolutionConfig {
            population_size: 10,
            generations: 5,
            leaf_count: 1,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let result = extract_with(&obs, &cfg, |s| seen.push(s.generation)).unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(result.best_tree, tree(&[SouthEast]));
        assert_eq!(result.best_fitness, 0.0);
    }

    #[test]
    fn observation_needs_two_frames_and_agents() {
        let cfg = ArenaConfig {
            steps: 0,
            ..Default::default()
        };
        let init = init_state(&cfg, &mut seeded(0)).unwrap();
        let traj = simulate(&tree(&[NorthEast]), &init, &cfg, &mut seeded(0)).unwrap();
        assert!(Observation::new(traj, MetricParams::default()).is_err());
    }
}
