//! Evaluation harness: tree similarity, the recovery benchmark and the metric
//! discrimination study.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bt::{self, BehaviorTree, CancelingPairs, LeafAction};
use crate::error::{Error, Result};
use crate::evolve::{extract_with, EvolutionConfig, GenerationStats, Observation};
use crate::metrics::{compute_metrics, MetricParams, MetricSeries, STREAM_COUNT};
use crate::rng;
use crate::sim::{init_state, simulate, ArenaConfig};

const TAG_TRIAL: u64 = 11;
const TAG_EXTRACT: u64 = 12;
const TAG_PAIR: u64 = 13;

/// Granularity of the Jaccard index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum JaccardMode {
    /// Sets of leaf tokens.
    #[default]
    Token,
    /// Sets of characters of the serialized trees.
    Character,
}

fn set_jaccard<T: Ord>(a: BTreeSet<T>, b: BTreeSet<T>) -> f64 {
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Intersection over union of the two trees' leaf-token sets.
pub fn jaccard(a: &BehaviorTree, b: &BehaviorTree) -> f64 {
    set_jaccard(
        a.leaves().iter().copied().collect(),
        b.leaves().iter().copied().collect(),
    )
}

/// Intersection over union of the characters of the leaf tokens.
pub fn jaccard_chars(a: &BehaviorTree, b: &BehaviorTree) -> f64 {
    let chars = |t: &BehaviorTree| -> BTreeSet<char> {
        t.leaves().iter().flat_map(|l| l.token().chars()).collect()
    };
    set_jaccard(chars(a), chars(b))
}

pub fn jaccard_with(mode: JaccardMode, a: &BehaviorTree, b: &BehaviorTree) -> f64 {
    match mode {
        JaccardMode::Token => jaccard(a, b),
        JaccardMode::Character => jaccard_chars(a, b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityClass {
    /// Same leaves with the same multiplicities.
    Exact,
    /// Jaccard at least 0.5, not exact.
    High,
    Low,
}

impl SimilarityClass {
    pub fn classify(original: &BehaviorTree, extracted: &BehaviorTree, jaccard: f64) -> Self {
        if original.same_multiset(extracted) {
            SimilarityClass::Exact
        } else if jaccard >= 0.5 {
            SimilarityClass::High
        } else {
            SimilarityClass::Low
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SimilarityClass::Exact => "exact",
            SimilarityClass::High => "high",
            SimilarityClass::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub original: BehaviorTree,
    pub extracted: BehaviorTree,
    pub jaccard: f64,
    pub final_fitness: f64,
    pub class: SimilarityClass,
    /// Leaves equal in order as well as multiplicity.
    pub order_exact: bool,
    pub history: Vec<GenerationStats>,
}

/// How one leaf action fared across the benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafConfusion {
    pub action: LeafAction,
    /// Originals containing the action.
    pub occurrences: usize,
    /// Of those, extractions that lack it.
    pub missed: usize,
    /// For the misses: actions present in the extraction but absent from the original,
    /// indexed by [`LeafAction::index`].
    pub replaced_by: [usize; LeafAction::COUNT],
    /// Extractions containing the action when the original does not.
    pub over_extracted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub leaf_count: usize,
    pub trials: Vec<TrialOutcome>,
    pub exact_count: usize,
    pub high_similarity_count: usize,
    pub low_similarity_count: usize,
    pub order_exact_count: usize,
    pub mean_jaccard: f64,
    pub zero_jaccard_trials: Vec<usize>,
    pub confusion: Vec<LeafConfusion>,
}

impl BenchmarkReport {
    pub fn from_trials(leaf_count: usize, trials: Vec<TrialOutcome>) -> Self {
        let count = |c: SimilarityClass| trials.iter().filter(|t| t.class == c).count();
        let mean_jaccard = if trials.is_empty() {
            0.0
        } else {
            trials.iter().map(|t| t.jaccard).sum::<f64>() / trials.len() as f64
        };
        Self {
            leaf_count,
            exact_count: count(SimilarityClass::Exact),
            high_similarity_count: count(SimilarityClass::High),
            low_similarity_count: count(SimilarityClass::Low),
            order_exact_count: trials.iter().filter(|t| t.order_exact).count(),
            mean_jaccard,
            zero_jaccard_trials: trials
                .iter()
                .filter(|t| t.jaccard == 0.0)
                .map(|t| t.trial)
                .collect(),
            confusion: confusion(&trials),
            trials,
        }
    }

    /// Per generation: mean over trials of the best and of the mean fitness.
    pub fn learning_curve(&self) -> Vec<(f64, f64)> {
        let generations = self
            .trials
            .iter()
            .map(|t| t.history.len())
            .min()
            .unwrap_or(0);
        let n = self.trials.len() as f64;
        (0..generations)
            .map(|g| {
                let (best, mean) = self.trials.iter().fold((0.0, 0.0), |(b, m), t| {
                    (b + t.history[g].best_fitness, m + t.history[g].mean_fitness)
                });
                (best / n, mean / n)
            })
            .collect()
    }
}

fn confusion(trials: &[TrialOutcome]) -> Vec<LeafConfusion> {
    LeafAction::ALL
        .into_iter()
        .map(|action| {
            let mut entry = LeafConfusion {
                action,
                occurrences: 0,
                missed: 0,
                replaced_by: [0; LeafAction::COUNT],
                over_extracted: 0,
            };
            for t in trials {
                let in_original = t.original.contains(action);
                let in_extracted = t.extracted.contains(action);
                if in_original {
                    entry.occurrences += 1;
                    if !in_extracted {
                        entry.missed += 1;
                        for other in LeafAction::ALL {
                            if t.extracted.contains(other) && !t.original.contains(other) {
                                entry.replaced_by[other.index()] += 1;
                            }
                        }
                    }
                } else if in_extracted {
                    entry.over_extracted += 1;
                }
            }
            entry
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub n_trials: usize,
    pub arena: ArenaConfig,
    pub metrics: MetricParams,
    /// `leaf_count` sets the size of originals and candidates; `seed` is the master seed.
    pub evolution: EvolutionConfig,
    pub constrain_originals: bool,
    pub canceling_pairs: CancelingPairs,
    pub jaccard_mode: JaccardMode,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n_trials: 100,
            arena: ArenaConfig::default(),
            metrics: MetricParams::default(),
            evolution: EvolutionConfig::default(),
            constrain_originals: true,
            canceling_pairs: CancelingPairs::default(),
            jaccard_mode: JaccardMode::Token,
        }
    }
}

/// Draws the original controller of one trial.
pub fn trial_original(config: &BenchmarkConfig, trial: usize) -> Result<BehaviorTree> {
    let mut rng = rng::stream(config.evolution.seed, &[TAG_TRIAL, trial as u64, 0]);
    let leaf_count = config.evolution.leaf_count;
    if config.constrain_originals {
        bt::random_constrained_tree_with(leaf_count, &config.canceling_pairs, &mut rng)
    } else {
        bt::random_tree(leaf_count, &mut rng)
    }
}

/// Simulates `original` into an observation and extracts a controller from it.
pub fn run_trial(
    config: &BenchmarkConfig,
    trial: usize,
    original: &BehaviorTree,
) -> Result<TrialOutcome> {
    let mut rng = rng::stream(config.evolution.seed, &[TAG_TRIAL, trial as u64, 1]);
    let init = init_state(&config.arena, &mut rng)?;
    let observed = simulate(original, &init, &config.arena, &mut rng)?;
    let observation = Observation::new(observed, config.metrics)?;
    let evolution = EvolutionConfig {
        seed: rng::mix(config.evolution.seed, &[TAG_EXTRACT, trial as u64]),
        leaf_count: original.len(),
        ..config.evolution
    };
    let result = extract_with(&observation, &evolution, |_| {})?;
    let jaccard = jaccard_with(config.jaccard_mode, original, &result.best_tree);
    Ok(TrialOutcome {
        trial,
        class: SimilarityClass::classify(original, &result.best_tree, jaccard),
        order_exact: *original == result.best_tree,
        original: original.clone(),
        extracted: result.best_tree,
        jaccard,
        final_fitness: result.best_fitness,
        history: result.history,
    })
}

/// Runs `n_trials` independent recoveries of random originals, in parallel.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    config.arena.validate()?;
    config.evolution.validate()?;
    let trials = (0..config.n_trials)
        .into_par_iter()
        .map(|trial| {
            trial_original(config, trial)
                .and_then(|original| run_trial(config, trial, &original))
                .map_err(|e| Error::Trial {
                    trial,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport::from_trials(
        config.evolution.leaf_count,
        trials,
    ))
}

/// Per-stream distance between two series, each stream min/max-normalized over the pair.
pub fn pair_distances(a: &MetricSeries, b: &MetricSeries) -> Result<[f64; STREAM_COUNT]> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (sa, sb) = (a.streams(), b.streams());
    Ok(std::array::from_fn(|k| {
        let (lo, hi) = sa[k]
            .iter()
            .chain(sb[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        if span <= 0.0 {
            return 0.0;
        }
        sa[k]
            .iter()
            .zip(sb[k])
            .map(|(x, y)| ((x - y) / span).powi(2))
            .sum::<f64>()
            .sqrt()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationConfig {
    pub n_pairs: usize,
    pub leaf_count: usize,
    pub arena: ArenaConfig,
    pub metrics: MetricParams,
    pub seed: u64,
}

impl Default for DiscriminationConfig {
    fn default() -> Self {
        Self {
            n_pairs: 100,
            leaf_count: 3,
            arena: ArenaConfig::default(),
            metrics: MetricParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSetting {
    SameTree,
    DifferentTrees,
}

impl PairSetting {
    pub fn label(self) -> &'static str {
        match self {
            PairSetting::SameTree => "same",
            PairSetting::DifferentTrees => "different",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    /// Per pair, per stream distances for one tree run twice.
    pub same: Vec<[f64; STREAM_COUNT]>,
    /// Per pair, per stream distances for two different trees.
    pub different: Vec<[f64; STREAM_COUNT]>,
}

impl DiscriminationReport {
    fn mean(rows: &[[f64; STREAM_COUNT]], stream: usize) -> f64 {
        rows.iter().map(|r| r[stream]).sum::<f64>() / rows.len().max(1) as f64
    }

    pub fn mean_same(&self, stream: usize) -> f64 {
        Self::mean(&self.same, stream)
    }

    pub fn mean_different(&self, stream: usize) -> f64 {
        Self::mean(&self.different, stream)
    }

    /// Streams whose mean same-tree distance is strictly below the different-tree mean.
    pub fn discriminating_streams(&self) -> Vec<usize> {
        (0..STREAM_COUNT)
            .filter(|&k| self.mean_same(k) < self.mean_different(k))
            .collect()
    }

    pub fn rows(&self, setting: PairSetting) -> &[[f64; STREAM_COUNT]] {
        match setting {
            PairSetting::SameTree => &self.same,
            PairSetting::DifferentTrees => &self.different,
        }
    }
}

fn run_series(
    tree: &BehaviorTree,
    config: &DiscriminationConfig,
    rng: &mut rng::SimRng,
) -> Result<MetricSeries> {
    let init = init_state(&config.arena, rng)?;
    let traj = simulate(tree, &init, &config.arena, rng)?;
    compute_metrics(&traj, &config.metrics)
}

/// For each pair: one random tree run twice from different initial states and seeds, and two
/// different random trees, each pair scored stream by stream.
pub fn discrimination_study(config: &DiscriminationConfig) -> Result<DiscriminationReport> {
    if config.n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be at least 1"));
    }
    config.arena.validate()?;
    let rows = (0..config.n_pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = rng::stream(config.seed, &[TAG_PAIR, pair as u64]);
            let tree = bt::random_tree(config.leaf_count, &mut rng)?;
            let same = pair_distances(
                &run_series(&tree, config, &mut rng)?,
                &run_series(&tree, config, &mut rng)?,
            )?;

            let first = bt::random_tree(config.leaf_count, &mut rng)?;
            let second = loop {
                let candidate = bt::random_tree(config.leaf_count, &mut rng)?;
                if !candidate.same_multiset(&first) {
                    break candidate;
                }
            };
            let different = pair_distances(
                &run_series(&first, config, &mut rng)?,
                &run_series(&second, config, &mut rng)?,
            )?;
            Ok((same, different))
        })
        .collect::<Result<Vec<_>>>()?;
    let (same, different) = rows.into_iter().unzip();
    Ok(DiscriminationReport { same, different })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use LeafAction::*;

    fn tree(leaves: &[LeafAction]) -> BehaviorTree {
        BehaviorTree::new(leaves.to_vec()).unwrap()
    }

    #[test]
    fn jaccard_examples() {
        let a = tree(&[Aggregation, RandomMotion, NorthEast]);
        let b = tree(&[Aggregation, Separation, NorthEast]);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &b), 0.5);
        assert_eq!(jaccard(&a, &tree(&[Dispersion, Clustering])), 0.0);
        // Multiplicity and order are ignored.
        assert_eq!(
            jaccard(
                &tree(&[NorthEast, NorthEast, Separation]),
                &tree(&[Separation, NorthEast])
            ),
            1.0
        );
    }

    #[test]
    fn character_jaccard() {
        let a = tree(&[NorthEast]);
        let b = tree(&[NorthWest]);
        // {n,o,r,t,h,e,a,s} vs {n,o,r,t,h,w,e,s}: 7 shared of 9.
        assert!((jaccard_chars(&a, &b) - 7.0 / 9.0).abs() < 1e-12);
        assert_eq!(jaccard_chars(&a, &a), 1.0);
        assert_eq!(jaccard_with(JaccardMode::Token, &a, &b), 0.0);
    }

    #[test]
    fn classification() {
        let a = tree(&[Aggregation, RandomMotion, NorthEast]);
        let perm = tree(&[NorthEast, Aggregation, RandomMotion]);
        let b = tree(&[Aggregation, Separation, NorthEast]);
        let c = tree(&[Dispersion, Separation, NorthEast]);
        let dup = tree(&[Aggregation, Aggregation, NorthEast]);
        let classify = |x: &BehaviorTree| SimilarityClass::classify(&a, x, jaccard(&a, x));
        assert_eq!(classify(&perm), SimilarityClass::Exact);
        assert_eq!(classify(&b), SimilarityClass::High);
        assert_eq!(classify(&c), SimilarityClass::Low);
        // Same token set, different multiplicities.
        let with_dup = tree(&[Aggregation, NorthEast, NorthEast]);
        assert_eq!(
            SimilarityClass::classify(&dup, &with_dup, 1.0),
            SimilarityClass::High
        );
    }

    fn outcome(trial: usize, original: &[LeafAction], extracted: &[LeafAction]) -> TrialOutcome {
        let (o, e) = (tree(original), tree(extracted));
        let j = jaccard(&o, &e);
        TrialOutcome {
            trial,
            class: SimilarityClass::classify(&o, &e, j),
            order_exact: o == e,
            original: o,
            extracted: e,
            jaccard: j,
            final_fitness: 0.0,
            history: vec![],
        }
    }

    #[test]
    fn report_partitions_and_confusion() {
        let trials = vec![
            outcome(
                0,
                &[RandomMotion, Aggregation, NorthEast],
                &[Separation, Aggregation, NorthEast],
            ),
            outcome(
                1,
                &[RandomMotion, Clustering, SouthEast],
                &[Clustering, RandomMotion, SouthEast],
            ),
            outcome(
                2,
                &[Separation, Separation, SouthWest],
                &[NorthWest, NorthWest, Dispersion],
            ),
        ];
        let report = BenchmarkReport::from_trials(3, trials);
        assert_eq!(report.exact_count, 1);
        assert_eq!(report.high_similarity_count, 1);
        assert_eq!(report.low_similarity_count, 1);
        assert_eq!(report.order_exact_count, 0);
        assert_eq!(report.zero_jaccard_trials, vec![2]);
        assert!((report.mean_jaccard - 0.5).abs() < 1e-12);

        let random = &report.confusion[RandomMotion.index()];
        assert_eq!((random.occurrences, random.missed), (2, 1));
        assert_eq!(random.replaced_by[Separation.index()], 1);
        let separation = &report.confusion[Separation.index()];
        assert_eq!(
            (
                separation.occurrences,
                separation.missed,
                separation.over_extracted
            ),
            (1, 1, 1)
        );
        assert_eq!(separation.replaced_by[NorthWest.index()], 1);
        assert_eq!(separation.replaced_by[Dispersion.index()], 1);
        assert_eq!(report.confusion[NorthWest.index()].over_extracted, 1);
    }

    #[test]
    fn pair_distance_properties() {
        let cfg = DiscriminationConfig {
            arena: ArenaConfig {
                steps: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let t = tree(&[NorthEast, Aggregation, Clustering]);
        let a = run_series(&t, &cfg, &mut seeded(1)).unwrap();
        let b = run_series(&t, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(pair_distances(&a, &b).unwrap(), [0.0; STREAM_COUNT]);
        let c = run_series(&tree(&[SouthWest]), &cfg, &mut seeded(2)).unwrap();
        let d = pair_distances(&a, &c).unwrap();
        assert!(d.iter().all(|&v| v >= 0.0));
        assert_eq!(d, pair_distances(&c, &a).unwrap());
    }

    #[test]
    fn discrimination_report_shape() {
        let cfg = DiscriminationConfig {
            n_pairs: 4,
            arena: ArenaConfig {
                steps: 20,
                ..Default::default()
            },
            seed: 3,
            ..Default::default()
        };
        let report = discrimination_study(&cfg).unwrap();
        assert_eq!(report.same.len(), 4);
        assert_eq!(report.different.len(), 4);
        assert_eq!(report, discrimination_study(&cfg).unwrap());
    }

    #[test]
    fn single_leaf_trial_recovers() {
        let cfg = BenchmarkConfig {
            n_trials: 1,
            evolution: EvolutionConfig {
                leaf_count: 1,
                seed: 8,
                ..Default::default()
            },
            ..Default::default()
        };
        let outcome = run_trial(&cfg, 0, &tree(&[NorthEast])).unwrap();
        assert_eq!(outcome.jaccard, 1.0);
        assert_eq!(outcome.class, SimilarityClass::Exact);
        assert_eq!(outcome.history.len(), 30);
    }

    #[test]
    fn benchmark_is_reproducible() {
        let cfg = BenchmarkConfig {
            n_trials: 3,
            evolution: EvolutionConfig {
                population_size: 12,
                generations: 4,
                seed: 21,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = run_benchmark(&cfg).unwrap();
        assert_eq!(a.trials.len(), 3);
        assert_eq!(
            a.exact_count + a.high_similarity_count + a.low_similarity_count,
            3
        );
        for t in &a.trials {
            assert!(!CancelingPairs::default().violated_by(&t.original));
        }
        assert_eq!(a.learning_curve().len(), 4);
        assert_eq!(a, run_benchmark(&cfg).unwrap());
    }
}
