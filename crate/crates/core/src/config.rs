//! Run configuration: defaults, an optional flat `key = value` file, then flag overrides.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evolve::EvolutionConfig;
use crate::metrics::{BetaEdgeRule, MetricParams};
use crate::sim::ArenaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub arena: ArenaConfig,
    pub evolution: EvolutionConfig,
    pub metrics: MetricParams,
    pub jobs: Option<usize>,
}

pub const KEYS: [&str; 17] = [
    "side_length",
    "agent_count",
    "agent_radius",
    "sensing_range",
    "speed",
    "dt",
    "steps",
    "population_size",
    "generations",
    "elitism_size",
    "tournament_size",
    "crossover_rate",
    "mutation_rate",
    "leaf_count",
    "density_radius",
    "beta_rule",
    "jobs",
];

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.evolution.validate()?;
        self.metrics.validate()?;
        if self.jobs == Some(0) {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`. Blank lines and `#`
    /// comments are ignored. The seed is deliberately not a config key.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Config {
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for {key}"))
        }
        let a = &mut self.arena;
        let e = &mut self.evolution;
        match key {
            "side_length" => a.side_length = num(key, value)?,
            "agent_count" => a.agent_count = num(key, value)?,
            "agent_radius" => a.agent_radius = num(key, value)?,
            "sensing_range" => a.sensing_range = num(key, value)?,
            "speed" => a.speed = num(key, value)?,
            "dt" => a.dt = num(key, value)?,
            "steps" => a.steps = num(key, value)?,
            "population_size" => e.population_size = num(key, value)?,
            "generations" => e.generations = num(key, value)?,
            "elitism_size" => e.elitism_size = num(key, value)?,
            "tournament_size" => e.tournament_size = num(key, value)?,
            "crossover_rate" => e.crossover_rate = num(key, value)?,
            "mutation_rate" => e.mutation_rate = num(key, value)?,
            "leaf_count" => e.leaf_count = num(key, value)?,
            "density_radius" => self.metrics.density_radius = num(key, value)?,
            "beta_rule" => self.metrics.beta_rule = parse_beta_rule(value)?,
            "jobs" => self.jobs = Some(num(key, value)?),
            _ => {
                return Err(format!(
                    "unknown key `{key}`; valid keys are: {}",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }
}

pub fn parse_beta_rule(value: &str) -> std::result::Result<BetaEdgeRule, String> {
    match value {
        "closer" => Ok(BetaEdgeRule::CloserThanMean),
        "farther" => Ok(BetaEdgeRule::FartherThanMean),
        _ => Err(format!(
            "invalid beta rule `{value}`; expected closer or farther"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.arena.agent_count, 20);
        assert_eq!(c.evolution.population_size, 50);
        assert_eq!(c.metrics.density_radius, 0.5);
    }

    #[test]
    fn file_values_apply() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# desk run\nsteps = 50\n\npopulation_size=20  # smaller\nbeta_rule = farther\njobs = 2\n",
        )
        .unwrap();
        assert_eq!(c.arena.steps, 50);
        assert_eq!(c.evolution.population_size, 20);
        assert_eq!(c.metrics.beta_rule, BetaEdgeRule::FartherThanMean);
        assert_eq!(c.jobs, Some(2));
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let mut c = RunConfig::default();
        let err = c.apply_text("steps = 5\nwhat\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = c.apply_text("\n\nseed = 4\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
        assert!(err.to_string().contains("unknown key"));
        assert!(c.apply_text("steps = -1").is_err());
    }
}
