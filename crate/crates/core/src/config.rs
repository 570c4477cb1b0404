//! Experiment configuration files and the operator spec strings used by the
//! command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bitspace::Genome;
use crate::crossover::CrossoverDistribution;
use crate::engine::{GaConfig, Mode};
use crate::error::{Error, Result};
use crate::mutation::MutationRates;
use crate::popmodel::{FinitePopulation, FitnessFunction};
use crate::scalar::parse_rational;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn resolve(base: Option<&Path>, file: &str) -> PathBuf {
    let p = PathBuf::from(file);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

/// Parses `1pt:<c>`, `2pt:<c>`, `uniform:<c>` or `file:<path>`.
pub fn parse_crossover(spec: &str, len: u32, base: Option<&Path>) -> Result<CrossoverDistribution> {
    let (kind, arg) = spec
        .trim()
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("bad crossover spec {spec:?}")))?;
    let chi = match kind {
        "1pt" => CrossoverDistribution::one_point(len, parse_rational(arg)?)?,
        "2pt" => CrossoverDistribution::two_point(len, parse_rational(arg)?)?,
        "uniform" => CrossoverDistribution::uniform(len, parse_rational(arg)?)?,
        "file" => CrossoverDistribution::parse_custom(&read(&resolve(base, arg))?)?,
        _ => return Err(Error::Parse(format!("unknown crossover kind {kind:?}"))),
    };
    if chi.len() != len {
        return Err(Error::LengthMismatch {
            left: len,
            right: chi.len(),
        });
    }
    Ok(chi)
}

/// Parses `p=<rate>` (all positions) or `p=<r0>,<r1>,...` (one per position,
/// position 0 first).
pub fn parse_mutation(spec: &str, len: u32) -> Result<MutationRates> {
    let list = spec
        .trim()
        .strip_prefix("p=")
        .ok_or_else(|| Error::Parse(format!("bad mutation spec {spec:?}")))?;
    let rates = list
        .split(',')
        .map(parse_rational)
        .collect::<Result<Vec<_>>>()?;
    match rates.len() {
        1 => MutationRates::uniform(len, rates.into_iter().next().expect("one rate")),
        n if n == len as usize => MutationRates::per_bit(rates),
        n => Err(Error::Parse(format!(
            "mutation spec has {n} rates for length {len}"
        ))),
    }
}

/// Parses `onemax`, `affine:<offset>,<slope>`, `const:<value>`,
/// `table:<path>`/`file:<path>`, or a bare path to a JSON table.
pub fn parse_fitness(spec: &str, base: Option<&Path>) -> Result<FitnessFunction> {
    let spec = spec.trim();
    if spec == "onemax" {
        return Ok(FitnessFunction::OneMax);
    }
    if let Some(args) = spec.strip_prefix("affine:") {
        let (a, b) = args
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad affine fitness {spec:?}")))?;
        return Ok(FitnessFunction::AffinePopcount {
            offset: parse_rational(a)?,
            slope: parse_rational(b)?,
        });
    }
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(FitnessFunction::constant(parse_rational(v)?));
    }
    let path = spec
        .strip_prefix("table:")
        .or_else(|| spec.strip_prefix("file:"))
        .unwrap_or(spec);
    if !path.ends_with(".json") && path == spec {
        return Err(Error::Parse(format!("unknown fitness {spec:?}")));
    }
    FitnessFunction::parse_table(&read(&resolve(base, path))?)
}

fn default_fitness() -> String {
    "onemax".into()
}

fn default_crossover() -> String {
    "1pt:0".into()
}

fn default_mutation() -> String {
    "p=0".into()
}

fn default_generations() -> usize {
    1
}

fn default_replicates() -> usize {
    20
}

/// The JSON experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ell: u32,
    pub population_file: PathBuf,
    #[serde(default = "default_fitness")]
    pub fitness: String,
    #[serde(default = "default_crossover")]
    pub crossover: String,
    #[serde(default = "default_mutation")]
    pub mutation: String,
    pub u: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

/// A fully parsed experiment, every referenced file already loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub population: FinitePopulation,
    pub ga: GaConfig,
    pub u: Genome,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Experiment> {
        let cfg = Self::from_json(&read(path)?)?;
        cfg.resolve(path.parent())
    }

    pub fn resolve(self, base: Option<&Path>) -> Result<Experiment> {
        let len = self.ell;
        Genome::zero(len)?;
        let pop_path = resolve(base, &self.population_file.to_string_lossy());
        let population = FinitePopulation::parse(&read(&pop_path)?)?;
        if population.len() != len {
            return Err(Error::Parse(format!(
                "population strings have length {}, config says {len}",
                population.len()
            )));
        }
        let fitness = parse_fitness(&self.fitness, base)?;
        let crossover = parse_crossover(&self.crossover, len, base)?;
        let mutation = parse_mutation(&self.mutation, len)?;
        let u: Genome = self.u.parse()?;
        if u.len() != len {
            return Err(Error::Parse(format!(
                "mask {} is not of length {len}",
                self.u
            )));
        }
        let ga = GaConfig::new(len, fitness, crossover, mutation, self.mode)?;
        Ok(Experiment {
            config: self,
            population,
            ga,
            u,
        })
    }
}
