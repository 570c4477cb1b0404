//! Randomized cross-checks of the schema pipeline against the full-space
//! oracle and the schema-theorem lower bounds.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::bitspace::{low_mask, Genome};
use crate::crossover::{CrossoverDistribution, CrossoverFamily};
use crate::engine::{
    holland_bound, oracle_schema, retention_bound, schema_pipeline, GaConfig, Mode, RngStream,
};
use crate::error::Result;
use crate::mutation::MutationRates;
use crate::par;
use crate::popmodel::{FinitePopulation, FitnessFunction, SchemaVector};
use crate::scalar::{ratio, Exact, Scalar};

/// Float results must agree with the oracle to this absolute tolerance.
pub const FLOAT_ORACLE_TOL: f64 = 1e-9;
/// Allowed float slack below a lower bound.
pub const FLOAT_BOUND_SLACK: f64 = 1e-12;

/// One randomized problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub population: FinitePopulation,
    pub ga: GaConfig,
    pub u: Genome,
}

/// Which operator configurations [`random_instance`] draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// Any crossover family and per-bit mutation rates.
    General,
    /// One-point crossover and a single mutation rate, the setting of the
    /// classical schema theorem.
    Holland,
}

const RATES: [(i64, i64); 3] = [(0, 1), (1, 2), (1, 1)];

/// Draws a population of 1..=20 strings, a positive fitness table, a
/// crossover distribution with c ∈ {0, 1/2, 1}, mutation rates in [0, 1/2]
/// and a mask of order 1..=ℓ.
pub fn random_instance(rng: &mut RngStream, len: u32, kind: InstanceKind) -> Result<Instance> {
    let r = rng.rng();
    let size = r.random_range(1..=20);
    let mut population = FinitePopulation::new(len)?;
    for _ in 0..size {
        population.add(Genome::new(r.random::<u64>() & low_mask(len), len)?, 1)?;
    }
    let table: HashMap<Genome, _> = population
        .members()
        .map(|(g, _)| (g, ratio(r.random_range(1..=30), 3)))
        .collect();
    let (n, d) = RATES[r.random_range(0..RATES.len())];
    let c = ratio(n, d);
    let family = match kind {
        InstanceKind::Holland => CrossoverFamily::OnePoint,
        InstanceKind::General => [
            CrossoverFamily::OnePoint,
            CrossoverFamily::TwoPoint,
            CrossoverFamily::Uniform,
        ][r.random_range(0..3)],
    };
    let crossover = match family {
        CrossoverFamily::OnePoint => CrossoverDistribution::one_point(len, c)?,
        CrossoverFamily::TwoPoint => CrossoverDistribution::two_point(len, c)?,
        _ => CrossoverDistribution::uniform(len, c)?,
    };
    let mutation = match kind {
        InstanceKind::Holland => MutationRates::uniform(len, ratio(r.random_range(0..=16), 32))?,
        InstanceKind::General => MutationRates::per_bit(
            (0..len)
                .map(|_| ratio(r.random_range(0..=16), 32))
                .collect(),
        )?,
    };
    let order = r.random_range(1..=len);
    let mut mask = 0u64;
    for pos in sample(r, len as usize, order as usize) {
        mask |= 1 << pos;
    }
    Ok(Instance {
        population,
        ga: GaConfig::new(
            len,
            FitnessFunction::Table(table),
            crossover,
            mutation,
            Mode::Rational,
        )?,
        u: Genome::new(mask, len)?,
    })
}

/// Outcome of one randomized trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub len: u32,
    pub order: u32,
    pub exact_match: bool,
    pub float_max_diff: f64,
    pub bound_holds: bool,
    /// c = 0 and every p_i = 0.
    pub neutral: bool,
    pub bound_tight: bool,
}

fn bound_for<S: Scalar>(inst: &Instance) -> Result<(SchemaVector<S>, SchemaVector<S>)> {
    let selected = inst
        .population
        .schema_selection_averages::<S>(&inst.ga.fitness, inst.u)?;
    let bound = match holland_bound(&selected, &inst.ga) {
        Ok(b) => b,
        Err(_) => retention_bound(&selected, &inst.ga)?,
    };
    Ok((selected, bound))
}

/// Runs one trial: pipeline vs oracle in both modes, plus the bound.
pub fn run_trial(inst: &Instance) -> Result<TrialOutcome> {
    let fast = schema_pipeline::<Exact>(&inst.population, inst.u, &inst.ga)?;
    let slow = oracle_schema::<Exact>(&inst.population, inst.u, &inst.ga)?;
    let fast_f = schema_pipeline::<f64>(&inst.population, inst.u, &inst.ga)?;
    let slow_f = oracle_schema::<f64>(&inst.population, inst.u, &inst.ga)?;
    let float_max_diff = fast_f
        .entries()
        .iter()
        .zip(slow_f.entries())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (selected, bound) = bound_for::<Exact>(inst)?;
    let (_, bound_f) = bound_for::<f64>(inst)?;
    let bound_holds = fast
        .entries()
        .iter()
        .zip(bound.entries())
        .all(|(e, b)| e >= b)
        && fast_f
            .entries()
            .iter()
            .zip(bound_f.entries())
            .all(|(e, b)| e - b >= -FLOAT_BOUND_SLACK);
    let neutral = inst
        .ga
        .crossover
        .rate()
        .is_some_and(num_traits::Zero::is_zero)
        && inst
            .ga
            .mutation
            .rates()
            .iter()
            .all(num_traits::Zero::is_zero);
    let bound_tight = !neutral || (bound == fast && selected == fast);
    Ok(TrialOutcome {
        len: inst.population.len(),
        order: inst.u.popcount(),
        exact_match: fast == slow,
        float_max_diff,
        bound_holds,
        neutral,
        bound_tight,
    })
}

/// Aggregate of a validation run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub trials: usize,
    pub oracle_matches: usize,
    pub float_matches: usize,
    pub bound_checks: usize,
    pub max_float_diff: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.oracle_matches == self.trials
            && self.float_matches == self.trials
            && self.bound_checks == self.trials
    }
}

/// Runs `trials` independent trials with lengths drawn from `lens`; trial i
/// uses stream i of `seed`.
pub fn run_validation(
    lens: RangeInclusive<u32>,
    trials: usize,
    seed: u64,
    kind: InstanceKind,
) -> Result<ValidationReport> {
    let outcomes = par::map_tasks(trials, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let len = rng.rng().random_range(lens.clone());
        run_trial(&random_instance(&mut rng, len, kind)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport {
        trials,
        oracle_matches: outcomes.iter().filter(|o| o.exact_match).count(),
        float_matches: outcomes
            .iter()
            .filter(|o| o.float_max_diff <= FLOAT_ORACLE_TOL)
            .count(),
        bound_checks: outcomes
            .iter()
            .filter(|o| o.bound_holds && o.bound_tight)
            .count(),
        max_float_diff: outcomes
            .iter()
            .map(|o| o.float_max_diff)
            .fold(0.0, f64::max),
        outcomes,
    })
}
