//! The five-string worked example, every intermediate vector checked
//! against hand-computed values.

use std::collections::HashMap;

use crate::bitspace::Genome;
use crate::crossover::{crossover_schema_walsh, CrossoverDistribution};
use crate::engine::{holland_bound, GaConfig, Mode};
use crate::error::Result;
use crate::mutation::{mutate_schema_walsh, MutationRates};
use crate::popmodel::{FinitePopulation, FitnessFunction, SchemaVector};
use crate::scalar::{ratio, Exact, Scalar};
use crate::walsh::{from_walsh, to_walsh};

pub const LEN: u32 = 5;
pub const MASK: &str = "01010";
const MEMBERS: [(u64, i64); 5] = [(6, 5), (7, 3), (10, 4), (13, 1), (21, 7)];

/// X = {6, 7, 10, 13, 21}.
pub fn population() -> FinitePopulation {
    FinitePopulation::from_genomes(
        LEN,
        MEMBERS.map(|(b, _)| Genome::new(b, LEN).expect("fits")),
    )
    .expect("valid population")
}

/// Fitness table, one-point crossover at c = 1/2, mutation rate 1/8.
pub fn config() -> GaConfig {
    let table: HashMap<Genome, _> = MEMBERS
        .iter()
        .map(|&(b, f)| (Genome::new(b, LEN).expect("fits"), ratio(f, 1)))
        .collect();
    GaConfig::new(
        LEN,
        FitnessFunction::Table(table),
        CrossoverDistribution::one_point(LEN, ratio(1, 2)).expect("valid"),
        MutationRates::uniform(LEN, ratio(1, 8)).expect("valid"),
        Mode::Rational,
    )
    .expect("consistent lengths")
}

pub fn mask() -> Genome {
    MASK.parse().expect("valid mask")
}

/// One named intermediate vector.
#[derive(Debug, Clone)]
pub struct Stage {
    pub name: &'static str,
    pub computed: Vec<Exact>,
    pub expected: Vec<Exact>,
}

impl Stage {
    pub fn matches(&self) -> bool {
        self.computed == self.expected
    }
}

fn scaled(den: i64, nums: &[i64]) -> Vec<Exact> {
    nums.iter().map(|&n| Exact::from_ratio(n, den)).collect()
}

/// Runs the example and pairs each stage with its expected value.
pub fn run() -> Result<Vec<Stage>> {
    let pop = population();
    let cfg = config();
    let u = mask();
    let x = pop.schema_averages::<Exact>(u)?;
    let s = pop.schema_selection_averages::<Exact>(&cfg.fitness, u)?;
    let s_hat = to_walsh(&s)?;
    let y_hat = crossover_schema_walsh(&s_hat, &cfg.crossover)?;
    let y = from_walsh(&y_hat)?;
    let mu = cfg.mutation.mu_schema::<Exact>(u)?;
    let z_hat = mutate_schema_walsh(&y_hat, &cfg.mutation)?;
    let z = from_walsh(&z_hat)?;
    let bound = holland_bound(&s, &cfg)?;
    let take = |v: SchemaVector<Exact>| v.into_entries();
    Ok(vec![
        Stage {
            name: "x",
            computed: take(x),
            expected: scaled(5, &[1, 2, 1, 1]),
        },
        Stage {
            name: "s",
            computed: take(s),
            expected: scaled(20, &[7, 8, 1, 4]),
        },
        Stage {
            name: "s_hat",
            computed: take(s_hat),
            expected: scaled(20, &[10, -2, 5, 1]),
        },
        Stage {
            name: "y_hat",
            computed: take(y_hat),
            expected: scaled(40, &[20, -4, 10, 1]),
        },
        Stage {
            name: "y",
            computed: take(y),
            expected: scaled(80, &[27, 33, 5, 15]),
        },
        Stage {
            name: "mu",
            computed: take(mu),
            expected: scaled(64, &[49, 7, 7, 1]),
        },
        Stage {
            name: "z_hat",
            computed: take(z_hat),
            expected: vec![
                Exact::from_ratio(1, 2),
                Exact::from_ratio(-3, 40),
                Exact::from_ratio(3, 16),
                Exact::from_ratio(9, 640),
            ],
        },
        Stage {
            name: "z",
            computed: take(z),
            expected: scaled(1280, &[401, 479, 143, 257]),
        },
        Stage {
            name: "bound_0",
            computed: vec![take(bound).swap_remove(0)],
            expected: vec![Exact::from_ratio(1029, 5120)],
        },
    ])
}
