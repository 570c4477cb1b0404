//! Exact expected schema averages of the simple genetic algorithm after one
//! generation of proportional selection, mask-based crossover and
//! independent-bit mutation, computed in the Walsh basis.

// `len` is the string length ℓ throughout, not an element count.
#![allow(clippy::len_without_is_empty)]

pub mod bitspace;
pub mod config;
pub mod crossover;
pub mod engine;
pub mod error;
pub mod example;
pub mod mutation;
pub mod par;
pub mod popmodel;
pub mod scalar;
pub mod validate;
pub mod walsh;

pub use bitspace::{Genome, Schema, SubgroupIter, MAX_DENSE_LEN, MAX_LEN};
pub use config::{Experiment, ExperimentConfig};
pub use crossover::{CrossoverDistribution, CrossoverFamily};
pub use engine::{
    finite_ga_step, g_step, holland_bound, monte_carlo_frequencies, oracle_schema, retention_bound,
    schema_pipeline, trajectory, GaConfig, Mode, RngStream, Sampler,
};
pub use error::{Error, Result};
pub use mutation::MutationRates;
pub use popmodel::{
    select, Basis, FinitePopulation, FitnessFunction, PopulationVector, SchemaVector,
};
pub use scalar::{parse_rational, Exact, Rational, Scalar};
pub use walsh::{from_walsh, fwht, schema_walsh_from_full, to_walsh, WalshVector};
