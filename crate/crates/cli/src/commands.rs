use std::path::Path;

use walsh_schema::config::parse_fitness;
use walsh_schema::engine::{holland_bound, retention_bound};
use walsh_schema::validate::{run_validation, InstanceKind, ValidationReport};
use walsh_schema::{
    example, monte_carlo_frequencies, schema_pipeline, trajectory, Exact, Experiment,
    ExperimentConfig, FinitePopulation, Genome, Result, Sampler, Scalar, SchemaVector,
};

use crate::output::{Render, Table};

/// A table plus whether every check inside it passed.
pub struct Report {
    pub table: Table,
    pub ok: bool,
}

impl From<Table> for Report {
    fn from(table: Table) -> Self {
        Report { table, ok: true }
    }
}

fn schema_rows<S: Scalar + Render>(table: &mut Table, v: &SchemaVector<S>) {
    for (schema, value) in v.iter_schemata() {
        table.push(vec![schema.to_string(), value.render()]);
    }
}

pub fn example() -> Result<Report> {
    let mut table = Table::new(&["stage", "k", "value", "expected", "match"]);
    let mut ok = true;
    for stage in example::run()? {
        ok &= stage.matches();
        for (k, (got, want)) in stage.computed.iter().zip(&stage.expected).enumerate() {
            table.push(vec![
                stage.name.to_string(),
                k.to_string(),
                got.render(),
                want.render(),
                (got == want).to_string(),
            ]);
        }
    }
    Ok(Report { table, ok })
}

pub fn schema_avg<S: Scalar + Render>(
    pop: &Path,
    u: &str,
    fitness: Option<&str>,
) -> Result<Report> {
    let text = std::fs::read_to_string(pop)
        .map_err(|e| walsh_schema::Error::Parse(format!("cannot read {}: {e}", pop.display())))?;
    let pop = FinitePopulation::parse(&text)?;
    let u: Genome = u.parse()?;
    if u.len() != pop.len() {
        return Err(walsh_schema::Error::LengthMismatch {
            left: pop.len(),
            right: u.len(),
        });
    }
    let v = match fitness {
        Some(spec) => {
            let f = parse_fitness(spec, None)?;
            pop.schema_selection_averages::<S>(&f, u)?
        }
        None => pop.schema_averages::<S>(u)?,
    };
    let mut table = Table::new(&["schema", "value"]);
    schema_rows(&mut table, &v);
    Ok(table.into())
}

pub fn step<S: Scalar + Render>(exp: &Experiment) -> Result<Report> {
    let z = schema_pipeline::<S>(&exp.population, exp.u, &exp.ga)?;
    let selected = exp
        .population
        .schema_selection_averages::<S>(&exp.ga.fitness, exp.u)?;
    let bound =
        holland_bound(&selected, &exp.ga).or_else(|_| retention_bound(&selected, &exp.ga))?;
    let mut table = Table::new(&["schema", "exact", "bound", "slack"]);
    for ((schema, e), b) in z.iter_schemata().zip(bound.entries()) {
        let slack = e.clone() - b.clone();
        table.push(vec![
            schema.to_string(),
            e.render(),
            b.render(),
            slack.render(),
        ]);
    }
    Ok(table.into())
}

pub fn trajectory_cmd<S: Scalar + Render>(exp: &Experiment, generations: usize) -> Result<Report> {
    let steps = trajectory::<S>(&exp.population, exp.u, &exp.ga, generations)?;
    let mut table = Table::new(&["generation", "schema", "value"]);
    for (t, v) in steps.iter().enumerate() {
        for (schema, value) in v.iter_schemata() {
            table.push(vec![t.to_string(), schema.to_string(), value.render()]);
        }
    }
    Ok(table.into())
}

pub fn validate(len: u32, trials: usize, seed: u64) -> Result<(ValidationReport, Table)> {
    let report = run_validation(len..=len, trials, seed, InstanceKind::General)?;
    let mut table = Table::new(&["check", "passed", "trials"]);
    for (name, n) in [
        ("oracle matches", report.oracle_matches),
        ("float matches", report.float_matches),
        ("bound checks", report.bound_checks),
    ] {
        table.push(vec![name.into(), n.to_string(), trials.to_string()]);
    }
    Ok((report, table))
}

pub fn montecarlo(exp: &Experiment, replicates: usize, seed: u64) -> Result<Report> {
    let exact = schema_pipeline::<Exact>(&exp.population, exp.u, &exp.ga)?;
    let runs = monte_carlo_frequencies(
        &exp.population,
        exp.u,
        &exp.ga,
        replicates,
        seed,
        Sampler::Auto,
    )?;
    let r = exp.population.size() as f64;
    let mut table = Table::new(&[
        "schema",
        "exact",
        "mean",
        "std_error",
        "max_abs_z",
        "within_4se",
    ]);
    for (k, (schema, z)) in exact.iter_schemata().enumerate() {
        let zf = z.to_f64();
        let se = (zf * (1.0 - zf) / r).sqrt();
        let freqs: Vec<f64> = runs.iter().map(|f| f[k]).collect();
        let mean = freqs.iter().sum::<f64>() / freqs.len().max(1) as f64;
        let dev = freqs.iter().map(|f| (f - zf).abs()).fold(0.0, f64::max);
        let within = freqs.iter().filter(|f| (*f - zf).abs() <= 4.0 * se).count();
        let max_z = if se > 0.0 { dev / se } else { dev };
        table.push(vec![
            schema.to_string(),
            z.render(),
            mean.render(),
            se.render(),
            max_z.render(),
            format!("{within}/{replicates}"),
        ]);
    }
    Ok(table.into())
}

pub fn load(path: &Path) -> Result<Experiment> {
    ExperimentConfig::load(path)
}
