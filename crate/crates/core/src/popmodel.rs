//! Populations, schema averages and proportional selection.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::bitspace::{check_dense, pack_bits, unpack_bits, Genome, Schema, MAX_DENSE_LEN};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational, Scalar};

/// Absolute tolerance on the unit sum of a float distribution.
pub const FLOAT_SUM_TOL: f64 = 1e-12;

pub(crate) fn check_unit_mass<S: Scalar>(entries: &[S], what: &str) -> Result<()> {
    if let Some(bad) = entries.iter().find(|e| e.is_negative()) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has a negative entry {bad}"
        )));
    }
    let total = entries.iter().fold(S::zero(), |mut acc, e| {
        acc += e;
        acc
    });
    let tol = if S::EXACT { 0.0 } else { FLOAT_SUM_TOL };
    if !total.approx_eq(&S::one(), tol) {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Largest total negative mass that float round-off may produce before a
/// result is rejected.
pub const FLOAT_NEGATIVE_MASS_TOL: f64 = 1e-10;

/// Restores Λ membership after a transform round trip. Exact arithmetic
/// must already be nonnegative; floats may carry tiny negative entries,
/// which are clamped to zero and the vector renormalized.
pub(crate) fn settle_distribution<S: Scalar>(entries: &mut [S]) -> Result<()> {
    let negative: Vec<usize> = (0..entries.len())
        .filter(|&i| entries[i].is_negative())
        .collect();
    if negative.is_empty() {
        return Ok(());
    }
    let mass: f64 = negative.iter().map(|&i| -entries[i].to_f64()).sum();
    if S::EXACT || mass >= FLOAT_NEGATIVE_MASS_TOL {
        return Err(Error::NumericalContract(format!(
            "distribution has negative mass {mass:e}"
        )));
    }
    for i in negative {
        entries[i] = S::zero();
    }
    let total = entries.iter().fold(S::zero(), |mut acc, e| {
        acc += e;
        acc
    });
    for e in entries.iter_mut() {
        *e = e.clone() / total.clone();
    }
    Ok(())
}

/// An element of the simplex Λ: a distribution over all strings of length ℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector<S> {
    len: u32,
    entries: Vec<S>,
}

impl<S: Scalar> PopulationVector<S> {
    pub fn from_entries(len: u32, entries: Vec<S>) -> Result<Self> {
        Genome::zero(len)?;
        check_dense(len, MAX_DENSE_LEN)?;
        if entries.len() != 1usize << len {
            return Err(Error::InvalidDistribution(format!(
                "expected {} entries, got {}",
                1usize << len,
                entries.len()
            )));
        }
        check_unit_mass(&entries, "population vector")?;
        Ok(PopulationVector { len, entries })
    }

    pub(crate) fn from_raw(len: u32, entries: Vec<S>) -> Self {
        debug_assert_eq!(entries.len(), 1usize << len);
        PopulationVector { len, entries }
    }

    pub fn uniform(len: u32) -> Result<Self> {
        Genome::zero(len)?;
        check_dense(len, MAX_DENSE_LEN)?;
        let n = 1i64 << len;
        Ok(PopulationVector {
            len,
            entries: vec![S::from_ratio(1, n); n as usize],
        })
    }

    pub fn indicator(j: Genome) -> Result<Self> {
        check_dense(j.len(), MAX_DENSE_LEN)?;
        let mut entries = vec![S::zero(); 1usize << j.len()];
        entries[j.bits() as usize] = S::one();
        Ok(PopulationVector {
            len: j.len(),
            entries,
        })
    }

    /// Product distribution where bit i is set with probability `p[i]`.
    pub fn product(p: &[Rational]) -> Result<Self> {
        let len = p.len() as u32;
        Genome::zero(len)?;
        check_dense(len, MAX_DENSE_LEN)?;
        let one = Rational::one();
        let mut probs = vec![one.clone()];
        for pi in p {
            if *pi < Rational::zero() || *pi > one {
                return Err(Error::InvalidProbability(pi.to_string()));
            }
            let qi = &one - pi;
            let mut next = Vec::with_capacity(probs.len() * 2);
            next.extend(probs.iter().map(|x| x * &qi));
            next.extend(probs.iter().map(|x| x * pi));
            probs = next;
        }
        Ok(PopulationVector {
            len,
            entries: probs.iter().map(S::from_rational).collect(),
        })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<S> {
        self.entries
    }

    pub fn get(&self, j: Genome) -> &S {
        &self.entries[j.bits() as usize]
    }

    /// Schema averages x^(u): the mass of each coset Ω_ū ⊕ k, k ∈ Ω_u.
    pub fn schema_averages(&self, u: Genome) -> Result<SchemaVector<S>> {
        check_same_len(self.len, u)?;
        let mut out = vec![S::zero(); 1usize << u.popcount()];
        for (j, x) in self.entries.iter().enumerate() {
            if !x.is_zero() {
                out[pack_bits(j as u64, u.bits()) as usize] += x;
            }
        }
        Ok(SchemaVector::from_raw(u, Basis::Standard, out))
    }
}

fn check_same_len(len: u32, u: Genome) -> Result<()> {
    if u.len() != len {
        Err(Error::LengthMismatch {
            left: len,
            right: u.len(),
        })
    } else {
        Ok(())
    }
}

/// A finite population: a multiset of strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePopulation {
    len: u32,
    members: BTreeMap<u64, u64>,
}

impl FinitePopulation {
    pub fn new(len: u32) -> Result<Self> {
        Genome::zero(len)?;
        Ok(FinitePopulation {
            len,
            members: BTreeMap::new(),
        })
    }

    pub fn from_genomes<I: IntoIterator<Item = Genome>>(len: u32, genomes: I) -> Result<Self> {
        let mut pop = FinitePopulation::new(len)?;
        for g in genomes {
            pop.add(g, 1)?;
        }
        Ok(pop)
    }

    pub fn add(&mut self, genome: Genome, count: u64) -> Result<()> {
        check_same_len(self.len, genome)?;
        if count == 0 {
            return Err(Error::Parse(format!("zero count for {genome}")));
        }
        *self.members.entry(genome.bits()).or_insert(0) += count;
        Ok(())
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    /// Population size r, counting repetitions.
    pub fn size(&self) -> u64 {
        self.members.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.members.len()
    }

    /// Distinct members with their multiplicities, in increasing order.
    pub fn members(&self) -> impl Iterator<Item = (Genome, u64)> + '_ {
        let len = self.len;
        self.members
            .iter()
            .map(move |(&b, &c)| (Genome::new(b, len).expect("stored genome is valid"), c))
    }

    pub fn count(&self, j: Genome) -> u64 {
        self.members.get(&j.bits()).copied().unwrap_or(0)
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.members.is_empty() {
            Err(Error::EmptyPopulation)
        } else {
            Ok(())
        }
    }

    /// The population divided by its size.
    pub fn normalize<S: Scalar>(&self) -> Result<PopulationVector<S>> {
        self.ensure_nonempty()?;
        check_dense(self.len, MAX_DENSE_LEN)?;
        let r = self.size() as i64;
        let mut entries = vec![S::zero(); 1usize << self.len];
        for (&j, &c) in &self.members {
            entries[j as usize] = S::from_ratio(c as i64, r);
        }
        Ok(PopulationVector::from_raw(self.len, entries))
    }

    /// Schema averages computed by bucketing members, without touching the
    /// full space.
    pub fn schema_averages<S: Scalar>(&self, u: Genome) -> Result<SchemaVector<S>> {
        self.ensure_nonempty()?;
        check_same_len(self.len, u)?;
        let mut counts = vec![0u64; 1usize << u.popcount()];
        for (&j, &c) in &self.members {
            counts[pack_bits(j, u.bits()) as usize] += c;
        }
        let r = self.size() as i64;
        let entries = counts
            .into_iter()
            .map(|c| S::from_ratio(c as i64, r))
            .collect();
        Ok(SchemaVector::from_raw(u, Basis::Standard, entries))
    }

    /// Schema averages after proportional selection: fitness is accumulated
    /// per schema bucket and normalized by the total.
    pub fn schema_selection_averages<S: Scalar>(
        &self,
        fitness: &FitnessFunction,
        u: Genome,
    ) -> Result<SchemaVector<S>> {
        self.ensure_nonempty()?;
        check_same_len(self.len, u)?;
        let mut sums = vec![S::zero(); 1usize << u.popcount()];
        for (&j, &c) in &self.members {
            let genome = Genome::new(j, self.len)?;
            let mut weight: S = fitness.eval(genome)?;
            weight *= &S::from_int(c as i64);
            sums[pack_bits(j, u.bits()) as usize] += &weight;
        }
        let total = sums.iter().fold(S::zero(), |mut acc, s| {
            acc += s;
            acc
        });
        let entries = sums.into_iter().map(|s| s / total.clone()).collect();
        Ok(SchemaVector::from_raw(u, Basis::Standard, entries))
    }

    /// Parses the text population format: one `<binary-string> [count]` per
    /// line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pop: Option<FinitePopulation> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
            let mut fields = line.split_whitespace();
            let genome: Genome = fields
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e: Error| err(e.to_string()))?;
            let count = match fields.next() {
                Some(c) => c
                    .parse::<u64>()
                    .map_err(|_| err(format!("bad count {c:?}")))?,
                None => 1,
            };
            if fields.next().is_some() {
                return Err(err("trailing fields".into()));
            }
            let pop = match &mut pop {
                Some(p) => p,
                None => pop.insert(FinitePopulation::new(genome.len())?),
            };
            pop.add(genome, count).map_err(|e| err(e.to_string()))?;
        }
        pop.ok_or(Error::EmptyPopulation)
    }
}

impl fmt::Display for FinitePopulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, c) in self.members() {
            writeln!(f, "{g} {c}")?;
        }
        Ok(())
    }
}

/// Proportional selection: F(x)_k = f_k x_k / Σ_j f_j x_j.
pub fn select<S: Scalar>(
    x: &PopulationVector<S>,
    fitness: &FitnessFunction,
) -> Result<PopulationVector<S>> {
    let mut weighted = Vec::with_capacity(x.entries.len());
    let mut total = S::zero();
    for (j, xj) in x.entries.iter().enumerate() {
        if xj.is_zero() {
            weighted.push(S::zero());
            continue;
        }
        let f: S = fitness.eval(Genome::new(j as u64, x.len)?)?;
        let w = f.mul_ref(xj);
        total += &w;
        weighted.push(w);
    }
    if total.is_zero() || total.is_negative() {
        return Err(Error::NumericalContract(
            "total fitness is not positive".into(),
        ));
    }
    let entries = weighted.into_iter().map(|w| w / total.clone()).collect();
    Ok(PopulationVector::from_raw(x.len, entries))
}

/// Which basis a [`SchemaVector`]'s entries are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Standard,
    Walsh,
}

/// Values for the competing family of schemata {Ω_ū ⊕ k : k ∈ Ω_u}, indexed
/// by packed k.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaVector<S> {
    mask: Genome,
    basis: Basis,
    entries: Vec<S>,
}

impl<S: Scalar> SchemaVector<S> {
    pub fn new(mask: Genome, basis: Basis, entries: Vec<S>) -> Result<Self> {
        if entries.len() as u64 != 1u64 << mask.popcount() {
            return Err(Error::InvalidDistribution(format!(
                "schema vector for order {} needs {} entries, got {}",
                mask.popcount(),
                1u64 << mask.popcount(),
                entries.len()
            )));
        }
        if basis == Basis::Standard {
            check_unit_mass(&entries, "schema vector")?;
        }
        Ok(SchemaVector {
            mask,
            basis,
            entries,
        })
    }

    pub(crate) fn from_raw(mask: Genome, basis: Basis, entries: Vec<S>) -> Self {
        debug_assert_eq!(entries.len() as u64, 1u64 << mask.popcount());
        SchemaVector {
            mask,
            basis,
            entries,
        }
    }

    pub fn mask(&self) -> Genome {
        self.mask
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<S> {
        self.entries
    }

    /// Entry for k ∈ Ω_u.
    pub fn get(&self, k: Genome) -> Result<&S> {
        if !k.is_within(self.mask) {
            return Err(Error::NotSubMask {
                sub: k.to_string(),
                sup: self.mask.to_string(),
            });
        }
        Ok(&self.entries[pack_bits(k.bits(), self.mask.bits()) as usize])
    }

    /// `(schema, value)` pairs in packed order.
    pub fn iter_schemata(&self) -> impl Iterator<Item = (Schema, &S)> + '_ {
        let mask = self.mask;
        self.entries.iter().enumerate().map(move |(i, v)| {
            let value = Genome::new(unpack_bits(i as u64, mask.bits()), mask.len())
                .expect("unpacked value fits");
            (Schema { mask, value }, v)
        })
    }

    pub fn to_f64(&self) -> SchemaVector<f64> {
        SchemaVector {
            mask: self.mask,
            basis: self.basis,
            entries: self.entries.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub fn total(&self) -> S {
        self.entries.iter().fold(S::zero(), |mut acc, e| {
            acc += e;
            acc
        })
    }

    /// Entrywise scaling by a common factor.
    pub fn scaled(&self, factor: &S) -> Self {
        SchemaVector {
            mask: self.mask,
            basis: self.basis,
            entries: self.entries.iter().map(|e| e.mul_ref(factor)).collect(),
        }
    }

    /// Projects onto the sub-family with fixed positions `v ⊆ u`:
    /// entry k ∈ Ω_v sums the entries over k ⊕ Ω_{u⊗v̄}.
    pub fn marginalize(&self, v: Genome) -> Result<SchemaVector<S>> {
        if self.basis != Basis::Standard {
            return Err(Error::Unsupported(
                "marginalization needs the standard basis".into(),
            ));
        }
        if !v.is_within(self.mask) {
            return Err(Error::NotSubMask {
                sub: v.to_string(),
                sup: self.mask.to_string(),
            });
        }
        let mut out = vec![S::zero(); 1usize << v.popcount()];
        for (i, s) in self.entries.iter().enumerate() {
            let k = unpack_bits(i as u64, self.mask.bits());
            out[pack_bits(k, v.bits()) as usize] += s;
        }
        Ok(SchemaVector::from_raw(v, Basis::Standard, out))
    }
}

/// Fitness evaluators. All values must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub enum FitnessFunction {
    /// f(j) = #j.
    OneMax,
    /// f(j) = offset + slope · #j.
    AffinePopcount { offset: Rational, slope: Rational },
    /// Explicit values; strings missing from the table are an error.
    Table(HashMap<Genome, Rational>),
}

impl FitnessFunction {
    pub fn constant(value: Rational) -> Self {
        FitnessFunction::AffinePopcount {
            offset: value,
            slope: Rational::zero(),
        }
    }

    pub fn eval_rational(&self, j: Genome) -> Result<Rational> {
        let value = match self {
            FitnessFunction::OneMax => Rational::from_integer(j.popcount().into()),
            FitnessFunction::AffinePopcount { offset, slope } => {
                offset + slope * Rational::from_integer(j.popcount().into())
            }
            FitnessFunction::Table(map) => map
                .get(&j)
                .cloned()
                .ok_or_else(|| Error::MissingFitness(j.to_string()))?,
        };
        if value <= Rational::zero() {
            return Err(Error::NonPositiveFitness {
                genome: j.to_string(),
                value: value.to_string(),
            });
        }
        Ok(value)
    }

    pub fn eval<S: Scalar>(&self, j: Genome) -> Result<S> {
        match self {
            // skip the rational detour for the cheap built-in
            FitnessFunction::OneMax if !S::EXACT => {
                let f = j.popcount();
                if f == 0 {
                    return Err(Error::NonPositiveFitness {
                        genome: j.to_string(),
                        value: "0".into(),
                    });
                }
                Ok(S::from_int(f as i64))
            }
            _ => Ok(S::from_rational(&self.eval_rational(j)?)),
        }
    }

    /// Parses a JSON object mapping binary strings to numbers or `"p/q"`.
    pub fn parse_table(json: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("fitness table must be a JSON object".into()))?;
        let mut map = HashMap::with_capacity(obj.len());
        let mut len = None;
        for (key, v) in obj {
            let genome: Genome = key.parse()?;
            if *len.get_or_insert(genome.len()) != genome.len() {
                return Err(Error::Parse(format!(
                    "fitness key {key} has a different length"
                )));
            }
            let value = match v {
                serde_json::Value::Number(n) => parse_rational(&n.to_string())?,
                serde_json::Value::String(s) => parse_rational(s)?,
                other => return Err(Error::Parse(format!("bad fitness value {other}"))),
            };
            map.insert(genome, value);
        }
        Ok(FitnessFunction::Table(map))
    }
}
