//! Crossover-mask distributions and the crossover heuristic.
//!
//! A mask m produces the children (i⊗m)⊕(j⊗m̄) and (i⊗m̄)⊕(j⊗m) from parents
//! i and j, one of which is kept at random. Every formula therefore depends
//! on χ only through the symmetrized weights χ̃_m = (χ_m + χ_m̄)/2, which are
//! computed once when a distribution is built.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::bitspace::{check_dense, low_mask, pack_bits, Genome, MAX_DENSE_LEN};
use crate::error::{Error, Result};
use crate::par;
use crate::popmodel::{settle_distribution, Basis, PopulationVector, SchemaVector};
use crate::scalar::{Rational, Scalar};
use crate::walsh::WalshVector;

/// Longest string accepted by the quadratic reference implementation.
pub const ORACLE_MAX_LEN: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverFamily {
    OnePoint,
    TwoPoint,
    Uniform,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
enum Support {
    /// Explicit masks with positive probability.
    Sparse(BTreeMap<u64, Rational>),
    /// Mass `rate` spread evenly over all 2^ℓ masks, `1 - rate` extra on 0.
    Uniform { rate: Rational },
}

/// A probability distribution over crossover masks.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverDistribution {
    len: u32,
    family: CrossoverFamily,
    rate: Option<Rational>,
    support: Support,
    symmetrized: bool,
    /// χ̃ over the sparse support; `None` for the implicit uniform form,
    /// which is symmetric apart from the mask-0 term.
    sym: Option<BTreeMap<u64, Rational>>,
}

fn check_rate(c: &Rational) -> Result<()> {
    if *c < Rational::zero() || *c > Rational::one() {
        Err(Error::InvalidProbability(format!("crossover rate {c}")))
    } else {
        Ok(())
    }
}

fn symmetrize_map(len: u32, map: &BTreeMap<u64, Rational>) -> BTreeMap<u64, Rational> {
    let full = low_mask(len);
    let half = Rational::new(1.into(), 2.into());
    let mut out: BTreeMap<u64, Rational> = BTreeMap::new();
    for (&m, p) in map {
        let w = p * &half;
        *out.entry(m).or_insert_with(Rational::zero) += &w;
        *out.entry(m ^ full).or_insert_with(Rational::zero) += &w;
    }
    out.retain(|_, p| !p.is_zero());
    out
}

impl CrossoverDistribution {
    fn sparse(
        len: u32,
        family: CrossoverFamily,
        rate: Option<Rational>,
        mut map: BTreeMap<u64, Rational>,
    ) -> Self {
        map.retain(|_, p| !p.is_zero());
        let sym = symmetrize_map(len, &map);
        CrossoverDistribution {
            len,
            family,
            rate,
            support: Support::Sparse(map),
            symmetrized: false,
            sym: Some(sym),
        }
    }

    /// One-point crossover: mask 0 with probability 1 - c, each mask 2^i - 1
    /// (i = 1..ℓ-1) with probability c/(ℓ-1).
    pub fn one_point(len: u32, c: Rational) -> Result<Self> {
        Genome::zero(len)?;
        check_rate(&c)?;
        if len < 2 && !c.is_zero() {
            return Err(Error::InvalidDistribution(
                "one-point crossover needs at least two positions".into(),
            ));
        }
        let mut map = BTreeMap::new();
        map.insert(0, Rational::one() - &c);
        if len >= 2 {
            let each = &c / Rational::from_integer((len - 1).into());
            for i in 1..len {
                map.insert((1u64 << i) - 1, each.clone());
            }
        }
        Ok(Self::sparse(len, CrossoverFamily::OnePoint, Some(c), map))
    }

    /// Two-point crossover: with probability c, a contiguous run 2^a - 2^b
    /// between two distinct interior cut points 1 <= b < a <= ℓ-1.
    pub fn two_point(len: u32, c: Rational) -> Result<Self> {
        Genome::zero(len)?;
        check_rate(&c)?;
        if len < 3 && !c.is_zero() {
            return Err(Error::InvalidDistribution(
                "two-point crossover needs at least three positions".into(),
            ));
        }
        let mut map = BTreeMap::new();
        map.insert(0, Rational::one() - &c);
        if len >= 3 {
            let pairs = (len - 1) * (len - 2) / 2;
            let each = &c / Rational::from_integer(pairs.into());
            for a in 2..len {
                for b in 1..a {
                    *map.entry((1u64 << a) - (1u64 << b))
                        .or_insert_with(Rational::zero) += &each;
                }
            }
        }
        Ok(Self::sparse(len, CrossoverFamily::TwoPoint, Some(c), map))
    }

    /// Uniform crossover: with probability c each position independently
    /// comes from either parent.
    pub fn uniform(len: u32, c: Rational) -> Result<Self> {
        Genome::zero(len)?;
        check_rate(&c)?;
        Ok(CrossoverDistribution {
            len,
            family: CrossoverFamily::Uniform,
            rate: Some(c.clone()),
            support: Support::Uniform { rate: c },
            symmetrized: false,
            sym: None,
        })
    }

    /// An explicit distribution; probabilities must be nonnegative and sum
    /// to exactly 1.
    pub fn custom(len: u32, masks: impl IntoIterator<Item = (Genome, Rational)>) -> Result<Self> {
        Genome::zero(len)?;
        let mut map: BTreeMap<u64, Rational> = BTreeMap::new();
        for (m, p) in masks {
            if m.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: m.len(),
                });
            }
            if p < Rational::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "mask {m} has probability {p}"
                )));
            }
            *map.entry(m.bits()).or_insert_with(Rational::zero) += p;
        }
        let total: Rational = map.values().sum();
        if total != Rational::one() {
            return Err(Error::InvalidDistribution(format!(
                "crossover probabilities sum to {total}"
            )));
        }
        Ok(Self::sparse(len, CrossoverFamily::Custom, None, map))
    }

    /// Parses a JSON object mapping binary mask strings to probabilities.
    pub fn parse_custom(json: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("crossover file must be a JSON object".into()))?;
        let mut masks = Vec::with_capacity(obj.len());
        for (key, v) in obj {
            let m: Genome = key.parse()?;
            let p = match v {
                serde_json::Value::Number(n) => crate::scalar::parse_rational(&n.to_string())?,
                serde_json::Value::String(s) => crate::scalar::parse_rational(s)?,
                other => return Err(Error::Parse(format!("bad probability {other}"))),
            };
            masks.push((m, p));
        }
        let len = masks
            .first()
            .map(|(m, _)| m.len())
            .ok_or_else(|| Error::InvalidDistribution("empty crossover file".into()))?;
        Self::custom(len, masks)
    }

    /// The distribution with χ̃ as its own support.
    pub fn symmetrize(&self) -> Self {
        match &self.support {
            Support::Sparse(_) => {
                let sym = self.sym.clone().expect("sparse support is symmetrized");
                CrossoverDistribution {
                    len: self.len,
                    family: self.family,
                    rate: self.rate.clone(),
                    support: Support::Sparse(sym.clone()),
                    symmetrized: true,
                    sym: Some(sym),
                }
            }
            Support::Uniform { .. } => CrossoverDistribution {
                symmetrized: true,
                ..self.clone()
            },
        }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn family(&self) -> CrossoverFamily {
        self.family
    }

    /// The crossover rate c for the built-in families.
    pub fn rate(&self) -> Option<&Rational> {
        self.rate.as_ref()
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// Probability of mask m as stored (χ_m, or χ̃_m once symmetrized).
    pub fn probability(&self, m: Genome) -> Rational {
        match &self.support {
            Support::Sparse(map) => map.get(&m.bits()).cloned().unwrap_or_else(Rational::zero),
            Support::Uniform { rate } => self.uniform_mass(rate, m.bits()),
        }
    }

    /// χ̃_m.
    pub fn symmetric_probability(&self, m: Genome) -> Rational {
        match (&self.sym, &self.support) {
            (Some(sym), _) => sym.get(&m.bits()).cloned().unwrap_or_else(Rational::zero),
            (None, Support::Uniform { rate }) => {
                let full = low_mask(self.len);
                let a = self.uniform_mass(rate, m.bits());
                let b = self.uniform_mass(rate, m.bits() ^ full);
                (a + b) / Rational::from_integer(2.into())
            }
            (None, Support::Sparse(_)) => unreachable!("sparse support carries χ̃"),
        }
    }

    fn uniform_mass(&self, rate: &Rational, m: u64) -> Rational {
        let denom = Rational::from_integer(num_bigint::BigInt::one() << self.len as usize);
        let mut p = rate / denom;
        if m == 0 && !self.symmetrized {
            p += Rational::one() - rate;
        }
        if self.symmetrized && (m == 0 || m == low_mask(self.len)) {
            p += (Rational::one() - rate) / Rational::from_integer(2.into());
        }
        p
    }

    /// Explicit (mask, probability) support; `None` for the implicit uniform
    /// form.
    pub fn sparse_support(&self) -> Option<impl Iterator<Item = (Genome, &Rational)> + '_> {
        match &self.support {
            Support::Sparse(map) => {
                let len = self.len;
                Some(
                    map.iter()
                        .map(move |(&m, p)| (Genome::new(m, len).expect("mask fits"), p)),
                )
            }
            Support::Uniform { .. } => None,
        }
    }

    /// χ̃ pushed forward through m ↦ pack(m ⊗ u, u): the weights of the
    /// induced masks on Ω_u, keyed by packed mask.
    pub fn restricted(&self, u: Genome) -> Result<BTreeMap<u64, Rational>> {
        if u.len() != self.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: u.len(),
            });
        }
        let order = u.popcount();
        let full = low_mask(order);
        let mut out: BTreeMap<u64, Rational> = BTreeMap::new();
        match (&self.sym, &self.support) {
            (Some(sym), _) => {
                for (&m, p) in sym {
                    *out.entry(pack_bits(m, u.bits()))
                        .or_insert_with(Rational::zero) += p;
                }
            }
            (None, Support::Uniform { rate }) => {
                // each restricted pattern is equally likely under the uniform part
                let each =
                    rate / Rational::from_integer(num_bigint::BigInt::one() << order as usize);
                for pm in 0..=full {
                    out.insert(pm, each.clone());
                }
                let clone_half = (Rational::one() - rate) / Rational::from_integer(2.into());
                *out.entry(0).or_insert_with(Rational::zero) += &clone_half;
                *out.entry(full).or_insert_with(Rational::zero) += &clone_half;
            }
            (None, Support::Sparse(_)) => unreachable!("sparse support carries χ̃"),
        }
        out.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    /// Restricted weights with each complementary pair folded onto its
    /// smaller representative; the two members contribute identical terms.
    fn folded_weights<S: Scalar>(&self, u: Genome) -> Result<Vec<(u64, S)>> {
        let full = low_mask(u.popcount());
        let mut folded: BTreeMap<u64, Rational> = BTreeMap::new();
        for (pm, p) in self.restricted(u)? {
            let key = pm.min(pm ^ full);
            *folded.entry(key).or_insert_with(Rational::zero) += p;
        }
        Ok(folded
            .into_iter()
            .map(|(pm, p)| (pm, S::from_rational(&p)))
            .collect())
    }

    /// Probability that a mask leaves u intact (all of u on one side).
    pub fn retention_probability(&self, u: Genome) -> Result<Rational> {
        let full = low_mask(u.popcount());
        let restricted = self.restricted(u)?;
        let mut total = Rational::zero();
        for (pm, p) in restricted {
            if pm == 0 || pm == full {
                total += p;
            }
        }
        Ok(total)
    }
}

/// ŷ_k = 2^{d/2} Σ_pm χ̃_pm ŝ_{k⊗pm} ŝ_{k⊗p̄m} over a d-dimensional Walsh
/// vector. With the weights folded by complement pairs.
fn walsh_crossover_kernel<S: Scalar>(hat: &[S], order: u32, weights: &[(u64, S)]) -> Vec<S> {
    let full = low_mask(order);
    let scale = order as i32;
    par::map_range(hat.len(), |k| {
        let k = k as u64;
        let mut acc = S::zero();
        for (pm, w) in weights {
            let a = &hat[(k & pm) as usize];
            if a.is_zero() {
                continue;
            }
            let b = &hat[(k & !pm & full) as usize];
            if b.is_zero() {
                continue;
            }
            acc += &w.mul_ref(&a.mul_ref(b));
        }
        acc.scale_sqrt2(scale)
    })
}

/// The crossover heuristic C(x), evaluated in the Walsh basis.
pub fn crossover_full<S: Scalar>(
    x: &PopulationVector<S>,
    chi: &CrossoverDistribution,
) -> Result<PopulationVector<S>> {
    check_dense(x.len(), MAX_DENSE_LEN)?;
    if x.len() != chi.len {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: chi.len,
        });
    }
    let full = Genome::ones(x.len())?;
    let weights = chi.folded_weights::<S>(full)?;
    let xhat = WalshVector::from_population(x)?;
    let yhat = walsh_crossover_kernel(xhat.entries(), x.len(), &weights);
    let mut y = WalshVector::from_raw(x.len(), yhat)
        .to_population()?
        .into_entries();
    settle_distribution(&mut y)?;
    Ok(PopulationVector::from_raw(x.len(), y))
}

/// Reference crossover by the quadratic-form definition
/// C_k(x) = Σ_{i,j} x_{i⊕k} x_{j⊕k} C_{i,j}, with
/// C_{i,j} = Σ_m χ̃_m [i⊗m ⊕ j⊗m̄ = 0]. Quadratic cost; for tests.
pub fn crossover_oracle<S: Scalar>(
    x: &PopulationVector<S>,
    chi: &CrossoverDistribution,
) -> Result<PopulationVector<S>> {
    check_dense(x.len(), ORACLE_MAX_LEN)?;
    if x.len() != chi.len {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: chi.len,
        });
    }
    let len = x.len();
    let n = 1usize << len;
    let full = low_mask(len);
    let masks: Vec<(u64, S)> = (0..n as u64)
        .filter_map(|m| {
            let p = chi.symmetric_probability(Genome::new(m, len).ok()?);
            (!p.is_zero()).then(|| (m, S::from_rational(&p)))
        })
        .collect();
    let nonzero: Vec<usize> = (0..n).filter(|&i| !x.entries()[i].is_zero()).collect();
    let matrix_entry = |i: u64, j: u64| {
        let mut c = S::zero();
        for (m, w) in &masks {
            if (i & m) ^ (j & !m & full) == 0 {
                c += w;
            }
        }
        c
    };
    let y = par::map_range(n, |k| {
        let mut acc = S::zero();
        for &a in &nonzero {
            for &b in &nonzero {
                let c = matrix_entry((a ^ k) as u64, (b ^ k) as u64);
                if !c.is_zero() {
                    acc += &c.mul_ref(&x.entries()[a].mul_ref(&x.entries()[b]));
                }
            }
        }
        acc
    });
    Ok(PopulationVector::from_raw(len, y))
}

/// Crossover on a Walsh-basis schema vector:
/// ŷ_k^(u) = Σ_m χ̃_m x̂_{k⊗m}^(u⊗m) x̂_{k⊗m̄}^(u⊗m̄), with the sub-mask
/// coefficients rescaled from x̂^(u) by 2^{(#u - #v)/2}.
pub fn crossover_schema_walsh<S: Scalar>(
    shat: &SchemaVector<S>,
    chi: &CrossoverDistribution,
) -> Result<SchemaVector<S>> {
    if shat.basis() != Basis::Walsh {
        return Err(Error::Unsupported(
            "expected a Walsh-basis schema vector".into(),
        ));
    }
    let u = shat.mask();
    let weights = chi.folded_weights::<S>(u)?;
    let out = walsh_crossover_kernel(shat.entries(), u.popcount(), &weights);
    Ok(SchemaVector::from_raw(u, Basis::Walsh, out))
}

/// Crossover on standard-basis schema averages:
/// y_k^(u) = Σ_m χ̃_m x_{k⊗m}^(u⊗m) x_{k⊗m̄}^(u⊗m̄), marginals memoized
/// per distinct sub-mask.
pub fn crossover_schema<S: Scalar>(
    s: &SchemaVector<S>,
    chi: &CrossoverDistribution,
) -> Result<SchemaVector<S>> {
    if s.basis() != Basis::Standard {
        return Err(Error::Unsupported(
            "expected a standard-basis schema vector".into(),
        ));
    }
    let u = s.mask();
    let restricted = chi.restricted(u)?;
    let mut marginals: HashMap<u64, SchemaVector<S>> = HashMap::new();
    let mut terms: Vec<(S, Genome, Genome)> = Vec::with_capacity(restricted.len());
    for (pm, p) in &restricted {
        let left = Genome::unpack(*pm, u)?;
        let right = Genome::new(u.bits() & !left.bits(), u.len())?;
        for v in [left, right] {
            if let std::collections::hash_map::Entry::Vacant(e) = marginals.entry(v.bits()) {
                e.insert(s.marginalize(v)?);
            }
        }
        terms.push((S::from_rational(p), left, right));
    }
    let mask = u.bits();
    let mut out = par::map_range(s.entries().len(), |i| {
        let k = crate::bitspace::unpack_bits(i as u64, mask);
        let mut acc = S::zero();
        for (w, left, right) in &terms {
            let a = &marginals[&left.bits()].entries()[pack_bits(k, left.bits()) as usize];
            let b = &marginals[&right.bits()].entries()[pack_bits(k, right.bits()) as usize];
            acc += &w.mul_ref(&a.mul_ref(b));
        }
        acc
    });
    settle_distribution(&mut out)?;
    Ok(SchemaVector::from_raw(u, Basis::Standard, out))
}

/// Lower bound s · P(mask does not split u).
pub fn holland_crossover_bound<S: Scalar>(
    s: &SchemaVector<S>,
    chi: &CrossoverDistribution,
) -> Result<SchemaVector<S>> {
    let keep = S::from_rational(&chi.retention_probability(s.mask())?);
    Ok(s.scaled(&keep))
}

/// True iff √n · x̂_{k⊗m} · x̂_{k⊗m̄} = x̂_k for every k, within `tol`.
pub fn is_linkage_equilibrium<S: Scalar>(
    x: &PopulationVector<S>,
    m: Genome,
    tol: f64,
) -> Result<bool> {
    if m.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: m.len(),
        });
    }
    let xhat = WalshVector::from_population(x)?;
    let hat = xhat.entries();
    let full = low_mask(x.len());
    let len = x.len() as i32;
    Ok((0..hat.len() as u64).all(|k| {
        let a = &hat[(k & m.bits()) as usize];
        let b = &hat[(k & !m.bits() & full) as usize];
        a.mul_ref(b)
            .scale_sqrt2(len)
            .approx_eq(&hat[k as usize], tol)
    }))
}

/// Schema-average form of linkage equilibrium:
/// x_k^(u) = x_{k⊗m}^(u⊗m) · x_{k⊗m̄}^(u⊗m̄) for every k ∈ Ω_u.
pub fn is_schema_linkage_equilibrium<S: Scalar>(
    s: &SchemaVector<S>,
    m: Genome,
    tol: f64,
) -> Result<bool> {
    let u = s.mask();
    let left = u.and(m)?;
    let right = u.and(m.complement())?;
    let a = s.marginalize(left)?;
    let b = s.marginalize(right)?;
    Ok(s.entries().iter().enumerate().all(|(i, v)| {
        let k = crate::bitspace::unpack_bits(i as u64, u.bits());
        let prod = a.entries()[pack_bits(k, left.bits()) as usize]
            .mul_ref(&b.entries()[pack_bits(k, right.bits()) as usize]);
        prod.approx_eq(v, tol)
    }))
}
