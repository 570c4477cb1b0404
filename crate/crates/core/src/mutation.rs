//! Independent per-bit mutation.
//!
//! Bit i flips with probability p_i, so the mutation-mask distribution is the
//! product μ_m = ∏ p_i^{m_i} (1 - p_i)^{1 - m_i}. In the Walsh basis the
//! operator is diagonal: coefficient k is multiplied by ∏_{i∈I(k)} q_i with
//! q_i = 1 - 2 p_i.

use num_traits::{One, Zero};

use crate::bitspace::{check_dense, low_mask, Genome, MAX_DENSE_LEN};
use crate::error::{Error, Result};
use crate::popmodel::{settle_distribution, Basis, PopulationVector, SchemaVector};
use crate::scalar::{Rational, Scalar};
use crate::walsh::{fwht, WalshVector};

/// Largest order for which the dense schema mutation matrix is built.
pub const MATRIX_MAX_ORDER: u32 = 10;

/// Per-position flip probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationRates {
    p: Vec<Rational>,
}

impl MutationRates {
    pub fn per_bit(p: Vec<Rational>) -> Result<Self> {
        Genome::zero(p.len() as u32)?;
        for (i, pi) in p.iter().enumerate() {
            if *pi < Rational::zero() || *pi > Rational::one() {
                return Err(Error::InvalidProbability(format!(
                    "mutation rate {pi} at position {i}"
                )));
            }
        }
        Ok(MutationRates { p })
    }

    pub fn uniform(len: u32, p: Rational) -> Result<Self> {
        Self::per_bit(vec![p; len as usize])
    }

    pub fn none(len: u32) -> Result<Self> {
        Self::uniform(len, Rational::zero())
    }

    pub fn len(&self) -> u32 {
        self.p.len() as u32
    }

    pub fn rates(&self) -> &[Rational] {
        &self.p
    }

    /// p_i for position i.
    pub fn rate(&self, i: u32) -> &Rational {
        &self.p[i as usize]
    }

    /// q_i = 1 - 2 p_i.
    pub fn q(&self, i: u32) -> Rational {
        Rational::one() - &self.p[i as usize] * Rational::from_integer(2.into())
    }

    /// The common rate when every position has the same one.
    pub fn uniform_rate(&self) -> Option<&Rational> {
        let first = self.p.first()?;
        self.p.iter().all(|x| x == first).then_some(first)
    }

    fn check_len(&self, len: u32) -> Result<()> {
        if len != self.len() {
            Err(Error::LengthMismatch {
                left: self.len(),
                right: len,
            })
        } else {
            Ok(())
        }
    }

    /// μ_m, with 0^0 = 1.
    pub fn mu_mass(&self, m: Genome) -> Result<Rational> {
        self.check_len(m.len())?;
        Ok(self.product_over(low_mask(self.len()), m.bits()))
    }

    /// ∏_{i∈I(positions)} (p_i if bit i of `flips` is set, else 1 - p_i).
    fn product_over(&self, positions: u64, flips: u64) -> Rational {
        let mut out = Rational::one();
        let mut rest = positions;
        while rest != 0 {
            let i = rest.trailing_zeros();
            let pi = &self.p[i as usize];
            if (flips >> i) & 1 == 1 {
                out *= pi;
            } else {
                out *= Rational::one() - pi;
            }
            rest &= rest - 1;
        }
        out
    }

    /// The probability that no fixed position of u is flipped,
    /// ∏_{i∈I(u)} (1 - p_i): the diagonal of U^(u).
    pub fn retention_probability(&self, u: Genome) -> Result<Rational> {
        self.check_len(u.len())?;
        Ok(self.product_over(u.bits(), 0))
    }

    /// μ^(u) over packed k ∈ Ω_u.
    pub fn mu_schema<S: Scalar>(&self, u: Genome) -> Result<SchemaVector<S>> {
        self.check_len(u.len())?;
        let entries = u
            .subgroup()
            .map(|k| S::from_rational(&self.product_over(u.bits(), k)))
            .collect();
        Ok(SchemaVector::from_raw(u, Basis::Standard, entries))
    }

    /// Dense μ over all of Ω.
    pub fn materialize<S: Scalar>(&self) -> Result<Vec<S>> {
        check_dense(self.len(), MAX_DENSE_LEN)?;
        let full = Genome::ones(self.len())?;
        Ok(self.mu_schema(full)?.into_entries())
    }

    /// ∏_{i∈I(k)} q_i for every packed k ∈ Ω_u, built along the subset
    /// lattice: each entry extends the entry without its lowest bit.
    pub fn q_products<S: Scalar>(&self, u: Genome) -> Result<Vec<S>> {
        self.check_len(u.len())?;
        let qs: Vec<S> = {
            let mut rest = u.bits();
            let mut out = Vec::with_capacity(u.popcount() as usize);
            while rest != 0 {
                out.push(S::from_rational(&self.q(rest.trailing_zeros())));
                rest &= rest - 1;
            }
            out
        };
        let size = 1usize << u.popcount();
        let mut prod = Vec::with_capacity(size);
        prod.push(S::one());
        for i in 1..size {
            let low = i.trailing_zeros() as usize;
            let v = prod[i & (i - 1)].mul_ref(&qs[low]);
            prod.push(v);
        }
        Ok(prod)
    }

    /// The dense matrix U^(u)_{j,k} = μ^(u)_{j⊕k} over packed indices.
    pub fn schema_matrix<S: Scalar>(&self, u: Genome) -> Result<Vec<Vec<S>>> {
        if u.popcount() > MATRIX_MAX_ORDER {
            return Err(Error::DenseTooLarge {
                len: u.popcount(),
                max: MATRIX_MAX_ORDER,
            });
        }
        let mu = self.mu_schema::<S>(u)?.into_entries();
        let size = mu.len();
        Ok((0..size)
            .map(|j| (0..size).map(|k| mu[j ^ k].clone()).collect())
            .collect())
    }
}

/// The mutation heuristic U(x), applied as a diagonal scaling in the Walsh
/// basis.
pub fn mutate_full<S: Scalar>(
    x: &PopulationVector<S>,
    rates: &MutationRates,
) -> Result<PopulationVector<S>> {
    check_dense(x.len(), MAX_DENSE_LEN)?;
    rates.check_len(x.len())?;
    let scale = rates.q_products::<S>(Genome::ones(x.len())?)?;
    let mut hat = WalshVector::from_population(x)?.into_entries();
    for (h, q) in hat.iter_mut().zip(&scale) {
        *h *= q;
    }
    fwht(&mut hat)?;
    settle_distribution(&mut hat)?;
    Ok(PopulationVector::from_raw(x.len(), hat))
}

/// ŷ_k^(u) = x̂_k^(u) ∏_{i∈I(k)} q_i.
pub fn mutate_schema_walsh<S: Scalar>(
    shat: &SchemaVector<S>,
    rates: &MutationRates,
) -> Result<SchemaVector<S>> {
    if shat.basis() != Basis::Walsh {
        return Err(Error::Unsupported(
            "expected a Walsh-basis schema vector".into(),
        ));
    }
    let scale = rates.q_products::<S>(shat.mask())?;
    let entries = shat
        .entries()
        .iter()
        .zip(&scale)
        .map(|(e, q)| e.mul_ref(q))
        .collect();
    Ok(SchemaVector::from_raw(shat.mask(), Basis::Walsh, entries))
}

/// y^(u) = U^(u) x^(u), computed through the Walsh basis.
pub fn mutate_schema<S: Scalar>(
    s: &SchemaVector<S>,
    rates: &MutationRates,
) -> Result<SchemaVector<S>> {
    if s.basis() != Basis::Standard {
        return Err(Error::Unsupported(
            "expected a standard-basis schema vector".into(),
        ));
    }
    let scale = rates.q_products::<S>(s.mask())?;
    let mut v = s.entries().to_vec();
    fwht(&mut v)?;
    for (h, q) in v.iter_mut().zip(&scale) {
        *h *= q;
    }
    fwht(&mut v)?;
    settle_distribution(&mut v)?;
    Ok(SchemaVector::from_raw(s.mask(), Basis::Standard, v))
}

/// Lower bound (1 - p)^{#u} · s for a uniform rate p.
pub fn holland_mutation_bound<S: Scalar>(
    s: &SchemaVector<S>,
    p: &Rational,
) -> Result<SchemaVector<S>> {
    if *p < Rational::zero() || *p > Rational::one() {
        return Err(Error::InvalidProbability(p.to_string()));
    }
    let keep = num_traits::pow(Rational::one() - p, s.mask().popcount() as usize);
    Ok(s.scaled(&S::from_rational(&keep)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Exact};
    use crate::walsh::{from_walsh, fwht_copy, to_walsh};
    use proptest::prelude::*;

    fn g(s: &str) -> Genome {
        s.parse().unwrap()
    }

    fn ex(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    /// y_k = Σ_j μ_{j⊕k} x_j.
    fn convolve(x: &[Exact], mu: &[Exact]) -> Vec<Exact> {
        (0..x.len())
            .map(|k| (0..x.len()).fold(Exact::zero(), |acc, j| acc + mu[j ^ k].mul_ref(&x[j])))
            .collect()
    }

    fn matrix_apply<S: Scalar>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
        m.iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.mul_ref(b))
            })
            .collect()
    }

    #[test]
    fn mu_mass_examples() {
        let rates = MutationRates::per_bit(vec![ratio(1, 3), ratio(1, 5)]).unwrap();
        let mu: Vec<Rational> = (0..4)
            .map(|m| rates.mu_mass(Genome::new(m, 2).unwrap()).unwrap())
            .collect();
        let (p0, p1) = (ratio(1, 3), ratio(1, 5));
        let one = ratio(1, 1);
        assert_eq!(
            mu,
            vec![
                (&one - &p0) * (&one - &p1),
                &p0 * (&one - &p1),
                (&one - &p0) * &p1,
                &p0 * &p1
            ]
        );
        let none = MutationRates::none(3)
            .unwrap()
            .materialize::<Exact>()
            .unwrap();
        assert_eq!(none[0], ex(1, 1));
        assert!(none[1..].iter().all(|e| e.is_zero()));
        let all = MutationRates::uniform(3, ratio(1, 1))
            .unwrap()
            .materialize::<Exact>()
            .unwrap();
        assert_eq!(all[7], ex(1, 1));
        assert!(all[..7].iter().all(|e| e.is_zero()));
        assert!(MutationRates::uniform(3, ratio(-1, 2)).is_err());
    }

    #[test]
    fn mu_schema_examples() {
        let rates = MutationRates::uniform(5, ratio(1, 8)).unwrap();
        let mu = rates.mu_schema::<Exact>(g("01010")).unwrap();
        assert_eq!(mu.entries(), &[ex(49, 64), ex(7, 64), ex(7, 64), ex(1, 64)]);
        let zero = rates.mu_schema::<Exact>(Genome::zero(5).unwrap()).unwrap();
        assert_eq!(zero.entries(), &[ex(1, 1)]);
    }

    #[test]
    fn mutate_full_examples() {
        let x = PopulationVector::<Exact>::indicator(g("00")).unwrap();
        let rates = MutationRates::uniform(2, ratio(1, 4)).unwrap();
        let y = mutate_full(&x, &rates).unwrap();
        let mu = rates.materialize::<Exact>().unwrap();
        assert_eq!(y.entries(), convolve(x.entries(), &mu).as_slice());
        assert_eq!(y.entries(), &[ex(9, 16), ex(3, 16), ex(3, 16), ex(1, 16)]);

        let z = PopulationVector::from_entries(2, vec![ex(1, 2), ex(1, 4), ex(1, 8), ex(1, 8)])
            .unwrap();
        assert_eq!(
            mutate_full(&z, &MutationRates::none(2).unwrap()).unwrap(),
            z
        );
        let half = MutationRates::uniform(2, ratio(1, 2)).unwrap();
        assert_eq!(
            mutate_full(&z, &half).unwrap(),
            PopulationVector::uniform(2).unwrap()
        );
    }

    #[test]
    fn walsh_schema_example() {
        let u = g("01010");
        let yhat = SchemaVector::new(
            u,
            Basis::Walsh,
            vec![ex(20, 40), ex(-4, 40), ex(10, 40), ex(1, 40)],
        )
        .unwrap();
        let rates = MutationRates::uniform(5, ratio(1, 8)).unwrap();
        let zhat = mutate_schema_walsh(&yhat, &rates).unwrap();
        assert_eq!(
            zhat.entries(),
            &[ex(1, 2), ex(-3, 40), ex(3, 16), ex(9, 640)]
        );
        let other = MutationRates::per_bit(vec![
            ratio(1, 3),
            ratio(0, 1),
            ratio(1, 5),
            ratio(0, 1),
            ratio(1, 7),
        ])
        .unwrap();
        assert_eq!(mutate_schema_walsh(&yhat, &other).unwrap(), yhat);
    }

    #[test]
    fn schema_examples() {
        let u = g("01010");
        let y = SchemaVector::new(
            u,
            Basis::Standard,
            vec![ex(27, 80), ex(33, 80), ex(5, 80), ex(15, 80)],
        )
        .unwrap();
        let rates = MutationRates::uniform(5, ratio(1, 8)).unwrap();
        let z = mutate_schema(&y, &rates).unwrap();
        assert_eq!(
            z.entries(),
            &[ex(401, 1280), ex(479, 1280), ex(143, 1280), ex(257, 1280)]
        );
        let oracle = matrix_apply(&rates.schema_matrix::<Exact>(u).unwrap(), y.entries());
        assert_eq!(z.entries(), oracle.as_slice());

        assert_eq!(
            mutate_schema(&y, &MutationRates::none(5).unwrap()).unwrap(),
            y
        );
        let half = MutationRates::uniform(5, ratio(1, 2)).unwrap();
        assert_eq!(
            mutate_schema(&y, &half).unwrap().entries(),
            vec![ex(1, 4); 4].as_slice()
        );
    }

    #[test]
    fn bound_examples() {
        let u = g("01010");
        let y = SchemaVector::new(
            u,
            Basis::Standard,
            vec![ex(27, 80), ex(33, 80), ex(5, 80), ex(15, 80)],
        )
        .unwrap();
        let bound = holland_mutation_bound(&y, &ratio(1, 8)).unwrap();
        assert_eq!(bound, y.scaled(&ex(49, 64)));
        let z = [ex(401, 1280), ex(479, 1280), ex(143, 1280), ex(257, 1280)];
        for (b, e) in bound.entries().iter().zip(&z) {
            assert!(e >= b);
        }
        let rates = MutationRates::uniform(5, ratio(1, 8)).unwrap();
        let m = rates.schema_matrix::<Exact>(u).unwrap();
        assert!((0..4).all(|i| m[i][i] == ex(49, 64)));
        assert_eq!(holland_mutation_bound(&y, &ratio(0, 1)).unwrap(), y);
        let unit =
            SchemaVector::new(Genome::zero(5).unwrap(), Basis::Standard, vec![ex(1, 1)]).unwrap();
        assert_eq!(holland_mutation_bound(&unit, &ratio(1, 3)).unwrap(), unit);
    }

    fn rates_strategy(len: u32) -> impl Strategy<Value = MutationRates> {
        prop::collection::vec(0i64..=16, len as usize).prop_map(|v| {
            MutationRates::per_bit(v.into_iter().map(|k| ratio(k, 16)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn walsh_diagonalizes_schema_matrix((u, rates) in (1u32..=6).prop_flat_map(|len| {
            (0..(1u64 << len), rates_strategy(len)).prop_map(move |(u, r)| (Genome::new(u, len).unwrap(), r))
        })) {
            let m = rates.schema_matrix::<f64>(u).unwrap();
            let size = m.len();
            // W M W, column by column
            let mut cols: Vec<Vec<f64>> = (0..size)
                .map(|k| fwht_copy(&(0..size).map(|j| m[j][k]).collect::<Vec<_>>()).unwrap())
                .collect();
            let mut out = vec![vec![0.0; size]; size];
            for i in 0..size {
                let row: Vec<f64> = cols.iter_mut().map(|c| c[i]).collect();
                out[i] = fwht_copy(&row).unwrap();
            }
            let q = rates.q_products::<f64>(u).unwrap();
            for (i, row) in out.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let expected = if i == j { q[i] } else { 0.0 };
                    prop_assert!((v - expected).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn projection_commutes((len, w, u) in (1u32..=7).prop_flat_map(|len| {
            (Just(len), prop::collection::vec(0i64..4, 1usize << len), 0..(1u64 << len))
        }), seed in rates_strategy(7)) {
            let mut w = w;
            if w.iter().all(|&x| x == 0) { w[0] = 1; }
            let total: i64 = w.iter().sum();
            let x = PopulationVector::from_entries(len, w.iter().map(|&a| ex(a, total)).collect()).unwrap();
            let rates = MutationRates::per_bit(seed.rates()[..len as usize].to_vec()).unwrap();
            let u = Genome::new(u, len).unwrap();
            let lhs = mutate_full(&x, &rates).unwrap().schema_averages(u).unwrap();
            let rhs = mutate_schema(&x.schema_averages(u).unwrap(), &rates).unwrap();
            prop_assert_eq!(&lhs, &rhs);
            prop_assert_eq!(lhs.total(), Exact::one());
            let oracle = matrix_apply(&rates.schema_matrix::<Exact>(u).unwrap(), x.schema_averages(u).unwrap().entries());
            prop_assert_eq!(lhs.entries(), oracle.as_slice());
        }

        #[test]
        fn mutation_contracts((len, w) in (1u32..=6).prop_flat_map(|len| {
            (Just(len), prop::collection::vec(0i64..4, 1usize << len))
        }), p in prop::collection::vec(1i64..=8, 6)) {
            let mut w = w;
            if w.iter().all(|&x| x == 0) { w[0] = 1; }
            let total: i64 = w.iter().sum();
            let u = Genome::ones(len).unwrap();
            let s = SchemaVector::new(u, Basis::Standard, w.iter().map(|&a| ex(a, total)).collect()).unwrap();
            let rates = MutationRates::per_bit(p[..len as usize].iter().map(|&k| ratio(k, 16)).collect()).unwrap();
            let yhat = to_walsh(&s).unwrap();
            let zhat = mutate_schema_walsh(&yhat, &rates).unwrap();
            for k in 1..yhat.entries().len() {
                if !yhat.entries()[k].is_zero() {
                    prop_assert!(zhat.entries()[k].abs() < yhat.entries()[k].abs());
                }
            }
            let z = from_walsh(&zhat).unwrap();
            prop_assert!(z.entries().iter().all(|e| !e.is_negative()));
        }

        #[test]
        fn uniform_population_is_fixed(len in 1u32..=6, p in prop::collection::vec(0i64..=16, 6)) {
            let rates = MutationRates::per_bit(p[..len as usize].iter().map(|&k| ratio(k, 16)).collect()).unwrap();
            let x = PopulationVector::<Exact>::uniform(len).unwrap();
            prop_assert_eq!(mutate_full(&x, &rates).unwrap(), x);
        }
    }
}
