//! Orthonormal Walsh–Hadamard transforms over Ω and over the subgroups Ω_u.
//!
//! With W_{i,j} = 2^{-d/2} (-1)^{#(i⊗j)} the transform is symmetric and
//! involutive, so the same kernel converts in both directions.

use crate::bitspace::{check_dense, Genome, MAX_DENSE_LEN};
use crate::error::{Error, Result};
use crate::popmodel::{Basis, PopulationVector, SchemaVector};
use crate::scalar::Scalar;

/// In-place orthonormal fast Walsh–Hadamard transform.
///
/// Butterfly stages run from the lowest bit upward, unscaled; a single
/// factor 2^{-d/2} is applied at the end.
pub fn fwht<S: Scalar>(v: &mut [S]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let d = n.trailing_zeros() as i32;
    let mut half = 1;
    while half < n {
        butterfly_stage(v, half);
        half *= 2;
    }
    if d > 0 {
        scale_all(v, -d);
    }
    Ok(())
}

/// Out-of-place variant of [`fwht`].
pub fn fwht_copy<S: Scalar>(v: &[S]) -> Result<Vec<S>> {
    let mut out = v.to_vec();
    fwht(&mut out)?;
    Ok(out)
}

#[inline]
fn butterfly_block<S: Scalar>(block: &mut [S], half: usize) {
    let (lo, hi) = block.split_at_mut(half);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let sum = a.clone() + b.clone();
        let diff = std::mem::replace(a, sum) - b.clone();
        *b = diff;
    }
}

#[cfg(feature = "parallel")]
fn butterfly_stage<S: Scalar>(v: &mut [S], half: usize) {
    use rayon::prelude::*;
    if v.len() < 1 << 12 {
        v.chunks_mut(2 * half)
            .for_each(|block| butterfly_block(block, half));
    } else if v.len() / (2 * half) >= 8 {
        v.par_chunks_mut(2 * half)
            .for_each(|block| butterfly_block(block, half));
    } else {
        // few wide blocks: split each one across its element pairs
        for block in v.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            lo.par_iter_mut()
                .zip(hi.par_iter_mut())
                .with_min_len(1024)
                .for_each(|(a, b)| {
                    let sum = a.clone() + b.clone();
                    let diff = std::mem::replace(a, sum) - b.clone();
                    *b = diff;
                });
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn butterfly_stage<S: Scalar>(v: &mut [S], half: usize) {
    v.chunks_mut(2 * half)
        .for_each(|block| butterfly_block(block, half));
}

fn scale_all<S: Scalar>(v: &mut [S], half_exp: i32) {
    for x in v.iter_mut() {
        if !x.is_zero() {
            *x = x.scale_sqrt2(half_exp);
        }
    }
}

/// A distribution over Ω written in the Walsh basis, x̂ = Wx.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshVector<S> {
    len: u32,
    entries: Vec<S>,
}

impl<S: Scalar> WalshVector<S> {
    pub fn from_population(x: &PopulationVector<S>) -> Result<Self> {
        check_dense(x.len(), MAX_DENSE_LEN)?;
        Ok(WalshVector {
            len: x.len(),
            entries: fwht_copy(x.entries())?,
        })
    }

    pub(crate) fn from_raw(len: u32, entries: Vec<S>) -> Self {
        WalshVector { len, entries }
    }

    /// Inverse transform; no Λ membership check is made.
    pub fn to_population(&self) -> Result<PopulationVector<S>> {
        Ok(PopulationVector::from_raw(
            self.len,
            fwht_copy(&self.entries)?,
        ))
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
}

/// Converts a standard-basis schema vector to the Walsh basis over Ω_u.
pub fn to_walsh<S: Scalar>(s: &SchemaVector<S>) -> Result<SchemaVector<S>> {
    if s.basis() != Basis::Standard {
        return Err(Error::Unsupported(
            "vector is already in the Walsh basis".into(),
        ));
    }
    Ok(SchemaVector::from_raw(
        s.mask(),
        Basis::Walsh,
        fwht_copy(s.entries())?,
    ))
}

/// Inverse of [`to_walsh`].
pub fn from_walsh<S: Scalar>(s: &SchemaVector<S>) -> Result<SchemaVector<S>> {
    if s.basis() != Basis::Walsh {
        return Err(Error::Unsupported(
            "vector is already in the standard basis".into(),
        ));
    }
    Ok(SchemaVector::from_raw(
        s.mask(),
        Basis::Standard,
        fwht_copy(s.entries())?,
    ))
}

/// Walsh schema coefficients read off the full transform:
/// x̂_k^(u) = 2^{#ū/2} x̂_k for k ∈ Ω_u.
pub fn schema_walsh_from_full<S: Scalar>(
    xhat: &WalshVector<S>,
    u: Genome,
) -> Result<SchemaVector<S>> {
    if u.len() != xhat.len {
        return Err(Error::LengthMismatch {
            left: xhat.len,
            right: u.len(),
        });
    }
    let free = (u.len() - u.popcount()) as i32;
    let entries = u
        .subgroup()
        .map(|k| xhat.entries[k as usize].scale_sqrt2(free))
        .collect();
    Ok(SchemaVector::from_raw(u, Basis::Walsh, entries))
}
