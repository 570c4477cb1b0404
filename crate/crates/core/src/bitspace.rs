//! Bit-level algebra on the space of length-ℓ binary strings.
//!
//! Strings are stored as the low `len` bits of a `u64`. Bit `i` of the
//! integer is string position `i`; the text form prints the highest position
//! first, so `01010` is the integer 10.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Longest supported string.
pub const MAX_LEN: u32 = 62;

/// Longest string for which vectors indexed by the whole space are allocated.
pub const MAX_DENSE_LEN: u32 = 20;

/// A binary string of explicit length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    bits: u64,
    len: u32,
}

#[inline]
pub(crate) fn low_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl Genome {
    pub fn new(bits: u64, len: u32) -> Result<Self> {
        check_len(len)?;
        if bits & !low_mask(len) != 0 {
            return Err(Error::BitsOutOfRange { bits, len });
        }
        Ok(Genome { bits, len })
    }

    pub fn zero(len: u32) -> Result<Self> {
        Genome::new(0, len)
    }

    /// The all-ones string.
    pub fn ones(len: u32) -> Result<Self> {
        check_len(len)?;
        Ok(Genome {
            bits: low_mask(len),
            len,
        })
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.len
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn bit(self, position: u32) -> bool {
        position < self.len && (self.bits >> position) & 1 == 1
    }

    fn same_len(self, other: Genome) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    pub fn xor(self, other: Genome) -> Result<Genome> {
        self.same_len(other)?;
        Ok(Genome {
            bits: self.bits ^ other.bits,
            len: self.len,
        })
    }

    pub fn and(self, other: Genome) -> Result<Genome> {
        self.same_len(other)?;
        Ok(Genome {
            bits: self.bits & other.bits,
            len: self.len,
        })
    }

    pub fn complement(self) -> Genome {
        Genome {
            bits: !self.bits & low_mask(self.len),
            len: self.len,
        }
    }

    /// Number of ones, `#u`.
    #[inline]
    pub fn popcount(self) -> u32 {
        self.bits.count_ones()
    }

    /// `(-1)^#(a ⊗ b)`.
    pub fn parity_product(self, other: Genome) -> Result<i8> {
        self.same_len(other)?;
        Ok(parity_sign(self.bits & other.bits))
    }

    /// True when `self ⊗ mask = self`.
    pub fn is_within(self, mask: Genome) -> bool {
        self.len == mask.len && self.bits & !mask.bits == 0
    }

    /// Elements of the subgroup Ω_u in increasing order.
    pub fn subgroup(self) -> SubgroupIter {
        SubgroupIter::new(self.bits)
    }

    pub fn pack(self, mask: Genome) -> Result<u64> {
        self.same_len(mask)?;
        Ok(pack_bits(self.bits, mask.bits))
    }

    pub fn unpack(index: u64, mask: Genome) -> Result<Genome> {
        let order = mask.popcount();
        if index >> order != 0 {
            return Err(Error::IndexOutOfRange { index, order });
        }
        Ok(Genome {
            bits: unpack_bits(index, mask.bits),
            len: mask.len,
        })
    }

    /// Highest set position, 0 for the zero string.
    pub fn hi(self) -> u32 {
        if self.bits == 0 {
            0
        } else {
            63 - self.bits.leading_zeros()
        }
    }

    /// Lowest set position, `ℓ - 1` for the zero string.
    pub fn lo(self) -> u32 {
        if self.bits == 0 {
            self.len - 1
        } else {
            self.bits.trailing_zeros()
        }
    }

    /// `hi(u) - lo(u)`, clamped to 0 for the zero string.
    pub fn defining_length(self) -> u32 {
        if self.bits == 0 {
            0
        } else {
            self.hi() - self.lo()
        }
    }
}

fn check_len(len: u32) -> Result<()> {
    if len == 0 || len > MAX_LEN {
        Err(Error::LengthOutOfRange(len))
    } else {
        Ok(())
    }
}

pub(crate) fn check_dense(len: u32, max: u32) -> Result<()> {
    if len > max {
        Err(Error::DenseTooLarge { len, max })
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn parity_sign(x: u64) -> i8 {
    if x.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Extracts the bits of `j` at the set positions of `mask`; the t-th lowest
/// set position of `mask` becomes bit t of the result.
#[inline]
pub fn pack_bits(j: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut m = mask;
    let mut t = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if j & low != 0 {
            out |= 1 << t;
        }
        t += 1;
        m &= m - 1;
    }
    out
}

/// Inverse of [`pack_bits`] on Ω_mask.
#[inline]
pub fn unpack_bits(index: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut m = mask;
    let mut t = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if (index >> t) & 1 == 1 {
            out |= low;
        }
        t += 1;
        m &= m - 1;
    }
    out
}

/// Iterator over Ω_u = {v : v ⊗ u = v}, ascending.
#[derive(Debug, Clone)]
pub struct SubgroupIter {
    mask: u64,
    next: Option<u64>,
}

impl SubgroupIter {
    pub fn new(mask: u64) -> Self {
        SubgroupIter {
            mask,
            next: Some(0),
        }
    }
}

impl Iterator for SubgroupIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let current = self.next?;
        // ripple a carry through the free positions
        let succ = (current | !self.mask).wrapping_add(1) & self.mask;
        self.next = (succ != 0).then_some(succ);
        Some(current)
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in (0..self.len).rev() {
            f.write_str(if self.bit(pos) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let len = u32::try_from(s.len()).map_err(|_| Error::Parse(s.to_string()))?;
        check_len(len)?;
        let mut bits = 0u64;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(Error::Parse(format!("not a binary string: {s:?}"))),
            }
        }
        Genome::new(bits, len)
    }
}

/// A schema Ω_ū ⊕ v: the fixed positions `mask` and their values `value`
/// (with `value ⊗ mask = value`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Schema {
    pub mask: Genome,
    pub value: Genome,
}

impl Schema {
    pub fn new(mask: Genome, value: Genome) -> Result<Self> {
        mask.same_len(value)?;
        if !value.is_within(mask) {
            return Err(Error::NotSubMask {
                sub: value.to_string(),
                sup: mask.to_string(),
            });
        }
        Ok(Schema { mask, value })
    }

    /// Schema from the mask and a packed index into Ω_mask.
    pub fn from_packed(mask: Genome, index: u64) -> Result<Self> {
        Ok(Schema {
            mask,
            value: Genome::unpack(index, mask)?,
        })
    }

    pub fn order(&self) -> u32 {
        self.mask.popcount()
    }

    pub fn contains(&self, j: Genome) -> bool {
        j.len == self.mask.len && j.bits & self.mask.bits == self.value.bits
    }
}

/// Pattern text with `*` at free positions, highest position first.
impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in (0..self.mask.len).rev() {
            let c = if !self.mask.bit(pos) {
                "*"
            } else if self.value.bit(pos) {
                "1"
            } else {
                "0"
            };
            f.write_str(c)?;
        }
        Ok(())
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let len = u32::try_from(s.len()).map_err(|_| Error::Parse(s.to_string()))?;
        check_len(len)?;
        let (mut mask, mut value) = (0u64, 0u64);
        for c in s.chars() {
            mask <<= 1;
            value <<= 1;
            match c {
                '*' => {}
                '0' => mask |= 1,
                '1' => {
                    mask |= 1;
                    value |= 1;
                }
                _ => return Err(Error::Parse(format!("not a schema pattern: {s:?}"))),
            }
        }
        Ok(Schema {
            mask: Genome::new(mask, len)?,
            value: Genome::new(value, len)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(s: &str) -> Genome {
        s.parse().unwrap()
    }

    #[test]
    fn xor_examples() {
        assert_eq!(g("001001").xor(g("100010")).unwrap(), g("101011"));
        assert_eq!(g("01010").xor(g("01010")).unwrap(), g("00000"));
        assert_eq!(g("01010").xor(g("00010")).unwrap(), g("01000"));
        assert!(matches!(
            g("0101").xor(g("01010")),
            Err(Error::LengthMismatch { left: 4, right: 5 })
        ));
    }

    #[test]
    fn and_complement_popcount() {
        assert_eq!(g("01010").and(g("00011")).unwrap(), g("00010"));
        assert_eq!(g("01010").and(g("11100")).unwrap(), g("01000"));
        assert_eq!(g("00111").complement(), g("11000"));
        assert_eq!(g("01010").popcount(), 2);
        assert!(g("01").and(g("011")).is_err());
    }

    #[test]
    fn parity_examples() {
        assert_eq!(g("00000").parity_product(g("11011")).unwrap(), 1);
        assert_eq!(g("01010").parity_product(g("01010")).unwrap(), 1);
        assert_eq!(g("01010").parity_product(g("00010")).unwrap(), -1);
    }

    #[test]
    fn subgroup_examples() {
        let v: Vec<u64> = Genome::new(9, 6).unwrap().subgroup().collect();
        assert_eq!(v, vec![0, 1, 8, 9]);
        let v: Vec<u64> = Genome::zero(4).unwrap().subgroup().collect();
        assert_eq!(v, vec![0]);
        let v: Vec<u64> = g("01010").subgroup().collect();
        assert_eq!(v, vec![0, 2, 8, 10]);
    }

    #[test]
    fn subgroup_of_full_62_bit_mask_starts_and_ends_right() {
        let ones = Genome::ones(62).unwrap();
        let mut it = ones.subgroup();
        assert_eq!(it.next(), Some(0));
        assert_eq!(it.next(), Some(1));
        let high = Genome::new(3 << 60, 62).unwrap();
        let v: Vec<u64> = high.subgroup().collect();
        assert_eq!(v, vec![0, 1 << 60, 2 << 60, 3 << 60]);
    }

    #[test]
    fn pack_unpack_examples() {
        assert_eq!(g("01101").pack(g("01010")).unwrap(), 2);
        assert_eq!(g("10110").pack(g("11111")).unwrap(), 0b10110);
        assert_eq!(Genome::unpack(3, g("01010")).unwrap(), g("01010"));
        assert!(matches!(
            Genome::unpack(4, g("01010")),
            Err(Error::IndexOutOfRange { index: 4, order: 2 })
        ));
    }

    #[test]
    fn hi_lo_defining_length() {
        let u = g("01010");
        assert_eq!((u.hi(), u.lo(), u.defining_length()), (3, 1, 2));
        for i in 0..7 {
            assert_eq!(Genome::new(1 << i, 7).unwrap().defining_length(), 0);
        }
        let z = Genome::zero(5).unwrap();
        assert_eq!((z.hi(), z.lo(), z.defining_length()), (0, 4, 0));
    }

    #[test]
    fn genome_validation() {
        assert!(Genome::new(32, 5).is_err());
        assert!(Genome::new(0, 0).is_err());
        assert!(Genome::new(0, 63).is_err());
        assert!(Genome::ones(62).is_ok());
        assert!("0120".parse::<Genome>().is_err());
        assert_eq!(g("01010").to_string(), "01010");
    }

    #[test]
    fn schema_patterns() {
        let s = Schema::new(g("001001"), g("000001")).unwrap();
        assert_eq!(s.to_string(), "**0**1");
        let t: Schema = "10*01*".parse().unwrap();
        assert_eq!(t.mask, g("110110"));
        assert_eq!(t.value, g("100010"));
        assert!(t.contains(g("101011")));
        assert!(!t.contains(g("001011")));
        let k0 = Schema::from_packed(g("01010"), 0).unwrap();
        assert_eq!(k0.to_string(), "*0*0*");
        assert!(Schema::new(g("0011"), g("0100")).is_err());
    }

    fn genome_pair(max_len: u32) -> impl Strategy<Value = (u32, u64, u64, u64)> {
        (1..=max_len).prop_flat_map(|len| {
            let m = low_mask(len);
            (Just(len), 0..=m, 0..=m, 0..=m)
        })
    }

    proptest! {
        #[test]
        fn xor_group_laws((len, a, b, c) in genome_pair(16)) {
            let (a, b, c) = (
                Genome::new(a, len).unwrap(),
                Genome::new(b, len).unwrap(),
                Genome::new(c, len).unwrap(),
            );
            let zero = Genome::zero(len).unwrap();
            prop_assert_eq!(a.xor(b).unwrap().xor(c).unwrap(), a.xor(b.xor(c).unwrap()).unwrap());
            prop_assert_eq!(a.xor(b).unwrap(), b.xor(a).unwrap());
            prop_assert_eq!(a.xor(zero).unwrap(), a);
            prop_assert_eq!(a.xor(a).unwrap(), zero);
        }

        #[test]
        fn parity_is_a_character((len, a, b, c) in genome_pair(16)) {
            let (a, b, c) = (
                Genome::new(a, len).unwrap(),
                Genome::new(b, len).unwrap(),
                Genome::new(c, len).unwrap(),
            );
            let lhs = a.parity_product(b.xor(c).unwrap()).unwrap();
            let rhs = a.parity_product(b).unwrap() * a.parity_product(c).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn subgroup_membership_and_size((len, u, probe, _c) in genome_pair(12)) {
            let u = Genome::new(u, len).unwrap();
            let members: Vec<u64> = u.subgroup().collect();
            prop_assert_eq!(members.len() as u64, 1u64 << u.popcount());
            prop_assert!(members.windows(2).all(|w| w[0] < w[1]));
            for &v in &members {
                prop_assert_eq!(v & u.bits(), v);
            }
            let probe_in = probe & u.bits() == probe;
            prop_assert_eq!(members.binary_search(&probe).is_ok(), probe_in);
        }

        #[test]
        fn pack_unpack_bijection((len, u, j, _c) in genome_pair(20)) {
            let u = Genome::new(u, len).unwrap();
            let j = Genome::new(j, len).unwrap();
            let packed = j.pack(u).unwrap();
            prop_assert!(packed < 1u64 << u.popcount());
            let back = Genome::unpack(packed, u).unwrap();
            prop_assert_eq!(back, j.and(u).unwrap());
            prop_assert_eq!(back.pack(u).unwrap(), packed);
        }

        #[test]
        fn schema_pattern_round_trips((len, u, v, _c) in genome_pair(24)) {
            let schema = Schema::new(
                Genome::new(u, len).unwrap(),
                Genome::new(v & u, len).unwrap(),
            ).unwrap();
            let parsed: Schema = schema.to_string().parse().unwrap();
            prop_assert_eq!(parsed, schema);
        }
    }
}
