// SPDX-License-Identifier: Apache-2.0

//! Boolean functions on `k` variables stored as truth tables.
//!
//! Bit `Σ b_i·2^{i-1}` of the table holds `f(b_1, …, b_k)`. Variables are
//! numbered from 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

/// Largest supported arity.
pub const MAX_ARITY: usize = 16;

/// Patterns of the six low variables inside one 64-bit word.
const LOW_VARS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoolFnError {
    #[error("arity {0} outside 1..={MAX_ARITY}")]
    Arity(usize),
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("variable index {index} outside 1..={arity}")]
    VarIndex { index: usize, arity: usize },
    #[error("cannot shrink arity {from} to {to}")]
    Shrink { from: usize, to: usize },
    #[error("NOT takes one operand, AND/OR take two")]
    Operands,
    #[error("bad function encoding {0:?}: {1}")]
    Encoding(String, &'static str),
}

/// Connectives accepted by [`BoolFn::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    And,
    Or,
    Not,
}

/// A `k`-variable Boolean function.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolFn {
    arity: u8,
    words: SmallVec<[u64; 4]>,
}

fn check_arity(k: usize) -> Result<(), BoolFnError> {
    if (1..=MAX_ARITY).contains(&k) {
        Ok(())
    } else {
        Err(BoolFnError::Arity(k))
    }
}

fn word_count(k: usize) -> usize {
    if k <= 6 {
        1
    } else {
        1 << (k - 6)
    }
}

fn valid_mask(k: usize) -> u64 {
    if k >= 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << k)) - 1
    }
}

impl BoolFn {
    /// The constant function with value `value`.
    pub fn constant(k: usize, value: bool) -> Result<Self, BoolFnError> {
        check_arity(k)?;
        let w = if value { valid_mask(k) } else { 0 };
        Ok(BoolFn {
            arity: k as u8,
            words: SmallVec::from_elem(w, word_count(k)),
        })
    }

    pub fn truth(k: usize) -> Result<Self, BoolFnError> {
        Self::constant(k, true)
    }

    pub fn falsity(k: usize) -> Result<Self, BoolFnError> {
        Self::constant(k, false)
    }

    /// The literal `x_var` (or its negation).
    pub fn literal(k: usize, var: usize, negated: bool) -> Result<Self, BoolFnError> {
        check_arity(k)?;
        if var == 0 || var > k {
            return Err(BoolFnError::VarIndex { index: var, arity: k });
        }
        let j = var - 1;
        let mut words: SmallVec<[u64; 4]> = SmallVec::with_capacity(word_count(k));
        for w in 0..word_count(k) {
            let bits = if j < 6 {
                LOW_VARS[j]
            } else if (w >> (j - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
            words.push(bits);
        }
        let mut f = BoolFn { arity: k as u8, words };
        if negated {
            f.negate();
        }
        f.mask();
        Ok(f)
    }

    /// Builds the table from a predicate on assignment indices.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize) -> bool) -> Result<Self, BoolFnError> {
        let mut out = Self::falsity(k)?;
        for idx in 0..(1usize << k) {
            if f(idx) {
                out.words[idx >> 6] |= 1u64 << (idx & 63);
            }
        }
        Ok(out)
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    /// Table bit at an assignment index.
    pub fn bit(&self, idx: usize) -> bool {
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Evaluates `f` at an assignment given as `(b_1, …, b_k)`.
    pub fn eval(&self, assignment: &[bool]) -> Result<bool, BoolFnError> {
        if assignment.len() != self.arity() {
            return Err(BoolFnError::ArityMismatch(assignment.len(), self.arity()));
        }
        Ok(self.bit(assignment_index(assignment)))
    }

    /// Pointwise AND / OR of two functions, or NOT of one.
    pub fn combine(op: Op, f: &BoolFn, g: Option<&BoolFn>) -> Result<BoolFn, BoolFnError> {
        match (op, g) {
            (Op::Not, None) => Ok(f.not()),
            (Op::And, Some(g)) | (Op::Or, Some(g)) => {
                if f.arity != g.arity {
                    return Err(BoolFnError::ArityMismatch(f.arity(), g.arity()));
                }
                let mut out = f.clone();
                if op == Op::And {
                    out.and_assign(g);
                } else {
                    out.or_assign(g);
                }
                Ok(out)
            }
            _ => Err(BoolFnError::Operands),
        }
    }

    pub fn not(&self) -> BoolFn {
        let mut out = self.clone();
        out.negate();
        out
    }

    pub fn and(&self, other: &BoolFn) -> BoolFn {
        let mut out = self.clone();
        out.and_assign(other);
        out
    }

    pub fn or(&self, other: &BoolFn) -> BoolFn {
        let mut out = self.clone();
        out.or_assign(other);
        out
    }

    /// Overwrites `self` with `other` without reallocating.
    #[inline]
    pub fn assign_from(&mut self, other: &BoolFn) {
        self.arity = other.arity;
        self.words.clear();
        self.words.extend_from_slice(&other.words);
    }

    /// In-place AND. Both operands must share an arity.
    #[inline]
    pub fn and_assign(&mut self, other: &BoolFn) {
        debug_assert_eq!(self.arity, other.arity);
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= *b;
        }
    }

    #[inline]
    pub fn or_assign(&mut self, other: &BoolFn) {
        debug_assert_eq!(self.arity, other.arity);
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    /// `self ← self ∧ ¬other`.
    #[inline]
    pub fn and_not_assign(&mut self, other: &BoolFn) {
        debug_assert_eq!(self.arity, other.arity);
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= !*b;
        }
    }

    #[inline]
    pub fn negate(&mut self) {
        for w in self.words.iter_mut() {
            *w = !*w;
        }
        self.mask();
    }

    #[inline]
    fn mask(&mut self) {
        if self.arity < 6 {
            self.words[0] &= valid_mask(self.arity());
        }
    }

    pub fn is_false(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_true(&self) -> bool {
        let m = valid_mask(self.arity());
        self.words.iter().all(|&w| w == m)
    }

    pub fn is_constant(&self) -> bool {
        self.is_false() || self.is_true()
    }

    /// Number of assignments mapped to 1.
    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn depends_on(&self, j: usize) -> bool {
        if j < 6 {
            let m = LOW_VARS[j];
            let s = 1u32 << j;
            let vm = valid_mask(self.arity());
            self.words
                .iter()
                .any(|&w| (((w & m) >> s) ^ (w & !m)) & (!m) & vm != 0)
        } else {
            let stride = 1usize << (j - 6);
            (0..self.words.len())
                .filter(|w| w & stride == 0)
                .any(|w| self.words[w] != self.words[w | stride])
        }
    }

    /// Indices (1-based) of the essential variables, ascending.
    pub fn essential_vars(&self) -> Vec<usize> {
        (0..self.arity()).filter(|&j| self.depends_on(j)).map(|j| j + 1).collect()
    }

    /// `Ess(f)`.
    pub fn ess(&self) -> usize {
        (0..self.arity()).filter(|&j| self.depends_on(j)).count()
    }

    /// Fixes variable `i` to `b`; the arity is unchanged.
    pub fn restrict(&self, i: usize, b: bool) -> Result<BoolFn, BoolFnError> {
        if i == 0 || i > self.arity() {
            return Err(BoolFnError::VarIndex { index: i, arity: self.arity() });
        }
        let bit = 1usize << (i - 1);
        BoolFn::from_fn(self.arity(), |idx| {
            let src = if b { idx | bit } else { idx & !bit };
            self.bit(src)
        })
    }

    /// The same function viewed as a function of `k ≥ arity` variables.
    pub fn extend(&self, k: usize) -> Result<BoolFn, BoolFnError> {
        check_arity(k)?;
        if k < self.arity() {
            return Err(BoolFnError::Shrink { from: self.arity(), to: k });
        }
        let low = (1usize << self.arity()) - 1;
        BoolFn::from_fn(k, |idx| self.bit(idx & low))
    }

    /// Renames variables: variable `i` of `self` becomes variable `perm[i-1]`.
    pub fn permute(&self, perm: &[usize]) -> Result<BoolFn, BoolFnError> {
        let k = self.arity();
        if perm.len() != k {
            return Err(BoolFnError::ArityMismatch(perm.len(), k));
        }
        let mut seen = vec![false; k];
        for &p in perm {
            if p == 0 || p > k || seen[p - 1] {
                return Err(BoolFnError::VarIndex { index: p, arity: k });
            }
            seen[p - 1] = true;
        }
        BoolFn::from_fn(k, |idx| {
            let mut src = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                if (idx >> (p - 1)) & 1 == 1 {
                    src |= 1 << i;
                }
            }
            self.bit(src)
        })
    }

    /// Canonical `k:HEX` text, little-endian nibbles.
    pub fn to_hex(&self) -> String {
        let k = self.arity();
        let nibbles = ((1usize << k) / 4).max(1);
        let mut s = format!("{k}:");
        for n in 0..nibbles {
            let bitpos = n * 4;
            let v = (self.words[bitpos >> 6] >> (bitpos & 63)) & 0xF;
            s.push(char::from_digit(v as u32, 16).unwrap().to_ascii_uppercase());
        }
        s
    }
}

/// Index of an assignment `(b_1, …, b_k)` in a truth table.
pub fn assignment_index(assignment: &[bool]) -> usize {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &b)| (b as usize) << i)
        .sum()
}

impl fmt::Display for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolFn({})", self.to_hex())
    }
}

impl FromStr for BoolFn {
    type Err = BoolFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why| BoolFnError::Encoding(s.to_string(), why);
        let (k, hex) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let k: usize = k.trim().parse().map_err(|_| bad("arity is not an integer"))?;
        check_arity(k)?;
        let nibbles = ((1usize << k) / 4).max(1);
        let hex = hex.trim();
        if hex.len() != nibbles {
            return Err(bad("wrong number of hex digits"));
        }
        let mut out = BoolFn::falsity(k)?;
        for (n, c) in hex.chars().enumerate() {
            let v = c.to_digit(16).ok_or_else(|| bad("non-hex digit"))? as u64;
            let bitpos = n * 4;
            out.words[bitpos >> 6] |= v << (bitpos & 63);
        }
        if k < 6 && out.words[0] & !valid_mask(k) != 0 {
            return Err(bad("bits beyond the table"));
        }
        Ok(out)
    }
}

impl Serialize for BoolFn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BoolFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Literal tables for one arity, indexed by variable (1-based).
#[derive(Debug, Clone)]
pub struct LiteralTable {
    k: usize,
    pos: Vec<BoolFn>,
    neg: Vec<BoolFn>,
    truth: BoolFn,
    falsity: BoolFn,
}

impl LiteralTable {
    pub fn new(k: usize) -> Result<Self, BoolFnError> {
        let pos = (1..=k)
            .map(|i| BoolFn::literal(k, i, false))
            .collect::<Result<Vec<_>, _>>()?;
        let neg = pos.iter().map(BoolFn::not).collect();
        Ok(LiteralTable { k, pos, neg, truth: BoolFn::truth(k)?, falsity: BoolFn::falsity(k)? })
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn get(&self, var: usize, negated: bool) -> &BoolFn {
        if negated {
            &self.neg[var - 1]
        } else {
            &self.pos[var - 1]
        }
    }

    pub fn truth(&self) -> &BoolFn {
        &self.truth
    }

    pub fn falsity(&self) -> &BoolFn {
        &self.falsity
    }

    /// Indicator of the subcube where every variable in `must_true` is 1
    /// and every variable in `must_false` is 0 (bit `i-1` for variable `i`).
    pub fn cube(&self, must_true: u64, must_false: u64) -> BoolFn {
        let mut c = self.truth.clone();
        for j in 0..self.k {
            if must_true >> j & 1 == 1 {
                c.and_assign(&self.pos[j]);
            }
            if must_false >> j & 1 == 1 {
                c.and_assign(&self.neg[j]);
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(k: usize, i: usize) -> BoolFn {
        BoolFn::literal(k, i, false).unwrap()
    }

    #[test]
    fn projection_encoding() {
        assert_eq!(x(2, 1).to_hex(), "2:A");
        assert_eq!(x(1, 1).to_hex(), "1:2");
        assert_eq!(BoolFn::truth(3).unwrap().to_hex(), "3:FF");
        let f: BoolFn = "2:A".parse().unwrap();
        assert_eq!(f, x(2, 1));
        assert!("2:1A".parse::<BoolFn>().is_err());
        assert!("1:7".parse::<BoolFn>().is_err());
    }

    #[test]
    fn eval_examples() {
        let and = x(2, 1).and(&x(2, 2));
        assert!(and.eval(&[true, true]).unwrap());
        assert!(BoolFn::truth(3).unwrap().eval(&[false, true, false]).unwrap());
        let xor = BoolFn::from_fn(2, |i| (i & 1) ^ (i >> 1) == 1).unwrap();
        assert!(xor.eval(&[true, false]).unwrap());
        assert!(xor.eval(&[true]).is_err());
    }

    #[test]
    fn combine_examples() {
        let f = x(1, 1);
        let or = BoolFn::combine(Op::Or, &f, Some(&f.not())).unwrap();
        assert!(or.is_true());
        let g = x(3, 2).or(&x(3, 3));
        let t = BoolFn::truth(3).unwrap();
        assert_eq!(BoolFn::combine(Op::And, &g, Some(&t)).unwrap(), g);
        let k2 = x(2, 1).or(&x(2, 2));
        let dm = x(2, 1).not().and(&x(2, 2).not());
        assert_eq!(BoolFn::combine(Op::Not, &k2, None).unwrap(), dm);
        assert!(BoolFn::combine(Op::And, &k2, Some(&g)).is_err());
        assert!(BoolFn::combine(Op::Not, &k2, Some(&k2)).is_err());
    }

    #[test]
    fn essential_examples() {
        assert!(BoolFn::truth(4).unwrap().essential_vars().is_empty());
        let f = x(3, 1).or(&x(3, 2)).or(&x(3, 3).not());
        assert_eq!(f.essential_vars(), vec![1, 2, 3]);
        assert_eq!(x(5, 1).essential_vars(), vec![1]);
        assert_eq!(x(9, 8).essential_vars(), vec![8]);
        assert_eq!(x(16, 16).essential_vars(), vec![16]);
    }

    #[test]
    fn restrict_examples() {
        let and = x(2, 1).and(&x(2, 2));
        assert_eq!(and.restrict(1, true).unwrap(), x(2, 2));
        assert!(and.restrict(1, false).unwrap().is_false());
        let xor = BoolFn::from_fn(2, |i| (i & 1) ^ (i >> 1) == 1).unwrap();
        assert_eq!(xor.restrict(2, true).unwrap(), x(2, 1).not());
        assert!(xor.restrict(3, true).is_err());
    }

    #[test]
    fn extend_examples() {
        assert_eq!(x(1, 1).extend(3).unwrap(), x(3, 1));
        assert!(BoolFn::truth(1).unwrap().extend(4).unwrap().is_true());
        let xor = BoolFn::from_fn(2, |i| (i & 1) ^ (i >> 1) == 1).unwrap();
        assert_eq!(xor.extend(6).unwrap().ess(), 2);
        assert!(xor.extend(1).is_err());
        assert!(xor.extend(17).is_err());
    }

    #[test]
    fn wide_literals_match_bitwise_definition() {
        for k in [6usize, 7, 9] {
            for i in 1..=k {
                let f = x(k, i);
                for idx in 0..(1usize << k) {
                    assert_eq!(f.bit(idx), (idx >> (i - 1)) & 1 == 1);
                }
            }
        }
    }

    #[test]
    fn cube_matches_conjunction() {
        let lt = LiteralTable::new(4).unwrap();
        let c = lt.cube(0b0001, 0b0100);
        assert_eq!(c, x(4, 1).and(&x(4, 3).not()));
        assert!(lt.cube(0b1, 0b1).is_false());
    }
}
