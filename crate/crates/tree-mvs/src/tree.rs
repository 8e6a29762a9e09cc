//! Node addressing on the m-regular tree.
//!
//! A node is a finite digit string over `{0, .., m-1}`; the empty string is
//! the root. Level-`k` nodes are addressed interchangeably by their digits or
//! by a flat index `j in 0..m^k` (the base-`m` value of the digit string).
//! The boundary coordinate of a node is `psi = j / m^k`; the subtree below it
//! projects onto the half-open cell `[psi, psi + m^-k]`, and the m^k cells of
//! a level tile `[0, 1]` exactly.
//!
//! Textual notation: digits joined by dots, the root written `@` (so `2.1` is
//! the digit string `[2, 1]`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A tree node, stored as its digit string from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    digits: Vec<u8>,
}

impl NodeId {
    #[inline]
    pub fn root() -> Self {
        NodeId { digits: Vec::new() }
    }

    #[inline]
    pub fn from_digits(digits: Vec<u8>) -> Self {
        NodeId { digits }
    }

    #[inline]
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.digits.len()
    }

    #[inline]
    pub fn is_root(&self) -> bool {
        self.digits.is_empty()
    }

    /// Checks every digit against the arity.
    pub fn validate(&self, m: u32) -> Result<()> {
        for &d in &self.digits {
            if u32::from(d) >= m {
                return Err(Error::DigitOutOfRange { digit: d, m });
            }
        }
        Ok(())
    }

    pub fn child(&self, digit: u8) -> Self {
        let mut digits = self.digits.clone();
        digits.push(digit);
        NodeId { digits }
    }

    /// The m successors, in digit order.
    pub fn successors(&self, m: u32) -> Result<Vec<NodeId>> {
        self.validate(m)?;
        Ok((0..m).map(|d| self.child(d as u8)).collect())
    }

    pub fn predecessor(&self) -> Result<NodeId> {
        if self.is_root() {
            return Err(Error::RootPredecessor);
        }
        Ok(NodeId {
            digits: self.digits[..self.digits.len() - 1].to_vec(),
        })
    }

    /// Base-m value of the digit string; the node's index within its level.
    pub fn flat_index(&self, m: u32) -> Result<u128> {
        self.validate(m)?;
        let mut acc: u128 = 0;
        for &d in &self.digits {
            acc = acc
                .checked_mul(u128::from(m))
                .and_then(|a| a.checked_add(u128::from(d)))
                .ok_or(Error::LevelTooDeep(self.level()))?;
        }
        Ok(acc)
    }

    /// Inverse of [`flat_index`](Self::flat_index) at a given level.
    pub fn from_flat(level: usize, mut index: u128, m: u32) -> NodeId {
        let mut digits = vec![0u8; level];
        for slot in digits.iter_mut().rev() {
            *slot = (index % u128::from(m)) as u8;
            index /= u128::from(m);
        }
        NodeId { digits }
    }

    /// Boundary coordinate: sum of `digit_k / m^k`, equal to `flat / m^level`.
    pub fn psi(&self, m: u32) -> Result<f64> {
        let flat = self.flat_index(m)?;
        Ok(flat as f64 / (m as f64).powi(self.level() as i32))
    }

    /// `psi` as an exact reduced fraction.
    pub fn psi_frac(&self, m: u32) -> Result<Frac> {
        let flat = self.flat_index(m)?;
        let den = u128::from(m)
            .checked_pow(self.level() as u32)
            .ok_or(Error::LevelTooDeep(self.level()))?;
        Ok(Frac::new(flat, den))
    }

    /// The cell `[psi, psi + m^-level]` in double precision.
    pub fn psi_interval(&self, m: u32) -> Result<(f64, f64)> {
        let flat = self.flat_index(m)?;
        let scale = (m as f64).powi(self.level() as i32);
        Ok((flat as f64 / scale, (flat + 1) as f64 / scale))
    }

    /// The cell endpoints as exact fractions. Cells of one level share their
    /// denominator before reduction, so adjacency and tiling are decidable
    /// without rounding.
    pub fn psi_interval_frac(&self, m: u32) -> Result<(Frac, Frac)> {
        let flat = self.flat_index(m)?;
        let den = u128::from(m)
            .checked_pow(self.level() as u32)
            .ok_or(Error::LevelTooDeep(self.level()))?;
        Ok((Frac::new(flat, den), Frac::new(flat + 1, den)))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return f.write_str("@");
        }
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<NodeId> {
        if s == "@" {
            return Ok(NodeId::root());
        }
        if s.is_empty() {
            return Err(Error::MalformedNode(s.to_string()));
        }
        let mut digits = Vec::new();
        for part in s.split('.') {
            // Segments are canonical decimal: nonempty, ascii digits only,
            // no leading zeros (so parse . display round-trips).
            let ok = !part.is_empty()
                && part.bytes().all(|b| b.is_ascii_digit())
                && (part == "0" || !part.starts_with('0'))
                && part.len() <= 3;
            if !ok {
                return Err(Error::MalformedNode(s.to_string()));
            }
            let value: u32 = part.parse().map_err(|_| Error::MalformedNode(s.to_string()))?;
            if value > 255 {
                return Err(Error::MalformedNode(s.to_string()));
            }
            digits.push(value as u8);
        }
        Ok(NodeId { digits })
    }
}

/// A node seen as the set of boundary branches passing through it; its trace
/// on `[0, 1]` is the node's psi cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchPrefix(NodeId);

impl BranchPrefix {
    pub fn new(node: NodeId) -> Self {
        BranchPrefix(node)
    }

    #[inline]
    pub fn node(&self) -> &NodeId {
        &self.0
    }

    /// Whether every branch through `other` also passes through this prefix.
    pub fn contains(&self, other: &NodeId) -> bool {
        other.digits().starts_with(self.0.digits())
    }

    pub fn interval(&self, m: u32) -> Result<(f64, f64)> {
        self.0.psi_interval(m)
    }

    pub fn interval_frac(&self, m: u32) -> Result<(Frac, Frac)> {
        self.0.psi_interval_frac(m)
    }
}

/// Exact nonnegative rational, kept reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Frac {
    num: u128,
    den: u128,
}

impl Frac {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den);
        Frac {
            num: num / g,
            den: den / g,
        }
    }

    #[inline]
    pub fn num(&self) -> u128 {
        self.num
    }

    #[inline]
    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
