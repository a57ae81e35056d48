//! Continuants and finite continued fractions `[0; a_1, ..., a_t]`.
//!
//! A continuant `<a_1, ..., a_t>` is the denominator of `[0; a_1, ..., a_t]`
//! and satisfies `K_t = a_t K_{t-1} + K_{t-2}` with `K_0 = 1`, `K_{-1} = 0`.
//! Exact values use [`BigUint`]; [`continuant_u64`] is the fast path used by
//! the hot loops and is overflow-free whenever the parts sum to at most 85.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest part-sum for which every continuant fits in a `u64`.
pub const FAST_PART_SUM_LIMIT: u64 = 85;

/// `1 / ln((1 + sqrt 5) / 2)`, the depth constant bounding composition length.
pub fn golden_depth_constant() -> f64 {
    1.0 / ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

/// A tuple of positive partial quotients `(a_1, ..., a_t)`, possibly empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition(Vec<u64>);

impl Composition {
    pub fn new(parts: Vec<u64>) -> Result<Self> {
        if let Some(index) = parts.iter().position(|&a| a == 0) {
            return Err(Error::InvalidPart {
                index: index + 1,
                value: 0,
            });
        }
        Ok(Self(parts))
    }

    /// Builds a composition from signed input, rejecting any part `<= 0`.
    pub fn from_signed(parts: &[i64]) -> Result<Self> {
        parts
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                u64::try_from(a)
                    .ok()
                    .filter(|&a| a > 0)
                    .ok_or(Error::InvalidPart {
                        index: i + 1,
                        value: a,
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub(crate) fn from_parts_unchecked(parts: Vec<u64>) -> Self {
        debug_assert!(parts.iter().all(|&a| a > 0));
        Self(parts)
    }

    pub fn parts(&self) -> &[u64] {
        &self.0
    }

    pub fn into_parts(self) -> Vec<u64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// Membership in the index set `A`: empty, or last part at least 2.
    pub fn is_canonical(&self) -> bool {
        self.0.last().is_none_or(|&a| a >= 2)
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Composition {
    type Err = Error;

    /// Accepts `1,1,2`, `(1,1,2)`, `()` or the empty string.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if inner.is_empty() {
            return Ok(Self::empty());
        }
        let parts = inner
            .split(',')
            .map(|p| {
                p.trim().parse::<i64>().map_err(|_| Error::InvalidParameter {
                    name: "composition",
                    value: s.to_string(),
                    reason: "expected comma-separated integers",
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_signed(&parts)
    }
}

/// Exact continuant of a slice of parts; the empty slice gives 1.
pub fn continuant_of(parts: &[u64]) -> BigUint {
    let mut prev = BigUint::zero();
    let mut cur = BigUint::one();
    for &a in parts {
        let next = &cur * a + &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

pub fn continuant(parts: &Composition) -> BigUint {
    continuant_of(parts.parts())
}

/// Fast-mode continuant; `None` on 64-bit overflow.
pub fn continuant_u64(parts: &[u64]) -> Option<u64> {
    let (mut prev, mut cur) = (0u64, 1u64);
    for &a in parts {
        let next = cur.checked_mul(a)?.checked_add(prev)?;
        prev = cur;
        cur = next;
    }
    Some(cur)
}

/// Value of `[0; a_1, ..., a_t]` as `<a_2..a_t> / <a_1..a_t>`; empty gives 0.
pub fn cf_value_of(parts: &[u64]) -> BigRational {
    if parts.is_empty() {
        return BigRational::zero();
    }
    BigRational::new(
        BigInt::from(continuant_of(&parts[1..])),
        BigInt::from(continuant_of(parts)),
    )
}

pub fn cf_value(parts: &Composition) -> BigRational {
    cf_value_of(parts.parts())
}

/// Value of the reversed bracket `[a_t, ..., a_1]`.
pub fn reversed_cf_value_of(parts: &[u64]) -> BigRational {
    let rev: Vec<u64> = parts.iter().rev().copied().collect();
    cf_value_of(&rev)
}

pub fn reversed_cf_value(parts: &Composition) -> BigRational {
    reversed_cf_value_of(parts.parts())
}

/// Both sides of the continuant splitting identity at one index.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitIdentity {
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub holds: bool,
}

/// Checks `<a> = a_i <a_1..a_{i-1}> <a_{i+1}..a_t> (1 + [a_{i-1}..a_1]/a_i + [a_{i+1}..a_t]/a_i)`
/// in exact arithmetic. The index `i` is 1-based.
pub fn split_identity_check(parts: &Composition, i: usize) -> Result<SplitIdentity> {
    let a = parts.parts();
    if i == 0 || i > a.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: a.len(),
        });
    }
    let ai = BigRational::from_integer(BigInt::from(a[i - 1]));
    let prefix = &a[..i - 1];
    let suffix = &a[i..];
    let k_prefix = BigRational::from_integer(BigInt::from(continuant_of(prefix)));
    let k_suffix = BigRational::from_integer(BigInt::from(continuant_of(suffix)));
    let bracket = BigRational::one()
        + reversed_cf_value_of(prefix) / &ai
        + cf_value_of(suffix) / &ai;
    let rhs = ai * k_prefix * k_suffix * bracket;
    let lhs = BigRational::from_integer(BigInt::from(continuant_of(a)));
    let holds = lhs == rhs;
    Ok(SplitIdentity { lhs, rhs, holds })
}

/// Denominators of a Brocot fraction and of its two neighbours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborTriple {
    pub q: BigUint,
    pub q_minus: BigUint,
    pub q_plus: BigUint,
}

/// `q = <a_1..a_t>`, `q_- = <a_1..a_{t-1}>`, `q_+ = <a_1..a_t - 1>`.
pub fn neighbor_denominators(parts: &Composition) -> Result<NeighborTriple> {
    let a = parts.parts();
    if a.is_empty() || !parts.is_canonical() {
        return Err(Error::NonCanonical(parts.to_string()));
    }
    let t = a.len();
    let mut decremented = a.to_vec();
    decremented[t - 1] -= 1;
    Ok(NeighborTriple {
        q: continuant_of(a),
        q_minus: continuant_of(&a[..t - 1]),
        q_plus: continuant_of(&decremented),
    })
}

/// Fast `(q, q_-, q_+)` for a canonical slice; `None` on overflow.
pub fn neighbor_triple_u64(parts: &[u64]) -> Option<(u64, u64, u64)> {
    let (&last, head) = parts.split_last()?;
    let (mut prev, mut cur) = (0u64, 1u64);
    for &a in head {
        let next = cur.checked_mul(a)?.checked_add(prev)?;
        prev = cur;
        cur = next;
    }
    let q_minus = cur;
    let q_plus = q_minus.checked_mul(last - 1)?.checked_add(prev)?;
    let q = q_plus.checked_add(q_minus)?;
    Some((q, q_minus, q_plus))
}

/// Upper bound `K r ln n` on the length of a composition of `n` whose
/// continuant stays below `n^r`.
pub fn max_depth_bound(n: u64, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n.to_string(),
            reason: "the depth bound needs n >= 2",
        });
    }
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r.to_string(),
            reason: "r must be >= 1",
        });
    }
    Ok(golden_depth_constant() * r * (n as f64).ln())
}

/// Fibonacci numbers with `F(0) = 0`, `F(1) = 1`.
pub fn fibonacci(k: u32) -> BigUint {
    let (mut a, mut b) = (BigUint::zero(), BigUint::one());
    for _ in 0..k {
        let next = &a + &b;
        a = std::mem::replace(&mut b, next);
    }
    a
}
