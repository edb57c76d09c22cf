use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// Integer Laurent polynomial in the formal symbol `L`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Laurent {
    terms: BTreeMap<i64, BigInt>,
}

impl Laurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(BigInt::one(), 0)
    }

    pub fn monomial(c: BigInt, k: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Laurent { terms }
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(BigInt::from(c), 0)
    }

    /// Builds from `(coefficient, exponent)` pairs, summing repeats.
    pub fn from_pairs<I: IntoIterator<Item = (BigInt, i64)>>(pairs: I) -> Self {
        let mut out = Laurent::zero();
        for (c, k) in pairs {
            out.add_term(k, c);
        }
        out
    }

    fn add_term(&mut self, k: i64, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(k).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn as_monomial(&self) -> Option<(&BigInt, i64)> {
        if self.terms.len() == 1 {
            let (k, c) = self.terms.iter().next().unwrap();
            Some((c, *k))
        } else {
            None
        }
    }

    pub fn coeff(&self, k: i64) -> BigInt {
        self.terms.get(&k).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                out.add_term(k1 + k2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> Laurent {
        if c.is_zero() {
            return Laurent::zero();
        }
        Laurent {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn shift(&self, by: i64) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(k, v)| (k + by, v.clone())).collect(),
        }
    }

    /// Gcd of the coefficients (nonnegative; zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn div_exact_int(&self, c: &BigInt) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(k, v)| (*k, v / c)).collect(),
        }
    }

    /// Dense ascending coefficients after multiplying by `L^{-min_exp}`.
    pub(crate) fn to_dense(&self) -> (i64, Vec<BigInt>) {
        let lo = match self.min_exp() {
            Some(lo) => lo,
            None => return (0, vec![]),
        };
        let hi = self.max_exp().unwrap();
        let mut v = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (k, c) in &self.terms {
            v[(k - lo) as usize] = c.clone();
        }
        (lo, v)
    }

    pub(crate) fn from_dense(lo: i64, coeffs: &[BigInt]) -> Laurent {
        Laurent::from_pairs(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (c.clone(), lo + i as i64)),
        )
    }

    /// Exact division by a polynomial with unit leading and trailing
    /// coefficients (dense ascending). Returns `None` on a nonzero remainder.
    pub(crate) fn div_exact_poly(&self, divisor: &[BigInt]) -> Option<Laurent> {
        if self.is_zero() {
            return Some(Laurent::zero());
        }
        let (lo, mut num) = self.to_dense();
        let dl = divisor.len();
        if num.len() < dl {
            return None;
        }
        let lead = divisor[dl - 1].clone();
        let mut quot = vec![BigInt::zero(); num.len() - dl + 1];
        for i in (0..quot.len()).rev() {
            let top = &num[i + dl - 1];
            if top.is_zero() {
                continue;
            }
            let (q, r) = top.div_rem(&lead);
            if !r.is_zero() {
                return None;
            }
            for (j, d) in divisor.iter().enumerate() {
                num[i + j] -= &q * d;
            }
            quot[i] = q;
        }
        if num.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Laurent::from_dense(lo, &quot))
    }

    pub fn eval<T: Scalar>(&self, q: &T) -> T {
        let mut acc = T::zero();
        for (k, c) in &self.terms {
            acc = acc + T::from_bigint(c) * q.powi(*k);
        }
        acc
    }
}

impl fmt::Display for Laurent {
    /// `c*L^k` monomials joined by ` + `, highest power first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}*L^{}", c, k)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
