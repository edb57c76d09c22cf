//! The coefficient ring `A = Z[L, L^-1, 1/(1 - L^-i)]`, extended by
//! rational constants, with a canonical form and specialization `L -> q`.
//!
//! Elements are stored as `num / (const_den * prod (1 - L^-i)^m)`. The
//! canonical form is computed through the cyclotomic factorization
//! `L^i - 1 = prod_{d | i} Phi_d(L)`: the fraction is reduced against every
//! cyclotomic factor of the denominator and then re-expressed in the
//! `(1 - L^-i)` basis by a greedy cover (largest `i` first). Reduced
//! fractions over `Z[L]` are unique, so two canonical values are equal as
//! ring elements iff they are structurally equal.

mod laurent;

pub use laurent::Laurent;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LRatError {
    #[error("denominator {0} is not a product of integers, powers of L and factors (1 - L^-i)")]
    NonAdmissibleDenominator(String),
    #[error("malformed ring element: {0}")]
    Malformed(String),
}

fn cyclotomic(n: u32) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<BigInt>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&n) {
        return v.clone();
    }
    // L^n - 1 divided by Phi_d for the proper divisors d.
    let mut coeffs = vec![BigInt::zero(); n as usize + 1];
    coeffs[0] = BigInt::from(-1);
    coeffs[n as usize] = BigInt::one();
    let mut poly = Laurent::from_dense(0, &coeffs);
    for d in 1..n {
        if n % d == 0 {
            poly = poly
                .div_exact_poly(&cyclotomic(d))
                .expect("cyclotomic division is exact");
        }
    }
    let (_, dense) = poly.to_dense();
    cache.lock().unwrap().insert(n, dense.clone());
    dense
}

fn cyclotomic_laurent(n: u32) -> Laurent {
    Laurent::from_dense(0, &cyclotomic(n))
}

fn divisors(n: u32) -> impl Iterator<Item = u32> {
    (1..=n).filter(move |d| n % d == 0)
}

/// `num / (cden * prod Phi_d^e)`, not necessarily reduced.
#[derive(Clone, Debug)]
struct Raw {
    num: Laurent,
    cden: BigInt,
    cyc: BTreeMap<u32, u32>,
}

/// An exact element of the coefficient ring, always in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LRat {
    num: Laurent,
    const_den: BigInt,
    den: BTreeMap<u32, u32>,
}

impl LRat {
    pub fn zero() -> Self {
        LRat {
            num: Laurent::zero(),
            const_den: BigInt::one(),
            den: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(c: i64) -> Self {
        Self::from_laurent(Laurent::constant(c))
    }

    pub fn from_laurent(num: Laurent) -> Self {
        LRat {
            num,
            const_den: BigInt::one(),
            den: BTreeMap::new(),
        }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Self::from_raw(Raw {
            num: Laurent::monomial(r.numer().clone(), 0),
            cden: r.denom().clone(),
            cyc: BTreeMap::new(),
        })
    }

    /// `L^k`.
    pub fn l_pow(k: i64) -> Self {
        Self::from_laurent(Laurent::monomial(BigInt::one(), k))
    }

    /// `1 / (1 - L^-i)`, `i > 0`.
    pub fn geometric(i: u32) -> Self {
        assert!(i > 0);
        let mut den = BTreeMap::new();
        den.insert(i, 1);
        LRat {
            num: Laurent::one(),
            const_den: BigInt::one(),
            den,
        }
    }

    /// `1 / (1 - L^e)` for any nonzero integer `e`.
    pub fn one_minus_l_pow_inverse(e: i64) -> Self {
        assert!(e != 0);
        if e < 0 {
            Self::geometric((-e) as u32)
        } else {
            // 1/(1 - L^e) = -L^-e / (1 - L^-e)
            -(Self::l_pow(-e) * Self::geometric(e as u32))
        }
    }

    /// Assembles and canonicalizes `num / (const_den * prod (1-L^-i)^m)`.
    pub fn from_parts(
        num: Laurent,
        const_den: BigInt,
        den: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self, LRatError> {
        if const_den.is_zero() {
            return Err(LRatError::NonAdmissibleDenominator("0".into()));
        }
        let mut num = num;
        let mut cden = const_den;
        if cden.is_negative() {
            cden = -cden;
            num = num.neg();
        }
        let mut cyc = BTreeMap::new();
        let mut shift = 0i64;
        for (i, m) in den {
            if i == 0 {
                return Err(LRatError::NonAdmissibleDenominator("(1 - L^0)".into()));
            }
            shift += i as i64 * m as i64;
            for d in divisors(i) {
                *cyc.entry(d).or_insert(0) += m;
            }
        }
        Ok(Self::from_raw(Raw {
            num: num.shift(shift),
            cden,
            cyc,
        }))
    }

    /// Canonicalizes an arbitrary fraction of Laurent polynomials whose
    /// denominator is admissible.
    pub fn normalize(num: &Laurent, den: &Laurent) -> Result<Self, LRatError> {
        let inv = Self::from_laurent(den.clone())
            .try_inverse()
            .ok_or_else(|| LRatError::NonAdmissibleDenominator(den.to_string()))?;
        Ok(Self::from_laurent(num.clone()) * inv)
    }

    fn to_raw(&self) -> Raw {
        let mut cyc = BTreeMap::new();
        let mut shift = 0i64;
        for (&i, &m) in &self.den {
            shift += i as i64 * m as i64;
            for d in divisors(i) {
                *cyc.entry(d).or_insert(0) += m;
            }
        }
        Raw {
            num: self.num.shift(shift),
            cden: self.const_den.clone(),
            cyc,
        }
    }

    fn from_raw(raw: Raw) -> Self {
        let Raw {
            mut num,
            mut cden,
            mut cyc,
        } = raw;
        if num.is_zero() {
            return Self::zero();
        }
        for (&d, e) in cyc.iter_mut() {
            let phi = cyclotomic(d);
            while *e > 0 {
                match num.div_exact_poly(&phi) {
                    Some(q) => {
                        num = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        cyc.retain(|_, e| *e > 0);
        let g = num.content().gcd(&cden);
        if !g.is_one() {
            num = num.div_exact_int(&g);
            cden /= &g;
        }
        // Greedy cover of the cyclotomic denominator by (1 - L^-i) factors.
        let mut den = BTreeMap::new();
        let mut excess: BTreeMap<u32, u32> = BTreeMap::new();
        let mut shift = 0i64;
        while let Some((&d, _)) = cyc.iter().next_back() {
            for dd in divisors(d) {
                match cyc.get_mut(&dd) {
                    Some(e) if *e > 0 => {
                        *e -= 1;
                    }
                    _ => *excess.entry(dd).or_insert(0) += 1,
                }
            }
            cyc.retain(|_, e| *e > 0);
            *den.entry(d).or_insert(0) += 1;
            shift += d as i64;
        }
        for (d, e) in excess {
            let phi = cyclotomic_laurent(d);
            for _ in 0..e {
                num = num.mul(&phi);
            }
        }
        LRat {
            num: num.shift(-shift),
            const_den: cden,
            den,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    pub fn numerator(&self) -> &Laurent {
        &self.num
    }

    pub fn const_den(&self) -> &BigInt {
        &self.const_den
    }

    /// `(i, multiplicity)` of the `(1 - L^-i)` denominator factors.
    pub fn den_factors(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.den.iter().map(|(i, m)| (*i, *m))
    }

    pub fn has_trivial_den(&self) -> bool {
        self.den.is_empty() && self.const_den.is_one()
    }

    /// The multiplicative inverse if it lies in the ring, i.e. when the
    /// numerator is a constant times `L^k` times cyclotomic factors.
    pub fn try_inverse(&self) -> Option<LRat> {
        if self.is_zero() {
            return None;
        }
        let raw = self.to_raw();
        let mut rest = raw.num.clone();
        let content = rest.content();
        rest = rest.div_exact_int(&content);
        let mut found: BTreeMap<u32, u32> = BTreeMap::new();
        let span = rest.max_exp().unwrap() - rest.min_exp().unwrap();
        let mut d = 1u32;
        while rest.len() > 1 && (d as i64) <= span.max(1) * 6 + 6 {
            let phi = cyclotomic(d);
            if (phi.len() as i64 - 1) > span {
                if (d as i64) > 2 * span + 2 {
                    break;
                }
                d += 1;
                continue;
            }
            match rest.div_exact_poly(&phi) {
                Some(q) => {
                    rest = q;
                    *found.entry(d).or_insert(0) += 1;
                }
                None => d += 1,
            }
        }
        let (c, k) = rest.as_monomial()?;
        if !c.abs().is_one() {
            return None;
        }
        let sign = c.clone();
        // inverse = cden * prod Phi^cyc * sign * L^-k / (content * prod Phi^found)
        let mut num = Laurent::monomial(&raw.cden * &sign, -k);
        for (&dd, &e) in &raw.cyc {
            let phi = cyclotomic_laurent(dd);
            for _ in 0..e {
                num = num.mul(&phi);
            }
        }
        Some(Self::from_raw(Raw {
            num,
            cden: content,
            cyc: found,
        }))
    }

    pub fn pow(&self, e: u32) -> LRat {
        let mut acc = LRat::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluation at `L = q`; a ring homomorphism for every `q` with
    /// nonvanishing `1 - q^-i`, in particular every `q > 1`.
    pub fn specialize<T: Scalar>(&self, q: &T) -> T {
        let mut den = T::from_bigint(&self.const_den);
        for (&i, &m) in &self.den {
            let f = T::one() - q.powi(-(i as i64));
            for _ in 0..m {
                den = den * f.clone();
            }
        }
        self.num.eval(q) / den
    }

    /// Exact specialization at a rational `q`.
    pub fn specialize_exact(&self, q: &BigRational) -> BigRational {
        self.specialize(q)
    }

    pub fn to_f64(&self, q: f64) -> f64 {
        self.specialize(&q)
    }

    /// Integer value if the element is a plain integer constant.
    pub fn as_integer(&self) -> Option<BigInt> {
        if !self.has_trivial_den() {
            return None;
        }
        match self.num.as_monomial() {
            Some((c, 0)) => Some(c.clone()),
            None if self.num.is_zero() => Some(BigInt::zero()),
            _ => None,
        }
    }
}

impl Default for LRat {
    fn default() -> Self {
        Self::zero()
    }
}

fn combine(a: &LRat, b: &LRat, subtract: bool) -> LRat {
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return if subtract { -b.clone() } else { b.clone() };
    }
    let ra = a.to_raw();
    let rb = b.to_raw();
    let cden = ra.cden.lcm(&rb.cden);
    let mut cyc = ra.cyc.clone();
    for (d, e) in &rb.cyc {
        let slot = cyc.entry(*d).or_insert(0);
        *slot = (*slot).max(*e);
    }
    let lift = |r: &Raw| -> Laurent {
        let mut n = r.num.scale(&(&cden / &r.cden));
        for (d, e) in &cyc {
            let have = r.cyc.get(d).copied().unwrap_or(0);
            let phi = cyclotomic_laurent(*d);
            for _ in have..*e {
                n = n.mul(&phi);
            }
        }
        n
    };
    let na = lift(&ra);
    let nb = lift(&rb);
    let num = if subtract { na.sub(&nb) } else { na.add(&nb) };
    LRat::from_raw(Raw { num, cden, cyc })
}

impl Add for &LRat {
    type Output = LRat;
    fn add(self, rhs: &LRat) -> LRat {
        combine(self, rhs, false)
    }
}

impl Sub for &LRat {
    type Output = LRat;
    fn sub(self, rhs: &LRat) -> LRat {
        combine(self, rhs, true)
    }
}

impl Mul for &LRat {
    type Output = LRat;
    fn mul(self, rhs: &LRat) -> LRat {
        if self.is_zero() || rhs.is_zero() {
            return LRat::zero();
        }
        if self.has_trivial_den() && rhs.has_trivial_den() {
            return LRat::from_laurent(self.num.mul(&rhs.num));
        }
        let ra = self.to_raw();
        let rb = rhs.to_raw();
        let mut cyc = ra.cyc.clone();
        for (d, e) in rb.cyc {
            *cyc.entry(d).or_insert(0) += e;
        }
        LRat::from_raw(Raw {
            num: ra.num.mul(&rb.num),
            cden: ra.cden * rb.cden,
            cyc,
        })
    }
}

impl Neg for &LRat {
    type Output = LRat;
    fn neg(self) -> LRat {
        LRat {
            num: self.num.neg(),
            const_den: self.const_den.clone(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LRat {
            type Output = LRat;
            fn $m(self, rhs: LRat) -> LRat {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LRat> for LRat {
            type Output = LRat;
            fn $m(self, rhs: &LRat) -> LRat {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for LRat {
    type Output = LRat;
    fn neg(self) -> LRat {
        -&self
    }
}

impl fmt::Display for LRat {
    /// `(c*L^k + ...)/(d*(1-L^-i)^m*...)`, e.g. `(-1*L^-1)/1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/", self.num)?;
        if self.den.is_empty() {
            return write!(f, "{}", self.const_den);
        }
        let mut parts = Vec::new();
        if !self.const_den.is_one() {
            parts.push(self.const_den.to_string());
        }
        for (i, m) in &self.den {
            if *m == 1 {
                parts.push(format!("(1-L^-{})", i));
            } else {
                parts.push(format!("(1-L^-{})^{}", i, m));
            }
        }
        write!(f, "({})", parts.join("*"))
    }
}

impl fmt::Debug for LRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn int_to_json(c: &BigInt) -> serde_json::Value {
    match c.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(c.to_string()),
    }
}

fn int_from_json(v: &serde_json::Value) -> Result<BigInt, LRatError> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| LRatError::Malformed(n.to_string())),
        serde_json::Value::String(s) => s
            .parse()
            .map_err(|_| LRatError::Malformed(s.clone())),
        other => Err(LRatError::Malformed(other.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
struct LRatJson {
    num: Vec<(serde_json::Value, i64)>,
    den: Vec<(u32, u32)>,
    const_den: serde_json::Value,
}

impl Serialize for LRat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LRatJson {
            num: self.num.terms().map(|(k, c)| (int_to_json(c), k)).collect(),
            den: self.den_factors().collect(),
            const_den: int_to_json(&self.const_den),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LRat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = LRatJson::deserialize(d)?;
        let mut pairs = Vec::new();
        for (c, k) in &j.num {
            pairs.push((int_from_json(c).map_err(D::Error::custom)?, *k));
        }
        let cden = int_from_json(&j.const_den).map_err(D::Error::custom)?;
        LRat::from_parts(Laurent::from_pairs(pairs), cden, j.den).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn lp(pairs: &[(i64, i64)]) -> Laurent {
        Laurent::from_pairs(pairs.iter().map(|(c, k)| (BigInt::from(*c), *k)))
    }

    fn q(n: i64) -> BigRational {
        ratio(n, 1)
    }

    #[test]
    fn normalize_cancels_cyclotomic_factor() {
        // (L^2 - 1)/(1 - L^-1) = L(L + 1)
        let a = LRat::from_parts(lp(&[(1, 2), (-1, 0)]), BigInt::one(), [(1, 1)]).unwrap();
        assert_eq!(a, LRat::from_laurent(lp(&[(1, 2), (1, 1)])));
        for p in [2, 3, 5] {
            let lhs = (q(p) * q(p) - q(1)) / (q(1) - ratio(1, p));
            assert_eq!(a.specialize(&q(p)), lhs);
        }
    }

    #[test]
    fn zero_has_empty_denominator() {
        let z = LRat::from_parts(Laurent::zero(), BigInt::one(), [(2, 1)]).unwrap();
        assert!(z.is_zero());
        assert!(z.has_trivial_den());
    }

    #[test]
    fn two_spellings_of_one_over_l_minus_one() {
        let a = LRat::from_parts(lp(&[(1, -1)]), BigInt::one(), [(1, 1)]).unwrap();
        let b = LRat::normalize(&Laurent::one(), &lp(&[(1, 1), (-1, 0)])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn arith_examples() {
        let l_minus_1 = LRat::from_laurent(lp(&[(1, 1), (-1, 0)]));
        let inv_l = LRat::l_pow(-1);
        assert_eq!(&(&l_minus_1 * &inv_l) + &inv_l, LRat::one());

        let g = LRat::geometric(1);
        let expected = LRat::from_parts(lp(&[(1, -1)]), BigInt::one(), [(1, 1)]).unwrap();
        assert_eq!(&g - &LRat::one(), expected);

        let prod = &LRat::geometric(1) * &LRat::geometric(2);
        let at3 = prod.specialize(&q(3));
        assert_eq!(at3, q(1) / ((q(1) - ratio(1, 3)) * (q(1) - ratio(1, 9))));
        assert_eq!(prod.den_factors().count(), 2);
    }

    #[test]
    fn specialize_examples() {
        assert_eq!((-LRat::l_pow(-1)).specialize(&q(5)), ratio(-1, 5));
        assert_eq!(LRat::geometric(1).specialize(&q(2)), q(2));
        let a = LRat::from_laurent(lp(&[(1, 3), (1, 2)]));
        assert_eq!(a.specialize(&q(3)), q(36));
    }

    #[test]
    fn non_admissible_denominator() {
        let err = LRat::normalize(&Laurent::one(), &lp(&[(1, 1), (-2, 0)]));
        assert!(matches!(err, Err(LRatError::NonAdmissibleDenominator(_))));
    }

    #[test]
    fn one_minus_positive_power() {
        let a = LRat::one_minus_l_pow_inverse(2);
        assert_eq!(a.specialize(&q(3)), q(1) / (q(1) - q(9)));
    }

    #[test]
    fn inverse_of_l_minus_one() {
        let a = LRat::from_laurent(lp(&[(1, 1), (-1, 0)]));
        let inv = a.try_inverse().unwrap();
        assert!((&a * &inv).is_one());
        assert!(LRat::from_laurent(lp(&[(1, 1), (-3, 0)])).try_inverse().is_none());
    }

    #[test]
    fn display_and_json() {
        let a = -LRat::l_pow(-1);
        assert_eq!(a.to_string(), "(-1*L^-1)/1");
        let b = LRat::geometric(1) * LRat::geometric(1) * LRat::from_rational(&ratio(1, 3));
        assert_eq!(b.to_string(), "(1*L^0)/(3*(1-L^-1)^2)");
        let js = serde_json::to_string(&b).unwrap();
        let back: LRat = serde_json::from_str(&js).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn float_and_exact_agree() {
        let a = LRat::geometric(1) * LRat::l_pow(-2) + LRat::from_int(3);
        let exact = a.specialize(&q(7));
        let fl: f64 = a.specialize(&7.0);
        let fl32: f32 = a.specialize(&7.0f32);
        let e = exact.numer().to_f64().unwrap() / exact.denom().to_f64().unwrap();
        assert!((fl - e).abs() < 1e-12);
        assert!((fl32 as f64 - e).abs() < 1e-5);
    }
}
