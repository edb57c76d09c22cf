//! Concrete local fields `Q_p` and `F_p((t))`, their additive characters,
//! and pointwise evaluation of constructible exponential functions.
//!
//! Elements are exact: a rational number for `Q_p` and a Laurent
//! polynomial over `F_p` for `F_p((t))`. Truncated expansions
//! ([`PadicElement`]) carry an absolute precision on top of the exact
//! value of their digits.

mod element;
mod interpret;

pub use element::{parse_body, parse_twist, ElementParseError, PadicElement};
pub use interpret::{interpret, interpret_exact, Approx, Point};

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, Zero};
use serde::Serialize;
use thiserror::Error;

/// Exact rational used for `Q_p` values.
pub type QVal = num_rational::Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FieldKind {
    PadicQ,
    LaurentF,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalError {
    #[error("{0} is not a prime in [2, 2^20]")]
    BadPrime(u64),
    #[error("element is zero at its precision")]
    ZeroAtPrecision,
    #[error("precision {have} is insufficient (need {need})")]
    InsufficientPrecision { have: i64, need: i64 },
    #[error("denominator of {0} vanishes in the residue field")]
    NonIntegralConstant(String),
    #[error("arithmetic overflow at this depth")]
    Overflow,
    #[error("no value supplied for `{0}`")]
    Unbound(String),
    #[error("twist must have nonnegative order")]
    BadTwist,
    #[error("{0}")]
    Unsupported(String),
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// A residue-degree-one local field with uniformizer `p` or `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LocalField {
    pub kind: FieldKind,
    pub p: u64,
}

/// Exact element of a [`LocalField`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Q(QVal),
    /// `sum c[i] t^(low + i)` with `c[0] != 0`; empty for zero.
    T { low: i64, c: Vec<u64> },
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Q(q) => write!(f, "{}", q),
            Value::T { low, c } => {
                if c.is_empty() {
                    return write!(f, "0");
                }
                let parts: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0)
                    .map(|(i, a)| format!("{}*t^{}", a, low + i as i64))
                    .collect();
                write!(f, "{}", parts.join(" + "))
            }
        }
    }
}

fn t_norm(mut low: i64, mut c: Vec<u64>) -> Value {
    let lead = c.iter().position(|a| *a != 0).unwrap_or(c.len());
    c.drain(..lead);
    low += lead as i64;
    while c.last() == Some(&0) {
        c.pop();
    }
    if c.is_empty() {
        low = 0;
    }
    Value::T { low, c }
}

fn pow_i128(p: u64, e: u32) -> Result<i128, LocalError> {
    (p as i128).checked_pow(e).ok_or(LocalError::Overflow)
}

fn mod_inv(a: i128, m: i128) -> i128 {
    let g = a.extended_gcd(&m);
    g.x.mod_floor(&m)
}

impl LocalField {
    pub fn new(kind: FieldKind, p: u64) -> Result<Self, LocalError> {
        if !is_prime(p) || p > 1 << 20 {
            return Err(LocalError::BadPrime(p));
        }
        Ok(LocalField { kind, p })
    }

    pub fn qp(p: u64) -> Result<Self, LocalError> {
        Self::new(FieldKind::PadicQ, p)
    }

    pub fn fpt(p: u64) -> Result<Self, LocalError> {
        Self::new(FieldKind::LaurentF, p)
    }

    pub fn zero(&self) -> Value {
        match self.kind {
            FieldKind::PadicQ => Value::Q(QVal::zero()),
            FieldKind::LaurentF => Value::T { low: 0, c: vec![] },
        }
    }

    pub fn is_zero(&self, x: &Value) -> bool {
        match x {
            Value::Q(q) => q.is_zero(),
            Value::T { c, .. } => c.is_empty(),
        }
    }

    /// `w^k`.
    pub fn uniformizer_pow(&self, k: i64) -> Result<Value, LocalError> {
        match self.kind {
            FieldKind::PadicQ => {
                let m = pow_i128(self.p, k.unsigned_abs() as u32)?;
                Ok(Value::Q(if k >= 0 {
                    QVal::from_integer(m)
                } else {
                    QVal::new(1, m)
                }))
            }
            FieldKind::LaurentF => Ok(Value::T { low: k, c: vec![1] }),
        }
    }

    pub fn from_rational(&self, r: &Rational64) -> Result<Value, LocalError> {
        match self.kind {
            FieldKind::PadicQ => Ok(Value::Q(QVal::new(*r.numer() as i128, *r.denom() as i128))),
            FieldKind::LaurentF => {
                let a = crate::cexp::rational_mod(r, self.p)
                    .ok_or_else(|| LocalError::NonIntegralConstant(r.to_string()))?;
                Ok(t_norm(0, vec![a]))
            }
        }
    }

    pub fn from_int(&self, n: i64) -> Value {
        self.from_rational(&Rational64::from_integer(n))
            .expect("integers are integral")
    }

    /// `sum digits[i] w^(v + i)`.
    pub fn from_digits(&self, v: i64, digits: &[u64]) -> Result<Value, LocalError> {
        match self.kind {
            FieldKind::PadicQ => {
                let mut n: i128 = 0;
                for d in digits.iter().rev() {
                    n = n
                        .checked_mul(self.p as i128)
                        .and_then(|x| x.checked_add(*d as i128))
                        .ok_or(LocalError::Overflow)?;
                }
                let scale = self.uniformizer_pow(v)?;
                self.mul(&Value::Q(QVal::from_integer(n)), &scale)
            }
            FieldKind::LaurentF => Ok(t_norm(v, digits.iter().map(|d| d % self.p).collect())),
        }
    }

    pub fn add(&self, a: &Value, b: &Value) -> Result<Value, LocalError> {
        match (a, b) {
            (Value::Q(x), Value::Q(y)) => x.checked_add(y).map(Value::Q).ok_or(LocalError::Overflow),
            (Value::T { low: la, c: ca }, Value::T { low: lb, c: cb }) => {
                if ca.is_empty() {
                    return Ok(b.clone());
                }
                if cb.is_empty() {
                    return Ok(a.clone());
                }
                let low = (*la).min(*lb);
                let hi = (la + ca.len() as i64).max(lb + cb.len() as i64);
                let mut c = vec![0u64; (hi - low) as usize];
                for (i, x) in ca.iter().enumerate() {
                    c[(la - low) as usize + i] = *x;
                }
                for (i, x) in cb.iter().enumerate() {
                    let k = (lb - low) as usize + i;
                    c[k] = (c[k] + x) % self.p;
                }
                Ok(t_norm(low, c))
            }
            _ => unreachable!("mixed field kinds"),
        }
    }

    pub fn neg(&self, a: &Value) -> Value {
        match a {
            Value::Q(x) => Value::Q(-x),
            Value::T { low, c } => Value::T {
                low: *low,
                c: c.iter().map(|x| (self.p - x) % self.p).collect(),
            },
        }
    }

    pub fn sub(&self, a: &Value, b: &Value) -> Result<Value, LocalError> {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Value, b: &Value) -> Result<Value, LocalError> {
        match (a, b) {
            (Value::Q(x), Value::Q(y)) => x.checked_mul(y).map(Value::Q).ok_or(LocalError::Overflow),
            (Value::T { low: la, c: ca }, Value::T { low: lb, c: cb }) => {
                if ca.is_empty() || cb.is_empty() {
                    return Ok(self.zero());
                }
                let mut c = vec![0u64; ca.len() + cb.len() - 1];
                for (i, x) in ca.iter().enumerate() {
                    for (j, y) in cb.iter().enumerate() {
                        c[i + j] = (c[i + j] + x * y) % self.p;
                    }
                }
                Ok(t_norm(la + lb, c))
            }
            _ => unreachable!("mixed field kinds"),
        }
    }

    pub fn pow(&self, a: &Value, e: u32) -> Result<Value, LocalError> {
        let mut acc = self.from_int(1);
        for _ in 0..e {
            acc = self.mul(&acc, a)?;
        }
        Ok(acc)
    }

    fn p_part(&self, mut n: i128) -> (i64, i128) {
        let p = self.p as i128;
        let mut v = 0;
        while n != 0 && n % p == 0 {
            n /= p;
            v += 1;
        }
        (v, n)
    }

    /// `(ord x, ac x)`, `None` for zero.
    pub fn ord_ac(&self, x: &Value) -> Option<(i64, u64)> {
        match x {
            Value::Q(q) => {
                if q.is_zero() {
                    return None;
                }
                let (vn, n) = self.p_part(*q.numer());
                let (vd, d) = self.p_part(*q.denom());
                let p = self.p as i128;
                let ac = (n.mod_floor(&p) * mod_inv(d.mod_floor(&p), p)).mod_floor(&p);
                Some((vn - vd, ac as u64))
            }
            Value::T { low, c } => c.first().map(|a| (*low, *a)),
        }
    }

    /// Fractional part in `[0, 1)` of `x` in `Z[1/p]`-adic sense, as a
    /// fraction `n / p^s`.
    fn frac_q(&self, x: &QVal) -> Result<(i128, i128), LocalError> {
        let (s, b) = self.p_part(*x.denom());
        if s == 0 {
            return Ok((0, 1));
        }
        let m = pow_i128(self.p, s as u32)?;
        if m > 1 << 62 {
            return Err(LocalError::Overflow);
        }
        let a = x.numer().mod_floor(&m);
        let n = (a * mod_inv(b.mod_floor(&m), m)).mod_floor(&m);
        Ok((n, m))
    }

    /// Phase `theta` with `psi(x) = exp(2 pi i theta)` for the twisted
    /// canonical character `psi_c`.
    pub fn psi_phase(&self, x: &Value, twist: &Value) -> Result<f64, LocalError> {
        match (x, twist) {
            (Value::Q(q), Value::Q(c)) => {
                let (n, m) = self.frac_q(&(q / QVal::from_integer(self.p as i128)))?;
                let mut theta = n as f64 / m as f64;
                if !c.is_zero() {
                    let cx = q.checked_mul(c).ok_or(LocalError::Overflow)?;
                    let (n, m) = self.frac_q(&cx)?;
                    theta += n as f64 / m as f64;
                }
                Ok(theta.fract())
            }
            (Value::T { low, c }, _) => {
                let mut s = 0u64;
                for (i, a) in c.iter().enumerate() {
                    if low + i as i64 <= 0 {
                        s = (s + a) % self.p;
                    }
                }
                let cx = self.mul(x, twist)?;
                if let Value::T { low, c } = &cx {
                    let k = -1 - low;
                    if k >= 0 && (k as usize) < c.len() {
                        s = (s + c[k as usize]) % self.p;
                    }
                }
                Ok(s as f64 / self.p as f64)
            }
            _ => unreachable!("mixed field kinds"),
        }
    }

    /// All twists `c = sum_{i < depth} c_i w^i`, in lexicographic order of
    /// digit vectors.
    pub fn twists(&self, depth: u32) -> Vec<CharacterSpec> {
        let n = (self.p as usize).pow(depth);
        (0..n)
            .map(|mut k| {
                let mut digits = Vec::new();
                for _ in 0..depth {
                    digits.push((k % self.p as usize) as u64);
                    k /= self.p as usize;
                }
                let c = self.from_digits(0, &digits).expect("small twist");
                CharacterSpec { field: *self, twist: c }
            })
            .collect()
    }
}

/// `psi_c(x) = psi_can(x) * psi_0(c x)` with `ord(c) >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterSpec {
    pub field: LocalField,
    pub twist: Value,
}

impl CharacterSpec {
    pub fn canonical(field: LocalField) -> Self {
        CharacterSpec {
            field,
            twist: field.zero(),
        }
    }

    pub fn twisted(field: LocalField, twist: Value) -> Result<Self, LocalError> {
        if let Some((v, _)) = field.ord_ac(&twist) {
            if v < 0 {
                return Err(LocalError::BadTwist);
            }
        }
        Ok(CharacterSpec { field, twist })
    }

    /// `psi(x)` at an exact element.
    pub fn eval(&self, x: &Value) -> Result<Complex64, LocalError> {
        let th = self.field.psi_phase(x, &self.twist)?;
        Ok(Complex64::from_polar(1.0, TAU * th))
    }
}

/// `psi(x)` at a truncated expansion; its digits must reach index 0.
pub fn psi_eval(ch: &CharacterSpec, x: &PadicElement) -> Result<Complex64, LocalError> {
    let a = x.to_approx(&ch.field)?;
    if let Some(have) = a.prec {
        if have < 1 {
            return Err(LocalError::InsufficientPrecision { have, need: 1 });
        }
    }
    ch.eval(&a.val)
}

/// `(ord x, ac x)` of a truncated expansion.
pub fn ord_ac(field: &LocalField, x: &PadicElement) -> Result<(i64, u64), LocalError> {
    let a = x.to_approx(field)?;
    field.ord_ac(&a.val).ok_or(LocalError::ZeroAtPrecision)
}

/// `e(r) = exp(2 pi i r / p)` for a residue `r`.
pub fn residue_char(p: u64, r: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (r % p) as f64 / p as f64)
}

/// Whether a nonzero residue is an `m`-th power in `F_p^x`.
pub fn is_power_residue(p: u64, r: u64, m: u32) -> bool {
    let r = r % p;
    if r == 0 {
        return false;
    }
    let g = (m as u64).gcd(&(p - 1));
    let mut acc: u128 = 1;
    let mut b = r as u128;
    let mut e = (p - 1) / g;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p as u128;
        }
        b = b * b % p as u128;
        e >>= 1;
    }
    acc == 1
}
