//! Presburger conditions over integer symbols and exact summation of
//! `j^s L^(a j + b)` over one-variable Presburger sets.

mod atom;
mod domain;
mod fm;
mod series;

pub use atom::{CmpOp, Normalized, PresAtom, PresCond, Rel};
pub use domain::{normalize_domain, DomainError, Progression};
pub use fm::{implies, is_unsat};
pub use series::{sum_progression, sum_series, SumError, SumPiece, SumResult, SumSpec};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

use crate::vterm::VTerm;

/// An integer-valued symbol: a declared integer variable or `ord(v)`.
///
/// `Ord(v)` is only built for `v` a single variable or a primitive
/// non-monomial (see [`LinForm::ord_of`]); `ord(0)` is `+inf`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Int(String),
    Ord(VTerm),
}

impl Sym {
    pub fn int(name: &str) -> Self {
        Sym::Int(name.to_string())
    }

    pub fn ord_var(name: &str) -> Self {
        Sym::Ord(VTerm::var(name))
    }

    pub fn mentions_vf(&self, var: &str) -> bool {
        matches!(self, Sym::Ord(v) if v.contains_var(var))
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Int(s) => write!(f, "{}", s),
            Sym::Ord(v) => write!(f, "ord({})", v),
        }
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// `sum c_s s + constant` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinForm {
    coeffs: BTreeMap<Sym, Rational64>,
    constant: Rational64,
}

impl LinForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        Self::constant_r(Rational64::from_integer(c))
    }

    pub fn constant_r(c: Rational64) -> Self {
        LinForm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn sym(s: Sym) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(s, Rational64::one());
        LinForm {
            coeffs,
            constant: Rational64::zero(),
        }
    }

    pub fn int_var(name: &str) -> Self {
        Self::sym(Sym::int(name))
    }

    pub fn ord_var(name: &str) -> Self {
        Self::sym(Sym::ord_var(name))
    }

    /// `ord(v)` as a linear form; `None` for `v = 0`. Rational literals
    /// are taken to be units.
    pub fn ord_of(v: &VTerm) -> Option<LinForm> {
        if let Some((k, _)) = v.constant_ord_ac() {
            return Some(LinForm::constant(k));
        }
        let (_, content, prim) = v.split_content()?;
        let mut out = LinForm::constant(content.w);
        for (x, a) in &content.vars {
            out.add_term(Sym::ord_var(x), Rational64::from_integer(*a as i64));
        }
        if prim.as_monomial().is_none() {
            out.add_term(Sym::Ord(prim), Rational64::one());
        }
        Some(out)
    }

    pub fn add_term(&mut self, s: Sym, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(s.clone()).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&s);
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Sym, &Rational64)> {
        self.coeffs.iter()
    }

    pub fn constant_term(&self) -> Rational64 {
        self.constant
    }

    pub fn coeff(&self, s: &Sym) -> Rational64 {
        self.coeffs.get(s).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational64> {
        self.is_constant().then_some(self.constant)
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_constant()
            .filter(|c| c.is_integer())
            .map(|c| c.to_integer())
    }

    pub fn symbols(&self) -> BTreeSet<Sym> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn mentions(&self, s: &Sym) -> bool {
        self.coeffs.contains_key(s)
    }

    pub fn mentions_vf(&self, var: &str) -> bool {
        self.coeffs.keys().any(|s| s.mentions_vf(var))
    }

    pub fn add(&self, o: &LinForm) -> LinForm {
        let mut out = self.clone();
        for (s, c) in &o.coeffs {
            out.add_term(s.clone(), *c);
        }
        out.constant += o.constant;
        out
    }

    pub fn sub(&self, o: &LinForm) -> LinForm {
        self.add(&o.scale(-Rational64::one()))
    }

    pub fn neg(&self) -> LinForm {
        self.scale(-Rational64::one())
    }

    pub fn scale(&self, k: Rational64) -> LinForm {
        if k.is_zero() {
            return LinForm::zero();
        }
        LinForm {
            coeffs: self.coeffs.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn add_const(&self, c: i64) -> LinForm {
        let mut out = self.clone();
        out.constant += Rational64::from_integer(c);
        out
    }

    pub fn add_const_r(&self, c: Rational64) -> LinForm {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// Removes `s`, returning its coefficient.
    pub fn take(&self, s: &Sym) -> (Rational64, LinForm) {
        let mut rest = self.clone();
        let c = rest.coeffs.remove(s).unwrap_or_else(Rational64::zero);
        (c, rest)
    }

    pub fn substitute(&self, s: &Sym, by: &LinForm) -> LinForm {
        let (c, rest) = self.take(s);
        if c.is_zero() {
            return self.clone();
        }
        rest.add(&by.scale(c))
    }

    /// Applies `f` to every symbol, letting it expand into a linear form
    /// (or `None` to keep the symbol).
    pub fn map_syms(&self, f: &mut dyn FnMut(&Sym) -> Option<LinForm>) -> LinForm {
        let mut out = LinForm::constant_r(self.constant);
        for (s, c) in &self.coeffs {
            match f(s) {
                Some(l) => out = out.add(&l.scale(*c)),
                None => out.add_term(s.clone(), *c),
            }
        }
        out
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.constant.is_integer() && self.coeffs.values().all(|c| c.is_integer())
    }

    pub fn denom_lcm(&self) -> i64 {
        self.coeffs
            .values()
            .fold(*self.constant.denom(), |l, c| l.lcm(c.denom()))
    }

    /// Value under an assignment; `None` from `val` means `+inf`. Returns
    /// `Err(())` when infinite symbols appear with mixed signs.
    pub fn eval(&self, val: &mut dyn FnMut(&Sym) -> Option<i64>) -> Result<Ext, ()> {
        let mut acc = self.constant;
        let mut inf_sign = 0i32;
        for (s, c) in &self.coeffs {
            match val(s) {
                Some(v) => acc += c * Rational64::from_integer(v),
                None => {
                    let sg = if c.is_positive() { 1 } else { -1 };
                    if inf_sign != 0 && inf_sign != sg {
                        return Err(());
                    }
                    inf_sign = sg;
                }
            }
        }
        Ok(match inf_sign {
            1 => Ext::PosInf,
            -1 => Ext::NegInf,
            _ => Ext::Fin(acc),
        })
    }
}

/// Extended rational value of a linear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ext {
    NegInf,
    Fin(Rational64),
    PosInf,
}

pub(crate) fn fmt_rat(c: &Rational64) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in &self.coeffs {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            if a.is_one() {
                write!(f, "{}", s)?;
            } else {
                write!(f, "{}*{}", fmt_rat(&a), s)?;
            }
        }
        if first {
            return write!(f, "{}", fmt_rat(&self.constant));
        }
        if !self.constant.is_zero() {
            let neg = self.constant.is_negative();
            write!(
                f,
                "{}{}",
                if neg { " - " } else { " + " },
                fmt_rat(&self.constant.abs())
            )?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64 as R;

    #[test]
    fn ord_of_monomial_and_sum() {
        let x = VTerm::var("x");
        let y = VTerm::var("y");
        let v = x.mul(&y).mul(&VTerm::uniformizer(2)).scale(R::from_integer(3));
        let l = LinForm::ord_of(&v).unwrap();
        assert_eq!(l.to_string(), "ord(x) + ord(y) + 2");
        let s = x.mul(&x.add(&y));
        let l2 = LinForm::ord_of(&s).unwrap();
        assert_eq!(l2.to_string(), "ord(x) + ord(x + y)");
        assert!(LinForm::ord_of(&VTerm::zero()).is_none());
        let c = VTerm::int(1).add(&VTerm::uniformizer(1));
        assert_eq!(LinForm::ord_of(&c).unwrap(), LinForm::constant(0));
    }

    #[test]
    fn eval_with_infinity() {
        let l = LinForm::ord_var("x").sub(&LinForm::int_var("j"));
        let mut val = |s: &Sym| match s {
            Sym::Int(_) => Some(3),
            Sym::Ord(_) => None,
        };
        assert_eq!(l.eval(&mut val), Ok(Ext::PosInf));
    }
}
