//! Polynomials over residue-field atoms: residue variables and `ac(v)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::vterm::{fmt_signed_sum, VTerm};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RAtom {
    Var(String),
    /// `ac(v)` for `v` a single valued variable or a primitive
    /// non-monomial (see [`RTerm::ac_of`]).
    Ac(VTerm),
}

impl RAtom {
    pub fn mentions_vf(&self, var: &str) -> bool {
        matches!(self, RAtom::Ac(v) if v.contains_var(var))
    }
}

impl fmt::Display for RAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RAtom::Var(s) => write!(f, "{}", s),
            RAtom::Ac(v) => write!(f, "ac({})", v),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RMono(pub BTreeMap<RAtom, u32>);

impl RMono {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(a: RAtom) -> Self {
        let mut m = BTreeMap::new();
        m.insert(a, 1);
        RMono(m)
    }

    pub fn mul(&self, o: &RMono) -> RMono {
        let mut m = self.0.clone();
        for (a, e) in &o.0 {
            *m.entry(a.clone()).or_insert(0) += e;
        }
        RMono(m)
    }

    pub fn degree_of(&self, a: &RAtom) -> u32 {
        self.0.get(a).copied().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.values().sum()
    }

    fn body(&self) -> Vec<String> {
        self.0
            .iter()
            .map(|(a, e)| {
                if *e == 1 {
                    a.to_string()
                } else {
                    format!("{}^{}", a, e)
                }
            })
            .collect()
    }
}

/// Expanded residue polynomial with rational coefficients, reduced mod `p`
/// only at evaluation time.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RTerm {
    terms: BTreeMap<RMono, Rational64>,
}

impl RTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational64) -> Self {
        Self::monomial(c, RMono::one())
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational64::from_integer(c))
    }

    pub fn var(name: &str) -> Self {
        Self::atom(RAtom::Var(name.to_string()))
    }

    pub fn atom(a: RAtom) -> Self {
        Self::monomial(Rational64::one(), RMono::atom(a))
    }

    pub fn monomial(c: Rational64, m: RMono) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        RTerm { terms }
    }

    /// `ac(v)`, expanded multiplicatively through the content of `v`:
    /// `ac(c w^k x^a * prim) = c * ac(x)^a * ac(prim)`; `ac(0) = 0`.
    pub fn ac_of(v: &VTerm) -> RTerm {
        if let Some((_, c)) = v.constant_ord_ac() {
            return RTerm::constant(c);
        }
        let Some((c, content, prim)) = v.split_content() else {
            return RTerm::zero();
        };
        let mut m = RMono::one();
        for (x, a) in &content.vars {
            m.0.insert(RAtom::Ac(VTerm::var(x)), *a);
        }
        if prim.as_monomial().is_none() {
            m = m.mul(&RMono::atom(RAtom::Ac(prim)));
        }
        RTerm::monomial(c, m)
    }

    fn add_mono(&mut self, m: RMono, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&RMono, &Rational64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational64> {
        match self.terms.len() {
            0 => Some(Rational64::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.0.is_empty().then_some(*c)
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn as_monomial(&self) -> Option<(&RMono, Rational64)> {
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            Some((m, *c))
        } else {
            None
        }
    }

    pub fn add(&self, o: &RTerm) -> RTerm {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_mono(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &RTerm) -> RTerm {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RTerm {
        self.scale(-Rational64::one())
    }

    pub fn scale(&self, k: Rational64) -> RTerm {
        if k.is_zero() {
            return RTerm::zero();
        }
        RTerm {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, o: &RTerm) -> RTerm {
        let mut out = RTerm::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_mono(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> RTerm {
        let mut acc = RTerm::int(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn atoms(&self) -> BTreeSet<RAtom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.keys().cloned())
            .collect()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.atoms()
            .into_iter()
            .filter_map(|a| match a {
                RAtom::Var(s) => Some(s),
                RAtom::Ac(_) => None,
            })
            .collect()
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        let a = RAtom::Var(name.to_string());
        self.terms.keys().any(|m| m.0.contains_key(&a))
    }

    pub fn mentions_vf(&self, var: &str) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.keys().any(|a| a.mentions_vf(var)))
    }

    pub fn degree_in(&self, a: &RAtom) -> u32 {
        self.terms.keys().map(|m| m.degree_of(a)).max().unwrap_or(0)
    }

    /// Replaces atoms for which `f` returns a value.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&RAtom) -> Option<RTerm>) -> RTerm {
        let mut out = RTerm::zero();
        for (m, c) in &self.terms {
            let mut t = RTerm::constant(*c);
            let mut rest = RMono::one();
            for (a, e) in &m.0 {
                match f(a) {
                    Some(r) => t = t.mul(&r.pow(*e)),
                    None => {
                        rest.0.insert(a.clone(), *e);
                    }
                }
            }
            out = out.add(&t.mul(&RTerm::monomial(Rational64::one(), rest)));
        }
        out
    }

    pub fn subst_var(&self, name: &str, by: &RTerm) -> RTerm {
        if !self.mentions_var(name) {
            return self.clone();
        }
        self.map_atoms(&mut |a| match a {
            RAtom::Var(s) if s == name => Some(by.clone()),
            _ => None,
        })
    }

    pub fn rename_var(&self, from: &str, to: &str) -> RTerm {
        self.subst_var(from, &RTerm::var(to))
    }

    /// `self = c * atom + d` with `c`, `d` free of `atom`.
    pub fn linear_in(&self, a: &RAtom) -> Option<(RTerm, RTerm)> {
        let mut c = RTerm::zero();
        let mut d = RTerm::zero();
        for (m, k) in &self.terms {
            match m.degree_of(a) {
                0 => d.add_mono(m.clone(), *k),
                1 => {
                    let mut rest = m.clone();
                    rest.0.remove(a);
                    c.add_mono(rest, *k);
                }
                _ => return None,
            }
        }
        Some((c, d))
    }

    /// Divides by the coefficient of the leading monomial (highest total
    /// degree, first in display order).
    pub fn monic(&self) -> RTerm {
        let lead = self
            .terms
            .iter()
            .max_by(|(a, _), (b, _)| a.total_degree().cmp(&b.total_degree()).then(b.cmp(a)));
        match lead {
            Some((_, c)) if !c.is_one() => self.scale(c.recip()),
            _ => self.clone(),
        }
    }

    /// Value mod `p`; `atom` supplies residues of atoms. `None` if an
    /// atom is unassigned or a denominator vanishes mod `p`.
    pub fn eval_mod(&self, p: u64, atom: &mut dyn FnMut(&RAtom) -> Option<u64>) -> Option<u64> {
        let pi = p as i128;
        let mut acc: i128 = 0;
        for (m, c) in &self.terms {
            let mut t = rational_mod(c, p)? as i128;
            for (a, e) in &m.0 {
                let v = atom(a)? as i128;
                for _ in 0..*e {
                    t = t * v % pi;
                }
            }
            acc = (acc + t) % pi;
        }
        Some(acc as u64)
    }
}

/// `c` reduced mod `p`, or `None` if `p` divides the denominator.
pub fn rational_mod(c: &Rational64, p: u64) -> Option<u64> {
    let pi = p as i128;
    let n = (*c.numer() as i128).mod_floor(&pi);
    let d = (*c.denom() as i128).mod_floor(&pi);
    if d == 0 {
        return None;
    }
    let inv = mod_pow(d, pi - 2, pi);
    Some((n * inv % pi) as u64)
}

pub(crate) fn mod_pow(mut b: i128, mut e: i128, m: i128) -> i128 {
    let mut acc = 1i128 % m;
    b = b.mod_floor(&m);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

impl fmt::Display for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<_> = self.terms.iter().collect();
        items.sort_by(|(a, _), (b, _)| b.total_degree().cmp(&a.total_degree()).then(a.cmp(b)));
        fmt_signed_sum(f, items.into_iter().map(|(m, c)| (*c, m.body())))
    }
}

impl fmt::Debug for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ac_is_multiplicative_on_content() {
        let x = VTerm::var("x");
        let v = x.mul(&x).mul(&VTerm::uniformizer(3)).scale(Rational64::from_integer(2));
        assert_eq!(RTerm::ac_of(&v).to_string(), "2*ac(x)^2");
        let s = x.add(&VTerm::var("y"));
        assert_eq!(RTerm::ac_of(&s).to_string(), "ac(x + y)");
        let c = VTerm::int(3).add(&VTerm::uniformizer(1));
        assert_eq!(RTerm::ac_of(&c), RTerm::int(3));
    }

    #[test]
    fn linear_decomposition() {
        let eta = RAtom::Var("eta".into());
        let r = RTerm::var("eta")
            .mul(&RTerm::ac_of(&VTerm::var("x")))
            .add(&RTerm::int(2));
        let (c, d) = r.linear_in(&eta).unwrap();
        assert_eq!(c.to_string(), "ac(x)");
        assert_eq!(d, RTerm::int(2));
        assert!(RTerm::var("eta").pow(2).linear_in(&eta).is_none());
    }

    #[test]
    fn evaluation_mod_p() {
        let r = RTerm::var("a").scale(Rational64::new(1, 2)).add(&RTerm::int(1));
        let v = r.eval_mod(5, &mut |_| Some(4));
        assert_eq!(v, Some(3));
    }
}
