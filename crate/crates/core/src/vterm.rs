//! Polynomials over valued-field variables with coefficients in `Q[w, w^-1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

/// `w^w * prod x^a`; the rational coefficient lives in the enclosing map.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct VMono {
    pub w: i64,
    pub vars: BTreeMap<String, u32>,
}

impl VMono {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(name: &str) -> Self {
        let mut vars = BTreeMap::new();
        vars.insert(name.to_string(), 1);
        VMono { w: 0, vars }
    }

    pub fn mul(&self, other: &VMono) -> VMono {
        let mut vars = self.vars.clone();
        for (v, a) in &other.vars {
            *vars.entry(v.clone()).or_insert(0) += a;
        }
        VMono {
            w: self.w + other.w,
            vars,
        }
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.vars.get(var).copied().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.vars.values().sum()
    }

    fn without(&self, var: &str) -> VMono {
        let mut m = self.clone();
        m.vars.remove(var);
        m
    }
}

/// Expanded polynomial; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VTerm {
    terms: BTreeMap<VMono, Rational64>,
}

impl VTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational64) -> Self {
        Self::monomial(c, VMono::one())
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational64::from_integer(c))
    }

    pub fn var(name: &str) -> Self {
        Self::monomial(Rational64::one(), VMono::var(name))
    }

    /// `w^k`.
    pub fn uniformizer(k: i64) -> Self {
        Self::monomial(
            Rational64::one(),
            VMono {
                w: k,
                vars: BTreeMap::new(),
            },
        )
    }

    pub fn monomial(c: Rational64, m: VMono) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        VTerm { terms }
    }

    fn add_mono(&mut self, m: VMono, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&VMono, &Rational64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn as_monomial(&self) -> Option<(Rational64, &VMono)> {
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            Some((*c, m))
        } else {
            None
        }
    }

    pub fn add(&self, o: &VTerm) -> VTerm {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_mono(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &VTerm) -> VTerm {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> VTerm {
        self.scale(-Rational64::one())
    }

    pub fn scale(&self, c: Rational64) -> VTerm {
        if c.is_zero() {
            return VTerm::zero();
        }
        VTerm {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, o: &VTerm) -> VTerm {
        let mut out = VTerm::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_mono(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_mono(&self, c: Rational64, m: &VMono) -> VTerm {
        let mut out = VTerm::zero();
        for (m1, c1) in &self.terms {
            out.add_mono(m1.mul(m), c1 * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> VTerm {
        let mut acc = VTerm::int(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.vars.keys().cloned())
            .collect()
    }

    pub fn contains_var(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.vars.contains_key(var))
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms.keys().map(|m| m.degree_in(var)).max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.vars.values().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.vars.is_empty())
    }

    /// Coefficients `[g_0, g_1, ...]` with `self = sum g_k var^k`.
    pub fn coeffs_in(&self, var: &str) -> Vec<VTerm> {
        let d = self.degree_in(var) as usize;
        let mut out = vec![VTerm::zero(); d + 1];
        for (m, c) in &self.terms {
            out[m.degree_in(var) as usize].add_mono(m.without(var), *c);
        }
        out
    }

    pub fn substitute(&self, var: &str, by: &VTerm) -> VTerm {
        if !self.contains_var(var) {
            return self.clone();
        }
        let mut out = VTerm::zero();
        for (k, g) in self.coeffs_in(var).iter().enumerate() {
            if !g.is_zero() {
                out = out.add(&g.mul(&by.pow(k as u32)));
            }
        }
        out
    }

    pub fn rename(&self, from: &str, to: &str) -> VTerm {
        self.substitute(from, &VTerm::var(to))
    }

    /// Splits `self = c * m * prim` where `m` is the largest monomial
    /// dividing every term (including the lowest `w` power) and `prim` has
    /// leading coefficient 1. For a monomial, `prim = 1`.
    pub fn split_content(&self) -> Option<(Rational64, VMono, VTerm)> {
        let mut it = self.terms.iter();
        let (first, c0) = it.next()?;
        let mut content = first.clone();
        for (m, _) in it {
            content.w = content.w.min(m.w);
            content.vars = content
                .vars
                .iter()
                .filter_map(|(v, a)| {
                    let b = m.degree_in(v);
                    let e = (*a).min(b);
                    (e > 0).then(|| (v.clone(), e))
                })
                .collect();
        }
        let mut prim = VTerm::zero();
        for (m, c) in &self.terms {
            let mut q = m.clone();
            q.w -= content.w;
            for (v, a) in &content.vars {
                let slot = q.vars.get_mut(v).unwrap();
                *slot -= a;
                if *slot == 0 {
                    q.vars.remove(v);
                }
            }
            prim.add_mono(q, c / c0);
        }
        Some((*c0, content, prim))
    }

    /// Valuation of the leading term for constants (`w`-adic order),
    /// assuming rational literals are units.
    pub fn constant_ord_ac(&self) -> Option<(i64, Rational64)> {
        if !self.is_constant() {
            return None;
        }
        self.terms.iter().next().map(|(m, c)| (m.w, *c))
    }
}

fn fmt_rational(c: &Rational64) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub(crate) fn fmt_mono_body(m: &VMono) -> Vec<String> {
    let mut parts = Vec::new();
    if m.w == 1 {
        parts.push("w".to_string());
    } else if m.w != 0 {
        parts.push(format!("w^{}", m.w));
    }
    for (v, a) in &m.vars {
        if *a == 1 {
            parts.push(v.clone());
        } else {
            parts.push(format!("{}^{}", v, a));
        }
    }
    parts
}

/// Writes `c * body` terms with ` + ` / ` - ` separators.
pub(crate) fn fmt_signed_sum<'a, I>(f: &mut fmt::Formatter<'_>, items: I) -> fmt::Result
where
    I: Iterator<Item = (Rational64, Vec<String>)>,
{
    let mut first = true;
    let mut any = false;
    for (c, body) in items {
        any = true;
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
        if body.is_empty() {
            write!(f, "{}", fmt_rational(&a))?;
        } else if a.is_one() {
            write!(f, "{}", body.join("*"))?;
        } else {
            write!(f, "{}*{}", fmt_rational(&a), body.join("*"))?;
        }
    }
    if !any {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for VTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // higher total degree first, then variables in order, then w-power
        let mut items: Vec<_> = self.terms.iter().collect();
        items.sort_by(|(a, _), (b, _)| {
            b.total_degree()
                .cmp(&a.total_degree())
                .then_with(|| a.vars.cmp(&b.vars))
                .then_with(|| b.w.cmp(&a.w))
        });
        fmt_signed_sum(f, items.into_iter().map(|(m, c)| (*c, fmt_mono_body(m))))
    }
}

impl fmt::Debug for VTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
