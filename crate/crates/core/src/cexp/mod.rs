//! Constructible exponential functions: terms, the text DSL, the ring
//! product and the normalizing rewrite system.

mod parse;
mod pieces;
mod rewrite;
mod rterm;
mod subst;

pub use pieces::merge_pieces;
pub use parse::{parse, parse_lrat, parse_raw, ParseError};
pub use rewrite::{normalize_term, rewrite};
pub use rterm::{rational_mod, RAtom, RMono, RTerm};
pub use subst::{reflect, substitute, substitute_int, substitute_res, substitute_unchecked, SubstError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::lring::LRat;
use crate::presburger::{CmpOp, LinForm, PresAtom, Sym};
use crate::vterm::VTerm;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub enum Sort {
    Valued,
    Residue,
    Int,
}

impl Sort {
    pub fn keyword(self) -> &'static str {
        match self {
            Sort::Valued => "vf",
            Sort::Residue => "res",
            Sort::Int => "int",
        }
    }
}

/// One factor `[cond]` of a term.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CondAtom {
    OrdCmp { v: VTerm, op: CmpOp, rhs: LinForm },
    AcEq { v: VTerm, r: RTerm },
    AcNeq { v: VTerm, r: RTerm },
    /// `r == 0` in the residue field.
    ResEq(RTerm),
    /// `r != 0` in the residue field.
    ResNeq(RTerm),
    Pres(PresAtom),
    /// `v` lies in `lambda * P_m`.
    CosetIn { v: VTerm, lambda: VTerm, m: u32 },
    /// `r` is a nonzero `m`-th power in the residue field.
    PowRes { r: RTerm, m: u32 },
}

impl CondAtom {
    pub fn mentions_vf(&self, var: &str) -> bool {
        match self {
            CondAtom::OrdCmp { v, rhs, .. } => v.contains_var(var) || rhs.mentions_vf(var),
            CondAtom::AcEq { v, r } | CondAtom::AcNeq { v, r } => {
                v.contains_var(var) || r.mentions_vf(var)
            }
            CondAtom::ResEq(r) | CondAtom::ResNeq(r) | CondAtom::PowRes { r, .. } => {
                r.mentions_vf(var)
            }
            CondAtom::Pres(a) => a.mentions_vf(var),
            CondAtom::CosetIn { v, lambda, .. } => v.contains_var(var) || lambda.contains_var(var),
        }
    }

    pub fn mentions_res(&self, var: &str) -> bool {
        match self {
            CondAtom::AcEq { r, .. }
            | CondAtom::AcNeq { r, .. }
            | CondAtom::ResEq(r)
            | CondAtom::ResNeq(r)
            | CondAtom::PowRes { r, .. } => r.mentions_var(var),
            _ => false,
        }
    }

    pub fn mentions_sym(&self, s: &Sym) -> bool {
        match self {
            CondAtom::OrdCmp { rhs, .. } => rhs.mentions(s),
            CondAtom::Pres(a) => a.mentions(s),
            _ => false,
        }
    }
}

impl fmt::Display for CondAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondAtom::OrdCmp { v, op, rhs } => write!(f, "ord({}) {} {}", v, op.symbol(), rhs),
            CondAtom::AcEq { v, r } => write!(f, "ac({}) == {}", v, r),
            CondAtom::AcNeq { v, r } => write!(f, "ac({}) != {}", v, r),
            CondAtom::ResEq(r) => write!(f, "{} == 0", r),
            CondAtom::ResNeq(r) => write!(f, "{} != 0", r),
            CondAtom::Pres(a) => write!(f, "{}", a),
            CondAtom::CosetIn { v, lambda, m } => write!(f, "{} in ({}) P {}", v, lambda, m),
            CondAtom::PowRes { r, m } => write!(f, "{} in P {}", r, m),
        }
    }
}

impl fmt::Debug for CondAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// `coeff * L^lexp * prod [conds] * sum_{sums} E(exp_arg) e(res_arg)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CExpTerm {
    pub coeff: LRat,
    pub lexp: LinForm,
    pub conds: Vec<CondAtom>,
    /// Residue variables summed over the residue field.
    pub sums: Vec<String>,
    pub exp_arg: VTerm,
    pub res_arg: RTerm,
}

impl CExpTerm {
    pub fn constant(c: LRat) -> Self {
        CExpTerm {
            coeff: c,
            lexp: LinForm::zero(),
            conds: vec![],
            sums: vec![],
            exp_arg: VTerm::zero(),
            res_arg: RTerm::zero(),
        }
    }

    pub fn one() -> Self {
        Self::constant(LRat::one())
    }

    pub fn with_cond(mut self, c: CondAtom) -> Self {
        self.conds.push(c);
        self
    }

    /// Everything except the coefficient, used to merge like terms.
    pub fn shape_key(&self) -> (LinForm, Vec<CondAtom>, Vec<String>, VTerm, RTerm) {
        (
            self.lexp.clone(),
            self.conds.clone(),
            self.sums.clone(),
            self.exp_arg.clone(),
            self.res_arg.clone(),
        )
    }

    pub fn mentions_vf(&self, var: &str) -> bool {
        self.lexp.mentions_vf(var)
            || self.conds.iter().any(|c| c.mentions_vf(var))
            || self.exp_arg.contains_var(var)
            || self.res_arg.mentions_vf(var)
    }

    pub fn mentions_res(&self, var: &str) -> bool {
        self.conds.iter().any(|c| c.mentions_res(var)) || self.res_arg.mentions_var(var)
    }

    pub fn mentions_sym(&self, s: &Sym) -> bool {
        self.lexp.mentions(s) || self.conds.iter().any(|c| c.mentions_sym(s))
    }

    /// Renames the summed residue variables away from `avoid`.
    pub fn freshen_sums(&self, avoid: &BTreeSet<String>) -> CExpTerm {
        let mut out = self.clone();
        let mut used = avoid.clone();
        used.extend(self.res_names());
        for (i, s) in self.sums.iter().enumerate() {
            if !avoid.contains(s) {
                continue;
            }
            let mut k = 0;
            let fresh = loop {
                let c = format!("_s{}", k);
                if !used.contains(&c) {
                    break c;
                }
                k += 1;
            };
            used.insert(fresh.clone());
            out = out.rename_res(s, &fresh);
            out.sums[i] = fresh;
        }
        out
    }

    pub fn rename_res(&self, from: &str, to: &str) -> CExpTerm {
        let r = RTerm::var(to);
        let mut out = rewrite::map_rterms(self, &|x| x.subst_var(from, &r));
        for s in out.sums.iter_mut() {
            if s == from {
                *s = to.to_string();
            }
        }
        out
    }

    /// Residue variable names occurring anywhere in the term.
    pub fn res_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.sums.iter().cloned().collect();
        out.extend(self.res_arg.vars());
        for c in &self.conds {
            match c {
                CondAtom::AcEq { r, .. }
                | CondAtom::AcNeq { r, .. }
                | CondAtom::ResEq(r)
                | CondAtom::ResNeq(r)
                | CondAtom::PowRes { r, .. } => out.extend(r.vars()),
                _ => {}
            }
        }
        out
    }

    /// Unnormalized product.
    pub fn mul_raw(&self, o: &CExpTerm) -> CExpTerm {
        let a = self.freshen_sums(&o.res_names());
        let o = o.freshen_sums(&a.res_names());
        let mut sums = a.sums.clone();
        sums.extend(o.sums.iter().cloned());
        let mut conds = a.conds.clone();
        conds.extend(o.conds.iter().cloned());
        CExpTerm {
            coeff: &a.coeff * &o.coeff,
            lexp: a.lexp.add(&o.lexp),
            conds,
            sums,
            exp_arg: a.exp_arg.add(&o.exp_arg),
            res_arg: a.res_arg.add(&o.res_arg),
        }
    }
}

/// `c*L^k` in DSL syntax.
fn fmt_lmono(c: &num_bigint::BigInt, k: i64) -> String {
    use num_traits::One;
    let pow = match k {
        0 => String::new(),
        1 => "L".to_string(),
        _ => format!("L^{}", k),
    };
    let mag = num_traits::Signed::abs(c);
    let body = match (mag.is_one(), pow.is_empty()) {
        (_, true) => mag.to_string(),
        (true, false) => pow,
        (false, false) => format!("{}*{}", mag, pow),
    };
    if num_traits::Signed::is_negative(c) {
        format!("-{}", body)
    } else {
        body
    }
}

/// Coefficient in DSL syntax; parenthesized unless it is one positive
/// monomial.
fn fmt_coeff(c: &LRat) -> String {
    if let Some(i) = c.as_integer() {
        if i > 0.into() {
            return i.to_string();
        }
    }
    if !c.has_trivial_den() {
        return format!("({})", c);
    }
    let mut out = String::new();
    for (k, a) in c.numerator().terms().rev() {
        let m = fmt_lmono(a, k);
        if out.is_empty() {
            out = m;
        } else if let Some(rest) = m.strip_prefix('-') {
            out = format!("{} - {}", out, rest);
        } else {
            out = format!("{} + {}", out, m);
        }
    }
    if c.numerator().len() == 1 && !out.starts_with('-') {
        out
    } else {
        format!("({})", out)
    }
}

impl fmt::Display for CExpTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.coeff.is_one() {
            parts.push(fmt_coeff(&self.coeff));
        }
        if !self.lexp.is_constant() || self.lexp.constant_term() != 0.into() {
            parts.push(format!("L^({})", self.lexp));
        }
        let mut body: Vec<String> = Vec::new();
        if !self.conds.is_empty() {
            let cs: Vec<String> = self.conds.iter().map(|c| c.to_string()).collect();
            body.push(format!("[{}]", cs.join(", ")));
        }
        if !self.exp_arg.is_zero() {
            body.push(format!("E({})", self.exp_arg));
        }
        if !self.res_arg.is_zero() {
            body.push(format!("e({})", self.res_arg));
        }
        if !self.sums.is_empty() {
            let inner = if body.is_empty() {
                "1".to_string()
            } else {
                body.join(" * ")
            };
            parts.push(format!("sum {} : {}", self.sums.join(", "), inner));
        } else {
            parts.extend(body);
        }
        if parts.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", parts.join(" * "))
    }
}

impl fmt::Debug for CExpTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A finite sum of terms over a typed variable context.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CExp {
    pub ctx: BTreeMap<String, Sort>,
    pub terms: Vec<CExpTerm>,
}

impl CExp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_term(CExpTerm::one())
    }

    pub fn constant(c: LRat) -> Self {
        Self::from_term(CExpTerm::constant(c))
    }

    pub fn from_term(t: CExpTerm) -> Self {
        CExp {
            ctx: BTreeMap::new(),
            terms: vec![t],
        }
    }

    pub fn declare(mut self, name: &str, sort: Sort) -> Self {
        self.ctx.insert(name.to_string(), sort);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn vars_of(&self, sort: Sort) -> Vec<String> {
        self.ctx
            .iter()
            .filter(|(_, s)| **s == sort)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn merge_ctx(&mut self, other: &BTreeMap<String, Sort>) {
        for (k, v) in other {
            self.ctx.insert(k.clone(), *v);
        }
    }

    pub fn add(&self, o: &CExp) -> CExp {
        let mut out = self.clone();
        out.merge_ctx(&o.ctx);
        out.terms.extend(o.terms.iter().cloned());
        rewrite(&out)
    }

    pub fn neg(&self) -> CExp {
        self.scale(&-LRat::one())
    }

    pub fn sub(&self, o: &CExp) -> CExp {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &LRat) -> CExp {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            t.coeff = &t.coeff * c;
        }
        rewrite(&out)
    }

    /// Ring product: coefficients multiply, `E`/`e` arguments add,
    /// conditions concatenate, summed variables are renamed apart.
    pub fn mul(&self, o: &CExp) -> CExp {
        let mut out = CExp {
            ctx: self.ctx.clone(),
            terms: Vec::new(),
        };
        out.merge_ctx(&o.ctx);
        for a in &self.terms {
            for b in &o.terms {
                out.terms.push(a.mul_raw(b));
            }
        }
        rewrite(&out)
    }

    /// Multiplies every term by a condition.
    pub fn with_cond(&self, c: CondAtom) -> CExp {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            t.conds.push(c.clone());
        }
        rewrite(&out)
    }

    pub fn mul_lpow(&self, l: &LinForm) -> CExp {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            t.lexp = t.lexp.add(l);
        }
        rewrite(&out)
    }

    /// Free variables actually occurring, by sort.
    pub fn occurring(&self) -> BTreeSet<String> {
        self.ctx
            .keys()
            .filter(|n| {
                self.terms.iter().any(|t| match self.ctx[*n] {
                    Sort::Valued => t.mentions_vf(n),
                    Sort::Residue => t.mentions_res(n),
                    Sort::Int => t.mentions_sym(&Sym::int(n)),
                })
            })
            .cloned()
            .collect()
    }

    /// DSL text of the expression without declarations.
    pub fn body_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for CExp {
    /// Declarations followed by the expression, e.g. `vf x; [ord(x) >= 0]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for sort in [Sort::Valued, Sort::Residue, Sort::Int] {
            let vs = self.vars_of(sort);
            if !vs.is_empty() {
                write!(f, "{} {}; ", sort.keyword(), vs.join(", "))?;
            }
        }
        write!(f, "{}", self.body_string())
    }
}

impl fmt::Debug for CExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// JSON export mirroring the term structure.
pub fn to_json(e: &CExp) -> serde_json::Value {
    let terms: Vec<serde_json::Value> = e
        .terms
        .iter()
        .map(|t| {
            serde_json::json!({
                "coeff": t.coeff,
                "lexp": t.lexp.to_string(),
                "conds": t.conds.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "sums": t.sums,
                "exp_arg": t.exp_arg.to_string(),
                "res_arg": t.res_arg.to_string(),
            })
        })
        .collect();
    serde_json::json!({
        "context": e.ctx,
        "terms": terms,
        "text": e.to_string(),
    })
}

#[cfg(test)]
mod tests;
