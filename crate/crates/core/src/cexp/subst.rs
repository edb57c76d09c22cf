//! Pull-back along substitutions of variables.

use num_rational::Rational64;
use num_traits::Signed;
use thiserror::Error;

use super::rewrite::map_rterms;
use super::{rewrite, CExp, CExpTerm, CondAtom, RAtom, RTerm, Sort};
use crate::presburger::{LinForm, Normalized, PresAtom, Rel, Sym};
use crate::vterm::VTerm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("replacement `{0}` is not affine")]
    NonAffineSubstitution(String),
    #[error("`{0}` is not a declared valued-field variable")]
    UnknownVariable(String),
}

/// Pulls `e` back along `var -> by`, where `by` has degree at most one in
/// each of its variables. New variables of `by` are declared valued.
pub fn substitute(e: &CExp, var: &str, by: &VTerm) -> Result<CExp, SubstError> {
    if e.ctx.get(var).is_some_and(|s| *s != Sort::Valued) {
        return Err(SubstError::UnknownVariable(var.to_string()));
    }
    if by.vars().iter().any(|v| by.degree_in(v) > 1) {
        return Err(SubstError::NonAffineSubstitution(by.to_string()));
    }
    Ok(substitute_unchecked(e, var, by))
}

/// As [`substitute`] without the affinity check.
pub fn substitute_unchecked(e: &CExp, var: &str, by: &VTerm) -> CExp {
    let n = rewrite(e);
    let mut out = CExp {
        ctx: n.ctx.clone(),
        terms: Vec::new(),
    };
    if !by.contains_var(var) {
        out.ctx.remove(var);
    }
    for v in by.vars() {
        out.ctx.entry(v).or_insert(Sort::Valued);
    }
    for t in &n.terms {
        if let Some(x) = subst_term(t, var, by) {
            out.terms.push(x);
        }
    }
    rewrite(&out)
}

/// `Some(Some(l))`: finite; `Some(None)`: the substituted term vanished.
fn subst_sym(s: &Sym, var: &str, by: &VTerm) -> Option<Option<LinForm>> {
    match s {
        Sym::Ord(v) if v.contains_var(var) => Some(LinForm::ord_of(&v.substitute(var, by))),
        _ => None,
    }
}

enum Lin {
    Finite(LinForm),
    /// Mentions `ord(0)`; carries the combined coefficient signs.
    Infinite { pos: bool, neg: bool },
}

fn subst_lin(l: &LinForm, var: &str, by: &VTerm) -> Lin {
    let mut pos = false;
    let mut neg = false;
    let out = l.map_syms(&mut |s| match subst_sym(s, var, by) {
        Some(Some(f)) => Some(f),
        Some(None) => {
            let c = l.coeff(s);
            if c.is_positive() {
                pos = true;
            } else {
                neg = true;
            }
            Some(LinForm::zero())
        }
        None => None,
    });
    if pos || neg {
        Lin::Infinite { pos, neg }
    } else {
        Lin::Finite(out)
    }
}

fn subst_rterm(r: &RTerm, var: &str, by: &VTerm) -> RTerm {
    if !r.mentions_vf(var) {
        return r.clone();
    }
    r.map_atoms(&mut |a| match a {
        RAtom::Ac(v) if v.contains_var(var) => Some(RTerm::ac_of(&v.substitute(var, by))),
        _ => None,
    })
}

fn subst_pres(a: &PresAtom, var: &str, by: &VTerm) -> Option<CondAtom> {
    if !a.mentions_vf(var) {
        return Some(CondAtom::Pres(a.clone()));
    }
    match subst_lin(a.form(), var, by) {
        Lin::Finite(f) => match a.map_form(|_| f) {
            Normalized::True => None,
            Normalized::False => Some(false_atom()),
            Normalized::Atom(x) => Some(CondAtom::Pres(x)),
        },
        Lin::Infinite { pos, neg } => {
            // value is +inf (all infinite coefficients positive) or -inf
            let holds = match a {
                PresAtom::Cmp { rel: Rel::Le, .. } => neg && !pos,
                PresAtom::Cmp { rel: Rel::Eq, .. } => false,
                PresAtom::Cmp { rel: Rel::Ne, .. } => !(pos && neg),
                PresAtom::Mod { .. } => false,
            };
            if holds {
                None
            } else {
                Some(false_atom())
            }
        }
    }
}

fn false_atom() -> CondAtom {
    CondAtom::ResNeq(RTerm::zero())
}

fn subst_term(t: &CExpTerm, var: &str, by: &VTerm) -> Option<CExpTerm> {
    let mut out = t.clone();
    match subst_lin(&t.lexp, var, by) {
        Lin::Finite(l) => out.lexp = l,
        // L^(-inf) = 0; a positive infinite exponent does not arise from
        // integrable data.
        Lin::Infinite { .. } => return None,
    }
    let mut conds = Vec::new();
    for c in &t.conds {
        let x = match c {
            CondAtom::Pres(a) => subst_pres(a, var, by),
            CondAtom::OrdCmp { v, op, rhs } => match subst_lin(rhs, var, by) {
                Lin::Finite(l) => Some(CondAtom::OrdCmp {
                    v: v.substitute(var, by),
                    op: *op,
                    rhs: l,
                }),
                Lin::Infinite { .. } => Some(false_atom()),
            },
            CondAtom::AcEq { v, r } => Some(CondAtom::AcEq {
                v: v.substitute(var, by),
                r: subst_rterm(r, var, by),
            }),
            CondAtom::AcNeq { v, r } => Some(CondAtom::AcNeq {
                v: v.substitute(var, by),
                r: subst_rterm(r, var, by),
            }),
            CondAtom::ResEq(r) => Some(CondAtom::ResEq(subst_rterm(r, var, by))),
            CondAtom::ResNeq(r) => Some(CondAtom::ResNeq(subst_rterm(r, var, by))),
            CondAtom::PowRes { r, m } => Some(CondAtom::PowRes {
                r: subst_rterm(r, var, by),
                m: *m,
            }),
            CondAtom::CosetIn { v, lambda, m } => Some(CondAtom::CosetIn {
                v: v.substitute(var, by),
                lambda: lambda.substitute(var, by),
                m: *m,
            }),
        };
        if let Some(x) = x {
            conds.push(x);
        }
    }
    out.conds = conds;
    out.exp_arg = t.exp_arg.substitute(var, by);
    out.res_arg = subst_rterm(&t.res_arg, var, by);
    Some(out)
}

/// Pulls back along a residue substitution `var -> by`.
pub fn substitute_res(e: &CExp, var: &str, by: &RTerm) -> CExp {
    let mut out = e.clone();
    for t in out.terms.iter_mut() {
        *t = t.freshen_sums(&by.vars());
        if t.sums.iter().any(|s| s == var) {
            continue;
        }
        *t = map_rterms(t, &|r| r.subst_var(var, by));
    }
    rewrite(&out)
}

/// Pulls back along an integer substitution `var -> by`.
pub fn substitute_int(e: &CExp, var: &str, by: &LinForm) -> CExp {
    let s = Sym::int(var);
    let mut out = e.clone();
    for t in out.terms.iter_mut() {
        t.lexp = t.lexp.substitute(&s, by);
        let mut conds = Vec::new();
        for c in &t.conds {
            match c {
                CondAtom::Pres(a) => match a.substitute(&s, by) {
                    Normalized::True => {}
                    Normalized::False => conds.push(false_atom()),
                    Normalized::Atom(x) => conds.push(CondAtom::Pres(x)),
                },
                CondAtom::OrdCmp { v, op, rhs } => conds.push(CondAtom::OrdCmp {
                    v: v.clone(),
                    op: *op,
                    rhs: rhs.substitute(&s, by),
                }),
                other => conds.push(other.clone()),
            }
        }
        t.conds = conds;
    }
    rewrite(&out)
}

/// `x -> -x` on each listed valued variable.
pub fn reflect(e: &CExp, vars: &[String]) -> CExp {
    let mut out = e.clone();
    for v in vars {
        out = substitute_unchecked(&out, v, &VTerm::var(v).scale(-Rational64::from_integer(1)));
    }
    out
}

