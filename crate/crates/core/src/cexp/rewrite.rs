//! Normalization of terms: condition canonicalization, the shift rule on
//! `E` arguments, character-sum elimination over summed residue
//! variables, pruning of empty terms and merging of like terms.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;

use super::{CExp, CExpTerm, CondAtom, RAtom, RTerm};
use crate::lring::LRat;
use crate::presburger::{implies, is_unsat, CmpOp, LinForm, Normalized, PresAtom, Rel};
use crate::vterm::VTerm;

const MAX_PASSES: usize = 64;
const MAX_CANON_SUMS: usize = 5;

/// Normal form of an expression: every term normalized, like terms merged,
/// zero terms dropped, terms sorted.
pub fn rewrite(e: &CExp) -> CExp {
    let mut acc: BTreeMap<CExpTerm, LRat> = BTreeMap::new();
    for t in &e.terms {
        for n in normalize_term(t) {
            let coeff = n.coeff.clone();
            let key = CExpTerm {
                coeff: LRat::one(),
                ..n
            };
            let slot = acc.entry(key).or_insert_with(LRat::zero);
            *slot = &*slot + &coeff;
        }
    }
    let terms = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| CExpTerm { coeff: c, ..k })
        .collect();
    CExp {
        ctx: e.ctx.clone(),
        terms,
    }
}

enum Step {
    Zero,
    Same(CExpTerm),
    Changed(CExpTerm),
    Split(Vec<CExpTerm>),
}

/// Normalizes one term; may split it into several.
pub fn normalize_term(t: &CExpTerm) -> Vec<CExpTerm> {
    let mut out = Vec::new();
    let mut work = vec![t.clone()];
    while let Some(mut t) = work.pop() {
        let mut passes = 0;
        loop {
            passes += 1;
            match step(t) {
                Step::Zero => break,
                Step::Same(x) => {
                    out.push(canonical_sums(x));
                    break;
                }
                Step::Changed(x) if passes < MAX_PASSES => t = x,
                Step::Changed(x) => {
                    out.push(canonical_sums(x));
                    break;
                }
                Step::Split(v) => {
                    work.extend(v);
                    break;
                }
            }
        }
    }
    out
}

fn step(t: CExpTerm) -> Step {
    if t.coeff.is_zero() {
        return Step::Zero;
    }
    let before = t.clone();
    let Some(mut t) = convert_conds(t) else {
        return Step::Zero;
    };
    fold_lexp_constant(&mut t);
    if !simplify_pres(&mut t) || !simplify_res(&mut t) {
        return Step::Zero;
    }
    match eliminate_sums(t) {
        SumOutcome::Zero => return Step::Zero,
        SumOutcome::Split(v) => return Step::Split(v),
        SumOutcome::Term(x) => t = x,
    }
    shift_exp_arg(&mut t);
    if t == before {
        Step::Same(t)
    } else {
        Step::Changed(t)
    }
}

// ---------------------------------------------------------------------------
// Conditions

enum Conv {
    True,
    False,
    Atoms(Vec<CondAtom>),
}

fn pres(n: Normalized) -> Conv {
    match n {
        Normalized::True => Conv::True,
        Normalized::False => Conv::False,
        Normalized::Atom(a) => Conv::Atoms(vec![CondAtom::Pres(a)]),
    }
}

/// Truth of `ord(0) op rhs`, with `ord(0) = +inf`.
fn infinite_ord_cmp(op: CmpOp) -> bool {
    matches!(op, CmpOp::Ge | CmpOp::Gt | CmpOp::Ne)
}

/// `r` is a single monomial `c * prod atoms`.
fn res_zero_test(r: &RTerm, eq: bool) -> Conv {
    if let Some(c) = r.as_constant() {
        return if c.is_zero() == eq {
            Conv::True
        } else {
            Conv::False
        };
    }
    if let Some((m, _)) = r.as_monomial() {
        // a product vanishes iff a factor does; ac of a nonzero valued
        // term never vanishes, so only residue variables matter.
        let vars: Vec<RTerm> = m
            .0
            .keys()
            .filter(|a| matches!(a, RAtom::Var(_)))
            .map(|a| RTerm::atom(a.clone()))
            .collect();
        if vars.is_empty() {
            return if eq { Conv::False } else { Conv::True };
        }
        if eq {
            if vars.len() == 1 {
                return Conv::Atoms(vec![CondAtom::ResEq(vars[0].clone())]);
            }
        } else {
            return Conv::Atoms(vars.into_iter().map(CondAtom::ResNeq).collect());
        }
    }
    let r = r.monic();
    Conv::Atoms(vec![if eq {
        CondAtom::ResEq(r)
    } else {
        CondAtom::ResNeq(r)
    }])
}

fn convert_atom(c: &CondAtom) -> Conv {
    match c {
        CondAtom::OrdCmp { v, op, rhs } => match LinForm::ord_of(v) {
            None => {
                if infinite_ord_cmp(*op) {
                    Conv::True
                } else {
                    Conv::False
                }
            }
            Some(l) => pres(PresAtom::cmp(&l, *op, rhs)),
        },
        CondAtom::AcEq { v, r } => res_zero_test(&RTerm::ac_of(v).sub(r), true),
        CondAtom::AcNeq { v, r } => res_zero_test(&RTerm::ac_of(v).sub(r), false),
        CondAtom::ResEq(r) => res_zero_test(r, true),
        CondAtom::ResNeq(r) => res_zero_test(r, false),
        CondAtom::Pres(a) => Conv::Atoms(vec![CondAtom::Pres(a.clone())]),
        CondAtom::CosetIn { v, lambda, m } => {
            let Some(ov) = LinForm::ord_of(v) else {
                return Conv::False;
            };
            let Some(ol) = LinForm::ord_of(lambda) else {
                return Conv::False;
            };
            if *m <= 1 {
                return Conv::True;
            }
            // v in lambda P_m  iff  m | ord v - ord lambda and
            // ac(v) / ac(lambda) is an m-th power (residue char prime to m)
            let mut atoms = Vec::new();
            match PresAtom::congruence(&ov.sub(&ol), 0, *m as i64) {
                Normalized::False => return Conv::False,
                Normalized::True => {}
                Normalized::Atom(a) => atoms.push(CondAtom::Pres(a)),
            }
            let r = RTerm::ac_of(v).mul(&RTerm::ac_of(lambda).pow(m - 1));
            atoms.push(CondAtom::PowRes { r, m: *m });
            Conv::Atoms(atoms)
        }
        CondAtom::PowRes { r, m } => {
            if r.is_zero() {
                Conv::False
            } else if *m <= 1 {
                res_zero_test(r, false)
            } else {
                Conv::Atoms(vec![c.clone()])
            }
        }
    }
}

fn convert_conds(mut t: CExpTerm) -> Option<CExpTerm> {
    let mut conds = Vec::new();
    for c in &t.conds {
        match convert_atom(c) {
            Conv::True => {}
            Conv::False => return None,
            Conv::Atoms(v) => conds.extend(v),
        }
    }
    conds.sort();
    conds.dedup();
    t.conds = conds;
    Some(t)
}

fn fold_lexp_constant(t: &mut CExpTerm) {
    let c = t.lexp.constant_term();
    if !c.is_zero() && c.is_integer() {
        t.coeff = &t.coeff * &LRat::l_pow(c.to_integer());
        t.lexp = t.lexp.add_const_r(-c);
    }
}

fn pres_atoms(t: &CExpTerm) -> Vec<PresAtom> {
    t.conds
        .iter()
        .filter_map(|c| match c {
            CondAtom::Pres(a) => Some(a.clone()),
            _ => None,
        })
        .collect()
}

/// Keeps the tightest of parallel bounds, turns meeting opposite bounds
/// into equalities and removes implied inequalities. `false` if the
/// system is refuted.
fn simplify_pres(t: &mut CExpTerm) -> bool {
    let atoms = pres_atoms(t);
    if atoms.is_empty() {
        return true;
    }
    if is_unsat(&atoms) {
        return false;
    }
    // body -> tightest constant
    let mut les: BTreeMap<LinForm, Rational64> = BTreeMap::new();
    let mut rest: Vec<PresAtom> = Vec::new();
    for a in &atoms {
        match a {
            PresAtom::Cmp { form, rel: Rel::Le } => {
                let c = form.constant_term();
                let body = form.add_const_r(-c);
                let slot = les.entry(body).or_insert(c);
                if c > *slot {
                    *slot = c;
                }
            }
            _ => rest.push(a.clone()),
        }
    }
    let mut out: Vec<PresAtom> = Vec::new();
    let mut used: Vec<LinForm> = Vec::new();
    for (body, c) in &les {
        if used.contains(body) {
            continue;
        }
        let nb = body.neg();
        if let Some(c2) = les.get(&nb) {
            // body <= -c and body >= c2
            if -*c == *c2 {
                if let Normalized::Atom(a) =
                    PresAtom::cmp(&body.add_const_r(*c), CmpOp::Eq, &LinForm::zero())
                {
                    rest.push(a);
                }
                used.push(body.clone());
                used.push(nb);
                continue;
            }
        }
        out.push(PresAtom::Cmp {
            form: body.add_const_r(*c),
            rel: Rel::Le,
        });
    }
    out.extend(rest);
    out.sort();
    out.dedup();
    // drop atoms implied by the others, scanning in canonical order
    let mut i = 0;
    while i < out.len() {
        if matches!(out[i], PresAtom::Cmp { .. }) {
            let others: Vec<PresAtom> = out
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, a)| a.clone())
                .collect();
            if implies(&others, &out[i]) {
                out.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let mut conds: Vec<CondAtom> = t
        .conds
        .iter()
        .filter(|c| !matches!(c, CondAtom::Pres(_)))
        .cloned()
        .collect();
    conds.extend(out.into_iter().map(CondAtom::Pres));
    conds.sort();
    t.conds = conds;
    true
}

/// Detects `[r == 0] * [r != 0]`.
fn simplify_res(t: &mut CExpTerm) -> bool {
    for c in &t.conds {
        if let CondAtom::ResEq(r) = c {
            if t.conds.contains(&CondAtom::ResNeq(r.clone())) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Summed residue variables

enum SumOutcome {
    Zero,
    Term(CExpTerm),
    Split(Vec<CExpTerm>),
}

pub(super) fn map_rterms(t: &CExpTerm, f: &dyn Fn(&RTerm) -> RTerm) -> CExpTerm {
    let mut out = t.clone();
    out.res_arg = f(&t.res_arg);
    out.conds = t
        .conds
        .iter()
        .map(|c| match c {
            CondAtom::AcEq { v, r } => CondAtom::AcEq {
                v: v.clone(),
                r: f(r),
            },
            CondAtom::AcNeq { v, r } => CondAtom::AcNeq {
                v: v.clone(),
                r: f(r),
            },
            CondAtom::ResEq(r) => CondAtom::ResEq(f(r)),
            CondAtom::ResNeq(r) => CondAtom::ResNeq(f(r)),
            CondAtom::PowRes { r, m } => CondAtom::PowRes { r: f(r), m: *m },
            other => other.clone(),
        })
        .collect();
    out
}

fn eliminate_sums(mut t: CExpTerm) -> SumOutcome {
    let sums = t.sums.clone();
    for eta in &sums {
        let atom = RAtom::Var(eta.clone());
        let in_conds = t.conds.iter().any(|c| c.mentions_res(eta));
        let in_arg = t.res_arg.mentions_var(eta);
        if !in_conds && !in_arg {
            // sum of 1 over the residue line
            t.coeff = &t.coeff * &LRat::l_pow(1);
            t.sums.retain(|s| s != eta);
            return SumOutcome::Term(t);
        }
        // pin eta through an equation linear in eta with constant slope
        for (i, c) in t.conds.iter().enumerate() {
            if let CondAtom::ResEq(r) = c {
                if let Some((a, d)) = r.linear_in(&atom) {
                    if let Some(k) = a.as_constant() {
                        if !k.is_zero() {
                            let val = d.scale(-k.recip());
                            let mut x = t.clone();
                            x.conds.remove(i);
                            x = map_rterms(&x, &|r| r.subst_var(eta, &val));
                            x.sums.retain(|s| s != eta);
                            return SumOutcome::Term(x);
                        }
                    }
                }
            }
        }
        // [r != 0] = 1 - [r == 0] for r linear in eta
        for (i, c) in t.conds.iter().enumerate() {
            if let CondAtom::ResNeq(r) = c {
                if let Some((a, _)) = r.linear_in(&atom) {
                    if a.as_constant().is_some_and(|k| !k.is_zero()) {
                        let mut full = t.clone();
                        full.conds.remove(i);
                        let mut point = full.clone();
                        point.conds.push(CondAtom::ResEq(r.clone()));
                        point.coeff = -point.coeff;
                        return SumOutcome::Split(vec![full, point]);
                    }
                }
            }
        }
        if in_conds {
            continue;
        }
        // eta occurs only in the character argument
        let Some((a, d)) = t.res_arg.linear_in(&atom) else {
            continue;
        };
        match a.as_constant() {
            Some(k) if !k.is_zero() => return SumOutcome::Zero,
            _ => {
                t.coeff = &t.coeff * &LRat::l_pow(1);
                t.conds.push(CondAtom::ResEq(a));
                t.res_arg = d;
                t.sums.retain(|s| s != eta);
                return SumOutcome::Term(t);
            }
        }
    }
    SumOutcome::Term(t)
}

// ---------------------------------------------------------------------------
// Shift rule

/// Moves monomials of the `E` argument with certain order `>= 1` out
/// (the character is trivial there) and those of certain order `0` into
/// the residue character as their angular component.
fn shift_exp_arg(t: &mut CExpTerm) {
    if t.exp_arg.is_zero() {
        return;
    }
    let premises = pres_atoms(t);
    let mut keep = VTerm::zero();
    let mut res = t.res_arg.clone();
    for (m, c) in t.exp_arg.terms() {
        let mono = VTerm::monomial(*c, m.clone());
        let Some(o) = LinForm::ord_of(&mono) else {
            continue;
        };
        let at_least = |k: i64| match PresAtom::cmp(&o, CmpOp::Ge, &LinForm::constant(k)) {
            Normalized::True => true,
            Normalized::False => false,
            Normalized::Atom(a) => implies(&premises, &a),
        };
        if at_least(1) {
            continue;
        }
        let is_zero_ord = match PresAtom::cmp(&o, CmpOp::Eq, &LinForm::zero()) {
            Normalized::True => true,
            Normalized::False => false,
            Normalized::Atom(a) => implies(&premises, &a),
        };
        if is_zero_ord {
            res = res.add(&RTerm::ac_of(&mono));
        } else {
            keep = keep.add(&mono);
        }
    }
    t.exp_arg = keep;
    t.res_arg = res;
}

// ---------------------------------------------------------------------------
// Canonical naming of summed variables

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn renamed(t: &CExpTerm, names: &[String]) -> CExpTerm {
    let mut x = t.clone();
    for (i, s) in t.sums.iter().enumerate() {
        x = x.rename_res(s, &format!("\u{1}{}", i));
    }
    for (i, s) in names.iter().enumerate() {
        x = x.rename_res(&format!("\u{1}{}", i), s);
    }
    for c in x.conds.iter_mut() {
        if let CondAtom::ResEq(r) | CondAtom::ResNeq(r) = c {
            *r = r.monic();
        }
    }
    x.conds.sort();
    x.conds.dedup();
    x.sums.sort();
    x
}

/// Renames summed variables to `_h0, _h1, ...`, choosing the assignment
/// with the least resulting term.
fn canonical_sums(t: CExpTerm) -> CExpTerm {
    let k = t.sums.len();
    if k == 0 {
        return t;
    }
    let base: Vec<String> = (0..k).map(|i| format!("_h{}", i)).collect();
    if k > MAX_CANON_SUMS {
        return renamed(&t, &base);
    }
    permutations(k)
        .into_iter()
        .map(|p| {
            let names: Vec<String> = p.iter().map(|&i| base[i].clone()).collect();
            renamed(&t, &names)
        })
        .min()
        .expect("at least one permutation")
}

