//! Merging of piecewise terms.
//!
//! Series evaluation leaves telescoped pieces such as
//! `c L^(ord x) [ord x <= 0] - c L^(ord x) [ord x <= -1]`. Two terms that
//! agree except for one interval condition on the same linear form are
//! combined when the sum or difference of their regions is again an
//! interval, and order symbols pinned by an equality are substituted into
//! the exponent.

use super::{rewrite, CExp, CExpTerm, CondAtom};
use crate::lring::LRat;
use crate::presburger::{CmpOp, LinForm, Normalized, PresAtom, Rel, Sym};
use num_rational::Rational64;
use num_traits::{One, Signed};

/// `lo <= g <= hi` with `g` constant-free and leading coefficient positive.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Interval {
    g: LinForm,
    lo: Option<i64>,
    hi: Option<i64>,
}

fn leading_positive(g: &LinForm) -> bool {
    g.coeffs().next().is_some_and(|(_, c)| c.is_positive())
}

fn interval(a: &PresAtom) -> Option<Interval> {
    let PresAtom::Cmp { form, rel } = a else {
        return None;
    };
    let c = form.constant_term().to_integer();
    let body = form.add_const(-c);
    match rel {
        Rel::Le if leading_positive(&body) => Some(Interval { g: body, lo: None, hi: Some(-c) }),
        Rel::Le => Some(Interval { g: body.neg(), lo: Some(c), hi: None }),
        Rel::Eq => Some(Interval { g: body, lo: Some(-c), hi: Some(-c) }),
        Rel::Ne => None,
    }
}

fn atoms(iv: &Interval) -> Option<Vec<PresAtom>> {
    let mut out = Vec::new();
    let mut push = |n: Normalized| match n {
        Normalized::Atom(a) => {
            out.push(a);
            true
        }
        Normalized::True => true,
        Normalized::False => false,
    };
    let ok = match (iv.lo, iv.hi) {
        (Some(a), Some(b)) if a == b => push(PresAtom::cmp(&iv.g, CmpOp::Eq, &LinForm::constant(a))),
        (Some(a), Some(b)) if a > b => false,
        (lo, hi) => {
            let l = lo.is_none_or(|a| push(PresAtom::cmp(&iv.g, CmpOp::Ge, &LinForm::constant(a))));
            l && hi.is_none_or(|b| push(PresAtom::cmp(&iv.g, CmpOp::Le, &LinForm::constant(b))))
        }
    };
    ok.then_some(out)
}

fn le(a: Option<i64>, b: Option<i64>, lower: bool) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x <= y,
        // an absent lower end is -inf, an absent upper end +inf
        (None, _) => lower,
        (_, None) => !lower,
    }
}

fn contains(outer: &Interval, inner: &Interval) -> bool {
    le(outer.lo, inner.lo, true) && le(inner.hi, outer.hi, false)
}

/// `a \ b` for `b` inside `a`, if it is an interval.
fn difference(a: &Interval, b: &Interval) -> Option<Interval> {
    if a.lo == b.lo {
        Some(Interval { g: a.g.clone(), lo: Some(b.hi? + 1), hi: a.hi })
    } else if a.hi == b.hi {
        Some(Interval { g: a.g.clone(), lo: a.lo, hi: Some(b.lo? - 1) })
    } else {
        None
    }
}

/// `a u b` for disjoint adjacent intervals.
fn union(a: &Interval, b: &Interval) -> Option<Interval> {
    let (x, y) = if le(a.lo, b.lo, true) { (a, b) } else { (b, a) };
    (x.hi? + 1 == y.lo?).then(|| Interval { g: a.g.clone(), lo: x.lo, hi: y.hi })
}

fn everything(g: &LinForm) -> Interval {
    Interval { g: g.clone(), lo: None, hi: None }
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

fn with_pres(t: &CExpTerm, coeff: LRat, pres: Vec<PresAtom>) -> CExpTerm {
    let mut conds: Vec<CondAtom> = t.conds.iter().filter(|c| !matches!(c, CondAtom::Pres(_))).cloned().collect();
    conds.extend(pres.into_iter().map(CondAtom::Pres));
    CExpTerm { coeff, conds, ..t.clone() }
}

/// Uses equalities among the Presburger conditions to eliminate a symbol
/// (the greatest one with a unit coefficient) from the exponent and the
/// other conditions. `None` if the conditions become false.
fn pin(t: CExpTerm) -> Option<CExpTerm> {
    let mut t = t;
    // each step removes a symbol from every other atom; the cap guards
    // against cycling between equalities
    for _ in 0..16 {
        let pres = pres_atoms(&t);
        let fixed = pres.iter().find_map(|a| {
            let PresAtom::Cmp { form, rel: Rel::Eq } = a else {
                return None;
            };
            let (s, c) = form.coeffs().filter(|(_, c)| c.abs() == Rational64::one()).last()?;
            if !t.lexp.mentions(s) && !others_mention(&pres, a, s) {
                return None;
            }
            let (_, rest) = form.take(s);
            Some((a.clone(), s.clone(), rest.scale(-c.recip())))
        });
        let Some((eq, s, v)) = fixed else {
            return Some(t);
        };
        let mut rest = vec![eq.clone()];
        for a in pres.iter().filter(|a| **a != eq) {
            match a.substitute(&s, &v) {
                Normalized::False => return None,
                Normalized::True => {}
                Normalized::Atom(b) => rest.push(b),
            }
        }
        let mut next = with_pres(&t, t.coeff.clone(), rest);
        next.lexp = t.lexp.substitute(&s, &v);
        t = next;
    }
    Some(t)
}

fn others_mention(pres: &[PresAtom], eq: &PresAtom, s: &Sym) -> bool {
    pres.iter().any(|a| a != eq && a.mentions(s))
}

/// Two terms of equal shape whose Presburger conditions differ in one
/// interval on the same form: the shared atoms and both intervals.
fn comparable(a: &CExpTerm, b: &CExpTerm) -> Option<(Vec<PresAtom>, Interval, Interval)> {
    if (&a.lexp, &a.sums, &a.exp_arg, &a.res_arg) != (&b.lexp, &b.sums, &b.exp_arg, &b.res_arg) {
        return None;
    }
    let other = |t: &CExpTerm| -> Vec<CondAtom> {
        t.conds.iter().filter(|c| !matches!(c, CondAtom::Pres(_))).cloned().collect()
    };
    if other(a) != other(b) {
        return None;
    }
    let (pa, pb) = (pres_atoms(a), pres_atoms(b));
    let common: Vec<PresAtom> = pa.iter().filter(|x| pb.contains(x)).cloned().collect();
    let da: Vec<&PresAtom> = pa.iter().filter(|x| !common.contains(x)).collect();
    let db: Vec<&PresAtom> = pb.iter().filter(|x| !common.contains(x)).collect();
    if da.len() > 1 || db.len() > 1 || da.len() + db.len() == 0 {
        return None;
    }
    let ia = da.first().map(|x| interval(x));
    let ib = db.first().map(|x| interval(x));
    let (ia, ib) = match (ia, ib) {
        (Some(Some(x)), Some(Some(y))) => (x, y),
        (Some(Some(x)), None) => {
            let y = everything(&x.g);
            (x, y)
        }
        (None, Some(Some(y))) => (everything(&y.g), y),
        _ => return None,
    };
    (ia.g == ib.g).then_some((common, ia, ib))
}

fn max_lo(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) | (None, x) => x,
    }
}

fn min_hi(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

/// `a \ b` as at most two intervals.
fn minus(a: &Interval, b: &Interval) -> Vec<Interval> {
    let mut out = Vec::new();
    if let Some(l) = b.lo {
        if le(a.lo, Some(l - 1), true) {
            out.push(Interval { g: a.g.clone(), lo: a.lo, hi: min_hi(a.hi, Some(l - 1)) });
        }
    }
    if let Some(h) = b.hi {
        if le(Some(h + 1), a.hi, false) {
            out.push(Interval { g: a.g.clone(), lo: max_lo(a.lo, Some(h + 1)), hi: a.hi });
        }
    }
    out
}

/// Overlapping pieces `c [A] + d [B]` rewritten on the disjoint pieces
/// `A \ B`, `A n B` and `B \ A`.
fn split(a: &CExpTerm, b: &CExpTerm) -> Option<Vec<CExpTerm>> {
    let (common, ia, ib) = comparable(a, b)?;
    let meet = Interval { g: ia.g.clone(), lo: max_lo(ia.lo, ib.lo), hi: min_hi(ia.hi, ib.hi) };
    if meet.lo.zip(meet.hi).is_some_and(|(l, h)| l > h) {
        return None;
    }
    let mut out = Vec::new();
    let mut piece = |coeff: &LRat, iv: &Interval| -> Option<()> {
        let mut pres = common.clone();
        pres.extend(atoms(iv)?);
        out.push(with_pres(a, coeff.clone(), pres));
        Some(())
    };
    for iv in minus(&ia, &ib) {
        piece(&a.coeff, &iv)?;
    }
    piece(&(&a.coeff + &b.coeff), &meet)?;
    for iv in minus(&ib, &ia) {
        piece(&b.coeff, &iv)?;
    }
    Some(out)
}

/// Merge of two terms with equal shape apart from coefficient and
/// Presburger conditions.
fn merge(a: &CExpTerm, b: &CExpTerm) -> Option<CExpTerm> {
    let (common, ia, ib) = comparable(a, b)?;
    let neg = (&a.coeff + &b.coeff).is_zero();
    let (coeff, region) = if a.coeff == b.coeff {
        (a.coeff.clone(), union(&ia, &ib)?)
    } else if neg && contains(&ia, &ib) {
        (a.coeff.clone(), difference(&ia, &ib)?)
    } else if neg && contains(&ib, &ia) {
        (b.coeff.clone(), difference(&ib, &ia)?)
    } else {
        return None;
    };
    let mut pres = common;
    pres.extend(atoms(&region)?);
    Some(with_pres(a, coeff, pres))
}

/// Piecewise simplification; the result is rewritten.
pub fn merge_pieces(e: &CExp) -> CExp {
    let pinned: Vec<CExpTerm> = rewrite(e).terms.into_iter().filter_map(pin).collect();
    let mut terms = rewrite(&CExp { ctx: e.ctx.clone(), terms: pinned }).terms;
    // splits can feed further splits; the cap bounds the pathological case
    let mut splits = 0;
    'again: loop {
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if let Some(m) = merge(&terms[i], &terms[j]) {
                    terms.remove(j);
                    terms.remove(i);
                    terms.extend(pin(m));
                    terms = rewrite(&CExp { ctx: e.ctx.clone(), terms }).terms;
                    continue 'again;
                }
            }
        }
        if splits < 32 {
            for i in 0..terms.len() {
                for j in i + 1..terms.len() {
                    if let Some(parts) = split(&terms[i], &terms[j]) {
                        terms.remove(j);
                        terms.remove(i);
                        terms.extend(parts.into_iter().filter_map(pin));
                        terms = rewrite(&CExp { ctx: e.ctx.clone(), terms }).terms;
                        splits += 1;
                        continue 'again;
                    }
                }
            }
        }
        break;
    }
    CExp { ctx: e.ctx.clone(), terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cexp::parse;

    fn simp(s: &str) -> String {
        merge_pieces(&parse(s).unwrap()).body_string()
    }

    #[test]
    fn telescoped_shells() {
        let s = "vf x; L^-1 * [ord(x) >= 1] + L^-1 * L^(ord(x)) * [ord(x) <= 0] - L^-1 * L^(ord(x)) * [ord(x) <= -1]";
        assert_eq!(simp(s), simp("vf x; L^-1 * [ord(x) >= 0]"));
    }

    #[test]
    fn complements_and_unions() {
        assert_eq!(simp("vf x; [ord(x) >= 2] + [ord(x) <= 1]"), "1");
        assert_eq!(simp("vf x; [ord(x) == 0] + [ord(x) == 1]"), simp("vf x; [ord(x) >= 0, ord(x) <= 1]"));
        assert_eq!(simp("vf x; 1 - [ord(x) <= 0]"), simp("vf x; [ord(x) >= 1]"));
    }

    #[test]
    fn pins_parametric_equalities() {
        let s = "vf x; int k; L^(ord(x)) * [k + ord(x) == 0] - L^(-k) * [ord(x) == -k]";
        assert_eq!(simp(s), "0");
    }

    #[test]
    fn overlaps_are_split() {
        let s = "vf x; L^-1 * L^(-ord(x)) * [ord(x) >= 0] + (1 - L^-1) * L^(-ord(x)) * [ord(x) >= 1] - L^(-ord(x)) * [ord(x) >= 2] + L^-1 * [ord(x) >= 2]";
        assert_eq!(simp(s), simp("vf x; L^-1 * [ord(x) >= 0]"));
        let s = "vf x; [ord(x) >= 0] + [ord(x) <= 1]";
        assert_eq!(simp(s), simp("vf x; 2 * [ord(x) >= 0, ord(x) <= 1] + [ord(x) >= 2] + [ord(x) <= -1]"));
    }
}
