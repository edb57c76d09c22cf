//! Fourier-Motzkin refutation over the rationals with integer tightening.
//!
//! Used only as a sound test: `is_unsat` returning `true` proves there is
//! no integer solution; `false` means "not refuted". Congruences and
//! disequalities are ignored.

use std::collections::BTreeMap;

use num_integer::Integer;

use super::{Normalized, PresAtom, Rel, Sym};

const MAX_CONSTRAINTS: usize = 600;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Row {
    a: Vec<i128>,
    c: i128,
}

fn tighten(mut r: Row) -> Row {
    let g = r.a.iter().fold(0i128, |g, x| g.gcd(x));
    if g > 1 {
        for x in r.a.iter_mut() {
            *x /= g;
        }
        // sum a x + c <= 0  ->  sum (a/g) x + ceil(c/g) <= 0
        r.c = -Integer::div_floor(&-r.c, &g);
    }
    r
}

fn checked_comb(p: &Row, kp: i128, q: &Row, kq: i128) -> Option<Row> {
    let mut a = Vec::with_capacity(p.a.len());
    for (x, y) in p.a.iter().zip(&q.a) {
        a.push(x.checked_mul(kp)?.checked_add(y.checked_mul(kq)?)?);
    }
    let c = p.c.checked_mul(kp)?.checked_add(q.c.checked_mul(kq)?)?;
    Some(Row { a, c })
}

/// `true` if the conjunction certainly has no integer solution.
pub fn is_unsat(atoms: &[PresAtom]) -> bool {
    let mut idx: BTreeMap<&Sym, usize> = BTreeMap::new();
    for a in atoms {
        if let PresAtom::Cmp { form, .. } = a {
            for (s, _) in form.coeffs() {
                let n = idx.len();
                idx.entry(s).or_insert(n);
            }
        }
    }
    let n = idx.len();
    let mut eqs = Vec::new();
    let mut les = Vec::new();
    for a in atoms {
        if let PresAtom::Cmp { form, rel } = a {
            let mut row = Row {
                a: vec![0; n],
                c: form.constant_term().to_integer() as i128,
            };
            for (s, c) in form.coeffs() {
                row.a[idx[s]] = c.to_integer() as i128;
            }
            match rel {
                Rel::Le => les.push(row),
                Rel::Eq => eqs.push(row),
                Rel::Ne => {}
            }
        }
    }
    // Eliminate equalities by substitution.
    while let Some(e) = eqs.pop() {
        let Some(k) = (0..n).find(|&i| e.a[i] != 0) else {
            if e.c != 0 {
                return true;
            }
            continue;
        };
        let g = e.a.iter().fold(0i128, |g, x| g.gcd(x));
        if e.c % g != 0 {
            return true;
        }
        let ak = e.a[k];
        let sub = |r: &Row| -> Option<Row> {
            if r.a[k] == 0 {
                return Some(r.clone());
            }
            // r * |ak| - sign(ak) * r[k] * e
            let s = if ak > 0 { 1 } else { -1 };
            checked_comb(r, ak.abs(), &e, -s * r.a[k])
        };
        let mut next_eqs = Vec::new();
        for r in &eqs {
            match sub(r) {
                Some(x) => next_eqs.push(x),
                None => return false,
            }
        }
        let mut next_les = Vec::new();
        for r in &les {
            match sub(r) {
                Some(x) => next_les.push(x),
                None => return false,
            }
        }
        eqs = next_eqs;
        les = next_les;
    }
    let mut rows: Vec<Row> = les.into_iter().map(tighten).collect();
    for var in 0..n {
        rows.sort();
        rows.dedup();
        if rows.iter().any(|r| r.a.iter().all(|x| *x == 0) && r.c > 0) {
            return true;
        }
        let (pos, rest): (Vec<Row>, Vec<Row>) = rows.into_iter().partition(|r| r.a[var] > 0);
        let (neg, zero): (Vec<Row>, Vec<Row>) = rest.into_iter().partition(|r| r.a[var] < 0);
        if pos.len() * neg.len() + zero.len() > MAX_CONSTRAINTS {
            return false;
        }
        let mut next = zero;
        for p in &pos {
            for q in &neg {
                match checked_comb(p, -q.a[var], q, p.a[var]) {
                    Some(r) => next.push(tighten(r)),
                    None => return false,
                }
            }
        }
        rows = next;
    }
    rows.iter().any(|r| r.c > 0)
}

/// `true` if `premises` certainly imply `goal`.
pub fn implies(premises: &[PresAtom], goal: &PresAtom) -> bool {
    if premises.contains(goal) {
        return true;
    }
    match goal {
        PresAtom::Cmp { form, rel } => {
            let negs: Vec<Vec<Normalized>> = match rel {
                Rel::Le | Rel::Ne => vec![goal.negate()],
                Rel::Eq => vec![
                    vec![PresAtom::le0(form.clone().add_const(1))],
                    vec![PresAtom::le0(form.neg().add_const(1))],
                ],
            };
            negs.into_iter().all(|branch| {
                branch.into_iter().all(|n| match n {
                    Normalized::False => true,
                    Normalized::True => is_unsat(premises),
                    Normalized::Atom(a) => {
                        let mut v = premises.to_vec();
                        v.push(a);
                        is_unsat(&v)
                    }
                })
            })
        }
        PresAtom::Mod { .. } => false,
    }
}
