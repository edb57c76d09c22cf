use num_integer::Integer;
use num_rational::Rational64;
use thiserror::Error;

use super::{is_unsat, LinForm, Normalized, PresAtom, Rel, Sym};

/// `{ j : j = residue (mod modulus), lower <= j <= upper }` on the
/// parameter region described by `guard`. Missing bounds are infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Progression {
    pub guard: Vec<PresAtom>,
    pub residue: i64,
    pub modulus: i64,
    pub lower: Option<LinForm>,
    pub upper: Option<LinForm>,
}

impl Progression {
    pub fn contains(&self, j: i64, val: &mut dyn FnMut(&Sym) -> Option<i64>) -> bool {
        if !self.guard.iter().all(|a| a.eval(val)) {
            return false;
        }
        if j.mod_floor(&self.modulus) != self.residue {
            return false;
        }
        let bound = |l: &LinForm, val: &mut dyn FnMut(&Sym) -> Option<i64>| match l.eval(val) {
            Ok(super::Ext::Fin(x)) => Some(x),
            _ => None,
        };
        let jr = Rational64::from_integer(j);
        if let Some(l) = &self.lower {
            match bound(l, val) {
                Some(x) if jr >= x => {}
                _ => return false,
            }
        }
        if let Some(u) = &self.upper {
            match bound(u, val) {
                Some(x) if jr <= x => {}
                _ => return false,
            }
        }
        true
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("coefficient {coeff} of the summation variable in `{atom}` needs a parametric division")]
    NonUnitCoefficient { coeff: i64, atom: String },
}

#[derive(Clone, Default)]
struct State {
    guard: Vec<PresAtom>,
    lowers: Vec<LinForm>,
    uppers: Vec<LinForm>,
    congr: Vec<(i64, i64)>,
}

fn push_guard(st: &mut State, n: Normalized) -> bool {
    match n {
        Normalized::True => true,
        Normalized::False => false,
        Normalized::Atom(a) => {
            if !st.guard.contains(&a) {
                st.guard.push(a);
            }
            true
        }
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -Integer::div_floor(&-a, &b)
}

/// Solves `a j = b (mod n)` as `j = r (mod m)`.
fn solve_linear_congruence(a: i64, b: i64, n: i64) -> Option<(i64, i64)> {
    let a = a.mod_floor(&n);
    let g = a.gcd(&n);
    if b.mod_floor(&g) != 0 {
        return None;
    }
    let m = n / g;
    if m == 1 {
        return Some((0, 1));
    }
    let inv = (a / g).extended_gcd(&m).x.mod_floor(&m);
    Some((((b / g).mod_floor(&m) * inv).mod_floor(&m), m))
}

/// Combines `x = r1 (mod n1)` and `x = r2 (mod n2)`.
pub(crate) fn crt(r1: i64, n1: i64, r2: i64, n2: i64) -> Option<(i64, i64)> {
    let g = n1.gcd(&n2);
    if (r2 - r1).mod_floor(&g) != 0 {
        return None;
    }
    let l = n1.lcm(&n2);
    // x = r1 + n1 k, n1 k = r2 - r1 (mod n2)
    let (k, _) = solve_linear_congruence(n1, r2 - r1, n2)?;
    Some(((r1 + n1 * k).mod_floor(&l), l))
}

/// Splits a one-variable Presburger conjunction into disjoint truncated
/// progressions in `var`; atoms not mentioning `var` become guards.
pub fn normalize_domain(atoms: &[PresAtom], var: &Sym) -> Result<Vec<Progression>, DomainError> {
    let mut states = vec![State::default()];
    for atom in atoms {
        let mut next = Vec::new();
        for st in states {
            expand(st, atom, var, &mut next)?;
        }
        states = next;
    }
    let mut out = Vec::new();
    for st in states {
        finish(st, &mut out);
    }
    out.retain(|p| !is_unsat(&p.guard));
    Ok(out)
}

fn expand(
    mut st: State,
    atom: &PresAtom,
    var: &Sym,
    out: &mut Vec<State>,
) -> Result<(), DomainError> {
    if !atom.mentions(var) {
        if push_guard(&mut st, Normalized::Atom(atom.clone())) {
            out.push(st);
        }
        return Ok(());
    }
    let (a, rest) = atom.form().take(var);
    let a = a.to_integer();
    let nonunit = || DomainError::NonUnitCoefficient {
        coeff: a,
        atom: atom.to_string(),
    };
    match atom {
        PresAtom::Cmp { rel: Rel::Le, .. } => {
            // a j + rest <= 0
            let bound = if a.abs() == 1 {
                rest.scale(Rational64::from_integer(-a))
            } else if let Some(c) = rest.as_integer() {
                LinForm::constant(if a > 0 {
                    Integer::div_floor(&-c, &a)
                } else {
                    ceil_div(c, -a)
                })
            } else {
                return Err(nonunit());
            };
            if a > 0 {
                st.uppers.push(bound);
            } else {
                st.lowers.push(bound);
            }
            out.push(st);
        }
        PresAtom::Cmp { rel: Rel::Eq, .. } => {
            if a.abs() != 1 {
                match rest.as_integer() {
                    Some(c) if c % a != 0 => return Ok(()),
                    Some(_) => {}
                    None => {
                        let g = PresAtom::congruence(&rest, 0, a.abs());
                        if !push_guard(&mut st, g) {
                            return Ok(());
                        }
                    }
                }
            }
            let v = rest.scale(Rational64::new(-1, a));
            st.lowers.push(v.clone());
            st.uppers.push(v);
            out.push(st);
        }
        PresAtom::Cmp { rel: Rel::Ne, .. } => {
            if a.abs() != 1 {
                match rest.as_integer() {
                    Some(c) if c % a != 0 => {
                        out.push(st);
                        return Ok(());
                    }
                    Some(_) => {}
                    None => return Err(nonunit()),
                }
            }
            let v = rest.scale(Rational64::new(-1, a));
            let mut below = st.clone();
            below.uppers.push(v.add_const(-1));
            out.push(below);
            st.lowers.push(v.add_const(1));
            out.push(st);
        }
        PresAtom::Mod {
            residue, modulus, ..
        } => {
            let n = *modulus;
            if rest.is_constant() {
                if let Some(c) = solve_linear_congruence(a, *residue, n) {
                    st.congr.push(c);
                    out.push(st);
                }
            } else {
                for s in 0..n {
                    let mut b = st.clone();
                    if !push_guard(&mut b, PresAtom::congruence(&rest, s, n)) {
                        continue;
                    }
                    if let Some(c) = solve_linear_congruence(a, residue - s, n) {
                        b.congr.push(c);
                        out.push(b);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Picks the active bound among several by disjoint case split (ties go to
/// the lowest index). `pick_max` selects the largest.
fn split_extreme(bounds: &[LinForm], pick_max: bool) -> Vec<(Vec<Normalized>, Option<LinForm>)> {
    let mut bs: Vec<LinForm> = Vec::new();
    let mut best_const: Option<i64> = None;
    for b in bounds {
        // constant bounds are combined directly (bounds on j are integral)
        if let Some(c) = b.as_constant() {
            let c = if pick_max {
                ceil_div(*c.numer(), *c.denom())
            } else {
                Integer::div_floor(c.numer(), c.denom())
            };
            best_const = Some(match best_const {
                None => c,
                Some(x) if pick_max => x.max(c),
                Some(x) => x.min(c),
            });
        } else if !bs.contains(b) {
            bs.push(b.clone());
        }
    }
    if let Some(c) = best_const {
        bs.push(LinForm::constant(c));
    }
    if bs.is_empty() {
        return vec![(vec![], None)];
    }
    let mut out = Vec::new();
    for i in 0..bs.len() {
        let mut guards = Vec::new();
        for (m, other) in bs.iter().enumerate() {
            if m == i {
                continue;
            }
            // max: b_i > b_m for m < i, b_i >= b_m for m > i
            let (lhs, rhs) = if pick_max {
                (other, &bs[i])
            } else {
                (&bs[i], other)
            };
            let slack = if m < i { 1 } else { 0 };
            guards.push(PresAtom::le0(lhs.sub(rhs).add_const(slack)));
        }
        out.push((guards, Some(bs[i].clone())));
    }
    out
}

fn finish(st: State, out: &mut Vec<Progression>) {
    let mut r = 0;
    let mut n = 1;
    for &(r2, n2) in &st.congr {
        match crt(r, n, r2, n2) {
            Some((a, b)) => {
                r = a;
                n = b;
            }
            None => return,
        }
    }
    for (lg, lower) in split_extreme(&st.lowers, true) {
        for (ug, upper) in split_extreme(&st.uppers, false) {
            let mut s = State {
                guard: st.guard.clone(),
                ..State::default()
            };
            let ok = lg
                .iter()
                .chain(ug.iter())
                .all(|g| push_guard(&mut s, g.clone()));
            if !ok {
                continue;
            }
            if let (Some(l), Some(u)) = (&lower, &upper) {
                if let (Some(a), Some(b)) = (l.as_constant(), u.as_constant()) {
                    if a > b {
                        continue;
                    }
                }
            }
            out.push(Progression {
                guard: s.guard,
                residue: r,
                modulus: n,
                lower: lower.clone(),
                upper: upper.clone(),
            });
        }
    }
}
