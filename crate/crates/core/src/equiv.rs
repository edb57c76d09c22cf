//! Deciding equality of constructible exponential functions.
//!
//! Two expressions are first compared after rewriting. Otherwise their
//! difference is evaluated on a grid of integer values for every order
//! symbol and integer parameter; at each point the remaining
//! residue-level expression is checked by case analysis on the truth of
//! its residue conditions. The grid radius covers every constant occurring
//! in the conditions, so piecewise behavior and exponential polynomials in
//! the parameters are pinned down on each region.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cells;
use crate::cexp::{merge_pieces, normalize_term, CExp, CExpTerm, CondAtom, RAtom, RTerm, Sort};
use crate::lring::LRat;
use crate::presburger::{Ext, LinForm, Normalized, PresAtom, Sym};
use crate::vterm::VTerm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Equal after rewriting.
    Identical,
    /// Equal at every grid point, residue level decided symbolically.
    Equivalent,
    /// Not decided symbolically; numeric evaluation agrees.
    OracleEqual,
    Different,
    Undecided,
}

impl Verdict {
    /// Exact symbolic equality.
    pub fn is_exact(self) -> bool {
        matches!(self, Verdict::Identical | Verdict::Equivalent)
    }
}

#[derive(Clone, Debug)]
pub struct GridOptions {
    /// Half-width of the grid; derived from the constants when `None`.
    pub radius: Option<i64>,
    pub max_points: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            radius: None,
            max_points: 50_000,
        }
    }
}

pub fn compare(a: &CExp, b: &CExp) -> Verdict {
    compare_with(a, b, &GridOptions::default())
}

pub fn compare_with(a: &CExp, b: &CExp, opts: &GridOptions) -> Verdict {
    let (ra, rb) = (merge_pieces(a), merge_pieces(b));
    if ra.terms == rb.terms {
        return Verdict::Identical;
    }
    let d = ra.sub(&rb);
    if d.is_zero() {
        return Verdict::Identical;
    }
    let vars = d.vars_of(Sort::Valued);
    let Some(regions) = split_centers(d.terms, &vars) else {
        return Verdict::Undecided;
    };
    let mut unknown = false;
    for r in &regions {
        match grid_zero(r, opts) {
            Some(true) => {}
            Some(false) => return Verdict::Different,
            None => unknown = true,
        }
    }
    if unknown {
        Verdict::Undecided
    } else {
        Verdict::Equivalent
    }
}

/// Cuts the domain so that on every piece each valued variable enters
/// only through one center, then replaces it by shell coordinates
/// `z = x - c`. Afterwards distinct `ord` symbols are independent, which
/// the grid check assumes. `None` if some variable has no cell
/// decomposition.
fn split_centers(terms: Vec<CExpTerm>, vars: &[String]) -> Option<Vec<Vec<CExpTerm>>> {
    let mut pieces = vec![terms];
    for x in vars {
        let mut next = Vec::new();
        for piece in pieces {
            let mut cs = BTreeSet::new();
            for t in &piece {
                cs.extend(cells::centers(t, x).ok()?);
            }
            if cs.iter().all(VTerm::is_zero) {
                next.push(piece);
                continue;
            }
            let cs: Vec<VTerm> = cs.into_iter().collect();
            if cs.len() > 2 {
                return None;
            }
            let (j, eta, z) = (format!("_j_{x}"), format!("_a_{x}"), format!("_z_{x}"));
            let mut split: Vec<Vec<CExpTerm>> = Vec::new();
            for t in &piece {
                let local = cells::localize_at(t, x, &cs, &j, &eta).ok()?;
                split.resize(local.len(), Vec::new());
                for (i, l) in local.into_iter().enumerate() {
                    split[i].extend(normalize_term(&shell_coordinates(l, &j, &eta, &z)));
                }
            }
            next.extend(split);
        }
        pieces = next;
    }
    Some(pieces)
}

/// A localized term written in a fresh valued variable `z` with
/// `ord(z) = j`, `ac(z) = eta`.
fn shell_coordinates(l: cells::LocalTerm, j: &str, eta: &str, z: &str) -> CExpTerm {
    let zv = VTerm::var(z);
    let ord_z = LinForm::ord_var(z);
    let ac_z = RTerm::ac_of(&zv);
    let js = Sym::int(j);
    let eta_atom = RAtom::Var(eta.to_string());
    let r = |r: &RTerm| r.map_atoms(&mut |a| (*a == eta_atom).then(|| ac_z.clone()));
    let mut t = l.term;
    t.lexp = t.lexp.substitute(&js, &ord_z);
    t.res_arg = r(&t.res_arg);
    t.conds = t
        .conds
        .iter()
        .filter_map(|c| match c {
            CondAtom::Pres(a) => match a.substitute(&js, &ord_z) {
                Normalized::True => None,
                Normalized::False => Some(CondAtom::ResNeq(RTerm::zero())),
                Normalized::Atom(b) => Some(CondAtom::Pres(b)),
            },
            CondAtom::ResEq(x) => Some(CondAtom::ResEq(r(x))),
            CondAtom::ResNeq(x) => Some(CondAtom::ResNeq(r(x))),
            CondAtom::PowRes { r: x, m } => Some(CondAtom::PowRes { r: r(x), m: *m }),
            other => Some(other.clone()),
        })
        .collect();
    for (k, u) in l.phase.iter().enumerate() {
        t.exp_arg = t.exp_arg.add(&u.mul(&zv.pow(k as u32 + 1)));
    }
    t
}

fn exp_monomials(v: &VTerm) -> impl Iterator<Item = VTerm> + '_ {
    v.terms().map(|(m, c)| VTerm::monomial(*c, m.clone()))
}

fn grid_symbols(terms: &[CExpTerm]) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    for t in terms {
        out.extend(t.lexp.symbols());
        for c in &t.conds {
            if let CondAtom::Pres(a) = c {
                out.extend(a.symbols());
            }
        }
        for m in exp_monomials(&t.exp_arg) {
            if let Some(l) = LinForm::ord_of(&m) {
                out.extend(l.symbols());
            }
        }
    }
    out
}

fn derived_radius(terms: &[CExpTerm], n: usize) -> i64 {
    let size = |l: &LinForm| l.constant_term().abs().ceil().to_integer();
    let mut b = 0i64;
    for t in terms {
        b = b.max(size(&t.lexp));
        for c in &t.conds {
            match c {
                CondAtom::Pres(PresAtom::Cmp { form, .. }) => b = b.max(size(form)),
                CondAtom::Pres(PresAtom::Mod { modulus, .. }) => b = b.max(*modulus),
                _ => {}
            }
        }
        for m in exp_monomials(&t.exp_arg) {
            if let Some(l) = LinForm::ord_of(&m) {
                b = b.max(size(&l));
            }
        }
    }
    b + 2 + n as i64
}

/// `Some(true)` if zero at every grid point, `Some(false)` if some point is
/// certainly nonzero, `None` otherwise.
fn grid_zero(terms: &[CExpTerm], opts: &GridOptions) -> Option<bool> {
    let syms: Vec<Sym> = grid_symbols(terms).into_iter().collect();
    let n = syms.len();
    let mut r = opts.radius.unwrap_or_else(|| derived_radius(terms, n));
    while r > 2 && (2 * r + 1).checked_pow(n as u32).is_none_or(|k| k as usize > opts.max_points) {
        r -= 1;
    }
    if (2 * r + 1).checked_pow(n as u32).is_none_or(|k| k as usize > opts.max_points) {
        return None;
    }
    let mut point = vec![-r; n];
    let mut unknown = false;
    loop {
        let at: BTreeMap<&Sym, i64> = syms.iter().zip(point.iter().copied()).collect();
        match instantiate_all(terms, &mut |s| Some(at.get(s).copied().unwrap_or(0))) {
            Some(q) => match residue_zero(&q) {
                Some(true) => {}
                Some(false) => return Some(false),
                None => unknown = true,
            },
            None => unknown = true,
        }
        // odometer
        let mut i = 0;
        loop {
            if i == n {
                return if unknown { None } else { Some(true) };
            }
            if point[i] < r {
                point[i] += 1;
                break;
            }
            point[i] = -r;
            i += 1;
        }
    }
}

/// Residual residue-level terms at an assignment of the order symbols;
/// `None` when an exponent is not integral there.
pub fn instantiate_all(
    terms: &[CExpTerm],
    val: &mut dyn FnMut(&Sym) -> Option<i64>,
) -> Option<Vec<CExpTerm>> {
    let mut out = Vec::new();
    for t in terms {
        if let Some(x) = instantiate(t, val)? {
            out.extend(normalize_term(&x));
        }
    }
    Some(out)
}

fn instantiate(
    t: &CExpTerm,
    val: &mut dyn FnMut(&Sym) -> Option<i64>,
) -> Option<Option<CExpTerm>> {
    let mut conds = Vec::new();
    for c in &t.conds {
        match c {
            CondAtom::Pres(a) => {
                if !a.eval(val) {
                    return Some(None);
                }
            }
            other => conds.push(other.clone()),
        }
    }
    let k = match t.lexp.eval(val) {
        Ok(Ext::Fin(k)) if k.is_integer() => k.to_integer(),
        _ => return None,
    };
    let mut out = t.clone();
    out.conds = conds;
    out.coeff = &t.coeff * &LRat::l_pow(k);
    out.lexp = LinForm::zero();
    out.exp_arg = VTerm::zero();
    for m in exp_monomials(&t.exp_arg) {
        let o = match LinForm::ord_of(&m).map(|l| l.eval(val)) {
            Some(Ok(Ext::Fin(o))) => o,
            _ => return None,
        };
        if o >= 1.into() {
            continue;
        }
        if o.is_zero() {
            out.res_arg = out.res_arg.add(&RTerm::ac_of(&m));
        } else {
            out.exp_arg = out.exp_arg.add(&m);
        }
    }
    Some(Some(out))
}

fn subst_atom(r: &RTerm, a: &RAtom, by: &RTerm) -> RTerm {
    r.map_atoms(&mut |x| (x == a).then(|| by.clone()))
}

/// Pins implied by the true atoms of `mask`, or `None` if the assignment
/// is contradictory.
fn pins_for(atoms: &[RTerm], mask: u32) -> Option<Vec<(RAtom, RTerm)>> {
    let mut cur: Vec<RTerm> = atoms.to_vec();
    let mut pins = Vec::new();
    for i in 0..cur.len() {
        if mask >> i & 1 == 0 || cur[i].is_constant() {
            continue;
        }
        let pin = cur[i].atoms().into_iter().find_map(|a| {
            let (c, d) = cur[i].linear_in(&a)?;
            let k = c.as_constant().filter(|k| !k.is_zero())?;
            Some((a, d.scale(-k.recip())))
        });
        if let Some((a, v)) = pin {
            // angular components of nonzero elements are units
            if matches!(a, RAtom::Ac(_)) && v.is_zero() {
                return None;
            }
            for x in cur.iter_mut() {
                *x = subst_atom(x, &a, &v);
            }
            for (_, w) in pins.iter_mut() {
                *w = subst_atom(w, &a, &v);
            }
            pins.push((a, v));
        }
    }
    for (i, x) in cur.iter().enumerate() {
        if let Some(k) = x.as_constant() {
            if (mask >> i & 1 == 1) != k.is_zero() {
                return None;
            }
        }
    }
    Some(pins)
}

type Key = (Vec<String>, VTerm, RTerm, Vec<CondAtom>);

/// Zero test for terms without order conditions.
fn residue_zero(q: &[CExpTerm]) -> Option<bool> {
    if q.is_empty() {
        return Some(true);
    }
    let mut atoms: Vec<RTerm> = Vec::new();
    for t in q {
        for c in &t.conds {
            if let CondAtom::ResEq(r) | CondAtom::ResNeq(r) = c {
                if !atoms.contains(r) {
                    atoms.push(r.clone());
                }
            }
        }
    }
    if atoms.len() > 12 {
        return None;
    }
    let mut unknown = false;
    for mask in 0..(1u32 << atoms.len()) {
        let Some(pins) = pins_for(&atoms, mask) else {
            continue;
        };
        let apply = |r: &RTerm| pins.iter().fold(r.clone(), |x, (a, v)| subst_atom(&x, a, v));
        let mut acc: BTreeMap<Key, LRat> = BTreeMap::new();
        'terms: for t in q {
            let mut rest = Vec::new();
            for c in &t.conds {
                let holds = match c {
                    CondAtom::ResEq(r) => mask >> atoms.iter().position(|x| x == r).unwrap() & 1 == 1,
                    CondAtom::ResNeq(r) => mask >> atoms.iter().position(|x| x == r).unwrap() & 1 == 0,
                    CondAtom::PowRes { r, m } => {
                        rest.push(CondAtom::PowRes { r: apply(r), m: *m });
                        true
                    }
                    other => {
                        rest.push(other.clone());
                        true
                    }
                };
                if !holds {
                    continue 'terms;
                }
            }
            let key = (t.sums.clone(), t.exp_arg.clone(), apply(&t.res_arg), rest);
            let e = acc.entry(key).or_insert_with(LRat::zero);
            *e = &*e + &t.coeff;
        }
        for (key, c) in acc {
            if c.is_zero() {
                continue;
            }
            if key.0.is_empty() && key.3.is_empty() {
                return Some(false);
            }
            unknown = true;
        }
    }
    if unknown {
        None
    } else {
        Some(true)
    }
}
