//! One-variable cell decomposition for data built from linear factors.
//!
//! Every `ord`/`ac` atom mentioning the distinguished variable `t` must be
//! of the form `a * (t - c)` with `a` a constant (a rational times a power
//! of `w`); the `c` are the centers. With one center the cells are the
//! shells `ord(t - c) = j`, `ac(t - c) = eta`. With two centers `c1, c2`
//! and `delta = ord(c2 - c1)`, `alpha = ac(c2 - c1)` the family of shells
//! around `c1` is cut into `j < delta`, `j > delta`, `j = delta` with
//! `eta != alpha`, and the remaining ball `ord(t - c2) > delta` is
//! described by shells around `c2`.
//!
//! The graphs `t = c` are measure zero and are not listed.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::cexp::{CExpTerm, CondAtom, RAtom, RTerm};
use crate::presburger::{CmpOp, LinForm, Normalized, PresAtom, Sym};
use crate::vterm::{VMono, VTerm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CellError {
    #[error("`{0}` does not factor over linear centers in the integration variable")]
    UnsupportedShape(String),
    #[error("more than two centers: {0}")]
    TooManyCenters(String),
    #[error("centers `{0}` and `{1}` coincide")]
    DegenerateCenters(String, String),
    #[error("`{0}` is not affine in the integration variable on this cell")]
    NotAffine(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellKind {
    OneCell,
    ZeroCell,
}

/// A family of shells `{ord(t - center) = j, ac(t - center) = eta}`
/// subject to `conds` (in `j`, `eta` and the parameters).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub center: VTerm,
    pub order_var: String,
    pub ac_var: String,
    /// `ac(t - center)` when it is fixed on the cell.
    pub ac_constraint: Option<RTerm>,
    /// `t - center in lambda P_m`, when required.
    pub coset: Option<(VTerm, u32)>,
    pub conds: Vec<CondAtom>,
    pub kind: CellKind,
}

/// `ord` and `ac` of a target on a cell, and its affine presentation
/// `u * (t - center) + w` when it has one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedTerm {
    pub target: VTerm,
    pub ord: LinForm,
    pub ac: RTerm,
    pub affine: Option<(VTerm, VTerm)>,
}

/// `v = a * (t - c)`: returns `(a, c)`.
fn linear_factor(v: &VTerm, var: &str) -> Result<(VTerm, VTerm), CellError> {
    let cs = v.coeffs_in(var);
    if cs.len() != 2 || cs[1].is_zero() {
        return Err(CellError::UnsupportedShape(v.to_string()));
    }
    let a = &cs[1];
    let (k, m) = match a.as_monomial() {
        Some((k, m)) if m.vars.is_empty() => (k, m.w),
        _ => return Err(CellError::UnsupportedShape(v.to_string())),
    };
    let inv = VTerm::monomial(k.recip(), VMono { w: -m, vars: Default::default() });
    Ok((a.clone(), cs[0].mul(&inv).neg()))
}

/// Valued terms inside `ord`/`ac` atoms of `t` that mention `var`.
fn t_atoms(t: &CExpTerm, var: &str) -> BTreeSet<VTerm> {
    let mut out = BTreeSet::new();
    let from_lin = |l: &LinForm, out: &mut BTreeSet<VTerm>| {
        for (s, _) in l.coeffs() {
            if let Sym::Ord(v) = s {
                if v.contains_var(var) {
                    out.insert(v.clone());
                }
            }
        }
    };
    from_lin(&t.lexp, &mut out);
    let from_r = |r: &RTerm, out: &mut BTreeSet<VTerm>| {
        for a in r.atoms() {
            if let RAtom::Ac(v) = a {
                if v.contains_var(var) {
                    out.insert(v);
                }
            }
        }
    };
    from_r(&t.res_arg, &mut out);
    for c in &t.conds {
        match c {
            CondAtom::Pres(a) => from_lin(a.form(), &mut out),
            CondAtom::ResEq(r) | CondAtom::ResNeq(r) | CondAtom::PowRes { r, .. } => {
                from_r(r, &mut out)
            }
            CondAtom::OrdCmp { v, rhs, .. } => {
                out.insert(v.clone());
                from_lin(rhs, &mut out);
            }
            CondAtom::AcEq { v, r } | CondAtom::AcNeq { v, r } => {
                out.insert(v.clone());
                from_r(r, &mut out);
            }
            CondAtom::CosetIn { v, lambda, .. } => {
                out.insert(v.clone());
                out.insert(lambda.clone());
            }
        }
    }
    out.retain(|v| v.contains_var(var));
    out
}

/// Centers of a normalized term in `var`, sorted.
pub fn centers(t: &CExpTerm, var: &str) -> Result<Vec<VTerm>, CellError> {
    let mut cs = BTreeSet::new();
    for v in t_atoms(t, var) {
        cs.insert(linear_factor(&v, var)?.1);
    }
    if cs.is_empty() && t.exp_arg.contains_var(var) {
        cs.insert(VTerm::zero());
    }
    let cs: Vec<VTerm> = cs.into_iter().collect();
    if cs.len() > 2 {
        let names: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
        return Err(CellError::TooManyCenters(names.join(", ")));
    }
    Ok(cs)
}

/// Values of `ord(t - c_i)` and `ac(t - c_i)` on a region.
#[derive(Clone, Debug)]
struct Region {
    center: usize,
    conds: Vec<CondAtom>,
    ords: Vec<LinForm>,
    acs: Vec<RTerm>,
}

fn pres_atom(n: Normalized) -> Option<CondAtom> {
    match n {
        Normalized::Atom(a) => Some(CondAtom::Pres(a)),
        _ => None,
    }
}

fn regions(cs: &[VTerm], j: &str, eta: &str) -> Result<Vec<Region>, CellError> {
    let jl = LinForm::int_var(j);
    let e = RTerm::var(eta);
    if cs.len() <= 1 {
        return Ok(vec![Region {
            center: 0,
            conds: vec![],
            ords: vec![jl],
            acs: vec![e],
        }]);
    }
    let d = cs[1].sub(&cs[0]);
    let Some(delta) = LinForm::ord_of(&d) else {
        return Err(CellError::DegenerateCenters(cs[0].to_string(), cs[1].to_string()));
    };
    let alpha = RTerm::ac_of(&d);
    let cmp = |op| pres_atom(PresAtom::cmp(&jl, op, &delta));
    let mut out = Vec::new();
    // closer to neither: both distances equal ord(t - c1)
    out.push(Region {
        center: 0,
        conds: cmp(CmpOp::Lt).into_iter().collect(),
        ords: vec![jl.clone(), jl.clone()],
        acs: vec![e.clone(), e.clone()],
    });
    // closer to c1
    out.push(Region {
        center: 0,
        conds: cmp(CmpOp::Gt).into_iter().collect(),
        ords: vec![jl.clone(), delta.clone()],
        acs: vec![e.clone(), alpha.neg()],
    });
    // equidistant, excluding the residue disc of c2
    let mut eq = cmp(CmpOp::Eq).into_iter().collect::<Vec<_>>();
    eq.push(CondAtom::ResNeq(e.sub(&alpha)));
    out.push(Region {
        center: 0,
        conds: eq,
        ords: vec![delta.clone(), delta.clone()],
        acs: vec![e.clone(), e.sub(&alpha)],
    });
    // closer to c2
    out.push(Region {
        center: 1,
        conds: cmp(CmpOp::Gt).into_iter().collect(),
        ords: vec![delta.clone(), jl],
        acs: vec![alpha, e],
    });
    Ok(out)
}

/// Rewrites `ord`/`ac` atoms of `var` on a region.
struct Localizer<'a> {
    var: &'a str,
    centers: &'a [VTerm],
    region: &'a Region,
}

impl Localizer<'_> {
    fn ord(&self, v: &VTerm) -> Result<LinForm, CellError> {
        let (a, c) = linear_factor(v, self.var)?;
        let i = self.centers.iter().position(|x| *x == c).expect("center");
        let oa = LinForm::ord_of(&a).expect("nonzero slope");
        Ok(oa.add(&self.region.ords[i]))
    }

    fn ac(&self, v: &VTerm) -> Result<RTerm, CellError> {
        let (a, c) = linear_factor(v, self.var)?;
        let i = self.centers.iter().position(|x| *x == c).expect("center");
        Ok(RTerm::ac_of(&a).mul(&self.region.acs[i]))
    }

    fn lin(&self, l: &LinForm) -> Result<LinForm, CellError> {
        let mut err = None;
        let out = l.map_syms(&mut |s| match s {
            Sym::Ord(v) if v.contains_var(self.var) => match self.ord(v) {
                Ok(x) => Some(x),
                Err(e) => {
                    err = Some(e);
                    None
                }
            },
            _ => None,
        });
        err.map_or(Ok(out), Err)
    }

    fn rterm(&self, r: &RTerm) -> Result<RTerm, CellError> {
        let mut err = None;
        let out = r.map_atoms(&mut |a| match a {
            RAtom::Ac(v) if v.contains_var(self.var) => match self.ac(v) {
                Ok(x) => Some(x),
                Err(e) => {
                    err = Some(e);
                    None
                }
            },
            _ => None,
        });
        err.map_or(Ok(out), Err)
    }

    fn cond(&self, c: &CondAtom) -> Result<Option<CondAtom>, CellError> {
        Ok(match c {
            CondAtom::Pres(a) => {
                if !a.mentions_vf(self.var) {
                    return Ok(Some(c.clone()));
                }
                let f = self.lin(a.form())?;
                match a.map_form(|_| f) {
                    Normalized::True => None,
                    Normalized::False => Some(CondAtom::ResNeq(RTerm::zero())),
                    Normalized::Atom(x) => Some(CondAtom::Pres(x)),
                }
            }
            CondAtom::ResEq(r) => Some(CondAtom::ResEq(self.rterm(r)?)),
            CondAtom::ResNeq(r) => Some(CondAtom::ResNeq(self.rterm(r)?)),
            CondAtom::PowRes { r, m } => Some(CondAtom::PowRes {
                r: self.rterm(r)?,
                m: *m,
            }),
            other => {
                if other.mentions_vf(self.var) {
                    return Err(CellError::UnsupportedShape(other.to_string()));
                }
                Some(other.clone())
            }
        })
    }
}

/// A term restricted to one cell family, in shell coordinates.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub cell: Cell,
    /// The term with every `ord`/`ac` of `var` replaced and the cell
    /// conditions added; its `E` argument is the value at the center.
    pub term: CExpTerm,
    /// Coefficients `u_k` of `(t - center)^k` in the `E` argument, `k >= 1`.
    pub phase: Vec<VTerm>,
}

fn center_list(t: &CExpTerm, var: &str) -> Result<Vec<VTerm>, CellError> {
    let cs = centers(t, var)?;
    Ok(if cs.is_empty() { vec![VTerm::zero()] } else { cs })
}

fn localize_conds(loc: &Localizer, conds: &[CondAtom]) -> Result<Vec<CondAtom>, CellError> {
    let mut out = loc.region.conds.clone();
    for c in conds {
        if let Some(x) = loc.cond(c)? {
            out.push(x);
        }
    }
    Ok(out)
}

fn make_cell(center: VTerm, j: &str, eta: &str, conds: Vec<CondAtom>) -> Cell {
    Cell {
        center,
        order_var: j.to_string(),
        ac_var: eta.to_string(),
        ac_constraint: ac_fixed(&conds, eta),
        coset: None,
        conds,
        kind: CellKind::OneCell,
    }
}

/// Splits a normalized term into cell families over `var`. `j` and `eta`
/// name the shell order and angular component.
pub fn localize(t: &CExpTerm, var: &str, j: &str, eta: &str) -> Result<Vec<LocalTerm>, CellError> {
    localize_at(t, var, &center_list(t, var)?, j, eta)
}

/// [`localize`] against a fixed list of at most two centers containing
/// those of `t`. Terms localized at the same centers share the region
/// list, index by index.
pub fn localize_at(
    t: &CExpTerm,
    var: &str,
    cs: &[VTerm],
    j: &str,
    eta: &str,
) -> Result<Vec<LocalTerm>, CellError> {
    let mut out = Vec::new();
    for region in regions(cs, j, eta)? {
        let loc = Localizer {
            var,
            centers: cs,
            region: &region,
        };
        let conds = localize_conds(&loc, &t.conds)?;
        let center = cs[region.center].clone();
        let shifted = t.exp_arg.substitute(var, &VTerm::var(var).add(&center));
        let coeffs = shifted.coeffs_in(var);
        let mut term = t.clone();
        term.lexp = loc.lin(&t.lexp)?;
        term.res_arg = loc.rterm(&t.res_arg)?;
        term.conds = conds.clone();
        term.exp_arg = coeffs.first().cloned().unwrap_or_else(VTerm::zero);
        out.push(LocalTerm {
            cell: make_cell(center, j, eta, conds),
            term,
            phase: coeffs.into_iter().skip(1).collect(),
        });
    }
    Ok(out)
}

fn ac_fixed(conds: &[CondAtom], eta: &str) -> Option<RTerm> {
    let atom = RAtom::Var(eta.to_string());
    conds.iter().find_map(|c| match c {
        CondAtom::ResEq(r) => {
            let (a, d) = r.linear_in(&atom)?;
            let k = a.as_constant()?;
            (!k.is_zero()).then(|| d.scale(-k.recip()))
        }
        _ => None,
    })
}

fn pres_of(conds: &[CondAtom]) -> Vec<PresAtom> {
    conds
        .iter()
        .filter_map(|c| match c {
            CondAtom::Pres(a) => Some(a.clone()),
            _ => None,
        })
        .collect()
}

/// Cell decomposition of the set cut out by `conds`, with `targets`
/// prepared on every cell. Cells whose order constraints are infeasible
/// are dropped.
pub fn decompose(
    conds: &[CondAtom],
    targets: &[VTerm],
    var: &str,
) -> Result<Vec<(Cell, Vec<PreparedTerm>)>, CellError> {
    let mut base = CExpTerm::one();
    base.conds = conds.to_vec();
    let j = format!("_j_{}", var);
    let eta = format!("_a_{}", var);
    let mut out = Vec::new();
    for t in crate::cexp::normalize_term(&base) {
        let mut probe = t.clone();
        for g in targets {
            if let Some(l) = LinForm::ord_of(g) {
                probe.lexp = probe.lexp.add(&l);
            }
        }
        let cs = center_list(&probe, var)?;
        for region in regions(&cs, &j, &eta)? {
            let loc = Localizer {
                var,
                centers: &cs,
                region: &region,
            };
            let mut conds = localize_conds(&loc, &t.conds)?;
            if crate::presburger::is_unsat(&pres_of(&conds))
                || conds.iter().any(|c| matches!(c, CondAtom::ResNeq(r) if r.is_zero()))
            {
                continue;
            }
            let mut seen = BTreeSet::new();
            conds.retain(|c| seen.insert(c.to_string()));
            let center = cs[region.center].clone();
            let mut prepared = Vec::new();
            for g in targets {
                let ord = LinForm::ord_of(g)
                    .ok_or_else(|| CellError::UnsupportedShape(g.to_string()))?;
                prepared.push(PreparedTerm {
                    target: g.clone(),
                    ord: loc.lin(&ord)?,
                    ac: loc.rterm(&RTerm::ac_of(g))?,
                    affine: prepare_affine(g, var, &center).ok(),
                });
            }
            out.push((make_cell(center, &j, &eta, conds), prepared));
        }
    }
    Ok(out)
}

/// `g = u * (t - center) + w` with `u`, `w` free of `var`.
pub fn prepare_affine(g: &VTerm, var: &str, center: &VTerm) -> Result<(VTerm, VTerm), CellError> {
    let shifted = g.substitute(var, &VTerm::var(var).add(center));
    let cs = shifted.coeffs_in(var);
    match cs.len() {
        0 => Ok((VTerm::zero(), VTerm::zero())),
        1 => Ok((VTerm::zero(), cs[0].clone())),
        2 => Ok((cs[1].clone(), cs[0].clone())),
        _ => Err(CellError::NotAffine(g.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cexp::parse;

    fn conds(src: &str) -> Vec<CondAtom> {
        parse(src).unwrap().terms[0].conds.clone()
    }

    #[test]
    fn single_ball() {
        let cs = conds("vf t; [ord(t) >= 0]");
        let d = decompose(&cs, &[VTerm::var("t")], "t").unwrap();
        assert_eq!(d.len(), 1);
        let (cell, prep) = &d[0];
        assert_eq!(cell.center, VTerm::zero());
        assert_eq!(prep[0].ord, LinForm::int_var(&cell.order_var));
        assert_eq!(
            prep[0].affine,
            Some((VTerm::int(1), VTerm::zero()))
        );
    }

    #[test]
    fn two_centers_split_four_ways() {
        let cs = conds("vf t; [ord(t - 1) >= 0]");
        let g = VTerm::var("t").mul(&VTerm::var("t").sub(&VTerm::int(1)));
        let d = decompose(&cs, &[g], "t").unwrap();
        // ord(1) = 0 separates the centers 0 and 1; the shells with
        // ord(t) < 0 violate the condition
        assert_eq!(d.len(), 3);
        assert!(d.iter().any(|(c, _)| c.center == VTerm::int(1)));
    }

    #[test]
    fn affine_preparation() {
        let g = VTerm::int(3).mul(&VTerm::var("t")).add(&VTerm::int(1));
        assert_eq!(
            prepare_affine(&g, "t", &VTerm::zero()).unwrap(),
            (VTerm::int(3), VTerm::int(1))
        );
        let sq = VTerm::var("t").pow(2);
        assert!(matches!(
            prepare_affine(&sq, "t", &VTerm::int(1)),
            Err(CellError::NotAffine(_))
        ));
    }

    #[test]
    fn rejects_non_linear_atoms() {
        let cs = conds("vf t; [ord(t^2 + 1) >= 0]");
        assert!(matches!(
            decompose(&cs, &[], "t"),
            Err(CellError::UnsupportedShape(_))
        ));
    }
}
