//! Motivic integration over valued-field, residue and integer variables.
//!
//! A valued variable is integrated term by term: the term is localized on
//! shells `ord(t - c) = j`, `ac(t - c) = eta` (see [`crate::cells`]), the
//! shell average of the additive character is taken, `eta` becomes a
//! residue sum and `j` is summed as a geometric series.

use num_rational::Rational64;
use thiserror::Error;

use crate::cells::{localize, CellError, LocalTerm};
use crate::cexp::{normalize_term, rewrite, CExp, CExpTerm, CondAtom, RTerm, Sort};
use crate::lring::LRat;
use crate::presburger::{
    is_unsat, sum_series, CmpOp, LinForm, Normalized, PresAtom, PresCond, SumError, SumSpec, Sym,
};
use crate::vterm::VTerm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntegrateError {
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error("unsupported integrand: {0}")]
    UnsupportedIntegrand(String),
    #[error("`{0}` is declared as {1}")]
    WrongSort(String, &'static str),
    #[error("`{0}` has no defined order")]
    ZeroScale(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Status {
    Integrable,
    /// Some parameter region has a divergent series; `value` is the
    /// integral on the complement.
    NonIntegrable,
    /// Residue sums that admit no closed form remain in `value`.
    PartiallySymbolic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegrationResult {
    pub value: CExp,
    pub status: Status,
    /// Parameter regions (conjunctions) where the integral diverges.
    pub divergent: Vec<Vec<PresAtom>>,
}

impl IntegrationResult {
    fn finish(value: CExp, divergent: Vec<Vec<PresAtom>>) -> Self {
        let value = crate::cexp::merge_pieces(&value);
        let status = if !divergent.is_empty() {
            Status::NonIntegrable
        } else if value.terms.iter().any(|t| !t.sums.is_empty()) {
            Status::PartiallySymbolic
        } else {
            Status::Integrable
        };
        IntegrationResult {
            value,
            status,
            divergent,
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.status != Status::NonIntegrable
    }
}

fn check_sort(e: &CExp, var: &str, want: Sort) -> Result<(), IntegrateError> {
    match e.ctx.get(var) {
        Some(s) if *s != want => Err(IntegrateError::WrongSort(var.to_string(), s.keyword())),
        _ => Ok(()),
    }
}

fn with_pres(mut t: CExpTerm, n: Normalized) -> Option<CExpTerm> {
    match n {
        Normalized::True => Some(t),
        Normalized::False => None,
        Normalized::Atom(a) => {
            t.conds.push(CondAtom::Pres(a));
            Some(t)
        }
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

fn feasible(t: &CExpTerm) -> bool {
    !is_unsat(&pres_atoms(t))
}

/// `gamma_k = ord(u_k) + k j`, `a_k = ac(u_k) eta^k` for each nonzero `u_k`.
fn phase_data(lt: &LocalTerm) -> Vec<(usize, LinForm, RTerm)> {
    let j = LinForm::int_var(&lt.cell.order_var);
    let eta = RTerm::var(&lt.cell.ac_var);
    lt.phase
        .iter()
        .enumerate()
        .filter(|(_, u)| !u.is_zero())
        .map(|(i, u)| {
            let k = i + 1;
            let g = LinForm::ord_of(u)
                .expect("nonzero")
                .add(&j.scale(Rational64::from_integer(k as i64)));
            (k, g, RTerm::ac_of(u).mul(&eta.pow(k as u32)))
        })
        .collect()
}

/// Shell average of `E(sum_k u_k (t - c)^k)` over `ord(t - c) = j`,
/// `ac(t - c) = eta`, as a case split on the orders of the phase terms.
fn average_phase(lt: &LocalTerm) -> Result<Vec<CExpTerm>, IntegrateError> {
    let data = phase_data(lt);
    let ge1 = |g: &LinForm| PresAtom::cmp(g, CmpOp::Ge, &LinForm::constant(1));
    let eq0 = |g: &LinForm| PresAtom::cmp(g, CmpOp::Eq, &LinForm::zero());
    let le_1 = |g: &LinForm| PresAtom::cmp(g, CmpOp::Le, &LinForm::constant(-1));
    let higher_nonneg = |t: &CExpTerm| {
        data.iter()
            .filter(|(k, _, _)| *k >= 2)
            .all(|(_, g, _)| with_pres(t.clone(), le_1(g)).is_none_or(|x| !feasible(&x)))
    };

    let mut branches = vec![lt.term.clone()];
    if let Some((1, g, a)) = data.first() {
        let mut next = Vec::new();
        for b in branches {
            next.extend(with_pres(b.clone(), ge1(g)));
            if let Some(mut x) = with_pres(b.clone(), eq0(g)) {
                x.res_arg = x.res_arg.add(a);
                next.push(x);
            }
            // a nontrivial character on the residue disc integrates to 0
            if let Some(x) = with_pres(b, le_1(g)) {
                if feasible(&x) && !higher_nonneg(&x) {
                    return Err(IntegrateError::UnsupportedIntegrand(format!(
                        "E({}) has competing phase orders",
                        lt.term.exp_arg
                    )));
                }
            }
        }
        branches = next;
    }
    for (k, g, a) in data.iter().filter(|(k, _, _)| *k >= 2) {
        let mut next = Vec::new();
        for b in branches {
            next.extend(with_pres(b.clone(), ge1(g)));
            if let Some(mut x) = with_pres(b.clone(), eq0(g)) {
                x.res_arg = x.res_arg.add(a);
                next.push(x);
            }
            if let Some(x) = with_pres(b, le_1(g)) {
                if feasible(&x) {
                    return Err(IntegrateError::UnsupportedIntegrand(format!(
                        "degree {} phase term below the residue level",
                        k
                    )));
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Sums a normalized term over the integer variable `j`.
fn sum_term(
    t: &CExpTerm,
    j: &str,
    out: &mut Vec<CExpTerm>,
    divergent: &mut Vec<Vec<PresAtom>>,
) -> Result<(), IntegrateError> {
    let pres = pres_atoms(t);
    let others: Vec<CondAtom> = t
        .conds
        .iter()
        .filter(|c| !matches!(c, CondAtom::Pres(_)))
        .cloned()
        .collect();
    let res = sum_series(&SumSpec {
        var: j.to_string(),
        domain: PresCond::conj(pres),
        exponent: t.lexp.clone(),
        s: 0,
    })?;
    for piece in res.pieces {
        let mut x = t.clone();
        x.conds = others.clone();
        x.conds.extend(piece.guard.into_iter().map(CondAtom::Pres));
        x.coeff = &x.coeff * &piece.coeff;
        x.lexp = piece.lexp;
        out.push(x);
    }
    divergent.extend(res.divergent);
    Ok(())
}

fn fresh(e: &CExp, base: &str) -> String {
    let taken = |n: &str| {
        e.ctx.contains_key(n) || e.terms.iter().any(|t| t.res_names().contains(n) || t.mentions_sym(&Sym::int(n)))
    };
    (0..)
        .map(|k| format!("{}{}", base, k))
        .find(|n| !taken(n))
        .expect("fresh name")
}

/// `int e d(var)` with the normalized Haar measure (`vol(O) = 1`).
pub fn integrate_vf(e: &CExp, var: &str) -> Result<IntegrationResult, IntegrateError> {
    check_sort(e, var, Sort::Valued)?;
    let n = rewrite(e);
    let j = fresh(&n, "_j");
    let eta = fresh(&n, "_eta");
    let mut terms = Vec::new();
    let mut divergent = Vec::new();
    for t in &n.terms {
        if !t.mentions_vf(var) {
            // constant in `var` over the whole field
            let g = pres_atoms(t);
            if !is_unsat(&g) {
                divergent.push(g);
            }
            continue;
        }
        for lt in localize(t, var, &j, &eta)? {
            for mut b in average_phase(&lt)? {
                b.lexp = b
                    .lexp
                    .sub(&LinForm::int_var(&j))
                    .add_const(-1);
                b.sums.push(eta.clone());
                b.conds.push(CondAtom::ResNeq(RTerm::var(&eta)));
                for x in normalize_term(&b) {
                    sum_term(&x, &j, &mut terms, &mut divergent)?;
                }
            }
        }
    }
    let mut ctx = n.ctx.clone();
    ctx.remove(var);
    Ok(IntegrationResult::finish(CExp { ctx, terms }, divergent))
}

/// `sum_{var in Z} e`.
pub fn sum_int(e: &CExp, var: &str) -> Result<IntegrationResult, IntegrateError> {
    check_sort(e, var, Sort::Int)?;
    let n = rewrite(e);
    let mut terms = Vec::new();
    let mut divergent = Vec::new();
    for t in &n.terms {
        sum_term(t, var, &mut terms, &mut divergent)?;
    }
    let mut ctx = n.ctx.clone();
    ctx.remove(var);
    Ok(IntegrationResult::finish(CExp { ctx, terms }, divergent))
}

/// `sum_{var in k} e` over the residue field.
pub fn sum_res(e: &CExp, var: &str) -> Result<IntegrationResult, IntegrateError> {
    check_sort(e, var, Sort::Residue)?;
    let mut out = rewrite(e);
    out.ctx.remove(var);
    for t in out.terms.iter_mut() {
        *t = t.freshen_sums(&[var.to_string()].into_iter().collect());
        t.sums.push(var.to_string());
    }
    Ok(IntegrationResult::finish(out, vec![]))
}

/// Eliminates `vars` in order, dispatching on their declared sort.
pub fn integrate_all(e: &CExp, vars: &[String]) -> Result<IntegrationResult, IntegrateError> {
    let mut cur = IntegrationResult::finish(rewrite(e), vec![]);
    for v in vars {
        let step = match e.ctx.get(v).copied().unwrap_or(Sort::Valued) {
            Sort::Valued => integrate_vf(&cur.value, v)?,
            Sort::Residue => sum_res(&cur.value, v)?,
            Sort::Int => sum_int(&cur.value, v)?,
        };
        let mut divergent = cur.divergent;
        divergent.extend(step.divergent);
        cur = IntegrationResult::finish(step.value, divergent);
    }
    Ok(cur)
}

/// `int_{ord z = j, ac z = a} E(u z + w) dz`; `ac` is unconstrained when
/// `None`.
pub fn model_integral(
    j: &LinForm,
    ac: Option<&RTerm>,
    u: &VTerm,
    w: &VTerm,
) -> Result<CExp, IntegrateError> {
    let z = "_z";
    let mut t = CExpTerm::one();
    if let Normalized::Atom(a) = PresAtom::cmp(&LinForm::ord_var(z), CmpOp::Eq, j) {
        t.conds.push(CondAtom::Pres(a));
    }
    if let Some(a) = ac {
        t.conds.push(CondAtom::ResEq(RTerm::ac_of(&VTerm::var(z)).sub(a)));
    }
    t.exp_arg = u.mul(&VTerm::var(z)).add(w);
    let mut e = CExp::from_term(t).declare(z, Sort::Valued);
    for s in j.symbols() {
        if let Sym::Int(n) = s {
            e = e.declare(&n, Sort::Int);
        }
    }
    for v in u.vars().into_iter().chain(w.vars()) {
        e = e.declare(&v, Sort::Valued);
    }
    Ok(integrate_vf(&e, z)?.value)
}

/// Pulls `e` back along `t = u * s + b` and multiplies by the Jacobian
/// `L^(-ord u)`, so that `int e dt = int result ds`.
pub fn change_of_variables_affine(
    e: &CExp,
    t: &str,
    s: &str,
    u: &VTerm,
    b: &VTerm,
) -> Result<CExp, IntegrateError> {
    let ou = LinForm::ord_of(u).ok_or_else(|| IntegrateError::ZeroScale(u.to_string()))?;
    let by = u.mul(&VTerm::var(s)).add(b);
    let pulled = crate::cexp::substitute(e, t, &by)
        .map_err(|x| IntegrateError::UnsupportedIntegrand(x.to_string()))?;
    Ok(pulled.mul_lpow(&ou.neg()))
}

/// Integral over a bounded region as an exact element of the value ring,
/// when the result is a constant.
pub fn constant_value(r: &IntegrationResult) -> Option<LRat> {
    if r.status != Status::Integrable {
        return None;
    }
    let mut acc = LRat::zero();
    for t in &r.value.terms {
        if !t.conds.is_empty() || !t.exp_arg.is_zero() || !t.res_arg.is_zero() {
            return None;
        }
        let k = t.lexp.as_integer()?;
        acc = &acc + &(&t.coeff * &LRat::l_pow(k));
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cexp::parse;

    fn int1(src: &str, var: &str) -> IntegrationResult {
        integrate_vf(&parse(src).unwrap(), var).unwrap()
    }

    #[test]
    fn unit_ball() {
        let r = int1("vf t; [ord(t) >= 0]", "t");
        assert_eq!(constant_value(&r), Some(LRat::one()));
    }

    #[test]
    fn character_on_balls() {
        assert!(int1("vf t; [ord(t) >= 0] * E(t)", "t").value.is_zero());
        let r = int1("vf t; [ord(t) >= 1] * E(t)", "t");
        assert_eq!(constant_value(&r), Some(LRat::l_pow(-1)));
    }

    #[test]
    fn units_sphere() {
        let r = int1("vf t; [ord(t) == 0] * E(t)", "t");
        assert_eq!(constant_value(&r), Some(-LRat::l_pow(-1)));
    }

    #[test]
    fn model_integrals() {
        let one = VTerm::int(1);
        let zero = VTerm::zero();
        let xi = RTerm::var("xi");
        let m = model_integral(&LinForm::zero(), None, &one, &zero).unwrap();
        assert_eq!(m.body_string(), "(-L^-1)");
        let m = model_integral(&LinForm::constant(-3), Some(&xi), &one, &zero).unwrap();
        assert!(m.is_zero());
        let m = model_integral(&LinForm::constant(2), None, &zero, &zero).unwrap();
        let want = &(&LRat::l_pow(1) - &LRat::one()) * &LRat::l_pow(-3);
        assert_eq!(m.terms, CExp::constant(want).terms);
        let m = model_integral(&LinForm::zero(), Some(&xi), &one, &zero).unwrap();
        assert_eq!(m.body_string(), "L^-1 * [xi != 0] * e(xi)");
    }

    #[test]
    fn residue_sums() {
        let r = sum_res(&parse("res a; e(a)").unwrap(), "a").unwrap();
        assert!(r.value.is_zero());
        let r = sum_res(&parse("res a, x; e(x * a)").unwrap(), "a").unwrap();
        assert_eq!(r.value.body_string(), "L * [x == 0]");
        let r = sum_res(&parse("res a; [a != 0] * e(a)").unwrap(), "a").unwrap();
        assert_eq!(constant_value(&r), Some(-LRat::one()));
    }

    #[test]
    fn fubini_on_product_kernel() {
        let e = parse("vf x, y; [ord(x) >= 0] * [ord(y) >= 0] * E(x * y)").unwrap();
        let a = integrate_all(&e, &["x".into(), "y".into()]).unwrap();
        let b = integrate_all(&e, &["y".into(), "x".into()]).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(constant_value(&a), Some(LRat::l_pow(-1)));
    }

    #[test]
    fn angular_fibers_recombine() {
        let e = parse("vf x; res a; [ord(x) == 0] * [ac(x) == a] * E(x)").unwrap();
        let r = integrate_all(&e, &["x".into(), "a".into()]).unwrap();
        assert_eq!(constant_value(&r), Some(-LRat::l_pow(-1)));
    }

    #[test]
    fn divergent_shells() {
        let r = int1("vf t; [ord(t) >= 1] * L^(ord(t))", "t");
        assert_eq!(r.status, Status::NonIntegrable);
    }

    #[test]
    fn mixed_integer_sum() {
        let e = parse("vf x; int j; [ord(x) == j] * [j >= 0] * [j <= 2]").unwrap();
        let r = integrate_all(&e, &["x".into(), "j".into()]).unwrap();
        let want = &LRat::one() - &LRat::l_pow(-3);
        assert_eq!(constant_value(&r), Some(want));
    }

    #[test]
    fn fourier_kernel_parametric() {
        let r = int1("vf x, y; [ord(y) >= 0] * E(x * y)", "y");
        for k in -3..4 {
            let at = PresAtom::cmp(&LinForm::ord_var("x"), CmpOp::Eq, &LinForm::constant(k));
            let Normalized::Atom(at) = at else { unreachable!() };
            let v = r.value.with_cond(CondAtom::Pres(at));
            let want = if k >= 1 { "[ord(x) == 0]" } else { "0" };
            let got = v.body_string();
            assert_eq!(got == "0", want == "0", "ord x = {}: {}", k, got);
        }
    }

    #[test]
    fn two_centers() {
        // vol{ord t >= 0, ord(t - 1) >= 1} = L^-1
        let r = int1("vf t; [ord(t) >= 0] * [ord(t - 1) >= 1]", "t");
        assert_eq!(constant_value(&r), Some(LRat::l_pow(-1)));
        let r = int1("vf t; [ord(t) >= 0] * [ord(t - 1) == 0]", "t");
        assert_eq!(constant_value(&r), Some(&LRat::one() - &LRat::l_pow(-1)));
    }

    #[test]
    fn change_of_variables() {
        let e = parse("vf t; [ord(t) >= 0]").unwrap();
        let c = change_of_variables_affine(&e, "t", "s", &VTerm::uniformizer(1), &VTerm::zero())
            .unwrap();
        let r = integrate_vf(&c, "s").unwrap();
        assert_eq!(constant_value(&r), Some(LRat::one()));
    }

    #[test]
    fn residue_sum() {
        let e = parse("res a; [a != 0]").unwrap();
        let r = sum_res(&e, "a").unwrap();
        let want = &LRat::l_pow(1) - &LRat::one();
        assert_eq!(constant_value(&r), Some(want));
    }
}
