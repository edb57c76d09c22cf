//! Fourier transforms over the valued field and the residue field,
//! convolution, and the standard families of balls and shells.

use thiserror::Error;

use crate::cexp::{self, CExp, CExpTerm, CondAtom, RAtom, RTerm, Sort};
use crate::equiv::compare;
use crate::integrate::{integrate_all, IntegrateError, Status};
use crate::lring::LRat;
use crate::presburger::{CmpOp, LinForm, Normalized, PresAtom, Sym};
use crate::vterm::VTerm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FourierError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("integral diverges on part of the parameter space")]
    NonIntegrable,
    #[error("angular component {0} must be nowhere zero")]
    ZeroAngular(usize),
    #[error("expected {expected} angular components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("`{0}` is not a {1} variable")]
    WrongSort(String, &'static str),
}

fn declare_params(mut e: CExp, alpha: &LinForm) -> CExp {
    for s in alpha.symbols() {
        match s {
            Sym::Int(n) => e = e.declare(&n, Sort::Int),
            Sym::Ord(v) => {
                for x in v.vars() {
                    e = e.declare(&x, Sort::Valued);
                }
            }
        }
    }
    e
}

fn ord_cond(x: &str, op: CmpOp, alpha: &LinForm) -> Option<CondAtom> {
    match PresAtom::cmp(&LinForm::ord_var(x), op, alpha) {
        Normalized::Atom(a) => Some(CondAtom::Pres(a)),
        Normalized::True => None,
        Normalized::False => Some(CondAtom::ResNeq(RTerm::zero())),
    }
}

fn family(vars: &[String], alpha: &LinForm, op: CmpOp) -> CExp {
    let mut t = CExpTerm::one();
    t.conds.extend(vars.iter().filter_map(|x| ord_cond(x, op, alpha)));
    let mut e = CExp::from_term(t);
    for x in vars {
        e = e.declare(x, Sort::Valued);
    }
    cexp::rewrite(&declare_params(e, alpha))
}

/// `phi_alpha`: indicator of `ord(x_i) >= alpha` for all `i`.
pub fn phi(vars: &[String], alpha: &LinForm) -> CExp {
    family(vars, alpha, CmpOp::Ge)
}

/// `psi_alpha`: indicator of `ord(x_i) = alpha` for all `i`.
pub fn psi(vars: &[String], alpha: &LinForm) -> CExp {
    family(vars, alpha, CmpOp::Eq)
}

/// `psi_{alpha, xi}`: `ord(x_i) = alpha` and `ac(x_i) = xi_i`.
pub fn psi_ac(vars: &[String], alpha: &LinForm, xi: &[RTerm]) -> Result<CExp, FourierError> {
    if xi.len() != vars.len() {
        return Err(FourierError::Dimension {
            expected: vars.len(),
            got: xi.len(),
        });
    }
    if let Some(i) = xi.iter().position(|r| r.is_zero()) {
        return Err(FourierError::ZeroAngular(i));
    }
    let mut e = psi(vars, alpha);
    for (x, r) in vars.iter().zip(xi) {
        let ac = RTerm::ac_of(&VTerm::var(x));
        e = e.with_cond(CondAtom::ResEq(ac.sub(r)));
        for n in r.vars() {
            e = e.declare(&n, Sort::Residue);
        }
    }
    Ok(e)
}

fn taken(e: &CExp, n: &str) -> bool {
    e.ctx.contains_key(n) || e.terms.iter().any(|t| t.mentions_vf(n) || t.res_names().contains(n))
}

fn fresh_names(e: &CExp, base: &str, k: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < k {
        let n = format!("{}{}", base, i);
        if !taken(e, &n) {
            out.push(n);
        }
        i += 1;
    }
    out
}

fn check_sort(e: &CExp, vars: &[String], want: Sort) -> Result<(), FourierError> {
    for v in vars {
        if let Some(s) = e.ctx.get(v) {
            if *s != want {
                return Err(FourierError::WrongSort(v.clone(), want.keyword()));
            }
        }
    }
    Ok(())
}

fn finish(r: crate::integrate::IntegrationResult) -> Result<CExp, FourierError> {
    if r.status == Status::NonIntegrable {
        return Err(FourierError::NonIntegrable);
    }
    Ok(r.value)
}

/// `F(e)(x) = int e(y) E(sum x_i y_i) dy`, in the same variable names.
pub fn fourier_vf(e: &CExp, vars: &[String]) -> Result<CExp, FourierError> {
    check_sort(e, vars, Sort::Valued)?;
    let ys = fresh_names(e, "_y", vars.len());
    let mut body = e.clone();
    let mut kernel = VTerm::zero();
    for (x, y) in vars.iter().zip(&ys) {
        body = cexp::substitute_unchecked(&body, x, &VTerm::var(y));
        kernel = kernel.add(&VTerm::var(x).mul(&VTerm::var(y)));
    }
    let mut k = CExpTerm::one();
    k.exp_arg = kernel;
    let mut kexp = CExp::from_term(k);
    for v in vars.iter().chain(&ys) {
        kexp = kexp.declare(v, Sort::Valued);
    }
    finish(integrate_all(&body.mul(&kexp), &ys)?)
}

/// `f(e)(xi) = sum_eta e(eta) e(sum xi_i eta_i)` over the residue field.
pub fn fourier_res(e: &CExp, vars: &[String]) -> Result<CExp, FourierError> {
    check_sort(e, vars, Sort::Residue)?;
    let ys = fresh_names(e, "_r", vars.len());
    let mut body = e.clone();
    let mut kernel = RTerm::zero();
    for (x, y) in vars.iter().zip(&ys) {
        body = cexp::substitute_res(&body, x, &RTerm::var(y));
        body.ctx.remove(x);
        body = body.declare(y, Sort::Residue);
        kernel = kernel.add(&RTerm::var(x).mul(&RTerm::var(y)));
    }
    let mut k = CExpTerm::one();
    k.res_arg = kernel;
    let mut kexp = CExp::from_term(k);
    for v in vars.iter().chain(&ys) {
        kexp = kexp.declare(v, Sort::Residue);
    }
    finish(integrate_all(&body.mul(&kexp), &ys)?)
}

/// `(f * g)(x) = int f(x - z) g(z) dz`.
pub fn convolve(f: &CExp, g: &CExp, vars: &[String]) -> Result<CExp, FourierError> {
    check_sort(f, vars, Sort::Valued)?;
    check_sort(g, vars, Sort::Valued)?;
    let both = f.add(g);
    let zs = fresh_names(&both, "_z", vars.len());
    let mut a = f.clone();
    let mut b = g.clone();
    for (x, z) in vars.iter().zip(&zs) {
        let diff = VTerm::var(x).sub(&VTerm::var(z));
        a = cexp::substitute_unchecked(&a, x, &diff);
        b = cexp::substitute_unchecked(&b, x, &VTerm::var(z));
    }
    finish(integrate_all(&a.mul(&b), &zs)?)
}

/// `x -> -x` on the valued variables.
pub fn reflect_vf(e: &CExp, vars: &[String]) -> CExp {
    cexp::reflect(e, vars)
}

/// `xi -> -xi` on the residue variables.
pub fn reflect_res(e: &CExp, vars: &[String]) -> CExp {
    let mut out = e.clone();
    for v in vars {
        out = cexp::substitute_res(&out, v, &RTerm::atom(RAtom::Var(v.clone())).neg());
    }
    out
}

/// Both Schwartz-Bruhat identities `e * phi_{-a0} = e` and
/// `e conv phi_{a0} = L^{-a0 d} e`, decided exactly.
pub fn is_schwartz_bruhat(e: &CExp, vars: &[String], alpha0: i64) -> bool {
    let d = vars.len() as i64;
    let support = e.mul(&phi(vars, &LinForm::constant(-alpha0)));
    if !compare(&support, e).is_exact() {
        return false;
    }
    let Ok(c) = convolve(e, &phi(vars, &LinForm::constant(alpha0)), vars) else {
        return false;
    };
    compare(&c, &e.scale(&LRat::l_pow(-alpha0 * d))).is_exact()
}
