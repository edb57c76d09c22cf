use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

use super::{is_power_residue, CharacterSpec, LocalError, LocalField, Value};
use crate::cexp::{CExp, CExpTerm, CondAtom, RAtom};
use crate::presburger::{CmpOp, Ext, LinForm, PresAtom, Sym};
use crate::vterm::VTerm;

/// An element known modulo `w^prec`; `prec = None` means exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approx {
    pub val: Value,
    pub prec: Option<i64>,
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

impl Approx {
    pub fn exact(val: Value) -> Self {
        Approx { val, prec: None }
    }

    /// A lower bound for the order; `None` for an exact zero.
    fn ord_lb(&self, k: &LocalField) -> Option<i64> {
        match k.ord_ac(&self.val) {
            Some((o, _)) => Some(self.prec.map_or(o, |p| p.min(o))),
            None => self.prec,
        }
    }

    fn add(&self, o: &Approx, k: &LocalField) -> Result<Approx, LocalError> {
        Ok(Approx {
            val: k.add(&self.val, &o.val)?,
            prec: min_prec(self.prec, o.prec),
        })
    }

    fn mul(&self, o: &Approx, k: &LocalField) -> Result<Approx, LocalError> {
        let val = k.mul(&self.val, &o.val)?;
        let (la, lb) = (self.ord_lb(k), o.ord_lb(k));
        if (self.prec.is_none() && la.is_none()) || (o.prec.is_none() && lb.is_none()) {
            return Ok(Approx::exact(k.zero()));
        }
        let from_a = self.prec.map(|p| p + lb.expect("nonzero"));
        let from_b = o.prec.map(|p| p + la.expect("nonzero"));
        Ok(Approx {
            val,
            prec: min_prec(from_a, from_b),
        })
    }

    /// `(ord, ac)` if determined at this precision, `None` for exact zero.
    pub fn ord_ac(&self, k: &LocalField) -> Result<Option<(i64, u64)>, LocalError> {
        match (k.ord_ac(&self.val), self.prec) {
            (Some((o, a)), Some(p)) if o < p => Ok(Some((o, a))),
            (Some(oa), None) => Ok(Some(oa)),
            (None, None) => Ok(None),
            (lead, Some(p)) => Err(LocalError::InsufficientPrecision {
                have: p,
                need: lead.map_or(p + 1, |(o, _)| o + 1),
            }),
        }
    }
}

/// Values of the free variables of an expression.
#[derive(Clone, Debug, Default)]
pub struct Point {
    pub vf: BTreeMap<String, Approx>,
    pub res: BTreeMap<String, u64>,
    pub int: BTreeMap<String, i64>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vf(mut self, name: &str, x: Approx) -> Self {
        self.vf.insert(name.to_string(), x);
        self
    }

    pub fn with_res(mut self, name: &str, r: u64) -> Self {
        self.res.insert(name.to_string(), r);
        self
    }

    pub fn with_int(mut self, name: &str, n: i64) -> Self {
        self.int.insert(name.to_string(), n);
        self
    }
}

struct Eval<'a> {
    k: &'a LocalField,
    point: &'a Point,
    vcache: RefCell<BTreeMap<VTerm, Approx>>,
}

impl<'a> Eval<'a> {
    fn vterm(&self, v: &VTerm) -> Result<Approx, LocalError> {
        if let Some(a) = self.vcache.borrow().get(v) {
            return Ok(a.clone());
        }
        let k = self.k;
        let mut acc = Approx::exact(k.zero());
        for (m, c) in v.terms() {
            let mut t = Approx::exact(k.mul(&k.from_rational(c)?, &k.uniformizer_pow(m.w)?)?);
            for (x, e) in &m.vars {
                let xv = self
                    .point
                    .vf
                    .get(x)
                    .ok_or_else(|| LocalError::Unbound(x.clone()))?;
                for _ in 0..*e {
                    t = t.mul(xv, k)?;
                }
            }
            acc = acc.add(&t, k)?;
        }
        self.vcache.borrow_mut().insert(v.clone(), acc.clone());
        Ok(acc)
    }

    fn ord(&self, v: &VTerm) -> Result<Option<i64>, LocalError> {
        Ok(self.vterm(v)?.ord_ac(self.k)?.map(|(o, _)| o))
    }

    fn ac(&self, v: &VTerm) -> Result<u64, LocalError> {
        Ok(self.vterm(v)?.ord_ac(self.k)?.map_or(0, |(_, a)| a))
    }

    fn sym(&self, s: &Sym, err: &RefCell<Option<LocalError>>) -> Option<i64> {
        let got = match s {
            Sym::Int(n) => self
                .point
                .int
                .get(n)
                .copied()
                .ok_or_else(|| LocalError::Unbound(n.clone())),
            Sym::Ord(v) => self.ord(v).and_then(|o| o.ok_or(LocalError::ZeroAtPrecision)),
        };
        match got {
            Ok(x) => Some(x),
            // ord of an exact zero is +inf
            Err(LocalError::ZeroAtPrecision) => None,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                Some(0)
            }
        }
    }

    fn lin(&self, l: &LinForm) -> Result<Ext, LocalError> {
        let err = RefCell::new(None);
        let r = l.eval(&mut |s| self.sym(s, &err));
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        r.map_err(|()| LocalError::Unsupported(format!("{} is undefined at a zero", l)))
    }

    fn pres(&self, a: &PresAtom) -> Result<bool, LocalError> {
        let err = RefCell::new(None);
        let r = a.eval(&mut |s| self.sym(s, &err));
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(r),
        }
    }

    fn res(&self, r: &crate::cexp::RTerm, sums: &BTreeMap<&str, u64>) -> Result<u64, LocalError> {
        let mut err = None;
        let out = r.eval_mod(self.k.p, &mut |a| {
            let got = match a {
                RAtom::Var(n) => sums
                    .get(n.as_str())
                    .or_else(|| self.point.res.get(n))
                    .copied()
                    .ok_or_else(|| LocalError::Unbound(n.clone())),
                RAtom::Ac(v) => self.ac(v),
            };
            got.map_err(|e| err = Some(e)).ok()
        });
        if let Some(e) = err {
            return Err(e);
        }
        out.ok_or_else(|| LocalError::NonIntegralConstant(r.to_string()))
    }

    /// Conditions that do not depend on residue values.
    fn static_cond(&self, c: &CondAtom) -> Result<Option<bool>, LocalError> {
        Ok(Some(match c {
            CondAtom::Pres(a) => self.pres(a)?,
            CondAtom::OrdCmp { v, op, rhs } => {
                let lhs = match self.ord(v)? {
                    Some(o) => Ext::Fin(Rational64::from_integer(o)),
                    None => Ext::PosInf,
                };
                compare(lhs, *op, self.lin(rhs)?)
            }
            CondAtom::CosetIn { v, lambda, m } => {
                if *m as u64 % self.k.p == 0 {
                    return Err(LocalError::Unsupported(format!(
                        "coset condition with p | {}",
                        m
                    )));
                }
                let (x, l) = (self.vterm(v)?.ord_ac(self.k)?, self.vterm(lambda)?.ord_ac(self.k)?);
                match (x, l) {
                    (Some((ox, ax)), Some((ol, al))) => {
                        let p = self.k.p as i128;
                        let q = (ax as i128 * mod_inv_p(al as i128, p)) % p;
                        (ox - ol).mod_floor(&(*m as i64)) == 0 && is_power_residue(self.k.p, q as u64, *m)
                    }
                    _ => false,
                }
            }
            _ => return Ok(None),
        }))
    }

    fn res_cond(&self, c: &CondAtom, sums: &BTreeMap<&str, u64>) -> Result<bool, LocalError> {
        Ok(match c {
            CondAtom::ResEq(r) => self.res(r, sums)? == 0,
            CondAtom::ResNeq(r) => self.res(r, sums)? != 0,
            CondAtom::AcEq { v, r } => self.ac(v)? == self.res(r, sums)?,
            CondAtom::AcNeq { v, r } => self.ac(v)? != self.res(r, sums)?,
            CondAtom::PowRes { r, m } => is_power_residue(self.k.p, self.res(r, sums)?, *m),
            _ => unreachable!("static condition"),
        })
    }
}

fn mod_inv_p(a: i128, p: i128) -> i128 {
    a.extended_gcd(&p).x.mod_floor(&p)
}

fn compare(l: Ext, op: CmpOp, r: Ext) -> bool {
    let key = |e: Ext| match e {
        Ext::NegInf => (0, Rational64::zero()),
        Ext::Fin(x) => (1, x),
        Ext::PosInf => (2, Rational64::zero()),
    };
    let (a, b) = (key(l), key(r));
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Le => a <= b,
        CmpOp::Lt => a < b,
        CmpOp::Ge => a >= b,
        CmpOp::Gt => a > b,
    }
}

/// Contribution of one term before its scalar weight: the satisfied
/// residue-sum assignments with their residue phases, and the valued
/// character argument.
struct TermShape {
    phases: Vec<u64>,
    exp: Option<Approx>,
    lexp: Rational64,
}

fn shape(ev: &Eval, t: &CExpTerm) -> Result<Option<TermShape>, LocalError> {
    let mut dynamic = Vec::new();
    for c in &t.conds {
        match ev.static_cond(c)? {
            Some(false) => return Ok(None),
            Some(true) => {}
            None => dynamic.push(c),
        }
    }
    let lexp = match ev.lin(&t.lexp)? {
        Ext::Fin(x) => x,
        _ => return Err(LocalError::Unsupported(format!("L^({}) at an infinite order", t.lexp))),
    };
    let p = ev.k.p;
    let n = t.sums.len() as u32;
    let total = p
        .checked_pow(n)
        .filter(|x| *x <= 10_000_000)
        .ok_or_else(|| LocalError::Unsupported("too many residue sums".into()))?;
    let mut phases = Vec::new();
    let mut asg: BTreeMap<&str, u64> = t.sums.iter().map(|s| (s.as_str(), 0)).collect();
    'outer: for idx in 0..total {
        let mut k = idx;
        for s in &t.sums {
            asg.insert(s.as_str(), k % p);
            k /= p;
        }
        for c in &dynamic {
            if !ev.res_cond(c, &asg)? {
                continue 'outer;
            }
        }
        phases.push(ev.res(&t.res_arg, &asg)?);
    }
    let exp = if t.exp_arg.is_zero() {
        None
    } else {
        Some(ev.vterm(&t.exp_arg)?)
    };
    Ok(Some(TermShape { phases, exp, lexp }))
}

fn evaluator<'a>(k: &'a LocalField, point: &'a Point) -> Eval<'a> {
    Eval {
        k,
        point,
        vcache: RefCell::new(BTreeMap::new()),
    }
}

/// Value of `e` at `point` in the field of `ch` with character `ch`.
pub fn interpret(e: &CExp, ch: &CharacterSpec, point: &Point) -> Result<Complex64, LocalError> {
    let k = &ch.field;
    let ev = evaluator(k, point);
    let q = k.p as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for t in &e.terms {
        let Some(s) = shape(&ev, t)? else { continue };
        if s.phases.is_empty() {
            continue;
        }
        let mut inner: Complex64 = s
            .phases
            .iter()
            .map(|r| Complex64::from_polar(1.0, TAU * *r as f64 / q))
            .sum();
        if let Some(x) = &s.exp {
            if let Some(have) = x.prec {
                if have < 1 {
                    return Err(LocalError::InsufficientPrecision { have, need: 1 });
                }
            }
            inner *= ch.eval(&x.val)?;
        }
        let w = t.coeff.to_f64(q) * q.powf(s.lexp.to_f64().expect("finite"));
        acc += inner * w;
    }
    Ok(acc)
}

/// Exact value of a character-free expression at `point`; `None` if some
/// contributing term carries a nontrivial character.
pub fn interpret_exact(
    e: &CExp,
    k: &LocalField,
    point: &Point,
) -> Result<Option<BigRational>, LocalError> {
    let ev = evaluator(k, point);
    let q = BigRational::from_integer(BigInt::from(k.p));
    let mut acc = BigRational::zero();
    for t in &e.terms {
        let Some(s) = shape(&ev, t)? else { continue };
        if s.phases.is_empty() {
            continue;
        }
        if s.exp.is_some() || s.phases.iter().any(|r| *r != 0) {
            return Ok(None);
        }
        if !s.lexp.is_integer() {
            return Ok(None);
        }
        let w = t.coeff.specialize_exact(&q) * crate::scalar::Scalar::powi(&q, s.lexp.to_integer());
        acc += w * BigRational::from_integer(BigInt::from(s.phases.len()));
    }
    Ok(Some(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cexp::parse;
    use crate::localfield::{residue_char, PadicElement};

    fn q5() -> LocalField {
        LocalField::qp(5).unwrap()
    }

    fn at(k: &LocalField, lit: &str) -> Approx {
        PadicElement::parse(lit).unwrap().to_approx(k).unwrap()
    }

    #[test]
    fn shell_character() {
        let k = q5();
        let e = parse("vf x; [ord(x) == 0] * E(x)").unwrap();
        let pt = Point::new().with_vf("x", at(&k, "5adic: v=0 digits=[2,0]"));
        let z = interpret(&e, &CharacterSpec::canonical(k), &pt).unwrap();
        assert!((z - residue_char(5, 2)).norm() < 1e-12);
    }

    #[test]
    fn constants_and_residue_sums() {
        let k = q5();
        let z = interpret(&parse("-L^(-1)").unwrap(), &CharacterSpec::canonical(k), &Point::new()).unwrap();
        assert!((z - Complex64::new(-0.2, 0.0)).norm() < 1e-12);
        let k3 = LocalField::qp(3).unwrap();
        let e = parse("vf x; sum eta : e(eta * ac(x)) * [eta != 0]").unwrap();
        let pt = Point::new().with_vf("x", at(&k3, "3adic: v=0 digits=[1]"));
        let z = interpret(&e, &CharacterSpec::canonical(k3), &pt).unwrap();
        assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn precision_is_checked() {
        let k = q5();
        let e = parse("vf x; [ord(x) >= 1]").unwrap();
        let zero = Point::new().with_vf("x", at(&k, "5adic: v=0 digits=[0]"));
        assert!(matches!(
            interpret(&e, &CharacterSpec::canonical(k), &zero),
            Err(LocalError::InsufficientPrecision { .. })
        ));
        let low = parse("vf x; E(x)").unwrap();
        let coarse = Point::new().with_vf("x", at(&k, "5adic: v=-1 digits=[1]"));
        assert!(matches!(
            interpret(&low, &CharacterSpec::canonical(k), &coarse),
            Err(LocalError::InsufficientPrecision { have: 0, need: 1 })
        ));
    }

    #[test]
    fn exact_path() {
        let k = LocalField::qp(7).unwrap();
        let e = parse("vf x; L^(-1) * [ord(x) >= 1] + sum a : [a != 0]").unwrap();
        let pt = Point::new().with_vf("x", at(&k, "7adic: v=2 digits=[1]"));
        let v = interpret_exact(&e, &k, &pt).unwrap().unwrap();
        assert_eq!(v, BigRational::new(43.into(), 7.into()));
        let with_char = parse("vf x; E(x)").unwrap();
        assert_eq!(interpret_exact(&with_char, &k, &pt).unwrap(), None);
    }

    #[test]
    fn laurent_points() {
        let k = LocalField::fpt(5).unwrap();
        let e = parse("vf x; [ord(x) == -1] * E(x)").unwrap();
        let pt = Point::new().with_vf("x", at(&k, "5laurent: v=-1 digits=[2,1]"));
        let z = interpret(&e, &CharacterSpec::canonical(k), &pt).unwrap();
        assert!((z - residue_char(5, 3)).norm() < 1e-12);
    }
}
