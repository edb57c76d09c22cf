//! Brute-force evaluation over truncated local fields.
//!
//! Integrals are sums over coset representatives
//! `x = sum_{i < D} a_i w^(v_min + i)`, each standing for the coset
//! `x + w^(v_min + D) R` of volume `p^-(v_min + D)`. The sum is exact once
//! the integrand is constant on those cosets; the value at depth `D + 1`
//! is reported alongside as a certificate.
//!
//! Enumeration is split into fixed-size chunks summed in parallel and the
//! partial sums are combined in chunk order, so results do not depend on
//! the thread count.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cexp::CExp;
use crate::cexp::CondAtom;
use crate::localfield::{
    interpret, interpret_exact, Approx, CharacterSpec, FieldKind, LocalError, LocalField, PadicElement, Point,
    Value,
};
use crate::presburger::{implies, CmpOp, LinForm, Normalized, PresAtom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error("enumeration of {0} points exceeds the cap")]
    TooLarge(u128),
    #[error("no Hensel exponent for m = {m} over p = {p} within the search cap")]
    HenselCapExceeded { p: u64, m: u32 },
    #[error("bad box `{0}`")]
    BadBox(String),
}

const POINT_CAP: u128 = 50_000_000;
const CHUNK: u64 = 4096;

/// Region of integration: valued variables over `ord >= v_min`, integer
/// variables over closed ranges, residue variables over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegrationBox {
    pub vf: Vec<(String, i64)>,
    pub depth: u32,
    pub int: Vec<(String, i64, i64)>,
    pub res: Vec<String>,
}

impl IntegrationBox {
    pub fn new(depth: u32) -> Self {
        IntegrationBox {
            vf: Vec::new(),
            depth,
            int: Vec::new(),
            res: Vec::new(),
        }
    }

    pub fn vf(mut self, name: &str, v_min: i64) -> Self {
        self.vf.push((name.to_string(), v_min));
        self
    }

    pub fn int(mut self, name: &str, lo: i64, hi: i64) -> Self {
        self.int.push((name.to_string(), lo, hi));
        self
    }

    pub fn res(mut self, name: &str) -> Self {
        self.res.push(name.to_string());
        self
    }

    /// `x: vmin=-2; n: -3..3; a: res`.
    pub fn parse(s: &str, depth: u32) -> Result<Self, OracleError> {
        let mut b = IntegrationBox::new(depth);
        let bad = || OracleError::BadBox(s.to_string());
        for part in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
            let (name, spec) = part.split_once(':').ok_or_else(bad)?;
            let (name, spec) = (name.trim(), spec.trim());
            if let Some(v) = spec.strip_prefix("vmin=") {
                b = b.vf(name, v.trim().parse().map_err(|_| bad())?);
            } else if let Some((lo, hi)) = spec.split_once("..") {
                b = b.int(
                    name,
                    lo.trim().parse().map_err(|_| bad())?,
                    hi.trim().parse().map_err(|_| bad())?,
                );
            } else if spec == "res" {
                b = b.res(name);
            } else {
                return Err(bad());
            }
        }
        Ok(b)
    }

    fn sizes(&self, p: u64, depth: u32) -> Result<Vec<u64>, OracleError> {
        let mut out = Vec::new();
        for _ in &self.vf {
            out.push(p.checked_pow(depth).ok_or(OracleError::TooLarge(u128::MAX))?);
        }
        for (_, lo, hi) in &self.int {
            out.push((hi - lo + 1).max(0) as u64);
        }
        for _ in &self.res {
            out.push(p);
        }
        let total: u128 = out.iter().map(|x| *x as u128).product();
        if total > POINT_CAP {
            return Err(OracleError::TooLarge(total));
        }
        Ok(out)
    }

    /// Whether every term's conditions confine each valued variable to the
    /// box and each integer variable to its range.
    pub fn covers_support(&self, e: &CExp) -> bool {
        e.terms.iter().all(|t| {
            let prem: Vec<PresAtom> = t
                .conds
                .iter()
                .filter_map(|c| match c {
                    CondAtom::Pres(a) => Some(a.clone()),
                    _ => None,
                })
                .collect();
            let holds = |n: Normalized| match n {
                Normalized::True => true,
                Normalized::False => false,
                Normalized::Atom(g) => implies(&prem, &g),
            };
            self.vf.iter().all(|(x, v)| {
                holds(PresAtom::cmp(&LinForm::ord_var(x), CmpOp::Ge, &LinForm::constant(*v)))
            }) && self.int.iter().all(|(n, lo, hi)| {
                holds(PresAtom::cmp(&LinForm::int_var(n), CmpOp::Ge, &LinForm::constant(*lo)))
                    && holds(PresAtom::cmp(&LinForm::int_var(n), CmpOp::Le, &LinForm::constant(*hi)))
            })
        })
    }
}

/// Integral value at depth `D` with the change seen at `D + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: Complex64,
    pub refinement_delta: f64,
    pub truncated: bool,
}

impl OracleResult {
    /// Stable under refinement and with certified support.
    pub fn is_clean(&self) -> bool {
        self.refinement_delta <= 1e-9 && !self.truncated
    }
}

pub fn complex_pair<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl Serialize for OracleResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            value: [f64; 2],
            delta: f64,
            truncated: bool,
        }
        Row {
            value: [self.value.re, self.value.im],
            delta: self.refinement_delta,
            truncated: self.truncated,
        }
        .serialize(s)
    }
}

/// Digits of `idx` in base `p`, least significant first.
fn digits(mut idx: u64, p: u64, n: u32) -> Vec<u64> {
    (0..n)
        .map(|_| {
            let d = idx % p;
            idx /= p;
            d
        })
        .collect()
}

struct Grid<'a> {
    k: &'a LocalField,
    bx: &'a IntegrationBox,
    params: &'a Point,
    depth: u32,
    sizes: Vec<u64>,
}

impl<'a> Grid<'a> {
    fn new(k: &'a LocalField, bx: &'a IntegrationBox, params: &'a Point, depth: u32) -> Result<Self, OracleError> {
        Ok(Grid {
            k,
            bx,
            params,
            depth,
            sizes: bx.sizes(k.p, depth)?,
        })
    }

    fn total(&self) -> u64 {
        self.sizes.iter().product()
    }

    fn point(&self, mut idx: u64) -> Result<Point, OracleError> {
        let mut pt = self.params.clone();
        let mut it = self.sizes.iter();
        for (x, v) in &self.bx.vf {
            let n = it.next().expect("size per variable");
            let val = self.k.from_digits(*v, &digits(idx % n, self.k.p, self.depth))?;
            pt.vf.insert(x.clone(), Approx::exact(val));
            idx /= n;
        }
        for (name, lo, _) in &self.bx.int {
            let n = it.next().expect("size per variable");
            pt.int.insert(name.clone(), lo + (idx % n) as i64);
            idx /= n;
        }
        for name in &self.bx.res {
            pt.res.insert(name.clone(), idx % self.k.p);
            idx /= self.k.p;
        }
        Ok(pt)
    }

    /// Exponent of `p` in the volume of one representative's coset.
    fn log_weight(&self) -> i64 {
        -self
            .bx
            .vf
            .iter()
            .map(|(_, v)| v + self.depth as i64)
            .sum::<i64>()
    }

    fn sum<T, F>(&self, f: F) -> Result<Vec<T>, OracleError>
    where
        T: Send,
        F: Fn(&Point) -> Result<T, OracleError> + Sync,
    {
        let total = self.total();
        let chunks = total.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                (c * CHUNK..((c + 1) * CHUNK).min(total))
                    .map(|i| f(&self.point(i)?))
                    .collect::<Result<Vec<T>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().flatten().collect())
    }
}

fn integrate_at(
    e: &CExp,
    ch: &CharacterSpec,
    bx: &IntegrationBox,
    params: &Point,
    depth: u32,
) -> Result<Complex64, OracleError> {
    let g = Grid::new(&ch.field, bx, params, depth)?;
    let total = g.total();
    let chunks = total.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Complex64::zero();
            for i in c * CHUNK..((c + 1) * CHUNK).min(total) {
                acc += interpret(e, ch, &g.point(i)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let s: Complex64 = parts.into_iter().sum();
    Ok(s * (ch.field.p as f64).powi(g.log_weight() as i32))
}

/// Integral of `e` over `bx` with the remaining free variables at `params`.
pub fn numeric_integrate(
    e: &CExp,
    ch: &CharacterSpec,
    bx: &IntegrationBox,
    params: &Point,
) -> Result<OracleResult, OracleError> {
    let v0 = integrate_at(e, ch, bx, params, bx.depth)?;
    let v1 = integrate_at(e, ch, bx, params, bx.depth + 1)?;
    Ok(OracleResult {
        value: v0,
        refinement_delta: (v0 - v1).norm(),
        truncated: !bx.covers_support(e),
    })
}

/// Exact integral at depth `D` of a character-free integrand; `None` if
/// some point carries a nontrivial character.
pub fn numeric_integrate_exact(
    e: &CExp,
    k: &LocalField,
    bx: &IntegrationBox,
    params: &Point,
) -> Result<Option<BigRational>, OracleError> {
    let g = Grid::new(k, bx, params, bx.depth)?;
    let vals = g.sum(|pt| Ok(interpret_exact(e, k, pt)?))?;
    let mut acc = BigRational::zero();
    for v in vals {
        match v {
            Some(x) => acc += x,
            None => return Ok(None),
        }
    }
    let w = g.log_weight();
    let pw = BigRational::from_integer(BigInt::from(k.p).pow(w.unsigned_abs() as u32));
    Ok(Some(if w >= 0 { acc * pw } else { acc / pw }))
}

/// Number of points of `F_p^n` satisfying residue equations and
/// inequations in `vars`.
pub fn count_points(constraints: &[CondAtom], vars: &[String], p: u64) -> Result<u64, OracleError> {
    let total = (p as u128).pow(vars.len() as u32);
    if vars.len() > 4 || total > 10_000_000 {
        return Err(OracleError::TooLarge(total));
    }
    let k = LocalField::qp(p)?;
    let e = CExp::from_term(crate::cexp::CExpTerm {
        conds: constraints.to_vec(),
        ..crate::cexp::CExpTerm::one()
    });
    let mut bx = IntegrationBox::new(0);
    for v in vars {
        bx = bx.res(v);
    }
    let origin = Point::new();
    let g = Grid::new(&k, &bx, &origin, 0)?;
    let hits = g.sum(|pt| Ok(interpret_exact(&e, &k, pt)?.is_some_and(|x| !x.is_zero())))?;
    Ok(hits.into_iter().filter(|h| *h).count() as u64)
}

/// Membership test for `lambda P_m` among elements of a fixed order,
/// through residues modulo `w^K` of unit parts.
pub struct PowerCoset {
    pub m: u32,
    /// Minimal `e >= 1` with `1 + w^e R` inside `P_m`.
    pub e: u32,
    /// Unit parts are decided modulo `w^K`.
    pub k: u32,
    modulus: u64,
    powers: BTreeSet<u64>,
    lambda_ord: i64,
    lambda_unit: u64,
}

const HENSEL_CAP: u64 = 1 << 22;

impl PowerCoset {
    pub fn new(field: &LocalField, m: u32, lambda: &PadicElement) -> Result<Self, OracleError> {
        let p = field.p;
        let vp = {
            let mut v = 0;
            let mut n = m;
            while n % p as u32 == 0 {
                n /= p as u32;
                v += 1;
            }
            v
        };
        if vp > 0 && field.kind == FieldKind::LaurentF {
            return Err(OracleError::HenselCapExceeded { p, m });
        }
        let k = 2 * vp + 1;
        let modulus = p
            .checked_pow(k)
            .filter(|x| *x <= HENSEL_CAP)
            .ok_or(OracleError::HenselCapExceeded { p, m })?;
        let powers: BTreeSet<u64> = (1..modulus)
            .filter(|x| x % p != 0)
            .map(|x| mod_pow(x, m as u64, modulus))
            .collect();
        let e = (1..=k)
            .find(|e| {
                let step = p.pow(*e);
                (0..modulus / step).all(|a| powers.contains(&((1 + a * step) % modulus)))
            })
            .ok_or(OracleError::HenselCapExceeded { p, m })?;
        let lam = lambda.to_approx(field)?;
        let (lambda_ord, _) = field.ord_ac(&lam.val).ok_or(LocalError::ZeroAtPrecision)?;
        let lambda_unit = unit_residue(field, &lam.val, lambda_ord, k)?;
        Ok(PowerCoset {
            m,
            e,
            k,
            modulus,
            powers,
            lambda_ord,
            lambda_unit,
        })
    }

    /// Whether `u = w^j * unit` lies in `lambda P_m`, with the unit given by
    /// its residue modulo `w^K`.
    fn contains(&self, j: i64, unit: u64) -> bool {
        if (j - self.lambda_ord).mod_floor(&(self.m as i64)) != 0 {
            return false;
        }
        let inv = mod_inverse(self.lambda_unit, self.modulus);
        let q = (unit as u128 * inv as u128 % self.modulus as u128) as u64;
        self.powers.contains(&q)
    }
}

fn mod_pow(b: u64, mut e: u64, m: u64) -> u64 {
    let (mut acc, mut b) = (1u128 % m as u128, b as u128 % m as u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        e >>= 1;
    }
    acc as u64
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    (a as i128).extended_gcd(&(m as i128)).x.mod_floor(&(m as i128)) as u64
}

/// Unit part `x w^-ord(x)` modulo `w^K` as an integer in `[0, p^K)`.
/// Over `F_p((t))` the leading `K` coefficients are read base `p`.
fn unit_residue(field: &LocalField, x: &Value, ord: i64, k: u32) -> Result<u64, OracleError> {
    let p = field.p;
    match x {
        Value::Q(q) => {
            let m = p.pow(k) as i128;
            let scale = field.uniformizer_pow(-ord)?;
            let Value::Q(u) = field.mul(&Value::Q(*q), &scale)? else {
                unreachable!()
            };
            let n = u.numer().mod_floor(&m);
            let d = u.denom().mod_floor(&m);
            Ok((n * mod_inverse(d as u64, m as u64) as i128).mod_floor(&m) as u64)
        }
        Value::T { c, .. } => Ok(c.iter().take(k as usize).rev().fold(0, |acc, a| acc * p + a)),
    }
}

/// `G(j) = int_{ord u = j, u in lambda P_m} psi(u) du`.
pub fn gauss_g(
    j: i64,
    m: u32,
    lambda: &PadicElement,
    ch: &CharacterSpec,
) -> Result<Complex64, OracleError> {
    let k = &ch.field;
    let coset = PowerCoset::new(k, m, lambda)?;
    // psi needs digits through w^0; membership needs K unit digits
    let depth = (coset.k as i64).max(1 - j) as u32;
    let total = k.p.checked_pow(depth).filter(|x| *x as u128 <= POINT_CAP);
    let total = total.ok_or(OracleError::TooLarge(u128::MAX))?;
    let chunks = total.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Complex64::zero();
            for i in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let ds = digits(i, k.p, depth);
                if ds[0] == 0 {
                    continue;
                }
                let u = k.from_digits(j, &ds)?;
                if coset.contains(j, unit_residue(k, &u, j, coset.k)?) {
                    acc += ch.eval(&u)?;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let s: Complex64 = parts.into_iter().sum();
    Ok(s * (k.p as f64).powi(-(j as i32 + depth as i32)))
}

/// Haar volume of `{ord u = j, u in lambda P_m}`, exact.
pub fn coset_volume(j: i64, m: u32, lambda: &PadicElement, field: &LocalField) -> Result<BigRational, OracleError> {
    let coset = PowerCoset::new(field, m, lambda)?;
    let depth = coset.k;
    let p = field.p;
    let hits = (0..p.pow(depth))
        .filter(|i| i % p != 0 && coset.contains(j, unit_residue_from_index(field, *i, depth)))
        .count();
    let vol = BigRational::new(BigInt::from(hits), BigInt::from(p).pow(depth));
    let pj = BigRational::from_integer(BigInt::from(p).pow(j.unsigned_abs() as u32));
    Ok(if j >= 0 { vol / pj } else { vol * pj })
}

fn unit_residue_from_index(field: &LocalField, i: u64, depth: u32) -> u64 {
    match field.kind {
        // base-p digits read least significant first are the integer itself
        FieldKind::PadicQ => i,
        FieldKind::LaurentF => digits(i, field.p, depth).iter().rev().fold(0, |acc, a| acc * field.p + a),
    }
}

/// One row of a transfer comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TransferRow {
    pub p: u64,
    pub twist: Vec<u64>,
    #[serde(serialize_with = "complex_pair")]
    pub qp: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub fpt: Complex64,
    pub delta: f64,
    /// Reported for the untwisted character only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_delta: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
    pub max_delta: f64,
    /// Per prime: whether `Q_p` and `F_p((t))` vanish at the same twists.
    pub patterns_agree: Vec<(u64, bool)>,
    pub truncated: bool,
}

const ZERO_TOL: f64 = 1e-9;

/// Integrals of `e` over `Q_p` and `F_p((t))` for every twist modulo
/// `w^depth_m`, matched digit by digit.
pub fn transfer_compare(
    e: &CExp,
    primes: &[u64],
    depth_m: u32,
    bx: &IntegrationBox,
    params: &Point,
) -> Result<TransferReport, OracleError> {
    let mut rows = Vec::new();
    let mut patterns = Vec::new();
    for &p in primes {
        let (kq, kt) = (LocalField::qp(p)?, LocalField::fpt(p)?);
        let mut agree = true;
        for (i, (a, b)) in kq.twists(depth_m).into_iter().zip(kt.twists(depth_m)).enumerate() {
            // all twists share the conductor, so refinement is certified once
            let (vq, vt, refinement) = if i == 0 {
                let rq = numeric_integrate(e, &a, bx, params)?;
                let rt = numeric_integrate(e, &b, bx, params)?;
                (rq.value, rt.value, Some(rq.refinement_delta.max(rt.refinement_delta)))
            } else {
                (
                    integrate_at(e, &a, bx, params, bx.depth)?,
                    integrate_at(e, &b, bx, params, bx.depth)?,
                    None,
                )
            };
            agree &= (vq.norm() < ZERO_TOL) == (vt.norm() < ZERO_TOL);
            let digits = match &b.twist {
                Value::T { low, c } if !c.is_empty() => {
                    let mut d = vec![0; *low as usize];
                    d.extend(c);
                    d.resize(depth_m as usize, 0);
                    d
                }
                _ => vec![0; depth_m as usize],
            };
            rows.push(TransferRow {
                p,
                twist: digits,
                qp: vq,
                fpt: vt,
                delta: (vq - vt).norm(),
                refinement_delta: refinement,
            });
        }
        patterns.push((p, agree));
    }
    let max_delta = rows.iter().map(|r| r.delta).fold(0.0, f64::max);
    Ok(TransferReport {
        rows,
        max_delta,
        patterns_agree: patterns,
        truncated: !bx.covers_support(e),
    })
}

/// `M[c][i] = psi_c(x_i)` over the twists modulo `w^depth`.
pub fn character_matrix(field: &LocalField, points: &[Value], depth: u32) -> Result<Vec<Vec<Complex64>>, OracleError> {
    field
        .twists(depth)
        .iter()
        .map(|ch| points.iter().map(|x| Ok(ch.eval(x)?)).collect())
        .collect()
}

/// Rank by Gaussian elimination with partial pivoting.
pub fn numeric_rank(mut m: Vec<Vec<Complex64>>, tol: f64) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).max_by(|a, b| m[*a][c].norm().total_cmp(&m[*b][c].norm())) else {
            break;
        };
        if m[piv][c].norm() <= tol {
            continue;
        }
        m.swap(rank, piv);
        let head = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[c] / head[c];
            for (x, h) in row.iter_mut().zip(&head).skip(c) {
                *x -= f * h;
            }
        }
        rank += 1;
    }
    rank
}

/// `S_psi = sum_i c_i psi(x_i)` for every twist modulo `w^depth`.
pub fn exponential_sums(
    field: &LocalField,
    points: &[Value],
    coeffs: &[Complex64],
    depth: u32,
) -> Result<Vec<Complex64>, OracleError> {
    Ok(character_matrix(field, points, depth)?
        .into_iter()
        .map(|row| row.iter().zip(coeffs).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cexp::{parse, RTerm};

    fn canon(p: u64) -> CharacterSpec {
        CharacterSpec::canonical(LocalField::qp(p).unwrap())
    }

    fn unit() -> PadicElement {
        PadicElement::parse("5adic: v=0 digits=[1]").unwrap()
    }

    #[test]
    fn shells_and_balls() {
        let e = parse("vf x; [ord(x) == 0] * E(x)").unwrap();
        let bx = IntegrationBox::new(2).vf("x", 0);
        let r = numeric_integrate(&e, &canon(5), &bx, &Point::new()).unwrap();
        assert!(r.is_clean());
        assert!((r.value - Complex64::new(-0.2, 0.0)).norm() < 1e-12);

        let ball = parse("vf x; [ord(x) >= 1]").unwrap();
        let k7 = LocalField::qp(7).unwrap();
        let bx = IntegrationBox::new(1).vf("x", 1);
        let v = numeric_integrate_exact(&ball, &k7, &bx, &Point::new()).unwrap();
        assert_eq!(v, Some(BigRational::new(1.into(), 7.into())));

        let e = parse("vf x; [ord(x) >= 0] * E(x)").unwrap();
        let bx = IntegrationBox::new(2).vf("x", 0);
        let r = numeric_integrate(&e, &canon(5), &bx, &Point::new()).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn truncation_flag() {
        let e = parse("vf x; [ord(x) >= -1]").unwrap();
        let bx = IntegrationBox::new(2).vf("x", 0);
        assert!(numeric_integrate(&e, &canon(3), &bx, &Point::new()).unwrap().truncated);
    }

    #[test]
    fn point_counts() {
        let v = vec!["a".to_string()];
        let a = RTerm::var("a");
        assert_eq!(count_points(&[CondAtom::ResNeq(a.clone())], &v, 7).unwrap(), 6);
        let sq = a.mul(&a).sub(&RTerm::int(1));
        assert_eq!(count_points(&[CondAtom::ResEq(sq)], &v, 7).unwrap(), 2);
        let v2 = vec!["a".to_string(), "b".to_string()];
        let ab = a.mul(&RTerm::var("b")).sub(&RTerm::int(1));
        assert_eq!(count_points(&[CondAtom::ResEq(ab)], &v2, 5).unwrap(), 4);
    }

    #[test]
    fn gauss_values() {
        let ch = canon(5);
        assert!(gauss_g(-2, 2, &unit(), &ch).unwrap().norm() < 1e-12);
        let g1 = gauss_g(1, 1, &unit(), &ch).unwrap();
        assert!((g1 - Complex64::new(0.16, 0.0)).norm() < 1e-12);
        let g0 = gauss_g(0, 1, &unit(), &ch).unwrap();
        assert!((g0 - Complex64::new(-0.2, 0.0)).norm() < 1e-12);
        let k = LocalField::qp(5).unwrap();
        assert_eq!(
            coset_volume(2, 2, &unit(), &k).unwrap(),
            BigRational::new(2.into(), 125.into())
        );
    }

    #[test]
    fn hensel_exponents() {
        let k = LocalField::qp(2).unwrap();
        let one = PadicElement::parse("2adic: v=0 digits=[1]").unwrap();
        assert_eq!(PowerCoset::new(&k, 2, &one).unwrap().e, 3);
        let k5 = LocalField::qp(5).unwrap();
        assert_eq!(PowerCoset::new(&k5, 3, &unit()).unwrap().e, 1);
        let f5 = LocalField::fpt(5).unwrap();
        let lam = PadicElement::parse("5laurent: v=0 digits=[1]").unwrap();
        assert!(matches!(
            PowerCoset::new(&f5, 5, &lam),
            Err(OracleError::HenselCapExceeded { .. })
        ));
    }

    #[test]
    fn transfer_on_shells() {
        let e = parse("vf x; [ord(x) == 0] * E(x)").unwrap();
        let bx = IntegrationBox::new(2).vf("x", 0);
        let rep = transfer_compare(&e, &[5], 1, &bx, &Point::new()).unwrap();
        assert!(rep.max_delta < 1e-9);
        assert!(rep.patterns_agree.iter().all(|(_, a)| *a));
    }

    #[test]
    fn separated_points_have_full_rank() {
        let k = LocalField::qp(5).unwrap();
        let pts: Vec<Value> = [(-2, vec![1]), (-1, vec![3]), (-2, vec![2, 4])]
            .iter()
            .map(|(v, d)| k.from_digits(*v, d).unwrap())
            .collect();
        let m = character_matrix(&k, &pts, 2).unwrap();
        assert_eq!(numeric_rank(m, 1e-9), 3);
    }
}
