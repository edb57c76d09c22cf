use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use super::{normalize_domain, DomainError, LinForm, Normalized, PresAtom, PresCond, Progression, Sym};
use crate::lring::{LRat, Laurent};

/// Largest supported polynomial degree `s` in `j^s L^(a j + b)`.
pub const MAX_DEGREE: u32 = 4;

const MAX_ENUMERATED: i64 = 1_000_000;

/// `sum_{var in domain} var^s * L^exponent`. Branches of `domain` must be
/// pairwise disjoint.
#[derive(Clone, Debug)]
pub struct SumSpec {
    pub var: String,
    pub domain: PresCond,
    pub exponent: LinForm,
    pub s: u32,
}

/// `[guard] * coeff * L^lexp` with `lexp` free of the summation variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumPiece {
    pub guard: Vec<PresAtom>,
    pub coeff: LRat,
    pub lexp: LinForm,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SumResult {
    pub pieces: Vec<SumPiece>,
    /// Parameter regions on which the series diverges.
    pub divergent: Vec<Vec<PresAtom>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SumError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("exponent {0} is not integral on the summation domain")]
    FractionalExponent(String),
    #[error("polynomial degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooLarge(u32),
    #[error("finite sum with parametric bounds and constant exponent has no closed form in L")]
    ParametricCount,
    #[error("polynomial factor with parametric bounds has no closed form in L")]
    ParametricPolynomial,
    #[error("constant bounds enclose more than {MAX_ENUMERATED} terms")]
    TooManyTerms,
}

impl SumResult {
    pub fn is_divergent(&self) -> bool {
        !self.divergent.is_empty()
    }

    /// Value at a parameter point with `L = q`; `None` on a divergent region.
    pub fn specialize(&self, val: &mut dyn FnMut(&Sym) -> Option<i64>, q: f64) -> Option<f64> {
        if self
            .divergent
            .iter()
            .any(|g| g.iter().all(|a| a.eval(val)))
        {
            return None;
        }
        let mut acc = 0.0;
        for p in &self.pieces {
            if p.guard.iter().all(|a| a.eval(val)) {
                let e = match p.lexp.eval(val) {
                    Ok(super::Ext::Fin(e)) => e,
                    _ => return None,
                };
                let e = *e.numer() as f64 / *e.denom() as f64;
                acc += p.coeff.to_f64(q) * q.powf(e);
            }
        }
        Some(acc)
    }
}

fn stirling2(n: u32, k: u32) -> i64 {
    if n == 0 && k == 0 {
        return 1;
    }
    if n == 0 || k == 0 {
        return 0;
    }
    k as i64 * stirling2(n - 1, k) + stirling2(n - 1, k - 1)
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `sum_{k >= 0} k^b x^k` with `x = L^e`, `e < 0`.
fn poly_geometric(b: u32, e: i64) -> LRat {
    let inv = LRat::one_minus_l_pow_inverse(e);
    let mut acc = LRat::zero();
    for i in 0..=b {
        let c = stirling2(b, i) * factorial(i);
        if c == 0 {
            continue;
        }
        let t = LRat::from_int(c) * LRat::l_pow(e * i as i64) * inv.pow(i + 1);
        acc = acc + t;
    }
    acc
}

fn int_exponent(l: &LinForm) -> Result<LinForm, SumError> {
    if l.has_integer_coeffs() {
        Ok(l.clone())
    } else {
        Err(SumError::FractionalExponent(l.to_string()))
    }
}

fn int_of(r: Rational64, ctx: &LinForm) -> Result<i64, SumError> {
    if r.is_integer() {
        Ok(r.to_integer())
    } else {
        Err(SumError::FractionalExponent(ctx.to_string()))
    }
}

/// Splits a bound by its residue mod `n`, returning `(guard, extreme element)`:
/// the least progression element `>= bound` (or the greatest `<= bound`).
fn extreme_element(
    bound: &LinForm,
    r: i64,
    n: i64,
    from_below: bool,
) -> Vec<(Option<Normalized>, LinForm)> {
    if let Some(c) = bound.as_constant() {
        let b = if from_below {
            -Integer::div_floor(&-*c.numer(), c.denom())
        } else {
            Integer::div_floor(c.numer(), c.denom())
        };
        let e = if from_below {
            b + (r - b).mod_floor(&n)
        } else {
            b - (b - r).mod_floor(&n)
        };
        return vec![(None, LinForm::constant(e))];
    }
    if n == 1 {
        return vec![(None, bound.clone())];
    }
    (0..n)
        .map(|s| {
            let g = PresAtom::congruence(bound, s, n);
            let e = if from_below {
                bound.add_const((r - s).mod_floor(&n))
            } else {
                bound.add_const(-(s - r).mod_floor(&n))
            };
            (Some(g), e)
        })
        .collect()
}

fn with_guard(base: &[PresAtom], extra: &[Option<Normalized>]) -> Option<Vec<PresAtom>> {
    let mut g = base.to_vec();
    for e in extra.iter().flatten() {
        match e {
            Normalized::True => {}
            Normalized::False => return None,
            Normalized::Atom(a) => {
                if !g.contains(a) {
                    g.push(a.clone())
                }
            }
        }
    }
    Some(g)
}

/// Sums `var^s L^exponent` over one progression.
pub fn sum_progression(
    p: &Progression,
    var: &Sym,
    exponent: &LinForm,
    s: u32,
) -> Result<SumResult, SumError> {
    if s > MAX_DEGREE {
        return Err(SumError::DegreeTooLarge(s));
    }
    let (rho, e0) = exponent.take(var);
    let n = p.modulus;
    let r = p.residue;
    let mut out = SumResult::default();
    match (&p.lower, &p.upper) {
        (None, None) => out.divergent.push(p.guard.clone()),
        (Some(lo), None) | (None, Some(lo)) => {
            let from_below = p.upper.is_none();
            // direction of travel: j = first + n k (or last - n k)
            let step = if from_below { rho * n } else { -rho * n };
            if step >= Rational64::zero() {
                out.divergent.push(p.guard.clone());
                return Ok(out);
            }
            let step = int_of(step, exponent)?;
            for (g, first) in extreme_element(lo, r, n, from_below) {
                let Some(guard) = with_guard(&p.guard, &[g]) else {
                    continue;
                };
                let base = int_exponent(&e0.add(&first.scale(rho)))?;
                let coeff = if s == 0 {
                    LRat::one_minus_l_pow_inverse(step)
                } else {
                    let f = first.as_integer().ok_or(SumError::ParametricPolynomial)?;
                    let signed_n = if from_below { n } else { -n };
                    let mut acc = LRat::zero();
                    for b in 0..=s {
                        let c = binom(s, b) * f.pow(s - b) * signed_n.pow(b);
                        if c != 0 {
                            acc = acc + LRat::from_int(c) * poly_geometric(b, step);
                        }
                    }
                    acc
                };
                out.pieces.push(SumPiece {
                    guard,
                    coeff,
                    lexp: base,
                });
            }
        }
        (Some(lo), Some(hi)) => {
            if let (Some(a), Some(b)) = (lo.as_integer(), hi.as_integer()) {
                return sum_constant_range(p, a, b, rho, &e0, s, exponent);
            }
            if s > 0 {
                return Err(SumError::ParametricPolynomial);
            }
            if rho.is_zero() {
                return Err(SumError::ParametricCount);
            }
            let step = int_of(rho * n, exponent)?;
            let inv = LRat::one_minus_l_pow_inverse(step);
            for (g1, first) in extreme_element(lo, r, n, true) {
                for (g2, last) in extreme_element(hi, r, n, false) {
                    let nonempty = PresAtom::le0(first.sub(&last));
                    let Some(guard) = with_guard(&p.guard, &[g1.clone(), g2, Some(nonempty)]) else {
                        continue;
                    };
                    let bf = int_exponent(&e0.add(&first.scale(rho)))?;
                    let bl = int_exponent(&e0.add(&last.scale(rho)).add_const(step))?;
                    out.pieces.push(SumPiece {
                        guard: guard.clone(),
                        coeff: inv.clone(),
                        lexp: bf,
                    });
                    out.pieces.push(SumPiece {
                        guard,
                        coeff: -inv.clone(),
                        lexp: bl,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn sum_constant_range(
    p: &Progression,
    lo: i64,
    hi: i64,
    rho: Rational64,
    e0: &LinForm,
    s: u32,
    exponent: &LinForm,
) -> Result<SumResult, SumError> {
    let n = p.modulus;
    let first = lo + (p.residue - lo).mod_floor(&n);
    let last = hi - (hi - p.residue).mod_floor(&n);
    let mut out = SumResult::default();
    if first > last {
        return Ok(out);
    }
    let count = (last - first) / n + 1;
    let c0 = e0.constant_term();
    let sym_part = int_exponent(&e0.add_const_r(-c0))?;
    if count > MAX_ENUMERATED {
        if s > 0 {
            return Err(SumError::TooManyTerms);
        }
        let lexp = sym_part;
        if rho.is_zero() {
            let k = int_of(c0, exponent)?;
            out.pieces.push(SumPiece {
                guard: p.guard.clone(),
                coeff: LRat::from_int(count) * LRat::l_pow(k),
                lexp,
            });
            return Ok(out);
        }
        let step = int_of(rho * n, exponent)?;
        let ef = int_of(rho * first + c0, exponent)?;
        let el = int_of(rho * (last + n) + c0, exponent)?;
        let inv = LRat::one_minus_l_pow_inverse(step);
        out.pieces.push(SumPiece {
            guard: p.guard.clone(),
            coeff: (LRat::l_pow(ef) - LRat::l_pow(el)) * inv,
            lexp,
        });
        return Ok(out);
    }
    let mut pairs = Vec::new();
    let mut j = first;
    while j <= last {
        let e = int_of(rho * j + c0, exponent)?;
        pairs.push((BigInt::from(j).pow(s), e));
        j += n;
    }
    out.pieces.push(SumPiece {
        guard: p.guard.clone(),
        coeff: LRat::from_laurent(Laurent::from_pairs(pairs)),
        lexp: sym_part,
    });
    Ok(out)
}

/// Sums `var^s L^exponent` over a Presburger set in `var`.
pub fn sum_series(spec: &SumSpec) -> Result<SumResult, SumError> {
    let var = Sym::int(&spec.var);
    let mut out = SumResult::default();
    for branch in &spec.domain.branches {
        for prog in normalize_domain(branch, &var)? {
            let r = sum_progression(&prog, &var, &spec.exponent, spec.s)?;
            out.pieces.extend(r.pieces);
            out.divergent.extend(r.divergent);
        }
    }
    out.pieces.retain(|p| !p.coeff.is_zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::CmpOp;
    use crate::scalar::ratio;

    fn cond(atoms: Vec<Normalized>) -> PresCond {
        PresCond::from_normalized(atoms)
    }

    fn j() -> LinForm {
        LinForm::int_var("j")
    }

    fn single(r: &SumResult) -> LRat {
        assert!(r.divergent.is_empty());
        assert_eq!(r.pieces.len(), 1, "{:?}", r);
        let p = &r.pieces[0];
        assert!(p.guard.is_empty());
        let k = p.lexp.as_integer().unwrap();
        p.coeff.clone() * LRat::l_pow(k)
    }

    #[test]
    fn geometric() {
        let spec = SumSpec {
            var: "j".into(),
            domain: cond(vec![PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::constant(1))]),
            exponent: j().neg(),
            s: 0,
        };
        let v = single(&sum_series(&spec).unwrap());
        assert_eq!(v, LRat::l_pow(-1) * LRat::geometric(1));
    }

    #[test]
    fn differentiated_geometric() {
        let spec = SumSpec {
            var: "j".into(),
            domain: cond(vec![PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::zero())]),
            exponent: j().neg(),
            s: 1,
        };
        let v = single(&sum_series(&spec).unwrap());
        assert_eq!(v, LRat::l_pow(-1) * LRat::geometric(1).pow(2));
    }

    #[test]
    fn odd_progression() {
        let spec = SumSpec {
            var: "j".into(),
            domain: cond(vec![
                PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::constant(1)),
                PresAtom::congruence(&j(), 1, 2),
            ]),
            exponent: j().scale((-2).into()),
            s: 0,
        };
        let v = single(&sum_series(&spec).unwrap());
        assert_eq!(v, LRat::l_pow(-2) * LRat::geometric(4));
        assert_eq!(v.specialize(&ratio(2, 1)), ratio(4, 15));
    }

    #[test]
    fn divergent() {
        let spec = SumSpec {
            var: "j".into(),
            domain: cond(vec![PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::zero())]),
            exponent: j(),
            s: 0,
        };
        assert!(sum_series(&spec).unwrap().is_divergent());
    }

    #[test]
    fn finite_constant_range() {
        // sum_{j=0}^{2} L^{-j-1}(L-1) = 1 - L^-3 after scaling
        let spec = SumSpec {
            var: "j".into(),
            domain: cond(vec![
                PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::zero()),
                PresAtom::cmp(&j(), CmpOp::Le, &LinForm::constant(2)),
            ]),
            exponent: j().neg().add_const(-1),
            s: 0,
        };
        let v = single(&sum_series(&spec).unwrap());
        let l_minus_1 = LRat::l_pow(1) - LRat::one();
        assert_eq!(v * l_minus_1, LRat::one() - LRat::l_pow(-3));
    }
}
