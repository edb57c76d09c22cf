use motint::cexp::{parse, parse_lrat, CExp};
use motint::equiv::compare;
use motint::integrate::{constant_value, integrate_all, Status};
use motint::presburger::{sum_series, CmpOp, LinForm, Normalized, PresAtom, PresCond, SumSpec};
use motint::LRat;
use proptest::prelude::*;

use super::{check, Property};

pub fn all() -> Vec<Property> {
    vec![
        ("integrate: linear in the integrand", linearity),
        ("integrate: constants in other variables factor out", projection),
        ("integrate: characters of negative conductor integrate to zero", vanishing),
        ("integrate: character-free volumes match lattice sums", volumes),
    ]
}

const DECLS: &str = "vf x, y; res a; int n; ";

/// Integrable one-variable shapes in `x`, optionally with parameters.
pub fn shape() -> impl Strategy<Value = String> {
    let support = (0u8..4, -2i64..=2, 0i64..=2).prop_map(|(kind, k, len)| match kind {
        0 => format!("[ord(x) >= {}]", k),
        1 => format!("[ord(x) == {}]", k),
        2 => format!("[ord(x) >= {}, ord(x) <= {}]", k, k + len),
        _ => format!("[ord(x) <= {}] * L^(3 * ord(x))", k),
    });
    let extra = prop::sample::select(vec![
        "", "E(x)", "E(w^-1 * x)", "E(w * x)", "e(ac(x))", "[ac(x) == 1]", "[ac(x) != 1]", "L^(-ord(x))",
        "[ord(x) >= n]", "E(x * y)", "e(a * ac(x))",
    ]);
    (support, extra).prop_map(|(s, e)| if e.is_empty() { s } else { format!("{} * {}", s, e) })
}

fn coeff() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["1", "-2", "L^(-1)", "(1 - L^(-1))", "1 / (1 - L^(-1))"])
}

fn p(src: &str) -> Result<CExp, TestCaseError> {
    parse(&format!("{}{}", DECLS, src)).map_err(|e| TestCaseError::fail(format!("{}: {}", src, e)))
}

fn int(e: &CExp) -> Result<CExp, TestCaseError> {
    let r = integrate_all(e, &["x".to_string()]).map_err(|err| TestCaseError::fail(format!("{}: {}", e, err)))?;
    prop_assert!(r.status != Status::NonIntegrable, "{}", e);
    Ok(r.value)
}

fn exact(a: &CExp, b: &CExp) -> Result<(), TestCaseError> {
    let v = compare(a, b);
    prop_assert!(v.is_exact(), "{:?}: {} vs {}", v, a, b);
    Ok(())
}

fn linearity() -> Result<(), String> {
    check(150, (shape(), shape(), coeff(), coeff()), |(f, g, a, b)| {
        let (ca, cb) = (parse_lrat(a).unwrap(), parse_lrat(b).unwrap());
        let (f, g) = (p(&f)?, p(&g)?);
        let lhs = int(&f.scale(&ca).add(&g.scale(&cb)))?;
        let rhs = int(&f)?.scale(&ca).add(&int(&g)?.scale(&cb));
        exact(&lhs, &rhs)
    })
}

fn projection() -> Result<(), String> {
    let factor = prop::sample::select(vec!["[n >= 0] * L^(n)", "e(a)", "[a != 0]", "E(y)", "[ord(y) == 1] * L^(ord(y))"]);
    check(150, (shape(), factor), |(f, c)| {
        let (f, c) = (p(&f)?, p(c)?);
        exact(&int(&f.mul(&c))?, &int(&f)?.mul(&c))
    })
}

fn vanishing() -> Result<(), String> {
    // ord(u x) <= -1 on the whole cell
    check(100, (-3i64..=3, -3i64..=0, 1i64..=4, any::<bool>()), |(j, m, xi, ball)| {
        let k = m - 1 - j;
        let cell = if ball {
            format!("[ord(x) >= {}]", j)
        } else {
            format!("[ord(x) == {}, ac(x) == {}]", j, xi)
        };
        let e = p(&format!("{} * E(w^{} * x)", cell, k))?;
        let v = int(&e)?;
        prop_assert!(v.is_zero(), "{} gives {}", e, v);
        Ok(())
    })
}

/// `sum_{lo <= j <= hi} L^(-j) (1 - L^-1)`, or with the angular component
/// fixed `sum L^(-j-1)`, through the lattice sum alone.
fn lattice_volume(lo: i64, hi: Option<i64>, fixed_ac: bool) -> LRat {
    let j = LinForm::int_var("j");
    let mut atoms = vec![PresAtom::cmp(&j, CmpOp::Ge, &LinForm::constant(lo))];
    if let Some(h) = hi {
        atoms.push(PresAtom::cmp(&j, CmpOp::Le, &LinForm::constant(h)));
    }
    let spec = SumSpec {
        var: "j".into(),
        domain: PresCond::from_normalized(atoms.into_iter().collect::<Vec<Normalized>>()),
        exponent: j.neg().add_const(if fixed_ac { -1 } else { 0 }),
        s: 0,
    };
    let r = sum_series(&spec).unwrap();
    let mut acc = LRat::zero();
    for piece in r.pieces {
        assert!(piece.guard.is_empty());
        acc = &acc + &(&piece.coeff * &LRat::l_pow(piece.lexp.as_integer().unwrap()));
    }
    if fixed_ac {
        acc
    } else {
        &acc * &(&LRat::one() - &LRat::l_pow(-1))
    }
}

fn volumes() -> Result<(), String> {
    check(100, (-3i64..=3, prop::option::of(0i64..=4), any::<bool>()), |(lo, len, fixed)| {
        let hi = len.map(|l| lo + l);
        let mut src = format!("[ord(x) >= {}", lo);
        if let Some(h) = hi {
            src += &format!(", ord(x) <= {}", h);
        }
        if fixed {
            src += ", ac(x) == 1";
        }
        src += "]";
        let r = integrate_all(&p(&src)?, &["x".to_string()]).unwrap();
        prop_assert_eq!(constant_value(&r), Some(lattice_volume(lo, hi, fixed)), "{}", src);
        Ok(())
    })
}
