use std::f64::consts::TAU;

use motint::cexp::parse;
use motint::localfield::{
    interpret, ord_ac, psi_eval, CharacterSpec, FieldKind, LocalError, LocalField, PadicElement, Point,
};
use num_complex::Complex64;
use proptest::prelude::*;

use super::{check_msg as check, Property};

pub fn all() -> Vec<Property> {
    vec![
        ("character: additivity", additivity),
        ("character: conductor and units", conductor),
        ("character: precision monotonicity", monotonicity),
        ("character: twist completeness", twist_completeness),
    ]
}

fn kind() -> impl Strategy<Value = FieldKind> {
    prop_oneof![Just(FieldKind::PadicQ), Just(FieldKind::LaurentF)]
}

fn field(kind: FieldKind, p: u64) -> LocalField {
    LocalField::new(kind, p).unwrap()
}

/// `(kind, p)` with an element generator tied to `p`.
fn setting() -> impl Strategy<Value = (FieldKind, u64)> {
    (kind(), prop_oneof![Just(3u64), Just(5), Just(7)])
}

fn digits(p: u64, n: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..p, n)
}

fn element(kind: FieldKind, p: u64, v: std::ops::Range<i64>, n: usize) -> impl Strategy<Value = PadicElement> {
    (v, digits(p, n)).prop_map(move |(v, d)| PadicElement::new(kind, p, v, d))
}

fn twist(k: &LocalField, depth: usize, ds: &[u64]) -> CharacterSpec {
    CharacterSpec::twisted(*k, k.from_digits(0, &ds[..depth]).unwrap()).unwrap()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> Result<(), String> {
    if (a - b).norm() <= tol {
        Ok(())
    } else {
        Err(format!("{} vs {}", a, b))
    }
}

fn additivity() -> Result<(), String> {
    let s = setting().prop_flat_map(|(kind, p)| {
        (
            Just((kind, p)),
            element(kind, p, -3..3, 6),
            element(kind, p, -3..3, 6),
            digits(p, 3),
            0..4usize,
        )
    });
    check(500, s, |((kind, p), x, y, c, depth)| {
        let k = field(kind, p);
        let ch = twist(&k, depth, &c);
        let (a, b) = (x.to_approx(&k).unwrap().val, y.to_approx(&k).unwrap().val);
        let sum = k.add(&a, &b).unwrap();
        let lhs = ch.eval(&sum).unwrap();
        let rhs = ch.eval(&a).unwrap() * ch.eval(&b).unwrap();
        close(lhs, rhs, 1e-12).map_err(|e| format!("{} + {} twist {:?}: {}", x, y, ch.twist, e))
    })
}

fn conductor() -> Result<(), String> {
    let s = setting().prop_flat_map(|(kind, p)| {
        (
            Just((kind, p)),
            element(kind, p, 1..5, 5),
            1..p,
            digits(p, 4),
            digits(p, 3),
            0..4usize,
        )
    });
    check(500, s, |((kind, p), m, u0, tail, c, depth)| {
        let k = field(kind, p);
        let ch = twist(&k, depth, &c);
        let one = Complex64::new(1.0, 0.0);
        if ch.eval(&m.to_approx(&k).unwrap().val).unwrap() != one {
            return Err(format!("psi({}) != 1", m));
        }
        let mut ds = vec![u0];
        ds.extend(tail);
        let u = PadicElement::new(kind, p, 0, ds);
        let want = Complex64::from_polar(1.0, TAU * u0 as f64 / p as f64);
        let got = psi_eval(&ch, &u).unwrap();
        if got != want {
            return Err(format!("psi({}) = {} want {}", u, got, want));
        }
        Ok(())
    })
}

const EXPRS: &[&str] = &[
    "vf x; [ord(x) >= -1] * E(x)",
    "vf x; [ord(x - 1) >= 1, ac(x - 1) == 2] * E(2 * x)",
    "vf x; L^(ord(x)) * [ord(x) <= 1, ac(x) != 1] * E(w^-1 * x)",
    "vf x; res a; [ac(x) == a] * e(a) + [ord(x) == 0] * E(x^2)",
];

/// Values computed from a prefix of the digits never change when more
/// digits are appended; failures are allowed only at the short precision.
fn monotonicity() -> Result<(), String> {
    let es: Vec<_> = EXPRS.iter().map(|s| parse(s).unwrap()).collect();
    let s = setting().prop_flat_map(|(kind, p)| {
        (
            Just((kind, p)),
            element(kind, p, -2..3, 5),
            digits(p, 4),
            1..p,
            digits(p, 2),
            0..3usize,
        )
    });
    check(300, s, move |((kind, p), x, more, a, c, depth)| {
        let k = field(kind, p);
        let ch = twist(&k, depth, &c);
        let mut longer = x.clone();
        longer.digits.extend(more);
        let same = |what: &str, r0: Result<String, LocalError>, r1: Result<String, LocalError>| match (r0, r1) {
            (Ok(a), Ok(b)) if a != b => Err(format!("{} at {}: {} then {}", what, x, a, b)),
            (Ok(_), Err(e)) => Err(format!("{} at {}: error {} after refining", what, x, e)),
            _ => Ok(()),
        };
        same("ord_ac", ord_ac(&k, &x).map(|v| format!("{:?}", v)), ord_ac(&k, &longer).map(|v| format!("{:?}", v)))?;
        same("psi", psi_eval(&ch, &x).map(|v| v.to_string()), psi_eval(&ch, &longer).map(|v| v.to_string()))?;
        let at = |y: &PadicElement| Point::new().with_vf("x", y.to_approx(&k).unwrap()).with_res("a", a);
        for e in &es {
            let r0 = interpret(e, &ch, &at(&x)).map(|v| v.to_string());
            let r1 = interpret(e, &ch, &at(&longer)).map(|v| v.to_string());
            same(&e.to_string(), r0, r1)?;
        }
        Ok(())
    })
}

/// On `ord x >= -M` only the twist modulo `w^M` is seen.
fn twist_completeness() -> Result<(), String> {
    let es: Vec<_> = EXPRS.iter().map(|s| parse(s).unwrap()).collect();
    let s = setting().prop_flat_map(|(kind, p)| {
        (
            Just((kind, p)),
            0..3i64,
            digits(p, 6),
            digits(p, 3),
            digits(p, 3),
            1..p,
        )
    });
    let es = &es[..2];
    check(300, s, move |((kind, p), m, xd, c, r, a)| {
        let k = field(kind, p);
        let x = PadicElement::new(kind, p, -m, xd);
        let base = k.from_digits(0, &c[..m as usize]).unwrap();
        let shift = k.from_digits(m, &r).unwrap();
        let ch0 = CharacterSpec::twisted(k, base.clone()).unwrap();
        let ch1 = CharacterSpec::twisted(k, k.add(&base, &shift).unwrap()).unwrap();
        let pt = Point::new().with_vf("x", x.to_approx(&k).unwrap()).with_res("a", a);
        for e in es {
            let (v0, v1) = (interpret(e, &ch0, &pt), interpret(e, &ch1, &pt));
            match (v0, v1) {
                (Ok(v0), Ok(v1)) => close(v0, v1, 1e-12).map_err(|d| format!("{} at {}: {}", e, x, d))?,
                (Err(a), Err(b)) if a == b => {}
                (v0, v1) => return Err(format!("{} at {}: {:?} vs {:?}", e, x, v0, v1)),
            }
        }
        Ok(())
    })
}
