use motint::cexp::{parse, parse_raw, rewrite, CExp};
use motint::localfield::{interpret, CharacterSpec, FieldKind, LocalField, PadicElement, Point};
use proptest::prelude::*;

use super::{check, Property};

pub fn all() -> Vec<Property> {
    vec![
        ("rewrite: independent of factor and term order", confluence),
        ("rewrite: preserves values at sample points", semantics),
        ("rewrite: product is associative and commutative", product_laws),
        ("rewrite: print and parse round trip", round_trip),
    ]
}

const DECLS: &str = "vf x, y; res a; int n; ";

const COEFFS: &[&str] = &["1", "-1", "2", "L^(-1)", "(1 - L^(-1))", "1 / (1 - L^(-2))"];
const POWERS: &[&str] = &["L^(ord(x))", "L^(-n)", "L^(ord(y) - ord(x))", "L^(2 * ord(x) + 1)"];
const CONDS: &[&str] = &[
    "ord(x) >= 0",
    "ord(x) == -1",
    "ord(x) <= 2",
    "ac(x) == 1",
    "ac(x) != 2",
    "ord(y) >= ord(x)",
    "ord(x + y) >= 1",
    "a != 0",
    "a == ac(x)",
    "n >= 0",
    "n <= 2",
    "ord(y) == n",
];
const CHARS: &[&str] = &["E(x)", "E(w^-1 * x)", "E(x + y)", "E(x * y)", "e(a)", "e(ac(x))", "e(a * ac(y))"];

/// A term as a list of factors.
fn term() -> impl Strategy<Value = Vec<String>> {
    (
        prop::sample::select(COEFFS),
        prop::option::of(prop::sample::select(POWERS)),
        prop::collection::vec(prop::sample::select(CONDS), 0..4),
        prop::collection::vec(prop::sample::select(CHARS), 0..3),
    )
        .prop_map(|(c, p, conds, chars)| {
            let mut out = vec![c.to_string()];
            out.extend(p.map(str::to_string));
            if !conds.is_empty() {
                out.push(format!("[{}]", conds.join(", ")));
            }
            out.extend(chars.into_iter().map(str::to_string));
            out
        })
}

fn expr() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(term(), 1..4)
}

fn text(terms: &[Vec<String>]) -> String {
    let ts: Vec<String> = terms.iter().map(|t| t.join(" * ")).collect();
    format!("{}{}", DECLS, ts.join(" + "))
}

fn raw(terms: &[Vec<String>]) -> Result<CExp, TestCaseError> {
    parse_raw(&text(terms)).map_err(|e| TestCaseError::fail(format!("{}: {}", text(terms), e)))
}

fn confluence() -> Result<(), String> {
    check(200, expr(), |terms| {
        let a = rewrite(&raw(&terms)?);
        let mut rev: Vec<Vec<String>> = terms.iter().rev().cloned().collect();
        for t in &mut rev {
            t.reverse();
        }
        let b = rewrite(&raw(&rev)?);
        prop_assert_eq!(&a.terms, &b.terms, "{}", text(&terms));
        prop_assert_eq!(&rewrite(&a).terms, &a.terms, "not idempotent");
        Ok(())
    })
}

fn element(kind: FieldKind, p: u64) -> impl Strategy<Value = PadicElement> {
    (-2i64..=2, 1..p, prop::collection::vec(0..p, 5)).prop_map(move |(v, lead, rest)| {
        let mut ds = vec![lead];
        ds.extend(rest);
        PadicElement::new(kind, p, v, ds)
    })
}

fn point(p: u64) -> impl Strategy<Value = (PadicElement, PadicElement, u64, i64)> {
    (element(FieldKind::PadicQ, p), element(FieldKind::PadicQ, p), 0..p, -2i64..=3)
}

fn semantics() -> Result<(), String> {
    for p in [5u64, 7] {
        let k = LocalField::qp(p).map_err(|e| e.to_string())?;
        let ch = CharacterSpec::canonical(k.clone());
        let points = prop::collection::vec(point(p), 100);
        check(20, (expr(), points), |(terms, points)| {
            let e = raw(&terms)?;
            let r = rewrite(&e);
            let mut compared = 0;
            for (x, y, a, n) in points {
                let pt = Point::new()
                    .with_vf("x", x.to_approx(&k).unwrap())
                    .with_vf("y", y.to_approx(&k).unwrap())
                    .with_res("a", a)
                    .with_int("n", n);
                // points where the raw form needs more digits are skipped
                let Ok(want) = interpret(&e, &ch, &pt) else { continue };
                let got = interpret(&r, &ch, &pt).map_err(|err| TestCaseError::fail(err.to_string()))?;
                prop_assert!((want - got).norm() < 1e-9, "{} at {} {}: {} vs {}", text(&terms), x, y, want, got);
                compared += 1;
            }
            prop_assert!(compared > 0);
            Ok(())
        })?;
    }
    Ok(())
}

fn product_laws() -> Result<(), String> {
    check(100, (expr(), expr(), expr()), |(a, b, c)| {
        let (a, b, c) = (rewrite(&raw(&a)?), rewrite(&raw(&b)?), rewrite(&raw(&c)?));
        prop_assert_eq!(&a.mul(&b).terms, &b.mul(&a).terms);
        prop_assert_eq!(&a.mul(&b).mul(&c).terms, &a.mul(&b.mul(&c)).terms);
        Ok(())
    })
}

fn round_trip() -> Result<(), String> {
    check(200, expr(), |terms| {
        let printed = rewrite(&raw(&terms)?).to_string();
        let again = parse(&printed).map_err(|e| TestCaseError::fail(format!("{}: {}", printed, e)))?;
        prop_assert_eq!(again.to_string(), printed);
        Ok(())
    })
}
