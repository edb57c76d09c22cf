use motint::presburger::{normalize_domain, sum_series, CmpOp, LinForm, Normalized, PresAtom, PresCond, Sym, SumSpec};
use proptest::prelude::*;

use super::{check, Property};

pub fn all() -> Vec<Property> {
    vec![
        ("series: closed form matches truncated sums", closed_form),
        ("series: divergence matches growth", divergence),
        ("series: domains split into disjoint progressions", partition),
    ]
}

fn j() -> LinForm {
    LinForm::int_var("j")
}

fn atom(n: Normalized) -> Vec<PresAtom> {
    match n {
        Normalized::Atom(a) => vec![a],
        _ => vec![],
    }
}

/// `j >= lo`, optionally `j <= hi` and `j = r (mod m)`.
fn domain(lo: i64, hi: Option<i64>, congr: Option<(i64, i64)>) -> Vec<PresAtom> {
    let mut out = atom(PresAtom::cmp(&j(), CmpOp::Ge, &LinForm::constant(lo)));
    if let Some(h) = hi {
        out.extend(atom(PresAtom::cmp(&j(), CmpOp::Le, &LinForm::constant(h))));
    }
    if let Some((r, m)) = congr {
        out.extend(atom(PresAtom::congruence(&j(), r, m)));
    }
    out
}

fn spec(atoms: Vec<PresAtom>, a: i64, b: i64, s: u32) -> SumSpec {
    SumSpec {
        var: "j".into(),
        domain: PresCond::conj(atoms),
        exponent: j().scale(a.into()).add_const(b),
        s,
    }
}

/// `sum j^s q^(a j + b)` over the domain, for `j` in `lo..=lo + terms`.
fn truncated(atoms: &[PresAtom], lo: i64, terms: i64, a: i64, b: i64, s: u32, q: f64) -> f64 {
    (lo..=lo + terms)
        .filter(|v| atoms.iter().all(|x| x.eval(&mut |_| Some(*v))))
        .map(|v| (v as f64).powi(s as i32) * q.powf((a * v + b) as f64))
        .sum()
}

fn congruence() -> impl Strategy<Value = Option<(i64, i64)>> {
    prop::option::of((2i64..=4).prop_flat_map(|m| (0..m, Just(m))))
}

fn closed_form() -> Result<(), String> {
    let s = (-3i64..=3, prop::option::of(0i64..=8), congruence(), 1i64..=3, -2i64..=2, 0u32..=2);
    check(200, s, |(lo, len, congr, a, b, deg)| {
        let atoms = domain(lo, len.map(|l| lo + l), congr);
        let r = sum_series(&spec(atoms.clone(), -a, b, deg)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(!r.is_divergent());
        for q in [2.0, 3.0, 5.0] {
            let v = r.specialize(&mut |_| None, q).expect("convergent");
            let t = truncated(&atoms, lo, 200, -a, b, deg, q);
            prop_assert!((v - t).abs() <= 1e-9 * t.abs().max(1.0), "q={}: {} vs {}", q, v, t);
        }
        Ok(())
    })
}

fn divergence() -> Result<(), String> {
    check(100, (-3i64..=3, congruence(), 0i64..=2, -2i64..=2, 0u32..=2), |(lo, congr, a, b, deg)| {
        let atoms = domain(lo, None, congr);
        let r = sum_series(&spec(atoms.clone(), a, b, deg)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(r.is_divergent());
        let partial: Vec<f64> = (1..=10).map(|k| truncated(&atoms, lo, 10 * k, a, b, deg, 2.0).abs()).collect();
        prop_assert!(partial.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(partial[9] > 5.0 * partial[0].max(1.0));
        Ok(())
    })
}

/// Random atoms in `j` and a parameter `n`.
fn pool() -> impl Strategy<Value = Vec<PresAtom>> {
    let n = || LinForm::int_var("n");
    let one = (0u8..6, -4i64..=4, 2i64..=3).prop_map(move |(kind, c, m)| {
        let k = LinForm::constant(c);
        atom(match kind {
            0 => PresAtom::cmp(&j(), CmpOp::Ge, &k),
            1 => PresAtom::cmp(&j(), CmpOp::Le, &k.add_const(6)),
            2 => PresAtom::cmp(&j(), CmpOp::Ge, &n().add_const(c)),
            3 => PresAtom::cmp(&j(), CmpOp::Le, &n().add_const(c + 4)),
            4 => PresAtom::congruence(&j(), c.rem_euclid(m), m),
            _ => PresAtom::cmp(&j(), CmpOp::Ne, &k),
        })
    });
    prop::collection::vec(one, 1..5).prop_map(|v| v.concat())
}

fn partition() -> Result<(), String> {
    check(200, pool(), |atoms| {
        let ps = normalize_domain(&atoms, &Sym::int("j")).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for n in -3..=3 {
            for v in -30..=30 {
                let mut val = |s: &Sym| Some(if *s == Sym::int("j") { v } else { n });
                let want = atoms.iter().all(|a| a.eval(&mut val)) as usize;
                let hits = ps.iter().filter(|p| p.contains(v, &mut |_| Some(n))).count();
                prop_assert_eq!(hits, want, "j={} n={}", v, n);
            }
        }
        Ok(())
    })
}
