use motint::cells::decompose;
use motint::cexp::{parse_raw, rational_mod, CExp, CExpTerm, RAtom, Sort};
use motint::localfield::{interpret_exact, FieldKind, LocalField, PadicElement, Point, Value};
use motint::presburger::{Ext, Sym};
use motint::vterm::VTerm;
use num_traits::One;
use proptest::prelude::*;

use super::{check, Property};

pub fn all() -> Vec<Property> {
    vec![("cells: decompositions partition the set and prepare targets", partition)]
}

/// Centers as DSL text, as terms, and as field elements.
const CENTERS: &[&str] = &["0", "1", "2", "w", "(1 + w)", "w^-1"];

fn center_term(i: usize) -> VTerm {
    let w = |k| VTerm::uniformizer(k);
    match i {
        0 => VTerm::zero(),
        1 => VTerm::int(1),
        2 => VTerm::int(2),
        3 => w(1),
        4 => VTerm::int(1).add(&w(1)),
        _ => w(-1),
    }
}

fn center_value(k: &LocalField, i: usize) -> Value {
    let w = |e| k.uniformizer_pow(e).unwrap();
    match i {
        0 => k.zero(),
        1 => k.from_int(1),
        2 => k.from_int(2),
        3 => w(1),
        4 => k.add(&k.from_int(1), &w(1)).unwrap(),
        _ => w(-1),
    }
}

fn cond(c: &str, kind: u8, k: i64) -> String {
    let d = if c == "0" { "t".to_string() } else { format!("t - {}", c) };
    match kind {
        0 => format!("ord({}) >= {}", d, k),
        1 => format!("ord({}) == {}", d, k),
        2 => format!("ord({}) <= {}", d, k),
        3 => format!("ac({}) == {}", d, k.rem_euclid(4) + 1),
        _ => format!("ac({}) != {}", d, k.rem_euclid(4) + 1),
    }
}

/// Up to three atoms over at most two centers.
fn conds() -> impl Strategy<Value = (Vec<usize>, String)> {
    let pair = (0..CENTERS.len(), 0..CENTERS.len()).prop_filter("distinct", |(a, b)| a != b);
    (pair, prop::collection::vec((any::<bool>(), 0u8..5, -1i64..=2), 1..4)).prop_map(|((a, b), atoms)| {
        let cs: Vec<String> = atoms
            .iter()
            .map(|(second, kind, k)| cond(CENTERS[if *second { b } else { a }], *kind, *k))
            .collect();
        (vec![a, b], format!("vf t; [{}]", cs.join(", ")))
    })
}

fn sample(p: u64) -> impl Strategy<Value = PadicElement> {
    (-2i64..=3, prop::collection::vec(0..p, 6))
        .prop_map(move |(v, ds)| PadicElement::new(FieldKind::PadicQ, p, v, ds))
}

fn holds(e: &CExp, k: &LocalField, pt: &Point) -> Result<bool, TestCaseError> {
    let v = interpret_exact(e, k, pt).map_err(|err| TestCaseError::fail(err.to_string()))?;
    Ok(v.is_some_and(|x| x.is_one()))
}

fn partition() -> Result<(), String> {
    for p in [5u64, 7] {
        let k = LocalField::qp(p).map_err(|e| e.to_string())?;
        check(40, (conds(), prop::collection::vec(sample(p), 500)), |((centers, src), points)| {
            let e = parse_raw(&src).map_err(|err| TestCaseError::fail(err.to_string()))?;
            let Some(term) = e.terms.first() else { return Ok(()) };
            let targets: Vec<VTerm> = centers.iter().map(|i| VTerm::var("t").sub(&center_term(*i))).collect();
            let cells = decompose(&term.conds, &targets, "t").map_err(|err| TestCaseError::fail(err.to_string()))?;
            for x in &points {
                let t = x.to_approx(&k).unwrap().val;
                let offsets: Vec<Value> = centers.iter().map(|i| k.sub(&t, &center_value(&k, *i)).unwrap()).collect();
                if offsets.iter().any(|d| k.is_zero(d)) {
                    continue;
                }
                let inside = holds(&e, &k, &Point::new().with_vf("t", x.to_approx(&k).unwrap()))?;
                let mut hits = 0;
                for (cell, prepared) in &cells {
                    let ci = (0..CENTERS.len()).find(|i| center_term(*i) == cell.center).expect("known center");
                    let (j, eta) = k.ord_ac(&k.sub(&t, &center_value(&k, ci)).unwrap()).unwrap();
                    let local = CExp::from_term(CExpTerm { conds: cell.conds.clone(), ..CExpTerm::one() })
                        .declare(&cell.order_var, Sort::Int)
                        .declare(&cell.ac_var, Sort::Residue);
                    let pt = Point::new().with_int(&cell.order_var, j).with_res(&cell.ac_var, eta);
                    if !holds(&local, &k, &pt)? {
                        continue;
                    }
                    hits += 1;
                    for (g, d) in prepared.iter().zip(&offsets) {
                        let (o, a) = k.ord_ac(d).unwrap();
                        let mut sym = |s: &Sym| match s {
                            Sym::Int(n) if *n == cell.order_var => Some(j),
                            Sym::Ord(v) => v.constant_ord_ac().map(|c| c.0),
                            _ => None,
                        };
                        prop_assert_eq!(g.ord.eval(&mut sym), Ok(Ext::Fin(o.into())), "ord of {} in {:?}", g.target, cell);
                        let mut atom = |r: &RAtom| match r {
                            RAtom::Var(n) if *n == cell.ac_var => Some(eta),
                            RAtom::Ac(v) => v.constant_ord_ac().and_then(|c| rational_mod(&c.1, p)),
                            _ => None,
                        };
                        prop_assert_eq!(g.ac.eval_mod(p, &mut atom), Some(a), "ac of {}", g.target);
                    }
                }
                prop_assert_eq!(hits, inside as usize, "{} at {}", src, x);
            }
            Ok(())
        })?;
    }
    Ok(())
}
