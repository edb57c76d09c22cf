use motint::{LRat, Laurent};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use super::{check, Property};

pub fn all() -> Vec<Property> {
    vec![
        ("ring: canonical form matches specialization", canonical_form),
        ("ring: specialization is a homomorphism", homomorphism),
        ("ring: normalization is idempotent", idempotence),
    ]
}

const QS: [i64; 4] = [2, 3, 5, 7];

fn one_minus(i: i64) -> Laurent {
    Laurent::from_pairs([(BigInt::from(1), 0), (BigInt::from(-1), -i)])
}

/// Numerators with exponents in `-3..=3`, so every difference has degree
/// span at most 6 before clearing denominators.
fn numerator() -> impl Strategy<Value = Laurent> {
    prop::collection::vec((-5i64..=5, -3i64..=3), 0..5)
        .prop_map(|ts| Laurent::from_pairs(ts.into_iter().map(|(c, k)| (BigInt::from(c), k))))
}

fn denominator() -> impl Strategy<Value = Laurent> {
    (prop::sample::select(vec![1i64, 2, 3, 6]), -2i64..=2, prop::collection::vec(1i64..=3, 0..3)).prop_map(
        |(c, k, fs)| {
            fs.into_iter()
                .fold(Laurent::monomial(BigInt::from(c), k), |acc, i| acc.mul(&one_minus(i)))
        },
    )
}

fn element() -> impl Strategy<Value = (Laurent, Laurent)> {
    (numerator(), denominator())
}

fn lrat(nd: &(Laurent, Laurent)) -> LRat {
    LRat::normalize(&nd.0, &nd.1).expect("admissible denominator")
}

fn spec(a: &LRat, q: i64) -> BigRational {
    a.specialize_exact(&BigRational::from_integer(q.into()))
}

/// A second fraction for the same value: numerator and denominator
/// multiplied by a common admissible factor.
fn expand(nd: &(Laurent, Laurent), f: u8) -> (Laurent, Laurent) {
    let g = match f {
        0 => one_minus(1),
        1 => one_minus(2),
        2 => Laurent::monomial(BigInt::from(1), 2),
        _ => Laurent::monomial(BigInt::from(-3), 0),
    };
    (nd.0.mul(&g), nd.1.mul(&g))
}

fn canonical_form() -> Result<(), String> {
    let pairs = (element(), element(), 0u8..4, any::<bool>());
    check(1000, pairs, |(a, b, f, same)| {
        let b = if same { expand(&a, f) } else { b };
        let (x, y) = (lrat(&a), lrat(&b));
        let agree = QS.iter().all(|q| spec(&x, *q) == spec(&y, *q));
        prop_assert_eq!(x == y, agree, "{} vs {}", x, y);
        Ok(())
    })
}

fn homomorphism() -> Result<(), String> {
    check(300, (element(), element()), |(a, b)| {
        let (x, y) = (lrat(&a), lrat(&b));
        for q in QS {
            let (sx, sy) = (spec(&x, q), spec(&y, q));
            prop_assert_eq!(spec(&(&x + &y), q), &sx + &sy);
            prop_assert_eq!(spec(&(&x - &y), q), &sx - &sy);
            prop_assert_eq!(spec(&(&x * &y), q), &sx * &sy);
            prop_assert_eq!(spec(&x.pow(2), q), &sx * &sx);
            if let Some(inv) = x.try_inverse() {
                prop_assert_eq!(spec(&inv, q) * &sx, BigRational::from_integer(1.into()));
            }
        }
        Ok(())
    })
}

fn denominator_of(x: &LRat) -> Laurent {
    x.den_factors().fold(Laurent::monomial(x.const_den().clone(), 0), |acc, (i, m)| {
        (0..m).fold(acc, |acc, _| acc.mul(&one_minus(i as i64)))
    })
}

fn idempotence() -> Result<(), String> {
    check(300, element(), |a| {
        let x = lrat(&a);
        let again = LRat::normalize(x.numerator(), &denominator_of(&x)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(again, x);
        Ok(())
    })
}
