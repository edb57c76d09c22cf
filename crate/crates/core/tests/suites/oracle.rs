use motint::cexp::parse;
use motint::corpus::{Corpus, IntegralCase};
use motint::integrate::{constant_value, integrate_all};
use motint::localfield::{CharacterSpec, LocalField, Point};
use motint::oracle::{numeric_integrate, numeric_integrate_exact, IntegrationBox};
use num_bigint::BigInt;
use num_rational::BigRational;

use super::fourier::corpus_dir;
use super::Property;

pub fn all() -> Vec<Property> {
    vec![
        ("oracle: refinement stability", refinement),
        ("oracle: exact volumes of indicators", exact_indicators),
        ("oracle: thread count does not change sums", determinism),
    ]
}

fn integrals() -> Result<Vec<IntegralCase>, String> {
    Ok(Corpus::load_dir(&corpus_dir()).map_err(|e| e.to_string())?.integral)
}

fn boxed(case: &IntegralCase, depth: u32) -> Result<IntegrationBox, String> {
    IntegrationBox::parse(&case.region, depth).map_err(|e| e.to_string())
}

/// Depths `D + 1` and `D + 2` past the corpus depth agree.
fn refinement() -> Result<(), String> {
    let ch = CharacterSpec::canonical(LocalField::qp(3).unwrap());
    for case in integrals()? {
        let e = parse(&case.dsl).map_err(|e| e.to_string())?;
        let bx = boxed(&case, case.depth + 1)?;
        let r = numeric_integrate(&e, &ch, &bx, &Point::new()).map_err(|e| format!("{}: {}", case.name, e))?;
        if r.refinement_delta > 1e-9 {
            return Err(format!("{}: refinement moved by {:e}", case.name, r.refinement_delta));
        }
    }
    Ok(())
}

/// Character-free corpus integrands: the lattice sum is the symbolic
/// volume, as rationals.
fn exact_indicators() -> Result<(), String> {
    let mut seen = 0;
    for case in integrals()? {
        let e = parse(&case.dsl).map_err(|e| e.to_string())?;
        let Ok(r) = integrate_all(&e, &case.bind) else { continue };
        let Some(vol) = constant_value(&r) else { continue };
        let bx = boxed(&case, case.depth)?;
        for p in [3u64, 5] {
            let k = LocalField::qp(p).unwrap();
            let Some(num) = numeric_integrate_exact(&e, &k, &bx, &Point::new()).map_err(|e| e.to_string())? else {
                continue;
            };
            let want = vol.specialize_exact(&BigRational::from_integer(BigInt::from(p)));
            if num != want {
                return Err(format!("{} p={}: lattice sum {} vs {}", case.name, p, num, want));
            }
            seen += 1;
        }
    }
    if seen < 20 {
        return Err(format!("only {} character-free comparisons", seen));
    }
    Ok(())
}

fn bits(z: num_complex::Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

fn determinism() -> Result<(), String> {
    let ch = CharacterSpec::canonical(LocalField::qp(5).unwrap());
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, four) = (pool(1), pool(4));
    for case in integrals()? {
        let e = parse(&case.dsl).map_err(|e| e.to_string())?;
        let bx = boxed(&case, case.depth)?;
        let run = |pool: &rayon::ThreadPool| pool.install(|| numeric_integrate(&e, &ch, &bx, &Point::new()));
        let (a, b) = (run(&one), run(&four));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                if bits(a.value) != bits(b.value) || a.refinement_delta.to_bits() != b.refinement_delta.to_bits() {
                    return Err(format!("{}: {} with 1 thread, {} with 4", case.name, a.value, b.value));
                }
            }
            (Err(a), Err(b)) if a == b => {}
            (a, b) => return Err(format!("{}: {:?} vs {:?}", case.name, a, b)),
        }
    }
    Ok(())
}
