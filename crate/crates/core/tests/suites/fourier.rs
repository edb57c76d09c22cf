use std::path::PathBuf;

use motint::cexp::{parse, CExp, RTerm};
use motint::corpus::Corpus;
use motint::equiv::compare;
use motint::fourier::{convolve, fourier_vf, phi, psi, psi_ac, reflect_vf};
use motint::presburger::LinForm;
use motint::LRat;

use super::Property;

pub fn all() -> Vec<Property> {
    vec![
        ("fourier: double transform of balls and shells", inversion),
        ("fourier: double transform of angular fibers", angular_inversion),
        ("fourier: partial inversion on the corpus", partial_inversion),
        ("fourier: balls are sums of shells", shells),
    ]
}

pub fn vars(d: usize) -> Vec<String> {
    ["x", "y", "z"][..d].iter().map(|s| s.to_string()).collect()
}

/// `-2..=2` and a free integer parameter.
pub fn alphas() -> Vec<LinForm> {
    let mut out: Vec<LinForm> = (-2..=2).map(LinForm::constant).collect();
    out.push(LinForm::int_var("k"));
    out
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn exact(what: &str, a: &CExp, b: &CExp) -> Result<(), String> {
    let v = compare(a, b);
    if v.is_exact() {
        Ok(())
    } else {
        Err(format!("{}: {:?}: {} vs {}", what, v, a, b))
    }
}

fn twice(what: &str, f: &CExp, vs: &[String]) -> Result<CExp, String> {
    let once = fourier_vf(f, vs).map_err(|e| format!("{}: {}", what, e))?;
    fourier_vf(&once, vs).map_err(|e| format!("{}: {} on {}", what, e, once))
}

/// `F(F(f)) = L^-d f(-x)`.
fn check_inversion(what: &str, f: &CExp, vs: &[String]) -> Result<(), String> {
    let want = reflect_vf(f, vs).scale(&LRat::l_pow(-(vs.len() as i64)));
    exact(what, &twice(what, f, vs)?, &want)
}

pub fn inversion() -> Result<(), String> {
    for d in 1..=3 {
        let vs = vars(d);
        for a in alphas() {
            check_inversion(&format!("phi d={} a={}", d, a), &phi(&vs, &a), &vs)?;
            check_inversion(&format!("psi d={} a={}", d, a), &psi(&vs, &a), &vs)?;
        }
    }
    Ok(())
}

pub fn xis(d: usize) -> Vec<RTerm> {
    (0..d).map(|i| RTerm::var(&format!("xi{}", i))).collect()
}

pub fn angular_inversion() -> Result<(), String> {
    for d in 1..=3 {
        let vs = vars(d);
        for a in alphas() {
            let f = psi_ac(&vs, &a, &xis(d)).map_err(|e| e.to_string())?;
            check_inversion(&format!("psi_xi d={} a={}", d, a), &f, &vs)?;
        }
    }
    Ok(())
}

/// `F(phi_a F(f)) = L^(-a d) (f(-x) * phi_(1-a))` for one-variable
/// corpus members.
fn partial_inversion() -> Result<(), String> {
    let corpus = Corpus::load_dir(&corpus_dir()).map_err(|e| e.to_string())?;
    let mut seen = 0;
    for case in corpus.schwartz_bruhat.iter().filter(|c| c.vars.len() == 1) {
        let vs = &case.vars;
        let f = parse(&case.dsl).map_err(|e| e.to_string())?;
        let ff = fourier_vf(&f, vs).map_err(|e| e.to_string())?;
        for a in -1..=1 {
            let lhs = fourier_vf(&phi(vs, &LinForm::constant(a)).mul(&ff), vs).map_err(|e| e.to_string())?;
            let rhs = convolve(&reflect_vf(&f, vs), &phi(vs, &LinForm::constant(1 - a)), vs)
                .map_err(|e| e.to_string())?
                .scale(&LRat::l_pow(-a));
            exact(&format!("{} a={}", case.name, a), &lhs, &rhs)?;
        }
        seen += 1;
    }
    if seen < 5 {
        return Err(format!("only {} one-variable corpus members", seen));
    }
    Ok(())
}

/// `phi_a = prod_i (sum_{a <= b < a + 3} psi_b(x_i) + phi_(a+3)(x_i))`.
fn shells() -> Result<(), String> {
    for d in 1..=3 {
        let vs = vars(d);
        for a in alphas() {
            let mut want: Option<CExp> = None;
            for x in &vs {
                let one = std::slice::from_ref(x);
                let mut f = phi(one, &a.add_const(3));
                for b in 0..3 {
                    f = f.add(&psi(one, &a.add_const(b)));
                }
                want = Some(match want {
                    None => f,
                    Some(w) => w.mul(&f),
                });
            }
            exact(&format!("shells d={} a={}", d, a), &phi(&vs, &a), &want.unwrap())?;
        }
    }
    Ok(())
}
