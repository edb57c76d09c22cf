//! Declarative test corpora and their runners.
//!
//! A corpus file is TOML with four optional tables of cases:
//!
//! ```toml
//! [[integral]]
//! name = "unit_shell_character"
//! dsl = "vf x; [ord(x) == 0] * E(x)"
//! bind = ["x"]
//! expected = "-L^(-1)"
//! region = "x: vmin=0"
//! depth = 2
//! reference = "character sum over the unit shell"
//!
//! [[schwartz_bruhat]]
//! name = "ball"
//! dsl = "vf x; [ord(x) >= 1]"
//! vars = ["x"]
//! alpha0 = 2
//!
//! [[residue]]
//! name = "delta"
//! dsl = "res a; [a == 0]"
//! vars = ["a"]
//!
//! [[convolution]]
//! name = "ball_shell"
//! f = "vf x; [ord(x) >= 0]"
//! g = "vf x; [ord(x) == 1]"
//! vars = ["x"]
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cexp::{parse, CExp};
use crate::equiv::{compare, Verdict};
use crate::fourier::{convolve, fourier_res, fourier_vf, is_schwartz_bruhat, reflect_res, reflect_vf};
use crate::integrate::{integrate_all, Status};
use crate::localfield::{interpret, CharacterSpec, LocalField, Point};
use crate::lring::LRat;
use crate::oracle::{numeric_integrate, transfer_compare, IntegrationBox};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Format(PathBuf, toml::de::Error),
}

fn default_depth() -> u32 {
    2
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralCase {
    pub name: String,
    pub dsl: String,
    pub bind: Vec<String>,
    /// Closed form of the integral, in the expression syntax.
    pub expected: Option<String>,
    /// Integration box for the oracle, see [`IntegrationBox::parse`].
    pub region: String,
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// Also integrate in reverse variable order.
    #[serde(default)]
    pub fubini: bool,
    /// Skip the transfer comparison (e.g. coset conditions with p | m).
    #[serde(default)]
    pub no_transfer: bool,
    #[serde(default)]
    pub reference: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SchwartzBruhatCase {
    pub name: String,
    pub dsl: String,
    pub vars: Vec<String>,
    pub alpha0: i64,
    #[serde(default)]
    pub reference: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ResidueCase {
    pub name: String,
    pub dsl: String,
    pub vars: Vec<String>,
    #[serde(default)]
    pub reference: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionCase {
    pub name: String,
    pub f: String,
    pub g: String,
    /// Third factor for the associativity check.
    pub h: Option<String>,
    pub vars: Vec<String>,
    #[serde(default)]
    pub reference: String,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    #[serde(default)]
    pub integral: Vec<IntegralCase>,
    #[serde(default)]
    pub schwartz_bruhat: Vec<SchwartzBruhatCase>,
    #[serde(default)]
    pub residue: Vec<ResidueCase>,
    #[serde(default)]
    pub convolution: Vec<ConvolutionCase>,
}

impl Corpus {
    pub fn from_toml(src: &str, path: &Path) -> Result<Self, CorpusError> {
        toml::from_str(src).map_err(|e| CorpusError::Format(path.to_path_buf(), e))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let src = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(path.to_path_buf(), e))?;
        Self::from_toml(&src, path)
    }

    /// All `*.toml` files of a directory, in file name order.
    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        let rd = std::fs::read_dir(dir).map_err(|e| CorpusError::Io(dir.to_path_buf(), e))?;
        let mut paths: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        let mut all = Corpus::default();
        for p in paths {
            all.extend(Self::load(&p)?);
        }
        Ok(all)
    }

    pub fn extend(&mut self, o: Corpus) {
        self.integral.extend(o.integral);
        self.schwartz_bruhat.extend(o.schwartz_bruhat);
        self.residue.extend(o.residue);
        self.convolution.extend(o.convolution);
    }
}

/// Outcome of one check within a case.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn exact(check: impl Into<String>, v: Verdict) -> Self {
        Check {
            check: check.into(),
            passed: v.is_exact(),
            delta: None,
            detail: if v.is_exact() { String::new() } else { format!("{:?}", v) },
        }
    }

    fn numeric(check: impl Into<String>, delta: f64, tol: f64) -> Self {
        Check {
            check: check.into(),
            passed: delta <= tol,
            delta: Some(delta),
            detail: String::new(),
        }
    }

    fn failed(check: impl Into<String>, detail: impl ToString) -> Self {
        Check {
            check: check.into(),
            passed: false,
            delta: None,
            detail: detail.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub family: &'static str,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub reference: String,
}

impl CaseReport {
    fn new(family: &'static str, name: &str, reference: &str, checks: Vec<Check>) -> Self {
        CaseReport {
            family,
            name: name.to_string(),
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            reference: reference.to_string(),
        }
    }

    /// Largest numeric deviation among the checks.
    pub fn max_delta(&self) -> f64 {
        self.checks.iter().filter_map(|c| c.delta).fold(0.0, f64::max)
    }
}

/// Tolerances and primes for the numeric checks.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub primes: Vec<u64>,
    pub transfer_primes: Vec<u64>,
    pub twist_depth: u32,
    pub tol: f64,
    pub transfer: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            primes: vec![3, 5, 7, 11],
            transfer_primes: vec![5, 7, 11],
            twist_depth: 2,
            tol: 1e-9,
            transfer: false,
        }
    }
}

fn parsed(src: &str) -> Result<CExp, Check> {
    parse(src).map_err(|e| Check::failed("parse", e))
}

/// Symbolic integral over `bind`, which must converge everywhere. Residue
/// sums left in the value are fine: they are evaluated at each prime.
pub fn symbolic_integral(e: &CExp, bind: &[String]) -> Result<CExp, Check> {
    let r = integrate_all(e, bind).map_err(|err| Check::failed("integrate", err))?;
    if r.status == Status::NonIntegrable {
        return Err(Check::failed("integrate", format!("{:?}", r.status)));
    }
    Ok(r.value)
}

fn oracle_box(case: &IntegralCase) -> Result<IntegrationBox, Check> {
    IntegrationBox::parse(&case.region, case.depth).map_err(|e| Check::failed("region", e))
}

pub fn run_integral(case: &IntegralCase, opts: &RunOptions) -> CaseReport {
    let mut checks = Vec::new();
    let mut body = || -> Result<(), Check> {
        let e = parsed(&case.dsl)?;
        let v = symbolic_integral(&e, &case.bind)?;
        if let Some(x) = &case.expected {
            checks.push(Check::exact("closed form", compare(&v, &parsed(x)?)));
        }
        if case.fubini {
            let rev: Vec<String> = case.bind.iter().rev().cloned().collect();
            let w = symbolic_integral(&e, &rev)?;
            checks.push(Check::exact("fubini", compare(&v, &w)));
        }
        let bx = oracle_box(case)?;
        for &p in &opts.primes {
            let ch = CharacterSpec::canonical(LocalField::qp(p).map_err(|e| Check::failed("field", e))?);
            let sym = interpret(&v, &ch, &Point::new()).map_err(|e| Check::failed(format!("specialize p={}", p), e))?;
            let num = numeric_integrate(&e, &ch, &bx, &Point::new())
                .map_err(|e| Check::failed(format!("oracle p={}", p), e))?;
            let mut c = Check::numeric(format!("oracle p={}", p), (sym - num.value).norm(), opts.tol);
            if !num.is_clean() {
                c.passed = false;
                c.detail = format!("refinement {:.2e}, truncated {}", num.refinement_delta, num.truncated);
            }
            checks.push(c);
        }
        if opts.transfer && !case.no_transfer {
            checks.extend(transfer_checks(&e, &bx, opts));
        }
        Ok(())
    };
    if let Err(c) = body() {
        checks.push(c);
    }
    CaseReport::new("integral", &case.name, &case.reference, checks)
}

/// Matched-twist comparison between `Q_p` and `F_p((t))`: values must
/// agree where the integrand is twist-stable, and vanishing patterns must
/// agree always.
pub fn transfer_checks(e: &CExp, bx: &IntegrationBox, opts: &RunOptions) -> Vec<Check> {
    let rep = match transfer_compare(e, &opts.transfer_primes, opts.twist_depth, bx, &Point::new()) {
        Ok(r) => r,
        Err(err) => return vec![Check::failed("transfer", err)],
    };
    let mut out = Vec::new();
    for (p, agree) in &rep.patterns_agree {
        let rows: Vec<_> = rep.rows.iter().filter(|r| r.p == *p).collect();
        let spread = |f: &dyn Fn(&crate::oracle::TransferRow) -> num_complex::Complex64| {
            rows.iter().map(|r| (f(r) - f(rows[0])).norm()).fold(0.0, f64::max)
        };
        let stable = spread(&|r| r.qp) <= opts.tol && spread(&|r| r.fpt) <= opts.tol;
        let mut c = if stable {
            let d = rows.iter().map(|r| r.delta).fold(0.0, f64::max);
            Check::numeric(format!("transfer values p={}", p), d, opts.tol)
        } else {
            Check {
                check: format!("transfer pattern p={}", p),
                passed: *agree,
                delta: None,
                detail: "twist-dependent values".into(),
            }
        };
        if !*agree {
            c.passed = false;
            c.detail = "vanishing patterns differ".into();
        }
        out.push(c);
    }
    out
}

/// Both Schwartz-Bruhat identities and `F(F(f)) = L^-d f(-x)`.
pub fn run_schwartz_bruhat(case: &SchwartzBruhatCase) -> CaseReport {
    let mut checks = Vec::new();
    let mut body = || -> Result<(), Check> {
        let f = parsed(&case.dsl)?;
        checks.push(Check {
            check: "schwartz-bruhat".into(),
            passed: is_schwartz_bruhat(&f, &case.vars, case.alpha0),
            delta: None,
            detail: String::new(),
        });
        let ff = fourier_vf(&fourier_vf(&f, &case.vars).map_err(|e| Check::failed("fourier", e))?, &case.vars)
            .map_err(|e| Check::failed("fourier", e))?;
        let want = reflect_vf(&f, &case.vars).scale(&LRat::l_pow(-(case.vars.len() as i64)));
        checks.push(Check::exact("inversion", compare(&ff, &want)));
        Ok(())
    };
    if let Err(c) = body() {
        checks.push(c);
    }
    CaseReport::new("schwartz_bruhat", &case.name, &case.reference, checks)
}

/// `f(f(g)) = L^d g(-xi)` on the residue field.
pub fn run_residue(case: &ResidueCase) -> CaseReport {
    let mut checks = Vec::new();
    let mut body = || -> Result<(), Check> {
        let g = parsed(&case.dsl)?;
        let once = fourier_res(&g, &case.vars).map_err(|e| Check::failed("fourier", e))?;
        let twice = fourier_res(&once, &case.vars).map_err(|e| Check::failed("fourier", e))?;
        let want = reflect_res(&g, &case.vars).scale(&LRat::l_pow(case.vars.len() as i64));
        checks.push(Check::exact("inversion", compare(&twice, &want)));
        Ok(())
    };
    if let Err(c) = body() {
        checks.push(c);
    }
    CaseReport::new("residue", &case.name, &case.reference, checks)
}

/// `F(f * g) = F(f) F(g)`, commutativity and, with `h`, associativity.
pub fn run_convolution(case: &ConvolutionCase) -> CaseReport {
    let mut checks = Vec::new();
    let mut body = || -> Result<(), Check> {
        let vs = &case.vars;
        let (f, g) = (parsed(&case.f)?, parsed(&case.g)?);
        let conv = |a: &CExp, b: &CExp| convolve(a, b, vs).map_err(|e| Check::failed("convolve", e));
        let four = |a: &CExp| fourier_vf(a, vs).map_err(|e| Check::failed("fourier", e));
        let fg = conv(&f, &g)?;
        checks.push(Check::exact("fourier of product", compare(&four(&fg)?, &four(&f)?.mul(&four(&g)?))));
        checks.push(Check::exact("commutative", compare(&fg, &conv(&g, &f)?)));
        if let Some(h) = &case.h {
            let h = parsed(h)?;
            let left = conv(&fg, &h)?;
            let right = conv(&f, &conv(&g, &h)?)?;
            checks.push(Check::exact("associative", compare(&left, &right)));
        }
        Ok(())
    };
    if let Err(c) = body() {
        checks.push(c);
    }
    CaseReport::new("convolution", &case.name, &case.reference, checks)
}

/// Every case of the corpus, in file order; cases run in parallel.
pub fn run_all(c: &Corpus, opts: &RunOptions) -> Vec<CaseReport> {
    let mut out: Vec<CaseReport> = c.integral.par_iter().map(|x| run_integral(x, opts)).collect();
    out.extend(c.schwartz_bruhat.par_iter().map(run_schwartz_bruhat).collect::<Vec<_>>());
    out.extend(c.residue.par_iter().map(run_residue).collect::<Vec<_>>());
    out.extend(c.convolution.par_iter().map(run_convolution).collect::<Vec<_>>());
    out
}
