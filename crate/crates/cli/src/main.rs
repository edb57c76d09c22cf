//! `motint`: command-line front end for the integration engine.
//!
//! Every subcommand prints one JSON document on standard output. Exit
//! status is 0 on success, 1 on usage or parse errors (and failing corpus
//! cases), 2 when the engine cannot handle the input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motint::cexp::{parse, parse_lrat, parse_raw, to_json, CExp};
use motint::cells::{decompose, Cell, PreparedTerm};
use motint::corpus::{run_all, Corpus, RunOptions};
use motint::fourier::{convolve, fourier_res, fourier_vf, is_schwartz_bruhat};
use motint::integrate::integrate_all;
use motint::localfield::{parse_body, parse_twist, Approx, CharacterSpec, LocalField, Point};
use motint::oracle::{numeric_integrate, numeric_integrate_exact, transfer_compare, IntegrationBox};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

/// Bumped whenever a field is renamed or removed.
const SCHEMA_VERSION: u32 = 1;

/// Directory searched by `corpus run` when no files are given.
const CORPUS_ENV: &str = "MOTINT_CORPUS";

#[derive(Parser)]
#[command(name = "motint", version, about = "Exact integration of constructible exponential functions")]
struct Cli {
    /// Worker threads for enumeration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Compact JSON (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and normalize an expression.
    Parse {
        /// DSL text, a file name, or `-` for standard input.
        input: String,
        /// Keep the conditions as written.
        #[arg(long)]
        raw: bool,
    },
    /// Integrate over the listed variables, innermost first.
    Integrate {
        #[arg(long, value_delimiter = ',', required = true)]
        bind: Vec<String>,
        input: String,
    },
    /// Fourier transform in the listed valued variables.
    Fourier {
        #[arg(long, value_delimiter = ',', default_value = "x")]
        vars: Vec<String>,
        /// Expected number of variables.
        #[arg(long)]
        dim: Option<usize>,
        /// Transform over the residue field instead.
        #[arg(long)]
        residue: bool,
        input: String,
    },
    /// Convolution `f * g`.
    Convolve {
        #[arg(long, value_delimiter = ',', default_value = "x")]
        vars: Vec<String>,
        f: String,
        g: String,
    },
    /// Check the Schwartz-Bruhat identities with support bound `alpha0`.
    SbCheck {
        #[arg(long, allow_hyphen_values = true)]
        alpha0: i64,
        #[arg(long, value_delimiter = ',', default_value = "x")]
        vars: Vec<String>,
        input: String,
    },
    /// Cell decomposition of each term's conditions in one variable.
    Cells {
        #[arg(long)]
        var: String,
        /// Valued terms to prepare on every cell.
        #[arg(long = "target")]
        targets: Vec<String>,
        input: String,
    },
    /// Value of a coefficient at `L = q`.
    Specialize {
        #[arg(long)]
        q: i64,
        input: String,
    },
    /// Brute-force integral over a box.
    Oracle {
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value = "qp")]
        field: FieldArg,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long = "box")]
        region: String,
        /// Twist literal `v=0 digits=[1]`.
        #[arg(long)]
        twist: Option<String>,
        #[command(flatten)]
        params: Params,
        input: String,
    },
    /// Compare integrals over `Q_p` and `F_p((t))` at matched twists.
    Transfer {
        #[arg(long, value_delimiter = ',', default_value = "5,7,11")]
        primes: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        twist_depth: u32,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long = "box")]
        region: String,
        #[command(flatten)]
        params: Params,
        input: String,
    },
    /// Corpus files.
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Run every case; exits 1 if any fails.
    Run {
        /// Corpus files or directories (default: `$MOTINT_CORPUS`, then `corpus`).
        paths: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11")]
        primes: Vec<u64>,
        /// Also compare `Q_p` with `F_p((t))`.
        #[arg(long)]
        transfer: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Qp,
    Fpt,
}

/// Values of free variables.
#[derive(Args)]
struct Params {
    /// `name=v=1 digits=[2,3]`.
    #[arg(long = "vf")]
    vf: Vec<String>,
    /// `name=r`.
    #[arg(long = "res")]
    res: Vec<String>,
    /// `name=n`.
    #[arg(long = "int", allow_hyphen_values = true)]
    int: Vec<String>,
}

enum Failure {
    Usage(String),
    Capability(String),
}

impl Failure {
    fn kind(&self) -> (&'static str, u8) {
        match self {
            Failure::Usage(_) => ("usage", 1),
            Failure::Capability(_) => ("unsupported", 2),
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn unsupported(e: impl ToString) -> Failure {
    Failure::Capability(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return emit(&cli, Err(usage(e)));
        }
    }
    let out = run(&cli.cmd);
    emit(&cli, out)
}

fn emit(cli: &Cli, out: Result<(Value, bool), Failure>) -> ExitCode {
    let (mut doc, code) = match out {
        Ok((v, ok)) => (v, u8::from(!ok)),
        Err(f) => {
            let (kind, code) = f.kind();
            let (Failure::Usage(m) | Failure::Capability(m)) = f;
            (json!({ "error": { "kind": kind, "message": m } }), code)
        }
    };
    if let Value::Object(m) = &mut doc {
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    let text = if cli.pretty {
        serde_json::to_string_pretty(&doc)
    } else {
        serde_json::to_string(&doc)
    };
    // a closed pipe (e.g. `| head`) is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{}", text.expect("json"));
    ExitCode::from(code)
}

/// DSL text, or the contents of a file, or standard input for `-`.
fn source(arg: &str) -> Result<String, Failure> {
    if arg == "-" {
        return std::io::read_to_string(std::io::stdin()).map_err(usage);
    }
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {}", arg, e)));
    }
    Ok(arg.to_string())
}

fn expr(arg: &str) -> Result<CExp, Failure> {
    parse(&source(arg)?).map_err(usage)
}

fn expression(e: &CExp) -> Value {
    json!({ "value": e.body_string(), "ast": to_json(e) })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn run(cmd: &Cmd) -> Result<(Value, bool), Failure> {
    let doc = match cmd {
        Cmd::Parse { input, raw } => {
            let src = source(input)?;
            let e = if *raw { parse_raw(&src) } else { parse(&src) }.map_err(usage)?;
            expression(&e)
        }
        Cmd::Integrate { bind, input } => {
            let r = integrate_all(&expr(input)?, bind).map_err(unsupported)?;
            let divergent: Vec<Vec<String>> = r
                .divergent
                .iter()
                .map(|c| c.iter().map(ToString::to_string).collect())
                .collect();
            merge(json!({ "status": r.status, "divergent": divergent }), expression(&r.value))
        }
        Cmd::Fourier { vars, dim, residue, input } => {
            if dim.is_some_and(|d| d != vars.len()) {
                return Err(usage(format!("--dim {} but {} variables", dim.unwrap(), vars.len())));
            }
            let e = expr(input)?;
            let f = if *residue { fourier_res(&e, vars) } else { fourier_vf(&e, vars) };
            expression(&f.map_err(unsupported)?)
        }
        Cmd::Convolve { vars, f, g } => expression(&convolve(&expr(f)?, &expr(g)?, vars).map_err(unsupported)?),
        Cmd::SbCheck { alpha0, vars, input } => {
            json!({ "schwartz_bruhat": is_schwartz_bruhat(&expr(input)?, vars, *alpha0) })
        }
        Cmd::Cells { var, targets, input } => cells(var, targets, input)?,
        Cmd::Specialize { q, input } => {
            if *q < 2 {
                return Err(usage("q must be at least 2"));
            }
            let c = parse_lrat(&source(input)?).map_err(usage)?;
            let v = c.specialize_exact(&BigRational::from_integer(BigInt::from(*q)));
            json!({ "value": v.to_string(), "approx": num_traits::ToPrimitive::to_f64(&v) })
        }
        Cmd::Oracle { p, field, depth, region, twist, params, input } => {
            let k = match field {
                FieldArg::Qp => LocalField::qp(*p),
                FieldArg::Fpt => LocalField::fpt(*p),
            }
            .map_err(usage)?;
            let ch = match twist {
                Some(t) => CharacterSpec::twisted(k, parse_twist(&k, t).map_err(usage)?).map_err(usage)?,
                None => CharacterSpec::canonical(k),
            };
            let e = expr(input)?;
            let bx = IntegrationBox::parse(region, *depth).map_err(usage)?;
            let pt = point(&k, params)?;
            let r = numeric_integrate(&e, &ch, &bx, &pt).map_err(unsupported)?;
            let exact = numeric_integrate_exact(&e, &k, &bx, &pt).map_err(unsupported)?;
            let twist_digits = twist.as_deref().unwrap_or("v=0 digits=[]");
            merge(
                json!({
                    "p": p,
                    "field": k.kind,
                    "depth": depth,
                    "twist": twist_digits,
                    "exact": exact.map(|x| x.to_string()),
                }),
                serde_json::to_value(&r).expect("json"),
            )
        }
        Cmd::Transfer { primes, twist_depth, depth, region, params, input } => {
            let e = expr(input)?;
            let bx = IntegrationBox::parse(region, *depth).map_err(usage)?;
            // parameters are read digit by digit in each field; Q_p fixes the digits
            let k = LocalField::qp(*primes.first().ok_or_else(|| usage("no primes"))?).map_err(usage)?;
            let pt = point(&k, params)?;
            let rep = transfer_compare(&e, primes, *twist_depth, &bx, &pt).map_err(unsupported)?;
            serde_json::to_value(&rep).expect("json")
        }
        Cmd::Corpus { cmd: CorpusCmd::Run { paths, primes, transfer, tol } } => {
            return corpus_run(paths, primes, *transfer, *tol);
        }
    };
    Ok((doc, true))
}

fn point(k: &LocalField, ps: &Params) -> Result<Point, Failure> {
    let split = |s: &String| -> Result<(String, String), Failure> {
        let (a, b) = s.split_once('=').ok_or_else(|| usage(format!("expected name=value, got `{}`", s)))?;
        Ok((a.trim().to_string(), b.trim().to_string()))
    };
    let mut pt = Point::new();
    for s in &ps.vf {
        let (n, v) = split(s)?;
        let (low, digits) = parse_body(&v).map_err(usage)?;
        let val = k.from_digits(low, &digits).map_err(usage)?;
        pt = pt.with_vf(&n, Approx { val, prec: Some(low + digits.len() as i64) });
    }
    for s in &ps.res {
        let (n, v) = split(s)?;
        pt = pt.with_res(&n, v.parse().map_err(usage)?);
    }
    for s in &ps.int {
        let (n, v) = split(s)?;
        pt = pt.with_int(&n, v.parse().map_err(usage)?);
    }
    Ok(pt)
}

fn cell_json(c: &Cell, prepared: &[PreparedTerm]) -> Value {
    let strs = |xs: &[motint::cexp::CondAtom]| xs.iter().map(ToString::to_string).collect::<Vec<_>>();
    json!({
        "kind": c.kind,
        "center": c.center.to_string(),
        "order_var": c.order_var,
        "ac_var": c.ac_var,
        "ac": c.ac_constraint.as_ref().map(ToString::to_string),
        "coset": c.coset.as_ref().map(|(l, m)| json!({ "lambda": l.to_string(), "m": m })),
        "conds": strs(&c.conds),
        "prepared": prepared.iter().map(|g| json!({
            "target": g.target.to_string(),
            "ord": g.ord.to_string(),
            "ac": g.ac.to_string(),
            "affine": g.affine.as_ref().map(|(u, w)| json!({ "u": u.to_string(), "w": w.to_string() })),
        })).collect::<Vec<_>>(),
    })
}

fn cells(var: &str, targets: &[String], input: &str) -> Result<Value, Failure> {
    let src = source(input)?;
    let e = parse_raw(&src).map_err(usage)?;
    // targets are read as E-arguments in the expression's declarations
    let decls = src.rsplit_once(';').map_or("", |(d, _)| d);
    let mut ts = Vec::new();
    for t in targets {
        let g = parse_raw(&format!("{}; E({})", decls, t)).map_err(usage)?;
        ts.push(g.terms.first().map(|x| x.exp_arg.clone()).ok_or_else(|| usage(t))?);
    }
    let mut out = Vec::new();
    for (i, term) in e.terms.iter().enumerate() {
        let cs = decompose(&term.conds, &ts, var).map_err(unsupported)?;
        out.push(json!({
            "term": i,
            "cells": cs.iter().map(|(c, p)| cell_json(c, p)).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({ "var": var, "terms": out }))
}

fn corpus_run(paths: &[PathBuf], primes: &[u64], transfer: bool, tol: f64) -> Result<(Value, bool), Failure> {
    let paths: Vec<PathBuf> = if paths.is_empty() {
        vec![std::env::var_os(CORPUS_ENV).map_or_else(|| PathBuf::from("corpus"), PathBuf::from)]
    } else {
        paths.to_vec()
    };
    let mut corpus = Corpus::default();
    for p in &paths {
        let c = if p.is_dir() { Corpus::load_dir(p) } else { Corpus::load(p) };
        corpus.extend(c.map_err(usage)?);
    }
    let opts = RunOptions {
        primes: primes.to_vec(),
        transfer,
        tol,
        ..RunOptions::default()
    };
    let reports = run_all(&corpus, &opts);
    let failed = reports.iter().filter(|r| !r.passed).count();
    let doc = json!({
        "cases": reports,
        "passed": reports.len() - failed,
        "failed": failed,
    });
    Ok((doc, failed == 0))
}
