//! Text syntax for constructible exponential functions.
//!
//! ```text
//! vf x, y; res xi; int j;
//! L^(-j) * [j >= 1, ord(x) == j] * E(x) + sum eta : e(eta * ac(x)) * [eta != 0]
//! ```
//!
//! Products, `+`/`-`, division by invertible constants of the coefficient
//! ring and parenthesized powers are supported. A `sum` extends over the
//! rest of the product it appears in.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use super::{rewrite, CExp, CExpTerm, CondAtom, RTerm, Sort};
use crate::lring::LRat;
use crate::presburger::{CmpOp, LinForm, Normalized, PresAtom};
use crate::vterm::VTerm;

const KEYWORDS: &[&str] = &[
    "vf", "res", "int", "sum", "L", "E", "e", "ord", "ac", "w", "in", "mod",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: sort error: {msg}")]
    Sort { line: usize, col: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(i64),
    Id(String),
    P(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "`{}`", n),
            Tok::Id(s) => write!(f, "`{}`", s),
            Tok::P(s) => write!(f, "`{}`", s),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const PUNCT: &[&str] = &[
    "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", ":", ";",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse::<i64>().map_err(|_| ParseError::Syntax {
                line,
                col,
                msg: format!("integer literal `{}` out of range", s),
            })?;
            col += i - start;
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Id(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("unexpected character `{}`", c),
            });
        };
        i += p.len();
        col += p.len();
        out.push((Tok::P(p), pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Untyped arithmetic tree, classified by sort after parsing.
#[derive(Clone, Debug)]
struct G {
    kind: GK,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum GK {
    Num(i64),
    Id(String),
    W,
    Ord(Box<G>),
    Ac(Box<G>),
    Add(Box<G>, Box<G>),
    Sub(Box<G>, Box<G>),
    Mul(Box<G>, Box<G>),
    Div(Box<G>, Box<G>),
    Neg(Box<G>),
    Pow(Box<G>, i64),
}

enum CondRes {
    True,
    False,
    Atom(CondAtom),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    ctx: BTreeMap<String, Sort>,
    locals: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_p(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::P(q) if *q == p)
    }

    fn is_id(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Id(q) if q == s)
    }

    fn eat_p(&mut self, p: &str) -> bool {
        if self.is_p(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(ParseError::Syntax {
            line: p.line,
            col: p.col,
            msg: msg.into(),
        })
    }

    fn expect_p(&mut self, p: &str) -> PResult<()> {
        if self.eat_p(p) {
            Ok(())
        } else {
            self.syntax(format!("expected `{}`, found {}", p, self.peek()))
        }
    }

    fn expect_int(&mut self) -> PResult<i64> {
        let neg = self.eat_p("-");
        match self.bump() {
            Tok::Num(n) => Ok(if neg { -n } else { n }),
            t => {
                self.i -= 1;
                self.syntax(format!("expected an integer, found {}", t))
            }
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Id(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.syntax(format!("expected a variable name, found {}", t)),
        }
    }

    fn sort_of_name(&self, name: &str) -> Option<Sort> {
        if self.locals.iter().any(|l| l == name) {
            return Some(Sort::Residue);
        }
        self.ctx.get(name).copied()
    }

    // -- declarations -----------------------------------------------------

    fn declarations(&mut self) -> PResult<()> {
        loop {
            let sort = match (self.peek(), self.peek_at(1)) {
                (Tok::Id(k), Tok::Id(_)) => match k.as_str() {
                    "vf" => Sort::Valued,
                    "res" => Sort::Residue,
                    "int" => Sort::Int,
                    _ => return Ok(()),
                },
                _ => return Ok(()),
            };
            self.bump();
            loop {
                let p = self.pos();
                let name = self.expect_ident()?;
                if let Some(old) = self.ctx.insert(name.clone(), sort) {
                    if old != sort {
                        return Err(ParseError::Sort {
                            line: p.line,
                            col: p.col,
                            msg: format!("`{}` declared with two sorts", name),
                        });
                    }
                }
                if !self.eat_p(",") {
                    break;
                }
            }
            self.expect_p(";")?;
        }
    }

    // -- untyped arithmetic -----------------------------------------------

    fn gexpr(&mut self) -> PResult<G> {
        let mut lhs = self.gterm()?;
        loop {
            let pos = self.pos();
            if self.eat_p("+") {
                let r = self.gterm()?;
                lhs = G {
                    kind: GK::Add(Box::new(lhs), Box::new(r)),
                    pos,
                };
            } else if self.eat_p("-") {
                let r = self.gterm()?;
                lhs = G {
                    kind: GK::Sub(Box::new(lhs), Box::new(r)),
                    pos,
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn gterm(&mut self) -> PResult<G> {
        let mut lhs = self.gunary()?;
        loop {
            let pos = self.pos();
            if self.eat_p("*") {
                let r = self.gunary()?;
                lhs = G {
                    kind: GK::Mul(Box::new(lhs), Box::new(r)),
                    pos,
                };
            } else if self.eat_p("/") {
                let r = self.gunary()?;
                lhs = G {
                    kind: GK::Div(Box::new(lhs), Box::new(r)),
                    pos,
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn gunary(&mut self) -> PResult<G> {
        let pos = self.pos();
        if self.eat_p("-") {
            let g = self.gunary()?;
            return Ok(G {
                kind: GK::Neg(Box::new(g)),
                pos,
            });
        }
        let base = self.gatom()?;
        if self.eat_p("^") {
            let k = self.expect_int()?;
            return Ok(G {
                kind: GK::Pow(Box::new(base), k),
                pos,
            });
        }
        Ok(base)
    }

    fn gatom(&mut self) -> PResult<G> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(G {
                    kind: GK::Num(n),
                    pos,
                })
            }
            Tok::P("(") => {
                self.bump();
                let g = self.gexpr()?;
                self.expect_p(")")?;
                Ok(g)
            }
            Tok::Id(s) if s == "w" => {
                self.bump();
                Ok(G { kind: GK::W, pos })
            }
            Tok::Id(s) if s == "ord" || s == "ac" => {
                self.bump();
                self.expect_p("(")?;
                let g = Box::new(self.gexpr()?);
                self.expect_p(")")?;
                let kind = if s == "ord" { GK::Ord(g) } else { GK::Ac(g) };
                Ok(G { kind, pos })
            }
            Tok::Id(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                if self.sort_of_name(&s).is_none() {
                    return Err(ParseError::Sort {
                        line: pos.line,
                        col: pos.col,
                        msg: format!("undeclared variable `{}`", s),
                    });
                }
                Ok(G {
                    kind: GK::Id(s),
                    pos,
                })
            }
            t => self.syntax(format!("unexpected {}", t)),
        }
    }

    // -- sorts --------------------------------------------------------------

    fn sort_err<T>(pos: Pos, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::Sort {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        })
    }

    /// `None` for purely numeric trees.
    fn sort_of(&self, g: &G) -> PResult<Option<Sort>> {
        Ok(match &g.kind {
            GK::Num(_) => None,
            GK::Id(s) => self.sort_of_name(s),
            GK::W => Some(Sort::Valued),
            GK::Ord(x) | GK::Ac(x) => {
                match self.sort_of(x)? {
                    Some(Sort::Valued) | None => {}
                    Some(s) => {
                        return Self::sort_err(
                            x.pos,
                            format!("ord/ac expects a valued-field term, found {:?}", s),
                        )
                    }
                }
                Some(if matches!(g.kind, GK::Ord(_)) {
                    Sort::Int
                } else {
                    Sort::Residue
                })
            }
            GK::Add(a, b) | GK::Sub(a, b) | GK::Mul(a, b) | GK::Div(a, b) => {
                let (sa, sb) = (self.sort_of(a)?, self.sort_of(b)?);
                match (sa, sb) {
                    (Some(x), Some(y)) if x != y => {
                        return Self::sort_err(
                            g.pos,
                            format!("cannot combine {:?} and {:?} terms", x, y),
                        )
                    }
                    (Some(x), _) | (_, Some(x)) => Some(x),
                    _ => None,
                }
            }
            GK::Neg(a) | GK::Pow(a, _) => self.sort_of(a)?,
        })
    }

    fn constant(&self, g: &G) -> Option<Rational64> {
        match &g.kind {
            GK::Num(n) => Some(Rational64::from_integer(*n)),
            GK::Add(a, b) => Some(self.constant(a)? + self.constant(b)?),
            GK::Sub(a, b) => Some(self.constant(a)? - self.constant(b)?),
            GK::Mul(a, b) => Some(self.constant(a)? * self.constant(b)?),
            GK::Div(a, b) => {
                let d = self.constant(b)?;
                (!d.is_zero()).then(|| self.constant(a).map(|n| n / d))?
            }
            GK::Neg(a) => Some(-self.constant(a)?),
            GK::Pow(a, k) => {
                let c = self.constant(a)?;
                if c.is_zero() && *k < 0 {
                    return None;
                }
                Some(num_traits::pow::Pow::pow(c, *k as i32))
            }
            _ => None,
        }
    }

    fn divisor(&self, b: &G) -> PResult<Rational64> {
        match self.constant(b) {
            Some(c) if !c.is_zero() => Ok(c.recip()),
            _ => Self::sort_err(b.pos, "division only by nonzero numeric constants"),
        }
    }

    fn to_vterm(&self, g: &G) -> PResult<VTerm> {
        Ok(match &g.kind {
            GK::Num(n) => VTerm::int(*n),
            GK::Id(s) => match self.sort_of_name(s) {
                Some(Sort::Valued) => VTerm::var(s),
                s2 => {
                    return Self::sort_err(
                        g.pos,
                        format!("`{}` has sort {:?}, expected a valued-field term", s, s2),
                    )
                }
            },
            GK::W => VTerm::uniformizer(1),
            GK::Ord(_) | GK::Ac(_) => {
                return Self::sort_err(g.pos, "ord/ac inside a valued-field term")
            }
            GK::Add(a, b) => self.to_vterm(a)?.add(&self.to_vterm(b)?),
            GK::Sub(a, b) => self.to_vterm(a)?.sub(&self.to_vterm(b)?),
            GK::Mul(a, b) => self.to_vterm(a)?.mul(&self.to_vterm(b)?),
            GK::Div(a, b) => self.to_vterm(a)?.scale(self.divisor(b)?),
            GK::Neg(a) => self.to_vterm(a)?.neg(),
            GK::Pow(a, k) => {
                if *k >= 0 {
                    self.to_vterm(a)?.pow(*k as u32)
                } else if matches!(a.kind, GK::W) {
                    VTerm::uniformizer(*k)
                } else if let Some(c) = self.constant(g) {
                    VTerm::constant(c)
                } else {
                    return Self::sort_err(g.pos, "negative powers only of w and constants");
                }
            }
        })
    }

    fn to_rterm(&self, g: &G) -> PResult<RTerm> {
        Ok(match &g.kind {
            GK::Num(n) => RTerm::int(*n),
            GK::Id(s) => match self.sort_of_name(s) {
                Some(Sort::Residue) => RTerm::var(s),
                s2 => {
                    return Self::sort_err(
                        g.pos,
                        format!("`{}` has sort {:?}, expected a residue term", s, s2),
                    )
                }
            },
            GK::Ac(x) => RTerm::ac_of(&self.to_vterm(x)?),
            GK::W | GK::Ord(_) => {
                return Self::sort_err(g.pos, "expected a residue term")
            }
            GK::Add(a, b) => self.to_rterm(a)?.add(&self.to_rterm(b)?),
            GK::Sub(a, b) => self.to_rterm(a)?.sub(&self.to_rterm(b)?),
            GK::Mul(a, b) => self.to_rterm(a)?.mul(&self.to_rterm(b)?),
            GK::Div(a, b) => self.to_rterm(a)?.scale(self.divisor(b)?),
            GK::Neg(a) => self.to_rterm(a)?.neg(),
            GK::Pow(a, k) => {
                if *k >= 0 {
                    self.to_rterm(a)?.pow(*k as u32)
                } else if let Some(c) = self.constant(g) {
                    RTerm::constant(c)
                } else {
                    return Self::sort_err(g.pos, "negative powers of residue terms");
                }
            }
        })
    }

    fn to_lin(&self, g: &G) -> PResult<LinForm> {
        if let Some(c) = self.constant(g) {
            return Ok(LinForm::constant_r(c));
        }
        Ok(match &g.kind {
            GK::Id(s) => match self.sort_of_name(s) {
                Some(Sort::Int) => LinForm::int_var(s),
                s2 => {
                    return Self::sort_err(
                        g.pos,
                        format!("`{}` has sort {:?}, expected an integer term", s, s2),
                    )
                }
            },
            GK::Ord(x) => match LinForm::ord_of(&self.to_vterm(x)?) {
                Some(l) => l,
                None => return Self::sort_err(g.pos, "ord of the zero term"),
            },
            GK::Add(a, b) => self.to_lin(a)?.add(&self.to_lin(b)?),
            GK::Sub(a, b) => self.to_lin(a)?.sub(&self.to_lin(b)?),
            GK::Mul(a, b) => match (self.constant(a), self.constant(b)) {
                (Some(c), _) => self.to_lin(b)?.scale(c),
                (_, Some(c)) => self.to_lin(a)?.scale(c),
                _ => return Self::sort_err(g.pos, "integer terms must be linear"),
            },
            GK::Div(a, b) => self.to_lin(a)?.scale(self.divisor(b)?),
            GK::Neg(a) => self.to_lin(a)?.neg(),
            _ => return Self::sort_err(g.pos, "expected an integer term"),
        })
    }

    // -- conditions ---------------------------------------------------------

    fn cond(&mut self) -> PResult<CondRes> {
        let lhs = self.gexpr()?;
        let pos = self.pos();
        if self.is_id("in") {
            self.bump();
            let lambda = if self.is_id("P") {
                None
            } else {
                Some(self.gexpr()?)
            };
            if !self.is_id("P") {
                return self.syntax(format!("expected `P`, found {}", self.peek()));
            }
            self.bump();
            let m = self.expect_int()?;
            if m < 1 {
                return self.syntax("coset exponent must be at least 1");
            }
            let m = m as u32;
            let sort = self.sort_of(&lhs)?;
            return Ok(match (sort, lambda) {
                (Some(Sort::Residue), None) => CondRes::Atom(CondAtom::PowRes {
                    r: self.to_rterm(&lhs)?,
                    m,
                }),
                (Some(Sort::Residue), Some(_)) => {
                    return Self::sort_err(pos, "a residue term lies in `P m`, not a coset")
                }
                (_, lambda) => {
                    let lambda = match lambda {
                        Some(l) => self.to_vterm(&l)?,
                        None => VTerm::int(1),
                    };
                    CondRes::Atom(CondAtom::CosetIn {
                        v: self.to_vterm(&lhs)?,
                        lambda,
                        m,
                    })
                }
            });
        }
        let op = match self.bump() {
            Tok::P("==") => CmpOp::Eq,
            Tok::P("!=") => CmpOp::Ne,
            Tok::P("<=") => CmpOp::Le,
            Tok::P(">=") => CmpOp::Ge,
            Tok::P("<") => CmpOp::Lt,
            Tok::P(">") => CmpOp::Gt,
            t => {
                self.i -= 1;
                return self.syntax(format!("expected a comparison, found {}", t));
            }
        };
        let rhs = self.gexpr()?;
        if self.is_id("mod") {
            self.bump();
            let n = self.expect_int()?;
            if op != CmpOp::Eq || n < 1 {
                return Self::sort_err(pos, "congruences have the form `lin == r mod n`");
            }
            let Some(r) = self.constant(&rhs).filter(|c| c.is_integer()) else {
                return Self::sort_err(rhs.pos, "congruence residue must be an integer");
            };
            let l = self.to_lin(&lhs)?;
            return Ok(pres_res(PresAtom::congruence(&l, r.to_integer(), n)));
        }
        let sort = match (self.sort_of(&lhs)?, self.sort_of(&rhs)?) {
            (Some(a), Some(b)) if a != b => {
                return Self::sort_err(pos, format!("cannot compare {:?} with {:?}", a, b))
            }
            (Some(a), _) | (_, Some(a)) => Some(a),
            _ => None,
        };
        let is_eq = matches!(op, CmpOp::Eq | CmpOp::Ne);
        match (&lhs.kind, sort) {
            (GK::Ord(v), _) if op != CmpOp::Ne => {
                let v = self.to_vterm(v)?;
                if v.is_zero() {
                    return Self::sort_err(lhs.pos, "ord of the zero term");
                }
                Ok(CondRes::Atom(CondAtom::OrdCmp {
                    v,
                    op,
                    rhs: self.to_lin(&rhs)?,
                }))
            }
            (GK::Ac(v), _) if is_eq => {
                let v = self.to_vterm(v)?;
                let r = self.to_rterm(&rhs)?;
                Ok(CondRes::Atom(if op == CmpOp::Eq {
                    CondAtom::AcEq { v, r }
                } else {
                    CondAtom::AcNeq { v, r }
                }))
            }
            (_, Some(Sort::Residue)) => {
                if !is_eq {
                    return Self::sort_err(pos, "residue terms compare only with == and !=");
                }
                let r = self.to_rterm(&lhs)?.sub(&self.to_rterm(&rhs)?);
                Ok(CondRes::Atom(if op == CmpOp::Eq {
                    CondAtom::ResEq(r)
                } else {
                    CondAtom::ResNeq(r)
                }))
            }
            (_, Some(Sort::Valued)) => Self::sort_err(
                pos,
                "valued-field terms are compared through ord(...) or ac(...)",
            ),
            _ => {
                let (a, b) = (self.to_lin(&lhs)?, self.to_lin(&rhs)?);
                Ok(pres_res(PresAtom::cmp(&a, op, &b)))
            }
        }
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> PResult<Vec<CExpTerm>> {
        let mut neg = self.eat_p("-");
        let mut out = Vec::new();
        loop {
            let mut t = self.term()?;
            if neg {
                for x in t.iter_mut() {
                    x.coeff = -x.coeff.clone();
                }
            }
            out.extend(t);
            if self.eat_p("+") {
                neg = false;
            } else if self.eat_p("-") {
                neg = true;
            } else {
                return Ok(out);
            }
        }
    }

    fn term(&mut self) -> PResult<Vec<CExpTerm>> {
        let mut acc = vec![CExpTerm::one()];
        loop {
            if self.is_id("sum") {
                let body = self.sum()?;
                return Ok(product(&acc, &body));
            }
            let f = self.factor()?;
            acc = product(&acc, &f);
            if self.eat_p("*") {
                continue;
            }
            let pos = self.pos();
            if self.eat_p("/") {
                let d = self.factor()?;
                let inv = match as_constant(&d).and_then(|c| c.try_inverse()) {
                    Some(i) => i,
                    None => {
                        return Err(ParseError::Sort {
                            line: pos.line,
                            col: pos.col,
                            msg: "division only by invertible constants".into(),
                        })
                    }
                };
                acc = product(&acc, &[CExpTerm::constant(inv)]);
                if self.eat_p("*") {
                    continue;
                }
                if self.is_p("/") {
                    continue;
                }
            }
            return Ok(acc);
        }
    }

    fn sum(&mut self) -> PResult<Vec<CExpTerm>> {
        self.bump();
        let mut names = Vec::new();
        loop {
            names.push(self.expect_ident()?);
            if !self.eat_p(",") {
                break;
            }
        }
        self.expect_p(":")?;
        let n0 = self.locals.len();
        self.locals.extend(names.iter().cloned());
        let body = self.term();
        self.locals.truncate(n0);
        let mut body = body?;
        for t in body.iter_mut() {
            let mut sums = names.clone();
            sums.extend(t.sums.iter().cloned());
            t.sums = sums;
        }
        Ok(body)
    }

    fn factor(&mut self) -> PResult<Vec<CExpTerm>> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::P("-") => {
                self.bump();
                let mut f = self.factor()?;
                for t in f.iter_mut() {
                    t.coeff = -t.coeff.clone();
                }
                Ok(f)
            }
            Tok::Num(n) => {
                self.bump();
                Ok(vec![CExpTerm::constant(LRat::from_int(n))])
            }
            Tok::P("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_p(")")?;
                if self.eat_p("^") {
                    let k = self.expect_int()?;
                    if k < 0 {
                        let inv = as_constant(&e).and_then(|c| c.try_inverse());
                        return match inv {
                            Some(i) => Ok(vec![CExpTerm::constant(i.pow((-k) as u32))]),
                            None => Self::sort_err(pos, "negative power of a non-invertible"),
                        };
                    }
                    let mut acc = vec![CExpTerm::one()];
                    for _ in 0..k {
                        acc = product(&acc, &e);
                    }
                    return Ok(acc);
                }
                Ok(e)
            }
            Tok::P("[") => {
                self.bump();
                let mut t = CExpTerm::one();
                let mut zero = false;
                loop {
                    match self.cond()? {
                        CondRes::True => {}
                        CondRes::False => zero = true,
                        CondRes::Atom(a) => t.conds.push(a),
                    }
                    if !self.eat_p(",") {
                        break;
                    }
                }
                self.expect_p("]")?;
                Ok(if zero { vec![] } else { vec![t] })
            }
            Tok::Id(s) if s == "L" => {
                self.bump();
                if !self.eat_p("^") {
                    return Ok(vec![CExpTerm::constant(LRat::l_pow(1))]);
                }
                if self.eat_p("(") {
                    let g = self.gexpr()?;
                    self.expect_p(")")?;
                    let l = self.to_lin(&g)?;
                    let mut t = CExpTerm::one();
                    t.lexp = l;
                    return Ok(vec![t]);
                }
                let k = self.expect_int()?;
                Ok(vec![CExpTerm::constant(LRat::l_pow(k))])
            }
            Tok::Id(s) if s == "E" || s == "e" => {
                self.bump();
                self.expect_p("(")?;
                let g = self.gexpr()?;
                self.expect_p(")")?;
                let mut t = CExpTerm::one();
                if s == "E" {
                    t.exp_arg = self.to_vterm(&g)?;
                } else {
                    t.res_arg = self.to_rterm(&g)?;
                }
                Ok(vec![t])
            }
            t => self.syntax(format!("unexpected {}", t)),
        }
    }
}

fn pres_res(n: Normalized) -> CondRes {
    match n {
        Normalized::True => CondRes::True,
        Normalized::False => CondRes::False,
        Normalized::Atom(a) => CondRes::Atom(CondAtom::Pres(a)),
    }
}

fn product(a: &[CExpTerm], b: &[CExpTerm]) -> Vec<CExpTerm> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x.mul_raw(y));
        }
    }
    out
}

fn is_bare(t: &CExpTerm) -> bool {
    t.conds.is_empty()
        && t.sums.is_empty()
        && t.exp_arg.is_zero()
        && t.res_arg.is_zero()
        && t.lexp.is_constant()
        && t.lexp.constant_term().is_integer()
}

/// The value of a list of bare terms, if it is one.
fn as_constant(ts: &[CExpTerm]) -> Option<LRat> {
    let mut acc = LRat::zero();
    for t in ts {
        if !is_bare(t) {
            return None;
        }
        let k = t.lexp.constant_term().to_integer();
        acc = &acc + &(&t.coeff * &LRat::l_pow(k));
    }
    Some(acc)
}

/// Parses declarations followed by an expression; the result is
/// normalized.
pub fn parse(src: &str) -> Result<CExp, ParseError> {
    parse_raw(src).map(|e| rewrite(&e))
}

/// Parses without normalizing: conditions stay as written and products
/// are expanded but not simplified.
pub fn parse_raw(src: &str) -> Result<CExp, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        i: 0,
        ctx: BTreeMap::new(),
        locals: Vec::new(),
    };
    p.declarations()?;
    let terms = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.syntax(format!("unexpected {}", p.peek()));
    }
    Ok(CExp { ctx: p.ctx, terms })
}

/// Parses a constant of the coefficient ring, e.g. `(1 - L^-1)^-1 * L^2`.
pub fn parse_lrat(src: &str) -> Result<LRat, ParseError> {
    let e = parse(src)?;
    match as_constant(&e.terms) {
        Some(c) if e.ctx.is_empty() || e.terms.iter().all(is_bare) => Ok(c),
        _ => Err(ParseError::Sort {
            line: 1,
            col: 1,
            msg: "expected a constant of the coefficient ring".into(),
        }),
    }
}

impl CExp {
    /// Shorthand for [`parse`] that panics on error; for tests and examples.
    pub fn parse_or_panic(src: &str) -> CExp {
        parse(src).unwrap_or_else(|e| panic!("{}: {}", e, src))
    }
}

