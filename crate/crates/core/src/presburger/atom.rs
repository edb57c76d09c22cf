use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};

use super::{fmt_rat, Ext, LinForm, Sym};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Relation of a normalized form against zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Rel {
    Le,
    Eq,
    Ne,
}

/// A normalized Presburger atom.
///
/// `Cmp` has integer coefficients with gcd 1 (`Le` constants are
/// tightened); `Eq`/`Ne` have a positive leading coefficient. `Mod` stores
/// a constant-free form with coefficients reduced into `[0, modulus)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresAtom {
    Cmp { form: LinForm, rel: Rel },
    Mod { form: LinForm, residue: i64, modulus: i64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Normalized {
    True,
    False,
    Atom(PresAtom),
}

impl Normalized {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Normalized::True
        } else {
            Normalized::False
        }
    }
}

fn integerize(form: &LinForm) -> LinForm {
    let l = form.denom_lcm();
    form.scale(Rational64::from_integer(l))
}

fn coeff_gcd(form: &LinForm) -> i64 {
    form.coeffs()
        .fold(0i64, |g, (_, c)| g.gcd(&c.to_integer()))
}

fn floor_div(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}

impl PresAtom {
    pub fn cmp(lhs: &LinForm, op: CmpOp, rhs: &LinForm) -> Normalized {
        let d = lhs.sub(rhs);
        match op {
            CmpOp::Le => Self::norm_le(d),
            CmpOp::Lt => Self::norm_lt(d),
            CmpOp::Ge => Self::norm_le(d.neg()),
            CmpOp::Gt => Self::norm_lt(d.neg()),
            CmpOp::Eq => Self::norm_eq(d, Rel::Eq),
            CmpOp::Ne => Self::norm_eq(d, Rel::Ne),
        }
    }

    /// `form <= 0`.
    pub fn le0(form: LinForm) -> Normalized {
        Self::norm_le(form)
    }

    fn norm_lt(d: LinForm) -> Normalized {
        let d = integerize(&d);
        Self::norm_le(d.add_const(1))
    }

    fn norm_le(d: LinForm) -> Normalized {
        let d = integerize(&d);
        let c = d.constant_term().to_integer();
        if d.is_constant() {
            return Normalized::from_bool(c <= 0);
        }
        let g = coeff_gcd(&d);
        let body = d.add_const(-c).scale(Rational64::new(1, g));
        // sum (a/g) x + c/g <= 0  iff  sum (a/g) x + ceil(c/g) <= 0
        let cc = -floor_div(-c, g);
        Normalized::Atom(PresAtom::Cmp {
            form: body.add_const(cc),
            rel: Rel::Le,
        })
    }

    fn norm_eq(d: LinForm, rel: Rel) -> Normalized {
        let d = integerize(&d);
        let c = d.constant_term().to_integer();
        if d.is_constant() {
            return Normalized::from_bool((c == 0) == (rel == Rel::Eq));
        }
        let g = coeff_gcd(&d);
        if c % g != 0 {
            return Normalized::from_bool(rel == Rel::Ne);
        }
        let mut body = d.scale(Rational64::new(1, g));
        if body.coeffs().next().unwrap().1.is_negative() {
            body = body.neg();
        }
        Normalized::Atom(PresAtom::Cmp { form: body, rel })
    }

    /// `form == residue (mod modulus)`.
    pub fn congruence(form: &LinForm, residue: i64, modulus: i64) -> Normalized {
        assert!(modulus >= 1);
        if modulus == 1 {
            return Normalized::True;
        }
        let l = form.denom_lcm();
        let f = form.scale(Rational64::from_integer(l));
        let n = modulus * l;
        let r = residue * l - f.constant_term().to_integer();
        let mut body = LinForm::zero();
        for (s, c) in f.coeffs() {
            body.add_term(s.clone(), Rational64::from_integer(c.to_integer().mod_floor(&n)));
        }
        let r = r.mod_floor(&n);
        if body.is_constant() {
            return Normalized::from_bool(r == 0);
        }
        let g = coeff_gcd(&body).gcd(&n);
        if r % g != 0 {
            return Normalized::False;
        }
        let (body, r, n) = (body.scale(Rational64::new(1, g)), r / g, n / g);
        if n == 1 {
            return Normalized::True;
        }
        Normalized::Atom(PresAtom::Mod {
            form: body,
            residue: r,
            modulus: n,
        })
    }

    pub fn form(&self) -> &LinForm {
        match self {
            PresAtom::Cmp { form, .. } | PresAtom::Mod { form, .. } => form,
        }
    }

    pub fn symbols(&self) -> BTreeSet<Sym> {
        self.form().symbols()
    }

    pub fn mentions(&self, s: &Sym) -> bool {
        self.form().mentions(s)
    }

    pub fn mentions_vf(&self, var: &str) -> bool {
        self.form().mentions_vf(var)
    }

    /// Rebuilds after rewriting the linear form.
    pub fn map_form(&self, f: impl FnOnce(&LinForm) -> LinForm) -> Normalized {
        match self {
            PresAtom::Cmp { form, rel } => {
                let nf = f(form);
                match rel {
                    Rel::Le => Self::norm_le(nf),
                    Rel::Eq => Self::norm_eq(nf, Rel::Eq),
                    Rel::Ne => Self::norm_eq(nf, Rel::Ne),
                }
            }
            PresAtom::Mod {
                form,
                residue,
                modulus,
            } => Self::congruence(&f(form), *residue, *modulus),
        }
    }

    pub fn substitute(&self, s: &Sym, by: &LinForm) -> Normalized {
        if !self.mentions(s) {
            return Normalized::Atom(self.clone());
        }
        self.map_form(|f| f.substitute(s, by))
    }

    /// Truth value under an assignment (`None` = `+inf`, an ord of zero).
    pub fn eval(&self, val: &mut dyn FnMut(&Sym) -> Option<i64>) -> bool {
        let v = match self.form().eval(val) {
            Ok(v) => v,
            Err(()) => return false,
        };
        match (self, v) {
            (PresAtom::Cmp { rel: Rel::Le, .. }, Ext::Fin(x)) => x <= Rational64::zero(),
            (PresAtom::Cmp { rel: Rel::Le, .. }, e) => e == Ext::NegInf,
            (PresAtom::Cmp { rel: Rel::Eq, .. }, Ext::Fin(x)) => x.is_zero(),
            (PresAtom::Cmp { rel: Rel::Eq, .. }, _) => false,
            (PresAtom::Cmp { rel: Rel::Ne, .. }, Ext::Fin(x)) => !x.is_zero(),
            (PresAtom::Cmp { rel: Rel::Ne, .. }, _) => true,
            (
                PresAtom::Mod {
                    residue, modulus, ..
                },
                Ext::Fin(x),
            ) => x.to_integer().mod_floor(modulus) == *residue,
            (PresAtom::Mod { .. }, _) => false,
        }
    }

    /// Disjoint atoms whose union is the complement (over finite values).
    pub fn negate(&self) -> Vec<Normalized> {
        match self {
            PresAtom::Cmp { form, rel: Rel::Le } => vec![Self::norm_lt(form.neg())],
            PresAtom::Cmp { form, rel: Rel::Eq } => vec![Self::norm_eq(form.clone(), Rel::Ne)],
            PresAtom::Cmp { form, rel: Rel::Ne } => vec![Self::norm_eq(form.clone(), Rel::Eq)],
            PresAtom::Mod {
                form,
                residue,
                modulus,
            } => (0..*modulus)
                .filter(|r| r != residue)
                .map(|r| Self::congruence(form, r, *modulus))
                .collect(),
        }
    }

    /// Coefficient of `s` as an integer (atoms are integral).
    pub fn coeff_of(&self, s: &Sym) -> i64 {
        self.form().coeff(s).to_integer()
    }
}

impl fmt::Display for PresAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresAtom::Cmp { form, rel } => {
                // print as `lhs op rhs` with the constant moved right
                let c = form.constant_term();
                let lhs = form.add_const_r(-c);
                let op = match rel {
                    Rel::Le => "<=",
                    Rel::Eq => "==",
                    Rel::Ne => "!=",
                };
                write!(f, "{} {} {}", lhs, op, fmt_rat(&-c))
            }
            PresAtom::Mod {
                form,
                residue,
                modulus,
            } => write!(f, "{} == {} mod {}", form, residue, modulus),
        }
    }
}

impl fmt::Debug for PresAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Finite union of conjunctions.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct PresCond {
    pub branches: Vec<Vec<PresAtom>>,
}

impl PresCond {
    pub fn conj(atoms: Vec<PresAtom>) -> Self {
        PresCond {
            branches: vec![atoms],
        }
    }

    /// Builds a conjunction from possibly-trivial normalized atoms; an
    /// always-false atom yields the empty union.
    pub fn from_normalized(atoms: impl IntoIterator<Item = Normalized>) -> Self {
        let mut out = Vec::new();
        for a in atoms {
            match a {
                Normalized::True => {}
                Normalized::False => return PresCond::default(),
                Normalized::Atom(a) => out.push(a),
            }
        }
        PresCond::conj(out)
    }

    pub fn eval(&self, val: &mut dyn FnMut(&Sym) -> Option<i64>) -> bool {
        self.branches
            .iter()
            .any(|b| b.iter().all(|a| a.eval(val)))
    }

    /// All integer points of the box satisfying the condition, in
    /// lexicographic order of `vars`.
    pub fn enumerate(&self, vars: &[&str], bounds: &[(i64, i64)]) -> Vec<Vec<i64>> {
        assert_eq!(vars.len(), bounds.len());
        let mut out = Vec::new();
        let mut cur: Vec<i64> = bounds.iter().map(|b| b.0).collect();
        if bounds.iter().any(|(lo, hi)| lo > hi) {
            return out;
        }
        loop {
            let mut val = |s: &Sym| match s {
                Sym::Int(n) => vars.iter().position(|v| v == n).map(|i| cur[i]),
                Sym::Ord(_) => None,
            };
            if self.eval(&mut val) {
                out.push(cur.clone());
            }
            let mut i = vars.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < bounds[i].1 {
                    cur[i] += 1;
                    break;
                }
                cur[i] = bounds[i].0;
            }
        }
    }
}

impl Rel {
    pub fn is_le(self) -> bool {
        self == Rel::Le
    }
}
