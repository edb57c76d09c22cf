use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{interpret::Approx, FieldKind, LocalError, LocalField, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElementParseError {
    #[error("expected `<p>adic:` or `<p>laurent:` prefix in `{0}`")]
    Prefix(String),
    #[error("bad field `{0}`")]
    Field(String),
    #[error("digit {digit} out of range for p = {p}")]
    Digit { digit: u64, p: u64 },
}

/// Truncated expansion `sum digits[i] w^(v + i) + O(w^(v + N))`.
///
/// The absolute precision is `v + digits.len()`. Leading zero digits are
/// allowed; an all-zero digit list is the zero-at-precision marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicElement {
    pub kind: FieldKind,
    pub p: u64,
    pub v: i64,
    pub digits: Vec<u64>,
}

impl PadicElement {
    pub fn new(kind: FieldKind, p: u64, v: i64, digits: Vec<u64>) -> Self {
        PadicElement { kind, p, v, digits }
    }

    /// Absolute precision: the element is known modulo `w^precision`.
    pub fn precision(&self) -> i64 {
        self.v + self.digits.len() as i64
    }

    /// The exact value of the digits in `field` together with the
    /// precision. The digits are read in `field` even if `kind` differs,
    /// which lets one digit vector name matched points of `Q_p` and
    /// `F_p((t))`.
    pub fn to_approx(&self, field: &LocalField) -> Result<Approx, LocalError> {
        if field.p != self.p {
            return Err(LocalError::Unsupported(format!(
                "element over p = {} used in a field with p = {}",
                self.p, field.p
            )));
        }
        Ok(Approx {
            val: field.from_digits(self.v, &self.digits)?,
            prec: Some(self.precision()),
        })
    }

    /// Parse `5adic: v=2 digits=[3,0,1]` or `5laurent: v=-1 digits=[1,1]`.
    pub fn parse(s: &str) -> Result<Self, ElementParseError> {
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| ElementParseError::Prefix(s.to_string()))?;
        let head = head.trim();
        let (num, kind) = if let Some(n) = head.strip_suffix("adic") {
            (n, FieldKind::PadicQ)
        } else if let Some(n) = head.strip_suffix("laurent") {
            (n, FieldKind::LaurentF)
        } else {
            return Err(ElementParseError::Prefix(s.to_string()));
        };
        let p: u64 = num
            .parse()
            .map_err(|_| ElementParseError::Prefix(s.to_string()))?;
        let (v, digits) = parse_body(rest)?;
        if let Some(&digit) = digits.iter().find(|d| **d >= p) {
            return Err(ElementParseError::Digit { digit, p });
        }
        Ok(PadicElement { kind, p, v, digits })
    }
}

/// `v=<int> digits=[a,b,...]`, the body shared by element and twist literals.
pub fn parse_body(s: &str) -> Result<(i64, Vec<u64>), ElementParseError> {
    let mut v = 0i64;
    let mut digits = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let (key, after) = rest
            .split_once('=')
            .ok_or_else(|| ElementParseError::Field(rest.to_string()))?;
        match key.trim() {
            "v" => {
                let end = after.find(char::is_whitespace).unwrap_or(after.len());
                v = after[..end]
                    .parse()
                    .map_err(|_| ElementParseError::Field(after.to_string()))?;
                rest = after[end..].trim_start();
            }
            "digits" => {
                let inner = after
                    .trim_start()
                    .strip_prefix('[')
                    .and_then(|x| x.split_once(']'))
                    .ok_or_else(|| ElementParseError::Field(after.to_string()))?;
                digits = inner
                    .0
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| x.parse().map_err(|_| ElementParseError::Field(x.to_string())))
                    .collect::<Result<_, _>>()?;
                rest = inner.1.trim_start();
            }
            other => return Err(ElementParseError::Field(other.to_string())),
        }
    }
    Ok((v, digits))
}

impl FromStr for PadicElement {
    type Err = ElementParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            FieldKind::PadicQ => "adic",
            FieldKind::LaurentF => "laurent",
        };
        let ds: Vec<String> = self.digits.iter().map(u64::to_string).collect();
        write!(f, "{}{}: v={} digits=[{}]", self.p, tag, self.v, ds.join(","))
    }
}

/// Twist literal `v=0 digits=[1]` read in `field`.
pub fn parse_twist(field: &LocalField, s: &str) -> Result<Value, LocalError> {
    let (v, digits) = parse_body(s).map_err(|e| LocalError::Unsupported(e.to_string()))?;
    if v < 0 {
        return Err(LocalError::BadTwist);
    }
    field.from_digits(v, &digits)
}
