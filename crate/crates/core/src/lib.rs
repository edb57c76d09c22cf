//! Exact integration of constructible exponential functions over local
//! fields, with a brute-force oracle over `Q_p` and `F_p((t))`.
//!
//! Expressions are written in a small DSL ([`cexp::parse`]), integrated
//! symbolically ([`integrate::integrate_all`]) into values over the ring
//! [`LRat`] of rational functions in `L`, and checked against lattice sums
//! ([`oracle::numeric_integrate`]).
//!
//! ```
//! use motint::{cexp::parse, integrate::integrate_all, Rational};
//!
//! let e = parse("vf x; [ord(x) == 0] * E(x)").unwrap();
//! let r = integrate_all(&e, &["x".to_string()]).unwrap();
//! let c = motint::integrate::constant_value(&r).unwrap();
//! assert_eq!(c.specialize_exact(&Rational::from_integer(5.into())), Rational::new((-1).into(), 5.into()));
//! ```

pub mod cells;
pub mod cexp;
pub mod corpus;
pub mod equiv;
pub mod fourier;
pub mod integrate;
pub mod localfield;
pub mod lring;
pub mod oracle;
pub mod presburger;
pub mod scalar;
pub mod vterm;

pub use lring::{LRat, LRatError, Laurent};
pub use scalar::Scalar;

/// Exact rationals, used for specializations and lattice sums.
pub type Rational = num_rational::BigRational;

/// Character values and oracle sums.
pub type Complex = num_complex::Complex64;
