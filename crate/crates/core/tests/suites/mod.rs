//! Property suites shared by the `properties` and `acceptance` targets.
//!
//! Every property is a plain function driving a deterministic proptest
//! runner with its own sample size, so both targets run the same cases.

#![allow(dead_code)]

pub mod cells;
pub mod character;
pub mod fourier;
pub mod integrate;
pub mod oracle;
pub mod ring;
pub mod rewrite;
pub mod series;

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type Property = (&'static str, fn() -> Result<(), String>);

/// Runs `test` on `cases` samples of `strategy` with a fixed seed.
pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn all() -> Vec<Property> {
    let mut out = Vec::new();
    out.extend(ring::all());
    out.extend(series::all());
    out.extend(rewrite::all());
    out.extend(cells::all());
    out.extend(integrate::all());
    out.extend(fourier::all());
    out.extend(character::all());
    out.extend(oracle::all());
    out
}

/// [`check`] for tests that report plain messages.
pub fn check_msg<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), String>,
) -> Result<(), String> {
    check(cases, strategy, |v| test(v).map_err(TestCaseError::fail))
}
