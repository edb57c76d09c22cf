//! Module-level property suites, one test per module.

mod suites;

fn run(props: Vec<suites::Property>) {
    let failed: Vec<String> = props
        .into_iter()
        .filter_map(|(name, f)| f().err().map(|e| format!("{name}: {e}")))
        .collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}

#[test]
fn ring() {
    run(suites::ring::all());
}

#[test]
fn series() {
    run(suites::series::all());
}

#[test]
fn rewrite() {
    run(suites::rewrite::all());
}

#[test]
fn cells() {
    run(suites::cells::all());
}

#[test]
fn integrate() {
    run(suites::integrate::all());
}

#[test]
fn fourier() {
    run(suites::fourier::all());
}

#[test]
fn character() {
    run(suites::character::all());
}

#[test]
fn oracle() {
    run(suites::oracle::all());
}
