use super::*;

fn p(s: &str) -> CExp {
    CExp::parse_or_panic(s)
}

fn body(s: &str) -> String {
    p(s).body_string()
}

#[test]
fn parses_basic_terms() {
    let e = parse_raw("vf x; [ord(x) == 0] * E(x)").unwrap();
    assert_eq!(e.terms.len(), 1);
    assert_eq!(e.terms[0].exp_arg, VTerm::var("x"));
    assert_eq!(e.body_string(), "[ord(x) == 0] * E(x)");
    // on the unit shell the character only sees the residue of x
    assert_eq!(rewrite(&e).body_string(), "[ord(x) == 0] * e(ac(x))");

    let e = p("int j; L^(-j) * [j >= 1]");
    assert_eq!(e.terms[0].lexp, LinForm::int_var("j").neg());
    assert_eq!(e.body_string(), "L^(-j) * [-j <= -1]");
}

#[test]
fn residue_sum_with_excluded_point() {
    // sum over eta != 0 of e(eta * ac(x)) is -1 off the null set ac(x) = 0
    assert_eq!(body("vf x; sum eta : e(eta * ac(x)) * [eta != 0]"), "(-1)");
}

#[test]
fn character_sum_relations() {
    assert_eq!(body("sum eta : e(eta)"), "0");
    assert_eq!(body("sum eta : 1"), "L");
    assert_eq!(body("res x; sum eta : e(x * eta)"), "L * [x == 0]");
}

#[test]
fn shift_rule_moves_units_into_residue_character() {
    assert_eq!(body("vf x; E(x + 1)"), "E(x) * e(1)");
    assert_eq!(body("vf x; E(x + w)"), "E(x)");
    assert_eq!(body("vf x; [ord(x) >= 1] * E(x)"), "[-ord(x) <= -1]");
    assert_eq!(body("vf x; [ord(x) == 0] * E(x)"), "[ord(x) == 0] * e(ac(x))");
}

#[test]
fn products() {
    let a = p("vf x; E(x)");
    let b = p("vf y; E(y)");
    assert_eq!(a.mul(&b).body_string(), "E(x + y)");
    assert_eq!(CExp::one().mul(&a), a);
    let c = p("vf x; [ord(x) == 0]").mul(&p("vf x; [ord(x) == 1]"));
    assert!(c.is_zero());
}

#[test]
fn like_terms_merge() {
    assert_eq!(body("vf x; [ord(x) >= 0] + [ord(x) >= 0]"), "2 * [-ord(x) <= 0]");
    assert_eq!(body("vf x; E(x) - E(x)"), "0");
    let e = p("sum a : e(a) * [a != 0] + sum b : e(b) * [b != 0]");
    assert_eq!(e.body_string(), "(-2)");
}

#[test]
fn substitution() {
    let e = p("vf x; [ord(x) == 0]");
    let s = substitute(&e, "x", &VTerm::uniformizer(1).mul(&VTerm::var("y"))).unwrap();
    assert_eq!(s.body_string(), "[ord(y) == -1]");
    let e = p("vf x; E(x)");
    let s = substitute(&e, "x", &VTerm::uniformizer(1).mul(&VTerm::var("y"))).unwrap();
    assert_eq!(s.body_string(), "E(w*y)");
    let e = p("vf x; [ac(x) == 1]");
    let s = substitute(&e, "x", &VTerm::int(3).mul(&VTerm::var("y"))).unwrap();
    assert_eq!(s.body_string(), "[ac(y) - 1/3 == 0]");
    let sq = VTerm::var("y").mul(&VTerm::var("y"));
    assert!(matches!(
        substitute(&e, "x", &sq),
        Err(SubstError::NonAffineSubstitution(_))
    ));
}

#[test]
fn print_parse_round_trip() {
    for src in [
        "vf x, y; int j; L^(-j) * [j >= 1, ord(x - y) == j] * E(x) + 3",
        "vf x; res xi; [ac(x) == xi, ord(x) == 0] * e(xi^2 + 1)",
        "vf x; [x in w P 2] * (1 - L^-1)^-1",
        "res xi; [xi in P 3] * L^2 / 5",
        "int j; [j == 2 mod 3] * L^(j) * [j <= 0]",
        "vf x; res a; sum b : e(a*b + b) * [b^2 - a != 0] * [ord(x + 1) >= 0]",
    ] {
        let e = p(src);
        let printed = e.to_string();
        let again = p(&printed);
        assert_eq!(again, e, "{} -> {}", src, printed);
        assert_eq!(again.to_string(), printed);
    }
}

#[test]
fn errors_carry_positions() {
    match parse("vf x;\n[ord(x) >= ]") {
        Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 12)),
        other => panic!("{:?}", other),
    }
    assert!(matches!(parse("res a; E(a)"), Err(ParseError::Sort { .. })));
    assert!(matches!(parse("vf x; [ac(ac(x)) == 1]"), Err(ParseError::Sort { .. })));
    assert!(matches!(parse("[ord(y) >= 0]"), Err(ParseError::Sort { .. })));
    assert!(matches!(parse("[ord(0) >= 0]"), Err(ParseError::Sort { .. })));
}

#[test]
fn coset_conditions() {
    // v in lambda P_m becomes a congruence on orders and a power residue test
    let e = p("vf x; [x in P 2]");
    assert_eq!(e.body_string(), "[ord(x) == 0 mod 2, ac(x) in P 2]");
    assert_eq!(body("vf x; [x in P 1]"), "1");
}

#[test]
fn lrat_literals() {
    let c = parse_lrat("(1 - L^-1)^-1 * L^-1").unwrap();
    assert_eq!(c, &LRat::geometric(1) * &LRat::l_pow(-1));
    let c = parse_lrat(&format!("({})", LRat::geometric(2))).unwrap();
    assert_eq!(c, LRat::geometric(2));
}
