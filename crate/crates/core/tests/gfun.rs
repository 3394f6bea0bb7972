use hsdm::gfun::*;
use proptest::prelude::*;

fn g(s: &str) -> GFunction {
    s.parse().unwrap()
}

#[test]
fn grammar_evaluates_the_usual_shapes() {
    assert_eq!(g("7").eval(100), 7);
    assert_eq!(g("n+1").eval(9), 10);
    assert_eq!(g("2*n").eval(9), 18);
    assert_eq!(g("n*n+3").eval(4), 19);
    assert_eq!(g("2*(n+1)").eval(4), 10);
    assert_eq!(g("max(n, 10)").eval(3), 10);
    assert_eq!(g("max(n,10)").eval(30), 30);
    assert_eq!(g(" n + 1 ").eval(0), 1);
}

#[test]
fn tables_extend_their_last_entry() {
    let t = g("table:3,1,4");
    assert_eq!((0..6).map(|n| t.eval(n)).collect::<Vec<_>>(), vec![3, 1, 4, 4, 4, 4]);
    assert!(!t.is_monotone());
    assert!(g("table:1,2,2,5").is_monotone());
    assert_eq!(parse_gexpr("table:"), Err(GParseError::EmptyTable));
}

#[test]
fn arithmetic_saturates() {
    assert_eq!(g("n*n").eval(u64::MAX), u64::MAX);
    assert_eq!(g("n+1").eval(u64::MAX), u64::MAX);
}

#[test]
fn malformed_input_is_rejected() {
    for bad in ["", "n+", "m", "max(n)", "(n", "n n", "99999999999999999999999"] {
        assert!(bad.parse::<GFunction>().is_err(), "{bad:?}");
    }
    assert!(matches!(parse_gexpr("n+"), Err(GParseError::UnexpectedEnd(_))));
    assert!(matches!(parse_gexpr("n$"), Err(GParseError::Unexpected { offset: 1, .. })));
}

#[test]
fn labels_round_trip_through_the_parser() {
    for src in ["n+1", "2*n", "2*(n+1)", "max(n,3)+1", "table:1,2,3", "n*n*n"] {
        let f = g(src);
        assert_eq!(f.label(), src);
        assert_eq!(g(f.label()), f);
    }
    let json = serde_json::to_string(&g("2*(n+1)")).unwrap();
    assert_eq!(json, "\"2*(n+1)\"");
    assert_eq!(serde_json::from_str::<GFunction>(&json).unwrap(), g("2*(n+1)"));
}

#[test]
fn tilde_and_shift() {
    let c = GFunction::constant(5);
    assert_eq!(c.tilde(2), 5);
    assert_eq!(c.tilde(9), 9);
    // g_c(n) = n + c + g(n + c)
    let s = g("2*n").shifted(3);
    assert_eq!(s.eval(1), 1 + 3 + 8);
    assert!(s.is_monotone());
    let f = GFunction::from_fn("double", true, |n| 2 * n);
    assert_eq!(f.eval(21), 42);
    assert_ne!(f, GFunction::from_fn("double", true, |n| 2 * n));
}

proptest! {
    #[test]
    fn linear_expressions_match_closed_forms(a in 0u64..1000, b in 0u64..1000, n in 0u64..1_000_000) {
        let f = g(&format!("{a}*n+{b}"));
        prop_assert_eq!(f.eval(n), a * n + b);
        let m = g(&format!("max(n,{a})+{b}"));
        prop_assert_eq!(m.eval(n), n.max(a) + b);
    }
}
