use constxr::expr::{parse, Expr, Func};
use proptest::prelude::*;

fn corpus() -> Vec<String> {
    include_str!("fixtures/profiles.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn parser_is_total_on_the_corpus() {
    let mut accepted = 0;
    for line in corpus() {
        match parse(&line) {
            Ok(_) => accepted += 1,
            Err(e) => assert!(e.offset >= 1 && e.offset <= line.len() + 1, "{line:?}: {e}"),
        }
    }
    assert!(accepted >= 15);
}

#[test]
fn corpus_round_trips_to_a_fixpoint() {
    for line in corpus() {
        let Ok(tree) = parse(&line) else { continue };
        let printed = tree.to_string();
        let again = parse(&printed).unwrap_or_else(|e| panic!("{line:?} printed as {printed:?}: {e}"));
        assert_eq!(again.to_string(), printed, "{line:?}");
        for r in [0.0, 0.3, 1.0] {
            let (a, b) = (tree.eval(r), again.eval(r));
            assert!(a == b || (a.is_nan() && b.is_nan()), "{line:?} at {r}");
        }
    }
}

#[test]
fn unbalanced_parenthesis_offset() {
    assert_eq!(parse("2+cos(4*r").unwrap_err().offset, 10);
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, e)| Expr::Num(m as f64 / 10f64.powi(e as i32))),
        Just(Expr::Var),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| Expr::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Pow(b(x), b(y))),
            (
                prop_oneof![Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Sqrt), Just(Func::Log)],
                inner
            )
                .prop_map(move |(f, x)| Expr::Call(f, b(x))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_trees_parse_back(e in arb_expr()) {
        let printed = e.to_string();
        let parsed = parse(&printed).unwrap();
        prop_assert_eq!(&parsed, &e, "{}", printed);
    }

    #[test]
    fn arbitrary_input_gives_tree_or_positioned_error(s in "[r0-9.+*/^()\\- a-z]{0,24}") {
        if let Err(e) = parse(&s) {
            prop_assert!(e.offset >= 1 && e.offset <= s.len() + 1);
        }
    }

    #[test]
    fn symbolic_derivative_matches_differences(e in arb_expr(), r in 0.2f64..0.8) {
        let d = e.derivative().eval(r);
        let h = 1e-6;
        let fd = (e.eval(r + h) - e.eval(r - h)) / (2.0 * h);
        let scale = e.eval(r).abs().max(1.0);
        if d.is_finite() && fd.is_finite() && d.abs() < 1e4 && e.eval(r).abs() < 1e4 {
            let curvature = (e.eval(r + 1e-3) - 2.0 * e.eval(r) + e.eval(r - 1e-3)).abs() / 1e-6;
            if curvature < 1e4 {
                prop_assert!((d - fd).abs() <= 1e-4 * scale.max(d.abs()), "{} at {}: {} vs {}", e, r, d, fd);
            }
        }
    }
}
