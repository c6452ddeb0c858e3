use proptest::prelude::*;

use foldt::term::quote_atom;
use foldt::{parse_program, parse_term, Term};

const ATOMS: &[&str] = &[
    "a",
    "foo",
    "h2o-1",
    "x_1",
    "H2O",
    "hello world",
    "it's",
    "",
    "[]",
    "-",
    "=",
    "\\=",
    ":-",
    "up",
    "café",
];
const FUNCTORS: &[&str] = &["f", "card", "player", "Big", "two words", "g-1"];

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(ATOMS).prop_map(Term::atom),
        any::<i64>().prop_map(Term::Int),
        any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(Term::Float),
        prop::sample::select(&["X", "Y", "Obj", "_A", "_1"][..]).prop_map(Term::var),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        (
            prop::sample::select(FUNCTORS),
            prop::collection::vec(inner, 1..4),
        )
            .prop_map(|(f, args)| Term::compound(f, args))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn render_parses_back(t in term()) {
        let text = t.to_string();
        let back = parse_term(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(&back, &t, "text {}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn quotes_only_when_needed(name in "[a-zA-Z0-9_' -]{0,8}") {
        let q = quote_atom(&name);
        let back = parse_term(&q).map_err(|e| TestCaseError::fail(format!("{q}: {e}")))?;
        prop_assert_eq!(back, Term::atom(&name));
        let plain = name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if plain {
            prop_assert_eq!(q, name);
        }
    }

    #[test]
    fn parser_is_total(text in "\\PC{0,40}") {
        // a value or a positioned error, never a panic
        if let Err(e) = parse_term(&text) {
            prop_assert!(!e.to_string().is_empty());
        }
        let _ = parse_program(&text);
    }

    #[test]
    fn parser_is_total_on_term_like_noise(text in "[a-zA-Z0-9_(),'. :\\-=<>\\\\%\n\\[\\]|+#!]{0,40}") {
        let _ = parse_term(&text);
        let _ = parse_program(&text);
        let _ = foldt::parse_settings(&text);
    }
}

#[test]
fn ground_facts_are_ground() {
    let t = parse_term("player(my,1,-48.804436,-0.16494742,339)").unwrap();
    assert!(t.is_ground());
    assert!(!parse_term("f(a, g(X))").unwrap().is_ground());
}
