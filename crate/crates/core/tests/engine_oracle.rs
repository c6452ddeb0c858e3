mod common;

use std::collections::BTreeSet;

use common::*;
use foldt::engine::{answer_all, succeeds, theta_subsumes, Program};
use foldt::Symbol;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ground_join_matches_oracle(seed in any::<u64>()) {
        let case = random_join_case(&mut seeded(seed));
        let e = join_interpretation(&case);
        let got = succeeds(&case.query, &e, &Program::empty(), 1_000_000).unwrap();
        prop_assert_eq!(got, oracle_succeeds(&case), "query {:?} facts {:?}",
            case.query.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            case.facts.iter().map(|l| l.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn answers_match_oracle(seed in any::<u64>()) {
        let case = random_join_case(&mut seeded(seed));
        let e = join_interpretation(&case);
        let x = Symbol::intern("X");
        prop_assume!(case.query.iter().any(|l| l.vars().contains(&x)));
        let got: BTreeSet<String> = answer_all(&case.query, x, &e, &Program::empty(), 1_000_000)
            .unwrap()
            .iter()
            .map(|t| t.to_string())
            .collect();
        let mut want = BTreeSet::new();
        for c in CONSTS {
            let bound: Vec<_> = case.query.iter()
                .map(|l| l.substitute(&|v| (v == x).then(|| foldt::Term::atom(c))))
                .collect();
            if oracle_succeeds(&JoinCase { facts: case.facts.clone(), query: bound }) {
                want.insert(c.to_string());
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn query_subsumes_its_extension(seed in any::<u64>()) {
        let case = random_join_case(&mut seeded(seed));
        let mut longer = case.query.clone();
        longer.extend(random_join_case(&mut seeded(seed ^ 1)).query);
        prop_assert!(theta_subsumes(&case.query, &longer, 1_000_000).unwrap());
    }
}
