mod common;

use common::*;
use foldt::bias::ThresholdTable;
use foldt::engine::{theta_subsumes, Solver};
use foldt::gen::{self, Domain, GenSpec};
use foldt::parse_settings;
use foldt::tree::Model;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tree_and_decision_list_agree(tree_seed in any::<u64>(), scene_seed in any::<u64>()) {
        let (s, b) = bongard();
        let tree = random_tree(&mut seeded(tree_seed), &s, &foldt::bias::RefinementContext::root(&s), 4);
        prop_assert!(tree.check_scope());
        prop_assert!(tree.queries_coherent());
        let model = Model::new(tree, s.clone(), ThresholdTable::new());
        let e = &gen::generate(&GenSpec::new(Domain::Bongard, 1, scene_seed))[0];
        let by_tree = model.classifier().classify(e, &b, &mut Solver::new()).unwrap();
        let rules = model.to_decision_list();
        let by_rules = Model::classify_by_rules(&rules, e, &b, 100_000).unwrap();
        prop_assert_eq!(Some(by_tree), by_rules);
    }

    #[test]
    fn model_files_round_trip(tree_seed in any::<u64>()) {
        let (s, _) = bongard();
        let tree = random_tree(&mut seeded(tree_seed), &s, &foldt::bias::RefinementContext::root(&s), 4);
        let model = Model::new(tree, s, ThresholdTable::new());
        let back = Model::deserialize(&model.serialize()).unwrap();
        prop_assert_eq!(back.tree_hash(), model.tree_hash());
        prop_assert!(back.tree.same_structure(&model.tree));
    }
}

#[test]
fn every_refinement_is_subsumed_by_its_parent() {
    let (s, _) = bongard();
    let pairs = reachable_queries(&s, 3);
    assert!(pairs.len() > 300, "{}", pairs.len());
    for (parent, child) in &pairs {
        assert!(
            theta_subsumes(parent, child, 1_000_000).unwrap(),
            "{parent:?} / {child:?}"
        );
        assert!(child.len() > parent.len());
    }
}

#[test]
fn lookahead_refinements_are_subsumed_too() {
    let s = parse_settings(
        "classes([pos,neg]).
         rmode(3: triangle(+-V)).
         rmode(3: inside(+V,-W)).
         rmode(3: points(+V,up)).
         lookahead(triangle(T), points(T,up)).
         lookahead(inside(A,B), triangle(B)).",
    )
    .unwrap();
    for (parent, child) in reachable_queries(&s, 3) {
        assert!(theta_subsumes(&parent, &child, 1_000_000).unwrap());
    }
}
