//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foldt::bias::{refinements, RefinementContext, ThresholdTable};
use foldt::engine::Program;
use foldt::gen::{self, Domain, GenSpec};
use foldt::store::{store_examples, Interpretation};
use foldt::tree::Foldt;
use foldt::{parse_program, parse_settings, DatasetHandle, Literal, Settings, Symbol, Term};

pub fn poker() -> (Settings, Program) {
    let s = parse_settings(gen::POKER_SETTINGS).unwrap();
    let b = Program::new(&parse_program(gen::POKER_BACKGROUND).unwrap()).unwrap();
    (s, b)
}

pub fn bongard() -> (Settings, Program) {
    (
        parse_settings(gen::BONGARD_SETTINGS).unwrap(),
        Program::empty(),
    )
}

pub fn dataset(
    dir: &std::path::Path,
    s: &Settings,
    domain: Domain,
    n: usize,
    seed: u64,
    g: usize,
) -> DatasetHandle {
    let ex = gen::generate(&GenSpec::new(domain, n, seed));
    store_examples(dir, g, &s.classes, &ex).unwrap()
}

/// A random tree grown with the refinement operator, up to `depth` levels.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    s: &Settings,
    ctx: &RefinementContext,
    depth: usize,
) -> Foldt {
    let leaf = |rng: &mut ChaCha8Rng| {
        Foldt::leaf(*s.classes.choose(rng).unwrap(), vec![0; s.classes.len()])
    };
    if depth <= 1 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    let cands = refinements(ctx, s, &ThresholdTable::new());
    let Some(c) = cands.choose(rng) else {
        return leaf(rng);
    };
    Foldt::Node {
        conj: c.conj.clone(),
        query: ctx.query.clone(),
        left: Box::new(random_tree(rng, s, &ctx.left(c), depth - 1)),
        right: Box::new(random_tree(rng, s, &ctx.right(c), depth - 1)),
    }
}

/// Every query reachable from the empty one in at most `depth` refinement
/// steps, with the query it was refined from.
pub fn reachable_queries(s: &Settings, depth: usize) -> Vec<(Vec<Literal>, Vec<Literal>)> {
    let mut out = Vec::new();
    let mut level = vec![RefinementContext::root(s)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for ctx in &level {
            for c in refinements(ctx, s, &ThresholdTable::new()) {
                let child = ctx.left(&c);
                out.push((ctx.query.clone(), child.query.clone()));
                next.push(child);
            }
        }
        level = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Ground-join oracle

pub const PREDS: [(&str, usize); 3] = [("p", 2), ("q", 2), ("r", 1)];
pub const CONSTS: [&str; 4] = ["a", "b", "c", "d"];
pub const VARS: [&str; 3] = ["X", "Y", "Z"];

pub struct JoinCase {
    pub facts: Vec<Literal>,
    pub query: Vec<Literal>,
}

pub fn random_join_case(rng: &mut ChaCha8Rng) -> JoinCase {
    let nfacts = rng.gen_range(0..10);
    let mut facts = Vec::new();
    for _ in 0..nfacts {
        let (p, n) = PREDS[rng.gen_range(0..PREDS.len())];
        let args = (0..n)
            .map(|_| Term::atom(CONSTS[rng.gen_range(0..CONSTS.len())]))
            .collect();
        facts.push(Literal::new(p, args));
    }
    let nlits = rng.gen_range(1..=3);
    let mut query = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for _ in 0..nlits {
        let (p, n) = PREDS[rng.gen_range(0..PREDS.len())];
        let args = (0..n)
            .map(|_| {
                if rng.gen_bool(0.75) {
                    let v = VARS[rng.gen_range(0..VARS.len())];
                    seen.push(v);
                    Term::var(v)
                } else {
                    Term::atom(CONSTS[rng.gen_range(0..CONSTS.len())])
                }
            })
            .collect();
        query.push(Literal::new(p, args));
    }
    seen.sort_unstable();
    seen.dedup();
    // an optional disequality over variables bound earlier
    if seen.len() >= 2 && rng.gen_bool(0.3) {
        query.push(Literal::new(
            "\\=",
            vec![Term::var(seen[0]), Term::var(seen[1])],
        ));
    }
    JoinCase { facts, query }
}

/// Does some assignment of constants to the query variables make every
/// literal a fact (or a true disequality)?
pub fn oracle_succeeds(case: &JoinCase) -> bool {
    brute_succeeds(&case.facts, &case.query)
}

/// Conjunctive query evaluation by enumerating every assignment of the
/// constants occurring in the facts and the query.
pub fn brute_succeeds(facts: &[Literal], query: &[Literal]) -> bool {
    let known: HashSet<String> = facts.iter().map(|f| f.to_string()).collect();
    let mut domain: Vec<Term> = Vec::new();
    for t in facts.iter().chain(query).flat_map(|l| l.args.iter()) {
        if t.is_ground() && !domain.contains(t) {
            domain.push(t.clone());
        }
    }
    let mut vars: Vec<Symbol> = Vec::new();
    for l in query {
        for v in l.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    if domain.is_empty() {
        return vars.is_empty() && query.iter().all(|l| known.contains(&l.to_string()));
    }
    let n = vars.len() as u32;
    (0..domain.len().pow(n)).any(|mut code| {
        let mut assign = Vec::new();
        for _ in 0..n {
            assign.push(domain[code % domain.len()].clone());
            code /= domain.len();
        }
        let theta = |v: Symbol| vars.iter().position(|&w| w == v).map(|i| assign[i].clone());
        query.iter().all(|l| {
            let g = l.substitute(&theta);
            if g.pred.as_str() == "\\=" {
                g.args[0] != g.args[1]
            } else {
                known.contains(&g.to_string())
            }
        })
    })
}

pub fn join_interpretation(case: &JoinCase) -> Interpretation {
    Interpretation::new(Term::Int(0), Symbol::intern("pos"), case.facts.clone()).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
