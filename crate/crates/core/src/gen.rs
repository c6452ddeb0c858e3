//! Synthetic example generators: Poker hands and Bongard scenes.
//!
//! Both are deterministic per seed (ChaCha8), so the same request always
//! produces byte-identical data files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::store::Interpretation;
use crate::symbol::Symbol;
use crate::term::{Literal, Term};

pub const POKER_SETTINGS: &str = include_str!("../data/poker/poker.s");
pub const POKER_BACKGROUND: &str = include_str!("../data/poker/poker.bg");
pub const BONGARD_SETTINGS: &str = include_str!("../data/bongard/bongard.s");
/// Twelve hand-built scenes for which the concept tree is found exactly.
pub const BONGARD_SCENES: &str = include_str!("../data/bongard/twelve_scenes.kb");

pub const POKER_CLASSES: [&str; 6] = [
    "nothing",
    "pair",
    "two_pairs",
    "three_of_a_kind",
    "full_house",
    "four_of_a_kind",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Poker,
    Bongard,
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "poker" => Ok(Domain::Poker),
            "bongard" => Ok(Domain::Bongard),
            _ => Err(format!("unknown domain `{s}` (expected poker or bongard)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Balance {
    /// Whatever the sampling process gives.
    Natural,
    /// Classes in turn, each drawn by rejection sampling.
    Uniform,
}

#[derive(Clone, Debug)]
pub struct GenSpec {
    pub domain: Domain,
    pub count: usize,
    pub seed: u64,
    pub balance: Balance,
}

impl GenSpec {
    pub fn new(domain: Domain, count: usize, seed: u64) -> GenSpec {
        GenSpec {
            domain,
            count,
            seed,
            balance: Balance::Natural,
        }
    }
}

pub fn generate(spec: &GenSpec) -> Vec<Interpretation> {
    match spec.domain {
        Domain::Poker => gen_poker(spec),
        Domain::Bongard => gen_bongard(spec),
    }
}

/// Write examples as a `begin ... end` data file.
pub fn write_examples(path: &Path, examples: &[Interpretation]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in examples {
        out.write_all(e.to_block().as_bytes())?;
    }
    out.flush()
}

// ---------------------------------------------------------------------------
// Poker

const SUITS: [&str; 4] = ["clubs", "diamonds", "hearts", "spades"];

/// Rank index 0..13 (two .. ace) as a term.
fn rank_term(r: u8) -> Term {
    match r {
        0..=8 => Term::Int(r as i64 + 2),
        9 => Term::atom("jack"),
        10 => Term::atom("queen"),
        11 => Term::atom("king"),
        _ => Term::atom("ace"),
    }
}

/// Class of a hand from its rank multiplicities alone.
pub fn poker_label(ranks: &[u8]) -> &'static str {
    let mut counts = [0u8; 13];
    for &r in ranks {
        counts[r as usize] += 1;
    }
    let mut pattern: Vec<u8> = counts.into_iter().filter(|&c| c > 0).collect();
    pattern.sort_unstable_by(|a, b| b.cmp(a));
    match pattern.as_slice() {
        [4, ..] | [5] => "four_of_a_kind",
        [3, 2] => "full_house",
        [3, ..] => "three_of_a_kind",
        [2, 2, ..] => "two_pairs",
        [2, ..] => "pair",
        _ => "nothing",
    }
}

fn poker_hand(rng: &mut ChaCha8Rng, deck: &mut [(u8, u8)]) -> ([(u8, u8); 5], &'static str) {
    let (hand, _) = deck.partial_shuffle(rng, 5);
    let cards: [(u8, u8); 5] = std::array::from_fn(|i| hand[i]);
    let ranks: Vec<u8> = cards.iter().map(|c| c.0).collect();
    (cards, poker_label(&ranks))
}

fn gen_poker(spec: &GenSpec) -> Vec<Interpretation> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut deck: Vec<(u8, u8)> = (0..13).flat_map(|r| (0..4).map(move |s| (r, s))).collect();
    (0..spec.count)
        .map(|i| {
            let (cards, class) = match spec.balance {
                Balance::Natural => poker_hand(&mut rng, &mut deck),
                Balance::Uniform => {
                    let want = POKER_CLASSES[i % POKER_CLASSES.len()];
                    loop {
                        let h = poker_hand(&mut rng, &mut deck);
                        if h.1 == want {
                            break h;
                        }
                    }
                }
            };
            let facts = cards
                .iter()
                .map(|&(r, s)| {
                    Literal::new("card", vec![rank_term(r), Term::atom(SUITS[s as usize])])
                })
                .collect();
            Interpretation::new(Term::Int(i as i64 + 1), Symbol::intern(class), facts)
                .expect("generated facts are ground")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Bongard

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    Circle,
    Triangle,
    Square,
}

struct Scene {
    shapes: Vec<Shape>,
    up: Vec<bool>,
    /// (inner, outer) object indices.
    inside: Vec<(usize, usize)>,
}

impl Scene {
    fn random(rng: &mut ChaCha8Rng) -> Scene {
        let n = rng.gen_range(1..=4);
        let shapes = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => Shape::Circle,
                1 => Shape::Triangle,
                _ => Shape::Square,
            })
            .collect();
        let up = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        // inner objects always come earlier in a random order: acyclic
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut inside = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.3) {
                    inside.push((order[i], order[j]));
                }
            }
        }
        Scene { shapes, up, inside }
    }

    fn positive(&self) -> bool {
        self.inside
            .iter()
            .any(|&(a, _)| self.shapes[a] == Shape::Triangle)
    }

    fn facts(&self) -> Vec<Literal> {
        let obj = |i: usize| Term::atom(&format!("o{}", i + 1));
        let mut facts = Vec::new();
        for (i, s) in self.shapes.iter().enumerate() {
            let name = match s {
                Shape::Circle => "circle",
                Shape::Triangle => "triangle",
                Shape::Square => "square",
            };
            facts.push(Literal::new(name, vec![obj(i)]));
            if *s == Shape::Triangle {
                let dir = if self.up[i] { "up" } else { "down" };
                facts.push(Literal::new("points", vec![obj(i), Term::atom(dir)]));
            }
        }
        for &(a, b) in &self.inside {
            facts.push(Literal::new("inside", vec![obj(a), obj(b)]));
        }
        facts
    }
}

fn gen_bongard(spec: &GenSpec) -> Vec<Interpretation> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|i| {
            let scene = match spec.balance {
                Balance::Natural => Scene::random(&mut rng),
                Balance::Uniform => loop {
                    let s = Scene::random(&mut rng);
                    if s.positive() == (i % 2 == 0) {
                        break s;
                    }
                },
            };
            let class = if scene.positive() { "pos" } else { "neg" };
            Interpretation::new(
                Term::Int(i as i64 + 1),
                Symbol::intern(class),
                scene.facts(),
            )
            .expect("generated facts are ground")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_cover_every_count_pattern() {
        // one hand per pattern of rank multiplicities
        let cases: [(&[u8], &str); 6] = [
            (&[0, 0, 0, 0, 1], "four_of_a_kind"),
            (&[0, 0, 0, 1, 1], "full_house"),
            (&[0, 0, 0, 1, 2], "three_of_a_kind"),
            (&[0, 0, 1, 1, 2], "two_pairs"),
            (&[0, 0, 1, 2, 3], "pair"),
            (&[0, 1, 2, 3, 4], "nothing"),
        ];
        for (ranks, class) in cases {
            assert_eq!(poker_label(ranks), class, "{ranks:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&GenSpec::new(Domain::Poker, 50, 7));
        let b = generate(&GenSpec::new(Domain::Poker, 50, 7));
        let c = generate(&GenSpec::new(Domain::Poker, 50, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn hands_are_five_distinct_cards() {
        for e in generate(&GenSpec::new(Domain::Poker, 200, 1)) {
            let cards: Vec<String> = e.literals().map(|l| l.to_string()).collect();
            let mut dedup = cards.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), 5);
        }
    }

    #[test]
    fn uniform_balance_cycles_classes() {
        let spec = GenSpec {
            balance: Balance::Uniform,
            ..GenSpec::new(Domain::Poker, 12, 3)
        };
        let ex = generate(&spec);
        for (i, e) in ex.iter().enumerate() {
            assert_eq!(e.class.as_str(), POKER_CLASSES[i % 6]);
        }
    }

    #[test]
    fn bongard_has_both_classes() {
        let ex = generate(&GenSpec::new(Domain::Bongard, 200, 11));
        let pos = ex.iter().filter(|e| e.class.as_str() == "pos").count();
        assert!(pos > 20 && pos < 180, "{pos}");
    }
}
