//! Learn poker hand classes level-wise from a chunked store and measure
//! accuracy on a held-out set.
//!
//!     cargo run --release --example lds_poker -- [train] [test]

use foldt::engine::{Program, Solver};
use foldt::gen::{self, Domain, GenSpec};
use foldt::learn::learn_lds;
use foldt::store::store_examples;
use foldt::{parse_program, parse_settings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let ntrain = args.next().transpose()?.unwrap_or(1000);
    let ntest = args.next().transpose()?.unwrap_or(10_000);

    let settings = parse_settings(gen::POKER_SETTINGS)?;
    let b = Program::new(&parse_program(gen::POKER_BACKGROUND)?)?;
    let train = gen::generate(&GenSpec::new(Domain::Poker, ntrain, 1));
    let test = gen::generate(&GenSpec::new(Domain::Poker, ntest, 2));

    let tmp = tempfile::tempdir()?;
    let data = store_examples(
        tmp.path(),
        settings.params.granularity,
        &settings.classes,
        &train,
    )?;
    let learned = learn_lds(&data, &b, &settings)?;
    for level in &learned.report.levels {
        println!("{level}");
    }
    println!("{}", learned.model.tree);

    let classifier = learned.model.classifier();
    let mut solver = Solver::new();
    let mut correct = 0;
    for e in &test {
        if classifier.classify(e, &b, &mut solver)? == e.class {
            correct += 1;
        }
    }
    println!(
        "passes {}  depth {}  peak resident {} (G = {})",
        learned.report.passes,
        learned.model.tree.depth(),
        data.peak_resident(),
        data.granularity
    );
    println!(
        "accuracy on {ntest} held-out hands: {:.5}",
        correct as f64 / ntest as f64
    );
    Ok(())
}
