//! Replicate a Poker set k times, learn with minleaf scaled by k, and show
//! that the tree stays put while time grows linearly.
//!
//!     cargo run --release --example scaling_bench -- [base] [kmax]

use foldt::bench::bench_run;
use foldt::engine::Program;
use foldt::gen::{self, Domain, GenSpec};
use foldt::store::store_examples;
use foldt::{parse_program, parse_settings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let base = args.next().transpose()?.unwrap_or(300);
    let kmax = args.next().transpose()?.unwrap_or(8);

    let s = parse_settings(gen::POKER_SETTINGS)?;
    let b = Program::new(&parse_program(gen::POKER_BACKGROUND)?)?;
    let tmp = tempfile::tempdir()?;
    let examples = gen::generate(&GenSpec::new(Domain::Poker, base, 300));
    let data = store_examples(
        &tmp.path().join("base"),
        s.params.granularity,
        &s.classes,
        &examples,
    )?;

    let ks: Vec<usize> = std::iter::successors(Some(1), |k| Some(k * 2))
        .take_while(|&k| k <= kmax)
        .collect();
    let outcome = bench_run(&data, &b, &s, &ks, tmp.path())?;
    outcome.write_tsv(std::io::stdout().lock())?;
    println!("identical trees: {}", outcome.identical);
    if let Some(slope) = outcome.slope() {
        println!("log-log slope: {slope:.3}");
    }
    Ok(())
}
