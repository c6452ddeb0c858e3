//! Write examples into a chunked store and stream them back, watching how
//! many are resident at once.

use foldt::gen::{self, Domain, GenSpec};
use foldt::store::store_examples;
use foldt::Selector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let examples = gen::generate(&GenSpec::new(Domain::Poker, 25, 9));
    let classes: Vec<foldt::Symbol> = gen::POKER_CLASSES
        .iter()
        .map(|c| foldt::Symbol::intern(c))
        .collect();
    let tmp = tempfile::tempdir()?;
    let data = store_examples(tmp.path(), 10, &classes, &examples)?;
    for c in &data.chunks {
        println!(
            "chunk {} {} first {} count {}",
            c.index, c.file, c.first_id, c.count
        );
    }
    println!("histogram {:?}", data.histogram);

    let n = data.stream(Selector::All).count();
    println!(
        "all: {n} examples, {} chunk loads, peak resident {}",
        data.chunk_loads(),
        data.peak_resident()
    );

    data.reset_stats();
    let skip_middle = |o: usize| !(10..20).contains(&o);
    let n = data.stream(Selector::Ordinals(&skip_middle)).count();
    println!(
        "without chunk 1: {n} examples, {} chunk loads",
        data.chunk_loads()
    );

    let first = data.stream(Selector::All).next().unwrap()?.1;
    print!("{}", first.to_block());
    Ok(())
}
