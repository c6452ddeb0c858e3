//! Learn the "triangle inside an object" concept from twelve scenes with
//! both engines and print the tree and its decision list.

use foldt::engine::Program;
use foldt::gen;
use foldt::learn::{learn_classic, learn_lds};
use foldt::parse_settings;
use foldt::store::{parse_examples, store_examples};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = parse_settings(gen::BONGARD_SETTINGS)?;
    let examples = parse_examples(gen::BONGARD_SCENES, &s.classes)?;
    let tmp = tempfile::tempdir()?;
    let data = store_examples(tmp.path(), 4, &s.classes, &examples)?;

    let classic = learn_classic(&data, &Program::empty(), &s)?;
    let lds = learn_lds(&data, &Program::empty(), &s)?;
    print!("{}", lds.model.tree);
    println!(
        "same tree from both engines: {}",
        classic.model.tree.same_structure(&lds.model.tree)
    );
    println!(
        "passes {}, depth {}",
        lds.report.passes,
        lds.model.tree.depth()
    );
    println!();
    for rule in lds.model.to_decision_list() {
        println!("{rule}");
    }
    Ok(())
}
