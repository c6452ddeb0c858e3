//! Convert the chemical database into interpretations and print H2O.

use std::path::Path;

use foldt::rdb::{convert_all, Schema, Snapshot};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/chem");
    let schema = Schema::parse(&std::fs::read_to_string(dir.join("schema.pl"))?)?;
    let db = Snapshot::load(&dir, &schema)?;
    let out = convert_all(&db, &schema, None, true)?;
    for e in &out.examples {
        println!("{}: {} facts, class {}", e.id, e.fact_count(), e.class);
    }
    println!();
    print!("{}", out.examples[0].to_block());
    println!();
    for f in out.background.iter().take(3) {
        println!("{f}.");
    }
    println!("... {} background facts", out.background.len());
    Ok(())
}
