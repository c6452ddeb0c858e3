//! The refinements of the empty query and of `triangle(X)` under the
//! Bongard bias, then a lookahead in action.

use foldt::bias::{refinements, RefinementContext, ThresholdTable};
use foldt::gen;
use foldt::parse_settings;
use foldt::term::render_conjunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = parse_settings(gen::BONGARD_SETTINGS)?;
    let none = ThresholdTable::new();
    let root = RefinementContext::root(&s);
    let first = refinements(&root, &s, &none);
    println!("rho(true):");
    for c in &first {
        println!("  {}", render_conjunction(&c.conj));
    }
    let tri = first
        .iter()
        .find(|c| c.conj[0].pred.as_str() == "triangle")
        .unwrap();
    let ctx = root.left(tri);
    println!("rho({}):", render_conjunction(&ctx.query));
    for c in refinements(&ctx, &s, &none) {
        println!("  {}", render_conjunction(&c.conj));
    }

    let s = parse_settings(
        "classes([pos,neg]).
         rmode(5: triangle(+-V)).
         rmode(5: points(+V,up)).
         lookahead(triangle(T), points(T,up)).",
    )?;
    println!("with lookahead:");
    for c in refinements(&RefinementContext::root(&s), &s, &none) {
        println!("  {}", render_conjunction(&c.conj));
    }
    Ok(())
}
