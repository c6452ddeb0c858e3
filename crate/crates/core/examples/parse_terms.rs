//! Parse terms, programs and settings, and print them back.

use foldt::{parse_program, parse_settings, parse_term};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for text in [
        "player(my,1,-48.804436,-0.16494742,339)",
        "contains('H2O', h2o-1)",
        "'hello world'",
        "f(X, _, [a, b])",
    ] {
        let t = parse_term(text)?;
        println!("{text:45} => {t}");
    }

    let program = parse_program(
        "polygon(O) :- triangle(O).
         doubletriangle(O1,O2) :- triangle(O1), triangle(O2), O1 \\= O2.
         circle(o1).",
    )?;
    for c in &program {
        println!("{c}  ({} body literals)", c.body.len());
    }

    let s = parse_settings(
        "classes([pos,neg]). rmode(5: inside(+V,+-W)). lookahead(triangle(T), points(T,up)).",
    )?;
    print!("{}", s.render());

    match parse_term("f(a,\n  'unterminated") {
        Err(e) => println!("error: {e}"),
        Ok(t) => println!("unexpected success: {t}"),
    }
    Ok(())
}
