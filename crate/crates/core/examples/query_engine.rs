//! Evaluate queries against one interpretation plus background knowledge.

use foldt::engine::{answer_all, succeeds, theta_subsumes, Program};
use foldt::store::parse_examples;
use foldt::{parse_program, parse_term, Literal, Symbol};

fn query(text: &str) -> Vec<Literal> {
    let t = parse_term(text).unwrap();
    foldt::parser::conjuncts(&t)
        .into_iter()
        .map(|c| Literal::from_term(c).unwrap())
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let classes = [Symbol::intern("pos"), Symbol::intern("neg")];
    let picture = &parse_examples(
        "begin(model(2)).
           circle(o3). triangle(o4). points(o4,up). triangle(o5). points(o5,down). inside(o4,o5).
           pos.
         end(model(2)).",
        &classes,
    )?[0];
    let b = Program::new(&parse_program(
        "doubletriangle(O1,O2) :- triangle(O1), triangle(O2), O1 \\= O2.
         polygon(O) :- triangle(O).
         polygon(O) :- square(O).",
    )?)?;

    for q in [
        "triangle(X), inside(X,Y)",
        "doubletriangle(X,Y), points(X,down)",
        "circle(X), inside(X,Y)",
        "polygon(X), points(X,up)",
    ] {
        println!("{q:40} {}", succeeds(&query(q), picture, &b, 10_000)?);
    }
    let x = Symbol::intern("X");
    let answers = answer_all(&query("polygon(X)"), x, picture, &b, 10_000)?;
    let shown: Vec<String> = answers.iter().map(|t| t.to_string()).collect();
    println!("polygon(X): X in {{{}}}", shown.join(", "));

    let general = query("triangle(X)");
    let specific = query("triangle(X), inside(X,Y)");
    println!(
        "triangle(X) subsumes triangle(X), inside(X,Y): {}",
        theta_subsumes(&general, &specific, 10_000).map_err(|e| format!("budget {}", e.0))?
    );
    Ok(())
}
