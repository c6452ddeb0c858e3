//! Every cargo example runs to completion. `cargo test` builds the examples
//! next to the test binaries.

use std::path::PathBuf;
use std::process::Command;

fn example_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

fn run(name: &str, args: &[&str]) -> String {
    let path = example_dir().join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
    assert!(path.exists(), "{} not built", path.display());
    let o = Command::new(&path)
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "{name}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn examples_run() {
    for name in [
        "parse_terms",
        "chunked_store",
        "query_engine",
        "refinement_operator",
        "rdb_convert",
    ] {
        assert!(!run(name, &[]).is_empty(), "{name} printed nothing");
    }
    assert!(run("bongard_tree", &[]).contains("class(pos) :- triangle(X), inside(X,Y), !."));
    assert!(run("lds_poker", &["200", "500"]).contains("accuracy"));
    assert!(run("scaling_bench", &["100", "2"]).contains("slope"));
}
