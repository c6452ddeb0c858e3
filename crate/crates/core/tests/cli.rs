//! The command-line tool end to end.

use std::path::Path;
use std::process::{Command, Output};

fn foldt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foldt"))
        .args(args)
        .output()
        .expect("run foldt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(foldt(&["--help"]).status.code(), Some(0));
    assert_eq!(foldt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(foldt(&["learn"]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x.kb");
    assert_eq!(
        foldt(&["gen", "--domain", "poker", "--count", "0", "--out", s(&out)])
            .status
            .code(),
        Some(1)
    );
    // a missing file is an input error
    let missing = tmp.path().join("none.kb");
    let o = foldt(&["learn", "--data", s(&missing), "--settings", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("none.kb"));
}

#[test]
fn malformed_settings_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let set = tmp.path().join("bad.s");
    std::fs::write(&set, "classes([a,b]).\nrmode(oops(.\n").unwrap();
    let data = tmp.path().join("d.kb");
    std::fs::write(&data, "begin(model(1)).\na.\nend(model(1)).\n").unwrap();
    assert_eq!(
        foldt(&["learn", "--data", s(&data), "--settings", s(&set)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gen_learn_classify_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    let (train, test, bias) = (p.join("train.kb"), p.join("test.kb"), p.join("bias"));
    let o = foldt(&[
        "gen",
        "--domain",
        "bongard",
        "--count",
        "300",
        "--seed",
        "3",
        "--out",
        s(&train),
        "--bias-dir",
        s(&bias),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(foldt(&[
        "gen",
        "--domain",
        "bongard",
        "--count",
        "200",
        "--seed",
        "4",
        "--out",
        s(&test)
    ])
    .status
    .success());

    let model = p.join("m.model");
    let settings = bias.join("settings.s");
    for algo in ["classic", "lds"] {
        let o = foldt(&[
            "learn",
            "--data",
            s(&train),
            "--settings",
            s(&settings),
            "--algo",
            algo,
            "--store",
            s(&p.join(format!("store-{algo}"))),
            "--out",
            s(&model),
        ]);
        assert!(o.status.success(), "{o:?}");
        let text = stdout(&o);
        assert!(text.contains("class(pos) :- "), "{text}");
        assert!(text.contains("300 examples"), "{text}");
    }

    let preds = p.join("pred.tsv");
    let o = foldt(&[
        "classify",
        "--model",
        s(&model),
        "--data",
        s(&test),
        "--out",
        s(&preds),
    ]);
    assert!(o.status.success(), "{o:?}");
    let tree_line = stdout(&o);
    assert!(tree_line.contains("/200 correct"), "{tree_line}");
    assert_eq!(
        std::fs::read_to_string(&preds).unwrap().lines().count(),
        200
    );
    let o = foldt(&[
        "classify",
        "--model",
        s(&model),
        "--data",
        s(&test),
        "--rules",
    ]);
    assert_eq!(stdout(&o), tree_line);
}

#[test]
fn convert_chemistry() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/chem");
    let (out, bg) = (tmp.path().join("chem.kb"), tmp.path().join("chem.bg"));
    let o = foldt(&[
        "convert",
        "--tables",
        s(&dir),
        "--schema",
        s(&dir.join("schema.pl")),
        "--out",
        s(&out),
        "--bg",
        s(&bg),
    ]);
    assert!(o.status.success(), "{o:?}");
    let kb = std::fs::read_to_string(&out).unwrap();
    assert!(
        kb.contains("bonds(h2o-1, h2o-2, single)") || kb.contains("bonds(h2o-1,h2o-2,single)"),
        "{kb}"
    );
}

#[test]
fn bench_prints_table() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    let (data, bias) = (p.join("poker.kb"), p.join("bias"));
    assert!(foldt(&[
        "gen",
        "--domain",
        "poker",
        "--count",
        "150",
        "--seed",
        "1",
        "--out",
        s(&data),
        "--bias-dir",
        s(&bias)
    ])
    .status
    .success());
    let o = foldt(&[
        "bench",
        "--data",
        s(&data),
        "--settings",
        s(&bias.join("settings.s")),
        "--bg",
        s(&bias.join("background.pl")),
        "--k",
        "1,2",
        "--store",
        s(&p.join("store")),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.starts_with("k\tN\tcpu_seconds"), "{text}");
    assert!(!text.contains("INVALID"), "{text}");
    assert_eq!(
        foldt(&[
            "bench",
            "--data",
            s(&data),
            "--settings",
            s(&bias.join("settings.s")),
            "--k",
            "0"
        ])
        .status
        .code(),
        Some(1)
    );
}
