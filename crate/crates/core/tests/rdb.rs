use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use foldt::rdb::{convert_all, extract_example, Closure, Schema, Snapshot};
use foldt::store::parse_examples;
use foldt::{parse_program, parse_term, Literal, Term};

fn data(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(dir)
}

fn load(dir: &str) -> (Schema, Snapshot) {
    let schema =
        Schema::parse(&std::fs::read_to_string(data(dir).join("schema.pl")).unwrap()).unwrap();
    let db = Snapshot::load(&data(dir), &schema).unwrap();
    (schema, db)
}

fn fact_set(text: &str) -> BTreeSet<String> {
    parse_program(text)
        .unwrap()
        .into_iter()
        .map(|c| c.head.to_string())
        .collect()
}

#[test]
fn water_has_the_nine_facts() {
    let (schema, db) = load("chem");
    let facts = extract_example(&db, &schema, &Term::atom("H2O"), true).unwrap();
    let got: Vec<String> = facts.iter().map(Literal::to_string).collect();
    let want = "molecules('H2O', water, inorganic). contains('H2O', h2o-1).
        contains('H2O', h2o-2). contains('H2O', h2o-3).
        atoms(h2o-1, 'H'). atoms(h2o-2, 'O'). atoms(h2o-3, 'H').
        bonds(h2o-1, h2o-2, single). bonds(h2o-2, h2o-3, single).";
    let want: Vec<String> = parse_program(want)
        .unwrap()
        .iter()
        .map(|c| c.head.to_string())
        .collect();
    assert_eq!(got, want);
}

#[test]
fn outbound_only_misses_the_bonds() {
    let (mut schema, db) = load("chem");
    schema.follow = foldt::rdb::Follow::Outbound;
    let facts = extract_example(&db, &schema, &Term::atom("H2O"), true).unwrap();
    assert_eq!(facts.len(), 7);
    assert!(facts.iter().all(|f| f.pred.as_str() != "bonds"));
}

#[test]
fn every_molecule_converts() {
    let (schema, db) = load("chem");
    let out = convert_all(&db, &schema, None, true).unwrap();
    let ids: Vec<String> = out.examples.iter().map(|e| e.id.to_string()).collect();
    assert_eq!(ids, ["'H2O'", "'CO2'", "'CO'", "'CH4'", "'CH3OH'"]);
    let classes: Vec<&str> = out.examples.iter().map(|e| e.class.as_str()).collect();
    assert_eq!(
        classes,
        ["inorganic", "inorganic", "inorganic", "organic", "organic"]
    );
    assert_eq!(out.background.len(), 8);
    assert!(out.report.locality_violations.is_empty());
    assert!(out.report.dangling.is_empty());

    // the written files parse back
    let text: String = out.examples.iter().map(|e| e.to_block()).collect();
    let classes = [
        foldt::Symbol::intern("inorganic"),
        foldt::Symbol::intern("organic"),
    ];
    let back = parse_examples(&text, &classes).unwrap();
    assert_eq!(back, out.examples);
    let bg: String = out.background.iter().map(|f| format!("{f}.\n")).collect();
    assert_eq!(parse_program(&bg).unwrap().len(), 8);
}

#[test]
fn first_bongard_picture() {
    let (schema, db) = load("bongard-rdb");
    let out = convert_all(&db, &schema, None, true).unwrap();
    assert_eq!(out.examples.len(), 2);
    let p1: BTreeSet<String> = out.examples[0].literals().map(|l| l.to_string()).collect();
    assert_eq!(
        p1,
        fact_set("circle(o1). triangle(o2). points(o2, up). inside(o2, o1).")
    );
    let p2: BTreeSet<String> = out.examples[1].literals().map(|l| l.to_string()).collect();
    assert_eq!(
        p2,
        fact_set("circle(o3). triangle(o4). points(o4, up). triangle(o5). points(o5, down). inside(o4, o5).")
    );
}

/// Closure by repeated joins over all tuples, written independently.
fn brute_closure(schema: &Schema, db: &Snapshot, id: &Term) -> BTreeSet<(usize, usize)> {
    let mut s: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (t, rows) in db.tables.iter().enumerate() {
        for (r, row) in rows.iter().enumerate() {
            if !schema.tables[t].background && row.contains(id) {
                s.insert((t, r));
            }
        }
    }
    loop {
        let mut next = s.clone();
        for (t, rows) in db.tables.iter().enumerate() {
            if schema.tables[t].background {
                continue;
            }
            for (r, row) in rows.iter().enumerate() {
                for &(u, q) in &s {
                    let other = &db.tables[u][q];
                    // row is referred to by (u, q)
                    let out = schema.tables[u].foreign_keys.iter().any(|fk| {
                        fk.target == t
                            && fk
                                .attrs
                                .iter()
                                .zip(&schema.tables[t].key)
                                .all(|(&a, &k)| other[a] == row[k])
                    });
                    // row refers to (u, q)
                    let inb = schema.tables[t].foreign_keys.iter().any(|fk| {
                        fk.target == u
                            && fk
                                .attrs
                                .iter()
                                .zip(&schema.tables[u].key)
                                .all(|(&a, &k)| row[a] == other[k])
                    });
                    if out || inb {
                        next.insert((t, r));
                    }
                }
            }
        }
        if next == s {
            return s;
        }
        s = next;
    }
}

#[test]
fn two_hop_chain_matches_brute_force() {
    let schema = Schema::parse(
        "table(a, [id, b]). table(b, [k, c]). table(c, [k, v]).
         key(a, [id]). key(b, [k]). key(c, [k]).
         foreign_key(a, [b], b). foreign_key(b, [c], c).
         example_id(a, id).",
    )
    .unwrap();
    let t = |s: &str| parse_term(s).unwrap();
    let db = Snapshot {
        tables: vec![
            vec![vec![t("e1"), t("b1")], vec![t("e2"), t("b2")]],
            vec![vec![t("b1"), t("c1")], vec![t("b2"), t("c2")]],
            vec![vec![t("c1"), t("1")], vec![t("c2"), t("2")]],
        ],
    };
    for id in ["e1", "e2"] {
        let mut c = Closure::new(&schema, &db, true).unwrap();
        let (tuples, rounds) = c.tuples(&t(id)).unwrap();
        let brute = brute_closure(&schema, &db, &t(id));
        assert_eq!(tuples.iter().copied().collect::<BTreeSet<_>>(), brute);
        assert_eq!(tuples.len(), 3, "one tuple from each table");
        assert!(rounds <= db.tuple_count());
    }
}

#[test]
fn chemistry_matches_brute_force() {
    let (schema, db) = load("chem");
    let mut c = Closure::new(&schema, &db, true).unwrap();
    for id in ["H2O", "CO2", "CO", "CH4", "CH3OH"] {
        let id = Term::atom(id);
        let (tuples, _) = c.tuples(&id).unwrap();
        assert_eq!(
            tuples.into_iter().collect::<BTreeSet<_>>(),
            brute_closure(&schema, &db, &id)
        );
    }
}
