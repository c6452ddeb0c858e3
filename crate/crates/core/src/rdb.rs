//! Relational snapshot → interpretations.
//!
//! Every example starts from the tuples that contain its identifier and
//! grows by following foreign keys until nothing changes. Background
//! tables are never entered; they are written once as a fact program.
//!
//! Schema files use the settings syntax:
//!
//! ```text
//! table(molecules, [formula, name, class]).
//! key(molecules, [formula]).
//! foreign_key(contains, [atom_id], atoms).
//! background(mendelev).
//! example_id(molecules, formula).
//! class_attribute(molecules, class).
//! drop_id.            % leave the identifier out of root-table facts
//! elide(contains).    % use the table for the closure but emit no facts
//! initial(key).       % seed only from key/foreign-key attributes
//! follow(outbound).   % do not follow references into the example
//! ```

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use thiserror::Error;

use crate::parser::{parse_clause_terms, ParseError};
use crate::store::{Interpretation, StoreError};
use crate::symbol::Symbol;
use crate::term::{Literal, Term};

#[derive(Debug, Error)]
pub enum RdbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("schema: {0}")]
    Parse(#[from] ParseError),
    #[error("schema: {0}")]
    Schema(String),
    #[error("table {table}, row {row}: expected {expected} cells, found {found}")]
    Arity {
        table: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("no example has identifier {0}")]
    UnknownId(String),
    #[error("{table} tuple {tuple} refers to a missing {target} tuple")]
    Dangling {
        table: String,
        tuple: String,
        target: String,
    },
    #[error("the snapshot contains no examples")]
    NoExamples,
    #[error("identifier {0} occurs in more than one root tuple")]
    DuplicateId(String),
    #[error("example {0} has no usable class value")]
    MissingClass(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Where the initial tuple set is looked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initial {
    /// Any attribute containing the identifier.
    AnyAttribute,
    /// Only key and foreign-key attributes.
    KeyAttributes,
}

/// Which foreign-key references extend the closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Follow {
    /// Tuples referred to by a tuple already collected.
    Outbound,
    /// Also tuples that refer to a tuple already collected.
    Both,
}

#[derive(Clone, Debug)]
pub struct ForeignKey {
    pub attrs: Vec<usize>,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct TableSchema {
    pub name: Symbol,
    pub attrs: Vec<String>,
    pub key: Vec<usize>,
    pub foreign_keys: Vec<ForeignKey>,
    pub background: bool,
    pub elided: bool,
}

#[derive(Clone, Debug)]
pub struct Schema {
    pub tables: Vec<TableSchema>,
    pub root: usize,
    pub id_attr: usize,
    pub class_attr: Option<usize>,
    pub drop_id: bool,
    pub initial: Initial,
    pub follow: Follow,
}

fn schema_err<T>(msg: impl Into<String>) -> Result<T, RdbError> {
    Err(RdbError::Schema(msg.into()))
}

fn atom_arg(t: &Term, what: &str) -> Result<String, RdbError> {
    match t {
        Term::Atom(s) => Ok(s.as_str().to_string()),
        _ => schema_err(format!("{what}: expected an atom, found {t}")),
    }
}

fn atom_list(t: &Term, what: &str) -> Result<Vec<String>, RdbError> {
    let items = t
        .as_list()
        .ok_or_else(|| RdbError::Schema(format!("{what}: expected a list, found {t}")))?;
    items.into_iter().map(|i| atom_arg(i, what)).collect()
}

impl Schema {
    pub fn parse(text: &str) -> Result<Schema, RdbError> {
        let items = parse_clause_terms(text)?;
        let mut tables: Vec<TableSchema> = Vec::new();
        let mut keys = Vec::new();
        let mut fks = Vec::new();
        let mut flags: Vec<(&str, String)> = Vec::new();
        let mut root: Option<(String, String)> = None;
        let mut class: Option<(String, String)> = None;
        let (mut drop_id, mut initial, mut follow) = (false, Initial::AnyAttribute, Follow::Both);
        for (t, pos) in &items {
            let (name, args) = match t {
                Term::Atom(s) => (s.as_str(), &[][..]),
                Term::Compound(f, a) => (f.as_str(), &a[..]),
                _ => return schema_err(format!("{pos}: not a directive: {t}")),
            };
            match (name, args) {
                ("table", [n, attrs]) => tables.push(TableSchema {
                    name: Symbol::intern(&atom_arg(n, "table")?),
                    attrs: atom_list(attrs, "table")?,
                    key: Vec::new(),
                    foreign_keys: Vec::new(),
                    background: false,
                    elided: false,
                }),
                ("key", [n, attrs]) => keys.push((atom_arg(n, "key")?, atom_list(attrs, "key")?)),
                ("foreign_key", [n, attrs, target]) => fks.push((
                    atom_arg(n, "foreign_key")?,
                    atom_list(attrs, "foreign_key")?,
                    atom_arg(target, "foreign_key")?,
                )),
                ("background", [n]) => flags.push(("background", atom_arg(n, "background")?)),
                ("elide", [n]) => flags.push(("elide", atom_arg(n, "elide")?)),
                ("example_id", [n, a]) => {
                    root = Some((atom_arg(n, "example_id")?, atom_arg(a, "example_id")?))
                }
                ("class_attribute", [n, a]) => {
                    class = Some((
                        atom_arg(n, "class_attribute")?,
                        atom_arg(a, "class_attribute")?,
                    ))
                }
                ("drop_id", []) => drop_id = true,
                ("initial", [v]) => {
                    initial = match atom_arg(v, "initial")?.as_str() {
                        "any" => Initial::AnyAttribute,
                        "key" => Initial::KeyAttributes,
                        other => return schema_err(format!("initial: unknown option {other}")),
                    }
                }
                ("follow", [v]) => {
                    follow = match atom_arg(v, "follow")?.as_str() {
                        "outbound" => Follow::Outbound,
                        "both" => Follow::Both,
                        other => return schema_err(format!("follow: unknown option {other}")),
                    }
                }
                _ => return schema_err(format!("{pos}: unknown directive {name}/{}", args.len())),
            }
        }

        let find = |tables: &[TableSchema], n: &str| {
            tables
                .iter()
                .position(|t| t.name.as_str() == n)
                .ok_or_else(|| RdbError::Schema(format!("undeclared table {n}")))
        };
        let attr = |t: &TableSchema, a: &str| {
            t.attrs
                .iter()
                .position(|x| x == a)
                .ok_or_else(|| RdbError::Schema(format!("table {} has no attribute {a}", t.name)))
        };
        for (n, attrs) in keys {
            let ti = find(&tables, &n)?;
            let idx = attrs
                .iter()
                .map(|a| attr(&tables[ti], a))
                .collect::<Result<_, _>>()?;
            tables[ti].key = idx;
        }
        for (n, attrs, target) in fks {
            let (ti, gi) = (find(&tables, &n)?, find(&tables, &target)?);
            let idx: Vec<usize> = attrs
                .iter()
                .map(|a| attr(&tables[ti], a))
                .collect::<Result<_, _>>()?;
            if tables[gi].key.len() != idx.len() {
                return schema_err(format!(
                    "foreign key {n}{attrs:?} -> {target}: target key has {} attributes",
                    tables[gi].key.len()
                ));
            }
            tables[ti].foreign_keys.push(ForeignKey {
                attrs: idx,
                target: gi,
            });
        }
        for (flag, n) in flags {
            let ti = find(&tables, &n)?;
            match flag {
                "background" => tables[ti].background = true,
                _ => tables[ti].elided = true,
            }
        }
        let Some((rt, ra)) = root else {
            return schema_err("no example_id declaration");
        };
        let root = find(&tables, &rt)?;
        if tables[root].background {
            return schema_err(format!("example table {rt} is marked as background"));
        }
        let id_attr = attr(&tables[root], &ra)?;
        let class_attr = match class {
            None => None,
            Some((ct, ca)) if ct == rt => Some(attr(&tables[root], &ca)?),
            Some((ct, _)) => {
                return schema_err(format!("class attribute must be on {rt}, not {ct}"))
            }
        };
        Ok(Schema {
            tables,
            root,
            id_attr,
            class_attr,
            drop_id,
            initial,
            follow,
        })
    }

    pub fn table(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name.as_str() == name)
    }
}

/// A cell: a number when it reads as one, an atom otherwise.
pub fn cell(text: &str) -> Term {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Term::Int(i);
    }
    let numeric = t.bytes().any(|b| b.is_ascii_digit())
        && t.bytes()
            .all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
    match t.parse::<f64>() {
        Ok(f) if numeric && f.is_finite() => Term::Float(f),
        _ => Term::atom(t),
    }
}

/// Tuples per table, in schema order.
#[derive(Clone, Debug, Default)]
pub struct Snapshot {
    pub tables: Vec<Vec<Vec<Term>>>,
}

impl Snapshot {
    /// Read `<dir>/<table>.csv` for every table; the first row must name
    /// the attributes. A missing file is an empty table.
    pub fn load(dir: &Path, schema: &Schema) -> Result<Snapshot, RdbError> {
        let mut tables = Vec::with_capacity(schema.tables.len());
        for t in &schema.tables {
            let path = dir.join(format!("{}.csv", t.name));
            if !path.exists() {
                log::warn!("{}: missing, table {} is empty", path.display(), t.name);
                tables.push(Vec::new());
                continue;
            }
            let csv_err = |source| RdbError::Csv {
                path: path.clone(),
                source,
            };
            let mut rd = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .flexible(true)
                .from_path(&path)
                .map_err(csv_err)?;
            let header: Vec<String> = rd
                .headers()
                .map_err(csv_err)?
                .iter()
                .map(str::to_string)
                .collect();
            if header != t.attrs {
                return schema_err(format!(
                    "{}: header {header:?} does not match attributes {:?}",
                    path.display(),
                    t.attrs
                ));
            }
            let mut rows = Vec::new();
            for (i, rec) in rd.records().enumerate() {
                let rec = rec.map_err(csv_err)?;
                if rec.len() != t.attrs.len() {
                    return Err(RdbError::Arity {
                        table: t.name.to_string(),
                        row: i + 1,
                        expected: t.attrs.len(),
                        found: rec.len(),
                    });
                }
                rows.push(rec.iter().map(cell).collect());
            }
            tables.push(rows);
        }
        Ok(Snapshot { tables })
    }

    pub fn tuple_count(&self) -> usize {
        self.tables.iter().map(Vec::len).sum()
    }
}

fn project(row: &[Term], attrs: &[usize]) -> Vec<Term> {
    attrs.iter().map(|&a| row[a].clone()).collect()
}

fn tuple_text(schema: &Schema, t: usize, row: &[Term]) -> String {
    Literal {
        pred: schema.tables[t].name,
        args: row.to_vec(),
        builtin: None,
    }
    .to_string()
}

/// Lookup structures for repeated closures over one snapshot.
pub struct Closure<'a> {
    schema: &'a Schema,
    db: &'a Snapshot,
    /// Per table: key values → rows.
    by_key: Vec<HashMap<Vec<Term>, Vec<usize>>>,
    /// Per (table, foreign key): referenced values → referring rows.
    by_ref: Vec<Vec<HashMap<Vec<Term>, Vec<usize>>>>,
    /// Per table: rows by cell value, restricted as `initial` demands.
    by_value: Vec<HashMap<Term, Vec<usize>>>,
    strict: bool,
    /// Dangling references met in non-strict mode.
    pub dangling: Vec<String>,
}

impl<'a> Closure<'a> {
    /// `strict`: a dangling foreign key is an error rather than a warning.
    pub fn new(
        schema: &'a Schema,
        db: &'a Snapshot,
        strict: bool,
    ) -> Result<Closure<'a>, RdbError> {
        for (t, rows) in schema.tables.iter().zip(&db.tables) {
            if let Some(i) = rows.iter().position(|r| r.len() != t.attrs.len()) {
                return Err(RdbError::Arity {
                    table: t.name.to_string(),
                    row: i + 1,
                    expected: t.attrs.len(),
                    found: rows[i].len(),
                });
            }
        }
        if db.tables.len() != schema.tables.len() {
            return schema_err("snapshot and schema disagree on the table list");
        }
        let mut by_key = Vec::new();
        let mut by_ref = Vec::new();
        let mut by_value = Vec::new();
        for (t, rows) in schema.tables.iter().zip(&db.tables) {
            let mut k: HashMap<Vec<Term>, Vec<usize>> = HashMap::new();
            if !t.key.is_empty() {
                for (i, r) in rows.iter().enumerate() {
                    k.entry(project(r, &t.key)).or_default().push(i);
                }
            }
            by_key.push(k);
            by_ref.push(
                t.foreign_keys
                    .iter()
                    .map(|fk| {
                        let mut m: HashMap<Vec<Term>, Vec<usize>> = HashMap::new();
                        for (i, r) in rows.iter().enumerate() {
                            m.entry(project(r, &fk.attrs)).or_default().push(i);
                        }
                        m
                    })
                    .collect(),
            );
            let searched: Vec<usize> = match schema.initial {
                Initial::AnyAttribute => (0..t.attrs.len()).collect(),
                Initial::KeyAttributes => {
                    let mut a: Vec<usize> = t.key.clone();
                    a.extend(t.foreign_keys.iter().flat_map(|f| f.attrs.iter().copied()));
                    a.sort_unstable();
                    a.dedup();
                    a
                }
            };
            let mut v: HashMap<Term, Vec<usize>> = HashMap::new();
            if !t.background {
                for (i, r) in rows.iter().enumerate() {
                    for &a in &searched {
                        let e = v.entry(r[a].clone()).or_default();
                        if e.last() != Some(&i) {
                            e.push(i);
                        }
                    }
                }
            }
            by_value.push(v);
        }
        Ok(Closure {
            schema,
            db,
            by_key,
            by_ref,
            by_value,
            strict,
            dangling: Vec::new(),
        })
    }

    /// The tuples of one example, as (table, row) in schema and row order,
    /// with the number of rounds the closure took.
    pub fn tuples(&mut self, id: &Term) -> Result<(Vec<(usize, usize)>, usize), RdbError> {
        let schema = self.schema;
        let mut s: IndexSet<(usize, usize)> = IndexSet::new();
        for (t, v) in self.by_value.iter().enumerate() {
            for &r in v.get(id).into_iter().flatten() {
                s.insert((t, r));
            }
        }
        if s.is_empty() {
            return Err(RdbError::UnknownId(id.to_string()));
        }
        let mut frontier: Vec<(usize, usize)> = s.iter().copied().collect();
        let mut rounds = 0;
        while !frontier.is_empty() {
            rounds += 1;
            let mut added = Vec::new();
            for &(t, r) in &frontier {
                let row = &self.db.tables[t][r];
                for fk in &schema.tables[t].foreign_keys {
                    let vals = project(row, &fk.attrs);
                    match self.by_key[fk.target].get(&vals) {
                        Some(rows) => {
                            if !schema.tables[fk.target].background {
                                added.extend(rows.iter().map(|&x| (fk.target, x)));
                            }
                        }
                        None => {
                            let msg = format!(
                                "{} refers to a missing {} tuple",
                                tuple_text(schema, t, row),
                                schema.tables[fk.target].name
                            );
                            if self.strict {
                                return Err(RdbError::Dangling {
                                    table: schema.tables[t].name.to_string(),
                                    tuple: tuple_text(schema, t, row),
                                    target: schema.tables[fk.target].name.to_string(),
                                });
                            }
                            log::warn!("{msg}");
                            self.dangling.push(msg);
                        }
                    }
                }
                if schema.follow == Follow::Both && !schema.tables[t].key.is_empty() {
                    let key = project(row, &schema.tables[t].key);
                    for (u, ut) in schema.tables.iter().enumerate() {
                        if ut.background {
                            continue;
                        }
                        for (fi, fk) in ut.foreign_keys.iter().enumerate() {
                            if fk.target == t {
                                if let Some(rows) = self.by_ref[u][fi].get(&key) {
                                    added.extend(rows.iter().map(|&x| (u, x)));
                                }
                            }
                        }
                    }
                }
            }
            frontier.clear();
            for a in added {
                if s.insert(a) {
                    frontier.push(a);
                }
            }
        }
        let mut out: Vec<(usize, usize)> = s.into_iter().collect();
        out.sort_unstable();
        Ok((out, rounds))
    }

    /// The facts describing one example.
    pub fn extract(&mut self, id: &Term) -> Result<Vec<Literal>, RdbError> {
        let (tuples, _) = self.tuples(id)?;
        Ok(self.facts(&tuples))
    }

    fn facts(&self, tuples: &[(usize, usize)]) -> Vec<Literal> {
        let schema = self.schema;
        tuples
            .iter()
            .filter(|&&(t, _)| !schema.tables[t].elided)
            .map(|&(t, r)| {
                let row = &self.db.tables[t][r];
                let args = row
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| !(schema.drop_id && t == schema.root && i == schema.id_attr))
                    .map(|(_, c)| c.clone())
                    .collect();
                Literal {
                    pred: schema.tables[t].name,
                    args,
                    builtin: None,
                }
            })
            .collect()
    }
}

/// One-shot extraction of a single example.
pub fn extract_example(
    db: &Snapshot,
    schema: &Schema,
    id: &Term,
    strict: bool,
) -> Result<Vec<Literal>, RdbError> {
    Closure::new(schema, db, strict)?.extract(id)
}

#[derive(Clone, Debug, Default)]
pub struct ConvertReport {
    /// Facts of an example that mention another example's identifier.
    pub locality_violations: Vec<(String, String)>,
    pub dangling: Vec<String>,
    pub max_rounds: usize,
}

#[derive(Clone, Debug)]
pub struct Converted {
    pub examples: Vec<Interpretation>,
    pub background: Vec<Literal>,
    pub report: ConvertReport,
}

/// Convert every example of the snapshot. With `classes`, labels must be
/// among them.
pub fn convert_all(
    db: &Snapshot,
    schema: &Schema,
    classes: Option<&[Symbol]>,
    strict: bool,
) -> Result<Converted, RdbError> {
    let root = &schema.tables[schema.root];
    let rows = &db.tables[schema.root];
    // identifiers in first-occurrence order, with their root rows
    let mut ids: IndexSet<Term> = IndexSet::new();
    let mut root_rows: Vec<Vec<usize>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let (at, fresh) = ids.insert_full(r[schema.id_attr].clone());
        if fresh {
            root_rows.push(vec![i]);
        } else {
            if root.key == [schema.id_attr] {
                return Err(RdbError::DuplicateId(r[schema.id_attr].to_string()));
            }
            root_rows[at].push(i);
        }
    }
    if ids.is_empty() {
        return Err(RdbError::NoExamples);
    }
    let mut closure = Closure::new(schema, db, strict)?;
    let mut report = ConvertReport::default();
    let mut examples = Vec::with_capacity(ids.len());
    for (id, rrows) in ids.iter().zip(&root_rows) {
        let class = match schema.class_attr {
            None => return Err(RdbError::MissingClass(id.to_string())),
            Some(a) => {
                let labels: HashSet<String> =
                    rrows.iter().map(|&r| rows[r][a].to_string()).collect();
                match (labels.len(), &rows[rrows[0]][a]) {
                    (1, Term::Atom(s)) if !s.as_str().is_empty() => *s,
                    _ => return Err(RdbError::MissingClass(id.to_string())),
                }
            }
        };
        if classes.is_some_and(|cs| !cs.contains(&class)) {
            return Err(RdbError::MissingClass(format!(
                "{id} (label {class} is not declared)"
            )));
        }
        let (tuples, rounds) = closure.tuples(id)?;
        report.max_rounds = report.max_rounds.max(rounds);
        let facts = closure.facts(&tuples);
        for f in &facts {
            if f.args.iter().any(|a| a != id && ids.contains(a)) {
                report
                    .locality_violations
                    .push((id.to_string(), f.to_string()));
            }
        }
        examples.push(Interpretation::new(id.clone(), class, facts)?);
    }
    for (id, f) in &report.locality_violations {
        log::warn!("example {id}: {f} mentions another example");
    }
    report.dangling = std::mem::take(&mut closure.dangling);
    let background = schema
        .tables
        .iter()
        .enumerate()
        .filter(|(_, t)| t.background)
        .flat_map(|(ti, t)| {
            db.tables[ti].iter().map(move |r| Literal {
                pred: t.name,
                args: r.clone(),
                builtin: None,
            })
        })
        .collect();
    Ok(Converted {
        examples,
        background,
        report,
    })
}

/// Write the background facts as a program.
pub fn write_background(path: &Path, facts: &[Literal]) -> Result<(), RdbError> {
    let io = |source| RdbError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for f in facts {
        writeln!(out, "{f}.").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[&str]]) -> Vec<Vec<Term>> {
        rows.iter()
            .map(|r| r.iter().map(|c| cell(c)).collect())
            .collect()
    }

    #[test]
    fn cells_are_typed() {
        assert_eq!(cell("1"), Term::Int(1));
        assert_eq!(cell("1.0079"), Term::Float(1.0079));
        assert_eq!(cell("H2O"), Term::atom("H2O"));
        assert_eq!(cell("h2o-1"), Term::atom("h2o-1"));
        assert_eq!(cell("-"), Term::atom("-"));
        assert_eq!(cell("1e"), Term::atom("1e"));
    }

    #[test]
    fn root_without_references_is_one_fact() {
        let schema = Schema::parse("table(r, [id, v]). key(r, [id]). example_id(r, id).").unwrap();
        let db = Snapshot {
            tables: vec![table(&[&["a", "1"], &["b", "2"]])],
        };
        let facts = extract_example(&db, &schema, &Term::atom("a"), true).unwrap();
        assert_eq!(facts.len(), 1);
        assert_eq!(facts[0].to_string(), "r(a,1)");
    }

    #[test]
    fn unknown_id_and_dangling_key() {
        let schema = Schema::parse(
            "table(r, [id, s]). table(s, [k]). key(r, [id]). key(s, [k]).
             foreign_key(r, [s], s). example_id(r, id).",
        )
        .unwrap();
        let db = Snapshot {
            tables: vec![table(&[&["a", "x"]]), table(&[&["y"]])],
        };
        assert!(matches!(
            extract_example(&db, &schema, &Term::atom("zz"), true),
            Err(RdbError::UnknownId(_))
        ));
        assert!(matches!(
            extract_example(&db, &schema, &Term::atom("a"), true),
            Err(RdbError::Dangling { .. })
        ));
        let mut c = Closure::new(&schema, &db, false).unwrap();
        assert_eq!(c.extract(&Term::atom("a")).unwrap().len(), 1);
        assert_eq!(c.dangling.len(), 1);
    }

    #[test]
    fn schema_errors() {
        assert!(Schema::parse("table(r, [a]).").is_err());
        assert!(Schema::parse("table(r, [a]). example_id(r, b).").is_err());
        assert!(Schema::parse("table(r, [a]). example_id(r, a). frob(r).").is_err());
        assert!(Schema::parse("table(r, [a]). example_id(r, a). foreign_key(r, [a], q).").is_err());
    }

    #[test]
    fn empty_snapshot_has_no_examples() {
        let schema =
            Schema::parse("table(r, [id, c]). example_id(r, id). class_attribute(r, c).").unwrap();
        let db = Snapshot {
            tables: vec![vec![]],
        };
        assert!(matches!(
            convert_all(&db, &schema, None, true),
            Err(RdbError::NoExamples)
        ));
    }
}
