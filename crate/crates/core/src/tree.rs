//! First-order logical decision trees and model files.

use std::collections::HashMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bias::ThresholdTable;
use crate::engine::{CompiledQuery, EngineError, Program, Solver};
use crate::parser::{parse_clause_terms, parse_program, ParseError};
use crate::settings::{parse_settings, Settings, SettingsError};
use crate::store::Interpretation;
use crate::symbol::Symbol;
use crate::term::{quote_atom, render_conjunction, Literal, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum Foldt {
    Leaf {
        class: Symbol,
        /// Training class distribution, in declared class order.
        dist: Vec<u64>,
    },
    Node {
        /// Conjunction tested here (added to the associated query).
        conj: Vec<Literal>,
        /// Associated query of this node.
        query: Vec<Literal>,
        left: Box<Foldt>,
        right: Box<Foldt>,
    },
}

impl Foldt {
    pub fn leaf(class: Symbol, dist: Vec<u64>) -> Foldt {
        Foldt::Leaf { class, dist }
    }

    fn pretty(&self, f: &mut std::fmt::Formatter<'_>, indent: &str) -> std::fmt::Result {
        match self {
            Foldt::Leaf { class, dist } => writeln!(f, "{} {dist:?}", quote_atom(class.as_str())),
            Foldt::Node {
                conj, left, right, ..
            } => {
                writeln!(f, "{} ?", render_conjunction(conj))?;
                write!(f, "{indent}+--yes: ")?;
                left.pretty(f, &format!("{indent}|       "))?;
                write!(f, "{indent}+--no:  ")?;
                right.pretty(f, &format!("{indent}        "))
            }
        }
    }

    /// Depth in node levels: a lone leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Foldt::Leaf { .. } => 1,
            Foldt::Node { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Foldt::Leaf { .. } => 1,
            Foldt::Node { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Foldt::Leaf { .. } => 1,
            Foldt::Node { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Same splits and leaf labels, up to a consistent renaming of variables.
    /// Leaf counts are ignored.
    pub fn same_structure(&self, other: &Foldt) -> bool {
        self.canonical() == other.canonical()
    }

    /// Text of the tree with variables renamed in order of first appearance
    /// (depth-first, left before right) and without leaf counts.
    pub fn canonical(&self) -> String {
        let mut names: HashMap<Symbol, Symbol> = HashMap::new();
        let mut out = String::new();
        self.canonical_into(&mut names, &mut out);
        out
    }

    fn canonical_into(&self, names: &mut HashMap<Symbol, Symbol>, out: &mut String) {
        match self {
            Foldt::Leaf { class, .. } => {
                let _ = write!(out, "leaf({});", quote_atom(class.as_str()));
            }
            Foldt::Node {
                conj, left, right, ..
            } => {
                let renamed: Vec<Literal> = conj
                    .iter()
                    .map(|l| {
                        for v in l.vars() {
                            let n = names.len();
                            names
                                .entry(v)
                                .or_insert_with(|| Symbol::intern(&format!("V{n}")));
                        }
                        l.substitute(&|v| names.get(&v).map(|s| Term::Var(*s)))
                    })
                    .collect();
                let _ = write!(out, "node({});", render_conjunction(&renamed));
                left.canonical_into(names, out);
                right.canonical_into(names, out);
            }
        }
    }

    /// Variable-scope rule: variables introduced by a node's conjunction
    /// never occur in its right subtree.
    pub fn check_scope(&self) -> bool {
        match self {
            Foldt::Leaf { .. } => true,
            Foldt::Node {
                conj,
                query,
                left,
                right,
            } => {
                let mut known = Vec::new();
                for l in query {
                    l.collect_vars(&mut known);
                }
                let mut introduced = Vec::new();
                for l in conj {
                    for v in l.vars() {
                        if !known.contains(&v) && !introduced.contains(&v) {
                            introduced.push(v);
                        }
                    }
                }
                let mut right_vars = Vec::new();
                right.collect_vars(&mut right_vars);
                introduced.iter().all(|v| !right_vars.contains(v))
                    && left.check_scope()
                    && right.check_scope()
            }
        }
    }

    fn collect_vars(&self, out: &mut Vec<Symbol>) {
        if let Foldt::Node {
            conj,
            query,
            left,
            right,
        } = self
        {
            for l in conj.iter().chain(query) {
                l.collect_vars(out);
            }
            left.collect_vars(out);
            right.collect_vars(out);
        }
    }

    /// Do the stored associated queries match the tree structure?
    pub fn queries_coherent(&self) -> bool {
        fn walk(t: &Foldt, q: &[Literal]) -> bool {
            match t {
                Foldt::Leaf { .. } => true,
                Foldt::Node {
                    conj,
                    query,
                    left,
                    right,
                } => {
                    let mut qb = q.to_vec();
                    qb.extend(conj.iter().cloned());
                    query == q && walk(left, &qb) && walk(right, q)
                }
            }
        }
        walk(self, &[])
    }

    fn leaves_with_guards(&self, q: &[Literal], out: &mut Vec<(Symbol, Vec<Literal>)>) {
        match self {
            Foldt::Leaf { class, .. } => out.push((*class, q.to_vec())),
            Foldt::Node {
                conj, left, right, ..
            } => {
                let mut qb = q.to_vec();
                qb.extend(conj.iter().cloned());
                left.leaves_with_guards(&qb, out);
                right.leaves_with_guards(q, out);
            }
        }
    }
}

/// One clause of the decision-list form of a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub class: Symbol,
    pub guard: Vec<Literal>,
    pub cut: bool,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "class({})", quote_atom(self.class.as_str()))?;
        if !self.guard.is_empty() || self.cut {
            f.write_str(" :- ")?;
            if !self.guard.is_empty() {
                f.write_str(&render_conjunction(&self.guard))?;
                if self.cut {
                    f.write_str(", ")?;
                }
            }
            if self.cut {
                f.write_str("!")?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported model file version: {0}")]
    Version(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("model file: {0}")]
    Parse(#[from] ParseError),
    #[error("model file bias section: {0}")]
    Settings(#[from] SettingsError),
}

pub const MODEL_HEADER: &str = "foldt-model v1";

/// A learned tree together with everything needed to apply it.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub tree: Foldt,
    pub classes: Vec<Symbol>,
    /// Bias and parameters the tree was learned with.
    pub settings: Settings,
    pub thresholds: ThresholdTable,
    /// Build metadata: algorithm, parameters, dataset fingerprint, timings.
    pub meta: IndexMap<String, Term>,
}

impl Model {
    pub fn new(tree: Foldt, settings: Settings, thresholds: ThresholdTable) -> Model {
        Model {
            tree,
            classes: settings.classes.clone(),
            settings,
            thresholds,
            meta: IndexMap::new(),
        }
    }

    pub fn classify(&self, e: &Interpretation, b: &Program) -> Result<Symbol, EngineError> {
        self.classifier().classify(e, b, &mut Solver::new())
    }

    pub fn classifier(&self) -> Classifier {
        let mut nodes = Vec::new();
        flatten(&self.tree, &[], &mut nodes);
        Classifier {
            nodes,
            budget: self.settings.params.budget,
        }
    }

    /// Leaves in depth-first, left-before-right order, each guarded by its
    /// associated query. Every rule carries a cut except a final guard-free one.
    pub fn to_decision_list(&self) -> Vec<Rule> {
        let mut leaves = Vec::new();
        self.tree.leaves_with_guards(&[], &mut leaves);
        let n = leaves.len();
        leaves
            .into_iter()
            .enumerate()
            .map(|(i, (class, guard))| Rule {
                cut: !(i + 1 == n && guard.is_empty()),
                class,
                guard,
            })
            .collect()
    }

    /// First rule whose guard succeeds.
    pub fn classify_by_rules(
        rules: &[Rule],
        e: &Interpretation,
        b: &Program,
        budget: u64,
    ) -> Result<Option<Symbol>, EngineError> {
        let mut solver = Solver::new();
        for r in rules {
            if solver.succeeds(&CompiledQuery::new(&r.guard), e, b, budget)? {
                return Ok(Some(r.class));
            }
        }
        Ok(None)
    }

    pub fn check_scope(&self) -> bool {
        self.tree.check_scope()
    }

    /// Short hash of the canonical tree structure.
    pub fn tree_hash(&self) -> String {
        tree_hash(&self.tree)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{MODEL_HEADER}\n");
        out.push_str("section(meta).\n");
        let classes = Term::list(self.classes.iter().map(|c| Term::Atom(*c)).collect());
        let _ = writeln!(out, "classes({classes}).");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta({}, {}).", quote_atom(k), v);
        }
        out.push_str("section(bias).\n");
        out.push_str(&self.settings.render());
        out.push_str("section(thresholds).\n");
        let mut keys: Vec<&Symbol> = self.thresholds.keys().collect();
        keys.sort_by_key(|s| s.as_str());
        for k in keys {
            let cuts = Term::list(self.thresholds[k].iter().map(|x| Term::Float(*x)).collect());
            let _ = writeln!(out, "threshold({}, {cuts}).", quote_atom(k.as_str()));
        }
        out.push_str("section(tree).\n");
        write_tree(&self.tree, 0, &mut out);
        out.push_str("section(decision_list).\n");
        for r in self.to_decision_list() {
            let _ = writeln!(out, "{r}");
        }
        out.push_str("section(end).\n");
        out
    }

    pub fn deserialize(text: &str) -> Result<Model, ModelError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != MODEL_HEADER {
            return Err(ModelError::Version(header.to_string()));
        }
        let mut sections: IndexMap<String, String> = IndexMap::new();
        let mut current: Option<String> = None;
        for line in lines {
            let t = line.trim();
            if let Some(name) = t
                .strip_prefix("section(")
                .and_then(|r| r.strip_suffix(")."))
            {
                current = Some(name.to_string());
                sections.insert(name.to_string(), String::new());
                continue;
            }
            match &current {
                Some(c) => {
                    let s = sections.get_mut(c).unwrap();
                    s.push_str(line);
                    s.push('\n');
                }
                None if t.is_empty() => {}
                None => {
                    return Err(ModelError::Malformed(format!(
                        "content before first section: {t}"
                    )))
                }
            }
        }
        for required in ["meta", "bias", "thresholds", "tree", "decision_list", "end"] {
            if !sections.contains_key(required) {
                return Err(ModelError::Malformed(format!("missing section {required}")));
            }
        }

        let mut classes = None;
        let mut meta = IndexMap::new();
        for (t, _) in parse_clause_terms(&sections["meta"])? {
            match t.functor().map(|(f, n)| (f.as_str(), n)) {
                Some(("classes", 1)) => {
                    let items = t.args()[0]
                        .as_list()
                        .ok_or_else(|| ModelError::Malformed("classes is not a list".into()))?;
                    classes = Some(
                        items
                            .into_iter()
                            .map(|i| match i {
                                Term::Atom(s) => Ok(*s),
                                _ => Err(ModelError::Malformed(format!("bad class {i}"))),
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                Some(("meta", 2)) => {
                    let Term::Atom(k) = &t.args()[0] else {
                        return Err(ModelError::Malformed(format!("bad meta key in {t}")));
                    };
                    meta.insert(k.as_str().to_string(), t.args()[1].clone());
                }
                _ => return Err(ModelError::Malformed(format!("unexpected meta entry {t}"))),
            }
        }
        let classes = classes.ok_or_else(|| ModelError::Malformed("no classes".into()))?;
        let settings = parse_settings(&sections["bias"])?;

        let mut thresholds = ThresholdTable::new();
        for (t, _) in parse_clause_terms(&sections["thresholds"])? {
            let bad = || ModelError::Malformed(format!("bad threshold entry {t}"));
            if t.functor().map(|(f, n)| (f.as_str(), n)) != Some(("threshold", 2)) {
                return Err(bad());
            }
            let Term::Atom(v) = &t.args()[0] else {
                return Err(bad());
            };
            let cuts = t.args()[1]
                .as_list()
                .ok_or_else(bad)?
                .into_iter()
                .map(|x| x.as_f64().ok_or_else(bad))
                .collect::<Result<Vec<_>, _>>()?;
            thresholds.insert(*v, cuts);
        }

        let items = parse_clause_terms(&sections["tree"])?;
        let mut it = items.into_iter().map(|(t, _)| t);
        let tree = read_tree(&mut it)?;
        if let Some(extra) = it.next() {
            return Err(ModelError::Malformed(format!(
                "trailing tree entry {extra}"
            )));
        }
        // the decision list is derived data, but it must still parse
        parse_program(&sections["decision_list"])?;

        let m = Model {
            tree,
            classes,
            settings,
            thresholds,
            meta,
        };
        if let Some(bad) = m.leaf_labels().into_iter().find(|c| !m.classes.contains(c)) {
            return Err(ModelError::Malformed(format!(
                "leaf label {bad} is not a declared class"
            )));
        }
        Ok(m)
    }

    fn leaf_labels(&self) -> Vec<Symbol> {
        let mut v = Vec::new();
        fn walk(t: &Foldt, v: &mut Vec<Symbol>) {
            match t {
                Foldt::Leaf { class, .. } => v.push(*class),
                Foldt::Node { left, right, .. } => {
                    walk(left, v);
                    walk(right, v);
                }
            }
        }
        walk(&self.tree, &mut v);
        v
    }
}

pub fn tree_hash(t: &Foldt) -> String {
    let digest = Sha256::digest(t.canonical().as_bytes());
    hex::encode(&digest[..8])
}

fn lits_term(lits: &[Literal]) -> Term {
    Term::list(lits.iter().map(Literal::to_term).collect())
}

fn write_tree(t: &Foldt, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match t {
        Foldt::Leaf { class, dist } => {
            let d = Term::list(dist.iter().map(|c| Term::Int(*c as i64)).collect());
            let _ = writeln!(out, "{pad}leaf({}, {d}).", quote_atom(class.as_str()));
        }
        Foldt::Node {
            conj,
            query,
            left,
            right,
        } => {
            let _ = writeln!(out, "{pad}node({}, {}).", lits_term(conj), lits_term(query));
            write_tree(left, depth + 1, out);
            write_tree(right, depth + 1, out);
        }
    }
}

fn term_lits(t: &Term) -> Result<Vec<Literal>, ModelError> {
    t.as_list()
        .ok_or_else(|| ModelError::Malformed(format!("expected a literal list, got {t}")))?
        .into_iter()
        .map(|x| Literal::from_term(x).map_err(ModelError::Malformed))
        .collect()
}

fn read_tree(it: &mut impl Iterator<Item = Term>) -> Result<Foldt, ModelError> {
    let t = it
        .next()
        .ok_or_else(|| ModelError::Malformed("tree section ends early".into()))?;
    match t.functor().map(|(f, n)| (f.as_str(), n)) {
        Some(("leaf", 2)) => {
            let Term::Atom(class) = &t.args()[0] else {
                return Err(ModelError::Malformed(format!("bad leaf {t}")));
            };
            let dist = t.args()[1]
                .as_list()
                .ok_or_else(|| ModelError::Malformed(format!("bad leaf {t}")))?
                .into_iter()
                .map(|c| match c {
                    Term::Int(n) if *n >= 0 => Ok(*n as u64),
                    _ => Err(ModelError::Malformed(format!("bad leaf count in {t}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Foldt::leaf(*class, dist))
        }
        Some(("node", 2)) => {
            let conj = term_lits(&t.args()[0])?;
            let query = term_lits(&t.args()[1])?;
            let left = read_tree(it)?;
            let right = read_tree(it)?;
            Ok(Foldt::Node {
                conj,
                query,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        _ => Err(ModelError::Malformed(format!("unexpected tree entry {t}"))),
    }
}

enum CNode {
    Leaf(Symbol),
    Test {
        query: CompiledQuery,
        left: usize,
        right: usize,
    },
}

fn flatten(t: &Foldt, q: &[Literal], nodes: &mut Vec<CNode>) -> usize {
    let at = nodes.len();
    match t {
        Foldt::Leaf { class, .. } => nodes.push(CNode::Leaf(*class)),
        Foldt::Node {
            conj, left, right, ..
        } => {
            let mut qb = q.to_vec();
            qb.extend(conj.iter().cloned());
            nodes.push(CNode::Test {
                query: CompiledQuery::new(&qb),
                left: 0,
                right: 0,
            });
            let l = flatten(left, &qb, nodes);
            let r = flatten(right, q, nodes);
            if let CNode::Test { left, right, .. } = &mut nodes[at] {
                *left = l;
                *right = r;
            }
        }
    }
    at
}

/// A model with every node's query compiled once, for repeated use.
pub struct Classifier {
    nodes: Vec<CNode>,
    budget: u64,
}

impl Classifier {
    /// Walk the tree: on success of `Q ∧ conj` go left with the extended
    /// query, otherwise right with `Q` unchanged.
    pub fn classify(
        &self,
        e: &Interpretation,
        b: &Program,
        solver: &mut Solver,
    ) -> Result<Symbol, EngineError> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                CNode::Leaf(c) => return Ok(*c),
                CNode::Test { query, left, right } => {
                    at = if solver.succeeds(query, e, b, self.budget)? {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Indented yes/no rendering with training counts at the leaves.
impl std::fmt::Display for Foldt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.pretty(f, "")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{conjuncts, parse_term};
    use crate::store::parse_examples;

    fn q(text: &str) -> Vec<Literal> {
        conjuncts(&parse_term(text).unwrap())
            .into_iter()
            .map(|c| Literal::from_term(c).unwrap())
            .collect()
    }

    fn sym(s: &str) -> Symbol {
        Symbol::intern(s)
    }

    pub(crate) fn triangle_model() -> Model {
        let tree = Foldt::Node {
            conj: q("triangle(X)"),
            query: vec![],
            left: Box::new(Foldt::Node {
                conj: q("inside(X,Y)"),
                query: q("triangle(X)"),
                left: Box::new(Foldt::leaf(sym("pos"), vec![6, 0])),
                right: Box::new(Foldt::leaf(sym("neg"), vec![0, 3])),
            }),
            right: Box::new(Foldt::leaf(sym("neg"), vec![0, 3])),
        };
        let settings = parse_settings("classes([pos,neg]).").unwrap();
        Model::new(tree, settings, ThresholdTable::new())
    }

    fn ex(facts: &str) -> Interpretation {
        let text = format!("begin(model(1)).\n{facts}\npos.\nend(model(1)).\n");
        parse_examples(&text, &[sym("pos"), sym("neg")])
            .unwrap()
            .remove(0)
    }

    #[test]
    fn classify_follows_branches() {
        let m = triangle_model();
        let b = Program::empty();
        let pic1 = ex("circle(o1). triangle(o2). points(o2,up). inside(o2,o1).");
        assert_eq!(m.classify(&pic1, &b).unwrap().as_str(), "pos");
        assert_eq!(m.classify(&ex("circle(c1)."), &b).unwrap().as_str(), "neg");
        assert_eq!(
            m.classify(&ex("triangle(t1)."), &b).unwrap().as_str(),
            "neg"
        );
    }

    #[test]
    fn decision_list_program() {
        let m = triangle_model();
        let text: Vec<String> = m.to_decision_list().iter().map(Rule::to_string).collect();
        assert_eq!(
            text,
            [
                "class(pos) :- triangle(X), inside(X,Y), !.",
                "class(neg) :- triangle(X), !.",
                "class(neg)."
            ]
        );
        let single = Model::new(
            Foldt::leaf(sym("pos"), vec![1, 0]),
            parse_settings("classes([pos,neg]).").unwrap(),
            ThresholdTable::new(),
        );
        let rules = single.to_decision_list();
        assert_eq!(rules.len(), 1);
        assert!(!rules[0].cut && rules[0].guard.is_empty());
    }

    #[test]
    fn scope_rule() {
        assert!(triangle_model().check_scope());
        assert!(triangle_model().tree.queries_coherent());
        let bad = Foldt::Node {
            conj: q("triangle(X)"),
            query: vec![],
            left: Box::new(Foldt::leaf(sym("pos"), vec![1, 0])),
            right: Box::new(Foldt::Node {
                conj: q("inside(X,Y)"),
                query: vec![],
                left: Box::new(Foldt::leaf(sym("pos"), vec![1, 0])),
                right: Box::new(Foldt::leaf(sym("neg"), vec![0, 1])),
            }),
        };
        assert!(!bad.check_scope());
    }

    #[test]
    fn serialization_round_trip() {
        let mut m = triangle_model();
        m.meta.insert("algorithm".into(), Term::atom("lds"));
        m.meta.insert("seconds".into(), Term::Float(0.25));
        m.thresholds.insert(sym("C"), vec![-0.5, 1.25]);
        let text = m.serialize();
        assert!(text.starts_with("foldt-model v1\n"));
        assert!(text.contains("class(pos) :- triangle(X), inside(X,Y), !.\n"));
        assert!(text.contains("class(neg) :- triangle(X), !.\n"));
        assert!(text.contains("class(neg).\n"));
        let back = Model::deserialize(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_files() {
        let text = triangle_model().serialize();
        let cut = &text[..text.find("section(tree)").unwrap() + 40];
        assert!(matches!(
            Model::deserialize(cut),
            Err(ModelError::Malformed(_)) | Err(ModelError::Parse(_))
        ));
        assert!(matches!(
            Model::deserialize(&text.replace("v1", "v9")),
            Err(ModelError::Version(_))
        ));
    }

    #[test]
    fn structure_ignores_names_and_counts() {
        let a = triangle_model().tree;
        let text = triangle_model()
            .serialize()
            .replace("X", "A")
            .replace("Y", "B")
            .replace("[6,0]", "[12,0]");
        let b = Model::deserialize(&text).unwrap().tree;
        assert_ne!(a, b);
        assert!(a.same_structure(&b));
        assert_eq!(tree_hash(&a), tree_hash(&b));
        assert_eq!(a.depth(), 3);
    }
}
