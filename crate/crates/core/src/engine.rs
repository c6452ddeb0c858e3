//! Local coverage test: SLD resolution of a conjunctive query against one
//! interpretation plus background clauses.
//!
//! Literals are selected left to right; for a user predicate the example's
//! facts are tried first, then the background clauses in written order.
//! Every alternative tried costs one resolution step.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;
use std::sync::{LazyLock, Mutex};

use thiserror::Error;

use crate::store::Interpretation;
use crate::symbol::Symbol;
use crate::term::{Builtin, Clause, Literal, PredKey, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("resolution budget of {0} steps exhausted (recursive background?)")]
    BudgetExhausted(u64),
    #[error("variable {0} does not occur in the query")]
    NotInQuery(String),
    #[error("builtin {0} cannot be a clause head")]
    BuiltinHead(String),
}

/// Argument of a compiled literal; variables are frame-local indices.
#[derive(Clone, Debug)]
enum CT {
    Var(u32),
    Const(Term),
    Struct(Symbol, Box<[CT]>),
}

#[derive(Clone, Debug)]
struct CLit {
    key: PredKey,
    builtin: Option<Builtin>,
    args: Vec<CT>,
}

struct Compiler {
    names: Vec<Symbol>,
}

impl Compiler {
    fn term(&mut self, t: &Term) -> CT {
        match t {
            Term::Var(v) => {
                let i = match self.names.iter().position(|n| n == v) {
                    Some(i) => i,
                    None => {
                        self.names.push(*v);
                        self.names.len() - 1
                    }
                };
                CT::Var(i as u32)
            }
            Term::Compound(f, args) if !t.is_ground() => {
                CT::Struct(*f, args.iter().map(|a| self.term(a)).collect())
            }
            _ => CT::Const(t.clone()),
        }
    }

    fn lit(&mut self, l: &Literal) -> CLit {
        CLit {
            key: l.key(),
            builtin: l.builtin,
            args: l.args.iter().map(|a| self.term(a)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
struct CClause {
    head: Vec<CT>,
    body: Vec<CLit>,
    nvars: u32,
}

/// Compiled background knowledge.
#[derive(Clone, Debug, Default)]
pub struct Program {
    source: Vec<Clause>,
    clauses: Vec<CClause>,
    by_pred: HashMap<PredKey, Vec<u32>>,
    declared: HashSet<PredKey>,
}

impl Program {
    pub fn new(clauses: &[Clause]) -> Result<Program, EngineError> {
        let mut p = Program {
            source: clauses.to_vec(),
            ..Default::default()
        };
        for c in clauses {
            if c.head.is_builtin() {
                return Err(EngineError::BuiltinHead(c.head.to_string()));
            }
            let mut comp = Compiler { names: Vec::new() };
            let head = c.head.args.iter().map(|a| comp.term(a)).collect();
            let body = c.body.iter().map(|l| comp.lit(l)).collect();
            let id = p.clauses.len() as u32;
            p.clauses.push(CClause {
                head,
                body,
                nvars: comp.names.len() as u32,
            });
            p.by_pred.entry(c.head.key()).or_default().push(id);
        }
        Ok(p)
    }

    pub fn empty() -> Program {
        Program::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.source
    }

    /// Mark a predicate as known even when neither background nor a given
    /// example defines it, suppressing the unknown-predicate warning.
    pub fn declare(&mut self, key: PredKey) {
        self.declared.insert(key);
    }

    pub fn defines(&self, key: &PredKey) -> bool {
        self.by_pred.contains_key(key)
    }
}

static WARNED: LazyLock<Mutex<HashSet<PredKey>>> = LazyLock::new(Mutex::default);

fn warn_unknown(key: PredKey) {
    if WARNED.lock().unwrap().insert(key) {
        log::warn!("unknown predicate {}/{} (treated as failing)", key.0, key.1);
    }
}

/// A query compiled once and evaluated against many examples.
#[derive(Clone, Debug)]
pub struct CompiledQuery {
    lits: Vec<CLit>,
    names: Vec<Symbol>,
}

impl CompiledQuery {
    pub fn new(lits: &[Literal]) -> CompiledQuery {
        let mut comp = Compiler { names: Vec::new() };
        let lits = lits.iter().map(|l| comp.lit(l)).collect();
        CompiledQuery {
            lits,
            names: comp.names,
        }
    }

    pub fn var_index(&self, v: Symbol) -> Option<u32> {
        self.names.iter().position(|n| *n == v).map(|i| i as u32)
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
}

/// Runtime term: ground data, a variable cell, or a non-ground structure.
#[derive(Clone, Debug)]
enum RT {
    G(Term),
    V(u32),
    S(Symbol, Rc<[RT]>),
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
enum LitRef {
    Query(u32),
    Body(u32, u32),
}

#[derive(Clone, Copy)]
struct Goal {
    lit: LitRef,
    base: u32,
    next: u32,
}

#[derive(Clone, Copy)]
enum Alt {
    /// Fact rows `rowbuf[pos..end]` of table `table`, then clauses.
    Facts {
        table: usize,
        pos: usize,
        end: usize,
    },
    /// Background clause `by_pred[key][pos]`.
    Clauses { pos: usize },
}

#[derive(Clone, Copy)]
struct Choice {
    key: PredKey,
    next: u32,
    args: (usize, usize),
    trail: usize,
    nbind: usize,
    arena: usize,
    rows: usize,
    alt: Alt,
}

/// Reusable solver state; one per thread.
#[derive(Default)]
pub struct Solver {
    bindings: Vec<Option<RT>>,
    trail: Vec<u32>,
    arena: Vec<Goal>,
    choices: Vec<Choice>,
    args: Vec<RT>,
    rowbuf: Vec<u32>,
    steps: u64,
    limit: u64,
}

struct Ctx<'a> {
    q: &'a CompiledQuery,
    e: &'a Interpretation,
    b: &'a Program,
}

impl<'a> Ctx<'a> {
    fn lit(&self, r: LitRef) -> &'a CLit {
        match r {
            LitRef::Query(i) => &self.q.lits[i as usize],
            LitRef::Body(c, i) => &self.b.clauses[c as usize].body[i as usize],
        }
    }
}

fn instantiate(ct: &CT, base: u32) -> RT {
    match ct {
        CT::Var(i) => RT::V(base + i),
        CT::Const(t) => RT::G(t.clone()),
        CT::Struct(f, args) => RT::S(*f, args.iter().map(|a| instantiate(a, base)).collect()),
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver::default()
    }

    fn reset(&mut self, nvars: usize, limit: u64) {
        self.bindings.clear();
        self.bindings.resize(nvars, None);
        self.trail.clear();
        self.arena.clear();
        self.choices.clear();
        self.args.clear();
        self.rowbuf.clear();
        self.steps = 0;
        self.limit = limit;
    }

    fn deref(&self, t: &RT) -> RT {
        let mut cur = t.clone();
        while let RT::V(i) = cur {
            match &self.bindings[i as usize] {
                Some(v) => cur = v.clone(),
                None => return RT::V(i),
            }
        }
        cur
    }

    fn bind(&mut self, v: u32, t: RT) {
        self.bindings[v as usize] = Some(t);
        self.trail.push(v);
    }

    fn undo(&mut self, trail_len: usize) {
        while self.trail.len() > trail_len {
            let v = self.trail.pop().unwrap();
            self.bindings[v as usize] = None;
        }
    }

    fn occurs(&self, v: u32, t: &RT) -> bool {
        match self.deref(t) {
            RT::V(w) => v == w,
            RT::G(_) => false,
            RT::S(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn unify(&mut self, a: &RT, b: &RT) -> bool {
        let a = self.deref(a);
        let b = self.deref(b);
        match (&a, &b) {
            (RT::V(x), RT::V(y)) => {
                if x != y {
                    self.bind(*x, b.clone());
                }
                true
            }
            (RT::V(x), RT::S(..)) | (RT::S(..), RT::V(x)) => {
                let other = if matches!(a, RT::V(_)) { &b } else { &a };
                if self.occurs(*x, other) {
                    return false;
                }
                let other = other.clone();
                self.bind(*x, other);
                true
            }
            (RT::V(x), RT::G(_)) => {
                self.bind(*x, b.clone());
                true
            }
            (RT::G(_), RT::V(y)) => {
                self.bind(*y, a.clone());
                true
            }
            (RT::G(s), RT::G(t)) => s == t,
            (RT::G(s), RT::S(f, args)) | (RT::S(f, args), RT::G(s)) => match s {
                Term::Compound(g, gargs) if g == f && gargs.len() == args.len() => {
                    let args = args.clone();
                    let gargs = gargs.clone();
                    args.iter()
                        .zip(gargs.iter())
                        .all(|(x, y)| self.unify(x, &RT::G(y.clone())))
                }
                _ => false,
            },
            (RT::S(f, xs), RT::S(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                let (xs, ys) = (xs.clone(), ys.clone());
                xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
        }
    }

    fn unify_ground(&mut self, a: &RT, t: &Term) -> bool {
        match self.deref(a) {
            RT::V(x) => {
                self.bind(x, RT::G(t.clone()));
                true
            }
            RT::G(s) => s == *t,
            other => self.unify(&other, &RT::G(t.clone())),
        }
    }

    /// Fully dereferenced term; unbound variables come out as `_G<n>`.
    fn resolve(&self, t: &RT) -> Term {
        match self.deref(t) {
            RT::G(t) => t,
            RT::V(i) => Term::var(&format!("_G{i}")),
            RT::S(f, args) => Term::Compound(f, args.iter().map(|a| self.resolve(a)).collect()),
        }
    }

    fn step(&mut self) -> Result<(), EngineError> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(EngineError::BudgetExhausted(self.limit))
        } else {
            Ok(())
        }
    }

    fn builtin(&mut self, op: Builtin, base: u32, lit: &CLit) -> bool {
        let a = instantiate(&lit.args[0], base);
        let b = instantiate(&lit.args[1], base);
        match op {
            Builtin::Unify => self.unify(&a, &b),
            Builtin::NotUnify => {
                let mark = self.trail.len();
                let ok = self.unify(&a, &b);
                self.undo(mark);
                !ok
            }
            _ => {
                let (RT::G(x), RT::G(y)) = (self.deref(&a), self.deref(&b)) else {
                    return false;
                };
                let ord = match (&x, &y) {
                    (Term::Int(i), Term::Int(j)) => i.cmp(j),
                    _ => match (x.as_f64(), y.as_f64()) {
                        (Some(p), Some(q)) => match p.partial_cmp(&q) {
                            Some(o) => o,
                            None => return false,
                        },
                        _ => return false,
                    },
                };
                use std::cmp::Ordering::*;
                match op {
                    Builtin::Less => ord == Less,
                    Builtin::Greater => ord == Greater,
                    Builtin::LessEq => ord != Greater,
                    Builtin::GreaterEq => ord != Less,
                    Builtin::Unify | Builtin::NotUnify => unreachable!(),
                }
            }
        }
    }

    /// Push a choicepoint for user goal `g`; false if nothing can match.
    fn open_choice(&mut self, cx: &Ctx<'_>, g: Goal) -> bool {
        let lit = cx.lit(g.lit);
        let args_start = self.args.len();
        for a in &lit.args {
            self.args.push(instantiate(a, g.base));
        }
        let args = (args_start, self.args.len());
        let rows_start = self.rowbuf.len();
        let alt = match cx.e.table_index(&lit.key) {
            Some(ti) => {
                let table = cx.e.table_at(ti);
                let first = if lit.key.1 > 0 {
                    match self.deref(&self.args[args_start]) {
                        RT::G(t) => Some(t),
                        _ => None,
                    }
                } else {
                    None
                };
                match first {
                    Some(t) => self.rowbuf.extend_from_slice(table.lookup(&t)),
                    None => self.rowbuf.extend(0..table.len() as u32),
                }
                Alt::Facts {
                    table: ti,
                    pos: rows_start,
                    end: self.rowbuf.len(),
                }
            }
            None => {
                if !cx.b.by_pred.contains_key(&lit.key) {
                    if !cx.b.declared.contains(&lit.key) {
                        warn_unknown(lit.key);
                    }
                    self.args.truncate(args_start);
                    return false;
                }
                Alt::Clauses { pos: 0 }
            }
        };
        self.choices.push(Choice {
            key: lit.key,
            next: g.next,
            args,
            trail: self.trail.len(),
            nbind: self.bindings.len(),
            arena: self.arena.len(),
            rows: rows_start,
            alt,
        });
        true
    }

    /// Try the remaining alternatives of the top choicepoint. On success the
    /// new goal list is returned; when exhausted the choicepoint is popped.
    fn retry(&mut self, cx: &Ctx<'_>) -> Result<Option<u32>, EngineError> {
        let top = self.choices.len() - 1;
        let cp = self.choices[top];
        self.undo(cp.trail);
        self.bindings.truncate(cp.nbind);
        self.arena.truncate(cp.arena);
        let mut alt = cp.alt;
        loop {
            match alt {
                Alt::Facts { table, pos, end } => {
                    if pos == end {
                        alt = Alt::Clauses { pos: 0 };
                        continue;
                    }
                    self.step()?;
                    let row = &cx.e.table_at(table).rows()[self.rowbuf[pos] as usize];
                    let mut ok = true;
                    for k in 0..row.len() {
                        let a = self.args[cp.args.0 + k].clone();
                        if !self.unify_ground(&a, &row[k]) {
                            ok = false;
                            break;
                        }
                    }
                    alt = Alt::Facts {
                        table,
                        pos: pos + 1,
                        end,
                    };
                    if ok {
                        self.choices[top].alt = alt;
                        return Ok(Some(cp.next));
                    }
                    self.undo(cp.trail);
                }
                Alt::Clauses { pos } => {
                    let ids = match cx.b.by_pred.get(&cp.key) {
                        Some(ids) if pos < ids.len() => ids,
                        _ => break,
                    };
                    self.step()?;
                    let cid = ids[pos];
                    alt = Alt::Clauses { pos: pos + 1 };
                    let clause = &cx.b.clauses[cid as usize];
                    let base = self.bindings.len() as u32;
                    self.bindings
                        .resize(base as usize + clause.nvars as usize, None);
                    let mut ok = true;
                    for (k, h) in clause.head.iter().enumerate() {
                        let a = self.args[cp.args.0 + k].clone();
                        let ok_k = match h {
                            CT::Const(t) => self.unify_ground(&a, t),
                            other => {
                                let h = instantiate(other, base);
                                self.unify(&a, &h)
                            }
                        };
                        if !ok_k {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        let mut next = cp.next;
                        for i in (0..clause.body.len()).rev() {
                            self.arena.push(Goal {
                                lit: LitRef::Body(cid, i as u32),
                                base,
                                next,
                            });
                            next = (self.arena.len() - 1) as u32;
                        }
                        self.choices[top].alt = alt;
                        return Ok(Some(next));
                    }
                    self.undo(cp.trail);
                    self.bindings.truncate(cp.nbind);
                }
            }
        }
        self.choices.pop();
        self.args.truncate(cp.args.0);
        self.rowbuf.truncate(cp.rows);
        Ok(None)
    }

    fn backtrack(&mut self, cx: &Ctx<'_>) -> Result<Option<u32>, EngineError> {
        while !self.choices.is_empty() {
            if let Some(goals) = self.retry(cx)? {
                return Ok(Some(goals));
            }
        }
        Ok(None)
    }

    /// Run from `goals` to the next solution; false when none remain.
    fn run(&mut self, cx: &Ctx<'_>, mut goals: u32) -> Result<bool, EngineError> {
        loop {
            if goals == NIL {
                return Ok(true);
            }
            let g = self.arena[goals as usize];
            let lit = cx.lit(g.lit);
            let advanced = match lit.builtin {
                Some(op) => {
                    self.step()?;
                    if self.builtin(op, g.base, lit) {
                        Some(g.next)
                    } else {
                        None
                    }
                }
                None => {
                    if self.open_choice(cx, g) {
                        self.retry(cx)?
                    } else {
                        None
                    }
                }
            };
            goals = match advanced {
                Some(next) => next,
                None => match self.backtrack(cx)? {
                    Some(next) => next,
                    None => return Ok(false),
                },
            };
        }
    }

    fn start(&mut self, q: &CompiledQuery, limit: u64) -> u32 {
        self.reset(q.names.len(), limit);
        let mut next = NIL;
        for i in (0..q.lits.len()).rev() {
            self.arena.push(Goal {
                lit: LitRef::Query(i as u32),
                base: 0,
                next,
            });
            next = (self.arena.len() - 1) as u32;
        }
        next
    }

    /// Does the existential closure of `q` hold in `e` together with `b`?
    pub fn succeeds(
        &mut self,
        q: &CompiledQuery,
        e: &Interpretation,
        b: &Program,
        limit: u64,
    ) -> Result<bool, EngineError> {
        let goals = self.start(q, limit);
        let cx = Ctx { q, e, b };
        self.run(&cx, goals)
    }

    /// Binding of variable `v` in every solution, in discovery order.
    pub fn answer_all(
        &mut self,
        q: &CompiledQuery,
        v: Symbol,
        e: &Interpretation,
        b: &Program,
        limit: u64,
    ) -> Result<Vec<Term>, EngineError> {
        let vi = q
            .var_index(v)
            .ok_or_else(|| EngineError::NotInQuery(v.to_string()))?;
        let goals = self.start(q, limit);
        let cx = Ctx { q, e, b };
        let mut out = Vec::new();
        if !self.run(&cx, goals)? {
            return Ok(out);
        }
        loop {
            out.push(self.resolve(&RT::V(vi)));
            match self.backtrack(&cx)? {
                Some(g) => {
                    if !self.run(&cx, g)? {
                        return Ok(out);
                    }
                }
                None => return Ok(out),
            }
        }
    }

    /// Steps used by the last call.
    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One-shot form of [`Solver::succeeds`].
pub fn succeeds(
    q: &[Literal],
    e: &Interpretation,
    b: &Program,
    limit: u64,
) -> Result<bool, EngineError> {
    Solver::new().succeeds(&CompiledQuery::new(q), e, b, limit)
}

/// One-shot form of [`Solver::answer_all`].
pub fn answer_all(
    q: &[Literal],
    v: Symbol,
    e: &Interpretation,
    b: &Program,
    limit: u64,
) -> Result<Vec<Term>, EngineError> {
    Solver::new().answer_all(&CompiledQuery::new(q), v, e, b, limit)
}

// ---------------------------------------------------------------------------
// theta-subsumption

#[derive(Debug, Error, PartialEq)]
#[error("theta-subsumption search exceeded {0} steps")]
pub struct SubsumptionBudget(pub u64);

/// Is there a substitution θ with `q1θ ⊆ q2` (as literal sets)?
/// Variables of `q2` behave as constants.
pub fn theta_subsumes(
    q1: &[Literal],
    q2: &[Literal],
    limit: u64,
) -> Result<bool, SubsumptionBudget> {
    let mut theta: Vec<(Symbol, Term)> = Vec::new();
    let mut steps = 0u64;
    subsume_from(q1, q2, 0, &mut theta, &mut steps, limit)
}

fn match_term(pat: &Term, t: &Term, theta: &mut Vec<(Symbol, Term)>) -> bool {
    match pat {
        Term::Var(v) => match theta.iter().find(|(w, _)| w == v) {
            Some((_, bound)) => bound == t,
            None => {
                theta.push((*v, t.clone()));
                true
            }
        },
        Term::Compound(f, ps) => match t {
            Term::Compound(g, ts) if f == g && ps.len() == ts.len() => ps
                .iter()
                .zip(ts.iter())
                .all(|(p, x)| match_term(p, x, theta)),
            _ => false,
        },
        _ => pat == t,
    }
}

fn subsume_from(
    q1: &[Literal],
    q2: &[Literal],
    i: usize,
    theta: &mut Vec<(Symbol, Term)>,
    steps: &mut u64,
    limit: u64,
) -> Result<bool, SubsumptionBudget> {
    let Some(l1) = q1.get(i) else {
        return Ok(true);
    };
    for l2 in q2 {
        if l1.pred != l2.pred || l1.args.len() != l2.args.len() {
            continue;
        }
        *steps += 1;
        if *steps > limit {
            return Err(SubsumptionBudget(limit));
        }
        let mark = theta.len();
        if l1
            .args
            .iter()
            .zip(&l2.args)
            .all(|(p, t)| match_term(p, t, theta))
            && subsume_from(q1, q2, i + 1, theta, steps, limit)?
        {
            return Ok(true);
        }
        theta.truncate(mark);
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_term};
    use crate::store::parse_examples;

    fn q(text: &str) -> Vec<Literal> {
        let t = parse_term(text).unwrap();
        crate::parser::conjuncts(&t)
            .into_iter()
            .map(|c| Literal::from_term(c).unwrap())
            .collect()
    }

    fn example(facts: &str) -> Interpretation {
        let text = format!("begin(model(1)).\n{facts}\npos.\nend(model(1)).\n");
        parse_examples(&text, &[Symbol::intern("pos")])
            .unwrap()
            .remove(0)
    }

    const PIC1: &str = "circle(o1). triangle(o2). points(o2,up). inside(o2,o1).";
    const PIC2: &str = "triangle(o3). points(o3,up). triangle(o4). points(o4,down). triangle(o5). points(o5,down). square(o6). inside(o4,o6).";
    const BG: &str = "polygon(O) :- triangle(O).
polygon(O) :- square(O).
doubletriangle(O1,O2) :- triangle(O1), triangle(O2), O1 \\= O2.";

    #[test]
    fn picture_one_triangle_inside() {
        let e = example(PIC1);
        let b = Program::empty();
        assert!(succeeds(&q("triangle(X), inside(X,Y)"), &e, &b, 1000).unwrap());
        assert!(!succeeds(&q("circle(X), inside(X,Y)"), &e, &b, 1000).unwrap());
        assert!(succeeds(&[], &e, &b, 1).unwrap());
    }

    #[test]
    fn background_rules() {
        let e = example(PIC2);
        let b = Program::new(&parse_program(BG).unwrap()).unwrap();
        assert!(succeeds(&q("doubletriangle(A,B)"), &e, &b, 1000).unwrap());
        assert!(succeeds(&q("polygon(X), inside(X,Y)"), &e, &b, 1000).unwrap());
        assert!(!succeeds(&q("doubletriangle(A,A)"), &e, &b, 1000).unwrap());
        let ans = answer_all(&q("polygon(P)"), Symbol::intern("P"), &e, &b, 1000).unwrap();
        let shown: Vec<String> = ans.iter().map(Term::to_string).collect();
        assert_eq!(shown, ["o3", "o4", "o5", "o6"]);
    }

    #[test]
    fn answer_all_keeps_duplicates_in_order() {
        let e = example("card(7,spades). card(queen,hearts). card(9,clubs). card(9,spades). card(ace,diamonds).");
        let ans = answer_all(
            &q("card(R,S)"),
            Symbol::intern("R"),
            &e,
            &Program::empty(),
            1000,
        )
        .unwrap();
        let shown: Vec<String> = ans.iter().map(Term::to_string).collect();
        assert_eq!(shown, ["7", "queen", "9", "9", "ace"]);
        let none = answer_all(
            &q("card(R,S), card(R,hearts), R = 9"),
            Symbol::intern("R"),
            &e,
            &Program::empty(),
            1000,
        )
        .unwrap();
        assert!(none.is_empty());
        assert!(matches!(
            answer_all(
                &q("card(R,S)"),
                Symbol::intern("Z"),
                &e,
                &Program::empty(),
                1000
            ),
            Err(EngineError::NotInQuery(_))
        ));
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let b = Program::new(&parse_program("loop(X) :- loop(X).").unwrap()).unwrap();
        let e = example("");
        assert_eq!(
            succeeds(&q("loop(a)"), &e, &b, 500),
            Err(EngineError::BudgetExhausted(500))
        );
    }

    #[test]
    fn comparisons_are_numeric_and_exact() {
        let e = example("v(1). v(2.5). v(abc).");
        let b = Program::empty();
        assert!(succeeds(&q("v(X), X > 2"), &e, &b, 100).unwrap());
        assert!(!succeeds(&q("v(X), X > 2.5"), &e, &b, 100).unwrap());
        assert!(succeeds(&q("v(X), X >= 2.5"), &e, &b, 100).unwrap());
        assert!(succeeds(&q("v(X), X =< 1"), &e, &b, 100).unwrap());
        assert!(!succeeds(&q("v(X), X < 1"), &e, &b, 100).unwrap());
        // non-numbers never compare
        assert_eq!(
            answer_all(&q("v(X), X >= 0"), Symbol::intern("X"), &e, &b, 100)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn unknown_predicate_fails() {
        let e = example(PIC1);
        assert!(!succeeds(&q("hexagon(X)"), &e, &Program::empty(), 100).unwrap());
    }

    #[test]
    fn compound_arguments() {
        let b = Program::new(&parse_program("wrap(X, box(X)).").unwrap()).unwrap();
        let e = example("item(a). item(f(b)).");
        let ans = answer_all(&q("item(I), wrap(I, W)"), Symbol::intern("W"), &e, &b, 100).unwrap();
        let shown: Vec<String> = ans.iter().map(Term::to_string).collect();
        assert_eq!(shown, ["box(a)", "box(f(b))"]);
        assert!(succeeds(&q("item(f(Z)), Z = b"), &e, &b, 100).unwrap());
    }

    #[test]
    fn subsumption_cases() {
        assert!(theta_subsumes(&q("triangle(X)"), &q("triangle(X), inside(X,Y)"), 1000).unwrap());
        assert!(!theta_subsumes(&q("p(X,X)"), &q("p(a,b)"), 1000).unwrap());
        assert!(theta_subsumes(&q("p(X,Y)"), &q("p(a,a)"), 1000).unwrap());
        assert!(theta_subsumes(&q("p(X,Y), p(Y,Z)"), &q("p(a,b), p(b,c)"), 1000).unwrap());
        assert!(!theta_subsumes(&q("p(X,Y), p(Y,X)"), &q("p(a,b), p(b,c)"), 1000).unwrap());
        assert!(theta_subsumes(&[], &q("p(a)"), 1).unwrap());
    }
}
