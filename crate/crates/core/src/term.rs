//! Terms, literals and clauses of the Prolog subset used by data files,
//! background programs and settings files, together with their renderer.

use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::symbol::Symbol;

/// A Prolog term.
///
/// Integers and floats are kept apart: `1` and `1.0` are different terms.
#[derive(Clone, Debug)]
pub enum Term {
    Atom(Symbol),
    Int(i64),
    Float(f64),
    Var(Symbol),
    Compound(Symbol, Arc<[Term]>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Atom(a), Term::Atom(b)) => a == b,
            (Term::Int(a), Term::Int(b)) => a == b,
            (Term::Float(a), Term::Float(b)) => a.to_bits() == b.to_bits(),
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Compound(f, a), Term::Compound(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Term::Atom(s) | Term::Var(s) => s.hash(state),
            Term::Int(i) => i.hash(state),
            Term::Float(x) => x.to_bits().hash(state),
            Term::Compound(f, args) => {
                f.hash(state);
                args.hash(state);
            }
        }
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Symbol::intern(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::intern(name))
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::atom(functor)
        } else {
            Term::Compound(Symbol::intern(functor), args.into())
        }
    }

    pub fn list(items: Vec<Term>) -> Term {
        let dot = Symbol::intern(".");
        items
            .into_iter()
            .rev()
            .fold(Term::atom("[]"), |tail, head| {
                Term::Compound(dot, vec![head, tail].into())
            })
    }

    /// Elements of a proper list, or `None` when the term is not one.
    pub fn as_list(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Atom(s) if s.as_str() == "[]" => return Some(out),
                Term::Compound(f, args) if f.as_str() == "." && args.len() == 2 => {
                    out.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    /// Functor name and arity; atoms have arity 0.
    pub fn functor(&self) -> Option<(Symbol, usize)> {
        match self {
            Term::Atom(s) => Some((*s, 0)),
            Term::Compound(f, args) => Some((*f, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Float(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Term::Int(i) => Some(*i as f64),
            Term::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Variables in first-occurrence order, without repeats.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// Apply a variable mapping; unmapped variables are kept.
    pub fn substitute(&self, map: &dyn Fn(Symbol) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => map(*v).unwrap_or_else(|| self.clone()),
            Term::Compound(f, args) => {
                Term::Compound(*f, args.iter().map(|a| a.substitute(map)).collect())
            }
            _ => self.clone(),
        }
    }
}

/// Comparison builtins. Everything else is a user predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Unify,
    NotUnify,
    Less,
    Greater,
    LessEq,
    GreaterEq,
}

impl Builtin {
    pub fn from_name(name: &str, arity: usize) -> Option<Builtin> {
        if arity != 2 {
            return None;
        }
        Some(match name {
            "=" => Builtin::Unify,
            "\\=" => Builtin::NotUnify,
            "<" => Builtin::Less,
            ">" => Builtin::Greater,
            "=<" => Builtin::LessEq,
            ">=" => Builtin::GreaterEq,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Unify => "=",
            Builtin::NotUnify => "\\=",
            Builtin::Less => "<",
            Builtin::Greater => ">",
            Builtin::LessEq => "=<",
            Builtin::GreaterEq => ">=",
        }
    }
}

/// Predicate name plus arity.
pub type PredKey = (Symbol, usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub pred: Symbol,
    pub args: Vec<Term>,
    pub builtin: Option<Builtin>,
}

impl Literal {
    pub fn new(pred: &str, args: Vec<Term>) -> Literal {
        Literal {
            builtin: Builtin::from_name(pred, args.len()),
            pred: Symbol::intern(pred),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn key(&self) -> PredKey {
        (self.pred, self.args.len())
    }

    pub fn is_builtin(&self) -> bool {
        self.builtin.is_some()
    }

    /// Interpret a term as a literal. Variables and numbers are rejected.
    pub fn from_term(t: &Term) -> Result<Literal, String> {
        match t {
            Term::Atom(s) => Ok(Literal {
                pred: *s,
                args: Vec::new(),
                builtin: None,
            }),
            Term::Compound(f, args) => Ok(Literal {
                pred: *f,
                args: args.to_vec(),
                builtin: Builtin::from_name(f.as_str(), args.len()),
            }),
            Term::Var(v) => Err(format!("variable {v} used as a literal")),
            _ => Err(format!("number {t} used as a literal")),
        }
    }

    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Atom(self.pred)
        } else {
            Term::Compound(self.pred, self.args.clone().into())
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, map: &dyn Fn(Symbol) -> Option<Term>) -> Literal {
        Literal {
            pred: self.pred,
            args: self.args.iter().map(|a| a.substitute(map)).collect(),
            builtin: self.builtin,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.to_term(), 999))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: Literal,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn fact(head: Literal) -> Clause {
        Clause {
            head,
            body: Vec::new(),
        }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            f.write_str(&render_conjunction(&self.body))?;
        }
        f.write_str(".")
    }
}

/// `a, b, c` rendering of a literal list; `true` for the empty conjunction.
pub fn render_conjunction(lits: &[Literal]) -> String {
    if lits.is_empty() {
        return "true".to_string();
    }
    lits.iter()
        .map(|l| render(&l.to_term(), 999))
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------------------
// Operators

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Assoc {
    Xfx,
    Xfy,
}

pub(crate) fn infix_op(name: &str) -> Option<(u16, Assoc)> {
    Some(match name {
        ":-" => (1200, Assoc::Xfx),
        "," => (1000, Assoc::Xfy),
        ":" => (990, Assoc::Xfx),
        "=" | "\\=" | "<" | ">" | "=<" | ">=" => (700, Assoc::Xfx),
        _ => return None,
    })
}

pub(crate) fn prefix_op(name: &str) -> Option<u16> {
    match name {
        "+" | "-" | "+-" | "#" => Some(200),
        _ => None,
    }
}

/// True when `name` re-parses as an unquoted atom.
pub fn is_plain_atom(name: &str) -> bool {
    if name == "[]" || name == "!" {
        return true;
    }
    let bytes = name.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_lowercase() {
        return false;
    }
    let word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut i = 1;
    while i < bytes.len() {
        let b = bytes[i];
        // a hyphen may join two word characters, as in h2o-1
        if word(b) || (b == b'-' && i + 1 < bytes.len() && word(bytes[i + 1])) {
            i += 1;
        } else {
            return false;
        }
    }
    true
}

pub fn quote_atom(name: &str) -> String {
    if is_plain_atom(name) {
        name.to_string()
    } else {
        let mut s = String::with_capacity(name.len() + 2);
        s.push('\'');
        for c in name.chars() {
            if c == '\'' {
                s.push_str("''");
            } else {
                s.push(c);
            }
        }
        s.push('\'');
        s
    }
}

fn render_float(x: f64) -> String {
    // Debug keeps a fractional part or exponent, so the text re-reads as a float.
    format!("{x:?}")
}

/// Render `t` so that it re-parses in a context accepting priority `max`.
pub fn render(t: &Term, max: u16) -> String {
    let mut out = String::new();
    render_into(t, max, &mut out);
    out
}

fn starts_alpha(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::Atom(s) => is_plain_atom(s.as_str()) && s.as_str() != "[]" && s.as_str() != "!",
        Term::Compound(f, args) => {
            is_plain_atom(f.as_str())
                && f.as_str() != "[]"
                && !(f.as_str() == "." && args.len() == 2)
        }
        _ => false,
    }
}

fn render_into(t: &Term, max: u16, out: &mut String) {
    match t {
        Term::Atom(s) => out.push_str(&quote_atom(s.as_str())),
        Term::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Term::Float(x) => out.push_str(&render_float(*x)),
        Term::Var(v) => out.push_str(v.as_str()),
        Term::Compound(f, args) => {
            let name = f.as_str();
            if let Some(items) = t.as_list() {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    render_into(item, 999, out);
                }
                out.push(']');
                return;
            }
            if args.len() == 2 {
                if let Some((p, assoc)) = infix_op(name) {
                    let (lmax, rmax) = match assoc {
                        Assoc::Xfx => (p - 1, p - 1),
                        Assoc::Xfy => (p - 1, p),
                    };
                    let paren = p > max;
                    if paren {
                        out.push('(');
                    }
                    render_into(&args[0], lmax, out);
                    match name {
                        "," => out.push_str(", "),
                        ":" => out.push_str(": "),
                        _ => {
                            out.push(' ');
                            out.push_str(name);
                            out.push(' ');
                        }
                    }
                    render_into(&args[1], rmax, out);
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            if args.len() == 1 {
                if let Some(p) = prefix_op(name) {
                    if starts_alpha(&args[0]) && p <= max {
                        out.push_str(name);
                        render_into(&args[0], p, out);
                        return;
                    }
                }
            }
            // Symbolic operator names are written bare in functional notation.
            if name != "," && (infix_op(name).is_some() || prefix_op(name).is_some()) {
                out.push_str(name);
            } else {
                out.push_str(&quote_atom(name));
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render_into(a, 999, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, 1200))
    }
}
