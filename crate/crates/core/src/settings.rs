//! Settings files: class labels, language bias directives and learner
//! parameters.
//!
//! ```text
//! classes([pos,neg]).
//! rmode(5: triangle(+-V)).
//! rmode(5: inside(+V,+-W)).
//! lookahead(triangle(T), points(T,up)).
//! typed(inside(object,object)).
//! discretize(charge(_,C), C).
//! set(minleaf, 2).
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::parser::{conjuncts, parse_clause_terms, ParseError, Pos};
use crate::symbol::Symbol;
use crate::term::{Literal, PredKey, Term};

#[derive(Debug, Error, PartialEq)]
pub enum SettingsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{pos}: unknown directive {name}")]
    UnknownDirective { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
    #[error("no class labels declared")]
    NoClasses,
    #[error("class label {0} declared twice")]
    DuplicateClass(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Input,
    Output,
    Either,
}

/// One argument of an rmode template literal.
#[derive(Clone, Debug, PartialEq)]
pub enum TemplateArg {
    /// A formal variable; `mode` is set on its first occurrence only.
    Var { name: Symbol, mode: Option<Mode> },
    /// A literal constant (or any variable-free term).
    Const(Term),
    /// `#V`: expands to each discretization threshold computed for the
    /// `discretize(_, V)` request.
    Threshold(Symbol),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateLiteral {
    pub pred: Symbol,
    pub args: Vec<TemplateArg>,
}

impl TemplateLiteral {
    pub fn key(&self) -> PredKey {
        (self.pred, self.args.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RMode {
    /// Maximal occurrences along any root-to-leaf path.
    pub max: u32,
    pub template: Vec<TemplateLiteral>,
    source: Term,
}

impl RMode {
    /// Formal variables with their modes, in first-occurrence order.
    pub fn formals(&self) -> Vec<(Symbol, Mode)> {
        let mut out = Vec::new();
        for lit in &self.template {
            for a in &lit.args {
                if let TemplateArg::Var {
                    name,
                    mode: Some(m),
                } = a
                {
                    out.push((*name, *m));
                }
            }
        }
        out
    }

    pub fn source(&self) -> &Term {
        &self.source
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lookahead {
    pub trigger: Vec<Literal>,
    pub extension: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizeRequest {
    pub query: Vec<Literal>,
    pub var: Symbol,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Classic,
    Lds,
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "classic" => Ok(Algorithm::Classic),
            "lds" => Ok(Algorithm::Lds),
            _ => Err(format!("unknown algorithm {s} (expected classic or lds)")),
        }
    }
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Classic => "classic",
            Algorithm::Lds => "lds",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heuristic {
    GainRatio,
    Gain,
    WeightedEntropy,
}

impl FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gainratio" => Ok(Heuristic::GainRatio),
            "gain" => Ok(Heuristic::Gain),
            "weighted_entropy" | "weighted-entropy" => Ok(Heuristic::WeightedEntropy),
            _ => Err(format!("unknown heuristic {s}")),
        }
    }
}

impl Heuristic {
    pub fn name(self) -> &'static str {
        match self {
            Heuristic::GainRatio => "gainratio",
            Heuristic::Gain => "gain",
            Heuristic::WeightedEntropy => "weighted_entropy",
        }
    }
}

/// Learner parameters settable with `set(Name, Value).`
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerParams {
    pub algorithm: Algorithm,
    pub heuristic: Heuristic,
    pub minleaf: u64,
    pub epsilon: f64,
    pub budget: u64,
    pub granularity: usize,
    pub max_depth: Option<usize>,
    pub max_thresholds: usize,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            algorithm: Algorithm::Lds,
            heuristic: Heuristic::GainRatio,
            minleaf: 2,
            epsilon: 1e-9,
            budget: 100_000,
            granularity: 10,
            max_depth: None,
            max_thresholds: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub classes: Vec<Symbol>,
    pub rmodes: Vec<RMode>,
    pub lookaheads: Vec<Lookahead>,
    pub types: HashMap<PredKey, Vec<Symbol>>,
    /// `typed` declarations in file order, for rendering.
    type_order: Vec<PredKey>,
    pub discretize: Vec<DiscretizeRequest>,
    pub params: LearnerParams,
}

impl Settings {
    pub fn class_index(&self, label: Symbol) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }

    /// Declared type of argument `pos` of `key`; `None` is the universal type.
    pub fn arg_type(&self, key: PredKey, pos: usize) -> Option<Symbol> {
        self.types.get(&key).and_then(|t| t.get(pos).copied())
    }

    /// Settings text that parses back to an equal value.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let classes = Term::list(self.classes.iter().map(|c| Term::Atom(*c)).collect());
        let _ = writeln!(out, "classes({classes}).");
        for r in &self.rmodes {
            let t = Term::compound(":", vec![Term::Int(r.max as i64), r.source.clone()]);
            let _ = writeln!(out, "{}.", Term::compound("rmode", vec![t]));
        }
        for l in &self.lookaheads {
            let t = Term::compound(
                "lookahead",
                vec![conj_term(&l.trigger), conj_term(&l.extension)],
            );
            let _ = writeln!(out, "{t}.");
        }
        for key in &self.type_order {
            let types = self.types[key].iter().map(|t| Term::Atom(*t)).collect();
            let t = Term::compound("typed", vec![Term::compound(key.0.as_str(), types)]);
            let _ = writeln!(out, "{t}.");
        }
        for d in &self.discretize {
            let t = Term::compound("discretize", vec![conj_term(&d.query), Term::Var(d.var)]);
            let _ = writeln!(out, "{t}.");
        }
        let p = &self.params;
        let mut set = |name: &str, value: Term| {
            let _ = writeln!(
                out,
                "{}.",
                Term::compound("set", vec![Term::atom(name), value])
            );
        };
        set("algorithm", Term::atom(p.algorithm.name()));
        set("heuristic", Term::atom(p.heuristic.name()));
        set("minleaf", Term::Int(p.minleaf as i64));
        set("epsilon", Term::Float(p.epsilon));
        set("budget", Term::Int(p.budget as i64));
        set("granularity", Term::Int(p.granularity as i64));
        if let Some(d) = p.max_depth {
            set("max_depth", Term::Int(d as i64));
        }
        set("max_thresholds", Term::Int(p.max_thresholds as i64));
        out
    }
}

/// Conjunction term `(a, b, c)` for a literal list.
pub fn conj_term(lits: &[Literal]) -> Term {
    let mut it = lits.iter().rev();
    let Some(last) = it.next() else {
        return Term::atom("true");
    };
    it.fold(last.to_term(), |acc, l| {
        Term::compound(",", vec![l.to_term(), acc])
    })
}

fn invalid(pos: Pos, msg: impl Into<String>) -> SettingsError {
    SettingsError::Invalid {
        pos,
        msg: msg.into(),
    }
}

fn literals(t: &Term, pos: Pos) -> Result<Vec<Literal>, SettingsError> {
    conjuncts(t)
        .into_iter()
        .map(|c| Literal::from_term(c).map_err(|m| invalid(pos, m)))
        .collect()
}

fn parse_rmode(t: &Term, pos: Pos) -> Result<RMode, SettingsError> {
    let (count, body) = match t {
        Term::Compound(f, args) if f.as_str() == ":" && args.len() == 2 => (&args[0], &args[1]),
        _ => return Err(invalid(pos, "rmode expects N: Conjunction")),
    };
    let max = match count {
        Term::Int(n) if *n >= 1 => *n as u32,
        Term::Int(n) => return Err(invalid(pos, format!("rmode count must be >= 1, got {n}"))),
        other => {
            return Err(invalid(
                pos,
                format!("rmode count must be an integer, got {other}"),
            ))
        }
    };
    let mut seen: Vec<Symbol> = Vec::new();
    let mut template = Vec::new();
    for lit_t in conjuncts(body) {
        let (pred, raw_args) = match lit_t {
            Term::Atom(s) => (*s, &[][..]),
            Term::Compound(f, a) => (*f, &a[..]),
            _ => return Err(invalid(pos, format!("bad rmode literal {lit_t}"))),
        };
        let mut args = Vec::with_capacity(raw_args.len());
        for a in raw_args {
            let arg = match a {
                Term::Compound(op, inner) if inner.len() == 1 => {
                    let mode = match op.as_str() {
                        "+" => Some(Mode::Input),
                        "-" => Some(Mode::Output),
                        "+-" => Some(Mode::Either),
                        "#" => None,
                        _ => {
                            if !a.is_ground() {
                                return Err(invalid(
                                    pos,
                                    format!("unsupported template argument {a}"),
                                ));
                            }
                            args.push(TemplateArg::Const(a.clone()));
                            continue;
                        }
                    };
                    let Term::Var(name) = inner[0] else {
                        return Err(invalid(
                            pos,
                            format!("mode marker must apply to a variable: {a}"),
                        ));
                    };
                    match mode {
                        None => TemplateArg::Threshold(name),
                        Some(m) => {
                            if seen.contains(&name) {
                                return Err(invalid(
                                    pos,
                                    format!("variable {name} carries a mode marker after its first occurrence"),
                                ));
                            }
                            seen.push(name);
                            TemplateArg::Var {
                                name,
                                mode: Some(m),
                            }
                        }
                    }
                }
                Term::Var(name) => {
                    if !seen.contains(name) {
                        return Err(invalid(
                            pos,
                            format!("variable {name} needs a mode marker at its first occurrence"),
                        ));
                    }
                    TemplateArg::Var {
                        name: *name,
                        mode: None,
                    }
                }
                other if other.is_ground() => TemplateArg::Const(other.clone()),
                other => {
                    return Err(invalid(
                        pos,
                        format!("unsupported template argument {other}"),
                    ))
                }
            };
            args.push(arg);
        }
        template.push(TemplateLiteral { pred, args });
    }
    if template.is_empty() {
        return Err(invalid(pos, "empty rmode template"));
    }
    Ok(RMode {
        max,
        template,
        source: body.clone(),
    })
}

fn set_param(p: &mut LearnerParams, name: &str, v: &Term, pos: Pos) -> Result<(), SettingsError> {
    let uint = |v: &Term| -> Result<u64, SettingsError> {
        match v {
            Term::Int(n) if *n >= 0 => Ok(*n as u64),
            _ => Err(invalid(
                pos,
                format!("{name} expects a nonnegative integer, got {v}"),
            )),
        }
    };
    let word = |v: &Term| -> Result<&'static str, SettingsError> {
        match v {
            Term::Atom(s) => Ok(s.as_str()),
            _ => Err(invalid(pos, format!("{name} expects an atom, got {v}"))),
        }
    };
    match name {
        "algorithm" => p.algorithm = word(v)?.parse().map_err(|m| invalid(pos, m))?,
        "heuristic" => p.heuristic = word(v)?.parse().map_err(|m| invalid(pos, m))?,
        "minleaf" => {
            p.minleaf = uint(v)?;
            if p.minleaf == 0 {
                return Err(invalid(pos, "minleaf must be >= 1"));
            }
        }
        "epsilon" => {
            p.epsilon = v
                .as_f64()
                .filter(|e| *e > 0.0)
                .ok_or_else(|| invalid(pos, "epsilon must be a positive number"))?
        }
        "budget" => p.budget = uint(v)?.max(1),
        "granularity" => {
            p.granularity = uint(v)? as usize;
            if p.granularity == 0 {
                return Err(invalid(pos, "granularity must be >= 1"));
            }
        }
        "max_depth" => p.max_depth = Some(uint(v)? as usize),
        "max_thresholds" => p.max_thresholds = uint(v)? as usize,
        _ => return Err(invalid(pos, format!("unknown parameter {name}"))),
    }
    Ok(())
}

pub fn parse_settings(text: &str) -> Result<Settings, SettingsError> {
    let mut s = Settings {
        classes: Vec::new(),
        rmodes: Vec::new(),
        lookaheads: Vec::new(),
        types: HashMap::new(),
        type_order: Vec::new(),
        discretize: Vec::new(),
        params: LearnerParams::default(),
    };
    for (t, pos) in parse_clause_terms(text)? {
        let Some((name, arity)) = t.functor() else {
            return Err(invalid(pos, format!("not a directive: {t}")));
        };
        let args = t.args();
        match (name.as_str(), arity) {
            ("classes", 1) => {
                let items = args[0]
                    .as_list()
                    .ok_or_else(|| invalid(pos, "classes expects a list"))?;
                for item in items {
                    let Term::Atom(c) = item else {
                        return Err(invalid(pos, format!("class label must be an atom: {item}")));
                    };
                    if s.classes.contains(c) {
                        return Err(SettingsError::DuplicateClass(c.to_string()));
                    }
                    s.classes.push(*c);
                }
            }
            ("rmode", 1) => s.rmodes.push(parse_rmode(&args[0], pos)?),
            ("lookahead", 2) => {
                let trigger = literals(&args[0], pos)?;
                let extension = literals(&args[1], pos)?;
                if trigger.is_empty() || extension.is_empty() {
                    return Err(invalid(
                        pos,
                        "lookahead needs a trigger and a nonempty extension",
                    ));
                }
                s.lookaheads.push(Lookahead { trigger, extension });
            }
            ("typed", 1) => {
                let decl = &args[0];
                let (pred, n) = decl
                    .functor()
                    .ok_or_else(|| invalid(pos, "typed expects pred(type, ...)"))?;
                let mut types = Vec::with_capacity(n);
                for a in decl.args() {
                    let Term::Atom(ty) = a else {
                        return Err(invalid(pos, format!("type must be an atom: {a}")));
                    };
                    types.push(*ty);
                }
                if s.types.insert((pred, n), types).is_none() {
                    s.type_order.push((pred, n));
                }
            }
            ("discretize", 2) => {
                let query = literals(&args[0], pos)?;
                let Term::Var(var) = args[1] else {
                    return Err(invalid(
                        pos,
                        "discretize expects a variable as second argument",
                    ));
                };
                if !query.iter().any(|l| l.vars().contains(&var)) {
                    return Err(invalid(
                        pos,
                        format!("variable {var} does not occur in the query"),
                    ));
                }
                s.discretize.push(DiscretizeRequest { query, var });
            }
            ("set", 2) => {
                let Term::Atom(pname) = args[0] else {
                    return Err(invalid(pos, "set expects a parameter name"));
                };
                set_param(&mut s.params, pname.as_str(), &args[1], pos)?;
            }
            _ => {
                return Err(SettingsError::UnknownDirective {
                    pos,
                    name: format!("{name}/{arity}"),
                })
            }
        }
    }
    if s.classes.is_empty() {
        return Err(SettingsError::NoClasses);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmode_modes() {
        let s = parse_settings("classes([pos,neg]).\nrmode(5: inside(+V,+-W)).").unwrap();
        assert_eq!(s.rmodes.len(), 1);
        assert_eq!(s.rmodes[0].max, 5);
        let modes: Vec<Mode> = s.rmodes[0].formals().iter().map(|f| f.1).collect();
        assert_eq!(modes, vec![Mode::Input, Mode::Either]);
    }

    #[test]
    fn classes_directive() {
        let s = parse_settings("classes([pos,neg]).").unwrap();
        assert_eq!(
            s.classes,
            vec![Symbol::intern("pos"), Symbol::intern("neg")]
        );
    }

    #[test]
    fn lookahead_shares_variable() {
        let s = parse_settings("classes([a]).\nlookahead(triangle(T), points(T,up)).").unwrap();
        let la = &s.lookaheads[0];
        assert_eq!(la.trigger[0].vars(), la.extension[0].vars()[..1].to_vec());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_settings("classes([a]).\nfrobnicate(1)."),
            Err(SettingsError::UnknownDirective { .. })
        ));
        assert!(matches!(
            parse_settings("classes([a]).\nrmode(0: p(+X))."),
            Err(SettingsError::Invalid { .. })
        ));
        assert_eq!(
            parse_settings("classes([])."),
            Err(SettingsError::NoClasses)
        );
        assert_eq!(
            parse_settings("set(minleaf, 3)."),
            Err(SettingsError::NoClasses)
        );
        assert!(matches!(
            parse_settings("classes([a,a])."),
            Err(SettingsError::DuplicateClass(_))
        ));
        assert!(matches!(
            parse_settings("classes([a]).\nrmode(1: p(X))."),
            Err(SettingsError::Invalid { .. })
        ));
    }

    #[test]
    fn defaults_and_parameters() {
        let s = parse_settings("classes([a,b]).").unwrap();
        assert_eq!(s.params, LearnerParams::default());
        assert_eq!(s.params.granularity, 10);
        let s = parse_settings(
            "classes([a,b]).\nset(minleaf, 5).\nset(algorithm, classic).\nset(heuristic, gain).\nset(max_depth, 4).",
        )
        .unwrap();
        assert_eq!(s.params.minleaf, 5);
        assert_eq!(s.params.algorithm, Algorithm::Classic);
        assert_eq!(s.params.heuristic, Heuristic::Gain);
        assert_eq!(s.params.max_depth, Some(4));
    }

    #[test]
    fn render_round_trip() {
        let text = "classes([pos,neg]).\n\
            rmode(5: triangle(+-V)).\n\
            rmode(5: inside(+V,+-W)).\n\
            rmode(2: (atom(+M,-A,-C), C >= #C)).\n\
            rmode(5: points(+V,up)).\n\
            lookahead(triangle(T), points(T,up)).\n\
            typed(inside(obj,obj)).\n\
            discretize(atom(_,_,C), C).\n\
            set(minleaf, 3).\n";
        let s = parse_settings(text).unwrap();
        let again = parse_settings(&s.render()).unwrap();
        assert_eq!(s, again);
    }
}
