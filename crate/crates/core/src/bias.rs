//! The refinement operator ρ defined by rmode and lookahead declarations.

use std::collections::HashMap;

use crate::settings::{Mode, Settings, TemplateArg};
use crate::symbol::Symbol;
use crate::term::{Literal, Term};

/// Where a candidate test is being generated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefinementContext {
    /// Associated query of the node.
    pub query: Vec<Literal>,
    /// Uses of each rmode (by declaration index) on the root-to-node path.
    pub usage: Vec<u32>,
    /// Variable names already introduced anywhere on the path, including
    /// ancestors whose right branch leads here. Fresh variables avoid them.
    pub taken: Vec<Symbol>,
}

impl RefinementContext {
    pub fn root(settings: &Settings) -> RefinementContext {
        RefinementContext {
            query: Vec::new(),
            usage: vec![0; settings.rmodes.len()],
            taken: Vec::new(),
        }
    }

    /// Context of the left child after `cand` was chosen here.
    pub fn left(&self, cand: &Candidate) -> RefinementContext {
        let mut ctx = self.right(cand);
        ctx.query.extend(cand.conj.iter().cloned());
        ctx
    }

    /// Context of the right child: same query, but the rmode use and the
    /// variables of the chosen test stay reserved.
    pub fn right(&self, cand: &Candidate) -> RefinementContext {
        let mut ctx = self.clone();
        if let Some(u) = ctx.usage.get_mut(cand.rmode) {
            *u += 1;
        }
        for l in &cand.conj {
            for v in l.vars() {
                if !ctx.taken.contains(&v) {
                    ctx.taken.push(v);
                }
            }
        }
        ctx
    }

    fn query_vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for l in &self.query {
            l.collect_vars(&mut out);
        }
        out
    }
}

/// A candidate test: the conjunction added to the node's query.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub conj: Vec<Literal>,
    /// Index of the rmode that produced it.
    pub rmode: usize,
    /// True when the conjunction includes a lookahead extension.
    pub lookahead: bool,
}

/// Cut points per threshold variable (`#V` placeholders).
pub type ThresholdTable = HashMap<Symbol, Vec<f64>>;

const FRESH_BASE: [&str; 6] = ["X", "Y", "Z", "U", "V", "W"];

struct Fresh<'a> {
    avoid: &'a [Symbol],
    issued: Vec<Symbol>,
    next: usize,
}

impl Fresh<'_> {
    fn take(&mut self) -> Symbol {
        loop {
            let round = self.next / FRESH_BASE.len();
            let base = FRESH_BASE[self.next % FRESH_BASE.len()];
            self.next += 1;
            let name = if round == 0 {
                Symbol::intern(base)
            } else {
                Symbol::intern(&format!("{base}{round}"))
            };
            if !self.avoid.contains(&name) && !self.issued.contains(&name) {
                self.issued.push(name);
                return name;
            }
        }
    }
}

/// Type of every query variable: the declared type at its first occurrence.
fn var_types(query: &[Literal], settings: &Settings) -> HashMap<Symbol, Option<Symbol>> {
    let mut out = HashMap::new();
    for l in query {
        for (i, a) in l.args.iter().enumerate() {
            if let Term::Var(v) = a {
                out.entry(*v)
                    .or_insert_with(|| settings.arg_type(l.key(), i));
            }
        }
    }
    out
}

fn compatible(a: Option<Symbol>, b: Option<Symbol>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// The refinement operator: all candidate tests at a node, deduplicated up
/// to variable renaming, in declaration/enumeration order.
pub fn refinements(
    ctx: &RefinementContext,
    settings: &Settings,
    thresholds: &ThresholdTable,
) -> Vec<Candidate> {
    let qvars = ctx.query_vars();
    let types = var_types(&ctx.query, settings);
    let mut avoid: Vec<Symbol> = qvars.clone();
    avoid.extend(ctx.taken.iter().copied());

    let mut out: Vec<Candidate> = Vec::new();
    let mut seen: Vec<Vec<Literal>> = Vec::new();
    let mut push = |cand: Candidate, out: &mut Vec<Candidate>| {
        let mut full = ctx.query.clone();
        full.extend(cand.conj.iter().cloned());
        if seen.iter().any(|s| is_variant(s, &full)) {
            return;
        }
        seen.push(full);
        out.push(cand);
    };

    for (ri, rmode) in settings.rmodes.iter().enumerate() {
        if ctx.usage.get(ri).copied().unwrap_or(0) >= rmode.max {
            continue;
        }
        let formals = rmode.formals();
        // declared type of each formal at its first occurrence
        let mut ftype: HashMap<Symbol, Option<Symbol>> = HashMap::new();
        for lit in &rmode.template {
            for (i, a) in lit.args.iter().enumerate() {
                if let TemplateArg::Var { name, .. } = a {
                    ftype
                        .entry(*name)
                        .or_insert_with(|| settings.arg_type(lit.key(), i));
                }
            }
        }
        // options per formal: Some(query var) or None for a fresh variable
        let options: Vec<Vec<Option<Symbol>>> = formals
            .iter()
            .map(|(name, mode)| {
                let t = ftype[name];
                let inputs = qvars
                    .iter()
                    .filter(|v| compatible(types[*v], t))
                    .map(|v| Some(*v));
                match mode {
                    Mode::Input => inputs.collect(),
                    Mode::Output => vec![None],
                    Mode::Either => inputs.chain(std::iter::once(None)).collect(),
                }
            })
            .collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let mut odo = vec![0usize; formals.len()];
        loop {
            let choice: Vec<Option<Symbol>> =
                odo.iter().zip(&options).map(|(&i, o)| o[i]).collect();
            let bound: Vec<Symbol> = choice.iter().flatten().copied().collect();
            let injective = bound
                .iter()
                .enumerate()
                .all(|(i, v)| !bound[..i].contains(v));
            if injective {
                let mut fresh = Fresh {
                    avoid: &avoid,
                    issued: Vec::new(),
                    next: 0,
                };
                let actual: HashMap<Symbol, Symbol> = formals
                    .iter()
                    .zip(&choice)
                    .map(|((f, _), c)| (*f, c.unwrap_or_else(|| fresh.take())))
                    .collect();
                for conj in instantiate(&rmode.template, &actual, thresholds) {
                    let base = Candidate {
                        conj,
                        rmode: ri,
                        lookahead: false,
                    };
                    let mut used = avoid.clone();
                    used.extend(fresh.issued.iter().copied());
                    let extended = apply_lookahead(&base.conj, settings, &used);
                    push(base, &mut out);
                    for conj in extended {
                        push(
                            Candidate {
                                conj,
                                rmode: ri,
                                lookahead: true,
                            },
                            &mut out,
                        );
                    }
                }
            }
            if !advance(&mut odo, &options) {
                break;
            }
        }
    }
    out
}

/// Step the odometer, last formal fastest; false after the last setting.
fn advance(odo: &mut [usize], options: &[Vec<Option<Symbol>>]) -> bool {
    for k in (0..odo.len()).rev() {
        odo[k] += 1;
        if odo[k] < options[k].len() {
            return true;
        }
        odo[k] = 0;
    }
    false
}

/// Instantiate a template; one conjunction per combination of thresholds.
fn instantiate(
    template: &[crate::settings::TemplateLiteral],
    actual: &HashMap<Symbol, Symbol>,
    thresholds: &ThresholdTable,
) -> Vec<Vec<Literal>> {
    let mut placeholders: Vec<Symbol> = Vec::new();
    for lit in template {
        for a in &lit.args {
            if let TemplateArg::Threshold(v) = a {
                if !placeholders.contains(v) {
                    placeholders.push(*v);
                }
            }
        }
    }
    let mut combos: Vec<HashMap<Symbol, f64>> = vec![HashMap::new()];
    for p in &placeholders {
        let cuts = thresholds.get(p).map(Vec::as_slice).unwrap_or(&[]);
        combos = combos
            .into_iter()
            .flat_map(|c| {
                cuts.iter().map(move |x| {
                    let mut c = c.clone();
                    c.insert(*p, *x);
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            template
                .iter()
                .map(|tl| {
                    let args = tl
                        .args
                        .iter()
                        .map(|a| match a {
                            TemplateArg::Var { name, .. } => Term::Var(actual[name]),
                            TemplateArg::Const(t) => t.clone(),
                            TemplateArg::Threshold(v) => Term::Float(combo[v]),
                        })
                        .collect();
                    Literal::new(tl.pred.as_str(), args)
                })
                .collect()
        })
        .collect()
}

fn match_into(pat: &Term, t: &Term, sigma: &mut Vec<(Symbol, Term)>) -> bool {
    match pat {
        Term::Var(v) => match sigma.iter().find(|(w, _)| w == v) {
            Some((_, b)) => b == t,
            None => {
                sigma.push((*v, t.clone()));
                true
            }
        },
        Term::Compound(f, ps) => match t {
            Term::Compound(g, ts) if f == g && ps.len() == ts.len() => ps
                .iter()
                .zip(ts.iter())
                .all(|(p, x)| match_into(p, x, sigma)),
            _ => false,
        },
        _ => pat == t,
    }
}

fn match_trigger(trigger: &[Literal], added: &[Literal], sigma: &mut Vec<(Symbol, Term)>) -> bool {
    let Some((first, rest)) = trigger.split_first() else {
        return true;
    };
    for l in added {
        if l.pred != first.pred || l.args.len() != first.args.len() {
            continue;
        }
        let mark = sigma.len();
        if first
            .args
            .iter()
            .zip(&l.args)
            .all(|(p, t)| match_into(p, t, sigma))
            && match_trigger(rest, added, sigma)
        {
            return true;
        }
        sigma.truncate(mark);
    }
    false
}

/// Lookahead extensions of an added conjunction: for each declaration
/// whose trigger matches, `added` followed by the instantiated extension.
/// Unbound extension variables become fresh variables avoiding `used`.
pub fn apply_lookahead(
    added: &[Literal],
    settings: &Settings,
    used: &[Symbol],
) -> Vec<Vec<Literal>> {
    let mut avoid = used.to_vec();
    for l in added {
        l.collect_vars(&mut avoid);
    }
    let mut out = Vec::new();
    for la in &settings.lookaheads {
        let mut sigma = Vec::new();
        if !match_trigger(&la.trigger, added, &mut sigma) {
            continue;
        }
        let mut fresh = Fresh {
            avoid: &avoid,
            issued: Vec::new(),
            next: 0,
        };
        let mut unbound = Vec::new();
        for l in &la.extension {
            for v in l.vars() {
                if !sigma.iter().any(|(w, _)| *w == v) && !unbound.iter().any(|(w, _)| *w == v) {
                    unbound.push((v, Term::Var(fresh.take())));
                }
            }
        }
        sigma.extend(unbound);
        let map = |v: Symbol| sigma.iter().find(|(w, _)| *w == v).map(|(_, t)| t.clone());
        let mut conj = added.to_vec();
        conj.extend(la.extension.iter().map(|l| l.substitute(&map)));
        out.push(conj);
    }
    out
}

/// Are two conjunctions equal as literal multisets up to a bijective
/// renaming of variables?
pub fn is_variant(a: &[Literal], b: &[Literal]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ka: Vec<_> = a.iter().map(|l| (l.pred.as_str(), l.args.len())).collect();
    let mut kb: Vec<_> = b.iter().map(|l| (l.pred.as_str(), l.args.len())).collect();
    ka.sort_unstable();
    kb.sort_unstable();
    if ka != kb {
        return false;
    }
    let mut used = vec![false; b.len()];
    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    variant_from(a, b, 0, &mut used, &mut fwd, &mut bwd)
}

fn rename_match(
    x: &Term,
    y: &Term,
    fwd: &mut Vec<(Symbol, Symbol)>,
    bwd: &mut Vec<(Symbol, Symbol)>,
) -> bool {
    match (x, y) {
        (Term::Var(v), Term::Var(w)) => {
            let f = fwd.iter().find(|(p, _)| p == v).map(|(_, q)| *q);
            let g = bwd.iter().find(|(p, _)| p == w).map(|(_, q)| *q);
            match (f, g) {
                (None, None) => {
                    fwd.push((*v, *w));
                    bwd.push((*w, *v));
                    true
                }
                (Some(f), Some(g)) => f == *w && g == *v,
                _ => false,
            }
        }
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys.iter())
                    .all(|(p, q)| rename_match(p, q, fwd, bwd))
        }
        (Term::Var(_), _) | (_, Term::Var(_)) => false,
        _ => x == y,
    }
}

fn variant_from(
    a: &[Literal],
    b: &[Literal],
    i: usize,
    used: &mut [bool],
    fwd: &mut Vec<(Symbol, Symbol)>,
    bwd: &mut Vec<(Symbol, Symbol)>,
) -> bool {
    let Some(la) = a.get(i) else {
        return true;
    };
    for j in 0..b.len() {
        if used[j] || b[j].pred != la.pred || b[j].args.len() != la.args.len() {
            continue;
        }
        let (mf, mb) = (fwd.len(), bwd.len());
        if la
            .args
            .iter()
            .zip(&b[j].args)
            .all(|(x, y)| rename_match(x, y, fwd, bwd))
        {
            used[j] = true;
            if variant_from(a, b, i + 1, used, fwd, bwd) {
                return true;
            }
            used[j] = false;
        }
        fwd.truncate(mf);
        bwd.truncate(mb);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::theta_subsumes;
    use crate::parser::{conjuncts, parse_term};
    use crate::settings::parse_settings;

    pub(crate) const BONGARD_BIAS: &str = "classes([pos,neg]).
rmode(5: triangle(+-V)).
rmode(5: square(+-V)).
rmode(5: circle(+-V)).
rmode(5: inside(+V,+-W)).
rmode(5: inside(-V,+W)).
rmode(5: points(+V,up)).
rmode(5: points(+V,down)).
";

    fn q(text: &str) -> Vec<Literal> {
        conjuncts(&parse_term(text).unwrap())
            .into_iter()
            .map(|c| Literal::from_term(c).unwrap())
            .collect()
    }

    fn added(cands: &[Candidate]) -> Vec<String> {
        cands
            .iter()
            .map(|c| crate::term::render_conjunction(&c.conj))
            .collect()
    }

    #[test]
    fn root_tests() {
        let s = parse_settings(BONGARD_BIAS).unwrap();
        let c = refinements(&RefinementContext::root(&s), &s, &ThresholdTable::new());
        assert_eq!(added(&c), ["triangle(X)", "square(X)", "circle(X)"]);
    }

    #[test]
    fn ten_tests_below_triangle() {
        let s = parse_settings(BONGARD_BIAS).unwrap();
        let root = RefinementContext::root(&s);
        let first = refinements(&root, &s, &ThresholdTable::new()).remove(0);
        let ctx = root.left(&first);
        assert_eq!(ctx.query, q("triangle(X)"));
        let c = refinements(&ctx, &s, &ThresholdTable::new());
        assert_eq!(
            added(&c),
            [
                "triangle(X)",
                "triangle(Y)",
                "square(X)",
                "square(Y)",
                "circle(X)",
                "circle(Y)",
                "inside(X, Y)",
                "inside(Y, X)",
                "points(X, up)",
                "points(X, down)",
            ]
            .map(|s| s.replace(", ", ","))
        );
        for cand in &c {
            let mut full = ctx.query.clone();
            full.extend(cand.conj.iter().cloned());
            assert!(theta_subsumes(&ctx.query, &full, 10_000).unwrap());
        }
    }

    #[test]
    fn exhausted_rmode_contributes_nothing() {
        let s = parse_settings("classes([a]). rmode(1: p(+-X)). rmode(2: q(+X)).").unwrap();
        let mut ctx = RefinementContext::root(&s);
        ctx.query = q("p(X)");
        ctx.usage = vec![1, 0];
        assert_eq!(
            added(&refinements(&ctx, &s, &ThresholdTable::new())),
            ["q(X)"]
        );
    }

    #[test]
    fn lookahead_extends_candidates() {
        let s = parse_settings(&format!(
            "{BONGARD_BIAS}lookahead(triangle(T), points(T,up)).\nlookahead(triangle(T), points(T,down))."
        ))
        .unwrap();
        let c = refinements(&RefinementContext::root(&s), &s, &ThresholdTable::new());
        assert_eq!(
            added(&c),
            [
                "triangle(X)",
                "triangle(X), points(X,up)",
                "triangle(X), points(X,down)",
                "square(X)",
                "circle(X)"
            ]
        );
        assert!(c[1].lookahead);
        assert!(apply_lookahead(&q("circle(A)"), &s, &[]).is_empty());
    }

    #[test]
    fn lookahead_binds_fresh_variables() {
        let s = parse_settings(
            "classes([a]). rmode(1: atom(+-M, -A)). lookahead(atom(M,A), bond(A,B)).",
        )
        .unwrap();
        let ext = apply_lookahead(&q("atom(X,Y)"), &s, &[Symbol::intern("X")]);
        assert_eq!(ext.len(), 1);
        assert_eq!(
            crate::term::render_conjunction(&ext[0]),
            "atom(X,Y), bond(Y,Z)"
        );
    }

    #[test]
    fn thresholds_expand_placeholders() {
        let s = parse_settings(
            "classes([a,b]). discretize(charge(_, C), C). rmode(2: (charge(+-A, -C), C >= #C)).",
        )
        .unwrap();
        let mut th = ThresholdTable::new();
        th.insert(Symbol::intern("C"), vec![-0.5, 0.25]);
        let c = refinements(&RefinementContext::root(&s), &s, &th);
        assert_eq!(
            added(&c),
            ["charge(X,Y), Y >= -0.5", "charge(X,Y), Y >= 0.25"]
        );
        // no thresholds computed: no candidates from that template
        assert!(refinements(&RefinementContext::root(&s), &s, &ThresholdTable::new()).is_empty());
    }

    #[test]
    fn fresh_names_skip_taken() {
        let s = parse_settings("classes([a]). rmode(5: p(-V)).").unwrap();
        let mut ctx = RefinementContext::root(&s);
        ctx.taken = vec![Symbol::intern("X"), Symbol::intern("Y")];
        assert_eq!(
            added(&refinements(&ctx, &s, &ThresholdTable::new())),
            ["p(Z)"]
        );
    }

    #[test]
    fn variants() {
        assert!(is_variant(&q("p(X,Y), q(Y)"), &q("q(B), p(A,B)")));
        assert!(!is_variant(&q("p(X,Y), q(Y)"), &q("p(A,B), q(A)")));
        assert!(!is_variant(&q("p(X,X)"), &q("p(A,B)")));
        assert!(is_variant(&q("p(X), p(Y), q(X)"), &q("p(X), p(Y), q(Y)")));
        assert!(!is_variant(&q("p(a)"), &q("p(X)")));
    }
}
