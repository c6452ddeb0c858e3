//! Tree induction. Two engines share the refinement operator, the split
//! heuristic and the stopping rules, and therefore build identical trees:
//!
//! * [`classic`]: depth-first, all examples in memory.
//! * [`lds`]: level-wise, one streaming pass over the data per tree level.

pub mod classic;
pub mod lds;

use std::time::Instant;

use thiserror::Error;

use crate::bias::{refinements, Candidate, RefinementContext, ThresholdTable};
use crate::discretize::{compute_thresholds, DiscretizeError};
use crate::engine::{CompiledQuery, EngineError, Program};
use crate::score::{is_good, majority_class, split_score, SplitScore};
use crate::settings::{Algorithm, Settings};
use crate::store::{DatasetHandle, StoreError};
use crate::term::{Literal, Term};
use crate::tree::{Foldt, Model};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error("spill file {path}: {source}")]
    Spill {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("example {0} has a label not declared in the settings")]
    UnknownClass(String),
    #[error("dataset classes {data:?} differ from settings classes {settings:?}")]
    ClassMismatch {
        data: Vec<String>,
        settings: Vec<String>,
    },
}

/// One line of the build log.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLog {
    pub level: usize,
    pub open_nodes: usize,
    pub candidates: usize,
    pub examples: u64,
    pub seconds: f64,
}

impl std::fmt::Display for LevelLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "level {} open_nodes {} candidates {} examples {} seconds {:.6}",
            self.level, self.open_nodes, self.candidates, self.examples, self.seconds
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildReport {
    /// Full streaming passes over the data (LDS only).
    pub passes: u64,
    pub levels: Vec<LevelLog>,
    /// Query evaluations performed while scoring candidates.
    pub tests: u64,
    /// Candidates scored, summed over nodes.
    pub candidates: u64,
    /// Nodes for which candidates were generated.
    pub expanded_nodes: u64,
    /// Counter conservation held at every node and level.
    pub counters_conserved: bool,
    pub seconds: f64,
    pub discretize_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Learned {
    pub model: Model,
    pub report: BuildReport,
}

/// Per-candidate branch distributions at one node.
#[derive(Clone, Debug)]
pub(crate) struct Counters {
    nclasses: usize,
    /// `[candidate][branch][class]`, branch 0 = succeeds.
    cells: Vec<u64>,
}

impl Counters {
    pub(crate) fn new(ncand: usize, nclasses: usize) -> Counters {
        Counters {
            nclasses,
            cells: vec![0; ncand * 2 * nclasses],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, cand: usize, succeeded: bool, class: usize) {
        let b = if succeeded { 0 } else { 1 };
        self.cells[(cand * 2 + b) * self.nclasses + class] += 1;
    }

    pub(crate) fn branch(&self, cand: usize, succeeded: bool) -> &[u64] {
        let b = if succeeded { 0 } else { 1 };
        let at = (cand * 2 + b) * self.nclasses;
        &self.cells[at..at + self.nclasses]
    }

    fn ncand(&self) -> usize {
        self.cells.len() / (2 * self.nclasses)
    }

    /// Every candidate's two branches add up to `dist`.
    pub(crate) fn conserved(&self, dist: &[u64]) -> bool {
        (0..self.ncand()).all(|i| {
            let (l, r) = (self.branch(i, true), self.branch(i, false));
            (0..self.nclasses).all(|c| l[c] + r[c] == dist[c])
        })
    }
}

/// An open node: where it sits and what it may test.
#[derive(Clone, Debug)]
pub(crate) struct Open {
    pub ctx: RefinementContext,
    pub depth: usize,
    pub dist: Vec<u64>,
}

pub(crate) struct Expansion {
    pub candidates: Vec<Candidate>,
    pub queries: Vec<CompiledQuery>,
}

/// Shared induction context.
pub(crate) struct Shared<'a> {
    pub settings: &'a Settings,
    pub program: Program,
    pub thresholds: ThresholdTable,
    pub nclasses: usize,
}

impl Shared<'_> {
    /// Candidates for a node, or `None` when the node is a leaf regardless
    /// of the data: pure, too small to split, at the depth limit, or
    /// without refinements.
    pub fn expand(&self, node: &Open) -> Option<Expansion> {
        let p = &self.settings.params;
        let n: u64 = node.dist.iter().sum();
        let pure = node.dist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || n < 2 * p.minleaf.max(1) || p.max_depth.is_some_and(|d| node.depth >= d) {
            return None;
        }
        let candidates = refinements(&node.ctx, self.settings, &self.thresholds);
        if candidates.is_empty() {
            return None;
        }
        let queries = candidates
            .iter()
            .map(|c| {
                let mut q: Vec<Literal> = node.ctx.query.clone();
                q.extend(c.conj.iter().cloned());
                CompiledQuery::new(&q)
            })
            .collect();
        Some(Expansion {
            candidates,
            queries,
        })
    }

    /// Best admissible candidate by the configured heuristic, first in
    /// generation order on ties; `None` when no candidate is good.
    pub fn best(&self, dist: &[u64], counters: &Counters) -> Option<(usize, SplitScore)> {
        let p = &self.settings.params;
        let min = p.minleaf.max(1);
        let mut best: Option<(usize, SplitScore, f64)> = None;
        for i in 0..counters.ncand() {
            let (l, r) = (counters.branch(i, true), counters.branch(i, false));
            let (nl, nr): (u64, u64) = (l.iter().sum(), r.iter().sum());
            if nl < min || nr < min {
                continue;
            }
            let Ok(s) = split_score(dist, l, r) else {
                continue;
            };
            let Some(v) = s.value(p.heuristic) else {
                continue;
            };
            if best.as_ref().is_none_or(|(_, _, bv)| v > *bv) {
                best = Some((i, s, v));
            }
        }
        let (i, s, _) = best?;
        let (nl, nr) = (
            counters.branch(i, true).iter().sum(),
            counters.branch(i, false).iter().sum(),
        );
        is_good(&s, nl, nr, p).then_some((i, s))
    }

    pub fn leaf(&self, dist: Vec<u64>) -> Foldt {
        let c = majority_class(&dist).unwrap_or(0);
        Foldt::leaf(self.settings.classes[c], dist)
    }
}

fn prepare<'a>(
    settings: &'a Settings,
    data: &DatasetHandle,
    b: &Program,
) -> Result<(Shared<'a>, f64), LearnError> {
    if data.classes != settings.classes {
        return Err(LearnError::ClassMismatch {
            data: data.classes.iter().map(|c| c.to_string()).collect(),
            settings: settings.classes.iter().map(|c| c.to_string()).collect(),
        });
    }
    let mut program = b.clone();
    for r in &settings.rmodes {
        for l in &r.template {
            program.declare(l.key());
        }
    }
    for l in settings
        .lookaheads
        .iter()
        .flat_map(|l| l.trigger.iter().chain(&l.extension))
    {
        program.declare(l.key());
    }
    let start = Instant::now();
    let thresholds = if settings.discretize.is_empty() {
        ThresholdTable::new()
    } else {
        compute_thresholds(settings, data, &program)?
    };
    Ok((
        Shared {
            settings,
            program,
            thresholds,
            nclasses: settings.classes.len(),
        },
        start.elapsed().as_secs_f64(),
    ))
}

fn finish(shared: Shared<'_>, tree: Foldt, data: &DatasetHandle, report: &BuildReport) -> Model {
    let p = &shared.settings.params;
    let mut m = Model::new(tree, shared.settings.clone(), shared.thresholds);
    let mut meta = |k: &str, v: Term| {
        m.meta.insert(k.to_string(), v);
    };
    meta("algorithm", Term::atom(p.algorithm.name()));
    meta("heuristic", Term::atom(p.heuristic.name()));
    meta("minleaf", Term::Int(p.minleaf as i64));
    meta("examples", Term::Int(data.total as i64));
    meta("fingerprint", Term::atom(&data.fingerprint));
    meta("passes", Term::Int(report.passes as i64));
    meta("seconds", Term::Float(report.seconds));
    m
}

/// Learn a model with the algorithm selected in the settings.
pub fn learn(
    data: &DatasetHandle,
    b: &Program,
    settings: &Settings,
) -> Result<Learned, LearnError> {
    match settings.params.algorithm {
        Algorithm::Classic => learn_classic(data, b, settings),
        Algorithm::Lds => learn_lds(data, b, settings),
    }
}

pub fn learn_classic(
    data: &DatasetHandle,
    b: &Program,
    settings: &Settings,
) -> Result<Learned, LearnError> {
    let start = Instant::now();
    let (shared, dsec) = prepare(settings, data, b)?;
    let (tree, mut report) = classic::build(&shared, data)?;
    report.discretize_seconds = dsec;
    report.seconds = start.elapsed().as_secs_f64();
    let model = finish(shared, tree, data, &report);
    Ok(Learned { model, report })
}

pub fn learn_lds(
    data: &DatasetHandle,
    b: &Program,
    settings: &Settings,
) -> Result<Learned, LearnError> {
    let start = Instant::now();
    let (shared, dsec) = prepare(settings, data, b)?;
    let (tree, mut report) = lds::build(&shared, data)?;
    report.discretize_seconds = dsec;
    report.seconds = start.elapsed().as_secs_f64();
    let model = finish(shared, tree, data, &report);
    Ok(Learned { model, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{self, Domain, GenSpec};
    use crate::store::{parse_examples, store_examples, Interpretation};
    use crate::{parse_program, parse_settings};

    fn dataset(
        dir: &std::path::Path,
        s: &Settings,
        ex: &[Interpretation],
        g: usize,
    ) -> DatasetHandle {
        store_examples(dir, g, &s.classes, ex).unwrap()
    }

    #[test]
    fn concept_tree_on_twelve_scenes() {
        let s = parse_settings(gen::BONGARD_SETTINGS).unwrap();
        let ex = parse_examples(gen::BONGARD_SCENES, &s.classes).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let data = dataset(tmp.path(), &s, &ex, 5);
        let c = learn_classic(&data, &Program::empty(), &s).unwrap();
        let l = learn_lds(&data, &Program::empty(), &s).unwrap();
        let want = "node(triangle(V0));node(inside(V0,V1));leaf(pos);leaf(neg);leaf(neg);";
        assert_eq!(c.model.tree.canonical(), want);
        assert!(c.model.tree.same_structure(&l.model.tree));
        assert_eq!(l.report.passes, 3);
        assert_eq!(l.model.tree.depth(), 3);
        assert!(l.report.counters_conserved && c.report.counters_conserved);
    }

    #[test]
    fn single_class_gives_one_leaf() {
        let s = parse_settings(gen::BONGARD_SETTINGS).unwrap();
        let ex: Vec<_> = parse_examples(gen::BONGARD_SCENES, &s.classes)
            .unwrap()
            .into_iter()
            .filter(|e| e.class.as_str() == "neg")
            .collect();
        let tmp = tempfile::tempdir().unwrap();
        let data = dataset(tmp.path(), &s, &ex, 4);
        let l = learn_lds(&data, &Program::empty(), &s).unwrap();
        assert!(matches!(l.model.tree, Foldt::Leaf { .. }));
        assert_eq!(l.report.passes, 1);
    }

    #[test]
    fn engines_agree_on_poker() {
        let s = parse_settings(gen::POKER_SETTINGS).unwrap();
        let b = Program::new(&parse_program(gen::POKER_BACKGROUND).unwrap()).unwrap();
        let ex = gen::generate(&GenSpec::new(Domain::Poker, 300, 5));
        let tmp = tempfile::tempdir().unwrap();
        let data = dataset(tmp.path(), &s, &ex, 7);
        let c = learn_classic(&data, &b, &s).unwrap();
        let l = learn_lds(&data, &b, &s).unwrap();
        assert_eq!(c.model.tree.canonical(), l.model.tree.canonical());
        assert_eq!(l.report.passes as usize, l.model.tree.depth());
        assert!(data.peak_resident() <= 7);
    }

    #[test]
    fn engines_agree_on_random_scenes() {
        let s = parse_settings(gen::BONGARD_SETTINGS).unwrap();
        let ex = gen::generate(&GenSpec::new(Domain::Bongard, 200, 2));
        let tmp = tempfile::tempdir().unwrap();
        let data = dataset(tmp.path(), &s, &ex, 16);
        let c = learn_classic(&data, &Program::empty(), &s).unwrap();
        let l = learn_lds(&data, &Program::empty(), &s).unwrap();
        assert_eq!(c.model.tree.canonical(), l.model.tree.canonical());
        assert_eq!(l.report.passes as usize, l.model.tree.depth());
    }

    #[test]
    fn class_mismatch_is_reported() {
        let s = parse_settings(gen::BONGARD_SETTINGS).unwrap();
        let other = parse_settings("classes([neg,pos]).").unwrap();
        let ex = parse_examples(gen::BONGARD_SCENES, &s.classes).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let data = dataset(tmp.path(), &s, &ex, 5);
        assert!(matches!(
            learn_classic(&data, &Program::empty(), &other),
            Err(LearnError::ClassMismatch { .. })
        ));
    }
}
