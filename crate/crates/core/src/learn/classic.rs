//! Depth-first induction over a fully resident example set.

use crate::bias::RefinementContext;
use crate::engine::Solver;
use crate::learn::{BuildReport, Counters, LearnError, Open, Shared};
use crate::store::{DatasetHandle, Interpretation};
use crate::tree::Foldt;

struct Run<'a, 's> {
    shared: &'a Shared<'s>,
    examples: Vec<Interpretation>,
    classes: Vec<usize>,
    solver: Solver,
    report: BuildReport,
}

pub(crate) fn build(
    shared: &Shared<'_>,
    data: &DatasetHandle,
) -> Result<(Foldt, BuildReport), LearnError> {
    let examples = data.load_all()?;
    let classes = examples
        .iter()
        .map(|e| {
            shared
                .settings
                .class_index(e.class)
                .ok_or_else(|| LearnError::UnknownClass(e.id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut dist = vec![0u64; shared.nclasses];
    for &c in &classes {
        dist[c] += 1;
    }
    let mut run = Run {
        shared,
        examples,
        classes,
        solver: Solver::new(),
        report: BuildReport {
            counters_conserved: true,
            ..Default::default()
        },
    };
    let all: Vec<u32> = (0..run.examples.len() as u32).collect();
    let root = Open {
        ctx: RefinementContext::root(shared.settings),
        depth: 1,
        dist,
    };
    let tree = run.node(&all, root)?;
    Ok((tree, run.report))
}

impl Run<'_, '_> {
    fn node(&mut self, idx: &[u32], open: Open) -> Result<Foldt, LearnError> {
        let Some(exp) = self.shared.expand(&open) else {
            return Ok(self.shared.leaf(open.dist));
        };
        let budget = self.shared.settings.params.budget;
        self.report.expanded_nodes += 1;
        self.report.candidates += exp.queries.len() as u64;
        let mut counters = Counters::new(exp.queries.len(), self.shared.nclasses);
        // candidate loop outside, example loop inside
        for (i, q) in exp.queries.iter().enumerate() {
            for &e in idx {
                let ok = self.solver.succeeds(
                    q,
                    &self.examples[e as usize],
                    &self.shared.program,
                    budget,
                )?;
                counters.add(i, ok, self.classes[e as usize]);
            }
            self.report.tests += idx.len() as u64;
        }
        self.report.counters_conserved &= counters.conserved(&open.dist);
        let Some((best, _)) = self.shared.best(&open.dist, &counters) else {
            return Ok(self.shared.leaf(open.dist));
        };
        let q = &exp.queries[best];
        let (mut yes, mut no) = (Vec::new(), Vec::new());
        for &e in idx {
            if self
                .solver
                .succeeds(q, &self.examples[e as usize], &self.shared.program, budget)?
            {
                yes.push(e);
            } else {
                no.push(e);
            }
        }
        let cand = &exp.candidates[best];
        let left = Open {
            ctx: open.ctx.left(cand),
            depth: open.depth + 1,
            dist: counters.branch(best, true).to_vec(),
        };
        let right = Open {
            ctx: open.ctx.right(cand),
            depth: open.depth + 1,
            dist: counters.branch(best, false).to_vec(),
        };
        let l = self.node(&yes, left)?;
        let r = self.node(&no, right)?;
        Ok(Foldt::Node {
            conj: cand.conj.clone(),
            query: open.ctx.query,
            left: Box::new(l),
            right: Box::new(r),
        })
    }
}
