//! Entropy-based discretization of numeric query bindings, with the
//! minimum-description-length stopping rule of Fayyad and Irani.

use std::collections::VecDeque;

use thiserror::Error;

use crate::bias::ThresholdTable;
use crate::engine::{CompiledQuery, EngineError, Program, Solver};
use crate::score::entropy;
use crate::settings::{DiscretizeRequest, Settings};
use crate::store::{DatasetHandle, Selector, StoreError};
use crate::term::render_conjunction;

#[derive(Debug, Error)]
pub enum DiscretizeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("discretize({query}, {var}): non-numeric value {value} in example {example}")]
    NonNumeric {
        query: String,
        var: String,
        value: String,
        example: String,
    },
    #[error("discretize({query}, {var}): no values found in any example")]
    NoValues { query: String, var: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub request: DiscretizeRequest,
    /// Strictly increasing cut points.
    pub cuts: Vec<f64>,
}

/// All bindings of the request variable across the dataset, each labelled
/// with the class index of its example.
pub fn collect_values(
    req: &DiscretizeRequest,
    data: &DatasetHandle,
    b: &Program,
    budget: u64,
) -> Result<Vec<(f64, usize)>, DiscretizeError> {
    let q = CompiledQuery::new(&req.query);
    let mut solver = Solver::new();
    let mut out = Vec::new();
    for item in data.stream(Selector::All) {
        let (_, e) = item?;
        let class = data.classes.iter().position(|&c| c == e.class).unwrap_or(0);
        for v in solver.answer_all(&q, req.var, &e, b, budget)? {
            let x = v.as_f64().ok_or_else(|| DiscretizeError::NonNumeric {
                query: render_conjunction(&req.query),
                var: req.var.to_string(),
                value: v.to_string(),
                example: e.id.to_string(),
            })?;
            out.push((x, class));
        }
    }
    if out.is_empty() {
        return Err(DiscretizeError::NoValues {
            query: render_conjunction(&req.query),
            var: req.var.to_string(),
        });
    }
    Ok(out)
}

fn counts(values: &[(f64, usize)], nclasses: usize) -> Vec<u64> {
    let mut c = vec![0u64; nclasses];
    for &(_, k) in values {
        c[k] += 1;
    }
    c
}

/// Best boundary of a sorted slice: (split index, weighted entropy).
fn best_cut(values: &[(f64, usize)], nclasses: usize) -> Option<(usize, f64)> {
    let n = values.len() as f64;
    let mut left = vec![0u64; nclasses];
    let mut right = counts(values, nclasses);
    let mut best: Option<(usize, f64)> = None;
    for i in 1..values.len() {
        let k = values[i - 1].1;
        left[k] += 1;
        right[k] -= 1;
        if values[i - 1].0 == values[i].0 {
            continue;
        }
        let e = (i as f64 / n) * entropy(&left) + ((values.len() - i) as f64 / n) * entropy(&right);
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((i, e));
        }
    }
    best
}

fn accept(values: &[(f64, usize)], cut: usize, nclasses: usize) -> bool {
    let (s1, s2) = values.split_at(cut);
    let present = |c: &[u64]| c.iter().filter(|&&x| x > 0).count() as f64;
    let (c, c1, c2) = (
        counts(values, nclasses),
        counts(s1, nclasses),
        counts(s2, nclasses),
    );
    let (e, e1, e2) = (entropy(&c), entropy(&c1), entropy(&c2));
    let n = values.len() as f64;
    let weighted = (s1.len() as f64 / n) * e1 + (s2.len() as f64 / n) * e2;
    let gain = e - weighted;
    let k = present(&c);
    let delta = (3f64.powf(k) - 2.0).log2() - (k * e - present(&c1) * e1 - present(&c2) * e2);
    gain > ((n - 1.0).log2() + delta) / n
}

/// Recursive entropy splitting with the MDL stopping rule; at most `max`
/// cut points, accepted breadth-first.
pub fn mdl_cuts(values: &[(f64, usize)], nclasses: usize, max: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cuts = Vec::new();
    let mut queue = VecDeque::from([(0usize, sorted.len())]);
    while let Some((lo, hi)) = queue.pop_front() {
        if cuts.len() >= max {
            break;
        }
        let part = &sorted[lo..hi];
        let Some((i, _)) = best_cut(part, nclasses) else {
            continue;
        };
        if !accept(part, i, nclasses) {
            continue;
        }
        let (a, b) = (part[i - 1].0, part[i].0);
        let mid = a + (b - a) / 2.0;
        if mid > a && mid < b {
            cuts.push(mid);
        }
        queue.push_back((lo, lo + i));
        queue.push_back((lo + i, hi));
    }
    cuts.sort_by(f64::total_cmp);
    cuts
}

pub fn discretize(
    req: &DiscretizeRequest,
    data: &DatasetHandle,
    b: &Program,
    budget: u64,
    max: usize,
) -> Result<Thresholds, DiscretizeError> {
    if max == 0 {
        return Ok(Thresholds {
            request: req.clone(),
            cuts: Vec::new(),
        });
    }
    let values = collect_values(req, data, b, budget)?;
    Ok(Thresholds {
        request: req.clone(),
        cuts: mdl_cuts(&values, data.classes.len(), max),
    })
}

/// Thresholds for every discretize request in the settings, keyed by the
/// request variable. Requests sharing a variable pool their cut points.
pub fn compute_thresholds(
    settings: &Settings,
    data: &DatasetHandle,
    b: &Program,
) -> Result<ThresholdTable, DiscretizeError> {
    let mut table = ThresholdTable::new();
    for req in &settings.discretize {
        let th = discretize(
            req,
            data,
            b,
            settings.params.budget,
            settings.params.max_thresholds,
        )?;
        let entry = table.entry(req.var).or_default();
        entry.extend(th.cuts);
        entry.sort_by(f64::total_cmp);
        entry.dedup();
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_clusters_one_cut() {
        let v = [(1.0, 0), (2.0, 0), (3.0, 0), (8.0, 1), (9.0, 1), (10.0, 1)];
        assert_eq!(mdl_cuts(&v, 2, 10), vec![5.5]);
    }

    #[test]
    fn single_class_no_cut() {
        let v = [(1.0, 0), (2.0, 0), (5.0, 0)];
        assert!(mdl_cuts(&v, 2, 10).is_empty());
    }

    #[test]
    fn cap_zero() {
        let v = [(1.0, 0), (2.0, 0), (3.0, 0), (8.0, 1), (9.0, 1), (10.0, 1)];
        assert!(mdl_cuts(&v, 2, 0).is_empty());
    }

    #[test]
    fn cuts_stay_inside_range() {
        let v: Vec<(f64, usize)> = (0..40).map(|i| (i as f64, (i / 10) % 2)).collect();
        let cuts = mdl_cuts(&v, 2, 10);
        assert!(!cuts.is_empty());
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        assert!(cuts.iter().all(|&c| c > 0.0 && c < 39.0));
        assert!(cuts.iter().all(|c| v.iter().all(|(x, _)| x != c)));
    }
}
