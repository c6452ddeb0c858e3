//! Class distributions and split heuristics.

use thiserror::Error;

use crate::settings::{Heuristic, LearnerParams};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("empty class distribution")]
    Empty,
    #[error("branch distributions do not add up to the parent")]
    Mismatch,
}

/// Class entropy in bits.
pub fn entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitScore {
    pub weighted_entropy: f64,
    pub gain: f64,
    pub split_info: f64,
    /// Undefined when the split information is zero.
    pub gain_ratio: Option<f64>,
}

pub fn split_score(parent: &[u64], left: &[u64], right: &[u64]) -> Result<SplitScore, ScoreError> {
    let n: u64 = parent.iter().sum();
    if n == 0 {
        return Err(ScoreError::Empty);
    }
    if left.len() != parent.len()
        || right.len() != parent.len()
        || parent
            .iter()
            .zip(left)
            .zip(right)
            .any(|((p, l), r)| l + r != *p)
    {
        return Err(ScoreError::Mismatch);
    }
    let nf = n as f64;
    let mut weighted_entropy = 0.0;
    let mut split_info = 0.0;
    for branch in [left, right] {
        let nb: u64 = branch.iter().sum();
        if nb == 0 {
            continue;
        }
        let w = nb as f64 / nf;
        weighted_entropy += w * entropy(branch);
        split_info -= w * w.log2();
    }
    let gain = entropy(parent) - weighted_entropy;
    Ok(SplitScore {
        weighted_entropy,
        gain,
        split_info,
        gain_ratio: (split_info > 0.0).then(|| gain / split_info),
    })
}

impl SplitScore {
    /// Value to maximise under `h`; `None` rejects the candidate.
    pub fn value(&self, h: Heuristic) -> Option<f64> {
        match h {
            Heuristic::GainRatio => self.gain_ratio,
            Heuristic::Gain => Some(self.gain),
            Heuristic::WeightedEntropy => Some(-self.weighted_entropy),
        }
    }
}

pub fn score(
    h: Heuristic,
    parent: &[u64],
    left: &[u64],
    right: &[u64],
) -> Result<Option<f64>, ScoreError> {
    Ok(split_score(parent, left, right)?.value(h))
}

/// A split is worth making when it gains information and leaves at least
/// `minleaf` examples on each side.
pub fn is_good(s: &SplitScore, n_left: u64, n_right: u64, params: &LearnerParams) -> bool {
    let min = params.minleaf.max(1);
    s.gain > params.epsilon && n_left >= min && n_right >= min
}

/// Index of the most frequent class; ties go to the earliest declared.
pub fn majority_class(dist: &[u64]) -> Result<usize, ScoreError> {
    if dist.iter().sum::<u64>() == 0 {
        return Err(ScoreError::Empty);
    }
    let mut best = 0;
    for (i, &c) in dist.iter().enumerate() {
        if c > dist[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-5
    }

    #[test]
    fn pure_split() {
        let s = split_score(&[2, 2], &[2, 0], &[0, 2]).unwrap();
        assert_eq!(s.weighted_entropy, 0.0);
        assert_eq!(s.gain, 1.0);
        assert_eq!(s.split_info, 1.0);
        assert_eq!(s.gain_ratio, Some(1.0));
    }

    #[test]
    fn uninformative_split() {
        let s = split_score(&[2, 2], &[1, 1], &[1, 1]).unwrap();
        assert_eq!(s.gain, 0.0);
        let p = LearnerParams::default();
        assert!(!is_good(&s, 2, 2, &p));
    }

    #[test]
    fn three_one_split() {
        // 1 - H(3/4, 1/4)
        let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        let s = split_score(&[4, 4], &[3, 1], &[1, 3]).unwrap();
        assert!(close(s.gain, 1.0 - h));
        assert!(close(s.gain, 0.18872));
        assert!(close(s.gain_ratio.unwrap(), 0.18872));
    }

    #[test]
    fn goodness() {
        let p = LearnerParams {
            minleaf: 5,
            ..LearnerParams::default()
        };
        let s = split_score(&[50, 50], &[1, 0], &[49, 50]).unwrap();
        assert!(!is_good(&s, 1, 99, &p));
        let s = SplitScore {
            weighted_entropy: 0.5,
            gain: 0.3,
            split_info: 1.0,
            gain_ratio: Some(0.3),
        };
        assert!(is_good(&s, 10, 10, &p));
    }

    #[test]
    fn one_sided_split_has_no_ratio() {
        let s = split_score(&[3, 1], &[3, 1], &[0, 0]).unwrap();
        assert_eq!(s.gain_ratio, None);
        assert_eq!(s.value(Heuristic::Gain), Some(0.0));
    }

    #[test]
    fn majority() {
        assert_eq!(majority_class(&[3, 1]), Ok(0));
        assert_eq!(majority_class(&[2, 2]), Ok(0));
        assert_eq!(majority_class(&[0, 7]), Ok(1));
        assert_eq!(majority_class(&[0, 0]), Err(ScoreError::Empty));
    }

    #[test]
    fn errors() {
        assert_eq!(
            split_score(&[0, 0], &[0, 0], &[0, 0]),
            Err(ScoreError::Empty)
        );
        assert_eq!(
            split_score(&[2, 2], &[1, 1], &[1, 2]),
            Err(ScoreError::Mismatch)
        );
    }
}
