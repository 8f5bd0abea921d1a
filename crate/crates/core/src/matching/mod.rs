//! One-to-one matching between predictions (rows) and ground truths (columns).
//!
//! Every matcher only considers entries with IoU strictly above the
//! threshold. Results are deterministic: among assignments whose total IoU is
//! equal (within [`TIE_TOLERANCE`]) the one whose per-prediction choices are
//! lexicographically smallest wins, where a matched ground truth with a lower
//! index beats a higher one and any match beats no match.

mod brute;
mod greedy;
mod hungarian;

use serde::Serialize;
use thiserror::Error;

pub use brute::{brute_force_match, BRUTE_FORCE_LIMIT};
pub use greedy::greedy_match;
pub use hungarian::unique_match;

/// Totals closer than this are treated as equal when breaking ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("matrix data has {len} entries, expected {rows}x{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("brute-force matching supports at most {limit}x{limit}, got {rows}x{cols}")]
    TooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },
}

/// Dense row-major IoU matrix: predictions along rows, ground truths along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IouMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl IouMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatchError> {
        if data.len() != rows * cols {
            return Err(MatchError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds an `n×m` matrix from nested rows.
    ///
    /// # Panics
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged IoU matrix");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// `rows × 0` or `0 × cols` matrices are allowed.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn transposed(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub pred: usize,
    pub gt: usize,
    pub iou: f64,
}

/// Matched pairs plus the unmatched predictions (false positives) and
/// unmatched ground truths (false negatives) at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Sorted by prediction index.
    pub pairs: Vec<MatchPair>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
    pub threshold: f64,
}

impl MatchResult {
    /// Builds a result from a per-prediction choice of ground truth.
    pub(crate) fn from_assignment(
        ious: &IouMatrix,
        threshold: f64,
        choice: &[Option<usize>],
    ) -> Self {
        debug_assert_eq!(choice.len(), ious.rows());
        let mut gt_used = vec![false; ious.cols()];
        let mut pairs = Vec::new();
        let mut false_positives = Vec::new();
        for (pred, c) in choice.iter().enumerate() {
            match *c {
                Some(gt) => {
                    debug_assert!(!gt_used[gt], "ground truth {gt} matched twice");
                    gt_used[gt] = true;
                    pairs.push(MatchPair {
                        pred,
                        gt,
                        iou: ious.get(pred, gt),
                    });
                }
                None => false_positives.push(pred),
            }
        }
        let false_negatives = (0..ious.cols()).filter(|&j| !gt_used[j]).collect();
        Self {
            pairs,
            false_positives,
            false_negatives,
            threshold,
        }
    }

    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.false_positives.len()
    }

    pub fn fn_count(&self) -> usize {
        self.false_negatives.len()
    }

    /// Sum of matched IoUs, accumulated in prediction order.
    pub fn total_iou(&self) -> f64 {
        self.pairs.iter().fold(0.0, |acc, p| acc + p.iou)
    }

    /// Matched `(pred, gt)` index pairs, without IoUs.
    pub fn pair_indices(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|p| (p.pred, p.gt)).collect()
    }
}

/// Matching strategy used by the threshold-based metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    /// Maximum total IoU assignment.
    #[default]
    Unique,
    /// Descending-IoU greedy assignment.
    Greedy,
}

impl Matcher {
    pub fn run(self, ious: &IouMatrix, threshold: f64) -> MatchResult {
        match self {
            Matcher::Unique => unique_match(ious, threshold),
            Matcher::Greedy => greedy_match(ious, threshold),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Matcher::Unique => "unique",
            Matcher::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Matcher {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unique" => Ok(Matcher::Unique),
            "greedy" => Ok(Matcher::Greedy),
            other => Err(format!(
                "unknown matcher \"{other}\" (expected unique or greedy)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_identities_hold() {
        let m = IouMatrix::from_rows(&[[0.9, 0.0, 0.0], [0.0, 0.0, 0.7]]);
        let r = MatchResult::from_assignment(&m, 0.5, &[Some(0), None]);
        assert_eq!(r.tp() + r.fp(), 2);
        assert_eq!(r.tp() + r.fn_count(), 3);
        assert_eq!(r.false_negatives, vec![1, 2]);
    }

    #[test]
    fn shape_is_validated() {
        assert!(matches!(
            IouMatrix::new(2, 2, vec![0.0; 3]),
            Err(MatchError::Shape { .. })
        ));
    }

    #[test]
    fn matcher_names_parse() {
        assert_eq!("unique".parse::<Matcher>().unwrap(), Matcher::Unique);
        assert_eq!("greedy".parse::<Matcher>().unwrap(), Matcher::Greedy);
        assert!("hungarian".parse::<Matcher>().is_err());
    }
}
