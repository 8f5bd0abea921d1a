//! Exact pairwise overlap counts between a prediction set and a ground-truth set.

use std::collections::{BTreeMap, HashMap};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::instance::{Canvas, InstanceSet};
use crate::matching::IouMatrix;
use crate::par::if_parallel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverlapError {
    #[error("canvas mismatch: prediction is {pred}, ground truth is {gt}")]
    CanvasMismatch { pred: Canvas, gt: Canvas },
    #[error("index ({pred}, {gt}) out of range for a {n_pred}x{n_gt} table")]
    IndexOutOfRange {
        pred: usize,
        gt: usize,
        n_pred: usize,
        n_gt: usize,
    },
}

/// Intersection counts for every intersecting (prediction, ground truth) pair
/// plus per-instance areas. Zero intersections are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapTable {
    n_pred: usize,
    n_gt: usize,
    intersections: BTreeMap<(usize, usize), u64>,
    pred_areas: Vec<u64>,
    gt_areas: Vec<u64>,
}

#[inline]
pub(crate) fn iou_from_counts(inter: u64, area_a: u64, area_b: u64) -> f64 {
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / (area_a + area_b - inter) as f64
}

#[inline]
pub(crate) fn dice_from_counts(inter: u64, area_a: u64, area_b: u64) -> f64 {
    if inter == 0 {
        return 0.0;
    }
    (2 * inter) as f64 / (area_a + area_b) as f64
}

#[derive(Clone, Copy)]
struct RowRun {
    start: usize,
    end: usize,
    is_pred: bool,
    index: usize,
}

/// Builds the table with a per-row sweep over runs.
///
/// Cost is linear in the number of runs plus the number of intersecting run
/// pairs; rows are scanned in parallel and merged by exact integer addition.
pub fn build_overlap_table(
    pred: &InstanceSet,
    gt: &InstanceSet,
) -> Result<OverlapTable, OverlapError> {
    if pred.canvas() != gt.canvas() {
        return Err(OverlapError::CanvasMismatch {
            pred: pred.canvas(),
            gt: gt.canvas(),
        });
    }
    let canvas = pred.canvas();
    let mut rows: Vec<Vec<RowRun>> = vec![Vec::new(); canvas.height()];
    for (is_pred, set) in [(true, pred), (false, gt)] {
        for (index, mask) in set.instances().iter().enumerate() {
            for r in mask.runs() {
                rows[r.start / canvas.width()].push(RowRun {
                    start: r.start,
                    end: r.end(),
                    is_pred,
                    index,
                });
            }
        }
    }

    let merged: HashMap<(usize, usize), u64> = if_parallel!(
        rows.par_iter_mut()
            .fold(HashMap::new, |mut acc, row| {
                sweep_row(row, &mut acc);
                acc
            })
            .reduce(HashMap::new, merge_counts),
        {
            let mut acc = HashMap::new();
            for row in rows.iter_mut() {
                sweep_row(row, &mut acc);
            }
            acc
        }
    );

    Ok(OverlapTable {
        n_pred: pred.len(),
        n_gt: gt.len(),
        intersections: merged.into_iter().collect(),
        pred_areas: pred.instances().iter().map(|m| m.area() as u64).collect(),
        gt_areas: gt.instances().iter().map(|m| m.area() as u64).collect(),
    })
}

#[cfg_attr(not(feature = "parallel"), allow(dead_code))]
fn merge_counts(
    a: HashMap<(usize, usize), u64>,
    b: HashMap<(usize, usize), u64>,
) -> HashMap<(usize, usize), u64> {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (k, v) in small {
        *big.entry(k).or_insert(0) += v;
    }
    big
}

/// Every intersecting run pair is counted once, when the later-starting run
/// arrives while the other is still active.
fn sweep_row(row: &mut [RowRun], acc: &mut HashMap<(usize, usize), u64>) {
    if row.is_empty() {
        return;
    }
    row.sort_unstable_by_key(|r| (r.start, !r.is_pred, r.index));
    let mut active_pred: Vec<RowRun> = Vec::new();
    let mut active_gt: Vec<RowRun> = Vec::new();
    for &run in row.iter() {
        active_pred.retain(|a| a.end > run.start);
        active_gt.retain(|a| a.end > run.start);
        let others = if run.is_pred {
            &active_gt
        } else {
            &active_pred
        };
        for other in others {
            let overlap = (run.end.min(other.end) - run.start) as u64;
            let key = if run.is_pred {
                (run.index, other.index)
            } else {
                (other.index, run.index)
            };
            *acc.entry(key).or_insert(0) += overlap;
        }
        if run.is_pred {
            active_pred.push(run);
        } else {
            active_gt.push(run);
        }
    }
}

impl OverlapTable {
    pub fn n_pred(&self) -> usize {
        self.n_pred
    }

    pub fn n_gt(&self) -> usize {
        self.n_gt
    }

    pub fn pred_areas(&self) -> &[u64] {
        &self.pred_areas
    }

    pub fn gt_areas(&self) -> &[u64] {
        &self.gt_areas
    }

    /// Non-zero intersections keyed by `(pred, gt)`, in index order.
    pub fn intersections(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.intersections
    }

    fn check(&self, pred: usize, gt: usize) -> Result<(), OverlapError> {
        if pred >= self.n_pred || gt >= self.n_gt {
            return Err(OverlapError::IndexOutOfRange {
                pred,
                gt,
                n_pred: self.n_pred,
                n_gt: self.n_gt,
            });
        }
        Ok(())
    }

    pub fn intersection(&self, pred: usize, gt: usize) -> Result<u64, OverlapError> {
        self.check(pred, gt)?;
        Ok(self.intersections.get(&(pred, gt)).copied().unwrap_or(0))
    }

    pub fn union(&self, pred: usize, gt: usize) -> Result<u64, OverlapError> {
        let inter = self.intersection(pred, gt)?;
        Ok(self.pred_areas[pred] + self.gt_areas[gt] - inter)
    }

    pub fn iou(&self, pred: usize, gt: usize) -> Result<f64, OverlapError> {
        let inter = self.intersection(pred, gt)?;
        Ok(iou_from_counts(
            inter,
            self.pred_areas[pred],
            self.gt_areas[gt],
        ))
    }

    pub fn dice(&self, pred: usize, gt: usize) -> Result<f64, OverlapError> {
        let inter = self.intersection(pred, gt)?;
        Ok(dice_from_counts(
            inter,
            self.pred_areas[pred],
            self.gt_areas[gt],
        ))
    }

    /// Dense N×M IoU matrix, predictions along rows.
    pub fn iou_matrix(&self) -> IouMatrix {
        let mut data = vec![0.0; self.n_pred * self.n_gt];
        for (&(i, j), &inter) in &self.intersections {
            data[i * self.n_gt + j] = iou_from_counts(inter, self.pred_areas[i], self.gt_areas[j]);
        }
        IouMatrix::new(self.n_pred, self.n_gt, data).expect("dimensions match")
    }

    /// The same table with prediction and ground-truth roles exchanged.
    pub fn transposed(&self) -> OverlapTable {
        OverlapTable {
            n_pred: self.n_gt,
            n_gt: self.n_pred,
            intersections: self
                .intersections
                .iter()
                .map(|(&(i, j), &v)| ((j, i), v))
                .collect(),
            pred_areas: self.gt_areas.clone(),
            gt_areas: self.pred_areas.clone(),
        }
    }
}
