//! Established instance segmentation metrics: precision/recall, point AP,
//! mAP over IoU thresholds, PQ = RQ·SQ, Best Dice, SBD and AJI.
//!
//! Degenerate scenes follow one convention throughout: when both sets are
//! empty every score is 1, when exactly one is empty every score is 0.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::InstanceSet;
use crate::matching::{IouMatrix, MatchResult, Matcher};
use crate::overlap::{build_overlap_table, dice_from_counts, OverlapError, OverlapTable};
use crate::par::if_parallel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    Overlap(#[from] OverlapError),
    #[error("threshold list is empty")]
    EmptyThresholds,
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("invalid threshold range \"{0}\"")]
    InvalidRange(String),
    #[error("best dice is undefined for an empty source set")]
    EmptySource,
}

/// Overlap statistics of one prediction/ground-truth pair, computed once and
/// shared by every metric.
#[derive(Debug, Clone)]
pub struct Comparison {
    table: OverlapTable,
    ious: IouMatrix,
}

impl Comparison {
    pub fn new(pred: &InstanceSet, gt: &InstanceSet) -> Result<Self, OverlapError> {
        Ok(Self::from_table(build_overlap_table(pred, gt)?))
    }

    pub fn from_table(table: OverlapTable) -> Self {
        let ious = table.iou_matrix();
        Self { table, ious }
    }

    pub fn table(&self) -> &OverlapTable {
        &self.table
    }

    pub fn ious(&self) -> &IouMatrix {
        &self.ious
    }

    pub fn n_pred(&self) -> usize {
        self.table.n_pred()
    }

    pub fn n_gt(&self) -> usize {
        self.table.n_gt()
    }

    pub fn match_at(&self, threshold: f64, matcher: Matcher) -> MatchResult {
        matcher.run(&self.ious, threshold)
    }

    fn both_empty(&self) -> bool {
        self.n_pred() == 0 && self.n_gt() == 0
    }

    fn one_empty(&self) -> bool {
        (self.n_pred() == 0) != (self.n_gt() == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Precision and recall of a match result. Precision with no predictions and
/// recall with no ground truths are both 1.
pub fn precision_recall(result: &MatchResult) -> PrPoint {
    let (tp, fp, fn_) = (result.tp(), result.fp(), result.fn_count());
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    PrPoint {
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        tp,
        fp,
        fn_,
    }
}

/// Point AP `TP / (TP + FP + FN)` from counts; 1 when all counts are zero.
pub fn ap_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let den = tp + fp + fn_;
    if den == 0 {
        1.0
    } else {
        tp as f64 / den as f64
    }
}

/// Point AP recovered from precision and recall: `1 / (1/P + 1/R - 1)`.
/// Only meaningful when `TP > 0`.
pub fn ap_from_precision_recall(precision: f64, recall: f64) -> f64 {
    1.0 / (1.0 / precision + 1.0 / recall - 1.0)
}

/// Recognition quality implied by a point AP at the same threshold.
pub fn rq_from_ap(ap: f64) -> f64 {
    2.0 * ap / (1.0 + ap)
}

pub fn point_ap(cmp: &Comparison, threshold: f64, matcher: Matcher) -> f64 {
    let r = cmp.match_at(threshold, matcher);
    ap_from_counts(r.tp(), r.fp(), r.fn_count())
}

/// Point AP at `threshold` with unique matching.
pub fn ap_at(pred: &InstanceSet, gt: &InstanceSet, threshold: f64) -> Result<f64, MetricError> {
    check_threshold(threshold)?;
    Ok(point_ap(
        &Comparison::new(pred, gt)?,
        threshold,
        Matcher::Unique,
    ))
}

fn check_threshold(t: f64) -> Result<(), MetricError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(MetricError::InvalidThreshold(t))
    }
}

/// Mean of the point AP over `thresholds`, matching once per threshold.
///
/// Each AP is an exact ratio of counts; the mean is accumulated in exact
/// rational arithmetic and rounded once, so it does not depend on summation
/// order or thread scheduling.
pub fn mean_point_ap(
    cmp: &Comparison,
    thresholds: &[f64],
    matcher: Matcher,
) -> Result<f64, MetricError> {
    if thresholds.is_empty() {
        return Err(MetricError::EmptyThresholds);
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    let counts: Vec<(usize, usize)> = if_parallel!(
        thresholds
            .par_iter()
            .map(|&t| ap_fraction(cmp, t, matcher))
            .collect(),
        thresholds
            .iter()
            .map(|&t| ap_fraction(cmp, t, matcher))
            .collect()
    );
    let sum = counts.iter().fold(BigRational::zero(), |acc, &(num, den)| {
        acc + BigRational::new(BigInt::from(num), BigInt::from(den))
    });
    let mean = sum / BigInt::from(thresholds.len());
    Ok(mean.to_f64().expect("finite rational"))
}

fn ap_fraction(cmp: &Comparison, threshold: f64, matcher: Matcher) -> (usize, usize) {
    let r = cmp.match_at(threshold, matcher);
    let den = r.tp() + r.fp() + r.fn_count();
    if den == 0 {
        (1, 1)
    } else {
        (r.tp(), den)
    }
}

pub fn mean_ap(
    pred: &InstanceSet,
    gt: &InstanceSet,
    thresholds: &[f64],
) -> Result<f64, MetricError> {
    mean_point_ap(&Comparison::new(pred, gt)?, thresholds, Matcher::Unique)
}

/// `start, start + step, …` up to and including `stop` when `step` divides the
/// range. Values are rounded to 12 decimals so that e.g. `0.8` is the same
/// double whether typed or generated.
pub fn threshold_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, MetricError> {
    let describe = || format!("{start}:{stop}:{step}");
    let valid = step > 0.0 && stop >= start && start.is_finite() && stop.is_finite();
    if !valid {
        return Err(MetricError::InvalidRange(describe()));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let values: Vec<f64> = (0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    for &t in &values {
        check_threshold(t)?;
    }
    Ok(values)
}

/// Parses `start:stop:step`.
pub fn parse_threshold_range(spec: &str) -> Result<Vec<f64>, MetricError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, s] = parts[..] else {
        return Err(MetricError::InvalidRange(spec.to_string()));
    };
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| MetricError::InvalidRange(spec.to_string()))
    };
    threshold_range(parse(a)?, parse(b)?, parse(s)?)
}

/// 0.50, 0.55, …, 0.95.
pub fn default_map_thresholds() -> Vec<f64> {
    threshold_range(0.5, 0.95, 0.05).expect("valid default range")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PqBreakdown {
    pub pq: f64,
    pub rq: f64,
    pub sq: f64,
    pub matched_iou_sum: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Panoptic quality from a match result. SQ (and therefore PQ) is 0 when
/// nothing is matched.
pub fn pq_from_match(result: &MatchResult) -> PqBreakdown {
    let (tp, fp, fn_) = (result.tp(), result.fp(), result.fn_count());
    if tp + fp + fn_ == 0 {
        return PqBreakdown {
            pq: 1.0,
            rq: 1.0,
            sq: 1.0,
            matched_iou_sum: 0.0,
            tp,
            fp,
            fn_,
        };
    }
    let matched_iou_sum = result.total_iou();
    let rq = (2 * tp) as f64 / (2 * tp + fp + fn_) as f64;
    let sq = if tp == 0 {
        0.0
    } else {
        matched_iou_sum / tp as f64
    };
    PqBreakdown {
        pq: rq * sq,
        rq,
        sq,
        matched_iou_sum,
        tp,
        fp,
        fn_,
    }
}

pub fn panoptic_quality_of(cmp: &Comparison, threshold: f64, matcher: Matcher) -> PqBreakdown {
    pq_from_match(&cmp.match_at(threshold, matcher))
}

/// PQ at `threshold`; `use_unique` swaps the conventional greedy matching for
/// unique matching.
pub fn panoptic_quality(
    pred: &InstanceSet,
    gt: &InstanceSet,
    threshold: f64,
    use_unique: bool,
) -> Result<PqBreakdown, MetricError> {
    check_threshold(threshold)?;
    let matcher = if use_unique {
        Matcher::Unique
    } else {
        Matcher::Greedy
    };
    Ok(panoptic_quality_of(
        &Comparison::new(pred, gt)?,
        threshold,
        matcher,
    ))
}

/// Mean over source objects (rows of `table`) of the best Dice against any
/// reference object; an object overlapping nothing contributes 0.
fn best_dice_rows(table: &OverlapTable) -> Result<f64, MetricError> {
    if table.n_pred() == 0 {
        return Err(MetricError::EmptySource);
    }
    let mut best = vec![0.0f64; table.n_pred()];
    for (&(i, j), &inter) in table.intersections() {
        let d = dice_from_counts(inter, table.pred_areas()[i], table.gt_areas()[j]);
        best[i] = best[i].max(d);
    }
    Ok(best.iter().sum::<f64>() / table.n_pred() as f64)
}

/// Best Dice of `src` against the reference set `reference`.
pub fn best_dice(src: &InstanceSet, reference: &InstanceSet) -> Result<f64, MetricError> {
    best_dice_rows(&build_overlap_table(src, reference)?)
}

pub fn symmetric_best_dice_of(cmp: &Comparison) -> f64 {
    if cmp.both_empty() {
        return 1.0;
    }
    if cmp.one_empty() {
        return 0.0;
    }
    let pred_to_gt = best_dice_rows(cmp.table()).expect("non-empty");
    let gt_to_pred = best_dice_rows(&cmp.table().transposed()).expect("non-empty");
    pred_to_gt.min(gt_to_pred)
}

pub fn symmetric_best_dice(pred: &InstanceSet, gt: &InstanceSet) -> Result<f64, MetricError> {
    Ok(symmetric_best_dice_of(&Comparison::new(pred, gt)?))
}

/// Aggregated Jaccard index.
///
/// Each ground truth selects the intersecting prediction of highest IoU
/// (exact rational comparison, lowest index on ties); its intersection and
/// union are accumulated. A ground truth with no intersecting prediction adds
/// only its own area to the union. Predictions selected by no ground truth
/// add their area to the union. A prediction may be selected several times.
pub fn aggregated_jaccard_of(cmp: &Comparison) -> f64 {
    if cmp.both_empty() {
        return 1.0;
    }
    if cmp.one_empty() {
        return 0.0;
    }
    let table = cmp.table();
    let (pred_areas, gt_areas) = (table.pred_areas(), table.gt_areas());
    // best (pred, intersection, union) per gt
    let mut best: Vec<Option<(usize, u64, u64)>> = vec![None; table.n_gt()];
    for (&(i, j), &inter) in table.intersections() {
        let union = pred_areas[i] + gt_areas[j] - inter;
        let better = match best[j] {
            None => true,
            // inter/union > b_inter/b_union, ties keep the earlier (lower) index
            Some((_, b_inter, b_union)) => {
                (inter as u128) * (b_union as u128) > (b_inter as u128) * (union as u128)
            }
        };
        if better {
            best[j] = Some((i, inter, union));
        }
    }

    let mut selected = vec![false; table.n_pred()];
    let mut inter_sum: u64 = 0;
    let mut union_sum: u64 = 0;
    for (j, b) in best.iter().enumerate() {
        match *b {
            Some((i, inter, union)) => {
                selected[i] = true;
                inter_sum += inter;
                union_sum += union;
            }
            None => union_sum += gt_areas[j],
        }
    }
    union_sum += pred_areas
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| !s)
        .map(|(&a, _)| a)
        .sum::<u64>();
    inter_sum as f64 / union_sum as f64
}

pub fn aggregated_jaccard_index(pred: &InstanceSet, gt: &InstanceSet) -> Result<f64, MetricError> {
    Ok(aggregated_jaccard_of(&Comparison::new(pred, gt)?))
}
