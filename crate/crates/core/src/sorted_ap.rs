//! sortedAP: the area under the point-AP curve over the whole IoU threshold
//! domain.
//!
//! Raising the matching threshold from 0 to 1 turns matched pairs into
//! non-matches one at a time, in ascending order of their IoU. Starting from
//! the maximal matching (`TP₀` pairs, `FN₀` missed ground truths, `P`
//! predictions), the AP right after the k-th drop is
//!
//! ```text
//! AP_k = (TP₀ - k) / (P + FN₀ + k),   k = 1..=TP₀
//! ```
//!
//! so a single matching pass yields every value the AP curve can take.

use std::io::{self, Write};

use serde::Serialize;

use crate::fmt::g12;
use crate::instance::InstanceSet;
use crate::matching::{MatchResult, Matcher};
use crate::metrics::{Comparison, MetricError};

/// Threshold used for the maximal matching.
pub const DEFAULT_FUZZ: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApCurve {
    pub tp0: usize,
    pub fn0: usize,
    pub n_pred: usize,
    /// Matched IoUs, ascending. Equal IoUs stay separate zero-width drops.
    pub drop_ious: Vec<f64>,
    /// AP right after each drop.
    pub ap_values: Vec<f64>,
    /// AP before the first drop. 1 when both sets are empty.
    pub ap_initial: f64,
}

impl ApCurve {
    pub fn from_match(result: &MatchResult, n_pred: usize, n_gt: usize) -> Self {
        let tp0 = result.tp();
        let fn0 = result.fn_count();
        let mut drop_ious: Vec<f64> = result.pairs.iter().map(|p| p.iou).collect();
        drop_ious.sort_by(f64::total_cmp);
        let denominator = n_pred + fn0;
        let ap_initial = if n_pred == 0 && n_gt == 0 {
            1.0
        } else {
            tp0 as f64 / denominator as f64
        };
        let ap_values = (1..=tp0)
            .map(|k| (tp0 - k) as f64 / (denominator + k) as f64)
            .collect();
        Self {
            tp0,
            fn0,
            n_pred,
            drop_ious,
            ap_values,
            ap_initial,
        }
    }

    /// Step-function rows: `(0, AP₀)` followed by `(t_k, AP_k)` for each drop.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        std::iter::once((0.0, self.ap_initial))
            .chain(
                self.drop_ious
                    .iter()
                    .copied()
                    .zip(self.ap_values.iter().copied()),
            )
            .collect()
    }

    /// Area under the curve, integrated drop by drop.
    ///
    /// The initial block spans `[0, t₁]` at `AP₀`. Each subsequent segment
    /// `[t_{k-1}, t_k]` contributes the mean of its two end values, and the
    /// curve is zero past the last drop.
    pub fn area(&self) -> f64 {
        if self.tp0 == 0 {
            // no drops: 0 when nothing matched, 1 for two empty sets
            return self.ap_initial;
        }
        let mut t_prev = self.drop_ious[0];
        let mut ap_prev = self.ap_initial;
        let mut score = t_prev * ap_prev;
        for (&t_k, &ap_k) in self.drop_ious.iter().zip(&self.ap_values) {
            score += 0.5 * (t_k - t_prev) * (ap_k + ap_prev);
            ap_prev = ap_k;
            t_prev = t_k;
        }
        score
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortedApResult {
    pub score: f64,
    pub curve: ApCurve,
    pub matching: MatchResult,
}

pub fn sorted_ap_of(cmp: &Comparison, fuzz: f64) -> SortedApResult {
    let matching = cmp.match_at(fuzz, Matcher::Unique);
    let curve = ApCurve::from_match(&matching, cmp.n_pred(), cmp.n_gt());
    SortedApResult {
        score: curve.area(),
        curve,
        matching,
    }
}

pub fn ap_curve(pred: &InstanceSet, gt: &InstanceSet) -> Result<ApCurve, MetricError> {
    Ok(sorted_ap_of(&Comparison::new(pred, gt)?, DEFAULT_FUZZ).curve)
}

pub fn sorted_ap(pred: &InstanceSet, gt: &InstanceSet) -> Result<SortedApResult, MetricError> {
    Ok(sorted_ap_of(&Comparison::new(pred, gt)?, DEFAULT_FUZZ))
}

pub fn curve_to_rows(curve: &ApCurve) -> Vec<(f64, f64)> {
    curve.rows()
}

/// Writes the curve as CSV with header `iou,ap`.
pub fn write_curve_csv<W: Write>(curve: &ApCurve, mut out: W) -> io::Result<()> {
    writeln!(out, "iou,ap")?;
    for (t, ap) in curve.rows() {
        writeln!(out, "{},{}", g12(t), g12(ap))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::IouMatrix;

    fn curve_for(ious: &[&[f64]]) -> ApCurve {
        let m = IouMatrix::from_rows(ious);
        let r = Matcher::Unique.run(&m, DEFAULT_FUZZ);
        ApCurve::from_match(&r, m.rows(), m.cols())
    }

    #[test]
    fn two_matches_curve() {
        let c = curve_for(&[&[0.8, 0.0], &[0.0, 0.6]]);
        assert_eq!((c.tp0, c.fn0, c.n_pred), (2, 0, 2));
        assert_eq!(c.drop_ious, vec![0.6, 0.8]);
        assert_eq!(c.ap_initial, 1.0);
        assert_eq!(c.ap_values, vec![1.0 / 3.0, 0.0]);
        assert!((c.area() - 0.633_333_333_333_333).abs() < 1e-12);
        assert_eq!(c.rows(), vec![(0.0, 1.0), (0.6, 1.0 / 3.0), (0.8, 0.0)]);
    }

    #[test]
    fn identity_of_three() {
        let c = curve_for(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(c.drop_ious, vec![1.0; 3]);
        assert_eq!(c.ap_initial, 1.0);
        assert_eq!(c.area(), 1.0);
        assert_eq!(
            c.rows(),
            vec![(0.0, 1.0), (1.0, 0.5), (1.0, 0.2), (1.0, 0.0)]
        );
    }

    #[test]
    fn no_overlap_at_all() {
        let c = curve_for(&[&[0.0, 0.0]]);
        assert_eq!(c.tp0, 0);
        assert!(c.drop_ious.is_empty());
        assert_eq!(c.area(), 0.0);
        assert_eq!(c.rows(), vec![(0.0, 0.0)]);
    }

    #[test]
    fn degenerate_sets() {
        let empty = curve_for(&[]);
        assert_eq!(empty.area(), 1.0);
        let m = IouMatrix::empty(0, 2);
        let c = ApCurve::from_match(&Matcher::Unique.run(&m, DEFAULT_FUZZ), 0, 2);
        assert_eq!(c.area(), 0.0);
        assert_eq!(c.rows(), vec![(0.0, 0.0)]);
        let m = IouMatrix::empty(3, 0);
        let c = ApCurve::from_match(&Matcher::Unique.run(&m, DEFAULT_FUZZ), 3, 0);
        assert_eq!(c.area(), 0.0);
    }

    #[test]
    fn single_match_area_is_its_iou() {
        for u in [0.01, 0.37, 0.5, 0.999] {
            assert_eq!(curve_for(&[&[u]]).area(), u);
        }
    }

    #[test]
    fn false_positive_lowers_the_curve() {
        let c = curve_for(&[&[0.9], &[0.0]]);
        assert_eq!(c.ap_initial, 0.5);
        assert_eq!(c.area(), 0.45);
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        write_curve_csv(&curve_for(&[&[0.8, 0.0], &[0.0, 0.6]]), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "iou,ap\n0,1\n0.6,0.333333333333\n0.8,0\n"
        );
    }
}
