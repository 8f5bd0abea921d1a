//! One-call evaluation of a ground-truth/prediction pair over a chosen set of
//! metrics.

use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::InstanceSet;
use crate::matching::Matcher;
use crate::metrics::{
    aggregated_jaccard_of, default_map_thresholds, mean_point_ap, panoptic_quality_of, point_ap,
    symmetric_best_dice_of, Comparison, MetricError, PqBreakdown,
};
use crate::overlap::OverlapError;
use crate::par::if_parallel;
use crate::sorted_ap::{sorted_ap_of, DEFAULT_FUZZ};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown metric \"{0}\" (expected ap, map, pq, sbd, aji or sorted_ap)")]
    UnknownMetric(String),
    #[error("no metrics requested")]
    NoMetrics,
    #[error(transparent)]
    Overlap(#[from] OverlapError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ap,
    #[serde(rename = "map")]
    MeanAp,
    Pq,
    Sbd,
    Aji,
    SortedAp,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Ap,
        Metric::MeanAp,
        Metric::Pq,
        Metric::Sbd,
        Metric::Aji,
        Metric::SortedAp,
    ];

    /// Report key.
    pub fn key(self) -> &'static str {
        match self {
            Metric::Ap => "ap",
            Metric::MeanAp => "map",
            Metric::Pq => "pq",
            Metric::Sbd => "sbd",
            Metric::Aji => "aji",
            Metric::SortedAp => "sorted_ap",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ap" => Ok(Metric::Ap),
            "map" => Ok(Metric::MeanAp),
            "pq" => Ok(Metric::Pq),
            "sbd" => Ok(Metric::Sbd),
            "aji" => Ok(Metric::Aji),
            "sortedap" | "sorted_ap" => Ok(Metric::SortedAp),
            _ => Err(EvalError::UnknownMetric(s.trim().to_string())),
        }
    }
}

/// Parses a comma-separated metric list. Duplicates collapse; the result is in
/// canonical order.
pub fn parse_metric_list(list: &str) -> Result<Vec<Metric>, EvalError> {
    metrics_from_names(list.split(',').filter(|s| !s.trim().is_empty()))
}

pub fn metrics_from_names<I, S>(names: I) -> Result<Vec<Metric>, EvalError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = names
        .into_iter()
        .map(|n| n.as_ref().parse())
        .collect::<Result<Vec<Metric>, _>>()?;
    if out.is_empty() {
        return Err(EvalError::NoMetrics);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub metrics: Vec<Metric>,
    /// Threshold for point AP and PQ.
    pub threshold: f64,
    pub map_thresholds: Vec<f64>,
    pub matcher: Matcher,
    pub fuzz: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.to_vec(),
            threshold: 0.5,
            map_thresholds: default_map_thresholds(),
            matcher: Matcher::Unique,
            fuzz: DEFAULT_FUZZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchSummary {
    pub tp0: usize,
    pub fn0: usize,
    pub n_pred: usize,
    pub n_gt: usize,
}

/// Scores of the requested metrics; the rest stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub ap: Option<f64>,
    pub map: Option<f64>,
    pub pq: Option<PqBreakdown>,
    pub sbd: Option<f64>,
    pub aji: Option<f64>,
    pub sorted_ap: Option<f64>,
    pub summary: MatchSummary,
}

impl Scores {
    /// `(key, value)` for every computed metric in canonical order; PQ
    /// contributes its headline value.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        [
            ("ap", self.ap),
            ("map", self.map),
            ("pq", self.pq.map(|p| p.pq)),
            ("sbd", self.sbd),
            ("aji", self.aji),
            ("sorted_ap", self.sorted_ap),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

enum Value {
    Scalar(f64),
    Pq(PqBreakdown),
}

/// Scores `pred` against `gt`.
pub fn evaluate(
    gt: &InstanceSet,
    pred: &InstanceSet,
    options: &EvalOptions,
) -> Result<Scores, EvalError> {
    let cmp = Comparison::new(pred, gt)?;
    evaluate_comparison(&cmp, options)
}

pub fn evaluate_comparison(cmp: &Comparison, options: &EvalOptions) -> Result<Scores, EvalError> {
    if options.metrics.is_empty() {
        return Err(EvalError::NoMetrics);
    }
    for &t in std::iter::once(&options.threshold).chain(&options.map_thresholds) {
        if !(t > 0.0 && t < 1.0) {
            return Err(MetricError::InvalidThreshold(t).into());
        }
    }
    let compute = |&metric: &Metric| -> Result<(Metric, Value), EvalError> {
        let value = match metric {
            Metric::Ap => Value::Scalar(point_ap(cmp, options.threshold, options.matcher)),
            Metric::MeanAp => Value::Scalar(mean_point_ap(
                cmp,
                &options.map_thresholds,
                options.matcher,
            )?),
            Metric::Pq => Value::Pq(panoptic_quality_of(cmp, options.threshold, options.matcher)),
            Metric::Sbd => Value::Scalar(symmetric_best_dice_of(cmp)),
            Metric::Aji => Value::Scalar(aggregated_jaccard_of(cmp)),
            Metric::SortedAp => Value::Scalar(sorted_ap_of(cmp, options.fuzz).score),
        };
        Ok((metric, value))
    };
    let values: Vec<Result<(Metric, Value), EvalError>> = if_parallel!(
        options.metrics.par_iter().map(compute).collect(),
        options.metrics.iter().map(compute).collect()
    );

    let maximal = cmp.match_at(options.fuzz, Matcher::Unique);
    let mut scores = Scores {
        ap: None,
        map: None,
        pq: None,
        sbd: None,
        aji: None,
        sorted_ap: None,
        summary: MatchSummary {
            tp0: maximal.tp(),
            fn0: maximal.fn_count(),
            n_pred: cmp.n_pred(),
            n_gt: cmp.n_gt(),
        },
    };
    for v in values {
        match v? {
            (Metric::Ap, Value::Scalar(x)) => scores.ap = Some(x),
            (Metric::MeanAp, Value::Scalar(x)) => scores.map = Some(x),
            (Metric::Sbd, Value::Scalar(x)) => scores.sbd = Some(x),
            (Metric::Aji, Value::Scalar(x)) => scores.aji = Some(x),
            (Metric::SortedAp, Value::Scalar(x)) => scores.sorted_ap = Some(x),
            (Metric::Pq, Value::Pq(p)) => scores.pq = Some(p),
            _ => unreachable!("metric and value kinds agree"),
        }
    }
    Ok(scores)
}

/// Evaluates many `(gt, pred)` pairs with the same options.
pub fn evaluate_many(
    pairs: &[(InstanceSet, InstanceSet)],
    options: &EvalOptions,
) -> Vec<Result<Scores, EvalError>> {
    let run = |(gt, pred): &(InstanceSet, InstanceSet)| evaluate(gt, pred, options);
    if_parallel!(
        pairs.par_iter().map(run).collect(),
        pairs.iter().map(run).collect()
    )
}
