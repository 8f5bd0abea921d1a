//! Canonical JSON output: compact, keys sorted, every number written with
//! twelve significant digits.
//!
//! Struct fields below are declared in key order; serde writes them as
//! declared.

use serde::Serialize;
use serde_json::value::RawValue;

use segscore::eval::{MatchSummary, Scores};
use segscore::fmt::g12;
use segscore::{InstanceSet, MatchResult, Matcher};

pub type Number = Box<RawValue>;

pub fn num(x: f64) -> Number {
    RawValue::from_string(g12(x)).expect("g12 output is a JSON number")
}

#[derive(Serialize)]
pub struct Digests {
    pub gt: String,
    pub pred: String,
}

#[derive(Serialize)]
pub struct PqReport {
    pub pq: Number,
    pub rq: Number,
    pub sq: Number,
}

#[derive(Serialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aji: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pq: Option<PqReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbd: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sorted_ap: Option<Number>,
}

#[derive(Serialize)]
pub struct ThresholdsReport {
    /// Used by ap and pq.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<Number>>,
}

#[derive(Serialize)]
pub struct SummaryReport {
    pub fn0: usize,
    pub n_gt: usize,
    pub n_pred: usize,
    pub tp0: usize,
}

impl From<MatchSummary> for SummaryReport {
    fn from(s: MatchSummary) -> Self {
        Self {
            fn0: s.fn0,
            n_gt: s.n_gt,
            n_pred: s.n_pred,
            tp0: s.tp0,
        }
    }
}

#[derive(Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Serialize)]
pub struct EvalReport {
    pub digests: Digests,
    pub match_summary: SummaryReport,
    pub matcher: Matcher,
    pub metrics: MetricsReport,
    pub thresholds: ThresholdsReport,
    pub tool: Tool,
}

impl EvalReport {
    pub fn new(
        scores: &Scores,
        threshold: f64,
        map_thresholds: &[f64],
        matcher: Matcher,
        digests: Digests,
    ) -> Self {
        let uses_threshold = scores.ap.is_some() || scores.pq.is_some();
        Self {
            digests,
            match_summary: scores.summary.into(),
            matcher,
            metrics: MetricsReport {
                aji: scores.aji.map(num),
                ap: scores.ap.map(num),
                map: scores.map.map(num),
                pq: scores.pq.map(|p| PqReport {
                    pq: num(p.pq),
                    rq: num(p.rq),
                    sq: num(p.sq),
                }),
                sbd: scores.sbd.map(num),
                sorted_ap: scores.sorted_ap.map(num),
            },
            thresholds: ThresholdsReport {
                iou: uses_threshold.then(|| num(threshold)),
                map: scores
                    .map
                    .map(|_| map_thresholds.iter().copied().map(num).collect()),
            },
            tool: Tool {
                name: "segscore",
                version: env!("CARGO_PKG_VERSION"),
            },
        }
    }
}

#[derive(Serialize)]
pub struct PairReport {
    pub gt: u32,
    pub iou: Number,
    pub pred: u32,
}

/// Match dump. Objects are identified by their instance ids.
#[derive(Serialize)]
pub struct MatchReport {
    pub false_negatives: Vec<u32>,
    pub false_positives: Vec<u32>,
    pub matcher: Matcher,
    pub pairs: Vec<PairReport>,
    pub threshold: Number,
}

impl MatchReport {
    pub fn new(
        result: &MatchResult,
        matcher: Matcher,
        gt: &InstanceSet,
        pred: &InstanceSet,
    ) -> Self {
        Self {
            false_negatives: result
                .false_negatives
                .iter()
                .map(|&j| gt.labels()[j])
                .collect(),
            false_positives: result
                .false_positives
                .iter()
                .map(|&i| pred.labels()[i])
                .collect(),
            matcher,
            pairs: result
                .pairs
                .iter()
                .map(|p| PairReport {
                    gt: gt.labels()[p.gt],
                    iou: num(p.iou),
                    pred: pred.labels()[p.pred],
                })
                .collect(),
            threshold: num(result.threshold),
        }
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(value).expect("report serialises");
    out.push(b'\n');
    out
}
