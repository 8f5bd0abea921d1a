//! Instance segmentation evaluation.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] and [`format`]: run-length instance masks and their file formats.
//! * [`overlap`]: exact pairwise intersection counts, IoU and Dice.
//! * [`matching`]: greedy, unique (maximum total IoU) and brute-force one-to-one matching.
//! * [`metrics`]: point AP, mAP, PQ/RQ/SQ, AJI, Best Dice and SBD.
//! * [`sorted_ap`]: the exact AP-drop curve and the area under it.
//! * [`simulator`]: synthetic scenes and degradation traces.
//! * [`eval`]: metric selection and batch evaluation used by front ends.
//!
//! With the default `parallel` feature, row scans, threshold sweeps and batch
//! evaluation run on rayon. Without it every loop runs sequentially and the
//! results are bit-identical.

mod par;

pub mod eval;
pub mod fmt;
pub mod format;
pub mod instance;
pub mod matching;
pub mod metrics;
pub mod overlap;
pub mod simulator;
pub mod sorted_ap;

pub use eval::{evaluate, evaluate_many, EvalError, EvalOptions, Metric, Scores};
pub use instance::{Canvas, InstanceSet, Mask, MaskError, Run};
pub use matching::{IouMatrix, MatchPair, MatchResult, Matcher};
pub use overlap::{OverlapError, OverlapTable};
pub use sorted_ap::{ApCurve, SortedApResult};
