//! Synthetic scenes and degradation traces.
//!
//! Three protocols degrade a copy of a base scene step by step and score every
//! step against the reference:
//!
//! * incremental falses: copies of existing objects are added to the
//!   prediction set twice, then to the ground-truth set twice, and so on,
//!   always at positions that overlap no object in either set;
//! * object erosion: one random prediction is eroded with a 3×3 element per
//!   step, never to nothing;
//! * pixel removal: every prediction loses a fixed number of random pixels per
//!   step (a fraction of its original area), never dropping below one pixel.
//!
//! Scene generation is sequential; scoring the steps is data-parallel.

mod morphology;
mod rng;
mod scene;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use morphology::erode_mask;
pub use rng::SceneRng;
pub use scene::gen_scene;

use crate::eval::{evaluate, EvalOptions};
use crate::fmt::g12;
use crate::instance::{InstanceSet, Mask};
use crate::par::if_parallel;

/// Attempts per placement before giving up.
pub const PLACEMENT_BUDGET: usize = 1000;

/// Default per-step removal, as a fraction of each object's original area.
pub const DEFAULT_REMOVAL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("object size range ({min}, {max}) is invalid")]
    InvalidSizeRange { min: usize, max: usize },
    #[error("could not place object {placed} within {PLACEMENT_BUDGET} attempts")]
    PlacementExhausted { placed: usize },
    #[error("base scene has no objects")]
    EmptyBase,
    #[error("removal fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegradationMode {
    IncrementalFalses,
    ObjectErosion,
    PixelRemoval,
}

impl DegradationMode {
    pub fn name(self) -> &'static str {
        match self {
            DegradationMode::IncrementalFalses => "incremental-falses",
            DegradationMode::ObjectErosion => "object-erosion",
            DegradationMode::PixelRemoval => "pixel-removal",
        }
    }
}

impl fmt::Display for DegradationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DegradationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incremental-falses" => Ok(Self::IncrementalFalses),
            "object-erosion" => Ok(Self::ObjectErosion),
            "pixel-removal" => Ok(Self::PixelRemoval),
            other => Err(format!(
                "unknown mode \"{other}\" (expected incremental-falses, object-erosion or pixel-removal)"
            )),
        }
    }
}

/// A ground-truth/prediction pair on a shared canvas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scene {
    pub gt: InstanceSet,
    pub pred: InstanceSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceScores {
    pub ap: f64,
    pub map: f64,
    pub pq: f64,
    pub sbd: f64,
    pub aji: f64,
    pub sorted_ap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub scores: TraceScores,
    /// Present when snapshots were requested.
    pub scene: Option<Scene>,
}

/// Why a trace ended before the requested number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Truncation {
    /// A copy could not be placed without overlap at this step.
    PlacementExhausted { step: usize },
    /// Every remaining object would erode to nothing at this step.
    ErosionExhausted { step: usize },
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::PlacementExhausted { step } => {
                write!(f, "placement budget exhausted at step {step}")
            }
            Truncation::ErosionExhausted { step } => {
                write!(f, "every object would erode to nothing at step {step}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationTrace {
    pub mode: DegradationMode,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    pub truncated: Option<Truncation>,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub mode: DegradationMode,
    pub steps: usize,
    pub seed: u64,
    /// Only used by pixel removal.
    pub fraction: f64,
    pub keep_snapshots: bool,
}

impl SimulationConfig {
    pub fn new(mode: DegradationMode, steps: usize, seed: u64) -> Self {
        Self {
            mode,
            steps,
            seed,
            fraction: DEFAULT_REMOVAL_FRACTION,
            keep_snapshots: false,
        }
    }
}

/// Runs one degradation protocol from `base` and scores every step.
pub fn simulate(
    base: &InstanceSet,
    config: &SimulationConfig,
) -> Result<DegradationTrace, SimError> {
    if base.is_empty() {
        return Err(SimError::EmptyBase);
    }
    let mut rng = SceneRng::new(config.seed);
    let (scenes, truncated) = match config.mode {
        DegradationMode::IncrementalFalses => incremental_falses(base, config.steps, &mut rng),
        DegradationMode::ObjectErosion => object_erosion(base, config.steps, &mut rng),
        DegradationMode::PixelRemoval => {
            if !(config.fraction > 0.0 && config.fraction < 1.0) {
                return Err(SimError::InvalidFraction(config.fraction));
            }
            (
                pixel_removal(base, config.fraction, config.steps, &mut rng),
                None,
            )
        }
    };

    let score = |scene: &Scene| score_scene(scene);
    let scores: Vec<TraceScores> = if_parallel!(
        scenes.par_iter().map(score).collect(),
        scenes.iter().map(score).collect()
    );
    let steps = scenes
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(step, (scene, scores))| TraceStep {
            step,
            scores,
            scene: config.keep_snapshots.then_some(scene),
        })
        .collect();
    Ok(DegradationTrace {
        mode: config.mode,
        seed: config.seed,
        steps,
        truncated,
    })
}

pub fn run_incremental_falses(
    base: &InstanceSet,
    n_steps: usize,
    seed: u64,
) -> Result<DegradationTrace, SimError> {
    simulate(
        base,
        &SimulationConfig::new(DegradationMode::IncrementalFalses, n_steps, seed),
    )
}

pub fn run_object_erosion(
    base: &InstanceSet,
    n_steps: usize,
    seed: u64,
) -> Result<DegradationTrace, SimError> {
    simulate(
        base,
        &SimulationConfig::new(DegradationMode::ObjectErosion, n_steps, seed),
    )
}

pub fn run_pixel_removal(
    base: &InstanceSet,
    fraction: f64,
    n_steps: usize,
    seed: u64,
) -> Result<DegradationTrace, SimError> {
    let mut config = SimulationConfig::new(DegradationMode::PixelRemoval, n_steps, seed);
    config.fraction = fraction;
    simulate(base, &config)
}

/// All six trace metrics with unique matching, AP and PQ at 0.5 and mAP over
/// 0.50:0.95:0.05.
pub fn score_scene(scene: &Scene) -> TraceScores {
    let scores =
        evaluate(&scene.gt, &scene.pred, &EvalOptions::default()).expect("scenes share a canvas");
    TraceScores {
        ap: scores.ap.expect("requested"),
        map: scores.map.expect("requested"),
        pq: scores.pq.expect("requested").pq,
        sbd: scores.sbd.expect("requested"),
        aji: scores.aji.expect("requested"),
        sorted_ap: scores.sorted_ap.expect("requested"),
    }
}

fn incremental_falses(
    base: &InstanceSet,
    n_steps: usize,
    rng: &mut SceneRng,
) -> (Vec<Scene>, Option<Truncation>) {
    let canvas = base.canvas();
    let mut occupied = vec![false; canvas.pixel_count()];
    for m in base.instances() {
        for o in m.offsets() {
            occupied[o] = true;
        }
    }
    let mut scene = Scene {
        gt: base.clone(),
        pred: base.clone(),
    };
    let mut scenes = vec![scene.clone()];

    for step in 1..=n_steps {
        let source = &base.instances()[rng.below(base.len())];
        let (min_row, min_col, max_row, max_col) = source.bounding_box(canvas);
        let (h, w) = (max_row - min_row + 1, max_col - min_col + 1);
        let mut placed = None;
        for _ in 0..PLACEMENT_BUDGET {
            let top = rng.below(canvas.height() - h + 1);
            let left = rng.below(canvas.width() - w + 1);
            let moved = source
                .translated(
                    canvas,
                    top as isize - min_row as isize,
                    left as isize - min_col as isize,
                )
                .expect("bounding box fits");
            if moved.offsets().all(|o| !occupied[o]) {
                placed = Some(moved);
                break;
            }
        }
        let Some(copy) = placed else {
            return (scenes, Some(Truncation::PlacementExhausted { step }));
        };
        for o in copy.offsets() {
            occupied[o] = true;
        }
        // two insertions into predictions, then two into ground truth, repeating
        if ((step - 1) / 2) % 2 == 0 {
            scene.pred.push(copy);
        } else {
            scene.gt.push(copy);
        }
        scenes.push(scene.clone());
    }
    (scenes, None)
}

fn object_erosion(
    base: &InstanceSet,
    n_steps: usize,
    rng: &mut SceneRng,
) -> (Vec<Scene>, Option<Truncation>) {
    let canvas = base.canvas();
    let mut scene = Scene {
        gt: base.clone(),
        pred: base.clone(),
    };
    let mut scenes = vec![scene.clone()];
    for step in 1..=n_steps {
        let mut candidates: Vec<usize> = (0..scene.pred.len()).collect();
        let eroded = loop {
            if candidates.is_empty() {
                return (scenes, Some(Truncation::ErosionExhausted { step }));
            }
            let index = candidates.remove(rng.below(candidates.len()));
            if let Some(mask) = erode_mask(&scene.pred.instances()[index], canvas) {
                break (index, mask);
            }
        };
        scene.pred.instances_mut()[eroded.0] = eroded.1;
        scenes.push(scene.clone());
    }
    (scenes, None)
}

fn pixel_removal(
    base: &InstanceSet,
    fraction: f64,
    n_steps: usize,
    rng: &mut SceneRng,
) -> Vec<Scene> {
    let canvas = base.canvas();
    let per_step: Vec<usize> = base
        .instances()
        .iter()
        .map(|m| ((fraction * m.area() as f64 - 1e-9).ceil() as usize).max(1))
        .collect();
    let mut scene = Scene {
        gt: base.clone(),
        pred: base.clone(),
    };
    let mut scenes = vec![scene.clone()];
    for _ in 1..=n_steps {
        for (mask, &quota) in scene.pred.instances_mut().iter_mut().zip(&per_step) {
            let remove = quota.min(mask.area() - 1);
            if remove == 0 {
                continue;
            }
            let mut offsets: Vec<usize> = mask.offsets().collect();
            let n = offsets.len();
            for t in 0..remove {
                let j = t + rng.below(n - t);
                offsets.swap(t, j);
            }
            let mut kept = offsets.split_off(remove);
            kept.sort_unstable();
            *mask = Mask::from_sorted_offsets(canvas, &kept).expect("at least one pixel kept");
        }
        scenes.push(scene.clone());
    }
    scenes
}

/// Writes the trace as CSV with header `step,ap,map,pq,sbd,aji,sorted_ap`.
pub fn write_trace_csv<W: Write>(trace: &DegradationTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "step,ap,map,pq,sbd,aji,sorted_ap")?;
    for s in &trace.steps {
        let v = &s.scores;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.step,
            g12(v.ap),
            g12(v.map),
            g12(v.pq),
            g12(v.sbd),
            g12(v.aji),
            g12(v.sorted_ap)
        )?;
    }
    Ok(())
}
