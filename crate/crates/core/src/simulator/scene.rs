use super::rng::SceneRng;
use super::{SimError, PLACEMENT_BUDGET};
use crate::instance::{mask_from_pixels, Canvas, InstanceSet};

/// Generates `n_objects` non-overlapping blobs with areas drawn uniformly from
/// `size_range` (inclusive).
///
/// Each blob grows from a random free seed pixel: repeatedly pick a random
/// pixel of the blob and a random 4-neighbour, and add the neighbour if it is
/// free. A blob that cannot reach its target area is discarded and retried,
/// up to [`PLACEMENT_BUDGET`] attempts per object.
pub fn gen_scene(
    canvas: Canvas,
    n_objects: usize,
    size_range: (usize, usize),
    seed: u64,
) -> Result<InstanceSet, SimError> {
    let (lo, hi) = size_range;
    if lo == 0 || lo > hi {
        return Err(SimError::InvalidSizeRange { min: lo, max: hi });
    }
    let mut rng = SceneRng::new(seed);
    let pixels = canvas.pixel_count();
    let mut occupied = vec![false; pixels];
    let mut stamp = vec![0u32; pixels];
    let mut generation = 0u32;
    let mut set = InstanceSet::empty(canvas);

    for placed in 0..n_objects {
        let mut blob = None;
        for _ in 0..PLACEMENT_BUDGET {
            generation += 1;
            let target = rng.between(lo, hi);
            let start = rng.below(pixels);
            if occupied[start] {
                continue;
            }
            if let Some(grown) = grow(
                canvas, &mut rng, start, target, &occupied, &mut stamp, generation,
            ) {
                blob = Some(grown);
                break;
            }
        }
        let Some(grown) = blob else {
            return Err(SimError::PlacementExhausted { placed });
        };
        for &o in &grown {
            occupied[o] = true;
        }
        let mask = mask_from_pixels(canvas, grown.iter().map(|&o| canvas.row_col(o)))
            .expect("blob inside canvas");
        set.push(mask);
    }
    Ok(set)
}

fn grow(
    canvas: Canvas,
    rng: &mut SceneRng,
    start: usize,
    target: usize,
    occupied: &[bool],
    stamp: &mut [u32],
    generation: u32,
) -> Option<Vec<usize>> {
    let mut blob = vec![start];
    stamp[start] = generation;
    let mut tries = 0;
    let max_tries = 50 * target;
    while blob.len() < target && tries < max_tries {
        tries += 1;
        let (row, col) = canvas.row_col(blob[rng.below(blob.len())]);
        let next = match rng.below(4) {
            0 if row > 0 => canvas.offset(row - 1, col),
            1 if row + 1 < canvas.height() => canvas.offset(row + 1, col),
            2 if col > 0 => canvas.offset(row, col - 1),
            3 if col + 1 < canvas.width() => canvas.offset(row, col + 1),
            _ => continue,
        };
        if !occupied[next] && stamp[next] != generation {
            stamp[next] = generation;
            blob.push(next);
        }
    }
    (blob.len() == target).then_some(blob)
}
