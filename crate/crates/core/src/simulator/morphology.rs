use crate::instance::{Canvas, Mask, Run};

/// Binary erosion with the full 3×3 structuring element.
///
/// A pixel survives only if it and all eight neighbours are in the mask;
/// pixels outside the canvas count as background. Returns `None` when nothing
/// survives.
pub fn erode_mask(mask: &Mask, canvas: Canvas) -> Option<Mask> {
    let width = canvas.width();
    // column intervals per row, each shrunk by one pixel on both sides
    let mut rows: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    for run in mask.runs() {
        let (row, col) = canvas.row_col(run.start);
        let shrunk = (col + 1, col + run.len - 1);
        match rows.last_mut() {
            Some((r, intervals)) if *r == row => intervals.push(shrunk),
            _ => rows.push((row, vec![shrunk])),
        }
    }
    for (_, intervals) in rows.iter_mut() {
        intervals.retain(|(s, e)| s < e);
    }

    let mut runs = Vec::new();
    for k in 0..rows.len() {
        let (row, ref here) = rows[k];
        if row == 0 || row + 1 >= canvas.height() {
            continue;
        }
        let above = (k > 0 && rows[k - 1].0 == row - 1).then(|| &rows[k - 1].1);
        let below = (k + 1 < rows.len() && rows[k + 1].0 == row + 1).then(|| &rows[k + 1].1);
        let (Some(above), Some(below)) = (above, below) else {
            continue;
        };
        for (s, e) in intersect(&intersect(here, above), below) {
            runs.push(Run {
                start: row * width + s,
                len: e - s,
            });
        }
    }
    Mask::from_runs(canvas, runs.into_iter().map(|r| (r.start, r.len))).ok()
}

/// Intersection of two sorted lists of disjoint half-open intervals.
fn intersect(a: &[(usize, usize)], b: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let s = a[i].0.max(b[j].0);
        let e = a[i].1.min(b[j].1);
        if s < e {
            out.push((s, e));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}
