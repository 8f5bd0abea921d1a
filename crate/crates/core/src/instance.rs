//! Canvas, run-length masks and instance sets.
//!
//! Masks are stored as row-major runs of absolute pixel offsets. A run never
//! crosses a row boundary, so every run belongs to exactly one canvas row.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Image domain shared by a ground-truth set and a prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    width: usize,
    height: usize,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::InvalidCanvas { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn offset(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn row_col(&self, offset: usize) -> (usize, usize) {
        (offset / self.width, offset % self.width)
    }
}

impl fmt::Display for Canvas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("canvas must be at least 1x1, got {width}x{height}")]
    InvalidCanvas { width: usize, height: usize },
    #[error("mask has zero area")]
    Empty,
    #[error("run ({start}, {len}) has zero length")]
    ZeroLengthRun { start: usize, len: usize },
    #[error("run ({start}, {len}) exceeds the canvas of {pixels} pixels")]
    OutOfBounds {
        start: usize,
        len: usize,
        pixels: usize,
    },
    #[error("run starting at {start} is unsorted or overlaps the previous run")]
    Overlapping { start: usize },
    #[error("pixel ({row}, {col}) lies outside the {canvas} canvas")]
    PixelOutOfBounds {
        row: usize,
        col: usize,
        canvas: Canvas,
    },
}

/// Half-open pixel interval `[start, start + len)` within a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub len: usize,
}

impl Run {
    #[inline]
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// A non-empty binary mask in canonical run-length form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    runs: Vec<Run>,
    area: usize,
}

impl Mask {
    /// Builds a mask from `(start, length)` runs.
    ///
    /// Runs must be sorted and must not overlap. Runs that touch are merged
    /// and runs that wrap past the end of a row are split, so the stored form
    /// is canonical.
    pub fn from_runs<I>(canvas: Canvas, runs: I) -> Result<Self, MaskError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let pixels = canvas.pixel_count();
        let width = canvas.width();
        let mut out: Vec<Run> = Vec::new();
        let mut prev_end = 0usize;
        let mut first = true;
        for (start, len) in runs {
            if len == 0 {
                return Err(MaskError::ZeroLengthRun { start, len });
            }
            if start.checked_add(len).is_none_or(|end| end > pixels) {
                return Err(MaskError::OutOfBounds { start, len, pixels });
            }
            if !first && start < prev_end {
                return Err(MaskError::Overlapping { start });
            }
            first = false;
            prev_end = start + len;

            let mut s = start;
            let end = start + len;
            while s < end {
                let row_end = (s / width + 1) * width;
                let e = end.min(row_end);
                match out.last_mut() {
                    Some(last) if last.end() == s && s % width != 0 => last.len += e - s,
                    _ => out.push(Run {
                        start: s,
                        len: e - s,
                    }),
                }
                s = e;
            }
        }
        Self::from_canonical(out)
    }

    /// Builds a mask from strictly increasing pixel offsets.
    pub(crate) fn from_sorted_offsets(
        canvas: Canvas,
        offsets: &[usize],
    ) -> Result<Self, MaskError> {
        let width = canvas.width();
        let mut runs: Vec<Run> = Vec::new();
        for &o in offsets {
            if o >= canvas.pixel_count() {
                let (row, col) = canvas.row_col(o);
                return Err(MaskError::PixelOutOfBounds { row, col, canvas });
            }
            match runs.last_mut() {
                Some(last) if last.end() == o && o % width != 0 => last.len += 1,
                Some(last) if o < last.end() => return Err(MaskError::Overlapping { start: o }),
                _ => runs.push(Run { start: o, len: 1 }),
            }
        }
        Self::from_canonical(runs)
    }

    fn from_canonical(runs: Vec<Run>) -> Result<Self, MaskError> {
        let area: usize = runs.iter().map(|r| r.len).sum();
        if area == 0 {
            return Err(MaskError::Empty);
        }
        Ok(Self { runs, area })
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn area(&self) -> usize {
        self.area
    }

    /// Absolute offsets of every covered pixel, ascending.
    pub fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs.iter().flat_map(|r| r.start..r.end())
    }

    pub fn contains(&self, offset: usize) -> bool {
        let idx = self.runs.partition_point(|r| r.end() <= offset);
        self.runs.get(idx).is_some_and(|r| r.start <= offset)
    }

    /// Inclusive bounding box as `(min_row, min_col, max_row, max_col)`.
    pub fn bounding_box(&self, canvas: Canvas) -> (usize, usize, usize, usize) {
        let (min_row, _) = canvas.row_col(self.runs[0].start);
        let (max_row, _) = canvas.row_col(self.runs[self.runs.len() - 1].start);
        let mut min_col = usize::MAX;
        let mut max_col = 0;
        for r in &self.runs {
            let (_, c) = canvas.row_col(r.start);
            min_col = min_col.min(c);
            max_col = max_col.max(c + r.len - 1);
        }
        (min_row, min_col, max_row, max_col)
    }

    /// Shifts the mask by whole rows and columns. Fails if any pixel would
    /// leave the canvas.
    pub fn translated(
        &self,
        canvas: Canvas,
        d_row: isize,
        d_col: isize,
    ) -> Result<Self, MaskError> {
        let mut runs = Vec::with_capacity(self.runs.len());
        for r in &self.runs {
            let (row, col) = canvas.row_col(r.start);
            let new_row = row as isize + d_row;
            let new_col = col as isize + d_col;
            if new_row < 0
                || new_col < 0
                || new_row as usize >= canvas.height()
                || new_col as usize + r.len > canvas.width()
            {
                return Err(MaskError::PixelOutOfBounds {
                    row: new_row.max(0) as usize,
                    col: new_col.max(0) as usize,
                    canvas,
                });
            }
            runs.push(Run {
                start: canvas.offset(new_row as usize, new_col as usize),
                len: r.len,
            });
        }
        Ok(Self {
            runs,
            area: self.area,
        })
    }

    /// Nearest-neighbour upscaling: every pixel becomes a `factor`×`factor` block.
    pub fn upscaled(&self, canvas: Canvas, scaled: Canvas, factor: usize) -> Self {
        let mut runs = Vec::with_capacity(self.runs.len() * factor);
        for r in &self.runs {
            let (row, col) = canvas.row_col(r.start);
            for dr in 0..factor {
                runs.push(Run {
                    start: scaled.offset(row * factor + dr, col * factor),
                    len: r.len * factor,
                });
            }
        }
        runs.sort_unstable();
        Self {
            runs,
            area: self.area * factor * factor,
        }
    }
}

/// Builds a mask from `(row, col)` pixel coordinates in any order.
///
/// Duplicates are ignored. The result does not depend on enumeration order.
pub fn mask_from_pixels<I>(canvas: Canvas, pixels: I) -> Result<Mask, MaskError>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut offsets = Vec::new();
    for (row, col) in pixels {
        if row >= canvas.height() || col >= canvas.width() {
            return Err(MaskError::PixelOutOfBounds { row, col, canvas });
        }
        offsets.push(canvas.offset(row, col));
    }
    if offsets.is_empty() {
        return Err(MaskError::Empty);
    }
    offsets.sort_unstable();
    offsets.dedup();
    Mask::from_sorted_offsets(canvas, &offsets)
}

/// An ordered collection of (possibly overlapping) instance masks on one canvas.
///
/// The index of an instance in this set is the index used by every
/// downstream matrix and match result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSet {
    canvas: Canvas,
    instances: Vec<Mask>,
    labels: Vec<u32>,
}

impl InstanceSet {
    /// Creates a set with labels `1..=n` in instance order.
    pub fn new(canvas: Canvas, instances: Vec<Mask>) -> Self {
        let labels = (1..=instances.len() as u32).collect();
        Self {
            canvas,
            instances,
            labels,
        }
    }

    pub fn with_labels(canvas: Canvas, instances: Vec<Mask>, labels: Vec<u32>) -> Self {
        assert_eq!(instances.len(), labels.len(), "one label per instance");
        Self {
            canvas,
            instances,
            labels,
        }
    }

    pub fn empty(canvas: Canvas) -> Self {
        Self::new(canvas, Vec::new())
    }

    /// Splits a dense row-major label map into instances, one per distinct
    /// positive value, ordered by ascending label. Zero is background.
    pub fn from_label_map(canvas: Canvas, labels: &[u32]) -> Result<Self, MaskError> {
        assert_eq!(
            labels.len(),
            canvas.pixel_count(),
            "label map must cover the canvas"
        );
        let width = canvas.width();
        let mut by_label: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for (row, line) in labels.chunks_exact(width).enumerate() {
            let mut col = 0;
            while col < width {
                let value = line[col];
                let begin = col;
                while col < width && line[col] == value {
                    col += 1;
                }
                if value != 0 {
                    by_label
                        .entry(value)
                        .or_default()
                        .push((canvas.offset(row, begin), col - begin));
                }
            }
        }
        let mut instances = Vec::with_capacity(by_label.len());
        let mut ids = Vec::with_capacity(by_label.len());
        for (label, runs) in by_label {
            instances.push(Mask::from_runs(canvas, runs)?);
            ids.push(label);
        }
        Ok(Self::with_labels(canvas, instances, ids))
    }

    /// Builds one instance per dense boolean mask. Masks may overlap.
    pub fn from_binary_masks(canvas: Canvas, masks: &[Vec<bool>]) -> Result<Self, MaskError> {
        let mut instances = Vec::with_capacity(masks.len());
        for mask in masks {
            assert_eq!(
                mask.len(),
                canvas.pixel_count(),
                "binary mask must cover the canvas"
            );
            let offsets: Vec<usize> = mask
                .iter()
                .enumerate()
                .filter_map(|(i, &on)| on.then_some(i))
                .collect();
            instances.push(Mask::from_sorted_offsets(canvas, &offsets)?);
        }
        Ok(Self::new(canvas, instances))
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn instances(&self) -> &[Mask] {
        &self.instances
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn areas(&self) -> Vec<usize> {
        self.instances.iter().map(Mask::area).collect()
    }

    /// Appends an instance with the next free label.
    pub fn push(&mut self, mask: Mask) {
        let next = self.labels.iter().copied().max().unwrap_or(0) + 1;
        self.instances.push(mask);
        self.labels.push(next);
    }

    pub(crate) fn instances_mut(&mut self) -> &mut [Mask] {
        &mut self.instances
    }

    /// Same scene with every pixel replaced by a `factor`×`factor` block.
    pub fn upscaled(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        let scaled = Canvas::new(self.canvas.width() * factor, self.canvas.height() * factor)
            .expect("scaled canvas is non-empty");
        let instances = self
            .instances
            .iter()
            .map(|m| m.upscaled(self.canvas, scaled, factor))
            .collect();
        Self::with_labels(scaled, instances, self.labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canvas(w: usize, h: usize) -> Canvas {
        Canvas::new(w, h).unwrap()
    }

    #[test]
    fn pixels_in_one_row_form_one_run() {
        let m = mask_from_pixels(canvas(3, 3), [(0, 0), (0, 1)]).unwrap();
        assert_eq!(m.runs(), &[Run { start: 0, len: 2 }]);
        assert_eq!(m.area(), 2);
    }

    #[test]
    fn runs_do_not_merge_across_rows() {
        let m = mask_from_pixels(canvas(3, 3), [(0, 2), (1, 0)]).unwrap();
        assert_eq!(
            m.runs(),
            &[Run { start: 2, len: 1 }, Run { start: 3, len: 1 }]
        );
    }

    #[test]
    fn out_of_canvas_pixel_is_rejected() {
        let err = mask_from_pixels(canvas(2, 2), [(5, 5)]).unwrap_err();
        assert!(matches!(
            err,
            MaskError::PixelOutOfBounds { row: 5, col: 5, .. }
        ));
    }

    #[test]
    fn empty_pixel_set_is_rejected() {
        let err = mask_from_pixels(canvas(2, 2), std::iter::empty()).unwrap_err();
        assert_eq!(err, MaskError::Empty);
    }

    #[test]
    fn wrapping_run_is_split_at_row_end() {
        let m = Mask::from_runs(canvas(3, 2), [(1, 4)]).unwrap();
        assert_eq!(
            m.runs(),
            &[Run { start: 1, len: 2 }, Run { start: 3, len: 2 }]
        );
        assert_eq!(m.area(), 4);
    }

    #[test]
    fn touching_runs_merge() {
        let m = Mask::from_runs(canvas(4, 1), [(0, 1), (1, 2)]).unwrap();
        assert_eq!(m.runs(), &[Run { start: 0, len: 3 }]);
    }

    #[test]
    fn overlapping_runs_are_rejected() {
        let err = Mask::from_runs(canvas(4, 1), [(0, 2), (1, 2)]).unwrap_err();
        assert_eq!(err, MaskError::Overlapping { start: 1 });
    }

    #[test]
    fn contains_and_bounding_box() {
        let c = canvas(5, 5);
        let m = mask_from_pixels(c, [(1, 1), (1, 2), (3, 4)]).unwrap();
        assert!(m.contains(c.offset(1, 2)));
        assert!(!m.contains(c.offset(2, 2)));
        assert_eq!(m.bounding_box(c), (1, 1, 3, 4));
    }

    #[test]
    fn translation_checks_bounds() {
        let c = canvas(4, 4);
        let m = mask_from_pixels(c, [(0, 0), (0, 1)]).unwrap();
        let moved = m.translated(c, 3, 2).unwrap();
        assert_eq!(moved.runs(), &[Run { start: 14, len: 2 }]);
        assert!(m.translated(c, 0, 3).is_err());
        assert!(m.translated(c, -1, 0).is_err());
    }

    #[test]
    fn label_map_orders_instances_by_label() {
        let set = InstanceSet::from_label_map(canvas(2, 2), &[7, 7, 2, 0]).unwrap();
        assert_eq!(set.labels(), &[2, 7]);
        assert_eq!(set.areas(), vec![1, 2]);
    }

    #[test]
    fn upscaling_quadruples_area() {
        let c = canvas(3, 2);
        let set = InstanceSet::new(
            c,
            vec![mask_from_pixels(c, [(0, 2), (1, 0), (1, 1)]).unwrap()],
        );
        let up = set.upscaled(2);
        assert_eq!(up.canvas(), canvas(6, 4));
        let m = &up.instances()[0];
        assert_eq!(m.area(), 12);
        let expected: Vec<usize> = [4, 5, 10, 11, 12, 13, 14, 15, 18, 19, 20, 21]
            .into_iter()
            .collect();
        assert_eq!(m.offsets().collect::<Vec<_>>(), expected);
    }
}
