use super::{IouMatrix, MatchError, MatchResult, TIE_TOLERANCE};

/// Largest side accepted by [`brute_force_match`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive reference for [`unique_match`](super::unique_match).
///
/// Enumerates every injective partial assignment of predictions to ground
/// truths over entries above `threshold`, in lexicographic order of the
/// per-prediction choices, and returns the first whose total is within
/// [`TIE_TOLERANCE`] of the maximum. Branches whose optimistic bound cannot
/// reach that level are skipped.
pub fn brute_force_match(ious: &IouMatrix, threshold: f64) -> Result<MatchResult, MatchError> {
    let (n, m) = (ious.rows(), ious.cols());
    if n > BRUTE_FORCE_LIMIT || m > BRUTE_FORCE_LIMIT {
        return Err(MatchError::TooLarge {
            rows: n,
            cols: m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let options: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            ious.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > threshold)
                .map(|(j, &v)| (j, v))
                .collect()
        })
        .collect();
    let mut bound = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let best = options[i].iter().map(|o| o.1).fold(0.0, f64::max);
        bound[i] = bound[i + 1] + best;
    }

    let mut search = Search {
        options: &options,
        bound: &bound,
        used: vec![false; m],
        choice: vec![None; n],
        best: 0.0,
    };
    search.maximise(0, 0.0);
    let target = search.best - TIE_TOLERANCE;
    let found = search.first_reaching(0, 0.0, target);
    debug_assert!(found);
    Ok(MatchResult::from_assignment(
        ious,
        threshold,
        &search.choice,
    ))
}

struct Search<'a> {
    options: &'a [Vec<(usize, f64)>],
    bound: &'a [f64],
    used: Vec<bool>,
    choice: Vec<Option<usize>>,
    best: f64,
}

impl Search<'_> {
    fn maximise(&mut self, row: usize, total: f64) {
        if row == self.options.len() {
            self.best = self.best.max(total);
            return;
        }
        if total + self.bound[row] <= self.best {
            return;
        }
        for &(col, v) in &self.options[row] {
            if !self.used[col] {
                self.used[col] = true;
                self.maximise(row + 1, total + v);
                self.used[col] = false;
            }
        }
        self.maximise(row + 1, total);
    }

    /// Leaves the first qualifying assignment in `self.choice`.
    fn first_reaching(&mut self, row: usize, total: f64, target: f64) -> bool {
        if row == self.options.len() {
            return total >= target;
        }
        if total + self.bound[row] < target {
            return false;
        }
        for &(col, v) in &self.options[row] {
            if !self.used[col] {
                self.used[col] = true;
                self.choice[row] = Some(col);
                if self.first_reaching(row + 1, total + v, target) {
                    return true;
                }
                self.used[col] = false;
            }
        }
        self.choice[row] = None;
        self.first_reaching(row + 1, total, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_preference() {
        let r = brute_force_match(&IouMatrix::from_rows(&[[0.6, 0.5], [0.55, 0.1]]), 0.3).unwrap();
        assert_eq!(r.pair_indices(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn single_pair() {
        let r = brute_force_match(&IouMatrix::from_rows(&[[0.9]]), 0.5).unwrap();
        assert_eq!(r.pair_indices(), vec![(0, 0)]);
    }

    #[test]
    fn no_predictions() {
        let r = brute_force_match(&IouMatrix::empty(0, 3), 0.5).unwrap();
        assert!(r.pairs.is_empty());
        assert_eq!(r.false_negatives, vec![0, 1, 2]);
    }

    #[test]
    fn too_large() {
        let err = brute_force_match(&IouMatrix::empty(11, 2), 0.5).unwrap_err();
        assert!(matches!(err, MatchError::TooLarge { rows: 11, .. }));
    }

    #[test]
    fn ties_prefer_lower_indices() {
        let r = brute_force_match(&IouMatrix::from_rows(&[[0.5, 0.75], [0.25, 0.5]]), 0.1).unwrap();
        assert_eq!(r.pair_indices(), vec![(0, 0), (1, 1)]);
        let r = brute_force_match(
            &IouMatrix::from_rows(&[[0.0, 0.8], [0.0, 0.8], [0.0, 0.8]]),
            0.5,
        )
        .unwrap();
        assert_eq!(r.pair_indices(), vec![(0, 1)]);
    }
}
