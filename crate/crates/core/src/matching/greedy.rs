use super::{IouMatrix, MatchResult};

/// Greedy matching: candidates above `threshold` are taken in descending IoU
/// order, ties broken by lower prediction index and then lower ground-truth
/// index, skipping any pair whose prediction or ground truth is already used.
pub fn greedy_match(ious: &IouMatrix, threshold: f64) -> MatchResult {
    let mut candidates = Vec::new();
    for i in 0..ious.rows() {
        for (j, &v) in ious.row(i).iter().enumerate() {
            if v > threshold {
                candidates.push((v, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut choice = vec![None; ious.rows()];
    let mut gt_used = vec![false; ious.cols()];
    for (_, i, j) in candidates {
        if choice[i].is_none() && !gt_used[j] {
            choice[i] = Some(j);
            gt_used[j] = true;
        }
    }
    MatchResult::from_assignment(ious, threshold, &choice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_perfect_pair() {
        let r = greedy_match(&IouMatrix::from_rows(&[[1.0]]), 0.5);
        assert_eq!(r.pair_indices(), vec![(0, 0)]);
        assert_eq!(r.pairs[0].iou, 1.0);
    }

    #[test]
    fn highest_iou_blocks_the_two_match_alternative() {
        let r = greedy_match(&IouMatrix::from_rows(&[[0.95, 0.3], [0.3, 0.0]]), 0.25);
        assert_eq!(r.pair_indices(), vec![(0, 0)]);
        assert_eq!(r.false_positives, vec![1]);
        assert_eq!(r.false_negatives, vec![1]);
    }

    #[test]
    fn below_threshold_matches_nothing() {
        let r = greedy_match(&IouMatrix::from_rows(&[[0.4]]), 0.5);
        assert!(r.pairs.is_empty());
        assert_eq!(r.false_positives, vec![0]);
        assert_eq!(r.false_negatives, vec![0]);
    }

    #[test]
    fn threshold_is_strict() {
        let r = greedy_match(&IouMatrix::from_rows(&[[0.5]]), 0.5);
        assert!(r.pairs.is_empty());
    }

    #[test]
    fn equal_ious_prefer_lower_indices() {
        let r = greedy_match(&IouMatrix::from_rows(&[[0.7, 0.7], [0.7, 0.7]]), 0.5);
        assert_eq!(r.pair_indices(), vec![(0, 0), (1, 1)]);
    }
}
