use proptest::prelude::*;

use segscore::format::{parse_rle_json, write_rle_json};
use segscore::instance::mask_from_pixels;
use segscore::matching::{brute_force_match, greedy_match, unique_match};
use segscore::metrics::{
    aggregated_jaccard_index, ap_at, ap_from_precision_recall, mean_ap, panoptic_quality,
    precision_recall, rq_from_ap, symmetric_best_dice, Comparison,
};
use segscore::overlap::build_overlap_table;
use segscore::sorted_ap::{curve_to_rows, sorted_ap, ApCurve, DEFAULT_FUZZ};
use segscore::{Canvas, InstanceSet, IouMatrix, MatchResult, Matcher};

/// Instance sets on one canvas whose masks may overlap each other.
fn overlapping_pair() -> impl Strategy<Value = (InstanceSet, InstanceSet)> {
    (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
        let n = w * h;
        let masks = || {
            prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.35), n), 0..5)
                .prop_map(|ms| {
                    ms.into_iter()
                        .filter(|m| m.iter().any(|&b| b))
                        .collect::<Vec<_>>()
                })
        };
        (masks(), masks()).prop_map(move |(a, b)| {
            let c = Canvas::new(w, h).unwrap();
            (
                InstanceSet::from_binary_masks(c, &b).unwrap(),
                InstanceSet::from_binary_masks(c, &a).unwrap(),
            )
        })
    })
}

/// Label-map scenes: masks never overlap within a set.
fn label_map_pair() -> impl Strategy<Value = (InstanceSet, InstanceSet)> {
    (2usize..10, 2usize..10).prop_flat_map(|(w, h)| {
        let n = w * h;
        (
            prop::collection::vec(0u32..5, n),
            prop::collection::vec(0u32..5, n),
        )
            .prop_map(move |(a, b)| {
                let c = Canvas::new(w, h).unwrap();
                (
                    InstanceSet::from_label_map(c, &a).unwrap(),
                    InstanceSet::from_label_map(c, &b).unwrap(),
                )
            })
    })
}

/// Random IoU-like matrices. Values come from a coarse grid half of the time
/// so that ties are common.
fn iou_matrix(max_side: usize) -> impl Strategy<Value = IouMatrix> {
    (0..=max_side, 0..=max_side).prop_flat_map(|(r, c)| {
        let cell = prop_oneof![
            3 => Just(0.0),
            2 => (1u32..=8).prop_map(|k| k as f64 / 8.0),
            2 => 0.0f64..=1.0,
        ];
        prop::collection::vec(cell, r * c).prop_map(move |data| IouMatrix::new(r, c, data).unwrap())
    })
}

fn check_one_to_one(r: &MatchResult, rows: usize, cols: usize) {
    let mut seen_p = vec![false; rows];
    let mut seen_g = vec![false; cols];
    for p in &r.pairs {
        assert!(!seen_p[p.pred] && !seen_g[p.gt]);
        seen_p[p.pred] = true;
        seen_g[p.gt] = true;
        assert!(p.iou > r.threshold);
    }
    assert_eq!(r.tp() + r.fp(), rows);
    assert_eq!(r.tp() + r.fn_count(), cols);
}

fn naive_intersection(c: Canvas, a: &segscore::Mask, b: &segscore::Mask) -> u64 {
    (0..c.pixel_count())
        .filter(|&o| a.contains(o) && b.contains(o))
        .count() as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn overlap_table_matches_pixel_loop((gt, pred) in overlapping_pair()) {
        let table = build_overlap_table(&pred, &gt).unwrap();
        for (i, p) in pred.instances().iter().enumerate() {
            prop_assert_eq!(table.pred_areas()[i], p.area() as u64);
            for (j, g) in gt.instances().iter().enumerate() {
                prop_assert_eq!(table.intersection(i, j).unwrap(), naive_intersection(gt.canvas(), p, g));
            }
        }
    }

    #[test]
    fn dice_iou_identity_bounds_and_symmetry((gt, pred) in overlapping_pair()) {
        let forward = build_overlap_table(&pred, &gt).unwrap();
        let backward = build_overlap_table(&gt, &pred).unwrap();
        for i in 0..pred.len() {
            for j in 0..gt.len() {
                let iou = forward.iou(i, j).unwrap();
                let dice = forward.dice(i, j).unwrap();
                prop_assert!((dice - 2.0 * iou / (1.0 + iou)).abs() <= 1e-12);
                prop_assert!(0.0 <= iou && iou <= dice && dice <= 1.0);
                prop_assert_eq!(iou, backward.iou(j, i).unwrap());
            }
        }
    }

    #[test]
    fn unique_matching_is_optimal(m in iou_matrix(7), t in 0.0f64..0.9) {
        let unique = unique_match(&m, t);
        let brute = brute_force_match(&m, t).unwrap();
        check_one_to_one(&unique, m.rows(), m.cols());
        prop_assert_eq!(unique.total_iou(), brute.total_iou());
        prop_assert_eq!(unique.pair_indices(), brute.pair_indices());
    }

    #[test]
    fn unique_dominates_greedy(m in iou_matrix(9), t in 0.0f64..0.9) {
        let unique = unique_match(&m, t);
        let greedy = greedy_match(&m, t);
        check_one_to_one(&greedy, m.rows(), m.cols());
        prop_assert!(unique.total_iou() + 1e-12 >= greedy.total_iou());
    }

    #[test]
    fn greedy_pairs_shrink_with_threshold(m in iou_matrix(8), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let low = greedy_match(&m, lo).pair_indices();
        let high = greedy_match(&m, hi).pair_indices();
        prop_assert!(high.iter().all(|p| low.contains(p)));
    }

    #[test]
    fn greedy_and_unique_agree_on_label_maps((gt, pred) in label_map_pair(), t in 0.5f64..0.99, t2 in 0.5f64..0.99) {
        let cmp = Comparison::new(&pred, &gt).unwrap();
        let unique = cmp.match_at(t, Matcher::Unique);
        prop_assert_eq!(unique.pair_indices(), cmp.match_at(t, Matcher::Greedy).pair_indices());
        let (lo, hi) = if t <= t2 { (t, t2) } else { (t2, t) };
        prop_assert!(cmp.match_at(hi, Matcher::Unique).tp() <= cmp.match_at(lo, Matcher::Unique).tp());
    }

    #[test]
    fn rle_round_trip((gt, pred) in overlapping_pair()) {
        for set in [gt, pred] {
            let bytes = write_rle_json(&set);
            let back = parse_rle_json(&bytes).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(write_rle_json(&back), bytes);
        }
    }

    #[test]
    fn mask_construction_ignores_pixel_order(
        pixels in prop::collection::vec((0usize..7, 0usize..9), 1..40),
        seed in any::<u64>(),
    ) {
        let c = Canvas::new(9, 7).unwrap();
        let mut shuffled = pixels.clone();
        // deterministic Fisher-Yates driven by the generated seed
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = mask_from_pixels(c, pixels.iter().copied()).unwrap();
        let b = mask_from_pixels(c, shuffled).unwrap();
        prop_assert_eq!(&a, &b);
        let mut distinct = pixels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(a.area(), distinct.len());
    }

    #[test]
    fn classic_metric_identities((gt, pred) in overlapping_pair()) {
        let cmp = Comparison::new(&pred, &gt).unwrap();
        let r = cmp.match_at(0.5, Matcher::Unique);
        let ap = ap_at(&pred, &gt, 0.5).unwrap();
        if r.tp() > 0 {
            let pr = precision_recall(&r);
            prop_assert!((ap - ap_from_precision_recall(pr.precision, pr.recall)).abs() <= 1e-12);
        }
        let pq = panoptic_quality(&pred, &gt, 0.5, true).unwrap();
        if r.tp() + r.fp() + r.fn_count() > 0 {
            prop_assert!((pq.rq - rq_from_ap(ap)).abs() <= 1e-12);
        }
        prop_assert!((pq.pq - pq.rq * pq.sq).abs() <= 1e-12);
        prop_assert_eq!(symmetric_best_dice(&pred, &gt).unwrap(), symmetric_best_dice(&gt, &pred).unwrap());
    }

    #[test]
    fn upscaling_leaves_scores_unchanged((gt, pred) in overlapping_pair(), factor in 2usize..4) {
        let (big_gt, big_pred) = (gt.upscaled(factor), pred.upscaled(factor));
        let thresholds = segscore::metrics::default_map_thresholds();
        let pairs = [
            (ap_at(&pred, &gt, 0.5).unwrap(), ap_at(&big_pred, &big_gt, 0.5).unwrap()),
            (mean_ap(&pred, &gt, &thresholds).unwrap(), mean_ap(&big_pred, &big_gt, &thresholds).unwrap()),
            (
                panoptic_quality(&pred, &gt, 0.5, true).unwrap().pq,
                panoptic_quality(&big_pred, &big_gt, 0.5, true).unwrap().pq,
            ),
            (symmetric_best_dice(&pred, &gt).unwrap(), symmetric_best_dice(&big_pred, &big_gt).unwrap()),
            (aggregated_jaccard_index(&pred, &gt).unwrap(), aggregated_jaccard_index(&big_pred, &big_gt).unwrap()),
            (sorted_ap(&pred, &gt).unwrap().score, sorted_ap(&big_pred, &big_gt).unwrap().score),
        ];
        for (small, big) in pairs {
            prop_assert!((small - big).abs() <= 1e-12, "{} vs {}", small, big);
        }
    }

    #[test]
    fn sorted_ap_bounds((gt, pred) in overlapping_pair()) {
        let s = sorted_ap(&pred, &gt).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.score));
        if let Some(&top) = s.curve.drop_ious.last() {
            prop_assert!(s.score <= top + 1e-12);
        }
    }

    #[test]
    fn sorted_ap_single_match_is_its_iou(u in 1e-5f64..=1.0) {
        let m = IouMatrix::from_rows(&[[u]]);
        let curve = ApCurve::from_match(&Matcher::Unique.run(&m, DEFAULT_FUZZ), 1, 1);
        prop_assert!((curve.area() - u).abs() <= 1e-12);
    }

    #[test]
    fn sorted_ap_reintegrates(m in iou_matrix(8)) {
        let curve = ApCurve::from_match(&Matcher::Unique.run(&m, DEFAULT_FUZZ), m.rows(), m.cols());
        let rows = curve_to_rows(&curve);
        let reintegrated = if rows.len() == 1 {
            rows[0].1
        } else {
            let mut area = rows[1].0 * rows[0].1;
            for w in rows[1..].windows(2) {
                area += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
            }
            area
        };
        prop_assert!((reintegrated - curve.area()).abs() <= 1e-12);
    }

    #[test]
    fn lowering_one_matched_iou_lowers_sorted_ap(
        diag in prop::collection::vec(0.01f64..=1.0, 1..8),
        extra_rows in 0usize..3,
        extra_cols in 0usize..3,
        which in any::<prop::sample::Index>(),
        shrink in 0.001f64..0.99,
    ) {
        let build = |d: &[f64]| {
            let (r, c) = (d.len() + extra_rows, d.len() + extra_cols);
            let mut data = vec![0.0; r * c];
            for (i, &v) in d.iter().enumerate() {
                data[i * c + i] = v;
            }
            IouMatrix::new(r, c, data).unwrap()
        };
        let k = which.index(diag.len());
        let mut lowered = diag.clone();
        lowered[k] = (diag[k] * (1.0 - shrink)).max(1e-5);
        prop_assume!(lowered[k] < diag[k]);
        let score = |d: &[f64]| {
            let m = build(d);
            ApCurve::from_match(&Matcher::Unique.run(&m, DEFAULT_FUZZ), m.rows(), m.cols()).area()
        };
        prop_assert!(score(&lowered) < score(&diag));
    }

    #[test]
    fn perfect_masks_make_sorted_ap_equal_ap(n in 1usize..6, fp in 0usize..4, fn_ in 0usize..4) {
        // n shared 1x1 objects on a strip, then disjoint extras
        let c = Canvas::new(2 * (n + fp + fn_) + 1, 1).unwrap();
        let cell = |k: usize| segscore::Mask::from_runs(c, [(2 * k, 1)]).unwrap();
        let shared: Vec<_> = (0..n).map(cell).collect();
        let mut gt = InstanceSet::new(c, shared.clone());
        let mut pred = InstanceSet::new(c, shared);
        for k in 0..fp {
            pred.push(cell(n + k));
        }
        for k in 0..fn_ {
            gt.push(cell(n + fp + k));
        }
        let s = sorted_ap(&pred, &gt).unwrap().score;
        prop_assert_eq!(s, ap_at(&pred, &gt, 0.5).unwrap());
        prop_assert_eq!(s, ap_at(&pred, &gt, 0.9).unwrap());
        prop_assert_eq!(s, mean_ap(&pred, &gt, &segscore::metrics::default_map_thresholds()).unwrap());
    }
}
