mod common;

use forensic_eval::corpus::{Label, ScoreMap, ShapeMask};
use forensic_eval::metrics::reference::evaluate_scalar;
use forensic_eval::metrics::roc::{auc_labeled, auc_scores, labeled_key, roc_points};
use forensic_eval::metrics::{
    aggregate, auc_pixel, evaluate_batch, evaluate_image, f1_binary, f1_invert, f1_macro, f1_micro, f1_negative_class,
    f1_permute, f1_weighted, AggregateMode, DetectionRecord, PixelSample,
};
use forensic_eval::{confusion, ConfusionCounts, Workers};
use proptest::prelude::*;

use common::*;

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..500, 0u64..500, 0u64..500, 0u64..500).prop_map(|(tp, tn, fp, fn_)| ConfusionCounts { tp, tn, fp, fn_ })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn f1_variants_stay_in_unit_interval(c in counts()) {
        for v in [f1_binary(&c), f1_invert(&c), f1_permute(&c), f1_micro(&c), f1_macro(&c), f1_weighted(&c)] {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn permute_is_max_of_prediction_and_complement(c in counts()) {
        prop_assert_eq!(f1_permute(&c), f1_binary(&c).max(f1_binary(&c.complement_pred())));
        prop_assert!(f1_permute(&c) >= f1_binary(&c));
    }

    #[test]
    fn macro_is_mean_of_class_scores(c in counts()) {
        let neg = f1_binary(&c.swap_classes());
        prop_assert_eq!(f1_negative_class(&c), neg);
        prop_assert!((f1_macro(&c) - (f1_binary(&c) + neg) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn micro_equals_accuracy(c in counts()) {
        prop_assume!(c.total() > 0);
        prop_assert_eq!(f1_micro(&c), (c.tp + c.tn) as f64 / c.total() as f64);
    }

    #[test]
    fn f1_below_macro_and_micro_when_tp_below_tn(c in counts()) {
        prop_assume!(c.tp < c.tn);
        prop_assert!(f1_binary(&c) <= f1_macro(&c) + 1e-12);
        prop_assert!(f1_binary(&c) <= f1_micro(&c) + 1e-12);
    }

    #[test]
    fn packed_confusion_matches_loop(w in 1u32..100, h in 1u32..30, seed in any::<u64>(), with_shape in any::<bool>()) {
        let mut r = rng(seed);
        let pred = random_mask(&mut r, w, h, 0.4);
        let gt = random_mask(&mut r, w, h, 0.3);
        let valid = random_mask(&mut r, w, h, 0.8);
        let shape = with_shape.then(|| ShapeMask::new(valid.plane().clone()).unwrap());
        let got = confusion(&pred, &gt, shape.as_ref()).unwrap();
        prop_assert_eq!(got, count_loop(&pred, &gt, shape.as_ref()));
        prop_assert_eq!(got.total(), shape.as_ref().map_or((w * h) as u64, |s| s.valid_count()));
    }

    #[test]
    fn pixel_auc_matches_rank_statistic(w in 2u32..50, h in 2u32..20, levels in 1u32..300, seed in any::<u64>()) {
        let mut r = rng(seed);
        let score = random_scores(&mut r, w, h, levels);
        let gt = random_mask(&mut r, w, h, 0.35);
        let scores: Vec<f64> = score.data().iter().map(|&v| v as f64).collect();
        let labels = gt.plane().to_bools();
        match rank_auc(&scores, &labels) {
            Some(want) => prop_assert!((auc_pixel(&score, &gt, None).unwrap() - want).abs() < 1e-12),
            None => prop_assert!(auc_pixel(&score, &gt, None).is_err()),
        }
    }

    #[test]
    fn continuous_scores_take_the_sorting_path(n in 2usize..3000, seed in any::<u64>()) {
        use rand::RngExt;
        let mut r = rng(seed);
        let scores: Vec<f32> = (0..n).map(|_| r.random::<f32>()).collect();
        let labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        let keys: Vec<u32> = scores.iter().zip(&labels).map(|(&s, &l)| labeled_key(s, l)).collect();
        let wide: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
        match auc_scores(&wide, &labels) {
            Ok(want) => prop_assert_eq!(auc_labeled(keys.as_slice()).unwrap(), want),
            Err(_) => prop_assert!(auc_labeled(keys.as_slice()).is_err()),
        }
    }

    #[test]
    fn roc_is_monotone_from_origin_to_corner(n in 2usize..200, seed in any::<u64>()) {
        use rand::RngExt;
        let mut r = rng(seed);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..10) as f64 / 10.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let pts = roc_points(&scores, &labels).unwrap();
        prop_assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
        let last = pts.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for p in pts.windows(2) {
            prop_assert!(p[1].fpr >= p[0].fpr && p[1].tpr >= p[0].tpr);
        }
    }
}

#[test]
fn mean_aggregate_equals_mean_of_scalar_oracles() {
    let mut r = rng(77);
    let samples: Vec<PixelSample> = (0..20)
        .map(|i| {
            let (w, h) = (40 + i, 30);
            PixelSample {
                score: random_scores(&mut r, w, h, 50),
                gt: random_mask(&mut r, w, h, 0.1 + 0.02 * i as f64),
                shape: None,
            }
        })
        .collect();
    let outcomes = evaluate_batch(&samples, 0.5, Workers::new(3).unwrap()).unwrap();
    let agg = aggregate(&outcomes, AggregateMode::Mean).unwrap();
    let oracle: Vec<_> = samples
        .iter()
        .map(|s| evaluate_scalar(s.score.data(), &s.gt.plane().to_bools(), None, 0.5).unwrap())
        .collect();
    let mean = |f: fn(&forensic_eval::metrics::PixelMetricSet) -> f64| oracle.iter().map(f).sum::<f64>() / 20.0;
    assert!((agg.metrics.f1 - mean(|m| m.f1)).abs() < 1e-12);
    assert!((agg.metrics.invert_f1 - mean(|m| m.invert_f1)).abs() < 1e-12);
    assert!((agg.metrics.macro_f1 - mean(|m| m.macro_f1)).abs() < 1e-12);
    assert!((agg.metrics.iou - mean(|m| m.iou)).abs() < 1e-12);
    assert!((agg.metrics.auc.unwrap() - mean(|m| m.auc.unwrap())).abs() < 1e-12);
    assert_eq!(agg.samples, 20);
}

#[test]
fn global_aggregate_pools_counts() {
    let mut r = rng(5);
    let samples: Vec<PixelSample> = (0..6)
        .map(|_| PixelSample {
            score: random_scores(&mut r, 17, 9, 10),
            gt: random_mask(&mut r, 17, 9, 0.3),
            shape: None,
        })
        .collect();
    let outcomes = evaluate_batch(&samples, 0.5, Workers::single()).unwrap();
    let pooled = outcomes
        .iter()
        .fold(ConfusionCounts::default(), |a, o| ConfusionCounts {
            tp: a.tp + o.counts.tp,
            tn: a.tn + o.counts.tn,
            fp: a.fp + o.counts.fp,
            fn_: a.fn_ + o.counts.fn_,
        });
    let agg = aggregate(&outcomes, AggregateMode::Global).unwrap();
    assert_eq!(agg.metrics.f1, f1_binary(&pooled));
}

#[test]
fn batch_results_do_not_depend_on_worker_count() {
    let mut r = rng(11);
    let samples: Vec<PixelSample> = (0..9)
        .map(|_| PixelSample {
            score: random_scores(&mut r, 33, 12, 7),
            gt: random_mask(&mut r, 33, 12, 0.5),
            shape: None,
        })
        .collect();
    let one = evaluate_batch(&samples, 0.5, Workers::single()).unwrap();
    let many = evaluate_batch(&samples, 0.5, Workers::new(8).unwrap()).unwrap();
    assert_eq!(one, many);
}

#[test]
fn image_level_metrics_from_records() {
    let records: Vec<DetectionRecord> = [(0.9, true), (0.8, false), (0.7, true), (0.1, false)]
        .iter()
        .enumerate()
        .map(|(i, &(score, manipulated))| DetectionRecord {
            id: format!("s{i}"),
            score,
            label: if manipulated {
                Label::Manipulated
            } else {
                Label::Authentic
            },
        })
        .collect();
    let m = evaluate_image(&records, 0.5).unwrap();
    assert!((m.auc.unwrap() - 0.75).abs() < 1e-12);
    assert!((m.accuracy - 0.75).abs() < 1e-12);
}

#[test]
fn uniform_scores_give_half_auc() {
    let score = ScoreMap::new(4, 4, vec![0.3; 16]).unwrap();
    let mut r = rng(1);
    let gt = random_mask(&mut r, 4, 4, 0.5);
    assert_eq!(auc_pixel(&score, &gt, None).unwrap(), 0.5);
}
