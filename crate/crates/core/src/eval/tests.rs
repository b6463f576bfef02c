use proptest::prelude::*;
use rand::Rng;

use super::cv::*;
use super::*;
use crate::forest::ForestConfig;
use crate::pipeline::{FeatureSelection, PipelineConfig};
use crate::selectors::{Selector, SelectorConfig};
use crate::tabular::{label_column, CategoricalColumn, Column, ColumnSchema, Dataset};

#[test]
fn confusion_examples() {
    let c = confusion(&[1, 0], &[1, 0]).unwrap();
    assert_eq!(
        c,
        ConfusionMatrix {
            tp: 1,
            fn_: 0,
            fp: 0,
            tn: 1
        }
    );
    assert_eq!(confusion(&[1, 1], &[0, 0]).unwrap().fn_, 2);
    assert!(confusion(&[1], &[1, 0]).is_err());
}

proptest! {
    #[test]
    fn confusion_matches_counter(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
        let (t, p): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let c = confusion(&t, &p).unwrap();
        let count = |a: u8, b: u8| pairs.iter().filter(|&&(x, y)| x == a && y == b).count() as u64;
        prop_assert_eq!(c, ConfusionMatrix { tp: count(1, 1), fn_: count(1, 0), fp: count(0, 1), tn: count(0, 0) });
        prop_assert_eq!(c.total(), pairs.len() as u64);
    }

    #[test]
    fn f1_is_harmonic_mean(tp in 0u64..100, fn_ in 0u64..100, fp in 0u64..100, tn in 0u64..100) {
        let m = metrics(&ConfusionMatrix { tp, fn_, fp, tn });
        if m.tpr + m.ppv > 0.0 {
            prop_assert!((m.f1 - f1_from_rates(m.tpr, m.ppv)).abs() < 1e-12);
        }
        prop_assert!((0.0..=100.0).contains(&m.acc));
        for v in [m.tpr, m.ppv, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn auc_is_permutation_invariant(
        data in proptest::collection::vec((0u8..2, 0u32..20), 2..60),
        seed in any::<u64>(),
    ) {
        let mut data = data;
        data[0].0 = 1;
        let (y, s): (Vec<u8>, Vec<f64>) = data.iter().map(|&(y, s)| (y, f64::from(s) / 20.0)).unzip();
        let (_, a) = pr_curve_auc(&y, &s).unwrap();
        let mut perm: Vec<usize> = (0..y.len()).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut crate::seed::stream(seed, 0));
        let y2: Vec<u8> = perm.iter().map(|&i| y[i]).collect();
        let s2: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
        let (_, b) = pr_curve_auc(&y2, &s2).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
    }
}

#[test]
fn metric_examples() {
    let perfect = metrics(&ConfusionMatrix {
        tp: 50,
        fn_: 0,
        fp: 0,
        tn: 50,
    });
    assert_eq!(
        perfect,
        Metrics {
            acc: 100.0,
            tpr: 1.0,
            ppv: 1.0,
            f1: 1.0
        }
    );
    let misses = metrics(&ConfusionMatrix {
        tp: 0,
        fn_: 5,
        fp: 0,
        tn: 5,
    });
    assert_eq!(
        misses,
        Metrics {
            acc: 50.0,
            tpr: 0.0,
            ppv: 0.0,
            f1: 0.0
        }
    );
    assert_eq!(metrics(&ConfusionMatrix::default()).f1, 0.0);
}

#[test]
fn reported_row_f1() {
    assert!((f1_from_rates(0.051, 0.044) - 0.047).abs() <= 0.001);
}

#[test]
fn hand_enumerated_auc() {
    let (curve, auc) = pr_curve_auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap();
    assert!((auc - 5.0 / 6.0).abs() < 1e-12);
    let got: Vec<(f64, f64)> = curve.points[1..]
        .iter()
        .map(|p| (p.precision, p.recall))
        .collect();
    assert_eq!(
        got,
        vec![(1.0, 0.5), (0.5, 0.5), (2.0 / 3.0, 1.0), (0.5, 1.0)]
    );
    assert_eq!(curve.points[0].recall, 0.0);
}

#[test]
fn auc_edge_cases() {
    let (_, perfect) = pr_curve_auc(&[1, 1, 0, 0, 0], &[0.9, 0.8, 0.3, 0.2, 0.1]).unwrap();
    assert_eq!(perfect, 1.0);
    let (curve, constant) = pr_curve_auc(&[1, 0, 0, 0], &[0.5; 4]).unwrap();
    assert_eq!(constant, 0.25);
    assert_eq!(curve.points.len(), 2);
    assert!(matches!(
        pr_curve_auc(&[0, 0], &[0.1, 0.2]),
        Err(EvalError::UndefinedRecall)
    ));
}

#[test]
fn random_scores_auc_near_base_rate() {
    let mut rng = crate::seed::stream(17, 0);
    let n = 20_000;
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.1))).collect();
    let mean: f64 = (0..20)
        .map(|s| {
            let mut r = crate::seed::stream(s, 1);
            let scores: Vec<f64> = (0..n).map(|_| r.gen()).collect();
            pr_curve_auc(&y, &scores).unwrap().1
        })
        .sum::<f64>()
        / 20.0;
    let base = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    assert!((mean - base).abs() < 0.01, "{mean} vs {base}");
}

fn brute_wilcoxon(a: &[f64], b: &[f64]) -> (f64, f64) {
    let sr = SignedRanks::new(a, b);
    let n = sr.n();
    let (plus, minus) = sr.sums();
    let w = plus.min(minus);
    let mut at_most = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| sr.doubled_ranks[i] as f64 / 2.0)
            .sum();
        if s <= w + 1e-9 {
            at_most += 1;
        }
    }
    (w, (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0))
}

#[test]
fn wilcoxon_all_positive_five() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [0.0; 5];
    let r = wilcoxon_signed_rank(&a, &b);
    assert_eq!(r.statistic, 0.0);
    assert!(r.exact);
    assert!((r.p_value - 0.0625).abs() < 1e-12);
}

#[test]
fn wilcoxon_identical_samples() {
    let a = [0.3, 0.5, 0.7];
    let r = wilcoxon_signed_rank(&a, &a);
    assert_eq!((r.statistic, r.p_value, r.all_zero), (0.0, 1.0, true));
}

proptest! {
    #[test]
    fn wilcoxon_exact_matches_enumeration(
        d in proptest::collection::vec(-6i32..=6, 1..13),
    ) {
        let a: Vec<f64> = d.iter().map(|&v| f64::from(v) / 2.0).collect();
        let b = vec![0.0; a.len()];
        let r = wilcoxon_signed_rank(&a, &b);
        if r.all_zero {
            prop_assert_eq!(r.p_value, 1.0);
        } else {
            let (w, p) = brute_wilcoxon(&a, &b);
            prop_assert_eq!(r.statistic, w);
            prop_assert!((r.p_value - p).abs() < 1e-12, "{} vs {}", r.p_value, p);
        }
    }
}

#[test]
fn wilcoxon_branches_agree_at_25() {
    for seed in 0..50 {
        let mut rng = crate::seed::stream(seed, 7);
        let a: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let b = vec![0.0; 25];
        let sr = SignedRanks::new(&a, &b);
        let e = wilcoxon_exact(&sr);
        let n = wilcoxon_normal(&sr);
        assert!(
            (e.p_value - n.p_value).abs() < 0.02,
            "seed {seed}: {} vs {}",
            e.p_value,
            n.p_value
        );
    }
}

fn toy_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = crate::seed::stream(seed, 3);
    let mut good = Vec::new();
    let mut noise = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let g = rng.gen_range(0..3u8);
        let p = [0.05, 0.3, 0.7][g as usize];
        y.push(u8::from(rng.gen_bool(p)));
        good.push(format!("g{g}"));
        noise.push(format!("n{}", rng.gen_range(0..40)));
    }
    let cat = |v: &[String]| {
        Column::Categorical(CategoricalColumn::from_values(
            v.iter().map(|s| Some(s.as_str())),
        ))
    };
    Dataset::new(
        vec![
            ColumnSchema::feature("good", crate::tabular::ColumnKind::Categorical),
            ColumnSchema::feature("noise", crate::tabular::ColumnKind::Categorical),
            ColumnSchema::label("label"),
        ],
        vec![
            cat(&good),
            cat(&noise),
            Column::Categorical(label_column(&y)),
        ],
    )
    .unwrap()
}

fn pipeline_cfg(selection: FeatureSelection) -> PipelineConfig {
    PipelineConfig {
        selection,
        encoder: Default::default(),
        forest: ForestConfig {
            n_trees: 10,
            seed: 4,
            ..ForestConfig::default()
        },
    }
}

#[test]
fn folds_partition_rows() {
    let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 4 == 0)).collect();
    let plan = CvPlan::new(
        &labels,
        &CvConfig {
            folds: 5,
            repeats: 3,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    for r in 0..3 {
        let mut seen = vec![0; 100];
        for f in 0..5 {
            let (train, test) = plan.split(r, f);
            assert_eq!(test.len(), 20);
            assert_eq!(train.len() + test.len(), 100);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 5);
            for i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
    assert_ne!(plan.assignment[0], plan.assignment[1]);
}

#[test]
fn cross_validation_counts_and_determinism() {
    let d = toy_dataset(400, 1);
    let cfg = pipeline_cfg(FeatureSelection::Ranked {
        selector: Selector::PAdj,
        config: SelectorConfig::default(),
    });
    let cv = CvConfig {
        folds: 5,
        repeats: 2,
        seed: 9,
        ..Default::default()
    };
    let a = cross_validate(&d, &cfg, &cv).unwrap();
    assert_eq!(a.len(), 10);
    assert!(a.iter().all(|r| r.result.is_ok()));
    let order: Vec<(usize, usize)> = a.iter().map(|r| (r.repeat, r.fold)).collect();
    assert_eq!(
        order,
        (0..2)
            .flat_map(|r| (0..5).map(move |f| (r, f)))
            .collect::<Vec<_>>()
    );
    let b = crate::par::with_threads(1, || cross_validate(&d, &cfg, &cv).unwrap());
    assert_eq!(folds_tsv(&a), folds_tsv(&b));
    assert_eq!(summary_tsv(&summarize(&a)), summary_tsv(&summarize(&b)));
    let s = summarize(&a);
    assert_eq!(s.len(), 2);
    assert!(s.iter().all(|r| r.auc_pr > 0.3));
}

#[test]
fn single_class_training_fold_is_reported() {
    // One positive: one fold trains without it, the other tests without it.
    let d = toy_dataset(40, 2);
    let mut y = vec![0u8; 40];
    y[0] = 1;
    let d = d.with_labels(&y).unwrap();
    let cv = CvConfig {
        folds: 2,
        repeats: 1,
        seed: 0,
        ..Default::default()
    };
    let reports = cross_validate(&d, &pipeline_cfg(FeatureSelection::All), &cv).unwrap();
    let failed: Vec<&EvalReport> = reports.iter().filter(|r| r.result.is_err()).collect();
    assert_eq!(failed.len(), 2);
    let reasons: Vec<&String> = failed
        .iter()
        .map(|r| r.result.as_ref().unwrap_err())
        .collect();
    assert!(reasons.iter().any(|r| r.contains("single class")));
    assert!(reasons.iter().any(|r| r.contains("undefined recall")));
    assert!(folds_tsv(&reports).contains("failed: training split has a single class"));
}

#[test]
fn held_out_labels_do_not_reach_the_fit() {
    let d = toy_dataset(300, 5);
    let labels = d.labels().unwrap();
    let cfg = pipeline_cfg(FeatureSelection::Ranked {
        selector: Selector::MiAdj,
        config: SelectorConfig::default(),
    });
    let plan = CvPlan::new(
        &labels,
        &CvConfig {
            folds: 5,
            repeats: 1,
            seed: 3,
            ..Default::default()
        },
    )
    .unwrap();
    for fold in 0..5 {
        let (_, test) = plan.split(0, fold);
        let mut masked = labels.clone();
        for &r in &test {
            masked[r] = 0;
        }
        let a = fit_fold(&d, &cfg, &plan, 0, fold).unwrap();
        let b = fit_fold(&d.with_labels(&masked).unwrap(), &cfg, &plan, 0, fold).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn summary_round_trip() {
    let s = vec![RepeatSummary {
        repeat: 0,
        acc: 99.5,
        tpr: 0.01,
        ppv: 0.2,
        f1: 0.019,
        auc_pr: 0.05,
        failed_folds: 0,
    }];
    let text = summary_tsv(&s);
    assert_eq!(
        text.lines().next().unwrap(),
        "ACC\tTPR\tPPV\tF1-SCORE\tAUC-PR"
    );
    assert_eq!(
        read_summary(&text).unwrap(),
        vec![[99.5, 0.01, 0.2, 0.019, 0.05]]
    );
    assert!(read_summary("ACC\tTPR\n").is_err());
    assert!(read_summary("ACC\tTPR\tPPV\tF1-SCORE\tAUC-PR\n1\t2\n").is_err());
}
