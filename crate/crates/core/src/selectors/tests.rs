use super::*;
use crate::tabular::{label_column, CategoricalColumn, ColumnSchema};
use proptest::prelude::*;

fn table(rows: &[&[u64]]) -> ContingencyTable {
    ContingencyTable::from_counts(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// Independent Pearson statistic over a raw count matrix.
fn brute_chi2(rows: &[Vec<u64>]) -> f64 {
    let n: f64 = rows.iter().flatten().sum::<u64>() as f64;
    let mut s = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let ri: f64 = r.iter().sum::<u64>() as f64;
        for j in 0..r.len() {
            let cj: f64 = rows.iter().map(|x| x[j]).sum::<u64>() as f64;
            let e = ri * cj / n;
            s += (rows[i][j] as f64 - e).powi(2) / e;
        }
    }
    s
}

/// Independent MI: Σ p(x,y) ln(p(x,y) / (p(x) p(y))) from joint probabilities.
fn brute_mi(rows: &[Vec<u64>]) -> f64 {
    let n: f64 = rows.iter().flatten().sum::<u64>() as f64;
    let px: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().sum::<u64>() as f64 / n)
        .collect();
    let py: Vec<f64> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j]).sum::<u64>() as f64 / n)
        .collect();
    let mut mi = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            if o > 0 {
                let pxy = o as f64 / n;
                mi += pxy * (pxy / (px[i] * py[j])).ln();
            }
        }
    }
    mi
}

/// `2 Σ O ln(O / E)`.
fn g_statistic(t: &ContingencyTable) -> f64 {
    let mut g = 0.0;
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            let o = t.observed(i, j) as f64;
            if o > 0.0 {
                g += o * (o / t.expected(i, j)).ln();
            }
        }
    }
    2.0 * g
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

const C95_DF1: f64 = 3.841_458_820_694_124;

#[test]
fn chi2_proportional_table_is_zero() {
    let (s, p) = chi2_statistic(&table(&[&[10, 20], &[20, 40]])).unwrap();
    assert!(s.abs() < 1e-12);
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn chi2_hand_computed() {
    // E = 15 in every cell: 4 · 25 / 15 = 6.6667.
    let (s, _) = chi2_statistic(&table(&[&[20, 10], &[10, 20]])).unwrap();
    assert!((s - 20.0 / 3.0).abs() < 1e-4);
    assert!((s - brute_chi2(&[vec![20, 10], vec![10, 20]])).abs() < 1e-12);
}

#[test]
fn p_adj_examples() {
    assert!(p_adj(C95_DF1, 1, 0.05).unwrap().abs() < 1e-9);
    let v = p_adj(6.6667, 1, 0.05).unwrap();
    assert!((v - (6.6667 - 3.8415) / 3.8415).abs() < 1e-3);
    assert!((v - 0.7354).abs() < 1e-3);
    for df in [1, 2, 9, 99, 5000] {
        assert!((p_adj(0.0, df, 0.05).unwrap() + 1.0).abs() < 1e-15);
    }
}

#[test]
fn p_adj_soft_examples() {
    assert!(p_adj_soft(C95_DF1, 1, 0.05).unwrap().abs() < 1e-9);
    let v = p_adj_soft(6.6667, 1, 0.05).unwrap();
    assert!((v - 2.0991).abs() < 1e-3);
    // Sweep: fixed statistic above every critical value, growing df.
    let stat = 200.0;
    let sweep: Vec<f64> = [1, 10, 100]
        .iter()
        .map(|&df| p_adj_soft(stat, df, 0.05).unwrap())
        .collect();
    assert!(sweep[0] > sweep[1] && sweep[1] > sweep[2], "{sweep:?}");
    assert!(matches!(
        p_adj_soft(1.0, 1, 0.5),
        Err(SelectError::SoftPenaltyUndefined { .. })
    ));
}

#[test]
fn mi_examples() {
    assert!(mutual_information(&table(&[&[10, 20], &[20, 40]])).abs() < 1e-15);
    let mi = mutual_information(&table(&[&[30, 0], &[0, 30]]));
    assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    let rows = vec![vec![20, 10], vec![10, 20]];
    let mi = mutual_information(&table(&[&[20, 10], &[10, 20]]));
    assert!((mi - 0.056633).abs() < 1e-5);
    assert!(close(mi, brute_mi(&rows), 1e-12));
}

#[test]
fn mi_adj_examples() {
    let (s, keep) = mi_adj(&table(&[&[10, 20], &[20, 40]]), 0.05).unwrap();
    assert!((s + C95_DF1).abs() < 1e-9);
    assert!(!keep);
    let t = table(&[&[20, 10], &[10, 20]]);
    let (s, keep) = mi_adj(&t, 0.05).unwrap();
    assert!((s - 2.955).abs() < 0.01);
    assert!(keep);
    let (s10, _) = mi_adj(&t.scaled(10), 0.05).unwrap();
    assert!(close(s10 + C95_DF1, 10.0 * (s + C95_DF1), 1e-12));
}

fn random_table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (2usize..=6, 2usize..=6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0u64..400, c), r)
    })
}

proptest! {
    #[test]
    fn statistics_match_brute_force(rows in random_table()) {
        if let Ok(t) = ContingencyTable::from_counts(&rows) {
            // Oracles run on the pruned matrix so both see the same cells.
            let pruned: Vec<Vec<u64>> = (0..t.rows())
                .map(|i| (0..t.cols()).map(|j| t.observed(i, j)).collect())
                .collect();
            let (s, _) = chi2_statistic(&t).unwrap();
            prop_assert!(close(s, brute_chi2(&pruned), 1e-9) || (s - brute_chi2(&pruned)).abs() < 1e-12);
            let mi = mutual_information(&t);
            prop_assert!((mi - brute_mi(&pruned).max(0.0)).abs() <= 1e-9 * mi.max(1e-6));
        }
    }

    #[test]
    fn g_statistic_identity(rows in random_table()) {
        if let Ok(t) = ContingencyTable::from_counts(&rows) {
            let lhs = 2.0 * t.n() as f64 * mutual_information(&t);
            let rhs = g_statistic(&t);
            prop_assert!((lhs - rhs.max(0.0)).abs() <= 1e-9 * rhs.abs().max(1e-6));
        }
    }

    #[test]
    fn scaling_counts(rows in random_table(), m in 1u64..20) {
        if let Ok(t) = ContingencyTable::from_counts(&rows) {
            let s = t.scaled(m);
            prop_assert!((mutual_information(&s) - mutual_information(&t)).abs() < 1e-9);
            let (a, _) = chi2_statistic(&t).unwrap();
            let (b, _) = chi2_statistic(&s).unwrap();
            prop_assert!((b - m as f64 * a).abs() <= 1e-9 * b.max(1.0));
        }
    }
}

fn cat(values: &[&str]) -> Column {
    Column::Categorical(CategoricalColumn::from_values(
        values.iter().map(|s| Some(*s)),
    ))
}

fn dataset(cols: Vec<(&str, Column)>, labels: &[u8]) -> Dataset {
    let mut schema: Vec<ColumnSchema> = cols
        .iter()
        .map(|(n, c)| ColumnSchema::feature(*n, c.kind()))
        .collect();
    let mut columns: Vec<Column> = cols.into_iter().map(|(_, c)| c).collect();
    schema.push(ColumnSchema::label("label"));
    columns.push(Column::Categorical(label_column(labels)));
    Dataset::new(schema, columns).unwrap()
}

fn perfect_vs_noise() -> Dataset {
    let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
    let a: Vec<&str> = labels
        .iter()
        .map(|&y| if y == 1 { "p" } else { "q" })
        .collect();
    // B cycles with period 4 against a period-2 label: exactly independent.
    let b: Vec<&str> = (0..40)
        .map(|i| if (i / 2) % 2 == 0 { "u" } else { "v" })
        .collect();
    dataset(vec![("B", cat(&b)), ("A", cat(&a))], &labels)
}

#[test]
fn perfect_feature_ranks_first_everywhere() {
    let d = perfect_vs_noise();
    for sel in Selector::ALL {
        let scores = rank_features(&d, sel, &SelectorConfig::default()).unwrap();
        assert_eq!(scores[0].feature, "A", "{sel}");
        assert_eq!(scores[0].rank, 1);
        assert!(scores[0].keep);
    }
}

#[test]
fn k_larger_than_feature_count_keeps_all_valid() {
    let d = perfect_vs_noise();
    let cfg = SelectorConfig {
        k: 50,
        ..Default::default()
    };
    let scores = rank_features(&d, Selector::PAdj, &cfg).unwrap();
    assert!(scores.iter().all(|s| s.keep));
    // The filter rules still apply for mi_adj and the plain p-value.
    let scores = rank_features(&d, Selector::MiAdj, &cfg).unwrap();
    assert_eq!(scores.iter().filter(|s| s.keep).count(), 1);
    let scores = rank_features(&d, Selector::ChiSquared, &cfg).unwrap();
    assert_eq!(scores.iter().filter(|s| s.keep).count(), 1);
}

#[test]
fn degenerate_features_rank_last() {
    let labels = [0, 1, 0, 1];
    let d = dataset(
        vec![
            ("const", cat(&["z", "z", "z", "z"])),
            ("x", cat(&["a", "b", "a", "b"])),
        ],
        &labels,
    );
    let scores = rank_features(&d, Selector::MiAdj, &SelectorConfig::default()).unwrap();
    assert_eq!(scores[1].feature, "const");
    assert_eq!(scores[1].rank, 2);
    assert!(!scores[1].keep);
    assert!(scores[1].statistic.is_nan());
}

#[test]
fn numeric_features_are_binned() {
    let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 50)).collect();
    let x: Vec<Option<f64>> = (0..100).map(|i| Some(i as f64)).collect();
    let d = dataset(vec![("x", Column::Numeric(x))], &labels);
    let scores = rank_features(&d, Selector::ChiSquared, &SelectorConfig::default()).unwrap();
    assert_eq!(scores[0].df, 9);
    assert!(scores[0].p_value.unwrap() < 1e-10);
}

#[test]
fn same_df_same_order_for_hard_and_soft() {
    // Five binary features of varying strength, all df = 1.
    let n = 200;
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let cols: Vec<(String, Column)> = (0..5)
        .map(|f| {
            let v: Vec<&str> = (0..n)
                .map(|i| {
                    if (i * (f + 2) + labels[i] as usize * f) % 5 < 2 {
                        "a"
                    } else {
                        "b"
                    }
                })
                .collect();
            (format!("f{f}"), cat(&v))
        })
        .collect();
    let d = dataset(
        cols.iter().map(|(n, c)| (n.as_str(), c.clone())).collect(),
        &labels,
    );
    let hard = rank_features(&d, Selector::PAdj, &SelectorConfig::default()).unwrap();
    let soft = rank_features(&d, Selector::PAdjSoft, &SelectorConfig::default()).unwrap();
    let h: Vec<_> = hard.iter().map(|s| &s.feature).collect();
    let s: Vec<_> = soft.iter().map(|s| &s.feature).collect();
    assert_eq!(h, s);
}

#[test]
fn ranking_is_thread_count_independent() {
    let d = perfect_vs_noise();
    let a = crate::par::with_threads(1, || {
        rank_features(&d, Selector::MiAdj, &SelectorConfig::default()).unwrap()
    });
    let b = crate::par::with_threads(4, || {
        rank_features(&d, Selector::MiAdj, &SelectorConfig::default()).unwrap()
    });
    assert_eq!(scores_to_tsv(&a), scores_to_tsv(&b));
}

#[test]
fn tsv_kept_round_trip() {
    let d = perfect_vs_noise();
    let scores = rank_features(&d, Selector::PAdj, &SelectorConfig::default()).unwrap();
    let tsv = scores_to_tsv(&scores);
    assert!(tsv.starts_with(SCORE_HEADER));
    assert_eq!(tsv.lines().nth(1).unwrap().split('\t').count(), 8);
    let kept = kept_features_from_tsv(&tsv).unwrap();
    let expected: Vec<_> = scores
        .iter()
        .filter(|s| s.keep)
        .map(|s| s.feature.clone())
        .collect();
    assert_eq!(kept, expected);
    assert!(kept_features_from_tsv("bad header\n").is_err());
}

#[test]
fn config_validation() {
    let d = perfect_vs_noise();
    for cfg in [
        SelectorConfig {
            alpha: 0.0,
            ..Default::default()
        },
        SelectorConfig {
            alpha: 1.0,
            ..Default::default()
        },
        SelectorConfig {
            k: 0,
            ..Default::default()
        },
        SelectorConfig {
            numeric_bins: 1,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            rank_features(&d, Selector::PAdj, &cfg),
            Err(SelectError::InvalidConfig(_))
        ));
    }
    assert!("nope".parse::<Selector>().is_err());
    assert_eq!("chi2".parse::<Selector>().unwrap(), Selector::ChiSquared);
}

#[test]
fn null_tables_are_penalized_on_average() {
    use rand::Rng;
    let mut rng = crate::seed::stream(11, 0);
    for (levels, df) in [(2usize, 1u64), (10, 9), (100, 99)] {
        let (mut sum_padj, mut sum_mi, mut count) = (0.0, 0.0, 0);
        for _ in 0..1000 {
            let mut counts = vec![vec![0u64; 2]; levels];
            for _ in 0..(40 * levels) {
                let x = rng.gen_range(0..levels);
                let y = usize::from(rng.gen_bool(0.3));
                counts[x][y] += 1;
            }
            let t = ContingencyTable::from_counts(&counts).unwrap();
            if t.df() != df {
                continue;
            }
            let (s, _) = chi2_statistic(&t).unwrap();
            sum_padj += p_adj(s, t.df(), 0.05).unwrap();
            sum_mi += mi_adj(&t, 0.05).unwrap().0;
            count += 1;
        }
        assert!(count >= 990);
        assert!(sum_padj / (count as f64) < 0.0, "df={df}");
        assert!(sum_mi / (count as f64) < 0.0, "df={df}");
    }
}
