use proptest::prelude::*;

use super::tree::bootstrap_counts;
use super::*;
use crate::textio::{numbered, FormatError};

fn xor_data(n: usize) -> (EncodedMatrix, Vec<u8>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64])
        .collect();
    let y = rows.iter().map(|r| u8::from(r[0] != r[1])).collect();
    (EncodedMatrix::from_dense(&rows), y)
}

fn accuracy(pred: &[u8], y: &[u8]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

fn cfg(n_trees: usize, seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees,
        seed,
        ..ForestConfig::default()
    }
}

#[test]
fn single_binary_column_is_learned_exactly() {
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| vec![(i % 3 == 0) as u8 as f64, (i % 7) as f64])
        .collect();
    let y: Vec<u8> = rows.iter().map(|r| r[0] as u8).collect();
    let x = EncodedMatrix::from_dense(&rows);
    let m = fit(&x, &y, &cfg(1, 3)).unwrap();
    assert_eq!(accuracy(&m.predict(&x, 0.5).unwrap(), &y), 1.0);
}

#[test]
fn xor_is_learned() {
    let (x, y) = xor_data(200);
    let m = fit(&x, &y, &cfg(50, 11)).unwrap();
    assert!(accuracy(&m.predict(&x, 0.5).unwrap(), &y) >= 0.95);
}

#[test]
fn leaf_size_equal_to_rows_gives_root_leaf() {
    let n = 100;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 10 < 3)).collect();
    let x = EncodedMatrix::from_dense(&rows);
    let c = ForestConfig {
        n_trees: 1,
        min_samples_leaf: n,
        seed: 5,
        ..ForestConfig::default()
    };
    let m = fit(&x, &y, &c).unwrap();
    assert_eq!(m.trees[0].nodes.len(), 1);
    // The leaf holds the base rate of the tree's bootstrap sample.
    let w = bootstrap_counts(n, &mut crate::seed::stream(5, 0));
    let pos: u32 = w.iter().zip(&y).map(|(k, l)| k * u32::from(*l)).sum();
    let rate = f64::from(pos) / n as f64;
    let scores = m.predict_proba(&x).unwrap();
    assert!(scores.iter().all(|&s| s == rate));
    assert!((rate - 0.3).abs() < 0.15);
}

#[test]
fn unanimous_trees_score_one() {
    let t = Tree {
        nodes: vec![Node::Leaf { value: 1.0 }],
    };
    let m = ForestModel {
        config: cfg(3, 0),
        n_cols: 1,
        trees: vec![t.clone(), t.clone(), t],
    };
    let x = EncodedMatrix::from_dense(&[vec![0.0], vec![2.0]]);
    assert_eq!(m.predict_proba(&x).unwrap(), vec![1.0, 1.0]);
}

#[test]
fn errors() {
    let (x, y) = xor_data(8);
    assert!(matches!(
        fit(&x, &[0; 8], &cfg(1, 0)),
        Err(ForestError::DegenerateLabels)
    ));
    assert!(matches!(
        fit(&x, &y[..4], &cfg(1, 0)),
        Err(ForestError::LengthMismatch { .. })
    ));
    assert!(matches!(
        fit(&x, &y, &cfg(0, 0)),
        Err(ForestError::InvalidConfig(_))
    ));
    let m = fit(&x, &y, &cfg(2, 0)).unwrap();
    let wide = EncodedMatrix::from_dense(&[vec![0.0, 1.0, 2.0]]);
    assert!(matches!(
        m.predict_proba(&wide),
        Err(ForestError::ColumnMismatch {
            expected: 2,
            found: 3
        })
    ));
}

#[test]
fn bootstrap_unique_fraction() {
    let n = 1000;
    let trees = 200;
    let mean: f64 = (0..trees)
        .map(|t| {
            let w = bootstrap_counts(n, &mut crate::seed::stream(99, t));
            assert_eq!(w.iter().map(|&k| k as usize).sum::<usize>(), n);
            w.iter().filter(|&&k| k > 0).count() as f64 / n as f64
        })
        .sum::<f64>()
        / trees as f64;
    assert!((mean - (1.0 - (-1.0f64).exp())).abs() < 0.05, "{mean}");
}

fn random_data(seed: u64, n: usize, cols: usize) -> (EncodedMatrix, Vec<u8>) {
    use rand::Rng;
    let mut rng = crate::seed::stream(seed, 0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        0.0
                    } else {
                        f64::from(rng.gen_range(1..4u8))
                    }
                })
                .collect()
        })
        .collect();
    let mut y: Vec<u8> = rows
        .iter()
        .map(|r| u8::from(r[0] + rng.gen_range(0.0..2.0) > 1.5))
        .collect();
    y[0] = 0;
    y[1] = 1;
    (EncodedMatrix::from_dense(&rows), y)
}

#[test]
fn determinism_across_thread_counts() {
    let (x, y) = random_data(1, 300, 8);
    let c = cfg(20, 42);
    let a = crate::par::with_threads(1, || fit(&x, &y, &c).unwrap());
    let b = crate::par::with_threads(4, || fit(&x, &y, &c).unwrap());
    assert_eq!(a, b);
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    write_forest(&a, &mut ta).unwrap();
    write_forest(&b, &mut tb).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn adding_trees_keeps_earlier_trees() {
    let (x, y) = random_data(2, 200, 5);
    let small = fit(&x, &y, &cfg(3, 8)).unwrap();
    let big = fit(&x, &y, &cfg(6, 8)).unwrap();
    assert_eq!(small.trees[..], big.trees[..3]);
}

#[test]
fn text_round_trip_is_exact() {
    let (x, y) = random_data(3, 200, 6);
    let c = ForestConfig {
        max_depth: None,
        features_per_split: FeaturesPerSplit::Fixed(3),
        ..cfg(7, 1)
    };
    let m = fit(&x, &y, &c).unwrap();
    let mut buf = Vec::new();
    write_forest(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let back = read_forest(&mut numbered(&text)).unwrap();
    assert_eq!(m, back);
    assert_eq!(
        m.predict_proba(&x).unwrap(),
        back.predict_proba(&x).unwrap()
    );
}

#[test]
fn corrupt_model_is_rejected() {
    let text = "eventsel-forest v1\nn_trees\t1\nmin_samples_leaf\t1\nmax_depth\tnone\nfeatures_per_split\tsqrt\nseed\t0\nn_cols\t2\ntree\t3\nS\t5\t0.5\t2\nL\t0\nL\t1\nend\n";
    assert!(matches!(
        read_forest(&mut numbered(text)),
        Err(ForestError::Format(FormatError { line: 9, .. }))
    ));
}

fn gini(w: f64, p: f64) -> f64 {
    let q = p / w;
    2.0 * q * (1.0 - q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Replays the bootstrap, routes in-bag rows through the tree and checks
    // the structural invariants node by node.
    #[test]
    fn tree_invariants(seed in 0u64..1000, min_leaf in 1usize..5) {
        let (x, y) = random_data(seed, 120, 6);
        let c = ForestConfig { n_trees: 1, min_samples_leaf: min_leaf, seed, ..ForestConfig::default() };
        let m = fit(&x, &y, &c).unwrap();
        let w = bootstrap_counts(y.len(), &mut crate::seed::stream(seed, 0));
        let nodes = &m.trees[0].nodes;
        let mut at: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        at[0] = (0..y.len()).filter(|&r| w[r] > 0).collect();
        for i in 0..nodes.len() {
            let rows = std::mem::take(&mut at[i]);
            let tot = |rs: &[usize]| rs.iter().fold((0.0, 0.0), |(a, b), &r| (a + w[r] as f64, b + (w[r] * y[r] as u32) as f64));
            let (tw, tp) = tot(&rows);
            match nodes[i] {
                Node::Leaf { value } => {
                    prop_assert!((0.0..=1.0).contains(&value));
                    prop_assert_eq!(value, tp / tw);
                }
                Node::Split { column, threshold, right } => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x.get(r, column) <= threshold);
                    let ((lw, lp), (rw, rp)) = (tot(&l), tot(&r));
                    prop_assert!(lw >= min_leaf as f64 && rw >= min_leaf as f64);
                    prop_assert!(tw * gini(tw, tp) - lw * gini(lw, lp) - rw * gini(rw, rp) >= -1e-9);
                    prop_assert!(gini(tw, tp) > 0.0);
                    at[i + 1] = l;
                    at[right as usize] = r;
                }
            }
        }
    }
}
