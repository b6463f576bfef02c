use rand::seq::index;
use rand::Rng;

use crate::encoders::EncodedMatrix;
use crate::seed::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `value <= threshold` go to the left child, stored right after
    /// this node; the rest go to `right`.
    Split {
        column: u32,
        threshold: f64,
        right: u32,
    },
    /// Positive-class fraction of the (bootstrap-weighted) training rows.
    Leaf { value: f64 },
}

/// A binary tree as a preorder node list.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Scores one sparse row given its sorted column indices and values.
    pub fn predict_row(&self, cols: &[u32], vals: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    column,
                    threshold,
                    right,
                } => {
                    let v = cols.binary_search(&column).map_or(0.0, |k| vals[k]);
                    i = if v <= threshold {
                        i + 1
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> (usize, usize) {
            // Returns (depth below i, index after the subtree).
            match t.nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (l, _) = go(t, i + 1);
                    let (r, end) = go(t, right as usize);
                    (1 + l.max(r), end)
                }
            }
        }
        go(self, 0).0
    }
}

/// Bootstrap multiplicities: `n` draws with replacement from `0..n`.
pub(crate) fn bootstrap_counts(n: usize, rng: &mut StreamRng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts
}

fn gini(w: u64, p: u64) -> f64 {
    if w == 0 {
        return 0.0;
    }
    let q = p as f64 / w as f64;
    2.0 * q * (1.0 - q)
}

pub(crate) struct Builder<'a> {
    pub x: &'a EncodedMatrix,
    pub csc: &'a [Vec<(u32, f64)>],
    pub y: &'a [u8],
    pub min_leaf: u64,
    pub max_depth: Option<usize>,
    pub m: usize,
}

struct Frame {
    start: usize,
    end: usize,
    depth: usize,
    right_of: Option<usize>,
}

struct Best {
    column: u32,
    threshold: f64,
    impurity: f64,
}

struct Scratch {
    weight: Vec<u32>,
    mark: Vec<u32>,
    stamp: u32,
    entries: Vec<(f64, u64, u64)>,
}

impl Builder<'_> {
    pub fn build(&self, rng: &mut StreamRng) -> Tree {
        let n = self.y.len();
        let weight = bootstrap_counts(n, rng);
        let mut rows: Vec<u32> = (0..n as u32).filter(|&r| weight[r as usize] > 0).collect();
        let mut s = Scratch {
            weight,
            mark: vec![u32::MAX; n],
            stamp: 0,
            entries: Vec::new(),
        };
        let mut nodes = Vec::new();
        let mut stack = vec![Frame {
            start: 0,
            end: rows.len(),
            depth: 0,
            right_of: None,
        }];
        while let Some(f) = stack.pop() {
            let me = nodes.len();
            if let Some(parent) = f.right_of {
                if let Node::Split { right, .. } = &mut nodes[parent] {
                    *right = me as u32;
                }
            }
            let span = &rows[f.start..f.end];
            let (w, p) = span.iter().fold((0u64, 0u64), |(w, p), &r| {
                let k = u64::from(s.weight[r as usize]);
                (w + k, p + k * u64::from(self.y[r as usize]))
            });
            let stop = p == 0
                || p == w
                || self.max_depth.is_some_and(|d| f.depth >= d)
                || w < 2 * self.min_leaf;
            let best = if stop {
                None
            } else {
                self.best_split(span, w, p, rng, &mut s)
            };
            let Some(best) = best else {
                nodes.push(Node::Leaf {
                    value: p as f64 / w as f64,
                });
                continue;
            };
            nodes.push(Node::Split {
                column: best.column,
                threshold: best.threshold,
                right: 0,
            });
            let (left, right): (Vec<u32>, Vec<u32>) = rows[f.start..f.end]
                .iter()
                .partition(|&&r| self.x.get(r as usize, best.column) <= best.threshold);
            let mid = f.start + left.len();
            rows[f.start..mid].copy_from_slice(&left);
            rows[mid..f.end].copy_from_slice(&right);
            stack.push(Frame {
                start: mid,
                end: f.end,
                depth: f.depth + 1,
                right_of: Some(me),
            });
            stack.push(Frame {
                start: f.start,
                end: mid,
                depth: f.depth + 1,
                right_of: None,
            });
        }
        Tree { nodes }
    }

    fn best_split(
        &self,
        span: &[u32],
        w: u64,
        p: u64,
        rng: &mut StreamRng,
        s: &mut Scratch,
    ) -> Option<Best> {
        s.stamp += 1;
        for &r in span {
            s.mark[r as usize] = s.stamp;
        }
        let n_cols = self.csc.len();
        let candidates = index::sample(rng, n_cols, self.m.min(n_cols));
        let mut best: Option<Best> = None;
        for c in candidates.iter() {
            s.entries.clear();
            let col = &self.csc[c];
            // Scan the column or look the node's rows up, whichever is cheaper.
            if col.len() <= 4 * span.len() {
                for &(r, v) in col {
                    if s.mark[r as usize] == s.stamp {
                        let k = u64::from(s.weight[r as usize]);
                        s.entries.push((v, k, k * u64::from(self.y[r as usize])));
                    }
                }
            } else {
                for &r in span {
                    let v = self.x.get(r as usize, c as u32);
                    if v != 0.0 {
                        let k = u64::from(s.weight[r as usize]);
                        s.entries.push((v, k, k * u64::from(self.y[r as usize])));
                    }
                }
            }
            if s.entries.is_empty() {
                continue;
            }
            let (nw, np) = s
                .entries
                .iter()
                .fold((0, 0), |(a, b), e| (a + e.1, b + e.2));
            if nw < w {
                s.entries.push((0.0, w - nw, p - np));
            }
            s.entries.sort_by(|a, b| a.0.total_cmp(&b.0));

            let (mut wl, mut pl) = (0u64, 0u64);
            let mut i = 0;
            let len = s.entries.len();
            while i < len {
                let v = s.entries[i].0;
                while i < len && s.entries[i].0 == v {
                    wl += s.entries[i].1;
                    pl += s.entries[i].2;
                    i += 1;
                }
                if i == len {
                    break;
                }
                let wr = w - wl;
                if wl < self.min_leaf || wr < self.min_leaf {
                    continue;
                }
                let impurity = wl as f64 * gini(wl, pl) + wr as f64 * gini(wr, p - pl);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let next = s.entries[i].0;
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Best {
                        column: c as u32,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
