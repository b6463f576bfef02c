use crate::chisq::chi2_sf;

/// Effective sample sizes up to this use the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub exact: bool,
    /// Every difference was zero; the test carries no evidence.
    pub all_zero: bool,
}

/// Nonzero paired differences ranked by magnitude, average ranks for ties.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRanks {
    /// Ranks doubled so that averaged ranks stay integral.
    pub doubled_ranks: Vec<u64>,
    pub positive: Vec<bool>,
    /// Sizes of tied groups.
    pub ties: Vec<usize>,
}

impl SignedRanks {
    pub fn new(a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len(), "paired samples differ in length");
        let mut d: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| x - y)
            .filter(|v| *v != 0.0)
            .collect();
        d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
        let n = d.len();
        let mut doubled_ranks = vec![0u64; n];
        let mut ties = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && d[j + 1].abs() == d[i].abs() {
                j += 1;
            }
            // Ranks i+1..=j+1 averaged, doubled: (i+1) + (j+1).
            let r = (i + j + 2) as u64;
            doubled_ranks[i..=j].fill(r);
            ties.push(j - i + 1);
            i = j + 1;
        }
        Self {
            doubled_ranks,
            positive: d.iter().map(|v| *v > 0.0).collect(),
            ties,
        }
    }

    pub fn n(&self) -> usize {
        self.doubled_ranks.len()
    }

    /// `(W+, W-)`.
    pub fn sums(&self) -> (f64, f64) {
        let plus: u64 = self
            .doubled_ranks
            .iter()
            .zip(&self.positive)
            .filter(|(_, p)| **p)
            .map(|(r, _)| r)
            .sum();
        let total: u64 = self.doubled_ranks.iter().sum();
        (plus as f64 / 2.0, (total - plus) as f64 / 2.0)
    }
}

fn degenerate() -> WilcoxonResult {
    WilcoxonResult {
        statistic: 0.0,
        p_value: 1.0,
        n_effective: 0,
        exact: true,
        all_zero: true,
    }
}

/// Two-sided signed-rank test; exact for `n_effective <= EXACT_MAX_N`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> WilcoxonResult {
    let sr = SignedRanks::new(a, b);
    if sr.n() <= EXACT_MAX_N {
        wilcoxon_exact(&sr)
    } else {
        wilcoxon_normal(&sr)
    }
}

/// Exact null distribution of `W+` over all `2^n` sign assignments, counted
/// by a subset-sum recursion over the doubled ranks.
pub fn wilcoxon_exact(sr: &SignedRanks) -> WilcoxonResult {
    let n = sr.n();
    if n == 0 {
        return degenerate();
    }
    let total: u64 = sr.doubled_ranks.iter().sum();
    let mut ways = vec![0f64; total as usize + 1];
    ways[0] = 1.0;
    let mut reach = 0usize;
    for &r in &sr.doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if ways[s] != 0.0 {
                ways[s + r] += ways[s];
            }
        }
        reach += r;
    }
    let (plus, minus) = sr.sums();
    let w = plus.min(minus);
    let w2 = (2.0 * w).round() as usize;
    let tail: f64 = ways[..=w2].iter().sum();
    let p = (2.0 * tail / 2f64.powi(n as i32)).min(1.0);
    WilcoxonResult {
        statistic: w,
        p_value: p,
        n_effective: n,
        exact: true,
        all_zero: false,
    }
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal(sr: &SignedRanks) -> WilcoxonResult {
    let n = sr.n();
    if n == 0 {
        return degenerate();
    }
    let nf = n as f64;
    let (plus, minus) = sr.sums();
    let w = plus.min(minus);
    let mean = nf * (nf + 1.0) / 4.0;
    let tie: f64 = sr.ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie;
    let p = if var > 0.0 {
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        chi2_sf(z * z, 1).unwrap_or(1.0)
    } else {
        1.0
    };
    WilcoxonResult {
        statistic: w,
        p_value: p.min(1.0),
        n_effective: n,
        exact: false,
        all_zero: false,
    }
}
