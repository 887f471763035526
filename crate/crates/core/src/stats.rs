//! Order statistics, the Wilcoxon rank-sum test and the thinning bound.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Empirical quantiles by linear interpolation between order statistics:
/// the `p`-quantile sits at 0-based position `p (n - 1)`.
pub fn quantiles(samples: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("quantiles of an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantiles_sorted(&sorted, probs)
}

/// As [`quantiles`], for an already sorted sample.
pub fn quantiles_sorted(sorted: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if sorted.is_empty() {
        return Err(Error::InvalidParameter("quantiles of an empty sample".into()));
    }
    let last = (sorted.len() - 1) as f64;
    probs
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("probability must lie in [0,1], got {p}")));
            }
            let pos = p * last;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            Ok(if frac == 0.0 || lo + 1 >= sorted.len() {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// `(R_x - n1 (N+1)/2) / sd`, negative when `x` tends to be smaller.
    pub w_standardized: f64,
    pub p_two_sided: f64,
    pub rank_sum: f64,
    pub n1: usize,
    pub n2: usize,
    pub tie_groups: usize,
}

/// Two-sided standard normal tail probability `2 (1 - Φ(|w|))`.
pub fn two_sided_normal_p(w: f64) -> f64 {
    erfc(w.abs() / std::f64::consts::SQRT_2)
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j share the average of ranks i+1..=j.
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Wilcoxon rank-sum test with midranks, tie-corrected variance and the
/// normal approximation without continuity correction.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidParameter("both samples must be nonempty".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("samples contain NaN".into()));
    }
    let (n1, n2) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..n1].iter().sum();

    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1f * n2f * (n + 1.0) / 12.0 - n1f * n2f * tie_term / (12.0 * n * (n - 1.0));
    if !(var > 0.0) {
        return Err(Error::DegenerateTest(n1 + n2));
    }
    let w = (rank_sum - n1f * (n + 1.0) / 2.0) / var.sqrt();
    Ok(WilcoxonResult {
        w_standardized: w,
        p_two_sided: two_sided_normal_p(w),
        rank_sum,
        n1,
        n2,
        tie_groups: ties.len(),
    })
}

/// Upper bound on the total variation between the thinned point process
/// and the Poisson measure: `sqrt(3 n p²) + 3 |n p - γ| + 3 n p ‖Q - Q_n‖`.
pub fn thinning_bound(n: usize, p_n: f64, gamma: f64, tv_qn_q: f64) -> Result<f64> {
    if n == 0 || !(p_n > 0.0 && p_n < 1.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid thinning spec n={n}, p_n={p_n}, gamma={gamma}")));
    }
    if !(0.0..=1.0).contains(&tv_qn_q) {
        return Err(Error::InvalidParameter(format!("total variation must lie in [0,1], got {tv_qn_q}")));
    }
    let np = n as f64 * p_n;
    Ok((3.0 * n as f64 * p_n * p_n).sqrt() + 3.0 * (np - gamma).abs() + 3.0 * np * tv_qn_q)
}

/// Poisson probabilities `P(N = k)` for `k = 0..=kmax`.
pub fn poisson_pmf(rate: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut p = (-rate).exp();
    for k in 0..=kmax {
        if k > 0 {
            p *= rate / k as f64;
        }
        out.push(p);
    }
    out
}

/// Total variation between the empirical law of `counts` and Poisson(`rate`),
/// resolving `0..=kmax` individually and lumping the remainder.
pub fn tv_to_poisson(counts: &[usize], rate: f64, kmax: usize) -> f64 {
    let reps = counts.len() as f64;
    let mut hist = vec![0usize; kmax + 2];
    for &c in counts {
        hist[c.min(kmax + 1)] += 1;
    }
    let pmf = poisson_pmf(rate, kmax);
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    let body: f64 = pmf
        .iter()
        .zip(&hist)
        .map(|(p, h)| (*h as f64 / reps - p).abs())
        .sum();
    0.5 * (body + (hist[kmax + 1] as f64 / reps - tail).abs())
}

/// Sum of the per-cell standard deviations of the empirical frequencies,
/// halved: the Monte Carlo scale of [`tv_to_poisson`] at `reps` draws.
pub fn tv_mc_error(rate: f64, kmax: usize, reps: usize) -> f64 {
    let pmf = poisson_pmf(rate, kmax);
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    let r = reps as f64;
    0.5 * pmf
        .iter()
        .chain(std::iter::once(&tail))
        .map(|p| (p * (1.0 - p) / r).sqrt())
        .sum::<f64>()
}
