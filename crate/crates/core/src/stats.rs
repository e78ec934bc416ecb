// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small statistics toolbox shared by tests, ensembles and the harness.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, erfc, pow, sqrt};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    sqrt(variance(xs) / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and N(0, 1).
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let lo = abs(f - i as f64 / n);
            let hi = abs((i + 1) as f64 / n - f);
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Counts of each value, indexed by value.
pub fn value_counts<I: IntoIterator<Item = u64>>(values: I) -> Vec<u64> {
    let mut counts = vec![0u64; 2];
    for v in values {
        let v = v as usize;
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
    }
    counts
}

/// Normalizes counts into a pmf.
pub fn counts_to_pmf(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// `0.5 * sum_{k = lo..=hi} |p_k - q_k|`; missing entries count as zero.
pub fn total_variation(p: &[f64], q: &[f64], lo: usize, hi: usize) -> f64 {
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    0.5 * (lo..=hi).map(|k| abs(at(p, k) - at(q, k))).sum::<f64>()
}

/// Pearson statistic of `observed` against `probs` over bins `0..probs.len()`.
/// Bins with expected count below 5, and everything beyond `probs`, are pooled
/// into one remainder bin. Returns (statistic, bins used).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> (f64, usize) {
    const MIN_EXPECTED: f64 = 5.0;
    let total = observed.iter().sum::<u64>() as f64;
    let mut stat = 0.0;
    let mut bins = 0;
    let mut seen = 0.0;
    let mut mass = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        let e = p * total;
        if e < MIN_EXPECTED {
            continue;
        }
        let o = observed.get(k).copied().unwrap_or(0) as f64;
        seen += o;
        mass += p;
        stat += (o - e) * (o - e) / e;
        bins += 1;
    }
    let rest_o = total - seen;
    let rest_e = (1.0 - mass).max(0.0) * total;
    if rest_e > 0.0 {
        stat += (rest_o - rest_e) * (rest_o - rest_e) / rest_e;
        bins += 1;
    } else if rest_o > 0.0 {
        stat = f64::INFINITY;
    }
    (stat, bins)
}

/// Upper `0.999` quantile of chi-square with `df` degrees of freedom
/// (Wilson-Hilferty approximation).
pub fn chi_square_critical_999(df: usize) -> f64 {
    const Z_999: f64 = 3.090_232;
    let k = df as f64;
    let h = 2.0 / (9.0 * k);
    k * pow(1.0 - h + Z_999 * sqrt(h), 3.0)
}

/// Two-sample Pearson statistic on bins `0..bins`, lumping the rest into a
/// final bin. Returns (statistic, degrees of freedom).
pub fn chi_square_two_sample(a: &[u64], b: &[u64], bins: usize) -> (f64, usize) {
    let ta: u64 = a.iter().sum();
    let tb: u64 = b.iter().sum();
    let (ta, tb) = (ta as f64, tb as f64);
    let at = |v: &[u64], k: usize| v.get(k).copied().unwrap_or(0) as f64;
    let mut cells: Vec<(f64, f64)> = (0..bins).map(|k| (at(a, k), at(b, k))).collect();
    let rest_a = ta - cells.iter().map(|c| c.0).sum::<f64>();
    let rest_b = tb - cells.iter().map(|c| c.1).sum::<f64>();
    cells.push((rest_a, rest_b));
    let mut stat = 0.0;
    let mut used = 0;
    for (x, y) in cells {
        if x + y == 0.0 {
            continue;
        }
        used += 1;
        let pooled = (x + y) / (ta + tb);
        let ex = pooled * ta;
        let ey = pooled * tb;
        stat += (x - ex) * (x - ex) / ex + (y - ey) * (y - ey) / ey;
    }
    (stat, used.max(1) - 1)
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
