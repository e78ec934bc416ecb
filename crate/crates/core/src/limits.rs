// SPDX-License-Identifier: MIT OR Apache-2.0

//! Limiting degree laws.
//!
//! Without a change point the degree of a uniform vertex converges to
//! `p_alpha(k) = (2 + alpha) prod_{j<k}(j + alpha) / prod_{j=3}^{k+2}(j + 2 alpha)`.
//! With change points the limit `D_theta` is a mixture over the epoch in which
//! the vertex was born: vertices born before the first change point carry a
//! `p_alpha` degree into the later epochs, younger vertices start from degree
//! one with a truncated-exponential age. In every epoch a vertex of degree `d`
//! gains children as a pure-birth process with rates `d + beta, d + 1 + beta, ...`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::math::{exp, expm1, floor, lgamma, ln, log1p};
use crate::schedule::ChangePointSchedule;
use crate::stats::least_squares;

/// `p_alpha(k)`, evaluated through log-gamma. `alpha = 0` is admitted.
pub fn p_alpha_pmf(alpha: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    Ok(exp(ln_p_alpha(alpha, k)))
}

fn ln_p_alpha(alpha: f64, k: u64) -> f64 {
    let k = k as f64;
    ln(2.0 + alpha) + lgamma(k + alpha) - lgamma(1.0 + alpha) - lgamma(k + 3.0 + 2.0 * alpha)
        + lgamma(3.0 + 2.0 * alpha)
}

/// `P(D_alpha >= k) = p_alpha(k) (k + 2 + 2 alpha) / (2 + alpha)`.
///
/// Telescopes against the pmf ratio `p(k+1)/p(k) = (k + alpha)/(k + 3 + 2 alpha)`.
pub fn ccdf_alpha(alpha: f64, k: u64) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    exp(ln_p_alpha(alpha, k)) * (k as f64 + 2.0 + 2.0 * alpha) / (2.0 + alpha)
}

/// Inverse-CDF sampler for `D_alpha` with a cached table and an exact
/// closed-form tail beyond it.
#[derive(Debug, Clone)]
pub struct AlphaDegreeSampler {
    alpha: f64,
    // ccdf[k] = P(D >= k) for k in 0..=table_max + 1
    ccdf: Vec<f64>,
}

const TABLE_TAIL: f64 = 1e-9;
const TABLE_MAX: usize = 1 << 17;

impl AlphaDegreeSampler {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::NonPositiveParameter { name: "alpha", value: alpha });
        }
        let mut ccdf = Vec::with_capacity(64);
        ccdf.push(1.0);
        ccdf.push(1.0);
        let mut k = 1u64;
        while ccdf[k as usize] > TABLE_TAIL && (k as usize) < TABLE_MAX {
            k += 1;
            ccdf.push(ccdf_alpha(alpha, k));
        }
        Ok(Self { alpha, ccdf })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `D = k` iff `P(D >= k + 1) < u <= P(D >= k)`, `u` uniform on (0, 1].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = 1.0 - rng.random::<f64>();
        self.quantile(u)
    }

    pub(crate) fn quantile(&self, u: f64) -> u64 {
        let last = self.ccdf.len() - 1;
        if u > self.ccdf[last] {
            // first k with ccdf[k] < u, minus one
            let idx = self.ccdf.partition_point(|&c| c >= u);
            return (idx - 1) as u64;
        }
        let mut lo = last as u64;
        let mut hi = lo * 2;
        while ccdf_alpha(self.alpha, hi) >= u {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi == u64::MAX {
                return hi;
            }
        }
        // ccdf(lo) >= u > ccdf(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ccdf_alpha(self.alpha, mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// How pure-birth counts are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointCountMethod {
    /// Successive exponential waits; always exact.
    #[default]
    ExponentialWaits,
    /// Gamma-Poisson mixture for the negative-binomial marginal.
    NegativeBinomial,
}

/// Number of points of the process started at rank `j` (waits with rates
/// `j + beta, j + 1 + beta, ...`) that fall in `[0, t]`.
pub fn sample_point_count<R: Rng + ?Sized>(j: u64, beta: f64, t: f64, rng: &mut R) -> u64 {
    let mut elapsed = 0.0;
    let mut count = 0u64;
    loop {
        let e: f64 = Exp1.sample(rng);
        elapsed += e / ((j + count) as f64 + beta);
        if elapsed > t {
            return count;
        }
        count += 1;
    }
}

/// Same law as [`sample_point_count`], drawn as `Poisson(Gamma(j + beta, e^t - 1))`.
pub fn sample_point_count_nb<R: Rng + ?Sized>(j: u64, beta: f64, t: f64, rng: &mut R) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let shape = j as f64 + beta;
    let scale = expm1(t);
    let lambda: f64 = Gamma::new(shape, scale)
        .expect("positive shape and scale")
        .sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(lambda).expect("positive rate").sample(rng);
    draw as u64
}

/// Negative-binomial pmf with size `r` and success probability `e^{-t}`:
/// the count law of a pure-birth process started at total rate `r`.
pub fn point_count_pmf(r: f64, t: f64, k: u64) -> f64 {
    let kf = k as f64;
    let log_q = ln(-expm1(-t));
    exp(lgamma(kf + r) - lgamma(r) - lgamma(kf + 1.0) - r * t + kf * log_q)
}

/// `G_a(s) = (1 - e^{-rate s}) / (1 - e^{-rate a})` on `[0, a]`.
pub fn age_cdf(a: f64, rate: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= a {
        1.0
    } else {
        expm1(-rate * s) / expm1(-rate * a)
    }
}

/// Inverse-CDF draw of a truncated exponential age on `[0, a]`.
pub fn sample_age<R: Rng + ?Sized>(a: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveA(a));
    }
    let u: f64 = rng.random();
    let s = -log1p(u * expm1(-rate * a)) / rate;
    Ok(s.clamp(0.0, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Born before the first change point.
    BeforeChange,
    /// Born after a change point.
    AfterChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitDegreeSample {
    pub value: u64,
    pub branch: Branch,
    /// Birth epoch; 0 is the pre-change epoch.
    pub epoch: usize,
}

/// One post-birth exposure window: offset and duration.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Window {
    beta: f64,
    duration: f64,
}

/// Sampler for the change-point limit law. The single change-point law at
/// horizon `t` is the two-epoch case with epoch weights `(gamma/t, 1 - gamma/t)`
/// and window `log(t/gamma)/(2 + beta)`.
#[derive(Debug, Clone)]
pub struct DThetaSampler {
    alpha: AlphaDegreeSampler,
    // cumulative epoch probabilities pi_0, pi_0 + pi_1, ...
    cumulative: Vec<f64>,
    windows: Vec<Window>,
    method: PointCountMethod,
}

impl DThetaSampler {
    /// Single change point law observed at horizon `t` in `(gamma, 1]`.
    pub fn single(schedule: &ChangePointSchedule, t: f64) -> Result<Self> {
        let (gamma, beta) = schedule.single_change_point()?;
        if !(t > gamma && t <= 1.0) {
            return Err(Error::HorizonOutOfRange { t, lo: gamma, hi: 1.0 });
        }
        let window = Window {
            beta,
            duration: ln(t / gamma) / (2.0 + beta),
        };
        Ok(Self {
            alpha: AlphaDegreeSampler::new(schedule.alpha())?,
            cumulative: alloc::vec![gamma / t, 1.0],
            windows: alloc::vec![window],
            method: PointCountMethod::default(),
        })
    }

    /// Law for any number of change points at horizon 1.
    pub fn multi(schedule: &ChangePointSchedule) -> Result<Self> {
        if schedule.segments().is_empty() {
            return Err(Error::NoSegments);
        }
        let pi = epoch_probabilities(schedule);
        let mut cumulative = Vec::with_capacity(pi.len());
        let mut acc = 0.0;
        for p in &pi {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        let windows = schedule
            .segments()
            .iter()
            .zip(window_lengths(schedule))
            .map(|(s, duration)| Window { beta: s.beta, duration })
            .collect();
        Ok(Self {
            alpha: AlphaDegreeSampler::new(schedule.alpha())?,
            cumulative,
            windows,
            method: PointCountMethod::default(),
        })
    }

    pub fn with_method(mut self, method: PointCountMethod) -> Self {
        self.method = method;
        self
    }

    fn count<R: Rng + ?Sized>(&self, j: u64, beta: f64, t: f64, rng: &mut R) -> u64 {
        match self.method {
            PointCountMethod::ExponentialWaits => sample_point_count(j, beta, t, rng),
            PointCountMethod::NegativeBinomial => sample_point_count_nb(j, beta, t, rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LimitDegreeSample {
        let u: f64 = rng.random();
        let epoch = self.cumulative.partition_point(|&c| c <= u).min(self.windows.len());
        let mut degree;
        let first_full;
        if epoch == 0 {
            degree = self.alpha.sample(rng);
            first_full = 0;
        } else {
            let w = self.windows[epoch - 1];
            let age = sample_age(w.duration, 2.0 + w.beta, rng).unwrap_or(0.0);
            degree = 1 + self.count(1, w.beta, age, rng);
            first_full = epoch;
        }
        for w in &self.windows[first_full..] {
            degree += self.count(degree, w.beta, w.duration, rng);
        }
        LimitDegreeSample {
            value: degree,
            branch: if epoch == 0 {
                Branch::BeforeChange
            } else {
                Branch::AfterChange
            },
            epoch,
        }
    }
}

/// `pi_j = gamma_{j+1} - gamma_j` with `gamma_0 = 0` and `gamma_{k+1} = 1`.
pub fn epoch_probabilities(schedule: &ChangePointSchedule) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(schedule.segments().len() + 2);
    bounds.push(0.0);
    bounds.extend(schedule.segments().iter().map(|s| s.gamma));
    bounds.push(1.0);
    bounds.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `a_j = log(gamma_{j+1} / gamma_j) / (2 + beta_j)` for `j = 1..=k`.
pub fn window_lengths(schedule: &ChangePointSchedule) -> Vec<f64> {
    let segs = schedule.segments();
    segs.iter()
        .enumerate()
        .map(|(i, s)| {
            let next = segs.get(i + 1).map_or(1.0, |n| n.gamma);
            ln(next / s.gamma) / (2.0 + s.beta)
        })
        .collect()
}

/// `out[k] = P(D >= k)` from counts indexed by value.
pub fn ccdf_from_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let mut out = alloc::vec![0.0; counts.len() + 1];
    let mut acc = 0u64;
    for k in (0..counts.len()).rev() {
        acc += counts[k];
        out[k] = acc as f64 / total as f64;
    }
    out
}

/// `out[k] = P(D >= k)` from a pmf indexed by value.
pub fn ccdf_from_pmf(pmf: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; pmf.len() + 1];
    let mut acc = 0.0;
    for k in (0..pmf.len()).rev() {
        acc += pmf[k];
        out[k] = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Least-squares slope of `log P(D >= k)` against `log k`.
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// Slopes of the lower and upper halves of the window.
    pub lower_slope: f64,
    pub upper_slope: f64,
    /// The upper half is markedly steeper than the lower half, which points
    /// to a lighter-than-power-law tail.
    pub light_tail: bool,
}

/// Minimum number of mass points inside the fit window.
pub const MIN_TAIL_POINTS: usize = 30;

/// Fits the log-log CCDF slope over `k_lo..=k_hi`.
pub fn tail_exponent(ccdf: &[f64], k_lo: usize, k_hi: usize) -> Result<TailFit> {
    if k_lo == 0 || k_lo >= k_hi {
        return Err(Error::InsufficientSupport { found: 0, needed: MIN_TAIL_POINTS });
    }
    let at = |k: usize| ccdf.get(k).copied().unwrap_or(0.0);
    let points: Vec<(f64, f64)> = (k_lo..=k_hi)
        .filter(|&k| at(k) > 0.0)
        .map(|k| (ln(k as f64), ln(at(k))))
        .collect();
    let mass_points = (k_lo..=k_hi).filter(|&k| at(k) > at(k + 1)).count();
    if mass_points < MIN_TAIL_POINTS || points.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientSupport {
            found: mass_points.min(points.len()),
            needed: MIN_TAIL_POINTS,
        });
    }
    let fit = |pts: &[(f64, f64)]| {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        least_squares(&xs, &ys)
    };
    let (slope, intercept) = fit(&points);
    let mid = ln(floor((k_lo + k_hi) as f64 / 2.0));
    let split = points.partition_point(|p| p.0 <= mid);
    let (lower_slope, _) = fit(&points[..split.max(2)]);
    let (upper_slope, _) = fit(&points[split.min(points.len() - 2)..]);
    Ok(TailFit {
        slope,
        intercept,
        points: points.len(),
        lower_slope,
        upper_slope,
        light_tail: upper_slope < 1.5 * lower_slope,
    })
}
