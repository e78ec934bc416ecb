// SPDX-License-Identifier: MIT OR Apache-2.0

//! Offline change-point estimation from a leaf trajectory.
//!
//! For `t` in `[eps, 1]` the statistic `D_n(t) = (1 - t) |before(t) - after(t)|`
//! compares the average leaf proportion over sizes in `(eps n, t n]` with the
//! average over `(t n, n]`. Its population limit `D(t)` is flat up to the change
//! point and strictly decreasing after it, so the estimate is the right edge of
//! the set where `D_n` is within a threshold of its maximum.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::leaves::{LeafLimitCurve, LeafTrajectory};
use crate::math::{abs, adaptive_simpson, floor, ln, sqrt};

const STEP_SLACK: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-10;

/// Where `D_n` is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Grid {
    /// `t = m / n` for every `m` in `(eps n, n)`, plus the endpoint `t = 1`.
    #[default]
    EveryStep,
    /// Explicit time points in `(eps, 1]`.
    Points(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub grid: Grid,
    /// Width of the near-max set; `None` means `log(n) / sqrt(n)`.
    pub near_max_threshold: Option<f64>,
    /// Minimal `D_n*` to declare a change; `None` means `2 log(n) / sqrt(n)`.
    pub detection_floor: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            grid: Grid::EveryStep,
            near_max_threshold: None,
            detection_floor: None,
        }
    }
}

impl EstimatorConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig("epsilon must lie in (0, 1)"));
        }
        if self.near_max_threshold.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("near-max threshold must be positive"));
        }
        if self.detection_floor.is_some_and(|f| !(f >= 0.0)) {
            return Err(Error::InvalidConfig("detection floor must be non-negative"));
        }
        if let Grid::Points(ts) = &self.grid {
            if ts.iter().any(|&t| !(t > self.epsilon && t <= 1.0)) {
                return Err(Error::InvalidConfig("grid points must lie in (epsilon, 1]"));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, n: usize) -> f64 {
        self.near_max_threshold.unwrap_or_else(|| default_threshold(n))
    }

    pub fn floor(&self, n: usize) -> f64 {
        self.detection_floor.unwrap_or_else(|| 2.0 * default_threshold(n))
    }
}

/// `log(n) / sqrt(n)`.
pub fn default_threshold(n: usize) -> f64 {
    let n = n as f64;
    ln(n) / sqrt(n)
}

/// Prefix sums of the leaf proportions `p(m) = N(m) / m`.
#[derive(Debug, Clone)]
pub struct LeafAverages {
    // prefix[m] = sum_{i=1}^{m} p(i)
    prefix: Vec<f64>,
}

impl LeafAverages {
    pub fn new(trajectory: &LeafTrajectory) -> Self {
        let n = trajectory.n();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for m in 1..=n {
            acc += trajectory.proportion(m);
            prefix.push(acc);
        }
        Self { prefix }
    }

    /// From proportions `p(1), ..., p(n)`.
    pub fn from_proportions(props: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(props.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for p in props {
            acc += p;
            prefix.push(acc);
        }
        Self { prefix }
    }

    pub fn n(&self) -> usize {
        self.prefix.len() - 1
    }

    /// Average proportion over sizes in `(eps n, t n]` and over `(t n, n]`.
    pub fn split_means(&self, t: f64, eps: f64) -> Result<(f64, f64)> {
        if !(eps >= 0.0 && t > eps && t <= 1.0) {
            return Err(Error::TOutOfRange { t, eps });
        }
        let n = self.n();
        self.split_at(step(eps, n), step(t, n)).ok_or(Error::EmptyWindow(t))
    }

    /// Mean of `p(m)` over `lo < m <= hi`.
    fn window_mean(&self, lo: usize, hi: usize) -> f64 {
        (self.prefix[hi] - self.prefix[lo]) / (hi - lo) as f64
    }

    /// `(before, after)` averages split at size `m_t`, starting after `m_eps`.
    fn split_at(&self, m_eps: usize, m_t: usize) -> Option<(f64, f64)> {
        let n = self.n();
        (m_t > m_eps && m_t < n).then(|| (self.window_mean(m_eps, m_t), self.window_mean(m_t, n)))
    }
}

fn step(t: f64, n: usize) -> usize {
    floor(t * n as f64 + STEP_SLACK) as usize
}

/// Average leaf proportion over sizes in `(eps n, t n]` and over `(t n, n]`.
pub fn split_means(trajectory: &LeafTrajectory, t: f64, eps: f64) -> Result<(f64, f64)> {
    LeafAverages::new(trajectory).split_means(t, eps)
}

/// `(t, D_n(t))` over the configured grid.
pub fn dn_curve(trajectory: &LeafTrajectory, config: &EstimatorConfig) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let avg = LeafAverages::new(trajectory);
    dn_curve_from(&avg, config)
}

pub fn dn_curve_from(avg: &LeafAverages, config: &EstimatorConfig) -> Result<Vec<(f64, f64)>> {
    let n = avg.n();
    if n < 2 {
        return Err(Error::MissingTrajectory);
    }
    let nf = n as f64;
    let m_eps = step(config.epsilon, n);
    let dn = |m_t: usize| -> Result<f64> {
        if m_t >= n {
            return Ok(0.0);
        }
        let (before, after) = avg.split_at(m_eps, m_t).ok_or(Error::EmptyWindow(m_t as f64 / nf))?;
        Ok((1.0 - m_t as f64 / nf) * abs(before - after))
    };
    match &config.grid {
        Grid::EveryStep => {
            let mut out = Vec::with_capacity(n - m_eps);
            for m in m_eps + 1..n {
                out.push((m as f64 / nf, dn(m)?));
            }
            out.push((1.0, 0.0));
            Ok(out)
        }
        Grid::Points(ts) => ts.iter().map(|&t| Ok((t, dn(step(t, n))?))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub dn_curve: Vec<(f64, f64)>,
    pub dn_star: f64,
    /// First grid point attaining `D_n*`.
    pub argmax: f64,
    /// Smallest and largest `t` of the near-max set.
    pub near_max: (f64, f64),
    /// Right edge of the near-max set when a change was detected.
    pub gamma_hat: Option<f64>,
    pub detected: bool,
    pub epsilon: f64,
    pub threshold: f64,
    pub detection_floor: f64,
}

/// Near-max set and estimate from a computed curve.
pub fn gamma_hat(curve: Vec<(f64, f64)>, config: &EstimatorConfig, n: usize) -> Result<EstimateReport> {
    config.validate()?;
    let (argmax, dn_star) = curve
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, (t, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((t, d)),
        })
        .ok_or(Error::EmptyCurve)?;
    let threshold = config.threshold(n);
    let floor = config.floor(n);
    let (lo, hi) = curve
        .iter()
        .filter(|(_, d)| abs(d - dn_star) <= threshold)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let detected = dn_star > floor;
    Ok(EstimateReport {
        dn_curve: curve,
        dn_star,
        argmax,
        near_max: (lo, hi),
        gamma_hat: detected.then_some(hi),
        detected,
        epsilon: config.epsilon,
        threshold,
        detection_floor: floor,
    })
}

/// Curve plus estimate in one call.
pub fn estimate(trajectory: &LeafTrajectory, config: &EstimatorConfig) -> Result<EstimateReport> {
    let curve = dn_curve(trajectory, config)?;
    gamma_hat(curve, config, trajectory.n())
}

/// `H[s, t]`: mean of the limiting leaf proportion over `[s, t]`.
pub fn limit_h(s: f64, t: f64, curve: &LeafLimitCurve) -> Result<f64> {
    if !(s >= 0.0 && s < t && t <= 1.0) {
        return Err(Error::BadInterval { s, t });
    }
    let gamma = curve.gamma();
    let p = |u: f64| curve.p_inf_unchecked(u);
    let flat = (gamma.min(t) - s).max(0.0) * p(0.0);
    let lo = s.max(gamma);
    let bent = if t > lo { adaptive_simpson(&p, lo, t, QUAD_TOL) } else { 0.0 };
    Ok((flat + bent) / (t - s))
}

/// Population limit `D(t)` of `D_n(t)` for truncation `eps < gamma`.
pub fn limit_d(t: f64, curve: &LeafLimitCurve, eps: f64) -> Result<f64> {
    let gamma = curve.gamma();
    if !(eps > 0.0 && eps < gamma) {
        return Err(Error::BadInterval { s: eps, t: gamma });
    }
    if !(t >= eps && t <= 1.0) {
        return Err(Error::BadInterval { s: eps, t });
    }
    if t <= gamma {
        let p_gamma = curve.p_inf_unchecked(gamma);
        Ok((1.0 - gamma) * abs(p_gamma - limit_h(gamma, 1.0, curve)?))
    } else if t >= 1.0 {
        Ok(0.0)
    } else {
        Ok((1.0 - eps) * abs(limit_h(eps, t, curve)? - limit_h(eps, 1.0, curve)?))
    }
}

/// `D(t)` at every point of a non-decreasing grid in `[eps, 1]`, integrating
/// incrementally along the grid.
pub fn limit_d_curve(ts: &[f64], curve: &LeafLimitCurve, eps: f64) -> Result<Vec<f64>> {
    let gamma = curve.gamma();
    if !(eps > 0.0 && eps < gamma) {
        return Err(Error::BadInterval { s: eps, t: gamma });
    }
    if let Some(&t) = ts.iter().find(|&&t| !(t >= eps && t <= 1.0)) {
        return Err(Error::BadInterval { s: eps, t });
    }
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("grid must be non-decreasing"));
    }
    let p = |u: f64| curve.p_inf_unchecked(u);
    let p_gamma = p(gamma);
    let h_all = limit_h(eps, 1.0, curve)?;
    let plateau = (1.0 - gamma) * abs(p_gamma - limit_h(gamma, 1.0, curve)?);
    let flat = (gamma - eps) * p_gamma;
    let mut reached = gamma;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let d = if t <= gamma {
            plateau
        } else if t >= 1.0 {
            0.0
        } else {
            if t > reached {
                integral += adaptive_simpson(&p, reached, t, QUAD_TOL);
                reached = t;
            }
            (1.0 - eps) * abs((flat + integral) / (t - eps) - h_all)
        };
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaves::LeafConvention;
    use alloc::vec;

    fn constant(n: usize) -> LeafTrajectory {
        let counts: Vec<u64> = (0..=n as u64).map(|m| m / 2).collect();
        LeafTrajectory::from_counts_unchecked(counts, LeafConvention::IncludeRoot)
    }

    #[test]
    fn constant_proportions_give_equal_means() {
        let avg = LeafAverages::from_proportions(&[0.25; 400]);
        for t in [0.2, 0.5, 0.9] {
            let (b, a) = avg.split_means(t, 0.1).unwrap();
            assert!(abs(b - 0.25) < 1e-15 && abs(a - 0.25) < 1e-15);
        }
    }

    #[test]
    fn step_proportions() {
        let n = 1000;
        let props: Vec<f64> = (1..=n).map(|m| if m <= n / 2 { 0.5 } else { 0.6 }).collect();
        let (b, a) = LeafAverages::from_proportions(&props).split_means(0.5, 0.0).unwrap();
        assert!(abs(b - 0.5) < 1e-12 && abs(a - 0.6) < 1e-12);
    }

    #[test]
    fn window_errors() {
        let traj = constant(100);
        assert!(matches!(split_means(&traj, 0.05, 0.1), Err(Error::TOutOfRange { .. })));
        assert!(matches!(split_means(&traj, 1.0, 0.1), Err(Error::EmptyWindow(_))));
        assert!(matches!(split_means(&traj, 0.101, 0.1), Err(Error::EmptyWindow(_))));
    }

    #[test]
    fn flat_proportions_detect_nothing() {
        let avg = LeafAverages::from_proportions(&[0.4; 10_000]);
        let cfg = EstimatorConfig::default();
        let report = gamma_hat(dn_curve_from(&avg, &cfg).unwrap(), &cfg, avg.n()).unwrap();
        assert!(report.dn_curve.iter().all(|&(_, d)| d < 1e-12));
        assert!(!report.detected);
        assert_eq!(report.gamma_hat, None);
        assert_eq!(report.near_max.1, 1.0);
    }

    #[test]
    fn shifting_proportions_leaves_dn_unchanged() {
        let n = 5000;
        let props: Vec<f64> = (1..=n).map(|m| 0.3 + 0.1 * libm::sin(m as f64 / 300.0)).collect();
        let a = LeafAverages::from_proportions(&props);
        let shifted = a.prefix.iter().enumerate().map(|(m, s)| s + 0.05 * m as f64).collect();
        let b = LeafAverages { prefix: shifted };
        let cfg = EstimatorConfig::default();
        let ca = dn_curve_from(&a, &cfg).unwrap();
        let cb = dn_curve_from(&b, &cfg).unwrap();
        for (x, y) in ca.iter().zip(&cb) {
            assert!(abs(x.1 - y.1) < 1e-12);
        }
    }

    #[test]
    fn estimate_is_right_edge_of_near_max_set() {
        let n = 10_000;
        let props: Vec<f64> = (1..=n).map(|m| if m <= 3000 { 0.4 } else { 0.9 }).collect();
        let avg = LeafAverages::from_proportions(&props);
        let cfg = EstimatorConfig {
            near_max_threshold: Some(1e-3),
            detection_floor: Some(0.01),
            ..EstimatorConfig::default()
        };
        let r = gamma_hat(dn_curve_from(&avg, &cfg).unwrap(), &cfg, n).unwrap();
        assert!(r.detected);
        let hi = r
            .dn_curve
            .iter()
            .filter(|(_, d)| abs(d - r.dn_star) <= 1e-3)
            .map(|p| p.0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.gamma_hat, Some(hi));
        assert!(abs(hi - 0.3) < 0.01);
        assert_eq!(gamma_hat(vec![], &cfg, n).err(), Some(Error::EmptyCurve));
    }

    #[test]
    fn limit_d_shape() {
        let curve = LeafLimitCurve::from_params(6.0, 1.0, 0.5);
        let eps = 0.1;
        let plateau = limit_d(eps, &curve, eps).unwrap();
        for t in [0.2, 0.3, 0.45, 0.5] {
            assert!(abs(limit_d(t, &curve, eps).unwrap() - plateau) < 1e-14);
        }
        let mut prev = plateau;
        for i in 1..=100 {
            let t = 0.5 + 0.5 * i as f64 / 100.0;
            let d = limit_d(t, &curve, eps).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert_eq!(limit_d(1.0, &curve, eps).unwrap(), 0.0);
        assert!(limit_d(1.0 - 1e-6, &curve, eps).unwrap() < 1e-6);
        let h = 1e-4;
        let slope = (limit_d(0.5 + h, &curve, eps).unwrap() - plateau) / h;
        assert!(slope < 0.0);
    }

    #[test]
    fn limit_d_vanishes_without_change() {
        let curve = LeafLimitCurve::from_params(2.0, 2.0, 0.5);
        for t in [0.1, 0.4, 0.7, 0.99] {
            assert!(limit_d(t, &curve, 0.1).unwrap() < 1e-12);
        }
    }

    #[test]
    fn limit_d_agrees_with_split_mean_definition() {
        // (1 - t)|H[eps, t] - H[t, 1]| written without the algebraic shortcut
        let curve = LeafLimitCurve::from_params(6.0, 1.0, 0.5);
        let eps = 0.1;
        for t in [0.2, 0.5, 0.6, 0.8, 0.95] {
            let generic = (1.0 - t) * abs(limit_h(eps, t, &curve).unwrap() - limit_h(t, 1.0, &curve).unwrap());
            assert!(abs(generic - limit_d(t, &curve, eps).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn incremental_curve_matches_pointwise() {
        let curve = LeafLimitCurve::from_params(6.0, 1.0, 0.5);
        let ts: Vec<f64> = (0..=900).map(|i| 0.1 + i as f64 / 1000.0).collect();
        let fast = limit_d_curve(&ts, &curve, 0.1).unwrap();
        for (t, d) in ts.iter().zip(&fast) {
            assert!(abs(d - limit_d(*t, &curve, 0.1).unwrap()) < 1e-9);
        }
        assert!(limit_d_curve(&[0.5, 0.4], &curve, 0.1).is_err());
        assert!(limit_d_curve(&[0.05], &curve, 0.1).is_err());
    }

    #[test]
    fn limit_h_of_constant_section() {
        let curve = LeafLimitCurve::from_params(6.0, 1.0, 0.5);
        assert!(abs(limit_h(0.1, 0.4, &curve).unwrap() - 8.0 / 15.0) < 1e-15);
        assert!(limit_h(0.5, 0.5, &curve).is_err());
    }
}
