// SPDX-License-Identifier: MIT OR Apache-2.0

//! Leaf counts: trajectories, the limiting leaf proportion, exact expected
//! counts, and the scale functions of the leaf-count fluctuation limit.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{adaptive_simpson, pow, sqrt};
use crate::schedule::{ChangePointSchedule, SegmentCursor};

/// Whether a root of total degree 1 counts as a leaf.
///
/// The expectation recursion starts from one leaf in the two-vertex tree,
/// which matches [`ExcludeRoot`](Self::ExcludeRoot). Both conventions differ
/// by at most one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafConvention {
    #[default]
    IncludeRoot,
    ExcludeRoot,
}

/// Leaf counts `N(m)` of the trees `T_1, ..., T_n` of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafTrajectory {
    // counts[m] for m in 0..=n; counts[0] = counts[1] = 0
    counts: Vec<u64>,
    convention: LeafConvention,
}

impl LeafTrajectory {
    /// `counts[i]` is the leaf count of the tree with `i + 1` vertices.
    pub fn from_counts(counts: &[u64], convention: LeafConvention) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::MissingTrajectory);
        }
        if counts[0] != 0 {
            return Err(Error::InvalidConfig("a single vertex has no leaves"));
        }
        // the step 1 -> 2 may create two leaves when the root is counted
        if counts.get(1).is_some_and(|&c| c == 0 || c > 2) {
            return Err(Error::InvalidConfig("the two-vertex tree has one or two leaves"));
        }
        for (i, w) in counts.windows(2).enumerate().skip(1) {
            let m = i + 2;
            if w[1] > m as u64 || w[1].abs_diff(w[0]) > 1 {
                return Err(Error::InvalidConfig("leaf counts must change by at most one per step"));
            }
        }
        let mut c = Vec::with_capacity(counts.len() + 1);
        c.push(0);
        c.extend_from_slice(counts);
        Ok(Self::from_counts_unchecked(c, convention))
    }

    pub(crate) fn from_counts_unchecked(counts: Vec<u64>, convention: LeafConvention) -> Self {
        Self { counts, convention }
    }

    pub fn n(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn convention(&self) -> LeafConvention {
        self.convention
    }

    /// `N(m)` for `1 <= m <= n`.
    pub fn count(&self, m: usize) -> u64 {
        self.counts[m]
    }

    /// `N(m) / m`.
    pub fn proportion(&self, m: usize) -> f64 {
        self.counts[m] as f64 / m as f64
    }

    /// `N(m)` for `m = 1..=n`.
    pub fn counts(&self) -> &[u64] {
        &self.counts[1..]
    }

    /// Leaf count at real-valued size `x`, linearly interpolated.
    pub fn interpolated(&self, x: f64) -> f64 {
        let n = self.n();
        let x = x.clamp(1.0, n as f64);
        let lo = crate::math::floor(x) as usize;
        if lo >= n {
            return self.counts[n] as f64;
        }
        let frac = x - lo as f64;
        self.counts[lo] as f64 * (1.0 - frac) + self.counts[lo + 1] as f64 * frac
    }
}

/// `delta_u = (1 + u) / (2 + u)`.
pub fn delta(u: f64) -> f64 {
    (1.0 + u) / (2.0 + u)
}

/// Limiting leaf proportion of the model without a change point.
pub fn leaf_fraction(offset: f64) -> f64 {
    (2.0 + offset) / (3.0 + 2.0 * offset)
}

/// Closed-form limit curves for a single change point `(alpha, beta, gamma)`.
///
/// A schedule without a change point is treated as `gamma = 1`, so every
/// curve stays on its pre-change branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafLimitCurve {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

/// Values of the scale functions at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSuite {
    pub sigma_m2: f64,
    pub sigma2: f64,
    pub mu: f64,
    pub g: f64,
    pub phi: f64,
}

impl VarianceSuite {
    /// `Var G(t) = g(t)^2 phi(t)`.
    pub fn g_variance(&self) -> f64 {
        self.g * self.g * self.phi
    }
}

const PHI_TOL: f64 = 1e-10;

impl LeafLimitCurve {
    pub fn new(schedule: &ChangePointSchedule) -> Result<Self> {
        match schedule.single_change_point() {
            Ok((gamma, beta)) => Ok(Self::from_params(schedule.alpha(), beta, gamma)),
            Err(Error::NoChangePoint) => Ok(Self::from_params(schedule.alpha(), schedule.alpha(), 1.0)),
            Err(e) => Err(e),
        }
    }

    pub fn from_params(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t > 0.0 && t <= 1.0 {
            Ok(())
        } else {
            Err(Error::HorizonOutOfRange { t, lo: 0.0, hi: 1.0 })
        }
    }

    /// `p_t` on `[0, 1]` without range checks.
    pub fn p_inf_unchecked(&self, t: f64) -> f64 {
        let pa = leaf_fraction(self.alpha);
        if t <= self.gamma {
            return pa;
        }
        let b = self.beta;
        let r = self.gamma / t;
        leaf_fraction(b) * (1.0 - pow(r, (3.0 + 2.0 * b) / (2.0 + b)))
            + r * pa * pow(r, (1.0 + b) / (2.0 + b))
    }

    /// Limiting proportion of leaves in the tree of size `tn`.
    pub fn p_inf(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.p_inf_unchecked(t))
    }

    fn sigma2_unchecked(&self, t: f64) -> f64 {
        let (d, p) = if t <= self.gamma {
            (delta(self.alpha), leaf_fraction(self.alpha))
        } else {
            (delta(self.beta), self.p_inf_unchecked(t))
        };
        d * p * (1.0 - d * p)
    }

    fn sigma_m2_unchecked(&self, t: f64) -> f64 {
        let da = delta(self.alpha);
        if t <= self.gamma {
            pow(t, 2.0 * da) * self.sigma2_unchecked(t)
        } else {
            let db = delta(self.beta);
            pow(self.gamma, 2.0 * da) * pow(t / self.gamma, 2.0 * db) * self.sigma2_unchecked(t)
        }
    }

    fn mu_unchecked(&self, t: f64) -> f64 {
        let da = delta(self.alpha);
        if t <= self.gamma {
            -da / pow(t, da + 1.0)
        } else {
            let db = delta(self.beta);
            -db * pow(self.gamma, db - da) / pow(t, db + 1.0)
        }
    }

    fn g_unchecked(&self, t: f64) -> f64 {
        let da = delta(self.alpha);
        if t <= self.gamma {
            1.0 / pow(t, da)
        } else {
            let db = delta(self.beta);
            pow(self.gamma, db - da) / pow(t, db)
        }
    }

    fn phi_unchecked(&self, t: f64) -> f64 {
        let da = delta(self.alpha);
        let pre = |s: f64| {
            let s = s.min(self.gamma);
            self.sigma2_unchecked(s) * pow(s, 2.0 * da + 1.0) / (2.0 * da + 1.0)
        };
        if t <= self.gamma {
            return pre(t);
        }
        let f = |s: f64| self.sigma_m2_unchecked(s);
        pre(self.gamma) + adaptive_simpson(&f, self.gamma, t, PHI_TOL)
    }

    pub fn sigma_m2(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.sigma_m2_unchecked(t))
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.g_unchecked(t))
    }

    /// `sigma_M^2, sigma^2, mu, g, phi` at `t`.
    pub fn variance_suite(&self, t: f64) -> Result<VarianceSuite> {
        self.check_t(t)?;
        Ok(VarianceSuite {
            sigma_m2: self.sigma_m2_unchecked(t),
            sigma2: self.sigma2_unchecked(t),
            mu: self.mu_unchecked(t),
            g: self.g_unchecked(t),
            phi: self.phi_unchecked(t),
        })
    }
}

/// Limiting leaf proportion at horizon `t` for a single change point schedule.
pub fn p_inf(t: f64, schedule: &ChangePointSchedule) -> Result<f64> {
    LeafLimitCurve::new(schedule)?.p_inf(t)
}

/// Weight of the expectation recursion `E N(m+1) = 1 + w_m E N(m)`:
/// `w_m = 1 - (1 + c) / ((2 + c) m - 1)` with `c` the offset used by vertex
/// `m + 1`.
pub fn w_m(m: usize, n: usize, schedule: &ChangePointSchedule) -> Result<f64> {
    if m < 2 || m + 1 > n {
        return Err(Error::IndexOutOfRange {
            index: m,
            lo: 2,
            hi: n.saturating_sub(1),
        });
    }
    let (_, c) = schedule.segment_of(m + 1, n);
    Ok(recursion_weight(m, c))
}

#[inline]
fn recursion_weight(m: usize, offset: f64) -> f64 {
    1.0 - (1.0 + offset) / ((2.0 + offset) * m as f64 - 1.0)
}

/// Exact expected leaf counts (root excluded), indexed by `m` for
/// `m = 0..=n` with entries 0 and 1 equal to zero.
pub fn expected_leaves(n: usize, schedule: &ChangePointSchedule) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::SizeTooSmall { n, min: 2 });
    }
    let mut out = vec![0.0; n + 1];
    out[2] = 1.0;
    let mut cursor = SegmentCursor::new(schedule, n);
    for m in 2..n {
        let c = cursor.offset_at(m + 1);
        out[m + 1] = 1.0 + recursion_weight(m, c) * out[m];
    }
    Ok(out)
}

/// `G_n(t) = (N(nt) - nt p_t) / sqrt(n)` on `grid`, interpolating the leaf
/// count linearly between integer sizes.
pub fn gn_path(trajectory: &LeafTrajectory, curve: &LeafLimitCurve, grid: &[f64]) -> Result<Vec<f64>> {
    let n = trajectory.n();
    if n < 2 {
        return Err(Error::MissingTrajectory);
    }
    let nf = n as f64;
    let root_n = sqrt(nf);
    grid.iter()
        .map(|&t| {
            let p = curve.p_inf(t)?;
            let x = nf * t;
            Ok((trajectory.interpolated(x) - x * p) / root_n)
        })
        .collect()
}
