// SPDX-License-Identifier: MIT OR Apache-2.0

//! Continuous-time embedding of the attachment chain.
//!
//! While the tree has `m` vertices and offset `c`, the total birth rate is
//! `(2 + c) m - 1`, so the embedding is the jump chain of [`grow_tree`] with
//! independent holding times `E_m / ((2 + c) m - 1)`. Only the holding times
//! are simulated here; the jump chain is the discrete generator itself.
//!
//! [`grow_tree`]: crate::tree::grow_tree

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::math::{exp, floor, ln, sqrt};
use crate::rng::SeededRng;
use crate::schedule::{ChangePointSchedule, SegmentCursor};
use crate::tree::{grow_tree, GrowingTree, RecordOptions};

/// Salt of the holding-time source forked off a run's [`SeededRng`].
pub const CLOCK_SALT: u64 = 0x636c_6f63_6b;

/// Stopping times `tau_m` at which the embedding reaches `m` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingClock {
    // tau[m] for m in 1..=n; tau[0] unused
    tau: Vec<f64>,
    schedule: ChangePointSchedule,
}

impl EmbeddingClock {
    pub fn n(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn tau(&self, m: usize) -> f64 {
        self.tau[m]
    }

    /// `tau_1, ..., tau_n`.
    pub fn taus(&self) -> &[f64] {
        &self.tau[1..]
    }

    pub fn schedule(&self) -> &ChangePointSchedule {
        &self.schedule
    }
}

/// Draws the stopping times of a run of size `n`.
pub fn holding_times<R: Rng + ?Sized>(
    schedule: &ChangePointSchedule,
    n: usize,
    rng: &mut R,
) -> Result<EmbeddingClock> {
    if n < 2 {
        return Err(Error::SizeTooSmall { n, min: 2 });
    }
    let mut tau = Vec::with_capacity(n + 1);
    tau.extend_from_slice(&[0.0, 0.0]);
    let mut cursor = SegmentCursor::new(schedule, n);
    let mut now = 0.0;
    for m in 1..n {
        let c = cursor.offset_at(m + 1);
        let e: f64 = Exp1.sample(rng);
        now += e / ((2.0 + c) * m as f64 - 1.0);
        tau.push(now);
    }
    Ok(EmbeddingClock {
        tau,
        schedule: schedule.clone(),
    })
}

/// Tree and clock of one embedded run. The tree uses `source` exactly as
/// [`grow_tree`] would; the clock uses `source.fork(CLOCK_SALT)`.
pub fn grow_embedded(
    schedule: &ChangePointSchedule,
    n: usize,
    source: &SeededRng,
    record: &RecordOptions,
) -> Result<(GrowingTree, EmbeddingClock)> {
    let tree = grow_tree(schedule, n, &mut source.rng(), record)?;
    let clock = holding_times(schedule, n, &mut source.fork(CLOCK_SALT).rng())?;
    Ok((tree, clock))
}

/// `a = log(1 / gamma) / (2 + beta)`, the limit of the after-change duration.
pub fn after_change_limit(beta: f64, gamma: f64) -> f64 {
    ln(1.0 / gamma) / (2.0 + beta)
}

/// Time spent between size `floor(gamma n)` and size `n`.
pub fn upsilon(clock: &EmbeddingClock, gamma: f64) -> Result<f64> {
    clock.schedule.single_change_point()?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::HorizonOutOfRange { t: gamma, lo: 0.0, hi: 1.0 });
    }
    let n = clock.n();
    let start = (floor(gamma * n as f64) as usize).max(1);
    Ok(clock.tau[n] - clock.tau[start])
}

/// After-change durations and their standardized versions
/// `sqrt(n) (Upsilon_n - a) (2 + beta) sqrt(gamma / (1 - gamma))`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonSample {
    pub a: f64,
    pub raw: Vec<f64>,
    pub standardized: Vec<f64>,
}

/// Draws `reps` after-change durations, replication `r` from stream
/// `source.stream(r)`.
///
/// Only the post-change holding times are drawn; their sum has the same law
/// as `tau_n - tau_{gamma n}` of a full clock.
pub fn upsilon_clt_sample(
    schedule: &ChangePointSchedule,
    n: usize,
    reps: usize,
    source: &SeededRng,
) -> Result<UpsilonSample> {
    let (gamma, beta) = schedule.single_change_point()?;
    if n < 2 {
        return Err(Error::SizeTooSmall { n, min: 2 });
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication"));
    }
    let a = after_change_limit(beta, gamma);
    let start = (floor(gamma * n as f64) as usize).max(1);
    let scale = sqrt(n as f64) * (2.0 + beta) * sqrt(gamma / (1.0 - gamma));
    let mut raw = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = source.stream(r as u64).rng();
        let mut sum = 0.0;
        for m in start..n {
            let e: f64 = Exp1.sample(&mut rng);
            sum += e / ((2.0 + beta) * m as f64 - 1.0);
        }
        raw.push(sum);
    }
    let standardized = raw.iter().map(|u| (u - a) * scale).collect();
    Ok(UpsilonSample { a, raw, standardized })
}

/// `(tau_m, m exp(-(2 + alpha) tau_m))` over the pre-change window
/// `m = 1..=floor(gamma_1 n)` (all of `1..=n` without a change point).
pub fn malthusian_track(clock: &EmbeddingClock) -> Vec<(f64, f64)> {
    let n = clock.n();
    let end = clock
        .schedule
        .change_steps(n)
        .first()
        .copied()
        .unwrap_or(n)
        .max(1);
    let rate = 2.0 + clock.schedule.alpha();
    (1..=end)
        .map(|m| (clock.tau[m], m as f64 * exp(-rate * clock.tau[m])))
        .collect()
}
