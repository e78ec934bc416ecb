// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run settings: a JSON config file overlaid by command-line flags.

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::Args;
use pachange_core::leaves::LeafConvention;
use pachange_core::limits::PointCountMethod;
use pachange_core::{ChangePointSchedule, Segment};
use serde::{Deserialize, Serialize};

use crate::formats::read_schedule;

pub const DEFAULT_SEED: u64 = 1;

/// Every tunable of every subcommand. Unset fields fall back to the config
/// file, then to the subcommand default.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Base seed; replication r uses stream r of this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Schedule JSON file; exclusive with --alpha/--beta/--gamma.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Initial attachment offset.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Offset after each change point (repeatable, paired with --gamma).
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    /// Change point as a fraction of n (repeatable, increasing).
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,

    /// Final tree size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Tree sizes for size sweeps (repeatable).
    #[arg(long = "sizes")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    /// Monte Carlo draws from limit laws.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Observation horizon t in (gamma, 1] for the time-indexed limit law.
    #[arg(long)]
    pub horizon_t: Option<f64>,
    /// Largest degree written to pmf tables.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Number of points in curve grids.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Point-count simulator: "waits" or "negbin".
    #[arg(long)]
    pub point_counts: Option<String>,

    /// Estimator truncation.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Near-max threshold (default log(n)/sqrt(n)).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Detection floor (default 2 log(n)/sqrt(n)).
    #[arg(long)]
    pub detection_floor: Option<f64>,
    /// Leaf trajectory CSVs to estimate from (repeatable).
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<PathBuf>,
    /// Count the root as a leaf when it has degree 1: "include" or "exclude".
    #[arg(long)]
    pub root_leaf: Option<String>,
    /// Number of largest degrees to record.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Skip writing tree files.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub no_tree: bool,
}

/// A config file is either a bare settings object or a run manifest, whose
/// `config` member is used.
#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Manifest { config: Settings },
    Plain(Settings),
}

impl Settings {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).with_context(|| format!("opening config {}", path.display()))?;
        let parsed: ConfigFile = serde_json::from_reader(file).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(match parsed {
            ConfigFile::Manifest { config } => config,
            ConfigFile::Plain(s) => s,
        })
    }

    /// `self` with every unset field taken from `base`.
    pub fn over(self, base: Settings) -> Settings {
        fn vec_or<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        Settings {
            seed: self.seed.or(base.seed),
            reps: self.reps.or(base.reps),
            threads: self.threads.or(base.threads),
            out: self.out.or(base.out),
            schedule: self.schedule.or(base.schedule),
            alpha: self.alpha.or(base.alpha),
            beta: vec_or(self.beta, base.beta),
            gamma: vec_or(self.gamma, base.gamma),
            n: self.n.or(base.n),
            sizes: vec_or(self.sizes, base.sizes),
            draws: self.draws.or(base.draws),
            horizon_t: self.horizon_t.or(base.horizon_t),
            k_max: self.k_max.or(base.k_max),
            grid_points: self.grid_points.or(base.grid_points),
            point_counts: self.point_counts.or(base.point_counts),
            epsilon: self.epsilon.or(base.epsilon),
            threshold: self.threshold.or(base.threshold),
            detection_floor: self.detection_floor.or(base.detection_floor),
            trajectory: vec_or(self.trajectory, base.trajectory),
            root_leaf: self.root_leaf.or(base.root_leaf),
            top_k: self.top_k.or(base.top_k),
            no_tree: self.no_tree || base.no_tree,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn reps(&self) -> anyhow::Result<usize> {
        let reps = self.reps.unwrap_or(1);
        ensure!(reps >= 1, "--reps must be at least 1");
        Ok(reps)
    }

    pub fn n(&self, default: usize) -> anyhow::Result<usize> {
        let n = self.n.unwrap_or(default);
        ensure!(n >= 2, "--n must be at least 2 (got {n})");
        Ok(n)
    }

    pub fn has_model(&self) -> bool {
        self.schedule.is_some() || self.alpha.is_some()
    }

    /// The schedule from `--schedule` or from `--alpha/--beta/--gamma`.
    pub fn schedule(&self) -> anyhow::Result<ChangePointSchedule> {
        if let Some(path) = &self.schedule {
            ensure!(
                self.alpha.is_none() && self.beta.is_empty() && self.gamma.is_empty(),
                "--schedule cannot be combined with --alpha/--beta/--gamma"
            );
            let file = File::open(path).with_context(|| format!("opening schedule {}", path.display()))?;
            return read_schedule(file).with_context(|| format!("reading schedule {}", path.display()));
        }
        let Some(alpha) = self.alpha else {
            bail!("no model given: pass --alpha (with --beta/--gamma pairs) or --schedule");
        };
        ensure!(
            self.beta.len() == self.gamma.len(),
            "--beta and --gamma must be given the same number of times ({} vs {})",
            self.beta.len(),
            self.gamma.len()
        );
        let segments = self.gamma.iter().zip(&self.beta).map(|(&gamma, &beta)| Segment { gamma, beta }).collect();
        Ok(ChangePointSchedule::with_zero_offsets(alpha, segments)?)
    }

    pub fn point_count_method(&self) -> anyhow::Result<PointCountMethod> {
        match self.point_counts.as_deref() {
            None | Some("waits") => Ok(PointCountMethod::ExponentialWaits),
            Some("negbin") => Ok(PointCountMethod::NegativeBinomial),
            Some(other) => bail!("unknown --point-counts {other:?} (expected waits or negbin)"),
        }
    }

    pub fn leaf_convention(&self) -> anyhow::Result<LeafConvention> {
        match self.root_leaf.as_deref() {
            None | Some("include") => Ok(LeafConvention::IncludeRoot),
            Some("exclude") => Ok(LeafConvention::ExcludeRoot),
            Some(other) => bail!("unknown --root-leaf {other:?} (expected include or exclude)"),
        }
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(format!("pachange-{command}-seed{}", self.seed())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = Settings {
            seed: Some(5),
            alpha: Some(6.0),
            beta: vec![1.0],
            gamma: vec![0.5],
            n: Some(100),
            ..Settings::default()
        };
        let flags = Settings {
            n: Some(200),
            beta: vec![2.0],
            ..Settings::default()
        };
        let s = flags.over(file);
        assert_eq!(s.seed, Some(5));
        assert_eq!(s.n, Some(200));
        assert_eq!(s.beta, vec![2.0]);
        assert_eq!(s.schedule().unwrap().single_change_point().unwrap(), (0.5, 2.0));
    }

    #[test]
    fn schedule_errors() {
        let mut s = Settings::default();
        assert!(s.schedule().is_err());
        s.alpha = Some(1.0);
        s.beta = vec![1.0];
        assert!(s.schedule().is_err());
        s.gamma = vec![1.2];
        assert!(s.schedule().is_err());
        s.gamma = vec![0.2];
        assert!(s.schedule().is_ok());
    }

    #[test]
    fn manifest_config_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"subcommand": "simulate", "config": {"seed": 9, "alpha": 2.0}}"#).unwrap();
        let s = Settings::load(&path).unwrap();
        assert_eq!(s.seed, Some(9));
        std::fs::write(&path, r#"{"seed": 3, "bogus": 1}"#).unwrap();
        assert!(Settings::load(&path).is_err());
    }
}
