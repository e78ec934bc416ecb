// SPDX-License-Identifier: MIT OR Apache-2.0

//! The five subcommands. Each one resolves and validates its settings into a
//! plan before touching the filesystem.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use pachange_core::embed::upsilon_clt_sample;
use pachange_core::estimator::{dn_curve, gamma_hat, limit_d_curve, EstimateReport, EstimatorConfig};
use pachange_core::leaves::{gn_path, LeafLimitCurve, LeafTrajectory};
use pachange_core::limits::{ccdf_alpha, ccdf_from_counts, p_alpha_pmf, DThetaSampler, PointCountMethod};
use pachange_core::stats::{counts_to_pmf, ks_distance_normal, mean, median, std_error, value_counts, variance};
use pachange_core::tree::{degree_histogram, grow_tree, top_k_degrees};
use pachange_core::{ChangePointSchedule, RecordOptions, SeededRng};

use crate::config::Settings;
use crate::ensemble;
use crate::formats::{self, CsvWriter, ReportJson, ScheduleJson};
use crate::manifest::{RunDir, RunManifest};

const SIMULATE_N: usize = 10_000;
const LIMITS_DRAWS: usize = 1_000_000;
const LIMITS_K_MAX: usize = 50;
const GRID_POINTS: usize = 100;
const FCLT_N: usize = 100_000;
const FCLT_REPS: usize = 500;
const FCLT_TIMES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const MAXDEG_SIZES: [usize; 2] = [10_000, 100_000];
const MAXDEG_REPS: usize = 50;
const MAXDEG_TOP_K: usize = 5;
// Monte Carlo draws are split into this many streams regardless of --threads.
const DRAW_CHUNKS: usize = 64;

pub const SUBCOMMANDS: [&str; 5] = ["simulate", "limits", "estimate", "fclt", "maxdeg"];

pub fn run(subcommand: &str, settings: &Settings) -> anyhow::Result<RunManifest> {
    match subcommand {
        "simulate" => simulate(settings),
        "limits" => limits(settings),
        "estimate" => estimate(settings),
        "fclt" => fclt(settings),
        "maxdeg" => maxdeg(settings),
        other => bail!("unknown subcommand {other:?}"),
    }
}

fn rep_prefix(reps: usize, r: usize) -> String {
    if reps == 1 {
        String::new()
    } else {
        format!("rep{r:04}_")
    }
}

fn write_file<F>(dir: &Path, name: &str, fill: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let path = dir.join(name);
    let mut out = io::BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    fill(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush()?;
    Ok(())
}

fn uniform_grid(lo: f64, points: usize) -> Vec<f64> {
    // points in (lo, 1], ending at 1
    (1..=points).map(|i| lo + (1.0 - lo) * i as f64 / points as f64).collect()
}

pub fn simulate(settings: &Settings) -> anyhow::Result<RunManifest> {
    let schedule = settings.schedule()?;
    let n = settings.n(SIMULATE_N)?;
    let reps = settings.reps()?;
    let convention = settings.leaf_convention()?;
    let source = SeededRng::new(settings.seed(), 0);

    let mut run = RunDir::create(&settings.out_dir("simulate"), "simulate", settings)?;
    run.record_seeds(ensemble::seeds(reps, source));
    let dir = run.path().to_path_buf();
    let record = RecordOptions::leaves_with(convention);
    let outcomes = ensemble::run(reps, settings.threads, source, |r, src| {
        let mut tree = grow_tree(&schedule, n, &mut src.rng(), &record)?;
        let prefix = rep_prefix(reps, r);
        let mut names = Vec::new();
        if !settings.no_tree {
            write_file(&dir, &format!("{prefix}tree.bin"), |w| formats::write_tree(&tree, w).map_err(io::Error::other))?;
            write_file(&dir, &format!("{prefix}edges.csv"), |w| formats::write_edges(&tree, w))?;
            names.push(format!("{prefix}tree.bin"));
            names.push(format!("{prefix}edges.csv"));
        }
        let hist = degree_histogram(&tree);
        let traj = tree.take_leaf_trajectory().expect("leaves were recorded");
        write_file(&dir, &format!("{prefix}leaves.csv"), |w| formats::write_leaves(&traj, w))?;
        write_file(&dir, &format!("{prefix}degrees.csv"), |w| formats::write_degrees(hist.counts(), w))?;
        names.push(format!("{prefix}leaves.csv"));
        names.push(format!("{prefix}degrees.csv"));
        Ok((names, hist.proportion(1), hist.max_degree()))
    })?;
    let mut leaf_fraction = Vec::new();
    let mut max_degree = Vec::new();
    for (names, lf, md) in outcomes {
        names.into_iter().for_each(|f| run.register(f));
        leaf_fraction.push(lf);
        max_degree.push(md);
    }
    run.summarize("schedule", ScheduleJson::from(&schedule));
    run.summarize("leaf_fraction", leaf_fraction);
    run.summarize("max_degree", max_degree);
    run.finish()
}

fn theta_sampler(schedule: &ChangePointSchedule, horizon: Option<f64>, method: PointCountMethod) -> anyhow::Result<Option<DThetaSampler>> {
    let sampler = match schedule.num_change_points() {
        0 => {
            ensure!(horizon.is_none(), "--horizon-t needs a change point");
            return Ok(None);
        }
        1 => DThetaSampler::single(schedule, horizon.unwrap_or(1.0))?,
        _ => {
            ensure!(horizon.is_none_or(|t| t == 1.0), "--horizon-t other than 1 needs a single change point");
            DThetaSampler::multi(schedule)?
        }
    };
    Ok(Some(sampler.with_method(method)))
}

/// Counts of `draws` samples of the change-point law, split over fixed
/// streams so the result does not depend on the thread count.
pub fn sample_theta_counts(sampler: &DThetaSampler, draws: usize, source: SeededRng, threads: Option<usize>) -> anyhow::Result<Vec<u64>> {
    let chunks = ensemble::run(DRAW_CHUNKS, threads, source, |c, src| {
        let share = draws / DRAW_CHUNKS + usize::from(c < draws % DRAW_CHUNKS);
        let mut rng = src.rng();
        Ok(value_counts((0..share).map(|_| sampler.sample(&mut rng).value)))
    })?;
    let len = chunks.iter().map(Vec::len).max().unwrap_or(0);
    let mut total = vec![0u64; len];
    for c in chunks {
        for (k, x) in c.into_iter().enumerate() {
            total[k] += x;
        }
    }
    Ok(total)
}

fn write_curve(w: &mut dyn Write, curve: &LeafLimitCurve, grid: &[f64]) -> io::Result<()> {
    let mut csv = CsvWriter::new(w, &["t", "p_inf", "sigmaM2", "sigma2", "mu", "g", "phi"])?;
    for &t in grid {
        let v = curve.variance_suite(t).map_err(io::Error::other)?;
        csv.row(&[&t, &curve.p_inf_unchecked(t), &v.sigma_m2, &v.sigma2, &v.mu, &v.g, &v.phi])?;
    }
    csv.finish()
}

pub fn limits(settings: &Settings) -> anyhow::Result<RunManifest> {
    let schedule = settings.schedule()?;
    let k_max = settings.k_max.unwrap_or(LIMITS_K_MAX);
    ensure!(k_max >= 1, "--k-max must be at least 1");
    let draws = settings.draws.unwrap_or(LIMITS_DRAWS);
    let points = settings.grid_points.unwrap_or(GRID_POINTS);
    ensure!(points >= 1, "--grid-points must be at least 1");
    let sampler = theta_sampler(&schedule, settings.horizon_t, settings.point_count_method()?)?;
    let curve = match schedule.num_change_points() {
        0 | 1 => Some(LeafLimitCurve::new(&schedule)?),
        _ => None,
    };
    let epsilon = settings.epsilon.unwrap_or(EstimatorConfig::default().epsilon);
    if let Some(c) = &curve {
        ensure!(epsilon > 0.0 && epsilon < c.gamma(), "--epsilon must lie in (0, gamma)");
    }
    let source = SeededRng::new(settings.seed(), 0);

    let mut run = RunDir::create(&settings.out_dir("limits"), "limits", settings)?;
    let alpha = schedule.alpha();
    let pmf: Vec<f64> = (0..=k_max).map(|k| if k == 0 { 0.0 } else { p_alpha_pmf(alpha, k as u64).unwrap_or(0.0) }).collect();
    let ccdf: Vec<f64> = (0..=k_max).map(|k| ccdf_alpha(alpha, k.max(1) as u64)).collect();
    run.write("pmf_alpha.csv", |w| formats::write_k_p(&pmf, w))?;
    run.write("ccdf_alpha.csv", |w| formats::write_k_p(&ccdf, w))?;

    if let Some(sampler) = sampler {
        if draws > 0 {
            run.record_seeds(ensemble::seeds(DRAW_CHUNKS, source));
            let counts = sample_theta_counts(&sampler, draws, source, settings.threads)?;
            let mut pmf = counts_to_pmf(&counts);
            pmf.resize(k_max + 1, 0.0);
            run.write("pmf_theta.csv", |w| formats::write_k_p(&pmf, w))?;
            let ccdf = ccdf_from_counts(&counts);
            run.write("ccdf_theta.csv", |w| formats::write_k_p(&ccdf, w))?;
            run.summarize("theta_draws", draws);
        }
    }
    if let Some(curve) = curve {
        let grid = uniform_grid(0.0, points);
        run.write("leaf_curve.csv", |w| write_curve(w, &curve, &grid))?;
        let grid: Vec<f64> = std::iter::once(epsilon).chain(uniform_grid(epsilon, points)).collect();
        let values = limit_d_curve(&grid, &curve, epsilon)?;
        run.write("d_limit.csv", |w| {
            let mut csv = CsvWriter::new(w, &["t", "d_limit"])?;
            for (t, d) in grid.iter().zip(&values) {
                csv.row(&[t, d])?;
            }
            csv.finish()
        })?;
    }
    run.summarize("schedule", ScheduleJson::from(&schedule));
    run.finish()
}

fn estimator_config(settings: &Settings) -> anyhow::Result<EstimatorConfig> {
    let cfg = EstimatorConfig {
        epsilon: settings.epsilon.unwrap_or(EstimatorConfig::default().epsilon),
        near_max_threshold: settings.threshold,
        detection_floor: settings.detection_floor,
        ..EstimatorConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

enum Source {
    Files(Vec<PathBuf>),
    Simulated { schedule: ChangePointSchedule, n: usize, reps: usize },
}

fn write_dn_curve(w: &mut dyn Write, report: &EstimateReport, limit: Option<&[f64]>) -> io::Result<()> {
    let mut csv = CsvWriter::new(w, &["t", "dn", "d_limit"])?;
    for (i, (t, d)) in report.dn_curve.iter().enumerate() {
        match limit {
            Some(l) => csv.row(&[t, d, &l[i]])?,
            None => csv.row(&[t, d, &""])?,
        }
    }
    csv.finish()
}

/// `D(t)` on the estimator's grid, when a single-change-point model with
/// `gamma > epsilon` is known.
fn limit_on_grid(schedule: Option<&ChangePointSchedule>, curve: &[(f64, f64)], epsilon: f64) -> anyhow::Result<Option<Vec<f64>>> {
    let Some(schedule) = schedule else { return Ok(None) };
    if schedule.num_change_points() > 1 {
        return Ok(None);
    }
    let limit = LeafLimitCurve::new(schedule)?;
    if epsilon >= limit.gamma() {
        return Ok(None);
    }
    let ts: Vec<f64> = curve.iter().map(|p| p.0).collect();
    Ok(Some(limit_d_curve(&ts, &limit, epsilon)?))
}

pub fn estimate(settings: &Settings) -> anyhow::Result<RunManifest> {
    let cfg = estimator_config(settings)?;
    let convention = settings.leaf_convention()?;
    let model = if settings.has_model() { Some(settings.schedule()?) } else { None };
    let source_kind = if !settings.trajectory.is_empty() {
        ensure!(settings.n.is_none() && settings.reps.is_none(), "--trajectory cannot be combined with --n/--reps");
        Source::Files(settings.trajectory.clone())
    } else {
        let Some(schedule) = model.clone() else {
            bail!("give --trajectory files or a model to simulate");
        };
        Source::Simulated {
            schedule,
            n: settings.n(SIMULATE_N)?,
            reps: settings.reps()?,
        }
    };
    // read inputs before creating anything
    let inputs: Vec<LeafTrajectory> = match &source_kind {
        Source::Files(paths) => paths
            .iter()
            .map(|p| {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                formats::read_leaves(f, convention).with_context(|| format!("reading {}", p.display()))
            })
            .collect::<anyhow::Result<_>>()?,
        Source::Simulated { .. } => Vec::new(),
    };
    let source = SeededRng::new(settings.seed(), 0);

    let mut run = RunDir::create(&settings.out_dir("estimate"), "estimate", settings)?;
    let reports: Vec<EstimateReport> = match source_kind {
        Source::Files(_) => inputs
            .iter()
            .map(|traj| Ok(gamma_hat(dn_curve(traj, &cfg)?, &cfg, traj.n())?))
            .collect::<anyhow::Result<_>>()?,
        Source::Simulated { schedule, n, reps } => {
            run.record_seeds(ensemble::seeds(reps, source));
            let record = RecordOptions::leaves_with(convention);
            ensemble::run(reps, settings.threads, source, |_, src| {
                let mut tree = grow_tree(&schedule, n, &mut src.rng(), &record)?;
                let traj = tree.take_leaf_trajectory().expect("leaves were recorded");
                Ok(gamma_hat(dn_curve(&traj, &cfg)?, &cfg, n)?)
            })?
        }
    };
    let count = reports.len();
    let mut limit_cache: Option<(usize, Option<Vec<f64>>)> = None;
    for (r, report) in reports.iter().enumerate() {
        let prefix = rep_prefix(count, r);
        let len = report.dn_curve.len();
        if limit_cache.as_ref().is_none_or(|(l, _)| *l != len) {
            limit_cache = Some((len, limit_on_grid(model.as_ref(), &report.dn_curve, cfg.epsilon)?));
        }
        let limit = limit_cache.as_ref().and_then(|(_, l)| l.as_deref());
        run.write(&format!("{prefix}report.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &ReportJson::from(report)).map_err(io::Error::other)?;
            w.write_all(b"\n")
        })?;
        run.write(&format!("{prefix}dn_curve.csv"), |w| write_dn_curve(w, report, limit))?;
    }
    if count > 1 {
        run.write("gamma_hat.csv", |w| {
            let mut csv = CsvWriter::new(w, &["rep", "gamma_hat", "dn_star", "detected"])?;
            for (r, rep) in reports.iter().enumerate() {
                let g = rep.gamma_hat.map(|g| g.to_string()).unwrap_or_default();
                csv.row(&[&r, &g, &rep.dn_star, &rep.detected])?;
            }
            csv.finish()
        })?;
    }
    run.summarize("gamma_hat", reports.iter().map(|r| r.gamma_hat).collect::<Vec<_>>());
    run.finish()
}

pub fn fclt(settings: &Settings) -> anyhow::Result<RunManifest> {
    let schedule = settings.schedule()?;
    let (gamma, _) = schedule.single_change_point()?;
    let n = settings.n(FCLT_N)?;
    let reps = settings.reps.unwrap_or(FCLT_REPS);
    ensure!(reps >= 2, "--reps must be at least 2 for moment estimates");
    let points = settings.grid_points.unwrap_or(GRID_POINTS);
    ensure!(points >= 1, "--grid-points must be at least 1");
    let convention = settings.leaf_convention()?;
    let curve = LeafLimitCurve::new(&schedule)?;
    let source = SeededRng::new(settings.seed(), 0);

    let mut run = RunDir::create(&settings.out_dir("fclt"), "fclt", settings)?;
    run.record_seeds(ensemble::seeds(reps, source));
    let mut times = FCLT_TIMES.to_vec();
    if !times.contains(&gamma) {
        times.push(gamma);
        times.sort_by(f64::total_cmp);
    }
    let path_grid = uniform_grid(0.0, points);
    let record = RecordOptions::leaves_with(convention);
    let paths = ensemble::run(reps, settings.threads, source, |r, src| {
        let mut tree = grow_tree(&schedule, n, &mut src.rng(), &record)?;
        let traj = tree.take_leaf_trajectory().expect("leaves were recorded");
        let marginals = gn_path(&traj, &curve, &times)?;
        let path = if r == 0 { Some(gn_path(&traj, &curve, &path_grid)?) } else { None };
        Ok((marginals, path))
    })?;
    run.write("gn_moments.csv", |w| {
        let mut csv = CsvWriter::new(w, &["t", "mean", "std_error", "variance", "limit_variance"])?;
        for (i, t) in times.iter().enumerate() {
            let xs: Vec<f64> = paths.iter().map(|p| p.0[i]).collect();
            let lim = curve.variance_suite(*t).map_err(io::Error::other)?.g_variance();
            csv.row(&[t, &mean(&xs), &std_error(&xs), &variance(&xs), &lim])?;
        }
        csv.finish()
    })?;
    if let Some(path) = &paths[0].1 {
        run.write("gn_path.csv", |w| {
            let mut csv = CsvWriter::new(w, &["t", "gn"])?;
            for (t, g) in path_grid.iter().zip(path) {
                csv.row(&[t, g])?;
            }
            csv.finish()
        })?;
    }

    // the after-change clock uses a separate key so it never shares streams with the trees
    let clock_source = source.fork(pachange_core::embed::CLOCK_SALT);
    let ups = upsilon_clt_sample(&schedule, n, reps, &clock_source)?;
    run.write("upsilon.csv", |w| {
        let mut csv = CsvWriter::new(w, &["rep", "z"])?;
        for (r, z) in ups.standardized.iter().enumerate() {
            csv.row(&[&r, z])?;
        }
        csv.finish()
    })?;
    run.summarize("upsilon_a", ups.a);
    run.summarize("upsilon_mean", mean(&ups.raw));
    run.summarize("upsilon_std_error", std_error(&ups.raw));
    run.summarize("upsilon_ks", ks_distance_normal(&ups.standardized));
    run.summarize("upsilon_z_variance", variance(&ups.standardized));
    run.finish()
}

pub fn maxdeg(settings: &Settings) -> anyhow::Result<RunManifest> {
    let schedule = settings.schedule()?;
    let sizes = if settings.sizes.is_empty() { MAXDEG_SIZES.to_vec() } else { settings.sizes.clone() };
    ensure!(settings.n.is_none(), "maxdeg takes --sizes, not --n");
    ensure!(sizes.iter().all(|&n| n >= 2), "every size must be at least 2");
    let reps = settings.reps.unwrap_or(MAXDEG_REPS);
    ensure!(reps >= 1, "--reps must be at least 1");
    let top_k = settings.top_k.unwrap_or(MAXDEG_TOP_K);
    ensure!(top_k >= 1 && sizes.iter().all(|&n| top_k <= n), "--top-k must lie in 1..=n");
    let source = SeededRng::new(settings.seed(), 0);

    let mut run = RunDir::create(&settings.out_dir("maxdeg"), "maxdeg", settings)?;
    let jobs = sizes.len() * reps;
    run.record_seeds(ensemble::seeds(jobs, source));
    let tops = ensemble::run(jobs, settings.threads, source, |j, src| {
        let n = sizes[j / reps];
        let tree = grow_tree(&schedule, n, &mut src.rng(), &RecordOptions::default())?;
        Ok(top_k_degrees(&tree, top_k)?)
    })?;
    run.write("maxdeg.csv", |w| {
        let mut csv = CsvWriter::new(w, &["n", "rep", "rank", "degree"])?;
        for (j, top) in tops.iter().enumerate() {
            for (rank, d) in top.iter().enumerate() {
                csv.row(&[&sizes[j / reps], &(j % reps), &(rank + 1), d])?;
            }
        }
        csv.finish()
    })?;
    let alpha = schedule.alpha();
    let hi = (1.0 + alpha) / (2.0 + alpha);
    let lo = 1.0 / (2.0 + alpha);
    let mut rows = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let m1: Vec<f64> = tops[i * reps..(i + 1) * reps].iter().map(|t| t[0] as f64).collect();
        let nf = n as f64;
        rows.push((n, median(&m1), median(&m1) / nf.powf(hi), median(&m1) / nf.powf(lo)));
    }
    run.write("maxdeg_summary.csv", |w| {
        let mut csv = CsvWriter::new(w, &["n", "median_max_degree", "ratio_hi", "ratio_lo"])?;
        for (n, m, a, b) in &rows {
            csv.row(&[n, m, a, b])?;
        }
        csv.finish()
    })?;
    run.summarize("exponent_hi", hi);
    run.summarize("exponent_lo", lo);
    run.finish()
}
