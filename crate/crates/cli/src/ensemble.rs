// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replication-parallel execution.

use pachange_core::SeededRng;
use rayon::prelude::*;

/// Runs `job(r, source.stream(r))` for `r = 0..reps` on `threads` workers
/// (`None` = rayon's default) and returns results in replication order.
/// Results do not depend on the thread count.
pub fn run<T, F>(reps: usize, threads: Option<usize>, source: SeededRng, job: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, SeededRng) -> anyhow::Result<T> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        anyhow::ensure!(t >= 1, "--threads must be at least 1");
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| job(r, source.stream(r as u64)))
            .collect()
    })
}

/// `(seed, stream)` pairs used by [`run`].
pub fn seeds(reps: usize, source: SeededRng) -> impl Iterator<Item = (u64, u64)> {
    (0..reps as u64).map(move |r| (source.seed, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_and_thread_count_do_not_matter() {
        let job = |r: usize, s: SeededRng| -> anyhow::Result<(usize, u64)> { Ok((r, s.rng().random())) };
        let one = run(16, Some(1), SeededRng::new(3, 0), job).unwrap();
        let four = run(16, Some(4), SeededRng::new(3, 0), job).unwrap();
        assert_eq!(one, four);
        assert!(one.iter().enumerate().all(|(i, x)| x.0 == i));
        assert!(run(1, Some(0), SeededRng::new(3, 0), job).is_err());
    }
}
