// SPDX-License-Identifier: MIT OR Apache-2.0

use pachange_core::leaves::p_inf;
use pachange_core::limits::{
    age_cdf, ccdf_alpha, ccdf_from_counts, epoch_probabilities, p_alpha_pmf, sample_age, sample_point_count, tail_exponent, AlphaDegreeSampler, Branch, DThetaSampler, PointCountMethod,
};
use pachange_core::stats::{chi_square_critical_999, chi_square_two_sample, counts_to_pmf, mean, std_error, total_variation, value_counts};
use pachange_core::{ChangePointSchedule, Segment, SeededRng};
use proptest::prelude::*;

fn main_schedule() -> ChangePointSchedule {
    ChangePointSchedule::single(6.0, 1.0, 0.5).unwrap()
}

fn draw_counts(sampler: &DThetaSampler, draws: usize, src: SeededRng) -> Vec<u64> {
    let mut rng = src.rng();
    value_counts((0..draws).map(|_| sampler.sample(&mut rng).value))
}

#[test]
fn equal_offsets_reproduce_alpha_law() {
    for (alpha, gamma) in [(6.0, 0.5), (1.0, 0.2), (3.0, 0.9)] {
        let schedule = ChangePointSchedule::single(alpha, alpha, gamma).unwrap();
        let sampler = DThetaSampler::single(&schedule, 1.0).unwrap();
        let pmf = counts_to_pmf(&draw_counts(&sampler, 1_000_000, SeededRng::new(41, 0)));
        let exact: Vec<f64> = (0..=20).map(|k| if k == 0 { 0.0 } else { p_alpha_pmf(alpha, k).unwrap() }).collect();
        let tv = total_variation(&pmf, &exact, 1, 20);
        assert!(tv < 0.005, "alpha {alpha} gamma {gamma}: tv {tv}");
    }
}

#[test]
fn before_change_branch_dominates_alpha_law() {
    let sampler = DThetaSampler::single(&main_schedule(), 1.0).unwrap();
    let mut rng = SeededRng::new(42, 0).rng();
    let before: Vec<u64> = (0..1_000_000)
        .map(|_| sampler.sample(&mut rng))
        .filter(|s| s.branch == Branch::BeforeChange)
        .map(|s| s.value)
        .collect();
    let ccdf = ccdf_from_counts(&value_counts(before.iter().copied()));
    let total = before.len() as f64;
    for k in 1..60u64 {
        let emp = ccdf.get(k as usize).copied().unwrap_or(0.0);
        let exact = ccdf_alpha(6.0, k);
        let se = (exact * (1.0 - exact) / total).sqrt();
        assert!(emp >= exact - 3.0 * se, "k {k}: {emp} < {exact}");
    }
}

#[test]
fn leaf_mass_matches_limit_curve() {
    let sampler = DThetaSampler::single(&main_schedule(), 1.0).unwrap();
    let draws = 1_000_000;
    let counts = draw_counts(&sampler, draws, SeededRng::new(43, 0));
    let freq = counts[1] as f64 / draws as f64;
    let p = p_inf(1.0, &main_schedule()).unwrap();
    assert!((p - 0.5790).abs() < 1e-4);
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    assert!((freq - p).abs() < 3.0 * se, "{freq} vs {p}");
}

#[test]
fn time_indexed_leaf_mass() {
    let schedule = main_schedule();
    let draws = 400_000;
    for t in [0.6, 0.8] {
        let sampler = DThetaSampler::single(&schedule, t).unwrap();
        let counts = draw_counts(&sampler, draws, SeededRng::new(44, 0));
        let freq = counts[1] as f64 / draws as f64;
        let p = p_inf(t, &schedule).unwrap();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "t {t}: {freq} vs {p}");
    }
}

#[test]
fn multi_sampler_with_one_segment_equals_single() {
    let schedule = main_schedule();
    let single = draw_counts(&DThetaSampler::single(&schedule, 1.0).unwrap(), 1_000_000, SeededRng::new(45, 0));
    let multi = draw_counts(&DThetaSampler::multi(&schedule).unwrap(), 1_000_000, SeededRng::new(45, 1));
    let (stat, df) = chi_square_two_sample(&single, &multi, 25);
    assert!(stat < chi_square_critical_999(df), "chi2 {stat} on {df}");
}

#[test]
fn point_count_methods_agree_inside_sampler() {
    let schedule = ChangePointSchedule::new(4.0, vec![Segment { gamma: 0.3, beta: 1.0 }, Segment { gamma: 0.7, beta: 2.0 }]).unwrap();
    let waits = DThetaSampler::multi(&schedule).unwrap();
    let nb = DThetaSampler::multi(&schedule).unwrap().with_method(PointCountMethod::NegativeBinomial);
    let a = draw_counts(&waits, 500_000, SeededRng::new(46, 0));
    let b = draw_counts(&nb, 500_000, SeededRng::new(46, 1));
    let (stat, df) = chi_square_two_sample(&a, &b, 25);
    assert!(stat < chi_square_critical_999(df), "chi2 {stat} on {df}");
}

#[test]
fn epoch_weights() {
    let s = ChangePointSchedule::new(1.0, vec![Segment { gamma: 0.25, beta: 1.0 }, Segment { gamma: 0.75, beta: 2.0 }]).unwrap();
    let pi = epoch_probabilities(&s);
    assert_eq!(pi, vec![0.25, 0.5, 0.25]);
}

#[test]
fn point_count_mean() {
    let t = std::f64::consts::LN_2 / 3.0;
    let mut rng = SeededRng::new(47, 0).rng();
    let xs: Vec<f64> = (0..400_000).map(|_| sample_point_count(1, 1.0, t, &mut rng) as f64).collect();
    let expected = 2.0 * (t.exp() - 1.0);
    assert!((expected - 0.5198).abs() < 1e-4);
    assert!((mean(&xs) - expected).abs() < 3.0 * std_error(&xs));
    assert_eq!(sample_point_count(3, 1.0, 0.0, &mut rng), 0);
}

#[test]
fn age_empirical_cdf() {
    let a = std::f64::consts::LN_2 / 3.0;
    let mut rng = SeededRng::new(48, 0).rng();
    let draws = 400_000;
    let xs: Vec<f64> = (0..draws).map(|_| sample_age(a, 3.0, &mut rng).unwrap()).collect();
    assert!(xs.iter().all(|&x| (0.0..=a).contains(&x)));
    let p = age_cdf(a, 3.0, a / 2.0);
    let emp = xs.iter().filter(|&&x| x <= a / 2.0).count() as f64 / draws as f64;
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    assert!((emp - p).abs() < 3.0 * se, "{emp} vs {p}");
    assert!(sample_age(0.0, 3.0, &mut rng).is_err());
}

#[test]
fn alpha_sampler_chi_square() {
    for alpha in [0.0, 0.5, 6.0] {
        let sampler = AlphaDegreeSampler::new(alpha).unwrap();
        let mut rng = SeededRng::new(49, 0).rng();
        let counts = value_counts((0..500_000).map(|_| sampler.sample(&mut rng)));
        let probs: Vec<f64> = (0..60).map(|k| if k == 0 { 0.0 } else { p_alpha_pmf(alpha, k).unwrap() }).collect();
        let (stat, bins) = pachange_core::stats::chi_square_gof(&counts, &probs);
        assert!(stat < chi_square_critical_999(bins - 1), "alpha {alpha}: {stat} on {bins}");
    }
}

#[test]
fn exact_tail_slope_at_zero_offset() {
    let ccdf: Vec<f64> = (0..=200).map(|k| if k == 0 { 1.0 } else { ccdf_alpha(0.0, k) }).collect();
    let fit = tail_exponent(&ccdf, 20, 200).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.1, "{}", fit.slope);
}

proptest! {
    #[test]
    fn pmf_ratio(alpha in 0.0f64..20.0, k in 1u64..50) {
        let r = p_alpha_pmf(alpha, k + 1).unwrap() / p_alpha_pmf(alpha, k).unwrap();
        let exact = (k as f64 + alpha) / (k as f64 + 3.0 + 2.0 * alpha);
        prop_assert!((r / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ccdf_identity(alpha in 0.0f64..20.0, k in 1u64..200) {
        let lhs = ccdf_alpha(alpha, k) - ccdf_alpha(alpha, k + 1);
        let rhs = p_alpha_pmf(alpha, k).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1e-300) + 1e-15);
    }

    #[test]
    fn samples_are_positive(seed in any::<u64>(), t in 0.51f64..1.0) {
        let sampler = DThetaSampler::single(&main_schedule(), t).unwrap();
        let mut rng = SeededRng::new(seed, 0).rng();
        for _ in 0..200 {
            let s = sampler.sample(&mut rng);
            prop_assert!(s.value >= 1);
            prop_assert_eq!(s.epoch == 0, s.branch == Branch::BeforeChange);
        }
    }
}
