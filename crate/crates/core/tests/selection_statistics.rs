use complex_action::selection::{
    born_probabilities, dominance_ratio, outcome_distribution, realized_index, trial_rng, Branch, NoiseModel,
};
use complex_action::Complex64;
use proptest::prelude::*;

const N: u64 = 100_000;

fn amp(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn draws(noise: NoiseModel, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, 0);
    (0..n).map(|_| noise.sample(&mut rng, 1.0)).collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Probability that branch 1 beats branch 2 when each log-weight carries an
/// independent standard Gumbel perturbation, by direct quadrature.
fn gumbel_win_probability(ln_w1: f64, ln_w2: f64) -> f64 {
    let pdf = |g: f64| (-(g + (-g).exp())).exp();
    let cdf = |g: f64| (-(-g).exp()).exp();
    let (a, b, n) = (-12.0, 45.0, 200_000);
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    for k in 0..=n {
        let g = a + k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        total += w * pdf(g) * cdf(g + ln_w1 - ln_w2);
    }
    total * h
}

#[test]
fn gumbel_noise_has_euler_mascheroni_mean() {
    let xs = draws(
        NoiseModel::Gumbel {
            location: 0.0,
            scale: 1.0,
        },
        5,
        N as usize,
    );
    let (m, v) = mean_var(&xs);
    let sigma_mean = (std::f64::consts::PI.powi(2) / 6.0 / N as f64).sqrt();
    assert!((m - 0.577_215_664_901_532_9).abs() < 3.0 * sigma_mean, "mean {m}");
    assert!((v - std::f64::consts::PI.powi(2) / 6.0).abs() < 0.05);
}

#[test]
fn cascade_variance_is_stage_count_times_stage_variance() {
    let xs = draws(
        NoiseModel::Cascade {
            n_stages: 4,
            per_stage_sigma: 1.0,
        },
        9,
        N as usize,
    );
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 3.0 * (4.0 / N as f64).sqrt());
    assert!((v - 4.0).abs() < 0.05 * 4.0, "variance {v}");
}

#[test]
fn quadrature_oracle_reproduces_born_ratio() {
    for (w1, w2) in [(1.0, 3.0), (1.0, 1.0), (0.2, 5.0)] {
        let p = gumbel_win_probability(f64::ln(w1), f64::ln(w2));
        assert!((p - w1 / (w1 + w2)).abs() < 1e-9, "{w1}:{w2} -> {p}");
    }
}

#[test]
fn standard_gumbel_future_recovers_born_rule() {
    let branches = [
        Branch::new("up", amp(0.5), 0.0, NoiseModel::StandardGumbel),
        Branch::new("down", amp(0.75f64.sqrt()), 0.0, NoiseModel::StandardGumbel),
    ];
    let born = born_probabilities(&branches);
    assert!((born[0] - 0.25).abs() < 1e-15);
    let counts = outcome_distribution(&branches, N, 42, 1.0).unwrap();
    let f = counts.frequencies();
    assert!((f[0] - 0.25).abs() < three_sigma(0.25, N), "{f:?}");
    assert!((f[1] - 0.75).abs() < three_sigma(0.75, N), "{f:?}");
}

#[test]
fn born_rule_holds_for_other_hbar() {
    let branches = [
        Branch::new("a", amp(1.0), 0.0, NoiseModel::StandardGumbel),
        Branch::new("b", amp(2.0), 0.0, NoiseModel::StandardGumbel),
        Branch::new("c", Complex64::new(0.0, 1.0), 0.0, NoiseModel::StandardGumbel),
    ];
    let born = born_probabilities(&branches);
    let f = outcome_distribution(&branches, N, 7, 0.3).unwrap().frequencies();
    for (p, q) in born.iter().zip(&f) {
        assert!((p - q).abs() < three_sigma(*p, N));
    }
}

#[test]
fn gaussian_future_noise_breaks_born_rule() {
    // Log-weight difference carries N(0, 8): P(up) = Φ(ln(1/3)/√8).
    let noise = NoiseModel::Gaussian { mean: 0.0, sigma: 1.0 };
    let branches = [
        Branch::new("up", amp(0.5), 0.0, noise),
        Branch::new("down", amp(0.75f64.sqrt()), 0.0, noise),
    ];
    let expected = 0.349_0;
    let f = outcome_distribution(&branches, N, 42, 1.0)
        .unwrap()
        .frequency_of("up")
        .unwrap();
    assert!((f - expected).abs() < 0.005, "{f}");
    assert!((f - 0.25).abs() > 20.0 * three_sigma(0.25, N));
}

#[test]
fn equal_branches_split_evenly() {
    let noise = NoiseModel::Gaussian { mean: 0.0, sigma: 1.0 };
    let branches = [
        Branch::new("l", amp(1.0), 0.0, noise),
        Branch::new("r", amp(1.0), 0.0, noise),
    ];
    let f = outcome_distribution(&branches, N, 3, 1.0).unwrap().frequencies();
    assert!((f[0] - 0.5).abs() < three_sigma(0.5, N));
}

#[test]
fn cascade_noise_does_not_overturn_a_large_gap() {
    let noise = NoiseModel::Cascade {
        n_stages: 4,
        per_stage_sigma: 1.0,
    };
    let branches = [
        Branch::new("low", amp(1.0), 0.0, noise),
        Branch::new("high", amp(1.0), 10.0, noise),
    ];
    assert!(dominance_ratio(&branches, 1.0).unwrap() < 1e-8);
    let f = outcome_distribution(&branches, N, 1, 1.0)
        .unwrap()
        .frequency_of("low")
        .unwrap();
    assert!(f >= 0.999, "{f}");
}

#[test]
fn distribution_is_identical_across_thread_counts() {
    let noise = NoiseModel::Gaussian { mean: 0.2, sigma: 0.7 };
    let branches = [
        Branch::new("a", amp(0.6), 0.1, noise),
        Branch::new("b", amp(0.8), 0.0, NoiseModel::StandardGumbel),
        Branch::new(
            "c",
            amp(0.3),
            -0.2,
            NoiseModel::Cascade {
                n_stages: 3,
                per_stage_sigma: 0.5,
            },
        ),
    ];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| outcome_distribution(&branches, 20_000, 99, 1.0).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn trial_outcomes_match_sequential_replay() {
    let branches = [
        Branch::new("a", amp(1.0), 0.0, NoiseModel::StandardGumbel),
        Branch::new("b", amp(1.0), 0.0, NoiseModel::StandardGumbel),
    ];
    let counts = outcome_distribution(&branches, 500, 12, 1.0).unwrap();
    let mut replay = [0u64; 2];
    for t in 0..500 {
        let mut rng = trial_rng(12, t);
        let scores: Vec<f64> = branches
            .iter()
            .map(|b| b.base_log_weight(1.0) - 2.0 * b.noise.sample(&mut rng, 1.0))
            .collect();
        replay[if scores[1] > scores[0] { 1 } else { 0 }] += 1;
    }
    assert_eq!(counts.counts, replay.to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realized_branch_invariant_under_common_shift(
        s in prop::collection::vec(-5.0..5.0f64, 2..6),
        shift in -20.0..20.0f64,
        seed in any::<u64>(),
    ) {
        let make = |offset: f64| -> Vec<Branch> {
            s.iter()
                .enumerate()
                .map(|(i, &v)| Branch::new(format!("b{i}"), amp(1.0), v + offset, NoiseModel::None))
                .collect()
        };
        let base = make(0.0);
        let idx = realized_index(&base, seed, 1.0).unwrap();
        let unique = s.iter().enumerate().all(|(i, &v)| i == idx || v - s[idx] > 1e-9);
        prop_assume!(unique);
        prop_assert_eq!(realized_index(&make(shift), seed, 1.0).unwrap(), idx);
    }

    #[test]
    fn same_seed_same_outcome(seed in any::<u64>(), sigma in 0.1..3.0f64) {
        let noise = NoiseModel::Gaussian { mean: 0.0, sigma };
        let branches = [Branch::new("x", amp(1.0), 0.0, noise), Branch::new("y", amp(0.7), 0.1, noise)];
        prop_assert_eq!(realized_index(&branches, seed, 1.0).unwrap(), realized_index(&branches, seed, 1.0).unwrap());
    }
}
