use complex_action::tape::{
    count_substructures, expand, fit_complex_exponential, predict_counts, FitOptions, SubstitutionSystem,
    DEFAULT_OUTPUT_CAP,
};
use complex_action::Complex64;
use proptest::prelude::*;

const PHI: f64 = 1.618_033_988_749_895;

fn symbol_patterns(sys: &SubstitutionSystem) -> Vec<Vec<u8>> {
    (0..sys.symbol_count() as u8).map(|s| vec![s]).collect()
}

fn fib(n: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

#[test]
fn fibonacci_counts_match_prediction_and_closed_form() {
    let sys = SubstitutionSystem::fibonacci();
    let patterns = symbol_patterns(&sys);
    for n in 0..=30 {
        let predicted = predict_counts(&sys, n).unwrap();
        // After n generations from "A": #A = F(n+1), #B = F(n).
        assert_eq!(predicted, vec![fib(n + 1), fib(n)]);
        let word = expand(&sys, n, DEFAULT_OUTPUT_CAP).unwrap();
        assert_eq!(word.len() as u128, fib(n + 2));
        let counted = count_substructures(&word, &patterns).unwrap();
        assert_eq!(
            counted.iter().map(|&c| c as u128).collect::<Vec<_>>(),
            predicted,
            "n = {n}"
        );
    }
}

#[test]
fn every_builtin_counts_match_prediction() {
    for name in SubstitutionSystem::BUILTIN_NAMES {
        let sys = SubstitutionSystem::builtin(name).unwrap();
        let patterns = symbol_patterns(&sys);
        for n in 0..=40 {
            let Ok(word) = expand(&sys, n, 2_000_000) else { break };
            let counted = count_substructures(&word, &patterns).unwrap();
            let predicted = predict_counts(&sys, n).unwrap();
            assert_eq!(
                counted.iter().map(|&c| c as u128).collect::<Vec<_>>(),
                predicted,
                "{name} n = {n}"
            );
        }
    }
}

#[test]
fn fibonacci_growth_is_golden() {
    let sys = SubstitutionSystem::fibonacci();
    assert!((sys.dominant_eigenvalue() - Complex64::new(PHI, 0.0)).norm() < 1e-12);
    let counts: Vec<f64> = (0..30).map(|n| predict_counts(&sys, n).unwrap()[0] as f64).collect();
    let fit = fit_complex_exponential(&counts, &FitOptions::default()).unwrap();
    assert!(
        (fit.lambda.re - PHI).abs() < 1e-6 && fit.lambda.im.abs() < 1e-6,
        "{}",
        fit.lambda
    );
    assert!(fit.residual < 1e-6);
    assert_eq!(fit.order, 2);
    let ratio = counts[29] / counts[28];
    assert!((ratio - PHI).abs() < 1e-10);
}

#[test]
fn rotating_sequence_recovers_complex_root() {
    let s = [1.0, 1.0, 0.0, -2.0, -4.0, -4.0, 0.0, 8.0];
    let fit = fit_complex_exponential(&s, &FitOptions::default()).unwrap();
    assert!((fit.lambda.norm() - 2f64.sqrt()).abs() < 1e-9);
    assert!((fit.lambda.arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    assert!((fit.coefficient - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    assert!(fit.residual < 1e-9);
}

#[test]
fn swap_system_oscillates_without_growth() {
    let sys = SubstitutionSystem::swap();
    assert!(sys.is_non_expanding());
    let mut ev = sys.eigenvalues();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    assert!((ev[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    assert!((ev[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    let a_counts: Vec<u128> = (0..10).map(|n| predict_counts(&sys, n).unwrap()[0]).collect();
    assert_eq!(a_counts, vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
    for n in 0..10 {
        assert_eq!(expand(&sys, n, 10).unwrap().len(), 1);
    }
    let fit = fit_complex_exponential(
        &a_counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
        &FitOptions {
            background: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((fit.lambda.norm() - 1.0).abs() < 1e-9);
    assert!((fit.offset - 0.5).abs() < 1e-9);
}

#[test]
fn length_ratio_tracks_dominant_eigenvalue() {
    for name in ["fibonacci", "thue-morse", "period-doubling", "tribonacci"] {
        let sys = SubstitutionSystem::builtin(name).unwrap();
        let dominant = sys.dominant_eigenvalue();
        assert!(dominant.im.abs() < 1e-12);
        let l = |n| sys.projected_length(n) as f64;
        let ratio = l(25) / l(24);
        assert!(
            (ratio / dominant.re - 1.0).abs() < 0.01,
            "{name}: {ratio} vs {dominant}"
        );
    }
}

#[test]
fn tribonacci_has_complex_subdominant_pair() {
    let ev = SubstitutionSystem::tribonacci().eigenvalues();
    let complex: Vec<_> = ev.iter().filter(|z| z.im.abs() > 1e-6).collect();
    assert_eq!(complex.len(), 2);
    assert!((complex[0] - complex[1].conj()).norm() < 1e-10);
    assert!(complex[0].norm() < 1.0);
}

#[test]
fn output_cap_is_enforced_before_building() {
    let sys = SubstitutionSystem::fibonacci();
    let err = expand(&sys, 60, DEFAULT_OUTPUT_CAP).unwrap_err();
    assert!(matches!(err, complex_action::Error::OutputTooLarge { .. }));
}

#[test]
fn parallel_counting_matches_sequential_scan() {
    let sys = SubstitutionSystem::thue_morse();
    let word = expand(&sys, 19, DEFAULT_OUTPUT_CAP).unwrap();
    assert!(word.len() > 1 << 18);
    let patterns = vec![vec![0, 0], vec![0, 1, 1, 0], vec![1, 1, 1]];
    let counted = count_substructures(&word, &patterns).unwrap();
    for (p, c) in patterns.iter().zip(&counted) {
        let naive = word.windows(p.len()).filter(|w| *w == p.as_slice()).count() as u64;
        assert_eq!(naive, *c);
    }
    // Thue–Morse is cube-free.
    assert_eq!(counted[2], 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_seed_word_keeps_dominant_growth(len in 1usize..40, seed in any::<u64>()) {
        let sys = SubstitutionSystem::fibonacci().with_random_seed(len, seed).unwrap();
        prop_assert_eq!(sys.seed_word().len(), len);
        let totals: Vec<f64> = (0..24).map(|n| sys.projected_length(n) as f64).collect();
        let fit = fit_complex_exponential(&totals, &FitOptions::default()).unwrap();
        prop_assert!((fit.lambda.re - PHI).abs() < 1e-6 && fit.lambda.im.abs() < 1e-6);
    }

    #[test]
    fn counts_are_linear_in_the_seed_census(a in 0usize..6, b in 0usize..6, n in 0usize..12) {
        prop_assume!(a + b > 0);
        let mut seed = vec![0u8; a];
        seed.extend(std::iter::repeat_n(1u8, b));
        let sys = SubstitutionSystem::fibonacci().with_seed_word(seed).unwrap();
        let from_a = predict_counts(&SubstitutionSystem::fibonacci(), n).unwrap();
        let from_b = predict_counts(&SubstitutionSystem::fibonacci().with_seed_word(vec![1]).unwrap(), n).unwrap();
        let got = predict_counts(&sys, n).unwrap();
        for k in 0..2 {
            prop_assert_eq!(got[k], a as u128 * from_a[k] + b as u128 * from_b[k]);
        }
    }
}
