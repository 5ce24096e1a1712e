use complex_action::scenarios::{
    damping_ratio, dominance_sweep, higgs_suppression, interference_pattern, point_branch_pattern, suppression_ratio,
    two_beam_visibility, visibility, DoubleSlitSetup, HiggsToySetup,
};
use complex_action::weight;

#[test]
fn symmetric_slits_give_mirror_symmetric_screen() {
    let setup = DoubleSlitSetup::standard();
    let p = interference_pattern(&setup).unwrap();
    let n = p.intensity.len();
    let peak = p.intensity.iter().copied().fold(0.0, f64::max);
    for k in 0..n {
        assert!((p.intensity[k] - p.intensity[n - 1 - k]).abs() <= 1e-10 * peak);
    }
    let v = visibility(&p.intensity, setup.default_window()).unwrap();
    assert!(v.has_fringe && v.value > 0.99, "{v:?}");
}

#[test]
fn heavy_damping_leaves_single_slit_pattern() {
    let setup = DoubleSlitSetup::standard().with_accrued_s_i(20.0);
    let p = interference_pattern(&setup).unwrap();
    let peak = p.intensity_a.iter().copied().fold(0.0, f64::max);
    for (i, a) in p.intensity.iter().zip(&p.intensity_a) {
        assert!((i - a).abs() <= 1e-6 * peak);
    }
}

#[test]
fn slit_b_intensity_scales_with_damping() {
    let base = interference_pattern(&DoubleSlitSetup::standard()).unwrap();
    let damped = interference_pattern(&DoubleSlitSetup::standard().with_accrued_s_i(1.5)).unwrap();
    let r2 = damping_ratio(1.5, 1.0).powi(2);
    for (b0, b1) in base.intensity_b.iter().zip(&damped.intensity_b) {
        assert!((b1 - r2 * b0).abs() <= 1e-9 * b0.max(1e-12));
    }
    assert_eq!(base.intensity_a, damped.intensity_a);
}

#[test]
fn visibility_is_monotone_in_accrued_imaginary_action() {
    let mut last = f64::INFINITY;
    for delta in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 20.0] {
        let setup = DoubleSlitSetup::standard().with_accrued_s_i(delta);
        let p = interference_pattern(&setup).unwrap();
        let v = visibility(&p.intensity, setup.default_window()).unwrap().value;
        assert!(v <= last + 1e-12, "Δ = {delta}: {v} > {last}");
        last = v;
    }
}

#[test]
fn brief_strong_and_long_weak_damping_agree() {
    // Every slit-B path sits in the slit for all held slices, so only the
    // accrued product depth·tau·dt matters.
    let mut long = DoubleSlitSetup::standard();
    long.slit_steps = 4;
    let brief = DoubleSlitSetup { tau: 1, ..long.clone() }.with_accrued_s_i(0.8);
    let spread = DoubleSlitSetup { tau: 4, ..long }.with_accrued_s_i(0.8);
    assert!((brief.accrued_s_i() - spread.accrued_s_i()).abs() < 1e-15);
    let vis = |s: &DoubleSlitSetup| {
        let p = interference_pattern(s).unwrap();
        visibility(&p.intensity, s.default_window()).unwrap().value
    };
    assert!((vis(&brief) - vis(&spread)).abs() < 1e-8);
}

#[test]
fn action_faithful_and_unitary_constructions_both_show_decay() {
    let mut small = DoubleSlitSetup::standard();
    small.lattice.n_x = 65;
    small.lattice.x_min = -8.0;
    small.lattice.n_t = 40;
    small.slit_time = 25;
    small.source = 32;
    small.window_a = vec![28];
    small.window_b = vec![36];
    for construction in [
        complex_action::propagator::Construction::ActionFaithful,
        complex_action::propagator::Construction::UnitaryLeftPoint,
    ] {
        let at = |d: f64| {
            let s = DoubleSlitSetup {
                construction,
                ..small.clone()
            }
            .with_accrued_s_i(d);
            let p = interference_pattern(&s).unwrap();
            p.intensity_b.iter().sum::<f64>()
        };
        let ratio = at(2.0) / at(0.0);
        assert!((ratio - (-4.0f64).exp()).abs() < 1e-10, "{construction:?}: {ratio}");
    }
}

#[test]
fn point_branch_visibility_matches_two_beam_formula() {
    for delta in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let r = damping_ratio(delta, 1.0);
        let pattern = point_branch_pattern(r, 360);
        let v = visibility(&pattern, 0..360).unwrap().value;
        assert!((v - two_beam_visibility(r)).abs() < 1e-6, "Δ = {delta}");
    }
    let v1 = two_beam_visibility((-1.0f64).exp());
    assert!((v1 - 0.648_054).abs() < 1e-6, "{v1}");
}

#[test]
fn dominance_sweep_values() {
    let rows = dominance_sweep(&[0.0, 0.5, 10.0], 1.0).unwrap();
    assert_eq!(rows[0], (0.0, 1.0));
    assert!((rows[1].1 - (-1.0f64).exp()).abs() < 1e-15);
    assert!((rows[2].1 - 2.061_153_622_438_558e-9).abs() < 1e-12);
}

#[test]
fn higgs_toy_selects_the_quiet_history_when_dissipative() {
    let report = higgs_suppression(&HiggsToySetup::standard(0.1, 1.0, 5.0, 100, 1.0)).unwrap();
    assert_eq!(report.selected_label(), "machine-off");
    let off = &report.branches[0];
    let on = &report.branches[1];
    assert_eq!(off.field_norm, 0.0);
    assert!(on.field_norm > 1.0);
    assert!((on.s_i - on.field_norm).abs() < 1e-10);
    assert!((report.delta_s_i - on.field_norm).abs() < 1e-10);
    let expected = suppression_ratio(on.field_norm, off.field_norm, 1.0, 1.0);
    assert!((report.weight_ratio - expected).abs() <= 1e-12 * expected);
    assert_eq!(report.weight_ratio, weight(report.delta_s_i, 1.0));
}

#[test]
fn higgs_toy_selection_flips_with_sign_and_ties_at_zero() {
    let flipped = higgs_suppression(&HiggsToySetup::standard(0.1, -1.0, 5.0, 100, 1.0)).unwrap();
    assert_eq!(flipped.selected_label(), "machine-on");
    let neutral = higgs_suppression(&HiggsToySetup::standard(0.1, 0.0, 5.0, 100, 1.0)).unwrap();
    assert_eq!(neutral.delta_s_i, 0.0);
    assert_eq!(neutral.selected_label(), "machine-off");
}

#[test]
fn higgs_selection_invariant_under_positive_rescale() {
    let base = higgs_suppression(&HiggsToySetup::standard(0.1, 0.3, 5.0, 100, 1.0)).unwrap();
    for scale in [0.01, 2.0, 50.0] {
        let scaled = higgs_suppression(&HiggsToySetup::standard(0.1, 0.3 * scale, 5.0, 100, 1.0)).unwrap();
        assert_eq!(scaled.selected, base.selected);
        assert!((scaled.delta_s_i - scale * base.delta_s_i).abs() < 1e-9 * scaled.delta_s_i);
    }
}
