//! Scenario runners. Each returns its summary, invariant checks, CSV tables
//! and the columns it contributes to a sweep row.

use complex_action::classical::{
    find_classical_solutions, saddle_shift_order, select_realized_solution, SolverOptions,
};
use complex_action::propagator::{amplitudes_from, brute_force_amplitude, total_norm, Construction, PotentialField};
use complex_action::scenarios::{
    damping_ratio, higgs_suppression, interference_pattern, two_beam_visibility, visibility,
};
use complex_action::selection::{born_probabilities, dominance_ratio, outcome_distribution};
use complex_action::tape::{
    count_substructures, expand, fit_complex_exponential, predict_counts, FitOptions, MIN_FIT_GENERATIONS,
};
use complex_action::{weight, Complex64, ComplexPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    potential_from, ClassicalParams, DoubleSlitParams, HiggsParams, MeasurementParams, Params, PropagatorParams,
    ScenarioConfig, TapeParams,
};
use crate::error::{CliError, CliResult};
use crate::output::{num, Check, Table};

/// Everything one scenario run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Named values for this run's row in a sweep table.
    pub sweep_columns: Vec<(&'static str, String)>,
}

/// Runs the configured scenario on the current rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    match &cfg.params {
        Params::PropagatorCheck(p) => propagator_check(p, cfg.seed),
        Params::ClassicalSelect(p) => classical_select(p, cfg.seed),
        Params::Measurement(p) => measurement(p, cfg.seed),
        Params::DoubleSlit(p) => double_slit(p),
        Params::HiggsToy(p) => higgs_toy(p),
        Params::Tape(p) => tape(p, cfg.seed),
    }
}

fn core(e: complex_action::Error) -> CliError {
    CliError::from_core(e, "params.")
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Uniform coefficients in `[-scale, scale]`, real then imaginary part for
/// each power, from a `ChaCha8Rng` seeded with the run seed.
pub fn random_potential(seed: u64, degree: usize, scale: f64) -> ComplexPotential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..=degree)
        .map(|_| (rng.random_range(-scale..=scale), rng.random_range(-scale..=scale)))
        .collect();
    ComplexPotential::new(&coeffs).expect("degree validated")
}

fn propagator_check(p: &PropagatorParams, seed: u64) -> CliResult<Outcome> {
    let cfg = p.lattice.to_config("params.lattice")?;
    let pot = match &p.potential {
        Some(c) => potential_from(c, "params.potential")?,
        None => random_potential(seed, p.random_degree, p.random_scale),
    };
    let field = PotentialField::new(&cfg, &pot);
    let n = cfg.n_x;
    let cap = p.cap as u128;

    let fast: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|x_i| amplitudes_from(x_i, &cfg, &field, &[], Construction::ActionFaithful))
        .collect::<complex_action::Result<_>>()
        .map_err(core)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |f| (i, f))).collect();
    let brute: Vec<Complex64> = pairs
        .par_iter()
        .map(|&(i, f)| brute_force_amplitude(i, f, &cfg, &field, &[], cap))
        .collect::<complex_action::Result<_>>()
        .map_err(core)?;

    let mut table = Table::new(
        "amplitudes.csv",
        &[
            "x_i",
            "x_f",
            "brute_re",
            "brute_im",
            "transfer_re",
            "transfer_im",
            "abs_diff",
        ],
    );
    let mut max_abs = 0.0f64;
    let mut max_scaled = 0.0f64;
    for (&(i, f), b) in pairs.iter().zip(&brute) {
        let t = fast[i][f];
        let d = (b - t).norm();
        max_abs = max_abs.max(d);
        max_scaled = max_scaled.max(d / b.norm().max(1.0));
        table.push(vec![
            i.to_string(),
            f.to_string(),
            num(b.re),
            num(b.im),
            num(t.re),
            num(t.im),
            num(d),
        ]);
    }
    let mut checks = vec![Check::new(
        "oracle_agreement",
        max_scaled <= p.tolerance,
        format!(
            "max |brute − transfer|/max(1,|brute|) = {max_scaled:e}, tolerance {:e}",
            p.tolerance
        ),
    )];
    let mut tables = vec![table];
    let mut summary = json!({
        "potential": pot.coefficients().iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "n_pairs": pairs.len(),
        "paths_per_pair": (n as u128).pow(cfg.n_t.saturating_sub(1) as u32).to_string(),
        "max_abs_diff": max_abs,
        "max_scaled_diff": max_scaled,
    });
    let mut unitarity = None;
    if p.unitarity {
        let real = PotentialField::new(&cfg, &pot.real_part());
        let norms: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x_i| total_norm(x_i, &cfg, &real, Construction::SplitStep))
            .collect::<complex_action::Result<_>>()
            .map_err(core)?;
        let dev = norms.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let mut t = Table::new("norms.csv", &["x_i", "split_step_norm"]);
        for (i, v) in norms.iter().enumerate() {
            t.push(vec![i.to_string(), num(*v)]);
        }
        tables.push(t);
        checks.push(Check::new(
            "split_step_unitarity",
            dev <= 1e-10,
            format!("max |Σ_f |K|² − 1| = {dev:e} for the real part of the potential"),
        ));
        summary["split_step_max_norm_deviation"] = json!(dev);
        unitarity = Some(dev);
    }
    Ok(Outcome {
        summary,
        checks,
        tables,
        sweep_columns: vec![
            ("max_scaled_diff", num(max_scaled)),
            ("split_step_norm_deviation", unitarity.map(num).unwrap_or_default()),
        ],
    })
}

fn classical_select(p: &ClassicalParams, seed: u64) -> CliResult<Outcome> {
    let cfg = p.lattice.to_config("params.lattice")?;
    let pot = potential_from(&p.potential, "params.potential")?.with_imag_scaled(p.imag_scale);
    let opts = SolverOptions {
        n_seeds: p.n_seeds,
        perturbation: p.perturbation,
        tolerance: p.tolerance,
        max_iterations: p.max_iterations,
        dedup_tolerance: p.dedup_tolerance,
        seed,
        ..Default::default()
    };
    let report = find_classical_solutions((p.boundary[0], p.boundary[1]), &cfg, &pot, &opts).map_err(core)?;
    let sols = &report.solutions;
    let realized = select_realized_solution(sols).map_err(core)?;
    let chosen = &sols[realized];
    let runner_up = sols
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != realized)
        .map(|(_, s)| s.action.s_i)
        .fold(f64::INFINITY, f64::min);
    let gap = if runner_up.is_finite() {
        runner_up - chosen.action.s_i
    } else {
        f64::NAN
    };

    let mut table = Table::new(
        "solutions.csv",
        &[
            "solution",
            "seed_index",
            "s_r",
            "s_i",
            "min_position",
            "max_position",
            "residual_norm",
            "realized",
        ],
    );
    let mut paths = Table::new("paths.csv", &["solution", "step", "t", "x"]);
    for (k, s) in sols.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            s.seed_index.to_string(),
            num(s.action.s_r),
            num(s.action.s_i),
            num(s.min_position()),
            num(s.max_position()),
            num(s.residual_norm),
            (k == realized).to_string(),
        ]);
        for (j, x) in s.positions.iter().enumerate() {
            paths.push(vec![k.to_string(), j.to_string(), num(j as f64 * cfg.dt), num(*x)]);
        }
    }
    let worst = sols.iter().map(|s| s.residual_norm).fold(0.0, f64::max);
    let mut checks = vec![
        Check::new(
            "residuals_within_tolerance",
            worst <= p.tolerance,
            format!("largest residual {worst:e}, tolerance {:e}", p.tolerance),
        ),
        Check::new(
            "realized_minimizes_imaginary_action",
            sols.iter().all(|s| s.action.s_i >= chosen.action.s_i),
            format!("solution {realized} with s_i = {}", chosen.action.s_i),
        ),
    ];
    let mut summary = json!({
        "n_solutions": sols.len(),
        "n_failed_seeds": report.failures.len(),
        "realized": realized,
        "realized_s_r": chosen.action.s_r,
        "realized_s_i": chosen.action.s_i,
        "realized_max_position": chosen.max_position(),
        "s_i_gap_to_runner_up": if gap.is_finite() { json!(gap) } else { Value::Null },
        "weight_ratio_runner_up": if gap.is_finite() { json!(weight(gap, cfg.hbar)) } else { Value::Null },
        "solutions": sols.iter().map(|s| json!({
            "s_r": s.action.s_r,
            "s_i": s.action.s_i,
            "min_position": s.min_position(),
            "max_position": s.max_position(),
        })).collect::<Vec<_>>(),
    });
    let mut tables = vec![table, paths];
    if let Some(ss) = &p.saddle_shift {
        let lattice = match &ss.lattice {
            Some(l) => l.to_config("params.saddle_shift.lattice")?,
            None => cfg,
        };
        let base = potential_from(&ss.potential, "params.saddle_shift.potential")?;
        let direction = potential_from(&ss.direction, "params.saddle_shift.direction")?;
        let fit = saddle_shift_order(
            (ss.boundary[0], ss.boundary[1]),
            &lattice,
            &base,
            &direction,
            &ss.epsilons,
            &SolverOptions {
                seed,
                ..Default::default()
            },
        )
        .map_err(core)?;
        let mut t = Table::new("saddle_shift.csv", &["epsilon", "action_shift"]);
        for (e, s) in &fit.points {
            t.push(vec![num(*e), num(*s)]);
        }
        tables.push(t);
        summary["saddle_shift"] = json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "dropped_epsilons": fit.dropped,
        });
        if let Some([lo, hi]) = ss.slope_range {
            checks.push(Check::new(
                "saddle_shift_slope",
                (lo..=hi).contains(&fit.slope),
                format!("slope {} in [{lo}, {hi}]", fit.slope),
            ));
        }
    }
    Ok(Outcome {
        summary,
        checks,
        tables,
        sweep_columns: vec![
            ("n_solutions", sols.len().to_string()),
            ("realized", realized.to_string()),
            ("realized_s_i", num(chosen.action.s_i)),
            ("realized_max_position", num(chosen.max_position())),
        ],
    })
}

fn measurement(p: &MeasurementParams, seed: u64) -> CliResult<Outcome> {
    let branches = p.to_branches();
    let counts = outcome_distribution(&branches, p.n_trials, seed, p.hbar).map_err(core)?;
    let born = born_probabilities(&branches);
    let freqs = counts.frequencies();
    let n = p.n_trials as f64;
    let mut table = Table::new(
        "outcomes.csv",
        &["branch", "label", "born_probability", "count", "frequency", "z_score"],
    );
    let mut z_scores = Vec::new();
    for (k, b) in branches.iter().enumerate() {
        let sd = (born[k] * (1.0 - born[k]) / n).sqrt();
        let z = if sd > 0.0 { (freqs[k] - born[k]) / sd } else { f64::NAN };
        z_scores.push(if z.is_finite() { json!(z) } else { Value::Null });
        table.push(vec![
            k.to_string(),
            b.label.clone(),
            num(born[k]),
            counts.counts[k].to_string(),
            num(freqs[k]),
            if z.is_finite() { num(z) } else { String::new() },
        ]);
    }
    // Most frequent outcome; ties go to the earlier branch.
    let favored = (0..branches.len()).fold(0, |best, k| {
        if counts.counts[k] > counts.counts[best] {
            k
        } else {
            best
        }
    });
    let dominance = if branches.len() >= 2 {
        Some(dominance_ratio(&branches, p.hbar).map_err(core)?)
    } else {
        None
    };

    let total: u64 = counts.counts.iter().sum();
    let mut checks = vec![Check::new(
        "counts_sum_to_trials",
        total == p.n_trials,
        format!("{total} of {} trials counted", p.n_trials),
    )];
    let mut tables = vec![table];
    let mut summary = json!({
        "labels": counts.labels,
        "counts": counts.counts,
        "frequencies": freqs,
        "born_probabilities": born,
        "z_scores": z_scores,
        "favored": branches[favored].label,
        "dominance_ratio": dominance,
    });
    if !p.dominance_gaps.is_empty() {
        let rows = complex_action::scenarios::dominance_sweep(&p.dominance_gaps, p.hbar).map_err(core)?;
        let mut t = Table::new("dominance.csv", &["gap", "weight_ratio"]);
        for (g, r) in &rows {
            t.push(vec![num(*g), num(*r)]);
        }
        tables.push(t);
        let mut sorted = rows.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        checks.push(Check::new(
            "dominance_monotone",
            sorted.windows(2).all(|w| w[1].1 <= w[0].1),
            "weight ratio is non-increasing in the gap",
        ));
        summary["dominance"] = json!(rows);
    }
    Ok(Outcome {
        summary,
        checks,
        tables,
        sweep_columns: vec![
            ("favored", branches[favored].label.clone()),
            ("favored_frequency", num(freqs[favored])),
            ("dominance_ratio", dominance.map(num).unwrap_or_default()),
        ],
    })
}

fn double_slit(p: &DoubleSlitParams) -> CliResult<Outcome> {
    let setup = p.to_setup()?;
    let pattern = interference_pattern(&setup).map_err(core)?;
    let window = match p.screen_window {
        Some([a, b]) => a..b,
        None => setup.default_window(),
    };
    let vis = visibility(&pattern.intensity, window.clone()).map_err(|e| match e {
        complex_action::Error::Numerical(m) => CliError::Numerical(m),
        other => core(other),
    })?;
    let hbar = setup.lattice.hbar;
    let r = damping_ratio(setup.accrued_s_i(), hbar);
    let mut table = Table::new("screen.csv", &["site", "x", "intensity", "intensity_a", "intensity_b"]);
    for k in 0..setup.lattice.n_x {
        table.push(vec![
            k.to_string(),
            num(setup.lattice.position(k)),
            num(pattern.intensity[k]),
            num(pattern.intensity_a[k]),
            num(pattern.intensity_b[k]),
        ]);
    }
    let finite = pattern
        .intensity
        .iter()
        .chain(&pattern.intensity_a)
        .chain(&pattern.intensity_b)
        .all(|v| v.is_finite() && *v >= 0.0);
    let checks = vec![
        Check::new(
            "intensity_finite",
            finite,
            "all screen intensities finite and non-negative",
        ),
        Check::new(
            "both_slits_transmit",
            !pattern.degenerate,
            if pattern.degenerate {
                "a slit delivers no amplitude"
            } else {
                "both slits reach the screen"
            },
        ),
    ];
    let summary = json!({
        "visibility": vis.value,
        "flat": vis.flat,
        "has_fringe": vis.has_fringe,
        "screen_window": [window.start, window.end],
        "degenerate": pattern.degenerate,
        "depth": setup.depth,
        "accrued_s_i": setup.accrued_s_i(),
        "damping_ratio": r,
        "point_branch_visibility": two_beam_visibility(r),
        "total_intensity_a": pattern.intensity_a.iter().sum::<f64>(),
        "total_intensity_b": pattern.intensity_b.iter().sum::<f64>(),
    });
    Ok(Outcome {
        summary,
        checks,
        tables: vec![table],
        sweep_columns: vec![
            ("visibility", num(vis.value)),
            ("has_fringe", vis.has_fringe.to_string()),
            ("damping_ratio", num(r)),
            ("point_branch_visibility", num(two_beam_visibility(r))),
        ],
    })
}

fn higgs_toy(p: &HiggsParams) -> CliResult<Outcome> {
    let setup = p.to_setup()?;
    let report = higgs_suppression(&setup).map_err(core)?;
    let dt = setup.duration / setup.n_t as f64;
    let mut table = Table::new("branches.csv", &["branch", "label", "field_norm", "s_i", "selected"]);
    let mut histories = Table::new("histories.csv", &["branch", "label", "step", "t", "phi"]);
    let mut consistent = true;
    for (k, b) in report.branches.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            b.label.clone(),
            num(b.field_norm),
            num(b.s_i),
            (k == report.selected).to_string(),
        ]);
        for (j, phi) in b.history.iter().enumerate() {
            histories.push(vec![
                k.to_string(),
                b.label.clone(),
                j.to_string(),
                num(j as f64 * dt),
                num(*phi),
            ]);
        }
        consistent &= (b.s_i - setup.m2_i * b.field_norm).abs() <= 1e-9 * b.s_i.abs().max(1.0);
    }
    let checks = vec![Check::new(
        "imaginary_action_is_m2_i_times_field_norm",
        consistent,
        "S_I = m2_i·Σ dt·φ² on every branch",
    )];
    let summary = json!({
        "selected": report.selected,
        "selected_label": report.selected_label(),
        "delta_s_i": report.delta_s_i,
        "weight_ratio": report.weight_ratio,
        "branches": report.branches.iter().map(|b| json!({
            "label": b.label,
            "field_norm": b.field_norm,
            "s_i": b.s_i,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        summary,
        checks,
        tables: vec![table, histories],
        sweep_columns: vec![
            ("selected", report.selected_label().to_string()),
            ("delta_s_i", num(report.delta_s_i)),
            ("weight_ratio", num(report.weight_ratio)),
        ],
    })
}

fn tape(p: &TapeParams, seed: u64) -> CliResult<Outcome> {
    let sys = p.to_system(seed)?;
    let patterns = p.pattern_words(&sys)?;
    let cap = p.output_cap as u128;
    let projected = sys.projected_length(p.generations);
    if projected > cap {
        return Err(CliError::Cap(format!(
            "generation {} would hold {projected} symbols, above the output cap of {cap}",
            p.generations
        )));
    }
    let words: Vec<Vec<u8>> = (0..=p.generations)
        .map(|g| expand(&sys, g, cap))
        .collect::<complex_action::Result<_>>()
        .map_err(core)?;
    let words: Vec<&[u8]> = words.iter().map(|w| w.as_slice()).collect();
    let pattern_words: Vec<Vec<u8>> = patterns.iter().map(|(_, w)| w.clone()).collect();

    let mut table = Table::new("counts.csv", &["generation", "length", "pattern", "count", "predicted"]);
    let mut all_match = true;
    let mut lengths = Vec::new();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); patterns.len()];
    for (g, word) in words.iter().enumerate() {
        let counts = count_substructures(word, &pattern_words).map_err(core)?;
        let predicted = predict_counts(&sys, g).map_err(core)?;
        let length: u128 = predicted.iter().sum();
        all_match &= length == word.len() as u128;
        lengths.push(word.len() as f64);
        for (k, ((text, w), c)) in patterns.iter().zip(&counts).enumerate() {
            let pred = if w.len() == 1 {
                Some(predicted[w[0] as usize])
            } else {
                None
            };
            if let Some(pv) = pred {
                all_match &= pv == *c as u128;
            }
            series[k].push(*c as f64);
            table.push(vec![
                g.to_string(),
                word.len().to_string(),
                text.clone(),
                c.to_string(),
                pred.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    let opts = FitOptions {
        background: p.fit_background,
        ..Default::default()
    };
    let fit_json = |name: &str, s: &[f64]| -> Value {
        if s.len() < MIN_FIT_GENERATIONS {
            return json!({ "series": name, "error": format!("needs at least {MIN_FIT_GENERATIONS} generations") });
        }
        match fit_complex_exponential(s, &opts) {
            Ok(f) => json!({
                "series": name,
                "lambda": complex_json(f.lambda),
                "modulus": f.lambda.norm(),
                "argument": f.lambda.arg(),
                "coefficient": complex_json(f.coefficient),
                "offset": f.offset,
                "residual": f.residual,
                "order": f.order,
            }),
            Err(e) => json!({ "series": name, "error": e.to_string() }),
        }
    };
    let length_fit = fit_json("length", &lengths);
    let mut fits = vec![length_fit.clone()];
    for ((text, _), s) in patterns.iter().zip(&series) {
        fits.push(fit_json(text, s));
    }
    let dominant = sys.dominant_eigenvalue();
    let summary = json!({
        "alphabet": sys.alphabet().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "seed_word": sys.render(sys.seed_word()),
        "matrix": sys.matrix(),
        "eigenvalues": sys.eigenvalues().into_iter().map(complex_json).collect::<Vec<_>>(),
        "dominant_eigenvalue": complex_json(dominant),
        "final_length": words.last().map_or(0, |w| w.len()),
        "fits": fits,
    });
    let checks = vec![Check::new(
        "counts_match_prediction",
        all_match,
        "symbol counts and lengths equal the incidence-matrix prediction",
    )];
    let lambda = |i: usize| {
        length_fit["lambda"]
            .get(i)
            .and_then(Value::as_f64)
            .map(num)
            .unwrap_or_default()
    };
    Ok(Outcome {
        summary,
        checks,
        tables: vec![table],
        sweep_columns: vec![
            ("final_length", words.last().map_or(0, |w| w.len()).to_string()),
            ("lambda_re", lambda(0)),
            ("lambda_im", lambda(1)),
        ],
    })
}
