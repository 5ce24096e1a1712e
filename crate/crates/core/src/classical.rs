//! Classical histories of the real action and their imaginary action.
//!
//! Stationary paths of `S_R` solve the discrete Euler–Lagrange equations
//! with fixed endpoints. They are found by damped Newton iteration from
//! several deterministic starting guesses, deduplicated, and then each is
//! assigned the full complex action under the complex potential. The
//! realized history is the one with the smallest `S_I`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::{action_of_positions, ActionValue, ComplexPotential, LatticeConfig};
use crate::error::{Error, Result};

/// Iteration controls for [`find_classical_solutions`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub n_seeds: usize,
    /// Amplitude of the sine perturbations added to the straight-line guess.
    /// `None` uses a quarter of the grid span.
    pub perturbation: Option<f64>,
    /// Max-norm residual below which a path counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Max-norm distance under which two solutions are considered the same.
    pub dedup_tolerance: f64,
    /// Master seed for the perturbation amplitudes.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_seeds: 16,
            perturbation: None,
            tolerance: 1e-10,
            max_iterations: 200,
            max_halvings: 30,
            dedup_tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Number of sine modes in a perturbed starting guess.
const GUESS_MODES: usize = 3;

/// A converged stationary path of the real action.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSolution {
    pub positions: Vec<f64>,
    pub residual_norm: f64,
    /// Full complex action evaluated along `positions`.
    pub action: ActionValue,
    /// Index of the starting guess that produced it.
    pub seed_index: usize,
}

impl ClassicalSolution {
    pub fn max_position(&self) -> f64 {
        self.positions.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_position(&self) -> f64 {
        self.positions.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub reason: String,
}

/// Solutions in seed order plus the seeds that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solutions: Vec<ClassicalSolution>,
    pub failures: Vec<SeedFailure>,
}

/// Discrete Euler–Lagrange residual at the interior points `1..n_t`:
/// `m·(x_{j+1} − 2x_j + x_{j−1})/dt² + V_R'(x_j)`.
pub fn euler_lagrange_residual(positions: &[f64], cfg: &LatticeConfig, pot: &ComplexPotential) -> Vec<f64> {
    let k = cfg.mass / (cfg.dt * cfg.dt);
    positions
        .windows(3)
        .map(|w| k * (w[2] - 2.0 * w[1] + w[0]) + pot.real_derivative(w[1]))
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

type NewtonResult = std::result::Result<(Vec<f64>, f64), String>;

/// Damped Newton iteration on the interior points; endpoints stay fixed.
/// Returns the converged path and its max-norm residual.
pub fn newton_solve(
    initial: &[f64],
    cfg: &LatticeConfig,
    pot: &ComplexPotential,
    opts: &SolverOptions,
) -> std::result::Result<(Vec<f64>, f64), String> {
    let n = initial.len();
    if n != cfg.n_t + 1 {
        return Err(format!("initial guess has {n} points, expected {}", cfg.n_t + 1));
    }
    let mut x = initial.to_vec();
    let lo = cfg.x_min - 10.0 * cfg.dx;
    let hi = cfg.x_max() + 10.0 * cfg.dx;
    let k = cfg.mass / (cfg.dt * cfg.dt);
    let interior = n.saturating_sub(2);

    let mut f = euler_lagrange_residual(&x, cfg, pot);
    for _ in 0..=opts.max_iterations {
        let res = max_norm(&f);
        if !res.is_finite() {
            return Err("residual became non-finite".into());
        }
        if res <= opts.tolerance {
            if x.iter().any(|&p| p < lo || p > hi) {
                return Err("solution escaped the grid".into());
            }
            return Ok((x, res));
        }

        let mut jac = DMatrix::<f64>::zeros(interior, interior);
        for i in 0..interior {
            jac[(i, i)] = -2.0 * k + pot.real_second_derivative(x[i + 1]);
            if i > 0 {
                jac[(i, i - 1)] = k;
            }
            if i + 1 < interior {
                jac[(i, i + 1)] = k;
            }
        }
        let rhs = DVector::from_iterator(interior, f.iter().map(|v| -v));
        let delta = jac.lu().solve(&rhs).ok_or_else(|| "singular Jacobian".to_string())?;

        let current = l2_norm(&f);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = x.clone();
            for i in 0..interior {
                trial[i + 1] += alpha * delta[i];
            }
            let ft = euler_lagrange_residual(&trial, cfg, pot);
            let norm = l2_norm(&ft);
            if norm.is_finite() && (norm < current || max_norm(&ft) <= opts.tolerance) {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((nx, nf)) => {
                x = nx;
                f = nf;
            }
            None => return Err(format!("line search stalled at residual {res:e}")),
        }
    }
    Err(format!("no convergence after {} iterations", opts.max_iterations))
}

/// Deterministic starting guess `seed_index`: the straight line for index 0,
/// otherwise the line plus low-frequency sine modes with seeded amplitudes.
pub fn initial_guess(boundary: (f64, f64), cfg: &LatticeConfig, opts: &SolverOptions, seed_index: usize) -> Vec<f64> {
    let n_t = cfg.n_t;
    let (a, b) = boundary;
    let mut x: Vec<f64> = (0..=n_t).map(|j| a + (b - a) * j as f64 / n_t as f64).collect();
    let amp = opts.perturbation.unwrap_or_else(|| 0.25 * (cfg.x_max() - cfg.x_min));
    if seed_index == 0 || amp <= 0.0 {
        return x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(seed_index as u64);
    let coeffs: Vec<f64> = (0..GUESS_MODES).map(|_| rng.random_range(-amp..amp)).collect();
    for (j, xj) in x.iter_mut().enumerate().take(n_t).skip(1) {
        let s = j as f64 / n_t as f64;
        for (m, c) in coeffs.iter().enumerate() {
            *xj += c * ((m + 1) as f64 * std::f64::consts::PI * s).sin();
        }
    }
    x
}

/// Multistart search for stationary paths of the real action between fixed
/// endpoints. Each returned solution carries the full complex action.
pub fn find_classical_solutions(
    boundary: (f64, f64),
    cfg: &LatticeConfig,
    pot: &ComplexPotential,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    cfg.validate()?;
    if opts.n_seeds == 0 {
        return Err(Error::config("n_seeds", "must be at least 1"));
    }
    if !(boundary.0.is_finite() && boundary.1.is_finite()) {
        return Err(Error::config("boundary", "endpoints must be finite"));
    }
    let real = pot.real_part();
    let outcomes: Vec<(usize, NewtonResult)> = (0..opts.n_seeds)
        .into_par_iter()
        .map(|s| {
            (
                s,
                newton_solve(&initial_guess(boundary, cfg, opts, s), cfg, &real, opts),
            )
        })
        .collect();

    let mut solutions: Vec<ClassicalSolution> = Vec::new();
    let mut failures = Vec::new();
    for (seed_index, outcome) in outcomes {
        match outcome {
            Ok((positions, residual_norm)) => {
                let duplicate = solutions.iter().any(|s| {
                    s.positions
                        .iter()
                        .zip(&positions)
                        .all(|(a, b)| (a - b).abs() < opts.dedup_tolerance)
                });
                if !duplicate {
                    let action = action_of_positions(&positions, cfg.dt, cfg.mass, pot);
                    solutions.push(ClassicalSolution {
                        positions,
                        residual_norm,
                        action,
                        seed_index,
                    });
                }
            }
            Err(reason) => {
                log::debug!("seed {seed_index} did not converge: {reason}");
                failures.push(SeedFailure { seed_index, reason });
            }
        }
    }
    if solutions.is_empty() {
        return Err(Error::NoClassicalSolution {
            attempted: opts.n_seeds,
        });
    }
    Ok(SolveReport { solutions, failures })
}

/// Index of the smallest imaginary action; ties go to the lowest index and
/// NaN never wins.
pub fn select_realized(s_i: &[f64]) -> Result<usize> {
    if s_i.is_empty() {
        return Err(Error::Empty("no solutions to select from"));
    }
    let mut best = 0;
    for (i, &v) in s_i.iter().enumerate().skip(1) {
        if v < s_i[best] || s_i[best].is_nan() && !v.is_nan() {
            best = i;
        }
    }
    Ok(best)
}

pub fn select_realized_solution(solutions: &[ClassicalSolution]) -> Result<usize> {
    let s_i: Vec<f64> = solutions.iter().map(|s| s.action.s_i).collect();
    select_realized(&s_i)
}

/// Result of an action-shift sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleShift {
    /// `(ε, |ΔS_R|)` for every ε that converged with a nonzero shift.
    pub points: Vec<(f64, f64)>,
    /// ε values dropped for non-convergence or a vanishing shift.
    pub dropped: Vec<f64>,
    /// Least-squares slope of `log|ΔS_R|` against `log ε`.
    pub slope: f64,
    pub intercept: f64,
}

/// Default ε ladder for [`saddle_shift_order`].
pub const DEFAULT_EPSILONS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Stationary path of the real potential, started from the straight line.
pub fn base_solution(
    boundary: (f64, f64),
    cfg: &LatticeConfig,
    pot_real: &ComplexPotential,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let guess = initial_guess(boundary, cfg, opts, 0);
    newton_solve(&guess, cfg, &pot_real.real_part(), opts)
        .map(|(x, _)| x)
        .map_err(Error::Numerical)
}

/// Change of the unperturbed real action when the stationary path is moved
/// by the perturbation `ε·W`, where `W` is the imaginary part of `direction`
/// read as a real potential. The ε-path is found by Newton continuation from
/// `base`.
pub fn action_shift(
    base: &[f64],
    cfg: &LatticeConfig,
    pot_real: &ComplexPotential,
    direction: &ComplexPotential,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let unperturbed = pot_real.real_part();
    let perturbed = unperturbed.plus_scaled(&direction.imag_part_as_real(), eps);
    let (path, _) = newton_solve(base, cfg, &perturbed, opts).map_err(Error::Numerical)?;
    let s0 = action_of_positions(base, cfg.dt, cfg.mass, &unperturbed).s_r;
    let s_eps = action_of_positions(&path, cfg.dt, cfg.mass, &unperturbed).s_r;
    Ok(s_eps - s0)
}

/// Fits the order at which the unperturbed real action responds to a small
/// imaginary-part perturbation of the equations of motion.
pub fn saddle_shift_order(
    boundary: (f64, f64),
    cfg: &LatticeConfig,
    pot_real: &ComplexPotential,
    direction: &ComplexPotential,
    epsilons: &[f64],
    opts: &SolverOptions,
) -> Result<SaddleShift> {
    cfg.validate()?;
    if let Some(&e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::config("epsilons", format!("must be positive, got {e}")));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("epsilons", "must be strictly decreasing"));
    }
    let base = base_solution(boundary, cfg, pot_real, opts)?;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &eps in epsilons {
        match action_shift(&base, cfg, pot_real, direction, eps, opts) {
            Ok(shift) if shift != 0.0 && shift.is_finite() => points.push((eps, shift.abs())),
            Ok(_) => {
                log::warn!("ε = {eps}: vanishing action shift, dropped");
                dropped.push(eps);
            }
            Err(e) => {
                log::warn!("ε = {eps}: {e}, dropped");
                dropped.push(eps);
            }
        }
    }
    if points.len() < 3 {
        return Err(Error::Numerical(format!(
            "order fit needs at least 3 usable ε values, got {}",
            points.len()
        )));
    }
    let (slope, intercept) = fit_line(points.iter().map(|&(e, s)| (e.ln(), s.ln())));
    Ok(SaddleShift {
        points,
        dropped,
        slope,
        intercept,
    })
}

fn fit_line(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
