//! Measurement as enhancement.
//!
//! Each outcome branch carries an amplitude, a base imaginary action and a
//! noise model for the imaginary action its future accrues. The realized
//! outcome is the branch with the largest log-weight
//! `ln|A|² − 2·(S_I,base + S_I,future)/ħ`.
//!
//! Randomness is always explicit. A single realization draws from a
//! `ChaCha8Rng` seeded with the given 64-bit seed; trial `t` of
//! [`outcome_distribution`] uses the master seed with ChaCha stream `t`.
//! Branches draw in list order from that generator.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel, Normal};
use rayon::prelude::*;

use crate::action::log_weight;
use crate::error::{Error, Result};

/// Distribution of a branch's future imaginary action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    Gumbel {
        location: f64,
        scale: f64,
    },
    /// Sum of `n_stages` independent `N(0, per_stage_sigma²)` draws.
    Cascade {
        n_stages: u32,
        per_stage_sigma: f64,
    },
    /// `S_I,future = −(ħ/2)·G` with `G ~ Gumbel(0, 1)`, so the log-weight
    /// of the branch is perturbed by exactly one standard Gumbel variate.
    StandardGumbel,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, "must be finite"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be finite and > 0, got {v}")))
            }
        };
        match *self {
            NoiseModel::None | NoiseModel::StandardGumbel => Ok(()),
            NoiseModel::Gaussian { mean, sigma } => {
                finite("noise.mean", mean)?;
                positive("noise.sigma", sigma)
            }
            NoiseModel::Gumbel { location, scale } => {
                finite("noise.location", location)?;
                positive("noise.scale", scale)
            }
            NoiseModel::Cascade {
                n_stages,
                per_stage_sigma,
            } => {
                if n_stages == 0 {
                    return Err(Error::config("noise.n_stages", "must be at least 1"));
                }
                positive("noise.per_stage_sigma", per_stage_sigma)
            }
        }
    }

    /// One draw of the future imaginary action.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, hbar: f64) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { mean, sigma } => Normal::new(mean, sigma).expect("validated sigma").sample(rng),
            NoiseModel::Gumbel { location, scale } => {
                Gumbel::new(location, scale).expect("validated scale").sample(rng)
            }
            NoiseModel::Cascade {
                n_stages,
                per_stage_sigma,
            } => {
                let stage = Normal::new(0.0, per_stage_sigma).expect("validated sigma");
                (0..n_stages).map(|_| stage.sample(rng)).sum()
            }
            NoiseModel::StandardGumbel => {
                let g: f64 = Gumbel::new(0.0, 1.0).expect("unit scale").sample(rng);
                -0.5 * hbar * g
            }
        }
    }
}

/// One possible measurement result.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: String,
    pub amplitude: Complex64,
    pub base_s_i: f64,
    pub noise: NoiseModel,
}

impl Branch {
    pub fn new(label: impl Into<String>, amplitude: Complex64, base_s_i: f64, noise: NoiseModel) -> Self {
        Self {
            label: label.into(),
            amplitude,
            base_s_i,
            noise,
        }
    }

    /// `ln|A|² − 2·S_I,base/ħ`; `−∞` for a zero amplitude.
    pub fn base_log_weight(&self, hbar: f64) -> f64 {
        self.amplitude.norm_sqr().ln() + log_weight(self.base_s_i, hbar)
    }
}

/// Checks amplitudes, base actions, noise parameters and label uniqueness.
pub fn validate_branches(branches: &[Branch]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, b) in branches.iter().enumerate() {
        if !(b.amplitude.re.is_finite() && b.amplitude.im.is_finite()) {
            return Err(Error::config(format!("branches[{i}].amplitude"), "must be finite"));
        }
        if !b.base_s_i.is_finite() {
            return Err(Error::config(format!("branches[{i}].base_s_i"), "must be finite"));
        }
        b.noise.validate().map_err(|e| match e {
            Error::Config { field, reason } => Error::config(format!("branches[{i}].{field}"), reason),
            other => other,
        })?;
        if !seen.insert(b.label.as_str()) {
            return Err(Error::config(
                format!("branches[{i}].label"),
                format!("duplicate label {:?}", b.label),
            ));
        }
    }
    Ok(())
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(Error::config("hbar", "must be finite and > 0"))
    }
}

/// One draw of a noise model's future imaginary action from `seed`.
pub fn sample_future_si(noise: &NoiseModel, seed: u64, hbar: f64) -> f64 {
    noise.sample(&mut ChaCha8Rng::seed_from_u64(seed), hbar)
}

fn realize_with<R: Rng + ?Sized>(branches: &[Branch], rng: &mut R, hbar: f64) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, b) in branches.iter().enumerate() {
        let future = b.noise.sample(rng, hbar);
        let score = b.amplitude.norm_sqr().ln() + log_weight(b.base_s_i + future, hbar);
        if i == 0 || score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Index of the branch realized under `seed`; ties go to the earlier branch.
pub fn realized_index(branches: &[Branch], seed: u64, hbar: f64) -> Result<usize> {
    if branches.is_empty() {
        return Err(Error::Empty("no branches"));
    }
    check_hbar(hbar)?;
    validate_branches(branches)?;
    Ok(realize_with(branches, &mut ChaCha8Rng::seed_from_u64(seed), hbar))
}

/// Label of the branch realized under `seed`.
pub fn realized_outcome(branches: &[Branch], seed: u64, hbar: f64) -> Result<&str> {
    Ok(&branches[realized_index(branches, seed, hbar)?].label)
}

/// Ratio of the second-largest to the largest deterministic branch weight
/// `|A|²·exp(−2·S_I,base/ħ)`. Noise is ignored.
pub fn dominance_ratio(branches: &[Branch], hbar: f64) -> Result<f64> {
    if branches.len() < 2 {
        return Err(Error::config("branches", "dominance needs at least 2 branches"));
    }
    check_hbar(hbar)?;
    let mut lw: Vec<f64> = branches.iter().map(|b| b.base_log_weight(hbar)).collect();
    lw.sort_by(|a, b| b.total_cmp(a));
    if lw[0] == f64::NEG_INFINITY {
        return Err(Error::Numerical("all branch weights are zero".into()));
    }
    Ok((lw[1] - lw[0]).exp())
}

/// Realization counts over `n_trials` seeded trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub n_trials: u64,
}

impl OutcomeCounts {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_trials as f64).collect()
    }

    pub fn frequency_of(&self, label: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.counts[i] as f64 / self.n_trials as f64)
    }
}

/// The generator used for trial `trial` under `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Empirical outcome statistics. Trials may run on any number of workers;
/// counts are integers so the result does not depend on scheduling.
pub fn outcome_distribution(branches: &[Branch], n_trials: u64, master_seed: u64, hbar: f64) -> Result<OutcomeCounts> {
    if branches.is_empty() {
        return Err(Error::Empty("no branches"));
    }
    if n_trials == 0 {
        return Err(Error::config("n_trials", "must be at least 1"));
    }
    check_hbar(hbar)?;
    validate_branches(branches)?;
    let n = branches.len();
    let counts = (0..n_trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, t| {
                acc[realize_with(branches, &mut trial_rng(master_seed, t), hbar)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(OutcomeCounts {
        labels: branches.iter().map(|b| b.label.clone()).collect(),
        counts,
        n_trials,
    })
}

/// `|A_b|² / Σ_c |A_c|²` for every branch.
pub fn born_probabilities(branches: &[Branch]) -> Vec<f64> {
    let total: f64 = branches.iter().map(|b| b.amplitude.norm_sqr()).sum();
    branches.iter().map(|b| b.amplitude.norm_sqr() / total).collect()
}
