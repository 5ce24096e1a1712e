//! Exact evaluation of the lattice path integral.
//!
//! Two engines compute the same amplitude `Σ_paths exp(iS[path]/ħ)` between
//! fixed endpoints:
//!
//! * [`brute_force_amplitude`] enumerates every interior path in
//!   lexicographic order. It is the oracle and is capped at
//!   [`DEFAULT_ENUMERATION_CAP`] paths.
//! * [`transfer_matrix_amplitude`] multiplies one-step matrices
//!   `T_j(k', k) = exp((i/ħ)·dt·[(m/2)((x_k' − x_k)/dt)² − V_j(x_k)])`.
//!
//! A second, unitary construction ([`Construction::SplitStep`]) applies a
//! half kinetic step, the potential phase and another half kinetic step, with
//! the kinetic factor diagonal in the discrete Fourier basis of the grid.
//!
//! Constraints restrict the allowed sites at given time slices; amplitudes of
//! disjoint constraint classes add.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::action::{ComplexPotential, LatticeConfig};
use crate::error::{Error, Result};
use crate::numeric::{ComplexKahanSum, KahanSum};

/// Default path budget of the brute-force oracle.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Largest grid the transfer-matrix engine accepts.
pub const MAX_TRANSFER_SITES: usize = 4096;

/// Grid size from which matrix-vector products are split across workers.
const PARALLEL_ROWS: usize = 256;

/// Potential values `V_j(x_k)` for every step `j < n_t` and site `k`.
///
/// Built from a [`ComplexPotential`] and optionally patched with extra
/// values on chosen sites for a range of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    n_t: usize,
    n_x: usize,
    values: Vec<Complex64>,
}

impl PotentialField {
    pub fn new(cfg: &LatticeConfig, pot: &ComplexPotential) -> Self {
        let column: Vec<Complex64> = (0..cfg.n_x).map(|k| pot.eval(cfg.position(k))).collect();
        let mut values = Vec::with_capacity(cfg.n_t * cfg.n_x);
        for _ in 0..cfg.n_t {
            values.extend_from_slice(&column);
        }
        Self {
            n_t: cfg.n_t,
            n_x: cfg.n_x,
            values,
        }
    }

    /// Adds `extra` to `V_j(x_k)` for `j ∈ steps` and `k ∈ sites`.
    pub fn with_patch(mut self, steps: Range<usize>, sites: &[usize], extra: Complex64) -> Result<Self> {
        if steps.end > self.n_t || steps.start > steps.end {
            return Err(Error::config(
                "patch.steps",
                format!("{steps:?} not within 0..{}", self.n_t),
            ));
        }
        if let Some(&k) = sites.iter().find(|&&k| k >= self.n_x) {
            return Err(Error::config("patch.sites", format!("site {k} outside grid")));
        }
        for j in steps {
            for &k in sites {
                self.values[j * self.n_x + k] += extra;
            }
        }
        Ok(self)
    }

    #[inline]
    pub fn value(&self, step: usize, site: usize) -> Complex64 {
        self.values[step * self.n_x + site]
    }

    pub fn step(&self, step: usize) -> &[Complex64] {
        &self.values[step * self.n_x..(step + 1) * self.n_x]
    }

    fn check(&self, cfg: &LatticeConfig) -> Result<()> {
        if self.n_t != cfg.n_t || self.n_x != cfg.n_x {
            return Err(Error::Dimension {
                what: "potential field vs lattice (n_t·n_x)",
                expected: cfg.n_t * cfg.n_x,
                found: self.n_t * self.n_x,
            });
        }
        Ok(())
    }

    /// Whether `Im V ≤ 0` everywhere, i.e. every path has `S_I ≥ 0`.
    pub fn is_dissipative(&self) -> bool {
        self.values.iter().all(|v| v.im <= 0.0)
    }
}

/// Restricts paths to `allowed` sites at time slice `time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathConstraint {
    pub time: usize,
    pub allowed: Vec<usize>,
}

impl PathConstraint {
    /// An empty `allowed` set is permitted and removes every path.
    pub fn new(time: usize, allowed: impl IntoIterator<Item = usize>) -> Self {
        let mut allowed: Vec<usize> = allowed.into_iter().collect();
        allowed.sort_unstable();
        allowed.dedup();
        Self { time, allowed }
    }

    /// The same site window held for every time slice in `times`.
    pub fn window(times: Range<usize>, allowed: &[usize]) -> Vec<Self> {
        times.map(|t| Self::new(t, allowed.iter().copied())).collect()
    }

    pub fn validate(&self, cfg: &LatticeConfig) -> Result<()> {
        if self.time > cfg.n_t {
            return Err(Error::config(
                "constraint.time",
                format!("{} exceeds n_t = {}", self.time, cfg.n_t),
            ));
        }
        if let Some(&k) = self.allowed.iter().find(|&&k| k >= cfg.n_x) {
            return Err(Error::config("constraint.allowed", format!("site {k} outside grid")));
        }
        Ok(())
    }
}

/// Per-time masks, the intersection of all constraints at each slice.
fn constraint_masks(cfg: &LatticeConfig, constraints: &[PathConstraint]) -> Result<Vec<Option<Vec<bool>>>> {
    let mut masks: Vec<Option<Vec<bool>>> = vec![None; cfg.n_t + 1];
    for c in constraints {
        c.validate(cfg)?;
        let mut mask = vec![false; cfg.n_x];
        for &k in &c.allowed {
            mask[k] = true;
        }
        masks[c.time] = Some(match masks[c.time].take() {
            None => mask,
            Some(prev) => prev.iter().zip(&mask).map(|(a, b)| *a && *b).collect(),
        });
    }
    Ok(masks)
}

fn check_site(cfg: &LatticeConfig, site: usize, field: &'static str) -> Result<()> {
    if site >= cfg.n_x {
        return Err(Error::config(
            field,
            format!("site {site} outside grid of {} sites", cfg.n_x),
        ));
    }
    Ok(())
}

/// Sum of `exp(iS/ħ)` over every constrained path from `x_i` to `x_f`,
/// enumerated in lexicographic order of interior sites.
pub fn brute_force_amplitude(
    x_i: usize,
    x_f: usize,
    cfg: &LatticeConfig,
    field: &PotentialField,
    constraints: &[PathConstraint],
    cap: u128,
) -> Result<Complex64> {
    cfg.validate()?;
    field.check(cfg)?;
    check_site(cfg, x_i, "x_i")?;
    check_site(cfg, x_f, "x_f")?;
    let interior = (cfg.n_t - 1) as u32;
    let paths = (cfg.n_x as u128).checked_pow(interior).unwrap_or(u128::MAX);
    if paths > cap {
        return Err(Error::OracleTooLarge { paths, cap });
    }
    let masks = constraint_masks(cfg, constraints)?;
    let admits = |t: usize, k: usize| masks[t].as_ref().is_none_or(|m| m[k]);
    if !admits(0, x_i) || !admits(cfg.n_t, x_f) {
        return Ok(Complex64::new(0.0, 0.0));
    }

    // Candidate sites per interior slice; the odometer runs over these.
    let choices: Vec<Vec<usize>> = (1..cfg.n_t)
        .map(|t| (0..cfg.n_x).filter(|&k| admits(t, k)).collect())
        .collect();
    if choices.iter().any(Vec::is_empty) {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let x: Vec<f64> = cfg.positions();
    let half_m = 0.5 * cfg.mass;
    let mut digits = vec![0usize; choices.len()];
    let mut sites = vec![x_i; cfg.n_t + 1];
    sites[cfg.n_t] = x_f;
    let mut total = ComplexKahanSum::new();
    loop {
        for (slot, (d, opts)) in digits.iter().zip(&choices).enumerate() {
            sites[slot + 1] = opts[*d];
        }
        let mut s_r = KahanSum::new();
        let mut s_i = KahanSum::new();
        for j in 0..cfg.n_t {
            let v = (x[sites[j + 1]] - x[sites[j]]) / cfg.dt;
            let pot = field.value(j, sites[j]);
            s_r.add(cfg.dt * (half_m * v * v - pot.re));
            s_i.add(-cfg.dt * pot.im);
        }
        let s = Complex64::new(s_r.value(), s_i.value());
        total.add((Complex64::i() * s / cfg.hbar).exp());

        // Advance the odometer, last slice fastest.
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(total.value());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < choices[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// How one time step is turned into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Construction {
    /// Entry-wise exponential of the discretized one-step action. Matches
    /// [`brute_force_amplitude`] path for path; not unitary.
    #[default]
    ActionFaithful,
    /// Kinetic half step, potential phase, kinetic half step. Unitary when
    /// the potential is real.
    SplitStep,
    /// Potential phase at the current slice followed by a full Fourier
    /// kinetic step. Unitary for real potentials and, like
    /// [`Construction::ActionFaithful`], evaluates the potential where the
    /// constraints act, so a patch confined to a constrained window scales
    /// that class exactly.
    UnitaryLeftPoint,
}

/// Circulant kernel of a kinetic step; `kernel[d]` couples sites `d` apart
/// (mod `n_x` for the split-step kernel).
fn action_kernel(cfg: &LatticeConfig) -> Vec<Complex64> {
    (0..cfg.n_x)
        .map(|d| {
            let v = d as f64 * cfg.dx / cfg.dt;
            (Complex64::i() * cfg.dt * 0.5 * cfg.mass * v * v / cfg.hbar).exp()
        })
        .collect()
}

/// `exp(−i·ħ·p²·τ/(2m))` in the Fourier basis, transformed back to a
/// circulant kernel over site offsets.
fn fourier_kinetic_kernel(cfg: &LatticeConfig, tau: f64) -> Vec<Complex64> {
    let n = cfg.n_x;
    let length = n as f64 * cfg.dx;
    let phases: Vec<(f64, Complex64)> = (0..n)
        .map(|q| {
            let signed = if q <= n / 2 { q as f64 } else { q as f64 - n as f64 };
            let p = 2.0 * std::f64::consts::PI * signed / length;
            let phase = Complex64::new(0.0, -cfg.hbar * p * p * tau / (2.0 * cfg.mass)).exp();
            (p, phase)
        })
        .collect();
    (0..n)
        .map(|d| {
            let mut acc = ComplexKahanSum::new();
            for &(p, phase) in &phases {
                acc.add(phase * Complex64::new(0.0, p * d as f64 * cfg.dx).exp());
            }
            acc.value() / n as f64
        })
        .collect()
}

/// Applies a kernel indexed by site offset to `psi`.
fn apply_kernel(kernel: &[Complex64], psi: &[Complex64], periodic: bool) -> Vec<Complex64> {
    let n = psi.len();
    let row = |out: usize| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &amp) in psi.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let d = if periodic { (out + n - k) % n } else { out.abs_diff(k) };
            acc += kernel[d] * amp;
        }
        acc
    };
    if n >= PARALLEL_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

fn potential_phase(cfg: &LatticeConfig, v: Complex64, tau: f64) -> Complex64 {
    (-Complex64::i() * tau * v / cfg.hbar).exp()
}

/// One-step propagator on a fixed lattice.
struct Stepper<'a> {
    cfg: &'a LatticeConfig,
    field: &'a PotentialField,
    construction: Construction,
    kernel: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a LatticeConfig, field: &'a PotentialField, construction: Construction) -> Self {
        let kernel = match construction {
            Construction::ActionFaithful => action_kernel(cfg),
            Construction::SplitStep => fourier_kinetic_kernel(cfg, 0.5 * cfg.dt),
            Construction::UnitaryLeftPoint => fourier_kinetic_kernel(cfg, cfg.dt),
        };
        Self {
            cfg,
            field,
            construction,
            kernel,
        }
    }

    fn step(&self, j: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let v = self.field.step(j);
        let dt = self.cfg.dt;
        let phase_then = |periodic: bool| {
            let phased: Vec<Complex64> = psi
                .iter()
                .zip(v)
                .map(|(&a, &vk)| a * potential_phase(self.cfg, vk, dt))
                .collect();
            apply_kernel(&self.kernel, &phased, periodic)
        };
        match self.construction {
            Construction::ActionFaithful => phase_then(false),
            Construction::UnitaryLeftPoint => phase_then(true),
            Construction::SplitStep => {
                let half = apply_kernel(&self.kernel, psi, true);
                let phased: Vec<Complex64> = half
                    .iter()
                    .zip(v)
                    .map(|(&a, &vk)| a * potential_phase(self.cfg, vk, dt))
                    .collect();
                apply_kernel(&self.kernel, &phased, true)
            }
        }
    }
}

fn check_transfer_size(cfg: &LatticeConfig) -> Result<()> {
    if cfg.n_x > MAX_TRANSFER_SITES {
        return Err(Error::config(
            "n_x",
            format!("{} exceeds the transfer-matrix limit of {MAX_TRANSFER_SITES}", cfg.n_x),
        ));
    }
    Ok(())
}

/// Propagates an arbitrary initial vector through all `n_t` steps, zeroing
/// disallowed sites at every constrained slice (including `t = 0`).
pub fn propagate(
    initial: &[Complex64],
    cfg: &LatticeConfig,
    field: &PotentialField,
    constraints: &[PathConstraint],
    construction: Construction,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    check_transfer_size(cfg)?;
    field.check(cfg)?;
    if initial.len() != cfg.n_x {
        return Err(Error::Dimension {
            what: "initial state vs n_x",
            expected: cfg.n_x,
            found: initial.len(),
        });
    }
    let masks = constraint_masks(cfg, constraints)?;
    let project = |t: usize, psi: &mut [Complex64]| {
        if let Some(mask) = &masks[t] {
            for (a, &keep) in psi.iter_mut().zip(mask) {
                if !keep {
                    *a = Complex64::new(0.0, 0.0);
                }
            }
        }
    };
    let stepper = Stepper::new(cfg, field, construction);
    let mut psi = initial.to_vec();
    project(0, &mut psi);
    for j in 0..cfg.n_t {
        psi = stepper.step(j, &psi);
        project(j + 1, &mut psi);
    }
    Ok(psi)
}

fn unit_vector(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Amplitudes `K(x_f, x_i)` for every final site.
pub fn amplitudes_from(
    x_i: usize,
    cfg: &LatticeConfig,
    field: &PotentialField,
    constraints: &[PathConstraint],
    construction: Construction,
) -> Result<Vec<Complex64>> {
    check_site(cfg, x_i, "x_i")?;
    propagate(&unit_vector(cfg.n_x, x_i), cfg, field, constraints, construction)
}

/// Action-faithful transfer-matrix amplitude from `x_i` to `x_f`.
pub fn transfer_matrix_amplitude(
    x_i: usize,
    x_f: usize,
    cfg: &LatticeConfig,
    field: &PotentialField,
    constraints: &[PathConstraint],
) -> Result<Complex64> {
    check_site(cfg, x_f, "x_f")?;
    Ok(amplitudes_from(x_i, cfg, field, constraints, Construction::ActionFaithful)?[x_f])
}

/// Which final states a class weight covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Fixed(usize),
    /// `Σ_f |K(x_f, x_i)|²` over all final sites.
    Summed,
}

/// Squared modulus of the summed integrand of a constrained history class.
pub fn class_weight(
    x_i: usize,
    endpoint: Endpoint,
    cfg: &LatticeConfig,
    field: &PotentialField,
    class_constraints: &[PathConstraint],
    construction: Construction,
) -> Result<f64> {
    let amps = amplitudes_from(x_i, cfg, field, class_constraints, construction)?;
    weight_of(&amps, endpoint, cfg)
}

fn weight_of(amps: &[Complex64], endpoint: Endpoint, cfg: &LatticeConfig) -> Result<f64> {
    match endpoint {
        Endpoint::Fixed(x_f) => {
            check_site(cfg, x_f, "x_f")?;
            Ok(amps[x_f].norm_sqr())
        }
        Endpoint::Summed => Ok(amps.iter().map(|a| a.norm_sqr()).collect::<KahanSum>().value()),
    }
}

/// Total probability `Σ_f |K(x_f, x_i)|²` without constraints.
pub fn total_norm(x_i: usize, cfg: &LatticeConfig, field: &PotentialField, construction: Construction) -> Result<f64> {
    class_weight(x_i, Endpoint::Summed, cfg, field, &[], construction)
}

/// A dense one-step matrix, entry `(k', k)` mapping site `k` to `k'`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl TransferMatrix {
    /// `T(k', k) = exp((i/ħ)·dt·[(m/2)((x_k' − x_k)/dt)² − V_step(x_k)])`.
    pub fn action_faithful(cfg: &LatticeConfig, field: &PotentialField, step: usize) -> Result<Self> {
        field.check(cfg)?;
        check_transfer_size(cfg)?;
        let n = cfg.n_x;
        let v = field.step(step);
        let mut entries = Vec::with_capacity(n * n);
        for kp in 0..n {
            for (k, vk) in v.iter().enumerate().take(n) {
                let vel = (cfg.position(kp) - cfg.position(k)) / cfg.dt;
                let s = cfg.dt * (Complex64::new(0.5 * cfg.mass * vel * vel, 0.0) - vk);
                entries.push((Complex64::i() * s / cfg.hbar).exp());
            }
        }
        Ok(Self { n, entries })
    }

    /// Dense form of the split-step operator for one step.
    pub fn split_step(cfg: &LatticeConfig, field: &PotentialField, step: usize) -> Result<Self> {
        Self::dense(cfg, field, step, Construction::SplitStep)
    }

    /// Dense one-step matrix of any construction, built column by column.
    pub fn dense(cfg: &LatticeConfig, field: &PotentialField, step: usize, construction: Construction) -> Result<Self> {
        field.check(cfg)?;
        check_transfer_size(cfg)?;
        let n = cfg.n_x;
        let stepper = Stepper::new(cfg, field, construction);
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            let col = stepper.step(step, &unit_vector(n, k));
            for (kp, a) in col.into_iter().enumerate() {
                entries[kp * n + k] = a;
            }
        }
        Ok(Self { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| {
                self.entries[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(psi)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `max_{a,b} |(T†T − I)_{ab}|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += self.entry(r, a).conj() * self.entry(r, b);
                }
                if a == b {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}
