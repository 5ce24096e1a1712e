//! End-to-end experiments built from the engines.
//!
//! * Double slit: two slit classes of lattice paths, with an imaginary
//!   potential `−i·depth` held on slit B for `tau` steps. Slit B's amplitude
//!   is then damped by `exp(−depth·tau·dt/ħ)` and fringe visibility drops.
//! * Higgs toy: one mode `φ` with `V(φ) = ½·m²_R·φ² − i·m²_I·φ²`, so a
//!   history's imaginary action is `m²_I·Σ dt·φ²`. Histories that excite the
//!   mode are suppressed when `m²_I > 0`.
//! * Dominance sweep: the weight ratio `exp(−2ΔS_I/ħ)` over a grid of gaps.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::action::{weight, ComplexPotential, LatticeConfig};
use crate::classical::{find_classical_solutions, select_realized, SolverOptions};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::propagator::{propagate, Construction, PathConstraint, PotentialField};

/// Lattice double-slit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitSetup {
    pub lattice: LatticeConfig,
    /// Background potential; normally real.
    pub potential: ComplexPotential,
    /// Center site of the initial state.
    pub source: usize,
    /// Gaussian width of the initial state in grid units; `0` is a point source.
    pub source_width: f64,
    /// First time slice at which the slits act.
    pub slit_time: usize,
    /// Number of consecutive slices during which paths are held in a slit.
    pub slit_steps: usize,
    pub window_a: Vec<usize>,
    pub window_b: Vec<usize>,
    /// Imaginary potential depth on slit B, applied as `V += −i·depth`.
    pub depth: f64,
    /// Steps during which the depth is applied, starting at `slit_time`.
    pub tau: usize,
    pub construction: Construction,
}

impl DoubleSlitSetup {
    /// A mirror-symmetric free-particle setup with well resolved fringes:
    /// 257 sites of width 0.25, a Gaussian source at the center, single-site
    /// slits 16 sites either side, slits at step 200 of 300 and the screen at
    /// the final slice. `depth` is 0.
    pub fn standard() -> Self {
        let dx = 0.25;
        let n_x = 257;
        let center = n_x / 2;
        Self {
            lattice: LatticeConfig {
                n_t: 300,
                dt: 0.02,
                x_min: -(center as f64) * dx,
                dx,
                n_x,
                mass: 1.0,
                hbar: 1.0,
            },
            potential: ComplexPotential::zero(),
            source: center,
            source_width: 4.0,
            slit_time: 200,
            slit_steps: 1,
            window_a: vec![center - 16],
            window_b: vec![center + 16],
            depth: 0.0,
            tau: 1,
            construction: Construction::UnitaryLeftPoint,
        }
    }

    /// Imaginary action accrued by every slit-B path: `depth·tau·dt`.
    pub fn accrued_s_i(&self) -> f64 {
        self.depth * self.tau as f64 * self.lattice.dt
    }

    /// Depth that accrues `s_i` over the current `tau`.
    pub fn with_accrued_s_i(mut self, s_i: f64) -> Self {
        self.depth = s_i / (self.tau as f64 * self.lattice.dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = &self.lattice;
        cfg.validate()?;
        if self.source >= cfg.n_x {
            return Err(Error::config("source", "outside grid"));
        }
        if !(self.source_width.is_finite() && self.source_width >= 0.0) {
            return Err(Error::config("source_width", "must be finite and ≥ 0"));
        }
        if self.slit_steps == 0 {
            return Err(Error::config("slit_steps", "must be at least 1"));
        }
        if self.slit_time == 0 || self.slit_time + self.slit_steps > cfg.n_t {
            return Err(Error::config(
                "slit_time",
                format!(
                    "slit slices {}..{} must lie strictly inside 0..{}",
                    self.slit_time,
                    self.slit_time + self.slit_steps,
                    cfg.n_t
                ),
            ));
        }
        for (name, w) in [("window_a", &self.window_a), ("window_b", &self.window_b)] {
            if w.is_empty() {
                return Err(Error::config(name, "must not be empty"));
            }
            if w.iter().any(|&k| k >= cfg.n_x) {
                return Err(Error::config(name, "site outside grid"));
            }
        }
        if self.window_a.iter().any(|k| self.window_b.contains(k)) {
            return Err(Error::config("window_b", "overlaps window_a"));
        }
        if !(self.depth.is_finite() && self.depth >= 0.0) {
            return Err(Error::config("depth", "must be finite and ≥ 0"));
        }
        if self.tau == 0 || self.tau > self.slit_steps {
            return Err(Error::config("tau", format!("must be in 1..={}", self.slit_steps)));
        }
        if self.construction == Construction::SplitStep {
            return Err(Error::config(
                "construction",
                "split-step evaluates the potential between slices; use action-faithful or unitary-left-point",
            ));
        }
        Ok(())
    }

    fn slit_constraints(&self, window: &[usize]) -> Vec<PathConstraint> {
        PathConstraint::window(self.slit_time..self.slit_time + self.slit_steps, window)
    }

    fn field(&self) -> Result<PotentialField> {
        PotentialField::new(&self.lattice, &self.potential).with_patch(
            self.slit_time..self.slit_time + self.tau,
            &self.window_b,
            Complex64::new(0.0, -self.depth),
        )
    }

    fn initial_state(&self) -> Vec<Complex64> {
        let n = self.lattice.n_x;
        if self.source_width == 0.0 {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[self.source] = Complex64::new(1.0, 0.0);
            return v;
        }
        let w = self.source_width;
        let raw: Vec<f64> = (0..n)
            .map(|k| {
                let d = k as f64 - self.source as f64;
                (-0.25 * d * d / (w * w)).exp()
            })
            .collect();
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        raw.into_iter().map(|a| Complex64::new(a / norm, 0.0)).collect()
    }

    /// Amplitudes at every final site through slit A and through slit B.
    pub fn slit_amplitudes(&self) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.validate()?;
        let field = self.field()?;
        let init = self.initial_state();
        let run = |w: &[usize]| {
            propagate(
                &init,
                &self.lattice,
                &field,
                &self.slit_constraints(w),
                self.construction,
            )
        };
        let (a, b) = rayon::join(|| run(&self.window_a), || run(&self.window_b));
        Ok((a?, b?))
    }

    /// Default screen window: the central third of the grid.
    pub fn default_window(&self) -> Range<usize> {
        let n = self.lattice.n_x;
        n / 3..n - n / 3
    }
}

/// Screen intensity with its per-slit parts.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferencePattern {
    pub intensity: Vec<f64>,
    pub intensity_a: Vec<f64>,
    pub intensity_b: Vec<f64>,
    /// Set when either slit delivers no amplitude at all.
    pub degenerate: bool,
}

/// `I(x_f) = |amp_A(x_f) + amp_B(x_f)|²`.
pub fn interference_pattern(setup: &DoubleSlitSetup) -> Result<InterferencePattern> {
    let (a, b) = setup.slit_amplitudes()?;
    let degenerate = a.iter().all(|z| z.norm_sqr() == 0.0) || b.iter().all(|z| z.norm_sqr() == 0.0);
    if degenerate {
        log::warn!("double slit: one slit propagates no amplitude to the screen");
    }
    Ok(InterferencePattern {
        intensity: a.iter().zip(&b).map(|(x, y)| (x + y).norm_sqr()).collect(),
        intensity_a: a.iter().map(|z| z.norm_sqr()).collect(),
        intensity_b: b.iter().map(|z| z.norm_sqr()).collect(),
        degenerate,
    })
}

/// Fringe contrast over a screen window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub value: f64,
    /// The window is flat (or dark); `value` is 0.
    pub flat: bool,
    /// The window contains at least one interior local maximum and minimum.
    pub has_fringe: bool,
}

/// `(I_max − I_min)/(I_max + I_min)` over `window`.
pub fn visibility(intensity: &[f64], window: Range<usize>) -> Result<Visibility> {
    if window.start >= window.end || window.end > intensity.len() {
        return Err(Error::config(
            "window",
            format!("{window:?} is empty or exceeds {} sites", intensity.len()),
        ));
    }
    let slice = &intensity[window];
    if slice.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numerical("intensity must be finite and non-negative".into()));
    }
    let max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = slice.iter().copied().fold(f64::INFINITY, f64::min);
    let has_max = slice.windows(3).any(|w| w[1] > w[0] && w[1] >= w[2]);
    let has_min = slice.windows(3).any(|w| w[1] < w[0] && w[1] <= w[2]);
    if max <= 0.0 || max - min <= 1e-12 * max {
        return Ok(Visibility {
            value: 0.0,
            flat: true,
            has_fringe: false,
        });
    }
    Ok(Visibility {
        value: (max - min) / (max + min),
        flat: false,
        has_fringe: has_max && has_min,
    })
}

/// Two-beam contrast `2r/(1 + r²)` for beams of modulus ratio `r`.
pub fn two_beam_visibility(r: f64) -> f64 {
    2.0 * r / (1.0 + r * r)
}

/// Amplitude ratio of a branch that accrued extra imaginary action `s_i`.
pub fn damping_ratio(s_i: f64, hbar: f64) -> f64 {
    (-s_i / hbar).exp()
}

/// Intensities `|a + r·a·e^{iθ}|²` for `θ = 2πk/n_phases`, with `a = 1`.
pub fn point_branch_pattern(r: f64, n_phases: usize) -> Vec<f64> {
    (0..n_phases)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n_phases as f64;
            (Complex64::new(1.0, 0.0) + Complex64::from_polar(r, theta)).norm_sqr()
        })
        .collect()
}

/// One candidate history of the Higgs toy, fixed by its boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsBranchSpec {
    pub label: String,
    pub phi_start: f64,
    pub phi_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiggsToySetup {
    pub m2_r: f64,
    pub m2_i: f64,
    /// Inertia of the mode.
    pub mass: f64,
    pub duration: f64,
    pub n_t: usize,
    pub hbar: f64,
    pub branches: Vec<HiggsBranchSpec>,
}

impl HiggsToySetup {
    /// "machine off" (φ stays 0) listed before "machine on" (φ driven to
    /// `drive` at the final time).
    pub fn standard(m2_r: f64, m2_i: f64, duration: f64, n_t: usize, drive: f64) -> Self {
        Self {
            m2_r,
            m2_i,
            mass: 1.0,
            duration,
            n_t,
            hbar: 1.0,
            branches: vec![
                HiggsBranchSpec {
                    label: "machine-off".into(),
                    phi_start: 0.0,
                    phi_end: 0.0,
                },
                HiggsBranchSpec {
                    label: "machine-on".into(),
                    phi_start: 0.0,
                    phi_end: drive,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m2_r", self.m2_r), ("m2_i", self.m2_i)] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        for (name, v) in [("duration", self.duration), ("mass", self.mass), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be finite and > 0"));
            }
        }
        if self.n_t < 2 {
            return Err(Error::config("n_t", "must be at least 2"));
        }
        if self.branches.is_empty() {
            return Err(Error::config("branches", "must not be empty"));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if !(b.phi_start.is_finite() && b.phi_end.is_finite()) {
                return Err(Error::config(
                    format!("branches[{i}]"),
                    "boundary values must be finite",
                ));
            }
        }
        Ok(())
    }

    /// `½·m²_R·φ² − i·m²_I·φ²`.
    pub fn potential(&self) -> ComplexPotential {
        ComplexPotential::from_parts(&[0.0, 0.0, 0.5 * self.m2_r], &[0.0, 0.0, -self.m2_i]).expect("degree 2")
    }

    /// Lattice used by the classical solver; the grid only bounds the field.
    pub fn lattice(&self) -> Result<LatticeConfig> {
        let reach = self
            .branches
            .iter()
            .flat_map(|b| [b.phi_start.abs(), b.phi_end.abs()])
            .fold(1.0f64, f64::max);
        let half = 8.0 * reach;
        let n_x = 801;
        LatticeConfig::new(
            self.n_t,
            self.duration / self.n_t as f64,
            -half,
            2.0 * half / (n_x - 1) as f64,
            n_x,
            self.mass,
        )?
        .with_hbar(self.hbar)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiggsBranchOutcome {
    pub label: String,
    /// `Σ_{j<n_t} dt·φ_j²` along the classical history.
    pub field_norm: f64,
    pub s_i: f64,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiggsReport {
    pub branches: Vec<HiggsBranchOutcome>,
    pub selected: usize,
    /// Gap between the runner-up and the selected imaginary action (0 with one branch).
    pub delta_s_i: f64,
    /// `exp(−2·ΔS_I/ħ)`.
    pub weight_ratio: f64,
}

impl HiggsReport {
    pub fn selected_label(&self) -> &str {
        &self.branches[self.selected].label
    }
}

/// Weight of an excited history relative to the ground history.
pub fn suppression_ratio(norm_excited: f64, norm_ground: f64, m2_i: f64, hbar: f64) -> f64 {
    weight(m2_i * (norm_excited - norm_ground), hbar)
}

/// Solves each branch's classical history of the real mode dynamics,
/// evaluates its imaginary action and selects the argmin.
pub fn higgs_suppression(setup: &HiggsToySetup) -> Result<HiggsReport> {
    setup.validate()?;
    let cfg = setup.lattice()?;
    let pot = setup.potential();
    let opts = SolverOptions {
        n_seeds: 1,
        ..Default::default()
    };
    let branches = setup
        .branches
        .iter()
        .map(|branch| {
            let report = find_classical_solutions((branch.phi_start, branch.phi_end), &cfg, &pot, &opts)?;
            let sol = report.solutions.into_iter().next().expect("non-empty on success");
            let field_norm = sol.positions[..cfg.n_t]
                .iter()
                .map(|phi| cfg.dt * phi * phi)
                .collect::<KahanSum>()
                .value();
            Ok(HiggsBranchOutcome {
                label: branch.label.clone(),
                field_norm,
                s_i: sol.action.s_i,
                history: sol.positions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s_i: Vec<f64> = branches.iter().map(|b| b.s_i).collect();
    let selected = select_realized(&s_i)?;
    let runner_up = s_i
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != selected)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let delta_s_i = if runner_up.is_finite() {
        runner_up - s_i[selected]
    } else {
        0.0
    };
    Ok(HiggsReport {
        branches,
        selected,
        delta_s_i,
        weight_ratio: weight(delta_s_i, setup.hbar),
    })
}

/// `(Δ, exp(−2Δ/ħ))` for each gap, in input order.
pub fn dominance_sweep(gaps: &[f64], hbar: f64) -> Result<Vec<(f64, f64)>> {
    if gaps.is_empty() {
        return Err(Error::Empty("no gaps to sweep"));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::config("hbar", "must be finite and > 0"));
    }
    if let Some(g) = gaps.iter().find(|g| !g.is_finite()) {
        return Err(Error::config("gaps", format!("{g} is not finite")));
    }
    Ok(gaps.par_iter().map(|&g| (g, weight(g, hbar))).collect())
}
