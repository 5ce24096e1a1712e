//! Lattice discretization of a 1-D particle and its complex action.
//!
//! The action of a path `x_0, …, x_{n_t}` is the left-point sum
//!
//! ```text
//! S = Σ_{j=0}^{n_t-1} dt · [ (m/2)·((x_{j+1} − x_j)/dt)² − V(x_j) ]
//! ```
//!
//! with a polynomial potential `V` whose coefficients are complex. The
//! imaginary part is `S_I = −Σ dt·Im V(x_j)` and the squared integrand of the
//! path is `|exp(iS/ħ)|² = exp(−2 S_I/ħ)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{exp_clamped, KahanSum};

/// Highest supported polynomial degree of a [`ComplexPotential`].
pub const MAX_POTENTIAL_DEGREE: usize = 6;

/// Discretization of time and space for a single particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_t: usize,
    pub dt: f64,
    pub x_min: f64,
    pub dx: f64,
    pub n_x: usize,
    pub mass: f64,
    pub hbar: f64,
}

impl LatticeConfig {
    /// Builds a validated configuration with `ħ = 1`.
    pub fn new(n_t: usize, dt: f64, x_min: f64, dx: f64, n_x: usize, mass: f64) -> Result<Self> {
        Self {
            n_t,
            dt,
            x_min,
            dx,
            n_x,
            mass,
            hbar: 1.0,
        }
        .validated()
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validated()
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        if self.n_t < 1 {
            return Err(Error::config("n_t", "must be at least 1"));
        }
        if self.n_x < 2 {
            return Err(Error::config("n_x", "must be at least 2"));
        }
        let positive = [
            ("dt", self.dt),
            ("dx", self.dx),
            ("mass", self.mass),
            ("hbar", self.hbar),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.x_min.is_finite() {
            return Err(Error::config("x_min", "must be finite"));
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Position of grid site `k`.
    #[inline]
    pub fn position(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.position(self.n_x - 1)
    }

    /// Nearest grid site to `x`, clamped to the grid.
    pub fn nearest_site(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.dx).round();
        k.clamp(0.0, (self.n_x - 1) as f64) as usize
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_x).map(|k| self.position(k)).collect()
    }
}

/// `V(x) = Σ_k (a_k + i·b_k)·x^k` with degree at most [`MAX_POTENTIAL_DEGREE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPotential {
    coefficients: Vec<Complex64>,
}

impl ComplexPotential {
    /// Coefficients are `(real, imaginary)` pairs for powers `x⁰, x¹, …`.
    pub fn new(coefficients: &[(f64, f64)]) -> Result<Self> {
        Self::from_complex(coefficients.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
    }

    pub fn from_complex(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() > MAX_POTENTIAL_DEGREE + 1 {
            return Err(Error::config(
                "coefficients",
                format!(
                    "degree {} exceeds the maximum of {MAX_POTENTIAL_DEGREE}",
                    coefficients.len() - 1
                ),
            ));
        }
        if let Some(k) = coefficients
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::config(format!("coefficients[{k}]"), "must be finite"));
        }
        Ok(Self { coefficients })
    }

    /// The zero potential (free particle).
    pub fn zero() -> Self {
        Self {
            coefficients: Vec::new(),
        }
    }

    /// Builds `V_R + i·V_I` from two real coefficient lists.
    pub fn from_parts(real: &[f64], imag: &[f64]) -> Result<Self> {
        let n = real.len().max(imag.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        Self::from_complex((0..n).map(|k| Complex64::new(get(real, k), get(imag, k))).collect())
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_real(&self) -> bool {
        self.coefficients.iter().all(|c| c.im == 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `Im V(x)`, evaluated from the imaginary coefficients alone so that it
    /// is exactly zero for a real potential.
    pub fn eval_imag(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c.im)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c.re)
    }

    /// `V_R'(x)`.
    pub fn real_derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c.re)
    }

    /// `V_R''(x)`.
    pub fn real_second_derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c.re)
    }

    /// The potential with imaginary coefficients dropped.
    pub fn real_part(&self) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|c| Complex64::new(c.re, 0.0)).collect(),
        }
    }

    /// The imaginary coefficients reinterpreted as a real potential.
    pub fn imag_part_as_real(&self) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|c| Complex64::new(c.im, 0.0)).collect(),
        }
    }

    /// `V_R + i·scale·V_I`.
    pub fn with_imag_scaled(&self, scale: f64) -> Self {
        Self {
            coefficients: self
                .coefficients
                .iter()
                .map(|c| Complex64::new(c.re, c.im * scale))
                .collect(),
        }
    }

    /// `self + eps·other`, coefficient-wise.
    pub fn plus_scaled(&self, other: &Self, eps: f64) -> Self {
        let n = self.coefficients.len().max(other.coefficients.len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            coefficients: (0..n)
                .map(|k| {
                    self.coefficients.get(k).copied().unwrap_or(zero)
                        + other.coefficients.get(k).copied().unwrap_or(zero) * eps
                })
                .collect(),
        }
    }
}

/// A lattice trajectory: `n_t + 1` grid-site indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    sites: Vec<usize>,
}

impl Path {
    pub fn new(sites: Vec<usize>) -> Self {
        Self { sites }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Checks the path against a lattice configuration.
    pub fn validate(&self, cfg: &LatticeConfig) -> Result<()> {
        if self.sites.len() != cfg.n_t + 1 {
            return Err(Error::Dimension {
                what: "path length vs n_t + 1",
                expected: cfg.n_t + 1,
                found: self.sites.len(),
            });
        }
        if let Some(&k) = self.sites.iter().find(|&&k| k >= cfg.n_x) {
            return Err(Error::config(
                "path",
                format!("site {k} outside grid of {} sites", cfg.n_x),
            ));
        }
        Ok(())
    }

    pub fn positions(&self, cfg: &LatticeConfig) -> Vec<f64> {
        self.sites.iter().map(|&k| cfg.position(k)).collect()
    }
}

/// Real and imaginary parts of an action.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionValue {
    pub s_r: f64,
    pub s_i: f64,
}

impl ActionValue {
    pub fn new(s_r: f64, s_i: f64) -> Self {
        Self { s_r, s_i }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.s_r, self.s_i)
    }

    /// The path-integral integrand `exp(iS/ħ)`.
    pub fn integrand(&self, hbar: f64) -> Complex64 {
        (Complex64::i() * self.as_complex() / hbar).exp()
    }

    pub fn log_weight(&self, hbar: f64) -> f64 {
        log_weight(self.s_i, hbar)
    }

    pub fn weight(&self, hbar: f64) -> f64 {
        weight(self.s_i, hbar)
    }
}

/// Action of a lattice path. Fails if the path does not fit `cfg`.
pub fn action(path: &Path, cfg: &LatticeConfig, pot: &ComplexPotential) -> Result<ActionValue> {
    path.validate(cfg)?;
    Ok(action_of_positions(&path.positions(cfg), cfg.dt, cfg.mass, pot))
}

/// Action of an arbitrary sequence of real positions. A sequence with fewer
/// than two points has zero action.
pub fn action_of_positions(positions: &[f64], dt: f64, mass: f64, pot: &ComplexPotential) -> ActionValue {
    let mut s_r = KahanSum::new();
    let mut s_i = KahanSum::new();
    for w in positions.windows(2) {
        let v = (w[1] - w[0]) / dt;
        s_r.add(dt * (0.5 * mass * v * v - pot.eval_real(w[0])));
        s_i.add(-dt * pot.eval_imag(w[0]));
    }
    ActionValue::new(s_r.value(), s_i.value())
}

/// `ln |exp(iS/ħ)|² = −2·S_I/ħ`.
#[inline]
pub fn log_weight(s_i: f64, hbar: f64) -> f64 {
    -2.0 * s_i / hbar
}

/// `|exp(iS/ħ)|² = exp(−2·S_I/ħ)`, saturating at `f64::MAX`.
#[inline]
pub fn weight(s_i: f64, hbar: f64) -> f64 {
    exp_clamped(log_weight(s_i, hbar))
}
