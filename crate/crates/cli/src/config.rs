//! Scenario configuration files.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "double-slit",
//!   "seed": 7,
//!   "output_dir": "results/double-slit",
//!   "params": { "delta": 1.0 }
//! }
//! ```
//!
//! `seed`, `output_dir` and `params` are optional, and every parameter has a
//! default, so `{"schema_version": 1, "kind": "tape"}` is a complete config.
//! Unknown keys are rejected at every level. Parse errors carry the line and
//! column; range errors name the field as a dotted path such as
//! `params.lattice.n_x`.

use std::path::PathBuf;

use complex_action::propagator::Construction;
use complex_action::scenarios::{DoubleSlitSetup, HiggsBranchSpec, HiggsToySetup};
use complex_action::selection::{validate_branches, Branch, NoiseModel};
use complex_action::tape::{SubstitutionSystem, DEFAULT_OUTPUT_CAP, MAX_PATTERN_LEN};
use complex_action::{Complex64, ComplexPotential, LatticeConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Upper bound on Monte Carlo trials in one measurement run.
pub const MAX_TRIALS: u64 = 1_000_000_000;
/// Upper bound on classical solver restarts.
pub const MAX_SEEDS: usize = 10_000;
/// Upper bound on lattice sites used by the transfer-matrix scenarios.
pub const MAX_SITES: usize = 4096;
/// Upper bound on time slices in any lattice scenario.
pub const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PropagatorCheck,
    ClassicalSelect,
    Measurement,
    DoubleSlit,
    HiggsToy,
    Tape,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::PropagatorCheck,
        ScenarioKind::ClassicalSelect,
        ScenarioKind::Measurement,
        ScenarioKind::DoubleSlit,
        ScenarioKind::HiggsToy,
        ScenarioKind::Tape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PropagatorCheck => "propagator-check",
            ScenarioKind::ClassicalSelect => "classical-select",
            ScenarioKind::Measurement => "measurement",
            ScenarioKind::DoubleSlit => "double-slit",
            ScenarioKind::HiggsToy => "higgs-toy",
            ScenarioKind::Tape => "tape",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::PropagatorCheck => {
                "brute-force path sum vs transfer matrix on a small random complex lattice; split-step unitarity"
            }
            ScenarioKind::ClassicalSelect => {
                "stationary paths of the real action, ranked by imaginary action; optional saddle-shift order fit"
            }
            ScenarioKind::Measurement => "outcome statistics of branches with noisy future imaginary action",
            ScenarioKind::DoubleSlit => "lattice double slit with an imaginary potential on one slit",
            ScenarioKind::HiggsToy => "single-mode toy: suppression of histories that excite the mode",
            ScenarioKind::Tape => "substitution-system growth: counts, eigenvalues, complex-exponential fit",
        }
    }

    /// Parameters accepted by `sweep`, as `params` keys.
    pub fn sweepable(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::PropagatorCheck => &["dt", "mass", "random_scale"],
            ScenarioKind::ClassicalSelect => &["imag_scale"],
            ScenarioKind::Measurement => &["hbar", "gap"],
            ScenarioKind::DoubleSlit => &["delta", "tau"],
            ScenarioKind::HiggsToy => &["m2_i", "m2_r", "duration"],
            ScenarioKind::Tape => &["generations"],
        }
    }
}

/// `[re, im]` coefficient pairs for powers `x⁰, x¹, …`.
pub type Coefficients = Vec<[f64; 2]>;

pub(crate) fn potential_from(coeffs: &[[f64; 2]], field: &str) -> CliResult<ComplexPotential> {
    let pairs: Vec<(f64, f64)> = coeffs.iter().map(|c| (c[0], c[1])).collect();
    ComplexPotential::new(&pairs).map_err(|e| CliError::from_core(e, &format!("{field}.")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeParams {
    pub n_t: usize,
    pub dt: f64,
    pub x_min: f64,
    pub dx: f64,
    pub n_x: usize,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self::from(&LatticeConfig::new(4, 0.3, -1.0, 0.5, 5, 1.0).expect("valid default"))
    }
}

impl From<&LatticeConfig> for LatticeParams {
    fn from(c: &LatticeConfig) -> Self {
        Self {
            n_t: c.n_t,
            dt: c.dt,
            x_min: c.x_min,
            dx: c.dx,
            n_x: c.n_x,
            mass: c.mass,
            hbar: c.hbar,
        }
    }
}

impl LatticeParams {
    pub fn to_config(&self, field: &str) -> CliResult<LatticeConfig> {
        let cfg = LatticeConfig {
            n_t: self.n_t,
            dt: self.dt,
            x_min: self.x_min,
            dx: self.dx,
            n_x: self.n_x,
            mass: self.mass,
            hbar: self.hbar,
        };
        cfg.validate()
            .map_err(|e| CliError::from_core(e, &format!("{field}.")))?;
        if cfg.n_t > MAX_STEPS {
            return Err(CliError::Config(format!("{field}.n_t: must be at most {MAX_STEPS}")));
        }
        if cfg.n_x > MAX_SITES {
            return Err(CliError::Config(format!("{field}.n_x: must be at most {MAX_SITES}")));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorParams {
    pub lattice: LatticeParams,
    /// Fixed potential; when absent a random one is drawn from the seed.
    pub potential: Option<Coefficients>,
    pub random_degree: usize,
    /// Coefficients are drawn uniformly from `[-random_scale, random_scale]`.
    pub random_scale: f64,
    /// Largest number of paths the brute-force oracle may enumerate.
    pub cap: u64,
    pub tolerance: f64,
    /// Also check that the split-step construction conserves probability
    /// for the real part of the potential.
    pub unitarity: bool,
}

impl Default for PropagatorParams {
    fn default() -> Self {
        Self {
            lattice: LatticeParams::default(),
            potential: None,
            random_degree: 4,
            random_scale: 0.5,
            cap: complex_action::propagator::DEFAULT_ENUMERATION_CAP as u64,
            tolerance: 1e-10,
            unitarity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleShiftParams {
    /// Lattice for the order fit; defaults to the scenario lattice.
    pub lattice: Option<LatticeParams>,
    /// Unperturbed potential; only its real part is used.
    pub potential: Coefficients,
    /// Perturbation direction; its imaginary coefficients enter the real
    /// equations of motion scaled by ε.
    pub direction: Coefficients,
    pub boundary: [f64; 2],
    pub epsilons: Vec<f64>,
    /// Accepted slope interval; when present the fit becomes a run check.
    pub slope_range: Option<[f64; 2]>,
}

impl Default for SaddleShiftParams {
    fn default() -> Self {
        Self {
            lattice: None,
            potential: vec![[0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
            direction: vec![[0.0, 0.0], [0.0, 1.0]],
            boundary: [0.0, 1.0],
            epsilons: complex_action::classical::DEFAULT_EPSILONS.to_vec(),
            slope_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalParams {
    pub lattice: LatticeParams,
    pub potential: Coefficients,
    pub boundary: [f64; 2],
    pub n_seeds: usize,
    pub perturbation: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub dedup_tolerance: f64,
    /// Multiplies the imaginary part of the potential.
    pub imag_scale: f64,
    pub saddle_shift: Option<SaddleShiftParams>,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            lattice: LatticeParams::from(&LatticeConfig::new(100, 0.1, -3.0, 0.05, 121, 1.0).expect("valid")),
            // (x² − 1)²/4 − i·x²(x + 1)²
            potential: vec![[0.25, 0.0], [0.0, 0.0], [-0.5, -1.0], [0.0, -2.0], [0.25, -1.0]],
            boundary: [-1.0, -1.0],
            n_seeds: 24,
            perturbation: Some(1.5),
            tolerance: 1e-10,
            max_iterations: 200,
            dedup_tolerance: 1e-6,
            imag_scale: 1.0,
            saddle_shift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseParams {
    None,
    Gaussian {
        #[serde(default)]
        mean: f64,
        sigma: f64,
    },
    Gumbel {
        #[serde(default)]
        location: f64,
        scale: f64,
    },
    Cascade {
        n_stages: u32,
        per_stage_sigma: f64,
    },
    StandardGumbel,
}

impl From<NoiseParams> for NoiseModel {
    fn from(n: NoiseParams) -> Self {
        match n {
            NoiseParams::None => NoiseModel::None,
            NoiseParams::Gaussian { mean, sigma } => NoiseModel::Gaussian { mean, sigma },
            NoiseParams::Gumbel { location, scale } => NoiseModel::Gumbel { location, scale },
            NoiseParams::Cascade {
                n_stages,
                per_stage_sigma,
            } => NoiseModel::Cascade {
                n_stages,
                per_stage_sigma,
            },
            NoiseParams::StandardGumbel => NoiseModel::StandardGumbel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchParams {
    pub label: String,
    pub amplitude: [f64; 2],
    #[serde(default)]
    pub base_s_i: f64,
    #[serde(default = "no_noise")]
    pub noise: NoiseParams,
}

fn no_noise() -> NoiseParams {
    NoiseParams::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementParams {
    pub hbar: f64,
    pub n_trials: u64,
    pub branches: Vec<BranchParams>,
    /// Imaginary-action gaps for the deterministic dominance table.
    pub dominance_gaps: Vec<f64>,
    /// When set, the last branch's base imaginary action becomes the first
    /// branch's plus `gap`.
    pub gap: Option<f64>,
}

impl Default for MeasurementParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            n_trials: 100_000,
            branches: vec![
                BranchParams {
                    label: "up".into(),
                    amplitude: [0.5, 0.0],
                    base_s_i: 0.0,
                    noise: NoiseParams::StandardGumbel,
                },
                BranchParams {
                    label: "down".into(),
                    amplitude: [0.75f64.sqrt(), 0.0],
                    base_s_i: 0.0,
                    noise: NoiseParams::StandardGumbel,
                },
            ],
            dominance_gaps: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
            gap: None,
        }
    }
}

impl MeasurementParams {
    pub fn to_branches(&self) -> Vec<Branch> {
        let mut branches: Vec<Branch> = self
            .branches
            .iter()
            .map(|b| {
                Branch::new(
                    b.label.clone(),
                    Complex64::new(b.amplitude[0], b.amplitude[1]),
                    b.base_s_i,
                    b.noise.into(),
                )
            })
            .collect();
        if let (Some(gap), true) = (self.gap, branches.len() >= 2) {
            let first = branches[0].base_s_i;
            branches.last_mut().expect("non-empty").base_s_i = first + gap;
        }
        branches
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionName {
    ActionFaithful,
    SplitStep,
    UnitaryLeftPoint,
}

impl From<ConstructionName> for Construction {
    fn from(c: ConstructionName) -> Self {
        match c {
            ConstructionName::ActionFaithful => Construction::ActionFaithful,
            ConstructionName::SplitStep => Construction::SplitStep,
            ConstructionName::UnitaryLeftPoint => Construction::UnitaryLeftPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitParams {
    pub lattice: LatticeParams,
    pub potential: Coefficients,
    pub source: usize,
    pub source_width: f64,
    pub slit_time: usize,
    pub slit_steps: usize,
    pub window_a: Vec<usize>,
    pub window_b: Vec<usize>,
    /// Imaginary action accrued by every slit-B path.
    pub delta: f64,
    pub tau: usize,
    pub construction: ConstructionName,
    /// Screen sites `[start, end)` for the visibility; defaults to the central third.
    pub screen_window: Option<[usize; 2]>,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        let s = DoubleSlitSetup::standard();
        Self {
            lattice: LatticeParams::from(&s.lattice),
            potential: Vec::new(),
            source: s.source,
            source_width: s.source_width,
            slit_time: s.slit_time,
            slit_steps: s.slit_steps,
            window_a: s.window_a,
            window_b: s.window_b,
            delta: 0.0,
            tau: s.tau,
            construction: ConstructionName::UnitaryLeftPoint,
            screen_window: None,
        }
    }
}

impl DoubleSlitParams {
    pub fn to_setup(&self) -> CliResult<DoubleSlitSetup> {
        let lattice = self.lattice.to_config("params.lattice")?;
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(CliError::Config("params.delta: must be finite and ≥ 0".into()));
        }
        if self.tau == 0 {
            return Err(CliError::Config("params.tau: must be at least 1".into()));
        }
        let setup = DoubleSlitSetup {
            lattice,
            potential: potential_from(&self.potential, "params.potential")?,
            source: self.source,
            source_width: self.source_width,
            slit_time: self.slit_time,
            slit_steps: self.slit_steps,
            window_a: self.window_a.clone(),
            window_b: self.window_b.clone(),
            depth: 0.0,
            tau: self.tau,
            construction: self.construction.into(),
        }
        .with_accrued_s_i(self.delta);
        setup.validate().map_err(|e| CliError::from_core(e, "params."))?;
        if let Some([a, b]) = self.screen_window {
            if a >= b || b > setup.lattice.n_x {
                return Err(CliError::Config(format!(
                    "params.screen_window: [{a}, {b}) must be non-empty and within {} sites",
                    setup.lattice.n_x
                )));
            }
        }
        Ok(setup)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiggsBranchParams {
    pub label: String,
    pub phi_start: f64,
    pub phi_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiggsParams {
    pub m2_r: f64,
    pub m2_i: f64,
    pub mass: f64,
    pub duration: f64,
    pub n_t: usize,
    pub hbar: f64,
    pub branches: Vec<HiggsBranchParams>,
}

impl Default for HiggsParams {
    fn default() -> Self {
        let s = HiggsToySetup::standard(0.1, 1.0, 5.0, 100, 1.0);
        Self {
            m2_r: s.m2_r,
            m2_i: s.m2_i,
            mass: s.mass,
            duration: s.duration,
            n_t: s.n_t,
            hbar: s.hbar,
            branches: s
                .branches
                .into_iter()
                .map(|b| HiggsBranchParams {
                    label: b.label,
                    phi_start: b.phi_start,
                    phi_end: b.phi_end,
                })
                .collect(),
        }
    }
}

impl HiggsParams {
    pub fn to_setup(&self) -> CliResult<HiggsToySetup> {
        let setup = HiggsToySetup {
            m2_r: self.m2_r,
            m2_i: self.m2_i,
            mass: self.mass,
            duration: self.duration,
            n_t: self.n_t,
            hbar: self.hbar,
            branches: self
                .branches
                .iter()
                .map(|b| HiggsBranchSpec {
                    label: b.label.clone(),
                    phi_start: b.phi_start,
                    phi_end: b.phi_end,
                })
                .collect(),
        };
        setup.validate().map_err(|e| CliError::from_core(e, "params."))?;
        if setup.n_t > MAX_STEPS {
            return Err(CliError::Config(format!("params.n_t: must be at most {MAX_STEPS}")));
        }
        Ok(setup)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TapeParams {
    /// Name of a built-in system; `fibonacci` when neither this nor `rules` is given.
    pub system: Option<String>,
    /// Rules such as `"A->AB; B->A"`.
    pub rules: Option<String>,
    /// Seed word for `rules`; defaults to the first symbol.
    pub seed_word: Option<String>,
    pub non_expanding: bool,
    /// Replace the seed word with this many symbols drawn from the run seed.
    pub random_seed_length: Option<usize>,
    pub generations: usize,
    /// Patterns to count; defaults to every single symbol.
    pub patterns: Option<Vec<String>>,
    pub output_cap: u64,
    pub fit_background: bool,
}

impl Default for TapeParams {
    fn default() -> Self {
        Self {
            system: None,
            rules: None,
            seed_word: None,
            non_expanding: false,
            random_seed_length: None,
            generations: 20,
            patterns: None,
            output_cap: 10_000_000,
            fit_background: false,
        }
    }
}

impl TapeParams {
    pub fn to_system(&self, seed: u64) -> CliResult<SubstitutionSystem> {
        let sys = match (&self.rules, &self.system) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "params.rules: give either `system` or `rules`, not both".into(),
                ))
            }
            (Some(rules), None) => {
                let seed_word = match &self.seed_word {
                    Some(w) => w.clone(),
                    None => complex_action::tape::parse_rules(rules)
                        .map_err(|e| CliError::Config(format!("params.rules: {e}")))?
                        .0
                        .first()
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                };
                SubstitutionSystem::parse(rules, &seed_word, self.non_expanding)
                    .map_err(|e| CliError::Config(format!("params.rules: {e}")))?
            }
            (None, system) => {
                let name = system.as_deref().unwrap_or("fibonacci");
                let sys = SubstitutionSystem::builtin(name).ok_or_else(|| {
                    CliError::Config(format!(
                        "params.system: unknown system {name:?}, expected one of {}",
                        SubstitutionSystem::BUILTIN_NAMES.join(", ")
                    ))
                })?;
                match &self.seed_word {
                    Some(w) => {
                        let word = sys
                            .encode(w)
                            .map_err(|e| CliError::Config(format!("params.seed_word: {e}")))?;
                        sys.with_seed_word(word)
                            .map_err(|e| CliError::from_core(e, "params."))?
                    }
                    None => sys,
                }
            }
        };
        match self.random_seed_length {
            Some(0) => Err(CliError::Config("params.random_seed_length: must be at least 1".into())),
            Some(len) if len > 1_000_000 => Err(CliError::Config(
                "params.random_seed_length: must be at most 1000000".into(),
            )),
            Some(len) => sys
                .with_random_seed(len, seed)
                .map_err(|e| CliError::from_core(e, "params.")),
            None => Ok(sys),
        }
    }

    pub fn pattern_words(&self, sys: &SubstitutionSystem) -> CliResult<Vec<(String, Vec<u8>)>> {
        let texts: Vec<String> = match &self.patterns {
            Some(p) => p.clone(),
            None => sys.alphabet().iter().map(|c| c.to_string()).collect(),
        };
        if texts.is_empty() {
            return Err(CliError::Config("params.patterns: must not be empty".into()));
        }
        texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let word = sys
                    .encode(&t)
                    .map_err(|e| CliError::Config(format!("params.patterns[{i}]: {e}")))?;
                if word.is_empty() || word.len() > MAX_PATTERN_LEN {
                    return Err(CliError::Config(format!(
                        "params.patterns[{i}]: length must be in 1..={MAX_PATTERN_LEN}"
                    )));
                }
                Ok((t, word))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    PropagatorCheck(PropagatorParams),
    ClassicalSelect(ClassicalParams),
    Measurement(MeasurementParams),
    DoubleSlit(DoubleSlitParams),
    HiggsToy(HiggsParams),
    Tape(TapeParams),
}

/// A parsed config with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub params: Params,
}

#[derive(Deserialize)]
struct Probe {
    schema_version: serde_json::Value,
    kind: ScenarioKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Typed<P> {
    #[allow(dead_code)]
    schema_version: u32,
    #[allow(dead_code)]
    kind: ScenarioKind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: P,
}

fn typed<P: DeserializeOwned + Default>(text: &str) -> CliResult<(u64, Option<PathBuf>, P)> {
    let t: Typed<P> = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((t.seed, t.output_dir, t.params))
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    let probe: Probe = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if probe.schema_version.as_u64() != Some(SCHEMA_VERSION as u64) {
        return Err(CliError::Config(format!(
            "schema_version: unsupported value {}, expected {SCHEMA_VERSION}",
            probe.schema_version
        )));
    }
    let (seed, output_dir, params) = match probe.kind {
        ScenarioKind::PropagatorCheck => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::PropagatorCheck(p))
        }
        ScenarioKind::ClassicalSelect => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::ClassicalSelect(p))
        }
        ScenarioKind::Measurement => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::Measurement(p))
        }
        ScenarioKind::DoubleSlit => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::DoubleSlit(p))
        }
        ScenarioKind::HiggsToy => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::HiggsToy(p))
        }
        ScenarioKind::Tape => {
            let (s, o, p) = typed(text)?;
            (s, o, Params::Tape(p))
        }
    };
    let config = ScenarioConfig {
        kind: probe.kind,
        seed,
        output_dir,
        params,
    };
    config.validate()?;
    Ok(config)
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must be finite and > 0, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must be finite")))
    }
}

impl ScenarioConfig {
    /// Checks every numeric range without running anything.
    pub fn validate(&self) -> CliResult<()> {
        match &self.params {
            Params::PropagatorCheck(p) => {
                p.lattice.to_config("params.lattice")?;
                match &p.potential {
                    Some(c) => {
                        potential_from(c, "params.potential")?;
                    }
                    None => {
                        if p.random_degree > complex_action::action::MAX_POTENTIAL_DEGREE {
                            return Err(CliError::Config(format!(
                                "params.random_degree: must be at most {}",
                                complex_action::action::MAX_POTENTIAL_DEGREE
                            )));
                        }
                        positive("params.random_scale", p.random_scale)?;
                    }
                }
                if p.cap == 0 {
                    return Err(CliError::Config("params.cap: must be at least 1".into()));
                }
                positive("params.tolerance", p.tolerance)?;
            }
            Params::ClassicalSelect(p) => {
                p.lattice.to_config("params.lattice")?;
                potential_from(&p.potential, "params.potential")?;
                for (i, b) in p.boundary.iter().enumerate() {
                    finite(&format!("params.boundary[{i}]"), *b)?;
                }
                if p.n_seeds == 0 || p.n_seeds > MAX_SEEDS {
                    return Err(CliError::Config(format!("params.n_seeds: must be in 1..={MAX_SEEDS}")));
                }
                if let Some(a) = p.perturbation {
                    if !(a.is_finite() && a >= 0.0) {
                        return Err(CliError::Config("params.perturbation: must be finite and ≥ 0".into()));
                    }
                }
                positive("params.tolerance", p.tolerance)?;
                positive("params.dedup_tolerance", p.dedup_tolerance)?;
                if p.max_iterations == 0 || p.max_iterations > 100_000 {
                    return Err(CliError::Config("params.max_iterations: must be in 1..=100000".into()));
                }
                finite("params.imag_scale", p.imag_scale)?;
                if let Some(s) = &p.saddle_shift {
                    if let Some(l) = &s.lattice {
                        l.to_config("params.saddle_shift.lattice")?;
                    }
                    potential_from(&s.potential, "params.saddle_shift.potential")?;
                    potential_from(&s.direction, "params.saddle_shift.direction")?;
                    for (i, b) in s.boundary.iter().enumerate() {
                        finite(&format!("params.saddle_shift.boundary[{i}]"), *b)?;
                    }
                    if s.epsilons.len() < 3 {
                        return Err(CliError::Config(
                            "params.saddle_shift.epsilons: need at least 3 values".into(),
                        ));
                    }
                    for (i, e) in s.epsilons.iter().enumerate() {
                        positive(&format!("params.saddle_shift.epsilons[{i}]"), *e)?;
                    }
                    if s.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                        return Err(CliError::Config(
                            "params.saddle_shift.epsilons: must be strictly decreasing".into(),
                        ));
                    }
                    if let Some([lo, hi]) = s.slope_range {
                        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                            return Err(CliError::Config(
                                "params.saddle_shift.slope_range: must be finite with lo ≤ hi".into(),
                            ));
                        }
                    }
                }
            }
            Params::Measurement(p) => {
                positive("params.hbar", p.hbar)?;
                if p.n_trials == 0 || p.n_trials > MAX_TRIALS {
                    return Err(CliError::Config(format!(
                        "params.n_trials: must be in 1..={MAX_TRIALS}"
                    )));
                }
                if p.branches.is_empty() {
                    return Err(CliError::Config("params.branches: must not be empty".into()));
                }
                if let Some(g) = p.gap {
                    finite("params.gap", g)?;
                    if p.branches.len() < 2 {
                        return Err(CliError::Config("params.gap: needs at least 2 branches".into()));
                    }
                }
                validate_branches(&p.to_branches()).map_err(|e| CliError::from_core(e, "params."))?;
                for (i, g) in p.dominance_gaps.iter().enumerate() {
                    finite(&format!("params.dominance_gaps[{i}]"), *g)?;
                }
            }
            Params::DoubleSlit(p) => {
                p.to_setup()?;
            }
            Params::HiggsToy(p) => {
                p.to_setup()?;
            }
            Params::Tape(p) => {
                let sys = p.to_system(self.seed)?;
                p.pattern_words(&sys)?;
                if p.generations > 10_000 {
                    return Err(CliError::Config("params.generations: must be at most 10000".into()));
                }
                if p.output_cap == 0 {
                    return Err(CliError::Config("params.output_cap: must be at least 1".into()));
                }
                if p.output_cap as u128 > DEFAULT_OUTPUT_CAP {
                    return Err(CliError::Config(format!(
                        "params.output_cap: must be at most {DEFAULT_OUTPUT_CAP}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON of everything that determines the results: schema
    /// version, kind, seed and the fully defaulted parameters. Keys are sorted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "params": serde_json::to_value(&self.params).expect("params serialize"),
        });
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`ScenarioConfig::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Sets a sweepable parameter.
    pub fn set_param(&mut self, name: &str, value: f64) -> CliResult<()> {
        if !self.kind.sweepable().contains(&name) {
            return Err(CliError::Config(format!(
                "sweep parameter {name:?} is not sweepable for {}; expected one of {}",
                self.kind.name(),
                self.kind.sweepable().join(", ")
            )));
        }
        let count = |v: f64| -> CliResult<usize> {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(CliError::Config(format!("{name}: {v} is not a non-negative integer")))
            }
        };
        match (&mut self.params, name) {
            (Params::PropagatorCheck(p), "dt") => p.lattice.dt = value,
            (Params::PropagatorCheck(p), "mass") => p.lattice.mass = value,
            (Params::PropagatorCheck(p), "random_scale") => p.random_scale = value,
            (Params::ClassicalSelect(p), "imag_scale") => p.imag_scale = value,
            (Params::Measurement(p), "hbar") => p.hbar = value,
            (Params::Measurement(p), "gap") => p.gap = Some(value),
            (Params::DoubleSlit(p), "delta") => p.delta = value,
            (Params::DoubleSlit(p), "tau") => p.tau = count(value)?,
            (Params::HiggsToy(p), "m2_i") => p.m2_i = value,
            (Params::HiggsToy(p), "m2_r") => p.m2_r = value,
            (Params::HiggsToy(p), "duration") => p.duration = value,
            (Params::Tape(p), "generations") => p.generations = count(value)?,
            _ => unreachable!("sweepable list and setters agree"),
        }
        self.validate().map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("sweep {name} = {value}: {m}")),
            other => other,
        })
    }
}
