//! TOML configuration schema shared by all modes.
//!
//! Sections are optional at the file level; each mode demands the sections
//! it needs and reports the missing or offending key by path.  Unknown keys
//! are rejected everywhere so typos cannot silently fall back to defaults.

use std::path::Path;

use dtls_core::angular::{AtomicTransition, Polarization};
use dtls_core::engine::{Engine, EngineSpec, FieldSpec, TurnOnMode};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub transition: Option<TransitionSection>,
    pub pump: Option<FieldSection>,
    pub probe: Option<FieldSection>,
    pub zeeman: Option<ZeemanSection>,
    pub scan: Option<ScanSection>,
    pub trace: Option<TraceSection>,
    pub f_function: Option<FFunctionSection>,
    pub analytic_lambda: Option<LambdaSection>,
    pub analytic_n: Option<NSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSection {
    pub fg: f64,
    pub fe: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub g_ground: f64,
    #[serde(default = "one")]
    pub g_excited: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// Half-Rabi amplitude in units of gamma.
    pub rabi: f64,
    pub polarization: PolarizationName,
    /// Optical phase in radians applied to the Rabi amplitude.
    #[serde(default)]
    pub phase: f64,
    /// Detuning from the atomic resonance (pump only).
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationName {
    LinearX,
    LinearY,
    SigmaPlus,
    SigmaMinus,
    Pi,
}

impl PolarizationName {
    pub fn build(self) -> Polarization {
        match self {
            PolarizationName::LinearX => Polarization::linear_x(),
            PolarizationName::LinearY => Polarization::linear_y(),
            PolarizationName::SigmaPlus => Polarization::sigma_plus(),
            PolarizationName::SigmaMinus => Polarization::sigma_minus(),
            PolarizationName::Pi => Polarization::pi(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanSection {
    #[serde(default)]
    pub larmor_ground: f64,
    #[serde(default)]
    pub larmor_excited: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_count: usize,
    pub t_final: f64,
    pub time_samples: usize,
    #[serde(default = "simultaneous")]
    pub turn_on: TurnOnMode,
    #[serde(default)]
    pub include_fwm: bool,
    #[serde(default = "yes")]
    pub include_linear: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub delta: f64,
    pub t_final: f64,
    pub time_samples: usize,
    #[serde(default = "simultaneous")]
    pub turn_on: TurnOnMode,
    #[serde(default)]
    pub include_fwm: bool,
    #[serde(default = "yes")]
    pub include_linear: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FFunctionSection {
    pub x: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_count: usize,
    pub tau_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    #[serde(default = "one")]
    pub gamma: f64,
    pub pump_rabi: f64,
    pub probe_rabi: f64,
    /// Decay branching into the pump-side ground state; the probe-side
    /// branch is the remainder.  Defaults to an even split.
    pub branching_to_pump_ground: Option<f64>,
    pub deltas: Vec<f64>,
    pub t_final: f64,
    pub time_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NSection {
    #[serde(default = "one")]
    pub gamma: f64,
    pub pump_rabi: f64,
    pub probe_rabi: f64,
    /// Relative dipole amplitude of the open pump leg, in [-1, 1].
    pub coupling_ratio: f64,
    pub deltas: Vec<f64>,
    pub t_final: f64,
    pub time_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Physical decay rate in MHz; when set, detuning and time columns in
    /// MHz and microseconds are appended to spectrum exports.
    pub gamma_mhz: Option<f64>,
    /// Export the detuning axis negated (pump-minus-probe convention).
    #[serde(default)]
    pub flip_detuning_axis: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn simultaneous() -> TurnOnMode {
    TurnOnMode::Simultaneous
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Io(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn require<'a, T>(
        section: &'a Option<T>,
        name: &str,
        mode: &str,
    ) -> Result<&'a T, CliError> {
        section.as_ref().ok_or_else(|| {
            CliError::Config(format!("mode `{mode}` needs a `[{name}]` section"))
        })
    }

    /// Builds the degenerate-level engine from the transition, pump, probe
    /// and optional zeeman sections.
    pub fn build_engine(&self, mode: &str) -> Result<Engine, CliError> {
        let tr = Self::require(&self.transition, "transition", mode)?;
        let pump = Self::require(&self.pump, "pump", mode)?;
        let probe = Self::require(&self.probe, "probe", mode)?;
        let transition = AtomicTransition::new(tr.fg, tr.fe, tr.gamma, tr.g_ground, tr.g_excited)
            .map_err(|e| CliError::Config(format!("[transition]: {e}")))?;
        if probe.detuning != 0.0 {
            return Err(CliError::Config(
                "[probe]: set the probe-pump detuning in [scan]/[trace], not on the probe field"
                    .into(),
            ));
        }
        let field = |f: &FieldSection| FieldSpec {
            rabi: Complex64::from_polar(f.rabi, f.phase),
            polarization: f.polarization.build(),
        };
        let (lg, le) = self
            .zeeman
            .as_ref()
            .map_or((0.0, 0.0), |z| (z.larmor_ground, z.larmor_excited));
        Engine::new(EngineSpec {
            transition,
            pump: field(pump),
            pump_detuning: pump.detuning,
            probe: field(probe),
            larmor_ground: lg,
            larmor_excited: le,
        })
        .map_err(|e| CliError::Config(format!("engine setup: {e}")))
    }

    pub fn output(&self) -> OutputSection {
        self.output.clone().unwrap_or_default()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
