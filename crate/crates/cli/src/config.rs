//! TOML run configuration in user-facing units (eV, nm, fm, MeV·fm, V/m).

use serde::{Deserialize, Serialize};

use floquet_core::floquet::{ScatteringProblem, SolverOptions, DEFAULT_MAX_CUTOFF};
use floquet_core::oracles::BarrierRegime;
use floquet_core::resonance::ResonanceSettings;
use floquet_core::setup::{DriveField, ParticleSpec, PotentialSpec};
use floquet_core::units::{fm, mev_fm, nm, COULOMB_MEV_FM};

use crate::error::{config_error, CliError};

pub const CONFIG_SCHEMA: &str = "floquet-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParticleConfig {
    Electron,
    DeuteriumTritium,
    Custom { mass_ev: f64, charge_factor: f64 },
}

impl ParticleConfig {
    pub fn spec(&self) -> Result<ParticleSpec, CliError> {
        Ok(match *self {
            Self::Electron => ParticleSpec::electron(),
            Self::DeuteriumTritium => ParticleSpec::deuterium_tritium(),
            Self::Custom { mass_ev, charge_factor } => ParticleSpec::new(mass_ev, charge_factor)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default)]
    pub field_v_per_m: f64,
    pub frequency_ev: f64,
}

fn default_strength() -> f64 {
    COULOMB_MEV_FM
}

fn default_inner_radius() -> f64 {
    3.89
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Rectangular {
        height_ev: f64,
        length_nm: f64,
        #[serde(default)]
        offset_ev: f64,
    },
    Coulomb {
        #[serde(default = "default_strength")]
        strength_mev_fm: f64,
        #[serde(default = "default_inner_radius")]
        inner_radius_fm: f64,
        #[serde(default)]
        depth_ev: f64,
    },
    /// (x in nm, V in eV) pairs including both asymptotic levels.
    Tabulated { samples: Vec<[f64; 2]> },
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        Ok(match self {
            Self::Rectangular {
                height_ev,
                length_nm,
                offset_ev,
            } => PotentialSpec::rectangular(*height_ev, nm(*length_nm), *offset_ev)?,
            Self::Coulomb {
                strength_mev_fm,
                inner_radius_fm,
                depth_ev,
            } => PotentialSpec::truncated_coulomb(mev_fm(*strength_mev_fm), fm(*inner_radius_fm), *depth_ev)?,
            Self::Tabulated { samples } => PotentialSpec::tabulated(samples.iter().map(|s| (nm(s[0]), s[1])).collect())?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rectangular { .. } => "rectangular",
            Self::Coulomb { .. } => "coulomb",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    /// V₀ in eV or α in MeV·fm.
    pub fn barrier(&self) -> Option<f64> {
        match self {
            Self::Rectangular { height_ev, .. } => Some(*height_ev),
            Self::Coulomb { strength_mev_fm, .. } => Some(*strength_mev_fm),
            Self::Tabulated { .. } => None,
        }
    }

    /// L in nm or r₀ in fm.
    pub fn length(&self) -> Option<f64> {
        match self {
            Self::Rectangular { length_nm, .. } => Some(*length_nm),
            Self::Coulomb { inner_radius_fm, .. } => Some(*inner_radius_fm),
            Self::Tabulated { .. } => None,
        }
    }

    /// V₁ in eV.
    pub fn offset(&self) -> f64 {
        match self {
            Self::Rectangular { offset_ev, .. } => *offset_ev,
            Self::Coulomb { depth_ev, .. } => *depth_ev,
            Self::Tabulated { samples } => -samples.last().map_or(0.0, |s| s[1]),
        }
    }
}

/// The physical input of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub energy_ev: f64,
    pub particle: ParticleConfig,
    pub drive: DriveConfig,
    pub potential: PotentialConfig,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ScatteringProblem, CliError> {
        Ok(ScatteringProblem::new(
            self.particle.spec()?,
            DriveField::new(self.drive.field_v_per_m, self.drive.frequency_ev)?,
            self.potential.spec()?,
            self.energy_ev,
        )?)
    }

    /// Copy with the swept quantity replaced by `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self, CliError> {
        let mut p = self.clone();
        match axis {
            Axis::Energy => p.energy_ev = value,
            Axis::Frequency => p.drive.frequency_ev = value,
            Axis::Field => p.drive.field_v_per_m = value,
            Axis::Length => match &mut p.potential {
                PotentialConfig::Rectangular { length_nm, .. } => *length_nm = value,
                PotentialConfig::Coulomb { inner_radius_fm, .. } => *inner_radius_fm = value,
                PotentialConfig::Tabulated { .. } => return Err(config_error("a tabulated potential has no length axis")),
            },
            Axis::Offset => match &mut p.potential {
                PotentialConfig::Rectangular { offset_ev, .. } => *offset_ev = value,
                PotentialConfig::Coulomb { depth_ev, .. } => *depth_ev = value,
                PotentialConfig::Tabulated { .. } => return Err(config_error("a tabulated potential has no offset axis")),
            },
        }
        Ok(p)
    }
}

fn default_cutoff() -> usize {
    8
}

fn default_target() -> f64 {
    1e-6
}

fn default_max_cutoff() -> usize {
    DEFAULT_MAX_CUTOFF
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten, default)]
    pub options: SolverOptions,
    /// Sideband cutoff N (2N + 1 channels) unless `adaptive`.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default = "default_target")]
    pub target_deficit: f64,
    #[serde(default = "default_max_cutoff")]
    pub max_cutoff: usize,
    /// Also solve the single-channel period-averaged barrier.
    #[serde(default)]
    pub time_averaged: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            options: SolverOptions::default(),
            cutoff: default_cutoff(),
            adaptive: false,
            target_deficit: default_target(),
            max_cutoff: default_max_cutoff(),
            time_averaged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// E in eV.
    Energy,
    /// ω in eV.
    Frequency,
    /// 𝔈₀ in V/m.
    Field,
    /// L in nm or r₀ in fm.
    Length,
    /// V₁ in eV.
    Offset,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::Frequency => "frequency",
            Self::Field => "field",
            Self::Length => "length",
            Self::Offset => "offset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

fn default_timeout() -> f64 {
    300.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Points running longer than this are reported as failed.
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count < 2 {
            return Err(config_error("sweep count must be at least 2"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(config_error("sweep needs finite start < stop"));
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            return Err(config_error("log spacing needs positive endpoints"));
        }
        if !(self.timeout_s > 0.0) {
            return Err(config_error("timeout_s must be positive"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    StaticRectangular,
    Junction,
    Perturbative,
    Opaque,
    StaticCoulomb,
    Wkb,
}

impl std::str::FromStr for OracleKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| config_error(format!("unknown oracle '{s}' (static-rectangular, junction, perturbative, opaque, static-coulomb, wkb)")))
    }
}

impl OracleKind {
    /// Whether the oracle applies to this potential family.
    pub fn check(self, potential: &PotentialConfig) -> Result<(), CliError> {
        let ok = match self {
            Self::StaticRectangular | Self::Junction | Self::Perturbative | Self::Opaque => {
                matches!(potential, PotentialConfig::Rectangular { .. })
            }
            Self::StaticCoulomb => matches!(potential, PotentialConfig::Coulomb { .. }),
            Self::Wkb => true,
        };
        if ok {
            Ok(())
        } else {
            Err(config_error(format!("oracle {self:?} does not apply to a {} potential", potential.name())))
        }
    }
}

fn default_junction_cutoff() -> usize {
    16
}

fn default_m_range() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Junction matching order M.
    #[serde(default = "default_junction_cutoff")]
    pub cutoff: usize,
    /// Opaque estimate sidebands |m| ≤ m_range.
    #[serde(default = "default_m_range")]
    pub m_range: usize,
    #[serde(default)]
    pub regime: Option<BarrierRegime>,
}

impl OracleConfig {
    pub fn new(kind: OracleKind) -> Self {
        Self {
            kind,
            cutoff: default_junction_cutoff(),
            m_range: default_m_range(),
            regime: None,
        }
    }
}

fn default_label() -> String {
    "sweep".into()
}

/// `flatten` rules out `deny_unknown_fields` on [solver], so check by hand
/// against the keys the defaults serialize to.
fn check_solver_keys(table: &toml::Table) -> Result<(), CliError> {
    let Some(solver) = table.get("solver").and_then(toml::Value::as_table) else {
        return Ok(());
    };
    let known = toml::Table::try_from(SolverConfig::default()).map_err(|e| config_error(e.to_string()))?;
    match solver.keys().find(|k| !known.contains_key(*k)) {
        Some(k) => Err(config_error(format!("unknown [solver] key '{k}'"))),
        None => Ok(()),
    }
}

/// A configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<String>,
    #[serde(default = "default_label")]
    pub label: String,
    pub energy_ev: f64,
    pub particle: ParticleConfig,
    pub drive: DriveConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub resonance: Option<ResonanceSettings>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        check_solver_keys(&table)?;
        let c: Self = table.try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.schema {
            if s != CONFIG_SCHEMA {
                return Err(config_error(format!("unsupported config schema '{s}', expected '{CONFIG_SCHEMA}'")));
            }
        }
        self.problem().build()?;
        self.solver.options.validate()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    pub fn problem(&self) -> ProblemConfig {
        ProblemConfig {
            energy_ev: self.energy_ev,
            particle: self.particle,
            drive: self.drive,
            potential: self.potential.clone(),
        }
    }
}
