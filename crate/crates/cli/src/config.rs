//! Experiment configuration schema (versioned JSON).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use eomsim_core::{DriftForm, InputStateSpec, TransductionKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Mechanical quality factor; the literal string "inf" means gamma_m = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quality(pub f64);

impl Quality {
    pub fn gamma(&self, omega_m: f64) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            omega_m / self.0
        }
    }
}

impl Serialize for Quality {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Quality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) => Ok(Quality(q)),
            Raw::Str(s) if s == "inf" => Ok(Quality(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "physics.q_m: expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Memory,
    Transduce,
    Contour,
    OracleCheck,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Memory => "memory",
            ExperimentKind::Transduce => "transduce",
            ExperimentKind::Contour => "contour",
            ExperimentKind::OracleCheck => "oracle-check",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransductionParams {
    pub kind: TransductionKind,
    #[serde(default = "default_area")]
    pub area_pi: f64,
    #[serde(default)]
    pub separation_pct: f64,
}

fn default_area() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Peak electromechanical coupling (units omega_m).
    #[serde(default = "default_omega")]
    pub omega_mu: f64,
    /// Wait between memory pulse centers (units 1/omega_m).
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    /// Transduction pulse layout (transduce/contour kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transduction: Option<TransductionParams>,
}

fn default_omega() -> f64 {
    0.1
}

fn default_delta_t() -> f64 {
    64.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub q_m: Quality,
    #[serde(default)]
    pub nbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsParams {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub drift_form: DriftForm,
    /// Number of population sample times across the schedule.
    #[serde(default = "default_record_points")]
    pub record_points: usize,
    /// Trajectories whose full population traces are persisted.
    #[serde(default = "default_trace_trajectories")]
    pub trace_trajectories: usize,
}

fn default_dt() -> f64 {
    0.01
}

fn default_n_traj() -> usize {
    1000
}

fn default_record_points() -> usize {
    64
}

fn default_trace_trajectories() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourGrid {
    pub areas_pi: Vec<f64>,
    pub separations_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub kind: ExperimentKind,
    /// Per-mode cutoff used for the non-thermal report basis; thermal
    /// trajectories enlarge their working cutoffs as sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub input: InputStateSpec,
    #[serde(default = "ProtocolParams::default_values")]
    pub protocol: ProtocolParams,
    pub physics: PhysicsParams,
    #[serde(default = "NumericsParams::default_values")]
    pub numerics: NumericsParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourGrid>,
}

impl ProtocolParams {
    pub fn default_values() -> Self {
        Self {
            omega_mu: default_omega(),
            delta_t: default_delta_t(),
            transduction: None,
        }
    }
}

impl NumericsParams {
    pub fn default_values() -> Self {
        Self {
            dt: default_dt(),
            n_traj: default_n_traj(),
            master_seed: 0,
            drift_form: DriftForm::Standard,
            record_points: default_record_points(),
            trace_trajectories: default_trace_trajectories(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != SCHEMA_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            ));
        }
        if let Some(c) = self.cutoff {
            if c < 2 {
                return Err(invalid("cutoff", format!("cutoff {c} < 2")));
            }
        }
        if !(self.protocol.omega_mu > 0.0) {
            return Err(invalid(
                "protocol.omega_mu",
                format!("peak coupling {} must be positive", self.protocol.omega_mu),
            ));
        }
        if self.protocol.delta_t < 0.0 {
            return Err(invalid(
                "protocol.delta_t",
                format!("negative wait {}", self.protocol.delta_t),
            ));
        }
        if !(self.physics.q_m.0 > 0.0) {
            return Err(invalid("physics.q_m", "Q_m must be positive or \"inf\""));
        }
        if self.physics.nbar < 0.0 {
            return Err(invalid("physics.nbar", "nbar must be nonnegative"));
        }
        if !(self.numerics.dt > 0.0) {
            return Err(invalid("numerics.dt", "dt must be positive"));
        }
        if self.numerics.n_traj == 0 {
            return Err(invalid("numerics.n_traj", "n_traj must be positive"));
        }
        if self.numerics.record_points < 2 {
            return Err(invalid("numerics.record_points", "need at least 2 points"));
        }
        match self.kind {
            ExperimentKind::Transduce => {
                if self.protocol.transduction.is_none() {
                    return Err(invalid(
                        "protocol.transduction",
                        "transduce requires a transduction block",
                    ));
                }
            }
            ExperimentKind::Contour => {
                let grid = self
                    .contour
                    .as_ref()
                    .ok_or_else(|| invalid("contour", "contour requires a grid block"))?;
                if grid.areas_pi.is_empty() || grid.separations_pct.is_empty() {
                    return Err(invalid("contour", "empty sweep axis"));
                }
            }
            ExperimentKind::Memory | ExperimentKind::OracleCheck => {}
        }
        if let Some(t) = &self.protocol.transduction {
            if !(t.area_pi > 0.0) {
                return Err(invalid(
                    "protocol.transduction.area_pi",
                    "area must be positive",
                ));
            }
        }
        Ok(())
    }

    /// Canonical-JSON SHA-256 of the config, stamped into every output file.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Report-basis cutoff per mode.
    pub fn base_cutoff(&self) -> usize {
        self.cutoff
            .unwrap_or_else(|| (self.input.max_excitation_hint() + 2).max(6))
    }
}

/// Derive a per-sweep-point seed from the master seed and the point's
/// coordinates; independent of point ordering.
pub fn point_seed(master_seed: u64, coords: &[(&str, f64)]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for (name, value) in coords {
        hasher.update(name.as_bytes());
        hasher.update(value.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
