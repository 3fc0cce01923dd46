//! Run configuration: JSON schema, defaults and validation.
//!
//! All default parameter values live here. Unknown keys are rejected with a
//! "did you mean" hint, and every value not present in the input is recorded
//! in [`LoadedConfig::defaulted`].

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::Tolerances;
use crate::ensemble::{InitialState, LEAKAGE_WARN};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::potential::{HamiltonianParams, MIN_BASIS};
use crate::spectrum::CalibrationTargets;

pub const SCHEMA_VERSION: u32 = 1;

/// Junction parameter placing the well minima near phi = 1.
pub const DEFAULT_BETA: f64 = 1.19;
pub const DEFAULT_V0: f64 = 14.15;
/// Output of `calibrate` with the default targets.
pub const DEFAULT_MU: f64 = 13.789_118_440_515_09;
pub const DEFAULT_DELTA: f64 = 0.00032;
pub const DEFAULT_OMEGA_C: f64 = 0.05;
pub const DEFAULT_DT: f64 = 0.5;
pub const DEFAULT_N_BASIS: usize = 128;
pub const DEFAULT_REALIZATIONS: usize = 400;
pub const DEFAULT_MASTER_SEED: u64 = 0;
/// Target number of output samples when `sample_every` is automatic.
pub const DEFAULT_SAMPLES: usize = 500;
/// Automatic run length in units of 1 / D_pred.
pub const DEFAULT_DECAY_TIMES: f64 = 3.0;

impl Default for HamiltonianParams {
    fn default() -> Self {
        HamiltonianParams {
            mu: DEFAULT_MU,
            beta: DEFAULT_BETA,
            v0: DEFAULT_V0,
            phi_ext: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub n_basis: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            n_basis: DEFAULT_N_BASIS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub delta: f64,
    pub omega_c: f64,
    pub dt: f64,
    /// Trace length for the `noise` command; ensembles derive their own.
    pub n_steps: usize,
    /// Seed for the `noise` command.
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            delta: DEFAULT_DELTA,
            omega_c: DEFAULT_OMEGA_C,
            dt: DEFAULT_DT,
            n_steps: 1_000_000,
            seed: DEFAULT_MASTER_SEED,
        }
    }
}

impl NoiseConfig {
    pub fn params(&self, n_steps: usize) -> NoiseParams {
        NoiseParams {
            delta: self.delta,
            omega_c: self.omega_c,
            dt: self.dt,
            n_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_realizations: usize,
    pub master_seed: u64,
    /// `None`: three predicted decay times, 3 / D_pred.
    pub total_time: Option<f64>,
    /// `None`: about 500 samples per run.
    pub sample_every: Option<usize>,
    pub initial_state: InitialState,
    pub density_snapshots: Vec<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_realizations: DEFAULT_REALIZATIONS,
            master_seed: DEFAULT_MASTER_SEED,
            total_time: None,
            sample_every: None,
            initial_state: InitialState::default(),
            density_snapshots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub hamiltonian: HamiltonianParams,
    pub basis: BasisConfig,
    pub noise: NoiseConfig,
    pub ensemble: EnsembleSection,
    pub calibration: CalibrationTargets,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            hamiltonian: HamiltonianParams::default(),
            basis: BasisConfig::default(),
            noise: NoiseConfig::default(),
            ensemble: EnsembleSection::default(),
            calibration: CalibrationTargets::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Dotted paths of every value filled from defaults.
    pub defaulted: Vec<String>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("version", &[]),
    ("hamiltonian", &["mu", "beta", "v0", "phi_ext"]),
    ("basis", &["n_basis"]),
    ("noise", &["delta", "omega_c", "dt", "n_steps", "seed"]),
    (
        "ensemble",
        &[
            "n_realizations",
            "master_seed",
            "total_time",
            "sample_every",
            "initial_state",
            "density_snapshots",
        ],
    ),
    (
        "calibration",
        &["isolation_min", "vx_min", "vx_max", "mu_min", "mu_max", "n_grid"],
    ),
    ("analysis", &["tolerances"]),
    ("output", &["directory", "formats"]),
];

const TOLERANCE_KEYS: &[&str] = &[
    "d_rel",
    "gamma_rel",
    "omega_rel",
    "leakage_max",
    "isolation_min",
    "endpoint",
    "bloch_rms",
];

fn suggest(key: &str, known: &[&str]) -> String {
    known
        .iter()
        .map(|k| (strsim::levenshtein(key, k), k))
        .filter(|(d, _)| *d <= 3)
        .min()
        .map(|(_, k)| format!("; did you mean \"{k}\"?"))
        .unwrap_or_default()
}

fn check_keys(obj: &serde_json::Map<String, Value>, known: &[&str], prefix: &str) -> Result<()> {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            return Err(Error::Validation {
                message: format!("unknown key \"{key}\"{}", suggest(key, known)),
                path,
            });
        }
    }
    Ok(())
}

fn walk(root: &Value, defaulted: &mut Vec<String>) -> Result<()> {
    let obj = root.as_object().ok_or_else(|| Error::Validation {
        path: "<root>".into(),
        message: "config must be a JSON object".into(),
    })?;
    let top: Vec<&str> = SECTIONS.iter().map(|s| s.0).collect();
    check_keys(obj, &top, "")?;
    for (section, keys) in SECTIONS {
        let Some(value) = obj.get(*section) else {
            if keys.is_empty() {
                defaulted.push(section.to_string());
            }
            for k in keys.iter() {
                defaulted.push(format!("{section}.{k}"));
            }
            continue;
        };
        if keys.is_empty() {
            continue;
        }
        let inner = value.as_object().ok_or_else(|| Error::Validation {
            path: section.to_string(),
            message: "expected an object".into(),
        })?;
        check_keys(inner, keys, section)?;
        for k in keys.iter() {
            match inner.get(*k) {
                None => defaulted.push(format!("{section}.{k}")),
                Some(Value::Object(tol)) if *section == "analysis" && *k == "tolerances" => {
                    check_keys(tol, TOLERANCE_KEYS, "analysis.tolerances")?;
                    for t in TOLERANCE_KEYS {
                        if !tol.contains_key(*t) {
                            defaulted.push(format!("analysis.tolerances.{t}"));
                        }
                    }
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

fn section_error(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::Validation {
            path: format!("{section}.{field}"),
            message: reason,
        },
        other => other,
    }
}

fn positive(path: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation {
            path: path.into(),
            message: format!("must be > 0, got {value}"),
        })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Validation {
                path: "version".into(),
                message: format!("unsupported schema version {}", self.version),
            });
        }
        self.hamiltonian
            .validate()
            .map_err(|e| section_error("hamiltonian", e))?;
        if self.basis.n_basis < MIN_BASIS {
            return Err(Error::Validation {
                path: "basis.n_basis".into(),
                message: format!("must be >= {MIN_BASIS}"),
            });
        }
        self.noise
            .params(self.noise.n_steps)
            .validate()
            .map_err(|e| section_error("noise", e))?;
        let e = &self.ensemble;
        if e.n_realizations == 0 {
            return Err(Error::Validation {
                path: "ensemble.n_realizations".into(),
                message: "must be >= 1".into(),
            });
        }
        if let Some(t) = e.total_time {
            positive("ensemble.total_time", t)?;
        }
        if e.sample_every == Some(0) {
            return Err(Error::Validation {
                path: "ensemble.sample_every".into(),
                message: "must be >= 1".into(),
            });
        }
        let c = &self.calibration;
        positive("calibration.mu_min", c.mu_min)?;
        if !(c.mu_max > c.mu_min) || c.n_grid < 2 || !(c.vx_max >= c.vx_min) {
            return Err(Error::Validation {
                path: "calibration".into(),
                message: "need mu_min < mu_max, vx_min <= vx_max and n_grid >= 2".into(),
            });
        }
        let t = &self.analysis.tolerances;
        for (name, v) in [
            ("d_rel", t.d_rel),
            ("gamma_rel", t.gamma_rel),
            ("omega_rel", t.omega_rel),
            ("leakage_max", t.leakage_max),
            ("endpoint", t.endpoint),
            ("bloch_rms", t.bloch_rms),
        ] {
            positive(&format!("analysis.tolerances.{name}"), v)?;
        }
        if t.leakage_max > LEAKAGE_WARN {
            log::warn!("leakage tolerance {} is above the warning level {LEAKAGE_WARN}", t.leakage_max);
        }
        let allowed: BTreeSet<&str> = ["csv", "json", "text"].into();
        for f in &self.output.formats {
            if !allowed.contains(f.as_str()) {
                return Err(Error::Validation {
                    path: "output.formats".into(),
                    message: format!("unknown format \"{f}\" (expected csv, json or text)"),
                });
            }
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}

pub fn load_config_str(text: &str, origin: &str) -> Result<LoadedConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.into(),
        message: e.to_string(),
    })?;
    let mut defaulted = Vec::new();
    walk(&value, &mut defaulted)?;
    let config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Validation {
        path: origin.into(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(LoadedConfig { config, defaulted })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_config_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let loaded = load_config_str("{}", "test").unwrap();
        let c = &loaded.config;
        assert_eq!(c.noise.delta, 0.00032);
        assert_eq!(c.noise.omega_c, 0.05);
        assert_eq!(c.hamiltonian.phi_ext, 0.0);
        assert_eq!(c, &RunConfig::default());
        assert!(loaded.defaulted.contains(&"hamiltonian.mu".to_string()));
        assert!(loaded.defaulted.contains(&"analysis.tolerances".to_string()));
    }

    #[test]
    fn provenance_tracks_partial_sections() {
        let loaded =
            load_config_str(r#"{"noise": {"delta": 0.001}, "analysis": {"tolerances": {"d_rel": 0.1}}}"#, "t")
                .unwrap();
        assert!(!loaded.defaulted.contains(&"noise.delta".to_string()));
        assert!(loaded.defaulted.contains(&"noise.omega_c".to_string()));
        assert!(loaded.defaulted.contains(&"analysis.tolerances.endpoint".to_string()));
        assert!(!loaded.defaulted.contains(&"analysis.tolerances.d_rel".to_string()));
        assert_eq!(loaded.config.noise.delta, 0.001);
    }

    #[test]
    fn negative_mu_names_field() {
        let err = load_config_str(r#"{"hamiltonian": {"mu": -1.0}}"#, "t").unwrap_err();
        match err {
            Error::Validation { path, .. } => assert_eq!(path, "hamiltonian.mu"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let err = load_config_str(r#"{"noize": {}}"#, "t").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("noize") && msg.contains("did you mean \"noise\""), "{msg}");
        let err = load_config_str(r#"{"noise": {"omega": 0.1}}"#, "t").unwrap_err();
        assert!(err.to_string().contains("omega_c"));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(load_config_str("{", "t"), Err(Error::Parse { .. })));
    }

    #[test]
    fn initial_state_variants_parse() {
        let c = load_config_str(
            r#"{"ensemble": {"initial_state": {"kind": "localized", "side": "L"}}}"#,
            "t",
        )
        .unwrap();
        assert_eq!(
            c.config.ensemble.initial_state,
            InitialState::Localized {
                side: crate::ensemble::Side::L
            }
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back = load_config_str(&text, "t").unwrap();
        assert_eq!(back.config, c);
        assert!(back.defaulted.is_empty());
    }
}
