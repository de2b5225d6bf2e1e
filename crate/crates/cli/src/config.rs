//! Run configurations: one JSON document per run, validated before any work.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sasa_core::asympt::SectorConfig;
use sasa_core::painleve::ContourConfig;
use sasa_core::pde::EvolveConfig;
use sasa_core::rh::LineConfig;
use sasa_core::scattering::{InitialDatum, Profile, ScatterConfig};
use sasa_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Either an analytic profile sampled on `[x_min, x_max]` or a CSV of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default)]
    pub samples: Option<PathBuf>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_x_min() -> f64 {
    -8.0
}
fn default_x_max() -> f64 {
    8.0
}
fn default_points() -> usize {
    1601
}

impl DatumSpec {
    /// Relative sample paths are taken from the config file's directory.
    pub fn load(&self, base: &Path) -> Result<InitialDatum, CliError> {
        match (&self.profile, &self.samples) {
            (Some(p), None) => Ok(InitialDatum::from_profile(*p, self.x_min, self.x_max, self.points)?),
            (None, Some(path)) => Ok(InitialDatum::read_csv(&base.join(path))?),
            _ => Err(CliError::Config("datum needs exactly one of `profile` or `samples`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterRun {
    pub datum: DatumSpec,
    #[serde(default)]
    pub scatter: ScatterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructRun {
    /// Record CSV written by `scatter`.
    pub record: PathBuf,
    pub lattice: Lattice,
    #[serde(default)]
    pub line: LineConfig,
    /// Datum to compare against at `t = 0`.
    #[serde(default)]
    pub compare: Option<DatumSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PainleveRun {
    pub s: Complex64,
    #[serde(default = "default_y_min")]
    pub y_min: f64,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    #[serde(default = "default_y_step")]
    pub y_step: f64,
    #[serde(default)]
    pub contour: ContourConfig,
}

fn default_y_min() -> f64 {
    -6.0
}
fn default_y_max() -> f64 {
    2.0
}
fn default_y_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EvolveStart {
    /// Exact one-soliton, used as a regression oracle.
    Soliton {
        a: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        x0: f64,
    },
    Datum(DatumSpec),
    /// Binary snapshot to restart from.
    Restart(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveRun {
    pub start: EvolveStart,
    pub box_length: f64,
    pub n: usize,
    pub evolve: EvolveConfig,
    /// Extra output times before `evolve.t_final`.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsRun {
    pub datum: DatumSpec,
    #[serde(default)]
    pub sector: SectorConfig,
}

/// Parsed document and the directory relative paths are resolved against.
pub struct Loaded<T> {
    pub base: PathBuf,
    pub run: T,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Loaded<T>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(CliError::Config(format!("schema_version must be {SCHEMA_VERSION}, found {version:?}")));
    }
    let mut obj = value;
    obj.as_object_mut().expect("checked above").remove("schema_version");
    let run: T = serde_json::from_value(obj).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { base, run })
}

/// Named tolerances with their defaults; `--tol-override` may change them.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("symmetry", 1e-8),
        ("round_trip", 1e-4),
        ("soliton_regression", 1e-6),
        ("l2_drift", 1e-8),
        ("ode_residual", 1e-5),
        ("phase_flatness", 1e-6),
        ("psi_defect", 1e-5),
        ("sector_exponent", -0.55),
        ("hierarchy", 1e-4),
        ("rh_residual", 1e-10),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn apply_overrides(tols: &mut BTreeMap<String, f64>, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (name, value) =
            o.split_once('=').ok_or_else(|| CliError::Config(format!("override `{o}` is not name=value")))?;
        let v: f64 = value.trim().parse().map_err(|_| CliError::Config(format!("override `{o}`: bad number")))?;
        match tols.get_mut(name.trim()) {
            Some(slot) => *slot = v,
            None => {
                let known: Vec<&str> = tols.keys().map(String::as_str).collect();
                return Err(CliError::Config(format!("unknown tolerance `{name}` (known: {})", known.join(", "))));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("c.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let dir = tempfile::tempdir().unwrap();
        let ok = r#"{"schema_version": 1, "datum": {"profile": {"kind": "gaussian", "amplitude": 0.1}}}"#;
        assert!(load::<ScatterRun>(&write(dir.path(), ok)).is_ok());
        let extra = r#"{"schema_version": 1, "datum": {"profile": {"kind": "gaussian", "amplitude": 0.1}}, "bogus": 1}"#;
        assert!(load::<ScatterRun>(&write(dir.path(), extra)).is_err());
        let nested = r#"{"schema_version": 1, "datum": {"profile": {"kind": "gaussian", "amplitude": 0.1, "hue": 2}}}"#;
        assert!(load::<ScatterRun>(&write(dir.path(), nested)).is_err());
        let old = r#"{"schema_version": 0, "datum": {"profile": {"kind": "gaussian", "amplitude": 0.1}}}"#;
        assert!(load::<ScatterRun>(&write(dir.path(), old)).is_err());
    }

    #[test]
    fn overrides() {
        let mut t = default_tolerances();
        apply_overrides(&mut t, &["round_trip=1e-3".into()]).unwrap();
        assert_eq!(t["round_trip"], 1e-3);
        assert!(apply_overrides(&mut t, &["nope=1".into()]).is_err());
        assert!(apply_overrides(&mut t, &["round_trip".into()]).is_err());
    }

    #[test]
    fn datum_needs_one_source() {
        let d = DatumSpec { profile: None, samples: None, x_min: -8.0, x_max: 8.0, points: 1601 };
        assert!(d.load(Path::new(".")).is_err());
    }
}
