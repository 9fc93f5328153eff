//! Experiment configuration files.
//!
//! A config is a TOML document with a top-level `kind` and the sections
//! `[system]`, `[drive]`, `[truncation]`, `[run]` and `[output]`. Every key is
//! optional except the kind-specific knobs listed in [`ExperimentConfig::validate`];
//! unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use optolase_core::model::{DriveTone, SystemParams};
use optolase_core::statistics::Window;
use optolase_core::{Error as CoreError, FockCutoffs};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SteadystateSweep,
    DetuningMap,
    TimeEvolution,
    Distributions,
    Spectrum,
    AmplitudeMap,
    Analytics,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::SteadystateSweep,
        Kind::DetuningMap,
        Kind::TimeEvolution,
        Kind::Distributions,
        Kind::Spectrum,
        Kind::AmplitudeMap,
        Kind::Analytics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::SteadystateSweep => "steadystate-sweep",
            Kind::DetuningMap => "detuning-map",
            Kind::TimeEvolution => "time-evolution",
            Kind::Distributions => "distributions",
            Kind::Spectrum => "spectrum",
            Kind::AmplitudeMap => "amplitude-map",
            Kind::Analytics => "analytics",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("kind", format!("unknown experiment kind {s:?}")))
    }
}

/// Concatenation of `start:stop:count` segments (or bare values), written as
/// a comma-separated string such as `"0:0.1:11, 0.2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    spec: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|k| if k + 1 == count { stop } else { start + step * k as f64 }).collect()
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let mut values = Vec::new();
        for segment in spec.split(',').map(str::trim) {
            let parts: Vec<&str> = segment.split(':').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?} in grid {spec:?}"));
            match parts.as_slice() {
                [v] if !v.is_empty() => values.push(num(v)?),
                [a, b, n] => {
                    let count: usize = n.parse().map_err(|_| format!("bad count {n:?} in grid {spec:?}"))?;
                    if count == 0 {
                        return Err(format!("empty segment {segment:?} in grid {spec:?}"));
                    }
                    values.extend(linspace(num(a)?, num(b)?, count));
                }
                _ => return Err(format!("segment {segment:?} is not start:stop:count")),
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(format!("non-finite value {v} in grid {spec:?}"));
        }
        Ok(Grid { spec: spec.to_string(), values })
    }
}

impl TryFrom<String> for Grid {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.spec
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub omega_m: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_c: f64,
    pub n_m: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { omega_m: 1.0, g: 0.03, kappa: 0.1, gamma_m: 6e-3, n_c: 0.1, n_m: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub delta_1: f64,
    pub delta_2: f64,
    #[serde(rename = "E_1")]
    pub e_1: f64,
    #[serde(rename = "E_2")]
    pub e_2: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { delta_1: 1.0, delta_2: 0.0, e_1: 0.1, e_2: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub n_a: usize,
    pub n_b: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { n_a: 30, n_b: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    Thermal,
    Vacuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rect,
}

impl From<WindowKind> for Window {
    fn from(w: WindowKind) -> Window {
        match w {
            WindowKind::Hann => Window::Hann,
            WindowKind::Rect => Window::Rect,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Steady-state convergence tolerance (relative change per period).
    pub tol: f64,
    /// Residual tolerance of the static solver.
    pub residual_tol: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub overflow_threshold: f64,
    pub max_periods: usize,
    /// Averaging window, in mechanical periods, for drives that share no
    /// common period.
    pub window_periods: usize,
    pub samples_per_period: usize,
    pub t_max: Option<f64>,
    pub sample_interval: f64,
    pub initial: InitialState,
    pub tau_max: Option<f64>,
    pub dtau: f64,
    pub window: WindowKind,
    pub zero_pad: usize,
    pub origins: usize,
    #[serde(rename = "E_passive")]
    pub e_passive: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Local maxima above this fraction of the global peak are reported.
    pub peak_threshold: f64,
    pub distributions: bool,
    #[serde(rename = "E_grid")]
    pub e_grid: Option<Grid>,
    pub g_grid: Option<Grid>,
    pub delta_1_grid: Option<Grid>,
    pub delta_2_grid: Option<Grid>,
    #[serde(rename = "E_1_grid")]
    pub e_1_grid: Option<Grid>,
    #[serde(rename = "E_2_grid")]
    pub e_2_grid: Option<Grid>,
    pub x_grid: Grid,
    pub p_grid: Option<Grid>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            residual_tol: 1e-10,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_step: 1.0,
            overflow_threshold: 1e-3,
            max_periods: 3000,
            window_periods: 20,
            samples_per_period: 64,
            t_max: None,
            sample_interval: 0.5,
            initial: InitialState::Thermal,
            tau_max: None,
            dtau: 0.1,
            window: WindowKind::Hann,
            zero_pad: 4,
            origins: 1,
            e_passive: 0.001,
            omega_min: -4.0,
            omega_max: 4.0,
            peak_threshold: 1e-3,
            distributions: false,
            e_grid: None,
            g_grid: None,
            delta_1_grid: None,
            delta_2_grid: None,
            e_1_grid: None,
            e_2_grid: None,
            x_grid: "-6:6:121".parse().expect("valid default grid"),
            p_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    #[serde(default)]
    system: SystemSection,
    #[serde(default)]
    drive: DriveSection,
    #[serde(default)]
    truncation: TruncationSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    output: OutputSection,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub system: SystemSection,
    pub drive: DriveSection,
    pub truncation: TruncationSection,
    pub run: RunSection,
    pub output: OutputSection,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, None).map_err(|e| match e {
        ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses config text. `kind` supplies the experiment kind when the document
/// has none and must agree with it otherwise.
pub fn parse_config_str(text: &str, kind: Option<Kind>) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let kind = match (raw.kind.as_deref().map(Kind::from_str).transpose()?, kind) {
        (Some(a), Some(b)) if a != b => return Err(invalid("kind", format!("config says {a} but {b} was requested"))),
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(invalid("kind", "missing")),
    };
    let cfg = ExperimentConfig {
        kind,
        system: raw.system,
        drive: raw.drive,
        truncation: raw.truncation,
        run: raw.run,
        output: raw.output,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn core_to_config(e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, reason } => invalid(name, reason),
        CoreError::InvalidCutoffs { .. } => invalid("truncation", e.to_string()),
        other => invalid("config", other.to_string()),
    }
}

impl ExperimentConfig {
    /// System parameters with the two configured drive tones.
    pub fn params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams {
            omega_m: s.omega_m,
            g: s.g,
            kappa: s.kappa,
            gamma_m: s.gamma_m,
            n_c: s.n_c,
            n_m: s.n_m,
            drives: vec![
                DriveTone::new(self.drive.delta_1, self.drive.e_1),
                DriveTone::new(self.drive.delta_2, self.drive.e_2),
            ],
        }
    }

    pub fn cutoffs(&self) -> FockCutoffs {
        FockCutoffs { n_a: self.truncation.n_a, n_b: self.truncation.n_b }
    }

    fn require<'a>(&self, grid: &'a Option<Grid>, key: &str) -> Result<&'a Grid, ConfigError> {
        grid.as_ref().ok_or_else(|| invalid(key, format!("required by {}", self.kind)))
    }

    /// Checks parameter ranges and the knobs each kind needs: `E_grid` or
    /// `g_grid` for sweeps, `delta_1_grid` and `delta_2_grid` for detuning
    /// maps, `t_max` for time evolution, `tau_max` for spectra, and either
    /// `E_1_grid` with `E_2_grid` or `E_grid` with `g_grid` for amplitude
    /// maps.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params().validate().map_err(core_to_config)?;
        FockCutoffs::new(self.truncation.n_a, self.truncation.n_b).map_err(core_to_config)?;
        let r = &self.run;
        for (key, v) in
            [("tol", r.tol), ("rel_tol", r.rel_tol), ("abs_tol", r.abs_tol), ("residual_tol", r.residual_tol)]
        {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(key, format!("must lie in (0, 1), got {v}")));
            }
        }
        for (key, v) in [
            ("max_step", r.max_step),
            ("overflow_threshold", r.overflow_threshold),
            ("sample_interval", r.sample_interval),
            ("dtau", r.dtau),
            ("peak_threshold", r.peak_threshold),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(key, format!("must be > 0, got {v}")));
            }
        }
        if !(r.e_passive >= 0.0) || !r.e_passive.is_finite() {
            return Err(invalid("E_passive", format!("must be >= 0, got {}", r.e_passive)));
        }
        for (key, v) in [
            ("max_periods", r.max_periods),
            ("window_periods", r.window_periods),
            ("zero_pad", r.zero_pad),
            ("origins", r.origins),
        ] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if r.samples_per_period < 2 {
            return Err(invalid("samples_per_period", "must be at least 2"));
        }
        if !(r.omega_min < r.omega_max) {
            return Err(invalid("omega_min", "must be below omega_max"));
        }
        if let Some(t) = r.t_max {
            if !(t > 0.0) || !t.is_finite() {
                return Err(invalid("t_max", format!("must be > 0, got {t}")));
            }
        }
        if let Some(t) = r.tau_max {
            if !(t > r.dtau) || !t.is_finite() {
                return Err(invalid("tau_max", format!("must exceed dtau = {}, got {t}", r.dtau)));
            }
        }
        for (key, grid) in [("E_grid", &r.e_grid), ("E_1_grid", &r.e_1_grid), ("E_2_grid", &r.e_2_grid)] {
            if let Some(v) = grid.as_ref().and_then(|g| g.values().iter().find(|&&v| v < 0.0)) {
                return Err(invalid(key, format!("amplitudes must be >= 0, got {v}")));
            }
        }
        if let Some(v) = r.g_grid.as_ref().and_then(|g| g.values().iter().find(|&&v| v < 0.0)) {
            return Err(invalid("g_grid", format!("couplings must be >= 0, got {v}")));
        }
        match self.kind {
            Kind::SteadystateSweep => match (&r.e_grid, &r.g_grid) {
                (Some(_), Some(_)) => return Err(invalid("g_grid", "sweep over E_grid or g_grid, not both")),
                (None, None) => return Err(invalid("E_grid", "steadystate-sweep needs E_grid or g_grid")),
                _ => {}
            },
            Kind::DetuningMap => {
                self.require(&r.delta_1_grid, "delta_1_grid")?;
                self.require(&r.delta_2_grid, "delta_2_grid")?;
            }
            Kind::TimeEvolution => {
                if r.t_max.is_none() {
                    return Err(invalid("t_max", "required by time-evolution"));
                }
            }
            Kind::Spectrum => {
                if r.tau_max.is_none() {
                    return Err(invalid("tau_max", "required by spectrum"));
                }
            }
            Kind::AmplitudeMap => match (&r.e_1_grid, &r.e_2_grid, &r.e_grid, &r.g_grid) {
                (Some(_), Some(_), None, None) | (None, None, Some(_), Some(_)) => {}
                _ => {
                    return Err(invalid(
                        "E_1_grid",
                        "amplitude-map needs E_1_grid with E_2_grid, or E_grid with g_grid",
                    ))
                }
            },
            Kind::Distributions | Kind::Analytics => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_concatenate_segments() {
        let g: Grid = "0:1:3, 2, 3:4:2".parse().unwrap();
        assert_eq!(g.values(), &[0.0, 0.5, 1.0, 2.0, 3.0, 4.0]);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("".parse::<Grid>().is_err());
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str("kind = \"analytics\"\n[system]\ng = 0.03\n", None).unwrap();
        assert_eq!(cfg.kind, Kind::Analytics);
        assert_eq!((cfg.truncation.n_a, cfg.truncation.n_b), (30, 30));
        assert_eq!(cfg.run.tol, 1e-6);
    }

    #[test]
    fn negative_kappa_names_the_key() {
        let err = parse_config_str("kind = \"analytics\"\n[system]\nkappa = -0.1\n", None).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "kappa"), "{err}");
    }

    #[test]
    fn spectrum_needs_tau_max() {
        let err = parse_config_str("kind = \"spectrum\"\n", None).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "tau_max"), "{err}");
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = parse_config_str("kind = \"analytics\"\n[system]\ng = 0.03\nkapa = 0.1\n", None).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(msg.contains("line 4") && msg.contains("kapa"), "{msg}");
    }

    #[test]
    fn requested_kind_must_match() {
        assert!(parse_config_str("kind = \"analytics\"\n", Some(Kind::Spectrum)).is_err());
        assert_eq!(parse_config_str("", Some(Kind::Analytics)).unwrap().kind, Kind::Analytics);
        assert!(parse_config_str("", None).is_err());
    }
}
