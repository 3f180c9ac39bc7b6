use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use petrowave::damping::{make_G, make_linear, make_power_log, make_table, DampingBounds, DampingKind, DampingLaw, GFunction, Phi};
use petrowave::fitting::{FitModel, FitWindow};
use petrowave::sim::{CouplingSpec, InitialData, Integrator, SimConfig};
use petrowave::spectral::BasisParams;

use crate::exit::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub basis: BasisParams,
    #[serde(default = "zero_coupling")]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub damping: Option<DampingConfig>,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn zero_coupling() -> CouplingSpec {
    CouplingSpec::Constant(0.0)
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyTo {
    #[default]
    Both,
    Plate,
    Wave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    pub law: DampingKind,
    #[serde(default = "unit")]
    pub epsilon: f64,
    #[serde(default = "half")]
    pub c_g: f64,
    #[serde(default)]
    pub bounds: Option<DampingBounds>,
    #[serde(default)]
    pub apply_to: ApplyTo,
}

impl DampingConfig {
    pub fn build(&self) -> Result<DampingLaw, CliError> {
        let law = match &self.law {
            DampingKind::Linear { gain } => make_linear(*gain, self.epsilon),
            DampingKind::PowerLog { p, q } => make_power_log(*p, *q, self.epsilon),
            DampingKind::Table { points } => make_table(points.clone(), self.epsilon),
        }
        .map_err(|e| CliError::config("damping", e))?;
        Ok(match self.bounds {
            Some(b) => law.with_bounds(b),
            None => law,
        })
    }

    #[allow(non_snake_case)]
    pub fn G(&self, law: &DampingLaw) -> Result<GFunction, CliError> {
        make_G(law, self.c_g).map_err(|e| CliError::config("damping.c_g", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Value(f64),
    Keyword(FitKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKeyword {
    Fit,
}

impl Default for OmegaSpec {
    fn default() -> Self {
        OmegaSpec::Value(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "unit")]
    pub eps0: f64,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default)]
    pub lambda: f64,
    /// Initial energy; read from the trace when absent.
    #[serde(default)]
    pub e0: Option<f64>,
    /// Explicit evaluation times.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Uniform grid `0..=grid_end` when neither a trace nor `times` is given.
    #[serde(default)]
    pub grid_end: Option<f64>,
    #[serde(default = "default_points")]
    pub grid_points: usize,
}

fn default_points() -> usize {
    201
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            eps0: 1.0,
            omega: OmegaSpec::default(),
            lambda: 0.0,
            e0: None,
            times: None,
            grid_end: None,
            grid_points: default_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub model: Option<FitModel>,
    #[serde(default)]
    pub window: Option<FitWindow>,
    /// Exponents for power-log fits; default to the damping law's.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    /// Dominance constant; anchored at the window start when absent.
    #[serde(default)]
    pub constant: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("line {} column {}, at `{path}`: {inner}", inner.line(), inner.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(d) = &self.damping {
            d.build()?;
        }
        self.sim_config()?
            .validate()
            .map_err(|e| CliError::config("simulation", e))?;
        if !(self.decay.eps0 > 0.0) {
            return Err(CliError::Config(format!("decay.eps0 must be positive, got {}", self.decay.eps0)));
        }
        if let OmegaSpec::Value(w) = self.decay.omega {
            if !(w > 0.0) || !w.is_finite() {
                return Err(CliError::Config(format!("decay.omega must be positive, got {w}")));
            }
        }
        Ok(())
    }

    pub fn laws(&self) -> Result<(Option<DampingLaw>, Option<DampingLaw>), CliError> {
        let Some(d) = &self.damping else {
            return Ok((None, None));
        };
        let law = d.build()?;
        Ok(match d.apply_to {
            ApplyTo::Both => (Some(law.clone()), Some(law)),
            ApplyTo::Plate => (Some(law), None),
            ApplyTo::Wave => (None, Some(law)),
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let (g1, g2) = self.laws()?;
        Ok(SimConfig {
            basis: self.basis,
            coupling: self.coupling.clone(),
            g1,
            g2,
            initial: self.initial.clone(),
            dt: self.dt,
            t_end: self.t_end,
            integrator: self.integrator,
            sample_stride: self.sample_stride,
        })
    }

    /// `φ` of the configured damping law, or `φ(s) = s` when undamped.
    pub fn phi(&self) -> Result<Phi, CliError> {
        match &self.damping {
            None => Ok(Phi::identity()),
            Some(d) => {
                let law = d.build()?;
                Phi::new(d.G(&law)?, self.decay.eps0).map_err(|e| CliError::config("decay.eps0", e))
            }
        }
    }

    /// `(p, q)` of the damping family; linear laws are `(1, 0)`.
    pub fn family(&self) -> Option<(f64, f64)> {
        match &self.damping {
            None => Some((1.0, 0.0)),
            Some(d) => match d.law {
                DampingKind::Linear { .. } => Some((1.0, 0.0)),
                DampingKind::PowerLog { p, q } => Some((p, q)),
                DampingKind::Table { .. } => None,
            },
        }
    }

    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema_version": 1, "basis": {"length": 1, "modes": 8}, "dt": 1e-4, "t_end": 0.1}"#;

    #[test]
    fn minimal_config_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.basis.oversample, 4);
        assert_eq!(cfg.coupling, CouplingSpec::Constant(0.0));
        assert_eq!(cfg.sample_stride, 1);
        assert_eq!(cfg.decay.omega, OmegaSpec::Value(1.0));
        assert!(cfg.damping.is_none());
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        let bad = MINIMAL.replace("\"dt\"", "\"dtt\": 1, \"dt\"");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("dtt"), "{err}");
        let bad = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = MINIMAL.replace("\"modes\": 8", "\"modes\": 8, \"extra\": 0");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn damping_and_omega_forms() {
        let text = MINIMAL.replace(
            "\"dt\"",
            r#""damping": {"law": {"kind": "power_log", "p": 3, "q": 0}, "apply_to": "wave"},
               "decay": {"omega": "fit", "eps0": 0.01}, "dt""#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.decay.omega, OmegaSpec::Keyword(FitKeyword::Fit));
        let (g1, g2) = cfg.laws().unwrap();
        assert!(g1.is_none() && g2.is_some());
        assert_eq!(cfg.family(), Some((3.0, 0.0)));
    }

    #[test]
    fn guard_violation_is_a_config_error() {
        let text = MINIMAL.replace("1e-4", "1e-2");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(CliError::Config(_))));
    }
}
