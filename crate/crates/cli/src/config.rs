//! TOML run configuration.
//!
//! ```toml
//! dimension = 2
//! omega = [[0.0, 1.0], [0.0, 1.0]]
//! interval = [0.0, 1.0]
//!
//! [profile]
//! kind = "bump"        # step | bump | constant | table
//! amplitude = 1.0
//!
//! [grid]
//! nt = 64
//! nx = 64
//!
//! [solver]
//! max_steps = 5
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use convint_core::constraint::{ConstraintParams, DomainBox, EnergyProfile, ProfileKind};
use convint_core::perturbation::PerturbConfig;
use convint_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Constraint(#[from] convint_core::constraint::ConstraintError),
    #[error(transparent)]
    Solver(#[from] convint_core::solver::SolverError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dimension: usize,
    pub omega: Vec<[f64; 2]>,
    pub interval: [f64; 2],
    pub profile: ProfileSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Two-column CSV, relative to the configuration file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nt: usize,
    pub nx: usize,
    pub refine: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nt: 64,
            nx: 64,
            refine: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_steps: usize,
    pub k0: u32,
    #[serde(rename = "tolJ")]
    pub tol_j: f64,
    pub seed: u64,
    #[serde(rename = "epsE", skip_serializing_if = "Option::is_none")]
    pub eps_e: Option<f64>,
    pub theta: f64,
    pub gammas: Vec<f64>,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub max_attempts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = PerturbConfig::default();
        Self {
            max_steps: 5,
            k0: 2,
            tol_j: 1e-6,
            seed: 0,
            eps_e: None,
            theta: p.theta,
            gammas: vec![1.0, 0.5, 0.25, 0.125],
            margin: p.margin,
            samples: None,
            max_attempts: p.max_attempts,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` and inlines a referenced profile table.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if let Some(file) = cfg.profile.file.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            let table = base.join(&file);
            let reader = std::fs::File::open(&table).map_err(|source| ConfigError::Io {
                path: table.clone(),
                source,
            })?;
            let [t0, t1] = cfg.interval;
            match EnergyProfile::read_table(t0, t1, reader)?.kind() {
                ProfileKind::Table { times, values } => {
                    cfg.profile.times = Some(times.clone());
                    cfg.profile.values = Some(values.clone());
                }
                _ => unreachable!("read_table always yields a table"),
            }
        }
        Ok(cfg)
    }

    /// Self-contained TOML snapshot (tables inlined).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn profile(&self) -> Result<EnergyProfile, ConfigError> {
        let [t0, t1] = self.interval;
        let p = &self.profile;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| {
                ConfigError::Invalid(format!("profile.{key} is required for kind {}", p.kind))
            })
        };
        let kind = match p.kind.as_str() {
            "step" => ProfileKind::Step {
                height: p.height.unwrap_or(1.0),
                jump: p.jump.unwrap_or(0.0),
            },
            "constant" => return Ok(EnergyProfile::constant(t0, t1, need(p.value, "value")?)?),
            "bump" => ProfileKind::Bump {
                amplitude: p.amplitude.unwrap_or(1.0),
            },
            "table" => match (&p.times, &p.values) {
                (Some(t), Some(v)) => ProfileKind::Table {
                    times: t.clone(),
                    values: v.clone(),
                },
                _ => return invalid("profile kind table needs file or times and values"),
            },
            other => return invalid(format!("unknown profile kind {other:?}")),
        };
        Ok(EnergyProfile::new(t0, t1, kind)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        if !(2..=3).contains(&self.dimension) {
            return invalid(format!(
                "dimension must be 2 or 3, found {}",
                self.dimension
            ));
        }
        if self.omega.len() != self.dimension {
            return invalid(format!(
                "omega has {} axes, dimension is {}",
                self.omega.len(),
                self.dimension
            ));
        }
        let lo = self.omega.iter().map(|a| a[0]).collect();
        let hi = self.omega.iter().map(|a| a[1]).collect();
        let params = ConstraintParams::new(DomainBox::new(lo, hi)?, self.profile()?)?;
        let s = &self.solver;
        let mut c = SolverConfig::new(params);
        c.energy_floor = s.eps_e;
        c.nt = self.grid.nt;
        c.nx = self.grid.nx;
        c.refine = self.grid.refine;
        c.max_steps = s.max_steps;
        c.tol_j = s.tol_j;
        c.k0 = s.k0;
        c.gammas = s.gammas.clone();
        c.seed = s.seed;
        c.samples = s.samples;
        c.perturb.theta = s.theta;
        c.perturb.margin = s.margin;
        c.perturb.max_attempts = s.max_attempts;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUMP: &str = r#"
dimension = 2
omega = [[0.0, 1.0], [0.0, 1.0]]
interval = [0.0, 1.0]
[profile]
kind = "bump"
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = ConfigFile::parse(BUMP).unwrap();
        let s = c.solver_config().unwrap();
        assert_eq!(s.nt, 64);
        assert_eq!(s.max_steps, 5);
        assert!((s.params.profile().eval(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snapshot_round_trips() {
        let c = ConfigFile::parse(BUMP).unwrap();
        let back = ConfigFile::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.solver_config().unwrap(), c.solver_config().unwrap());
    }

    #[test]
    fn unknown_keys_and_kinds_are_rejected() {
        assert!(ConfigFile::parse(&format!("{BUMP}\nbogus = 1\n")).is_err());
        let c = ConfigFile::parse(&BUMP.replace("bump", "sawtooth")).unwrap();
        assert!(matches!(c.solver_config(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn dimension_must_match_omega() {
        let c = ConfigFile::parse(&BUMP.replace("dimension = 2", "dimension = 3")).unwrap();
        assert!(matches!(c.solver_config(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn solver_keys_map_through() {
        let text = format!("{BUMP}\n[solver]\ntolJ = 0.5\nepsE = 0.01\nseed = 9\ntheta = 0.2\n");
        let s = ConfigFile::parse(&text).unwrap().solver_config().unwrap();
        assert_eq!(s.tol_j, 0.5);
        assert_eq!(s.energy_floor, Some(0.01));
        assert_eq!(s.seed, 9);
        assert_eq!(s.perturb.theta, 0.2);
    }
}
