//! Experiment configuration: a TOML file with nested sections, every field
//! defaulted so a minimal config runs a full campaign. Command-line
//! overrides are TOML fragments (`section.key = value`) merged over the
//! file before deserialization.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficient::Profile;
use crate::geometry::{Point, Rect};
use crate::grid::{BoundaryFamily, BoundarySpec};
use crate::verify::SweepMode;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config io error: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub box_lo: [f64; 2],
    pub box_hi: [f64; 2],
    pub delta: f64,
    /// Gap list for sweep campaigns.
    pub deltas: Vec<f64>,
    pub mu: f64,
    pub delta_cap: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            box_lo: [-4.0, -7.0],
            box_hi: [4.0, 3.0],
            delta: 0.1,
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            mu: 0.25,
            delta_cap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    /// "sharp" or "smooth".
    pub mode: String,
    /// Absolute collar width; 0 means epsilon_fraction * delta.
    pub epsilon: f64,
    /// Collar width as a fraction of delta when `epsilon` is 0.
    pub epsilon_fraction: f64,
    /// "cosine" or "smoothstep".
    pub profile: String,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig {
            kappa_plus: 5.0,
            kappa_minus: 5.0,
            mode: "sharp".to_string(),
            epsilon: 0.0,
            epsilon_fraction: 0.125,
            profile: "cosine".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h: f64,
    pub h_levels: Vec<f64>,
    pub tol: f64,
    /// 0 means the default cap 10 sqrt(node count).
    pub max_iter: usize,
    /// 0 means all available cores.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 0.0125,
            h_levels: vec![1.0 / 160.0, 1.0 / 320.0],
            tol: 1e-10,
            max_iter: 0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsConfig {
    pub k_exponent: f64,
    pub c_scale: f64,
}

impl Default for FieldsConfig {
    fn default() -> Self {
        FieldsConfig {
            k_exponent: 4.0,
            c_scale: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    /// "x1", "x2", "bilinear", "constant", "fourier".
    pub family: String,
    pub constant_value: f64,
    pub fourier_k: u32,
    pub normalized: bool,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            family: "x1".to_string(),
            constant_value: 1.0,
            fourier_k: 2,
            normalized: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".to_string(),
            formats: vec!["csv".to_string(), "json".to_string()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub p_2d: Vec<f64>,
    pub p_3d: Vec<f64>,
    /// Empty means the built-in dyadic spacings.
    pub spacings: Vec<f64>,
    pub samples_2d: usize,
    pub samples_3d: usize,
    pub min_order: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig {
            p_2d: vec![0.0, -1.0, 2.0],
            p_3d: vec![0.0, -1.0, 1.0],
            spacings: Vec::new(),
            samples_2d: 2048,
            samples_3d: 4096,
            min_order: 1.8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub kappas: Vec<f64>,
    pub h_levels: Vec<f64>,
    pub radial_kappas: Vec<f64>,
    pub radial_h_levels: Vec<f64>,
    /// Per-halving contraction required of the solution error.
    pub max_error_ratio: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            kappas: vec![0.2, 5.0],
            h_levels: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            radial_kappas: vec![1.0, 5.0],
            radial_h_levels: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            max_error_ratio: 0.6,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub coefficient: CoefficientConfig,
    pub solver: SolverConfig,
    pub fields: FieldsConfig,
    pub boundary: BoundaryConfig,
    pub output: OutputConfig,
    pub identities: IdentitiesConfig,
    pub oracle: OracleConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::from_toml(&text, &[])
    }

    /// Parses a TOML document, then merges each override fragment
    /// (`section.key = value`) over it.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for fragment in overrides {
            let patch: toml::Table = fragment.parse().map_err(|e: toml::de::Error| {
                ConfigError::Parse(format!("override `{fragment}`: {e}"))
            })?;
            merge_tables(&mut value, patch);
        }
        let cfg: ExperimentConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.geometry.deltas.is_empty() {
            return Err(ConfigError::Invalid(
                "geometry.deltas must be nonempty".into(),
            ));
        }
        if self.solver.h_levels.is_empty() {
            return Err(ConfigError::Invalid(
                "solver.h_levels must be nonempty".into(),
            ));
        }
        if !(self.solver.tol > 0.0) {
            return Err(ConfigError::Invalid("solver.tol must be positive".into()));
        }
        if !(self.coefficient.kappa_plus > 0.0 && self.coefficient.kappa_minus > 0.0) {
            return Err(ConfigError::Invalid(
                "conductivities must be positive".into(),
            ));
        }
        match self.coefficient.mode.as_str() {
            "sharp" | "smooth" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "coefficient.mode must be sharp or smooth, got {other}"
                )))
            }
        }
        self.profile()?;
        self.boundary_spec()?;
        Ok(())
    }

    pub fn domain(&self) -> Rect {
        Rect::new(
            Point::new(self.geometry.box_lo[0], self.geometry.box_lo[1]),
            Point::new(self.geometry.box_hi[0], self.geometry.box_hi[1]),
        )
    }

    pub fn profile(&self) -> Result<Profile, ConfigError> {
        match self.coefficient.profile.as_str() {
            "cosine" => Ok(Profile::CosineRamp),
            "smoothstep" => Ok(Profile::Smoothstep),
            other => Err(ConfigError::Invalid(format!(
                "coefficient.profile must be cosine or smoothstep, got {other}"
            ))),
        }
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec, ConfigError> {
        let family = match self.boundary.family.as_str() {
            "x1" => BoundaryFamily::X1,
            "x2" => BoundaryFamily::X2,
            "bilinear" => BoundaryFamily::BilinearX1X2,
            "constant" => BoundaryFamily::Constant(self.boundary.constant_value),
            "fourier" => BoundaryFamily::FourierMode(self.boundary.fourier_k),
            other => return Err(ConfigError::Invalid(format!(
                "boundary.family must be one of x1, x2, bilinear, constant, fourier; got {other}"
            ))),
        };
        Ok(BoundarySpec::new(family, self.boundary.normalized))
    }

    pub fn sweep_mode(&self) -> Result<SweepMode, ConfigError> {
        Ok(match self.coefficient.mode.as_str() {
            "sharp" => SweepMode::Sharp,
            _ => SweepMode::Smooth {
                profile: self.profile()?,
                epsilon_fraction: self.epsilon_fraction_effective(),
            },
        })
    }

    /// Collar fraction used for per-delta smooth coefficients.
    pub fn epsilon_fraction_effective(&self) -> f64 {
        if self.coefficient.epsilon > 0.0 {
            self.coefficient.epsilon / self.geometry.delta
        } else {
            self.coefficient.epsilon_fraction
        }
    }

    /// Absolute collar width for single-delta commands.
    pub fn epsilon_absolute(&self) -> f64 {
        if self.coefficient.epsilon > 0.0 {
            self.coefficient.epsilon
        } else {
            self.coefficient.epsilon_fraction * self.geometry.delta
        }
    }

    pub fn identity_spacings(&self) -> Vec<f64> {
        if self.identities.spacings.is_empty() {
            crate::verify::DEFAULT_SPACINGS.to_vec()
        } else {
            self.identities.spacings.clone()
        }
    }
}

fn merge_tables(base: &mut toml::Table, patch: toml::Table) {
    for (key, value) in patch {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge_tables(b, p),
            (slot, value) => {
                if let Some(slot) = slot {
                    *slot = value;
                } else {
                    base.insert(key, value);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_document() {
        let cfg = ExperimentConfig::from_toml("", &[]).unwrap();
        assert_eq!(cfg.geometry.mu, 0.25);
        assert_eq!(cfg.geometry.deltas, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.coefficient.mode, "sharp");
        assert!(cfg.boundary.normalized);
    }

    #[test]
    fn five_line_config_runs_a_sweep_setup() {
        let text = "\
[coefficient]
kappa_plus = 5.0
kappa_minus = 5.0
[solver]
h_levels = [0.025]
";
        let cfg = ExperimentConfig::from_toml(text, &[]).unwrap();
        assert_eq!(cfg.solver.h_levels, vec![0.025]);
        assert_eq!(cfg.coefficient.kappa_plus, 5.0);
    }

    #[test]
    fn overrides_merge_dotted_paths() {
        let cfg = ExperimentConfig::from_toml(
            "",
            &[
                "coefficient.kappa_plus = 1000.0".to_string(),
                "geometry.deltas = [0.2, 0.05]".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.coefficient.kappa_plus, 1000.0);
        assert_eq!(cfg.geometry.deltas, vec![0.2, 0.05]);
    }

    #[test]
    fn malformed_config_is_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("[coefficient]\nkappa_plus = \"high\"", &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[coefficient]\nkappa_plus = -2.0", &[]),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[coefficient]\nmode = \"fuzzy\"", &[]),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[solver]\nh_levels = []", &[]),
            Err(ConfigError::Invalid(_))
        ));
        // Unknown keys are configuration mistakes, not silent no-ops.
        assert!(ExperimentConfig::from_toml("[solver]\nhh = 3", &[]).is_err());
    }

    #[test]
    fn epsilon_fraction_resolution() {
        let cfg = ExperimentConfig::from_toml("[coefficient]\nepsilon = 0.02", &[]).unwrap();
        assert_eq!(cfg.epsilon_absolute(), 0.02);
        assert!((cfg.epsilon_fraction_effective() - 0.2).abs() < 1e-15);
        let cfg = ExperimentConfig::from_toml("", &[]).unwrap();
        assert!((cfg.epsilon_absolute() - 0.0125).abs() < 1e-15);
    }
}
