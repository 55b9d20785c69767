use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swingleg::geometry::{calibrate_wall_thickness, InertiaModel, ReferenceSegment, INITIAL_LEG};
use swingleg::oracle::OracleConfig;
use swingleg::{
    EnergyMode, GaConfig, KneeConvention, LegGeometry, MaterialParams, SegmentDims, SwingProfile,
};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One segment's outer dimensions plus either its mass (the wall thickness is
/// then calibrated) or the wall thickness itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_thickness: Option<f64>,
}

impl From<&ReferenceSegment> for SegmentSpec {
    fn from(r: &ReferenceSegment) -> Self {
        Self {
            length: r.length,
            width: r.width,
            height: r.height,
            mass: Some(r.mass),
            wall_thickness: None,
        }
    }
}

impl SegmentSpec {
    fn resolve(
        &self,
        name: &str,
        density: f64,
        allow_degenerate: bool,
    ) -> Result<SegmentDims, CliError> {
        let thickness = match (self.mass, self.wall_thickness) {
            (Some(m), None) => {
                calibrate_wall_thickness(self.length, self.height, self.width, m, density)
                    .map_err(|e| CliError::Validation(format!("{name}: {e}")))?
            }
            (None, Some(t)) => t,
            _ => {
                return Err(CliError::Config(format!(
                    "{name}: give exactly one of `mass` or `wall_thickness`"
                )))
            }
        };
        let d = SegmentDims {
            length: self.length,
            width: self.width,
            height: self.height,
            thickness,
        };
        let check = if allow_degenerate {
            d.validate_allowing_zero_length()
        } else {
            d.validate()
        };
        check.map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub coxa: SegmentSpec,
    pub femur: SegmentSpec,
    pub tibia: SegmentSpec,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            coxa: (&INITIAL_LEG[0]).into(),
            femur: (&INITIAL_LEG[1]).into(),
            tibia: (&INITIAL_LEG[2]).into(),
        }
    }
}

impl GeometrySpec {
    pub fn resolve(&self, density: f64, allow_degenerate: bool) -> Result<LegGeometry, CliError> {
        Ok(LegGeometry {
            coxa: self.coxa.resolve("coxa", density, allow_degenerate)?,
            femur: self.femur.resolve("femur", density, allow_degenerate)?,
            tibia: self.tibia.resolve("tibia", density, allow_degenerate)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub knee: KneeConvention,
    pub inertia: InertiaModel,
}

/// Sweep size and limits used by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub oracle: OracleConfig,
    pub states: usize,
    pub seed: u64,
    /// W, for the state-local power balance.
    pub power_tolerance: f64,
    /// rad
    pub round_trip_tolerance: f64,
    /// s
    pub energy_dt: f64,
    /// J, over one swing duration.
    pub energy_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            oracle: OracleConfig::default(),
            states: 1000,
            seed: 7,
            power_tolerance: 1e-3,
            round_trip_tolerance: 1e-3,
            energy_dt: 1e-4,
            energy_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// s
    pub dt: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default)]
    pub geometry: GeometrySpec,
    /// Accept zero-length segments (for probing degenerate legs).
    #[serde(default)]
    pub allow_degenerate: bool,
    #[serde(default)]
    pub trajectory: SwingProfile,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub energy_mode: EnergyMode,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            material: MaterialParams::default(),
            geometry: GeometrySpec::default(),
            allow_degenerate: false,
            trajectory: SwingProfile::default(),
            model: ModelConfig::default(),
            energy_mode: EnergyMode::default(),
            ga: GaConfig::default(),
            verify: VerifyConfig::default(),
            simulation: SimulationConfig::default(),
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn initial_geometry(&self) -> Result<LegGeometry, CliError> {
        self.material.validate()?;
        self.geometry
            .resolve(self.material.density, self.allow_degenerate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::default();
        let again = RunConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_json(), again.to_json());
    }

    #[test]
    fn unknown_field_rejected_with_location() {
        let err = RunConfig::parse("{\n\"schema_version\": 1,\n\"materal\": {}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("materal") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn wrong_schema_version() {
        assert!(matches!(
            RunConfig::parse(r#"{"schema_version": 2}"#),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn segment_needs_one_thickness_source() {
        let s = SegmentSpec {
            length: 0.1,
            width: 0.1,
            height: 0.1,
            mass: None,
            wall_thickness: None,
        };
        assert!(matches!(
            s.resolve("x", 2770.0, false),
            Err(CliError::Config(_))
        ));
        let t = SegmentSpec {
            wall_thickness: Some(0.01),
            ..s
        };
        assert_eq!(t.resolve("x", 2770.0, false).unwrap().thickness, 0.01);
    }

    #[test]
    fn default_geometry_is_calibrated() {
        let g = RunConfig::default().initial_geometry().unwrap();
        assert!((g.coxa.thickness - 0.03355).abs() < 1e-4);
    }

    #[test]
    fn zero_length_needs_override() {
        let mut cfg = RunConfig::default();
        cfg.geometry.femur = SegmentSpec {
            length: 0.0,
            mass: None,
            wall_thickness: Some(0.02),
            ..cfg.geometry.femur
        };
        assert!(matches!(
            cfg.initial_geometry(),
            Err(CliError::Validation(_))
        ));
        cfg.allow_degenerate = true;
        assert_eq!(cfg.initial_geometry().unwrap().femur.length, 0.0);
    }
}
