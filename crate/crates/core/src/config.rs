//! TOML run configuration.
//!
//! Every scenario parameter is spelled out in the file; there are no silent
//! defaults for physical quantities and unknown keys are rejected. Only the
//! gate normalizations and integrator settings may be omitted.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::HomotopyParams;
use crate::dynamics::{ChaserState, IntegratorOptions, OrbitModel, Thruster, VehicleModel};
use crate::ptr::PtrConfig;
use crate::quaternion::Quaternion;
use crate::scenario::{
    default_apollo_scenario, GateNormalization, ScenarioConfig, TerminalTolerances, ENVELOPE_FACTOR,
};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Everything a solve needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub homotopy: HomotopyParams,
    pub ptr: PtrConfig,
    pub integrator: IntegratorOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: default_apollo_scenario(),
            homotopy: HomotopyParams::default(),
            ptr: PtrConfig::default(),
            integrator: IntegratorOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.scenario.validate().map_err(|e| e.to_string())?;
        self.homotopy.validate().map_err(|e| e.to_string())?;
        self.ptr.validate()?;
        if self.integrator.substeps == 0 {
            return Err("integrator.substeps must be positive".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let run = file.into_run()?;
        run.validate().map_err(ConfigError::Invalid)?;
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ConfigFile::from_run(self)).expect("config is always serializable")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    vehicle: VehicleSection,
    orbit: OrbitModel,
    scenario: ScenarioSection,
    initial: StateSection,
    terminal: StateSection,
    tolerances: TerminalTolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gates: Option<GateNormalization>,
    homotopy: HomotopyParams,
    ptr: PtrConfig,
    #[serde(default)]
    integrator: IntegratorOptions,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleSection {
    mass: f64,
    /// Row-major, kg·m².
    inertia: [[f64; 3]; 3],
    thrust: f64,
    dt_min: f64,
    dt_max: f64,
    dt_db: f64,
    thrusters: Vec<ThrusterSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThrusterSection {
    position: [f64; 3],
    direction: [f64; 3],
    forward_facing: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    r_plume: f64,
    r_appch: f64,
    /// Approach cone half-angle, rad.
    theta_appch: f64,
    t_f_bounds: [f64; 2],
    nodes: usize,
    w_eq: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSection {
    position: [f64; 3],
    velocity: [f64; 3],
    /// `[x, y, z, w]`, body to LVLH.
    attitude: [f64; 4],
    rate: [f64; 3],
}

impl StateSection {
    fn from_state(s: &ChaserState) -> Self {
        Self {
            position: s.p.into(),
            velocity: s.v.into(),
            attitude: s.q.into(),
            rate: s.w.into(),
        }
    }

    fn to_state(&self) -> ChaserState {
        ChaserState::new(
            Vector3::from(self.position),
            Vector3::from(self.velocity),
            Quaternion::from(self.attitude),
            Vector3::from(self.rate),
        )
    }
}

impl ConfigFile {
    fn from_run(run: &RunConfig) -> Self {
        let s = &run.scenario;
        let v = &s.vehicle;
        let j = v.inertia;
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            vehicle: VehicleSection {
                mass: v.mass,
                inertia: [0, 1, 2].map(|r| [j[(r, 0)], j[(r, 1)], j[(r, 2)]]),
                thrust: v.thrust,
                dt_min: v.dt_min,
                dt_max: v.dt_max,
                dt_db: v.dt_db,
                thrusters: v
                    .thrusters
                    .iter()
                    .map(|t| ThrusterSection {
                        position: t.position.into(),
                        direction: t.direction.into(),
                        forward_facing: t.forward_facing,
                    })
                    .collect(),
            },
            orbit: s.orbit,
            scenario: ScenarioSection {
                r_plume: s.r_plume,
                r_appch: s.r_appch,
                theta_appch: s.theta_appch,
                t_f_bounds: s.t_f_bounds,
                nodes: s.nodes,
                w_eq: s.w_eq,
            },
            initial: StateSection::from_state(&s.x0),
            terminal: StateSection::from_state(&s.xf),
            tolerances: s.tol,
            gates: Some(s.gates),
            homotopy: run.homotopy,
            ptr: run.ptr,
            integrator: run.integrator,
        }
    }

    fn into_run(self) -> Result<RunConfig, ConfigError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let v = self.vehicle;
        let vehicle = VehicleModel {
            mass: v.mass,
            inertia: Matrix3::from_fn(|r, c| v.inertia[r][c]),
            thrusters: v
                .thrusters
                .iter()
                .map(|t| {
                    Thruster::new(
                        Vector3::from(t.position),
                        Vector3::from(t.direction),
                        t.forward_facing,
                    )
                })
                .collect(),
            thrust: v.thrust,
            dt_min: v.dt_min,
            dt_max: v.dt_max,
            dt_db: v.dt_db,
        };
        let sc = self.scenario;
        let x0 = self.initial.to_state();
        let gates = self.gates.unwrap_or_else(|| {
            GateNormalization::if_side(
                sc.r_appch,
                sc.r_plume,
                ENVELOPE_FACTOR * x0.p.norm(),
                vehicle.dt_min,
                vehicle.dt_max,
            )
        });
        Ok(RunConfig {
            scenario: ScenarioConfig {
                vehicle,
                orbit: self.orbit,
                r_plume: sc.r_plume,
                r_appch: sc.r_appch,
                theta_appch: sc.theta_appch,
                x0,
                xf: self.terminal.to_state(),
                tol: self.tolerances,
                t_f_bounds: sc.t_f_bounds,
                nodes: sc.nodes,
                w_eq: sc.w_eq,
                gates,
            },
            homotopy: self.homotopy,
            ptr: self.ptr,
            integrator: self.integrator,
        })
    }
}
