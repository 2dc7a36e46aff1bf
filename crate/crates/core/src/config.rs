//! Application configuration.
//!
//! A user file is merged key by key over the embedded `default.toml`, then
//! deserialized with unknown keys rejected.

use std::path::Path;

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::experiment::campaign::{CampaignSetup, PopulationSpec, Subject};
use crate::experiment::trial::{SystemConfig, TrialConfig};
use crate::hqp::HqpConfig;
use crate::human::{Anthropometry, BehaviorParams, Direction, HumanParams};
use crate::robot_model::{DhRow, JointVector, KinematicParams};
use crate::strategies::{Strategy, StrategyParams};

pub const DEFAULT_TOML: &str = include_str!("../config/default.toml");
pub const CONFIG_ENV: &str = "BALANCE_ASSIST_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub dh_a: [f64; 6],
    pub dh_d: [f64; 6],
    pub dh_alpha: [f64; 6],
    pub mount_position: [f64; 3],
    pub mount_yaw: f64,
    pub handle_offset: f64,
    pub joint_lower: [f64; 6],
    pub joint_upper: [f64; 6],
    pub base_yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HqpSection {
    pub clik_gain: [f64; 6],
    pub q_pref: [f64; 6],
    pub secondary_gain: f64,
    pub velocity_limits: [f64; 9],
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittanceSection {
    pub mass: [f64; 6],
    pub damping: [f64; 6],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub k_p1: f64,
    pub stiffness_ramp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSection {
    pub mass: f64,
    pub height: f64,
    pub max_lean_fwd: f64,
    pub max_lean_bwd: f64,
    pub anthropometry: Anthropometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub duration: f64,
    pub log_period: f64,
    pub sensor_noise: f64,
    pub hold_after_return: f64,
    pub hold_after_step: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub robot: RobotSection,
    pub hqp: HqpSection,
    pub admittance: AdmittanceSection,
    pub strategy: StrategySection,
    pub human: HumanSection,
    pub behavior: BehaviorParams,
    pub simulation: SimulationSection,
    pub campaign: PopulationSpec,
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl Default for AppConfig {
    fn default() -> Self {
        toml::from_str(DEFAULT_TOML).expect("embedded default config is valid")
    }
}

impl AppConfig {
    /// Parses `text` as overrides of the defaults and validates the result.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut base: toml::Value = toml::from_str(DEFAULT_TOML)?;
        let over: toml::Value = toml::from_str(text)?;
        merge(&mut base, over);
        let cfg: AppConfig = base.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// Explicit path, else the environment variable, else the defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.kinematics().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.hqp().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let a = &self.admittance;
        if a.mass.iter().chain(a.damping.iter()).any(|v| !(*v > 0.0)) {
            return bad("admittance mass and damping must be positive".into());
        }
        if !(self.strategy.k_p1 >= 0.0) || !(self.strategy.stiffness_ramp >= 0.0) {
            return bad("strategy stiffness and ramp must be non-negative".into());
        }
        self.default_human().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.simulation;
        if !(s.dt > 0.0 && s.dt <= 5e-3) {
            return bad(format!("simulation.dt = {} outside (0, 0.005]", s.dt));
        }
        if !(s.duration > 0.0) || !(s.log_period >= s.dt) || !(s.sensor_noise >= 0.0) {
            return bad("simulation duration, log_period or sensor_noise out of range".into());
        }
        if !(s.hold_after_return >= 0.0) || !(s.hold_after_step >= 0.0) {
            return bad("hold times must be non-negative".into());
        }
        let c = &self.campaign;
        if c.subjects == 0 || c.trials == 0 {
            return bad("campaign needs at least one subject and one trial".into());
        }
        if !(c.mass_mean > 0.0 && c.height_mean > 0.0 && c.mass_std >= 0.0 && c.height_std >= 0.0 && c.truncation > 0.0)
        {
            return bad("campaign population parameters out of range".into());
        }
        if c.mass_mean - c.truncation * c.mass_std <= 0.0 || c.height_mean - c.truncation * c.height_std <= 0.0 {
            return bad("truncated population admits non-positive mass or height".into());
        }
        if !(self.behavior.voluntary_ratio >= 0.0) || !(self.behavior.t_wait >= 0.0) {
            return bad("behavior parameters out of range".into());
        }
        Ok(())
    }

    pub fn kinematics(&self) -> KinematicParams {
        let r = &self.robot;
        let dh = std::array::from_fn(|i| DhRow { a: r.dh_a[i], d: r.dh_d[i], alpha: r.dh_alpha[i] });
        KinematicParams {
            dh,
            mount_position: Vector3::from(r.mount_position),
            mount_yaw: r.mount_yaw,
            handle_offset: r.handle_offset,
            joint_lower: Vector6::from(r.joint_lower),
            joint_upper: Vector6::from(r.joint_upper),
        }
    }

    pub fn hqp(&self) -> HqpConfig {
        let h = &self.hqp;
        HqpConfig {
            clik_gain: Vector6::from(h.clik_gain),
            q_pref: Vector6::from(h.q_pref),
            secondary_gain: h.secondary_gain,
            velocity_limits: JointVector::from(h.velocity_limits),
            tolerance: h.tolerance,
        }
    }

    pub fn strategy_params(&self) -> StrategyParams {
        StrategyParams {
            k_p1: self.strategy.k_p1,
            mass: Vector6::from(self.admittance.mass),
            damping: Vector6::from(self.admittance.damping),
            stiffness_ramp: self.strategy.stiffness_ramp,
        }
    }

    pub fn system(&self) -> SystemConfig {
        let s = &self.simulation;
        SystemConfig {
            kinematics: self.kinematics(),
            base_yaw: self.robot.base_yaw,
            hqp: self.hqp(),
            strategy: self.strategy_params(),
            anthropometry: self.human.anthropometry,
            max_lean_fwd: self.human.max_lean_fwd,
            max_lean_bwd: self.human.max_lean_bwd,
            sensor_noise: s.sensor_noise,
            log_period: s.log_period,
            hold_after_return: s.hold_after_return,
            hold_after_step: s.hold_after_step,
        }
    }

    pub fn human_params(&self, mass: f64, height: f64) -> HumanParams {
        HumanParams::from_anthropometry(mass, height, &self.human.anthropometry, self.behavior.voluntary_ratio)
    }

    pub fn default_human(&self) -> HumanParams {
        self.human_params(self.human.mass, self.human.height)
    }

    /// Single trial for the configured default subject.
    pub fn trial(&self, strategy: Strategy, direction: Direction, seed: u64) -> TrialConfig {
        TrialConfig {
            strategy,
            direction,
            human: self.default_human(),
            behavior: self.behavior,
            seed,
            dt: self.simulation.dt,
            duration: self.simulation.duration,
            system: self.system(),
            region: None,
        }
    }

    pub fn campaign_setup(&self) -> CampaignSetup {
        CampaignSetup {
            population: self.campaign,
            system: self.system(),
            behavior: self.behavior,
            dt: self.simulation.dt,
            duration: self.simulation.duration,
        }
    }

    pub fn default_subject(&self) -> Subject {
        Subject { id: 0, mass: self.human.mass, height: self.human.height }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_default_is_valid() {
        let cfg = AppConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.kinematics(), KinematicParams::ur16e());
        assert_eq!(cfg.behavior, BehaviorParams::default());
        assert_eq!(cfg.human.anthropometry, Anthropometry::default());
    }

    #[test]
    fn overrides_merge_over_defaults() {
        let cfg = AppConfig::from_toml("[strategy]\nk_p1 = 250.0\n").unwrap();
        assert_eq!(cfg.strategy.k_p1, 250.0);
        assert_eq!(cfg.simulation, AppConfig::default().simulation);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(AppConfig::from_toml("[strategy]\nk_p2 = 1.0\n"), Err(ConfigError::Parse(_))));
        assert!(AppConfig::from_toml("[nonsense]\nx = 1\n").is_err());
        assert!(AppConfig::from_toml("[human.anthropometry]\nfoo = 1.0\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(matches!(AppConfig::from_toml("[simulation]\ndt = 0.01\n"), Err(ConfigError::Invalid(_))));
        assert!(AppConfig::from_toml("[human]\nmass = -3.0\n").is_err());
    }

    #[test]
    fn round_trip_through_text() {
        let cfg = AppConfig::default();
        assert_eq!(AppConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
