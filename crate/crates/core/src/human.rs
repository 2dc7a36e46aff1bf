//! Sagittal inverted-pendulum human holding the robot handle.
//!
//! The body pivots about the ankle with lean angle `φ` (positive forward,
//! a rotation about world +Y). The CoP is taken as the ground projection of
//! the CoM. The hand is attached to the handle through a stiff spring-damper.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::robot_model::{Pose6, Twist6, Wrench6};

pub const GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Fwd,
    Bwd,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Fwd => 1.0,
            Direction::Bwd => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Fwd => "fwd",
            Direction::Bwd => "bwd",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fwd" => Ok(Direction::Fwd),
            "bwd" => Ok(Direction::Bwd),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

/// Body-proportion constants shared by every subject.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anthropometry {
    /// CoM height over the ankle, fraction of body height.
    pub com_ratio: f64,
    pub upper_arm_ratio: f64,
    pub forearm_ratio: f64,
    /// Shoulder height above the ground, fraction of body height.
    pub shoulder_ratio: f64,
    pub ankle_height_ratio: f64,
    pub foot_length_ratio: f64,
    /// Ankle position along the foot, measured from the heel.
    pub ankle_from_heel: f64,
    /// Outer stance width, fraction of body height.
    pub stance_width_ratio: f64,
    /// DZ half-width as a fraction of the SP half-width.
    pub dz_lateral_ratio: f64,
    /// Upper-arm angle from the downward vertical, rad, positive forward.
    pub arm_elevation: f64,
    /// Nominal elbow flexion, rad.
    pub elbow_flexion: f64,
    /// N/m
    pub grip_k: f64,
    /// N·s/m
    pub grip_d: f64,
}

impl Default for Anthropometry {
    fn default() -> Self {
        Self {
            com_ratio: 0.55,
            upper_arm_ratio: 0.186,
            forearm_ratio: 0.175,
            shoulder_ratio: 0.818,
            ankle_height_ratio: 0.039,
            foot_length_ratio: 0.152,
            ankle_from_heel: 0.3,
            stance_width_ratio: 0.15,
            dz_lateral_ratio: 0.6,
            arm_elevation: 0.35,
            elbow_flexion: 1.4,
            grip_k: 2000.0,
            grip_d: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumanParams {
    pub mass: f64,
    pub height: f64,
    pub com_ratio: f64,
    pub ankle: Vector3<f64>,
    pub upper_arm: f64,
    pub forearm: f64,
    pub shoulder_ratio: f64,
    pub arm_elevation: f64,
    pub elbow_flexion: f64,
    pub foot_length: f64,
    pub ankle_from_heel: f64,
    pub stance_width: f64,
    pub dz_lateral_ratio: f64,
    pub grip_k: f64,
    pub grip_d: f64,
    /// N
    pub voluntary_limit: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HumanError {
    #[error("invalid human parameters: {0}")]
    Params(&'static str),
    #[error("deadband depth {0:.4} m is below 1 cm")]
    ShallowDeadband(f64),
    #[error("deadband is not strictly inside the support polygon")]
    DeadbandOutsideSupport,
}

impl HumanParams {
    pub fn from_anthropometry(mass: f64, height: f64, a: &Anthropometry, voluntary_ratio: f64) -> Self {
        Self {
            mass,
            height,
            com_ratio: a.com_ratio,
            ankle: Vector3::new(0.0, 0.0, a.ankle_height_ratio * height),
            upper_arm: a.upper_arm_ratio * height,
            forearm: a.forearm_ratio * height,
            shoulder_ratio: a.shoulder_ratio,
            arm_elevation: a.arm_elevation,
            elbow_flexion: a.elbow_flexion,
            foot_length: a.foot_length_ratio * height,
            ankle_from_heel: a.ankle_from_heel,
            stance_width: a.stance_width_ratio * height,
            dz_lateral_ratio: a.dz_lateral_ratio,
            grip_k: a.grip_k,
            grip_d: a.grip_d,
            voluntary_limit: voluntary_ratio * mass * GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), HumanError> {
        if !(self.mass > 0.0) || !(self.height > 0.0) {
            return Err(HumanError::Params("mass and height must be positive"));
        }
        if !(self.com_ratio > 0.0 && self.com_ratio < 1.0) {
            return Err(HumanError::Params("com_ratio must lie in (0, 1)"));
        }
        if !(self.upper_arm > 0.0) || !(self.forearm > 0.0) {
            return Err(HumanError::Params("arm segments must be positive"));
        }
        Ok(())
    }

    pub fn com_length(&self) -> f64 {
        self.com_ratio * self.height
    }

    pub fn inertia(&self) -> f64 {
        self.mass * self.com_length().powi(2)
    }

    /// Body weight `w_h` in newtons.
    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }

    /// Shoulder and hand anchor relative to the ankle at `φ = 0`.
    fn arm_offsets(&self) -> (Vector3<f64>, Vector3<f64>) {
        let shoulder = Vector3::new(0.0, 0.0, self.shoulder_ratio * self.height - self.ankle.z);
        let (sa, ca) = self.arm_elevation.sin_cos();
        let upper = Vector3::new(sa, 0.0, -ca);
        let fore = Rotation3::from_axis_angle(&Vector3::y_axis(), -self.elbow_flexion) * upper;
        (shoulder, shoulder + self.upper_arm * upper + self.forearm * fore)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Lean,
    Hold,
    Recover,
    /// Balance regained; the subject returns upright.
    Restored,
    /// The subject stepped to avoid falling: trial failure.
    Stepped,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Lean => "lean",
            Phase::Hold => "hold",
            Phase::Recover => "recover",
            Phase::Restored => "restored",
            Phase::Stepped => "stepped",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Some(match s {
            "lean" => Phase::Lean,
            "hold" => Phase::Hold,
            "recover" => Phase::Recover,
            "restored" => Phase::Restored,
            "stepped" => Phase::Stepped,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HumanState {
    pub phi: f64,
    pub phi_dot: f64,
    pub com: Vector3<f64>,
    pub cop: Vector2<f64>,
    pub elbow: f64,
    pub phase: Phase,
}

impl HumanState {
    pub fn upright(p: &HumanParams) -> Self {
        let com = com_position(p, 0.0);
        let mut s = Self { phi: 0.0, phi_dot: 0.0, com, cop: cop_estimate(&com), elbow: 0.0, phase: Phase::Lean };
        s.elbow = elbow_angle(&shoulder_position(p, 0.0), &hand_anchor(p, 0.0), p.upper_arm, p.forearm);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn strictly_contains(&self, other: &Rect) -> bool {
        other.x_min > self.x_min && other.x_max < self.x_max && other.y_min > self.y_min && other.y_max < self.y_max
    }

    /// Euclidean distance from `p` to the rectangle, zero inside.
    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        let dx = (self.x_min - p.x).max(0.0).max(p.x - self.x_max);
        let dy = (self.y_min - p.y).max(0.0).max(p.y - self.y_max);
        dx.hypot(dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportRegion {
    pub sp: Rect,
    pub dz: Rect,
}

pub fn com_position(p: &HumanParams, phi: f64) -> Vector3<f64> {
    let l = p.com_length();
    p.ankle + Vector3::new(l * phi.sin(), 0.0, l * phi.cos())
}

pub fn cop_estimate(com: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(com.x, com.y)
}

pub fn dz_distance(cop: &Vector2<f64>, region: &SupportRegion) -> f64 {
    region.dz.distance(cop)
}

fn body_rotation(phi: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), phi)
}

pub fn shoulder_position(p: &HumanParams, phi: f64) -> Vector3<f64> {
    p.ankle + body_rotation(phi) * p.arm_offsets().0
}

/// Preferred hand point: the hand location with the nominal arm posture.
pub fn hand_anchor(p: &HumanParams, phi: f64) -> Vector3<f64> {
    p.ankle + body_rotation(phi) * p.arm_offsets().1
}

pub fn hand_anchor_velocity(p: &HumanParams, phi: f64, phi_dot: f64) -> Vector3<f64> {
    let r = body_rotation(phi) * p.arm_offsets().1;
    Vector3::new(0.0, phi_dot, 0.0).cross(&r)
}

pub fn calibrate_dz(p: &HumanParams, max_lean_fwd: f64, max_lean_bwd: f64) -> Result<SupportRegion, HumanError> {
    let l = p.com_length();
    let front = p.ankle.x + l * max_lean_fwd.sin();
    let back = p.ankle.x - l * max_lean_bwd.sin();
    if front - back < 0.01 {
        return Err(HumanError::ShallowDeadband(front - back));
    }
    let heel = p.ankle.x - p.ankle_from_heel * p.foot_length;
    let half = 0.5 * p.stance_width;
    let sp = Rect { x_min: heel, x_max: heel + p.foot_length, y_min: p.ankle.y - half, y_max: p.ankle.y + half };
    let lat = p.dz_lateral_ratio * half;
    let dz = Rect { x_min: back, x_max: front, y_min: p.ankle.y - lat, y_max: p.ankle.y + lat };
    if !sp.strictly_contains(&dz) {
        return Err(HumanError::DeadbandOutsideSupport);
    }
    Ok(SupportRegion { sp, dz })
}

/// Semi-implicit Euler step of `I φ̈ = m g L sin φ + τ_ankle + τ_hand`.
///
/// `hand_wrench` is the force the robot applies to the human at the hand anchor.
pub fn pendulum_step(s: &HumanState, tau_ankle: f64, hand_wrench: &Wrench6, p: &HumanParams, dt: f64) -> HumanState {
    let tau_hand = hand_torque(p, s.phi, hand_wrench);
    let l = p.com_length();
    let acc = (p.mass * GRAVITY * l * s.phi.sin() + tau_ankle + tau_hand) / p.inertia();
    let phi_dot = s.phi_dot + dt * acc;
    let phi = s.phi + dt * phi_dot;
    let com = com_position(p, phi);
    HumanState { phi, phi_dot, com, cop: cop_estimate(&com), ..*s }
}

/// Ankle moment (about +Y) of a force applied at the hand anchor.
pub fn hand_torque(p: &HumanParams, phi: f64, hand_wrench: &Wrench6) -> f64 {
    let r = hand_anchor(p, phi) - p.ankle;
    r.z * hand_wrench[0] - r.x * hand_wrench[2]
}

/// Elbow angle: 0 with the arm extended, −π fully flexed.
pub fn elbow_angle(shoulder: &Vector3<f64>, hand: &Vector3<f64>, l_u: f64, l_f: f64) -> f64 {
    let d_raw = (shoulder - hand).norm();
    let d = d_raw.clamp((l_u - l_f).abs(), l_u + l_f);
    if d != d_raw {
        log::debug!("elbow distance {d_raw:.4} m clamped to reachable range");
    }
    let c = ((l_u * l_u + l_f * l_f - d * d) / (2.0 * l_u * l_f)).clamp(-1.0, 1.0);
    -(PI - c.acos())
}

/// Wrench measured at the handle: grip spring-damper plus voluntary force.
pub fn grasp_wrench(s: &HumanState, ee: &Pose6, ee_vel: &Twist6, p: &HumanParams, voluntary: &Vector3<f64>) -> Wrench6 {
    let f = grip_force(s, ee, ee_vel, p) + voluntary;
    Wrench6::new(f.x, f.y, f.z, 0.0, 0.0, 0.0)
}

/// Passive grip force on the handle.
pub fn grip_force(s: &HumanState, ee: &Pose6, ee_vel: &Twist6, p: &HumanParams) -> Vector3<f64> {
    let anchor = hand_anchor(p, s.phi);
    let anchor_vel = hand_anchor_velocity(p, s.phi, s.phi_dot);
    p.grip_k * (anchor - ee.position) + p.grip_d * (anchor_vel - ee_vel.fixed_rows::<3>(0))
}

/// Constants of the scripted fall and recovery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorParams {
    /// s, quiet stance before the lean starts
    pub lean_start: f64,
    /// rad/s, lean reference ramp
    pub lean_rate: f64,
    /// Proportional ankle gain during the lean, fraction of m g L.
    pub lean_kp: f64,
    /// s, derivative gain during the lean, fraction of m g L.
    pub lean_kd: f64,
    /// m, CoP overshoot past the DZ border that ends the lean
    pub unbalance_margin: f64,
    /// Passive ankle stiffness while holding, fraction of m g L.
    pub ankle_support: f64,
    /// N·m·s, passive ankle damping while holding
    pub ankle_damping: f64,
    /// Residual lean torque while holding, fraction of m g L.
    pub lean_intent: f64,
    /// s, delay after leaving the DZ before pushing back
    pub t_wait: f64,
    /// Hand force limit, fraction of body weight.
    pub voluntary_ratio: f64,
    /// N/s, ramp rate of the pushed hand force
    pub voluntary_rate: f64,
    /// s, release time constant once the push ends
    pub voluntary_release: f64,
    /// m, DZ distance that triggers a step
    pub step_threshold: f64,
    /// N, restoring force below which the subject steps
    pub assist_min: f64,
    /// m, DZ distance within which an inward-moving subject takes over
    pub capture_margin: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            lean_start: 1.0,
            lean_rate: 0.06,
            lean_kp: 1.5,
            lean_kd: 0.35,
            unbalance_margin: 0.005,
            ankle_support: 0.97,
            ankle_damping: 25.0,
            lean_intent: 0.015,
            t_wait: 1.5,
            voluntary_ratio: 0.08,
            voluntary_rate: 200.0,
            voluntary_release: 0.3,
            step_threshold: 0.10,
            assist_min: 5.0,
            capture_margin: 0.01,
        }
    }
}

/// Inputs sensed by the subject at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perception {
    pub t: f64,
    pub dt: f64,
    pub dz: f64,
    /// Horizontal robot force pushing the body back toward the DZ, N.
    pub restoring: f64,
    /// Passive grip force currently applied to the handle.
    pub grip: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action {
    pub tau_ankle: f64,
    pub voluntary: Vector3<f64>,
    pub phase: Phase,
}

/// Scripted subject following the trial instructions.
#[derive(Clone, Debug)]
pub struct Behavior {
    pub params: BehaviorParams,
    pub direction: Direction,
    phase: Phase,
    t_out: Option<f64>,
    hand_force: f64,
    voluntary: Vector3<f64>,
    prev_dz: f64,
}

impl Behavior {
    pub fn new(params: BehaviorParams, direction: Direction) -> Self {
        Self {
            params,
            direction,
            phase: Phase::Lean,
            t_out: None,
            hand_force: 0.0,
            voluntary: Vector3::zeros(),
            prev_dz: 0.0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn policy(&mut self, s: &HumanState, p: &HumanParams, obs: &Perception) -> Action {
        let b = &self.params;
        let sgn = self.direction.sign();
        let mgl = p.mass * GRAVITY * p.com_length();
        let dz = obs.dz;
        let dz_rate = (dz - self.prev_dz) / obs.dt;
        self.prev_dz = dz;
        if dz > 0.0 && self.t_out.is_none() {
            self.t_out = Some(obs.t);
        }

        if self.phase == Phase::Lean && dz > b.unbalance_margin {
            self.phase = Phase::Hold;
        }
        if matches!(self.phase, Phase::Hold | Phase::Recover) {
            let waited = self.t_out.is_some_and(|t0| obs.t - t0 >= b.t_wait);
            if self.phase == Phase::Hold && waited && dz > 0.0 && obs.restoring >= b.assist_min {
                self.phase = Phase::Recover;
                self.hand_force = sgn * obs.grip.x;
            }
            let captured = self.phase == Phase::Hold && dz > 0.0 && dz < b.capture_margin && dz_rate < 0.0;
            if dz > b.step_threshold && obs.restoring < b.assist_min {
                self.phase = Phase::Stepped;
            } else if dz == 0.0 || captured {
                self.phase = Phase::Restored;
            }
        }
        if self.phase == Phase::Lean && dz > b.step_threshold && obs.restoring < b.assist_min {
            self.phase = Phase::Stepped;
        }

        let tau = match self.phase {
            Phase::Lean => {
                let (r, rd) = if obs.t < b.lean_start {
                    (0.0, 0.0)
                } else {
                    (sgn * b.lean_rate * (obs.t - b.lean_start), sgn * b.lean_rate)
                };
                -b.lean_kp * mgl * (s.phi - r) - b.lean_kd * mgl * (s.phi_dot - rd)
            }
            Phase::Hold => -b.ankle_support * mgl * s.phi - b.ankle_damping * s.phi_dot + sgn * b.lean_intent * mgl,
            Phase::Recover => -b.ankle_support * mgl * s.phi - b.ankle_damping * s.phi_dot,
            Phase::Restored | Phase::Stepped => -b.lean_kp * mgl * s.phi - b.lean_kd * mgl * s.phi_dot,
        };

        if self.phase == Phase::Recover {
            self.hand_force = (self.hand_force + b.voluntary_rate * obs.dt).min(p.voluntary_limit);
            self.voluntary = Vector3::new(sgn * self.hand_force - obs.grip.x, 0.0, 0.0);
        } else {
            self.voluntary *= (-obs.dt / b.voluntary_release).exp();
        }
        Action { tau_ankle: tau, voluntary: self.voluntary, phase: self.phase }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn subject() -> HumanParams {
        HumanParams::from_anthropometry(65.5, 1.707, &Anthropometry::default(), 0.08)
    }

    #[test]
    fn com_examples() {
        let p = subject();
        let l = p.com_length();
        assert_relative_eq!(com_position(&p, 0.0), p.ankle + Vector3::new(0.0, 0.0, l));
        let c = com_position(&p, PI / 2.0);
        assert_relative_eq!(c.x, l, epsilon = 1e-12);
        assert_relative_eq!(c.z, p.ankle.z, epsilon = 1e-12);
        let c = com_position(&p, 0.1);
        assert!(((c.x - l * 0.1) / (l * 0.1)).abs() < 0.01);
    }

    #[test]
    fn cop_drops_height() {
        assert_eq!(cop_estimate(&Vector3::new(0.1, 0.2, 0.9)), Vector2::new(0.1, 0.2));
        assert_eq!(cop_estimate(&Vector3::new(0.1, 0.2, 0.0)), Vector2::new(0.1, 0.2));
    }

    #[test]
    fn dz_distance_examples() {
        let r = Rect { x_min: -0.05, x_max: 0.12, y_min: -0.10, y_max: 0.10 };
        let region = SupportRegion { sp: r, dz: r };
        assert_eq!(dz_distance(&Vector2::new(0.0, 0.0), &region), 0.0);
        assert_relative_eq!(dz_distance(&Vector2::new(0.18, 0.0), &region), 0.06, epsilon = 1e-12);
        assert_relative_eq!(dz_distance(&Vector2::new(0.15, 0.14), &region), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn calibration_front_border() {
        let mut p = HumanParams::from_anthropometry(70.0, 1.70, &Anthropometry::default(), 0.08);
        p.ankle = Vector3::zeros();
        let r = calibrate_dz(&p, 0.12, 0.07).unwrap();
        assert_relative_eq!(r.dz.x_max, 0.935 * 0.12f64.sin(), epsilon = 1e-12);
        assert!(r.sp.strictly_contains(&r.dz));
        assert!(matches!(calibrate_dz(&p, 0.0, 0.0), Err(HumanError::ShallowDeadband(_))));
    }

    #[test]
    fn pendulum_equilibrium_and_fall_direction() {
        let p = subject();
        let s = HumanState::upright(&p);
        let n = pendulum_step(&s, 0.0, &Wrench6::zeros(), &p, 1e-3);
        assert_eq!(n.phi, 0.0);
        assert_eq!(n.phi_dot, 0.0);
        let tilted = HumanState { phi: 0.05, ..s };
        let n = pendulum_step(&tilted, 0.0, &Wrench6::zeros(), &p, 1e-3);
        assert!(n.phi_dot > 0.0);
    }

    #[test]
    fn elbow_examples() {
        let o = Vector3::zeros();
        assert_relative_eq!(elbow_angle(&o, &Vector3::new(0.5, 0.0, 0.0), 0.3, 0.2), 0.0, epsilon = 1e-7);
        assert_relative_eq!(elbow_angle(&o, &Vector3::new(1e-9, 0.0, 0.0), 0.3, 0.3), -PI, epsilon = 1e-6);
        let d = 0.3 * 2f64.sqrt();
        assert_relative_eq!(elbow_angle(&o, &Vector3::new(d, 0.0, 0.0), 0.3, 0.3), -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn nominal_elbow_matches_flexion() {
        let p = subject();
        let s = HumanState::upright(&p);
        assert_relative_eq!(s.elbow, -p.elbow_flexion, epsilon = 1e-9);
    }

    #[test]
    fn grasp_examples() {
        let p = subject();
        let s = HumanState::upright(&p);
        let anchor = hand_anchor(&p, 0.0);
        let w = grasp_wrench(&s, &Pose6::from_position(anchor), &Twist6::zeros(), &p, &Vector3::zeros());
        assert_eq!(w, Wrench6::zeros());
        let ee = Pose6::from_position(anchor - Vector3::new(0.01, 0.0, 0.0));
        let w = grasp_wrench(&s, &ee, &Twist6::zeros(), &p, &Vector3::zeros());
        assert_relative_eq!(w, Wrench6::new(20.0, 0.0, 0.0, 0.0, 0.0, 0.0), epsilon = 1e-9);
    }

    fn perception(t: f64, dz: f64, restoring: f64) -> Perception {
        Perception { t, dt: 1e-3, dz, restoring, grip: Vector3::zeros() }
    }

    #[test]
    fn quiet_stance_before_lean() {
        let p = subject();
        let mut b = Behavior::new(BehaviorParams::default(), Direction::Fwd);
        let a = b.policy(&HumanState::upright(&p), &p, &perception(0.2, 0.0, 0.0));
        assert_eq!(a.tau_ankle, 0.0);
        assert_eq!(a.phase, Phase::Lean);
    }

    #[test]
    fn steps_without_assistance() {
        let p = subject();
        let mut b = Behavior::new(BehaviorParams::default(), Direction::Fwd);
        let s = HumanState::upright(&p);
        b.policy(&s, &p, &perception(2.0, 0.02, 0.0));
        let a = b.policy(&s, &p, &perception(2.001, 0.12, 1.0));
        assert_eq!(a.phase, Phase::Stepped);
    }

    #[test]
    fn restored_inside_without_voluntary_force() {
        let p = subject();
        let mut b = Behavior::new(BehaviorParams::default(), Direction::Fwd);
        let s = HumanState::upright(&p);
        b.policy(&s, &p, &perception(2.0, 0.02, 20.0));
        let a = b.policy(&s, &p, &perception(2.5, 0.0, 0.0));
        assert_eq!(a.phase, Phase::Restored);
        assert_eq!(a.voluntary, Vector3::zeros());
    }
}
