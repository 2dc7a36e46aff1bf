use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::log::{LogRow, TrialLog};
use super::metrics::{compute_result, TrialResult};
use crate::admittance::{step_coupled, step_free, AdmittanceState, PrincipalAdmittance};
use crate::hqp::{clik_velocity, solve_hqp, solve_levels, HqpConfig};
use crate::human::{
    calibrate_dz, dz_distance, elbow_angle, grip_force, hand_anchor, pendulum_step, shoulder_position, Anthropometry,
    Behavior, BehaviorParams, Direction, HumanError, HumanParams, HumanState, Perception, Phase, SupportRegion,
};
use crate::robot_model::{
    forward_kinematics, integrate_joints, jacobian, JointState, JointVector, KinematicParams, Pose6, Wrench6,
};
use crate::strategies::{BalanceStateMachine, Mode, Strategy, StrategyParams};

/// Everything that is shared by all trials of a campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub kinematics: KinematicParams,
    /// Initial base heading, rad.
    pub base_yaw: f64,
    pub hqp: HqpConfig,
    pub strategy: StrategyParams,
    pub anthropometry: Anthropometry,
    pub max_lean_fwd: f64,
    pub max_lean_bwd: f64,
    /// Standard deviation of the force-sensor noise, N.
    pub sensor_noise: f64,
    pub log_period: f64,
    /// Simulated time kept after the CoP returns inside the DZ.
    pub hold_after_return: f64,
    /// Simulated time kept after a step.
    pub hold_after_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub strategy: Strategy,
    pub direction: Direction,
    pub human: HumanParams,
    pub behavior: BehaviorParams,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub system: SystemConfig,
    /// Previously calibrated region; calibrated from the subject when absent.
    pub region: Option<SupportRegion>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrialError {
    #[error("invalid trial configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Human(#[from] HumanError),
    #[error("robot cannot reach the subject's hand (residual {0:.3e} m)")]
    Unreachable(f64),
    #[error("non-finite {what} at t = {t:.3} s")]
    NonFinite { what: &'static str, t: f64 },
}

/// Quantities observed during a trial that are not part of the log.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrialDiagnostics {
    /// Largest voluntary force magnitude over the whole trial, N.
    pub max_voluntary: f64,
    pub recover_entered: bool,
    /// Largest voluntary force magnitude while in Recover, N.
    pub max_voluntary_recover: f64,
    /// Elbow excursion (max − min) while in Recover, rad.
    pub elbow_excursion_recover: f64,
    /// Largest handle tracking error of the robot, m.
    pub max_tracking_error: f64,
    pub rank_deficient_steps: usize,
    pub scaled_steps: usize,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct TrialOutput {
    pub result: TrialResult,
    pub log: TrialLog,
    pub diagnostics: TrialDiagnostics,
    pub region: SupportRegion,
}

/// SplitMix64 finalizer used to derive independent seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Robot configuration with the handle on `target` and the arm near its preferred posture.
pub fn place_robot(sys: &SystemConfig, target: &Vector3<f64>) -> Result<JointState, TrialError> {
    let kin = &sys.kinematics;
    let mut q = JointState::new(Vector3::new(0.0, 0.0, sys.base_yaw), sys.hqp.q_pref);
    let x0 = forward_kinematics(&q, kin);
    q.base.x += target.x - x0.position.x;
    q.base.y += target.y - x0.position.y;
    let goal = Pose6::new(*target, x0.rotation);
    let wide = JointVector::repeat(1e3);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let x = forward_kinematics(&q, kin);
        let e = goal.error_from(&x);
        residual = e.norm();
        if residual < 1e-12 {
            break;
        }
        let sol = solve_levels(&jacobian(&q, kin), &e, &q, &sys.hqp);
        q = integrate_joints(&q, &sol.qdot, 1.0, &wide, kin);
    }
    if !(residual <= 1e-9) {
        return Err(TrialError::Unreachable(residual));
    }
    q.t = 0.0;
    Ok(q)
}

fn check(v: f64, what: &'static str, t: f64) -> Result<(), TrialError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(TrialError::NonFinite { what, t })
    }
}

/// Runs one fall trial: human → strategy → admittance → HQP → robot each step.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialOutput, TrialError> {
    if !(cfg.dt > 0.0 && cfg.dt <= 5e-3) {
        return Err(TrialError::Config(format!("dt = {} outside (0, 5 ms]", cfg.dt)));
    }
    if !(cfg.duration > 0.0) {
        return Err(TrialError::Config("duration must be positive".into()));
    }
    let sys = &cfg.system;
    let p = &cfg.human;
    p.validate()?;
    let region = match cfg.region {
        Some(r) if r.sp.strictly_contains(&r.dz) => r,
        Some(_) => return Err(TrialError::Config("region DZ is not strictly inside its SP".into())),
        None => calibrate_dz(p, sys.max_lean_fwd, sys.max_lean_bwd)?,
    };
    let dt = cfg.dt;
    let sgn = cfg.direction.sign();

    let mut human = HumanState::upright(p);
    let mut behavior = Behavior::new(cfg.behavior, cfg.direction);
    let mut sm = BalanceStateMachine::new(cfg.strategy, mix_seed(cfg.seed, 1));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 2));

    let kin = &sys.kinematics;
    let mut q = place_robot(sys, &hand_anchor(p, 0.0))?;
    let mut qdot = JointVector::zeros();
    let mut adm = AdmittanceState::at_rest(forward_kinematics(&q, kin));
    let z_star = adm.pose.position.z;

    let steps = (cfg.duration / dt).round() as usize;
    let log_every = ((sys.log_period / dt).round() as usize).max(1);
    let mut log = TrialLog::new(log_every as f64 * dt);
    let mut diag = TrialDiagnostics::default();
    let mut elbow_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut left = false;
    let mut stop_at: Option<usize> = None;

    for n in 0..steps {
        let t = n as f64 * dt;
        let x_meas = forward_kinematics(&q, kin);
        let j = jacobian(&q, kin);
        let ee_vel = j * qdot;

        let cop = human.cop;
        let cop_vel = Vector2::new(p.com_length() * human.phi.cos() * human.phi_dot, 0.0);
        let dz = dz_distance(&cop, &region);
        sm.update_state(&cop, &cop_vel, &region, &adm.pose, t);
        let cmd = sm.reference(&cop, &adm.pose, z_star, &sys.strategy, t);
        let spring = cmd.spring_force(&adm.pose.position);
        let restoring = (-sgn * spring.x).max(0.0);

        let grip = grip_force(&human, &x_meas, &ee_vel, p);
        let action = behavior.policy(&human, p, &Perception { t, dt, dz, restoring, grip });
        human.phase = action.phase;
        human.elbow = elbow_angle(&shoulder_position(p, human.phi), &x_meas.position, p.upper_arm, p.forearm);

        let force = grip + action.voluntary;
        let lambda = Wrench6::new(force.x, force.y, force.z, 0.0, 0.0, 0.0);
        let mut measured = lambda;
        if sys.sensor_noise > 0.0 {
            for k in 0..3 {
                let w: f64 = noise_rng.sample(StandardNormal);
                measured[k] += sys.sensor_noise * w;
            }
        }

        let vol = action.voluntary.norm();
        diag.max_voluntary = diag.max_voluntary.max(vol);
        if action.phase == Phase::Recover {
            diag.recover_entered = true;
            diag.max_voluntary_recover = diag.max_voluntary_recover.max(vol);
            elbow_range = (elbow_range.0.min(human.elbow), elbow_range.1.max(human.elbow));
        }

        if n % log_every == 0 {
            log.push(LogRow {
                t,
                cop_x: cop.x,
                dz_lo: region.dz.x_min,
                dz_hi: region.dz.x_max,
                f: [measured[0], measured[1], measured[2]],
                ee_x: x_meas.position.x,
                ee_z: x_meas.position.z,
                ref_x: cmd.x_ref.position.x,
                ref_z: cmd.x_ref.position.z,
                elbow: human.elbow,
                phase: action.phase,
            });
        }

        human = pendulum_step(&human, action.tau_ankle, &(-lambda), p, dt);
        check(human.phi, "lean angle", t)?;

        let gains = PrincipalAdmittance { m: sys.strategy.mass, d: cmd.d_p, k: cmd.k_p, r_wp: cmd.r_wp };
        adm = match cmd.mode {
            Mode::Free => step_free(&adm, &measured, &gains, dt),
            Mode::Coupled => step_coupled(&adm, &measured, &cmd.x_ref, &gains, dt),
        };
        check(adm.pose.position.norm() + adm.twist.norm(), "admittance state", t)?;

        let xdot = clik_velocity(&adm.pose, &adm.twist, &x_meas, &sys.hqp.clik_gain);
        let sol = solve_hqp(&j, &xdot, &q, &sys.hqp);
        diag.rank_deficient_steps += sol.rank_deficient as usize;
        diag.scaled_steps += sol.scaled as usize;
        diag.max_tracking_error = diag.max_tracking_error.max((adm.pose.position - x_meas.position).norm());
        qdot = sol.qdot;
        q = integrate_joints(&q, &qdot, dt, &sys.hqp.velocity_limits, kin);
        check(q.to_vector().norm(), "joint state", t)?;
        diag.steps = n + 1;

        if dz > 0.0 {
            left = true;
        }
        if stop_at.is_none() {
            if action.phase == Phase::Stepped {
                stop_at = Some(n + (sys.hold_after_step / dt).round() as usize);
            } else if left && dz == 0.0 {
                stop_at = Some(n + (sys.hold_after_return / dt).round() as usize);
            }
        }
        if stop_at.is_some_and(|s| n >= s) {
            break;
        }
    }

    if diag.recover_entered {
        diag.elbow_excursion_recover = elbow_range.1 - elbow_range.0;
    }
    let result = compute_result(&log, p.weight());
    Ok(TrialOutput { result, log, diagnostics: diag, region })
}
