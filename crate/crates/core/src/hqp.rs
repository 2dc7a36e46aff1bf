//! Two-level prioritized least squares over whole-body joint velocities.
//!
//! Level 1 tracks the end-effector twist; level 2 pulls the arm toward a
//! preferred configuration inside the null space of level 1.

use nalgebra::{Matrix6, SMatrix, SVector, SymmetricEigen, Vector6};

use crate::robot_model::{Jacobian, JointState, JointVector, Pose6, Twist6};

/// Damping used while the Jacobian is well conditioned.
pub const DAMPING: f64 = 1e-6;
/// Damping once the smallest singular value drops below the tolerance.
pub const DAMPING_SINGULAR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct HqpConfig {
    pub clik_gain: Vector6<f64>,
    pub q_pref: Vector6<f64>,
    pub secondary_gain: f64,
    pub velocity_limits: JointVector,
    /// Singular-value threshold that switches to the heavier damping.
    pub tolerance: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HqpConfigError {
    #[error("gains must be positive")]
    Gain,
    #[error("velocity limits must be positive")]
    Limits,
    #[error("tolerance must lie in (0, 1e-3]")]
    Tolerance,
}

impl HqpConfig {
    pub fn validate(&self) -> Result<(), HqpConfigError> {
        if self.clik_gain.iter().any(|g| !(*g > 0.0)) || !(self.secondary_gain > 0.0) {
            return Err(HqpConfigError::Gain);
        }
        if self.velocity_limits.iter().any(|l| !(*l > 0.0)) {
            return Err(HqpConfigError::Limits);
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(HqpConfigError::Tolerance);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HqpSolution {
    pub qdot: JointVector,
    /// Smallest singular value of the task Jacobian.
    pub sigma_min: f64,
    /// Heavier damping was engaged.
    pub rank_deficient: bool,
    /// Velocity limits forced a uniform scale-down.
    pub scaled: bool,
}

/// `ẋ* = ẋ_d + gain ⊙ err(x_d, x_meas)`.
pub fn clik_velocity(x_d: &Pose6, xdot_d: &Twist6, x_meas: &Pose6, gain: &Vector6<f64>) -> Twist6 {
    xdot_d + gain.component_mul(&x_d.error_from(x_meas))
}

/// Damped right pseudo-inverse `Jᵀ(JJᵀ + λ²I)⁻¹` and the smallest singular value.
fn damped_pinv(j: &Jacobian, tolerance: f64) -> (SMatrix<f64, 9, 6>, f64, bool) {
    let jjt: Matrix6<f64> = j * j.transpose();
    let eig = SymmetricEigen::new(jjt);
    let sigma_min = eig.eigenvalues.min().max(0.0).sqrt();
    let singular = sigma_min < tolerance;
    let lambda = if singular { DAMPING_SINGULAR } else { DAMPING };
    let l2 = lambda * lambda;
    let inv_diag = eig.eigenvalues.map(|e| 1.0 / (e.max(0.0) + l2));
    let inv = eig.eigenvectors * Matrix6::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
    (j.transpose() * inv, sigma_min, singular)
}

/// Pseudo-inverse of a wide matrix through the eigen-decomposition of `AAᵀ`,
/// discarding directions below a relative threshold.
fn pinv_wide(a: &SMatrix<f64, 6, 9>) -> SMatrix<f64, 9, 6> {
    let aat: Matrix6<f64> = a * a.transpose();
    let eig = SymmetricEigen::new(aat);
    let max = eig.eigenvalues.max().max(0.0);
    let cut = max * 1e-12;
    let inv_diag = eig.eigenvalues.map(|e| if e > cut && e > 0.0 { 1.0 / e } else { 0.0 });
    let inv = eig.eigenvectors * Matrix6::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
    a.transpose() * inv
}

/// Selects the arm rates out of the whole-body vector.
pub fn arm_selector() -> SMatrix<f64, 6, 9> {
    let mut s = SMatrix::<f64, 6, 9>::zeros();
    for i in 0..6 {
        s[(i, 3 + i)] = 1.0;
    }
    s
}

/// Unclamped two-level solution.
pub fn solve_levels(j: &Jacobian, xdot: &Twist6, q: &JointState, cfg: &HqpConfig) -> HqpSolution {
    let (jp, sigma_min, singular) = damped_pinv(j, cfg.tolerance);
    let qd1 = jp * xdot;
    let n = SMatrix::<f64, 9, 9>::identity() - jp * j;
    let s = arm_selector();
    let v2: Vector6<f64> = cfg.secondary_gain * (cfg.q_pref - q.arm);
    let sn = s * n;
    let qd = qd1 + n * (pinv_wide(&sn) * (v2 - s * qd1));
    HqpSolution { qdot: qd, sigma_min, rank_deficient: singular, scaled: false }
}

/// Two-level solve followed by direction-preserving velocity scaling.
pub fn solve_hqp(j: &Jacobian, xdot: &Twist6, q: &JointState, cfg: &HqpConfig) -> HqpSolution {
    let mut sol = solve_levels(j, xdot, q, cfg);
    let (qd, scaled) = scale_to_limits(&sol.qdot, &cfg.velocity_limits);
    sol.qdot = qd;
    sol.scaled = scaled;
    sol
}

/// Uniformly shrinks `v` so that every component respects its limit.
pub fn scale_to_limits(v: &JointVector, limits: &JointVector) -> (JointVector, bool) {
    let mut ratio: f64 = 1.0;
    for i in 0..9 {
        let a = v[i].abs();
        if a > limits[i] {
            ratio = ratio.min(limits[i] / a);
        }
    }
    if ratio >= 1.0 {
        return (*v, false);
    }
    let out: SVector<f64, 9> = (v * ratio).zip_map(limits, |x, l| x.clamp(-l, l));
    (out, true)
}
