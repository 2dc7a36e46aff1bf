//! Admittance rendering `M ẍ + D ẋ + K (x ⊖ x_ref) = λ` in a principal frame.
//!
//! Mass, damping and stiffness share the rotation `R_WP`, so the world-frame
//! system decouples into six scalar second-order systems along the principal
//! axes. Each is advanced with its exact zero-order-hold solution.

use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use crate::robot_model::{rotation_exp, Pose6, Twist6, Wrench6};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalAdmittance {
    pub m: Vector6<f64>,
    pub d: Vector6<f64>,
    pub k: Vector6<f64>,
    pub r_wp: Rotation3<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AdmittanceError {
    #[error("principal masses must be positive")]
    Mass,
    #[error("principal damping must be positive")]
    Damping,
    #[error("principal stiffness must be non-negative")]
    Stiffness,
}

impl PrincipalAdmittance {
    /// Zero stiffness, identity principal frame.
    pub fn free(m: Vector6<f64>, d: Vector6<f64>) -> Self {
        Self { m, d, k: Vector6::zeros(), r_wp: Rotation3::identity() }
    }

    pub fn validate(&self) -> Result<(), AdmittanceError> {
        if self.m.iter().any(|v| !(*v > 0.0)) {
            return Err(AdmittanceError::Mass);
        }
        if self.d.iter().any(|v| !(*v > 0.0)) {
            return Err(AdmittanceError::Damping);
        }
        if self.k.iter().any(|v| !(*v >= 0.0)) {
            return Err(AdmittanceError::Stiffness);
        }
        Ok(())
    }

    pub fn world_mass(&self) -> Matrix6<f64> {
        rotate_to_world(&self.m, &self.r_wp)
    }

    pub fn world_damping(&self) -> Matrix6<f64> {
        rotate_to_world(&self.d, &self.r_wp)
    }

    pub fn world_stiffness(&self) -> Matrix6<f64> {
        rotate_to_world(&self.k, &self.r_wp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmittanceState {
    pub pose: Pose6,
    pub twist: Twist6,
}

impl AdmittanceState {
    pub fn at_rest(pose: Pose6) -> Self {
        Self { pose, twist: Twist6::zeros() }
    }
}

/// `H diag(v) Hᵀ` with `H = diag(R, R)`.
pub fn rotate_to_world(diag6: &Vector6<f64>, r: &Rotation3<f64>) -> Matrix6<f64> {
    let mut h = Matrix6::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
    h.fixed_view_mut::<3, 3>(3, 3).copy_from(r.matrix());
    h * Matrix6::from_diagonal(diag6) * h.transpose()
}

pub fn critical_damping(k: f64, m: f64) -> f64 {
    2.0 * (k * m).sqrt()
}

/// Exact step of `m ẍ + d ẋ + k x = f` under constant `f`.
///
/// Returns the displacement increment and the new velocity. The `k = 0`
/// branch never reads `x`, which makes free and zero-stiffness coupled steps
/// bitwise identical.
pub fn scalar_step(x: f64, v: f64, m: f64, d: f64, k: f64, f: f64, dt: f64) -> (f64, f64) {
    if k == 0.0 {
        let vinf = f / d;
        let decay = (-d * dt / m).exp();
        let dx = vinf * dt + (v - vinf) * (m / d) * (1.0 - decay);
        return (dx, vinf + (v - vinf) * decay);
    }
    let y = x - f / k;
    let s = -d / (2.0 * m);
    let w2 = k / m;
    let disc = s * s - w2;
    let (c, g) = if disc > 1e-12 * w2 {
        let q = disc.sqrt();
        ((q * dt).cosh(), (q * dt).sinh() / q)
    } else if disc < -1e-12 * w2 {
        let q = (-disc).sqrt();
        ((q * dt).cos(), (q * dt).sin() / q)
    } else {
        (1.0, dt)
    };
    let e = (s * dt).exp();
    let a11 = e * (c - s * g);
    let a12 = e * g;
    let a21 = -e * g * w2;
    let a22 = e * (c + s * g);
    let y_new = a11 * y + a12 * v;
    let v_new = a21 * y + a22 * v;
    (y_new - y, v_new)
}

fn advance(
    s: &AdmittanceState,
    wrench: &Wrench6,
    error: &Vector6<f64>,
    adm: &PrincipalAdmittance,
    dt: f64,
) -> AdmittanceState {
    let r = adm.r_wp.matrix();
    let rt: Matrix3<f64> = r.transpose();
    let e_lin = rt * error.fixed_rows::<3>(0);
    let e_ang = rt * error.fixed_rows::<3>(3);
    let v_lin = rt * s.twist.fixed_rows::<3>(0);
    let v_ang = rt * s.twist.fixed_rows::<3>(3);
    let f_lin = rt * wrench.fixed_rows::<3>(0);
    let f_ang = rt * wrench.fixed_rows::<3>(3);

    let mut dx = Vector3::zeros();
    let mut dw = Vector3::zeros();
    let mut vl = Vector3::zeros();
    let mut va = Vector3::zeros();
    for i in 0..3 {
        let (a, b) = scalar_step(e_lin[i], v_lin[i], adm.m[i], adm.d[i], adm.k[i], f_lin[i], dt);
        dx[i] = a;
        vl[i] = b;
        let (a, b) = scalar_step(e_ang[i], v_ang[i], adm.m[3 + i], adm.d[3 + i], adm.k[3 + i], f_ang[i], dt);
        dw[i] = a;
        va[i] = b;
    }
    let position = s.pose.position + r * dx;
    let rotation = rotation_exp(&(r * dw)) * s.pose.rotation;
    let mut twist = Twist6::zeros();
    twist.fixed_rows_mut::<3>(0).copy_from(&(r * vl));
    twist.fixed_rows_mut::<3>(3).copy_from(&(r * va));
    AdmittanceState { pose: Pose6::new(position, rotation), twist }
}

/// One step of the coupled law with spring anchored at `x_ref`.
pub fn step_coupled(
    s: &AdmittanceState,
    wrench: &Wrench6,
    x_ref: &Pose6,
    adm: &PrincipalAdmittance,
    dt: f64,
) -> AdmittanceState {
    advance(s, wrench, &s.pose.error_from(x_ref), adm, dt)
}

/// One step of the free law; any stiffness in `adm` is ignored.
pub fn step_free(s: &AdmittanceState, wrench: &Wrench6, adm: &PrincipalAdmittance, dt: f64) -> AdmittanceState {
    let free = PrincipalAdmittance { k: Vector6::zeros(), ..*adm };
    advance(s, wrench, &Vector6::zeros(), &free, dt)
}

/// `½ẋᵀMẋ + ½eᵀKe` with `e = x ⊖ x_ref`.
pub fn virtual_energy(s: &AdmittanceState, x_ref: &Pose6, adm: &PrincipalAdmittance) -> f64 {
    let e = s.pose.error_from(x_ref);
    0.5 * s.twist.dot(&(adm.world_mass() * s.twist)) + 0.5 * e.dot(&(adm.world_stiffness() * e))
}
