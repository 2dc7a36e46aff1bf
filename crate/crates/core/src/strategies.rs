//! Balance state machine and the assistance references it drives.

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3, Vector6};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::admittance::critical_damping;
use crate::human::{Rect, SupportRegion};
use crate::robot_model::Pose6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Fsa,
    Mba,
    Hwa,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Hwa, Strategy::Fsa, Strategy::Mba];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fsa => "fsa",
            Strategy::Mba => "mba",
            Strategy::Hwa => "hwa",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fsa" => Ok(Strategy::Fsa),
            "mba" => Ok(Strategy::Mba),
            "hwa" => Ok(Strategy::Hwa),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceState {
    Stable,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Free,
    Coupled,
}

/// A DZ face: a point on it and its outward unit normal in the ground plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorLine {
    pub point: Vector2<f64>,
    pub normal: Vector2<f64>,
}

impl MirrorLine {
    /// Signed distance, positive on the outward side.
    pub fn signed_distance(&self, p: &Vector2<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn reflect(&self, p: &Vector2<f64>) -> Vector2<f64> {
        p - 2.0 * self.signed_distance(p) * self.normal
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyParams {
    /// N/m
    pub k_p1: f64,
    /// Stable-state masses (kg, kg·m²).
    pub mass: Vector6<f64>,
    /// Stable-state damping (N·s/m, N·m·s).
    pub damping: Vector6<f64>,
    /// s; zero disables the stiffness ramp.
    pub stiffness_ramp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceCommand {
    pub x_ref: Pose6,
    pub r_wp: Rotation3<f64>,
    pub k_p: Vector6<f64>,
    pub d_p: Vector6<f64>,
    pub mode: Mode,
}

impl ReferenceCommand {
    pub fn free(x: &Pose6, params: &StrategyParams) -> Self {
        Self { x_ref: *x, r_wp: Rotation3::identity(), k_p: Vector6::zeros(), d_p: params.damping, mode: Mode::Free }
    }

    pub fn p1(&self) -> Vector3<f64> {
        self.r_wp.matrix().column(0).into_owned()
    }

    /// Translational spring force on the handle at commanded position `x`.
    pub fn spring_force(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let p1 = self.p1();
        self.k_p[0] * p1.dot(&(self.x_ref.position - x)) * p1
    }
}

/// Principal frame `[p1 p2 p3]` with `p2` taken from `hint` made orthogonal to `p1`.
pub fn principal_frame(p1: &Vector3<f64>, hint: &Vector3<f64>) -> Rotation3<f64> {
    let p1 = p1.normalize();
    let mut p2 = hint - p1 * p1.dot(hint);
    if p2.norm() < 1e-6 {
        let alt = if p1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        p2 = alt - p1 * p1.dot(&alt);
    }
    let p2 = p2.normalize();
    let p3 = p1.cross(&p2);
    Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[p1, p2, p3]))
}

fn coupled(x_ref: Pose6, p1: &Vector3<f64>, hint: &Vector3<f64>, k: f64, params: &StrategyParams) -> ReferenceCommand {
    let mut k_p = Vector6::zeros();
    k_p[0] = k;
    let mut d_p = params.damping;
    if k > 0.0 {
        d_p[0] = critical_damping(k, params.mass[0]);
    }
    ReferenceCommand { x_ref, r_wp: principal_frame(p1, hint), k_p, d_p, mode: Mode::Coupled }
}

/// Selects the face crossed when the CoP leaves `dz`.
///
/// Among the faces the CoP lies beyond, the one whose normal best matches
/// the CoP velocity wins; front/back faces win ties.
pub fn crossed_face(dz: &Rect, cop: &Vector2<f64>, cop_vel: &Vector2<f64>) -> MirrorLine {
    let faces = [
        MirrorLine { point: Vector2::new(dz.x_max, 0.0), normal: Vector2::new(1.0, 0.0) },
        MirrorLine { point: Vector2::new(dz.x_min, 0.0), normal: Vector2::new(-1.0, 0.0) },
        MirrorLine { point: Vector2::new(0.0, dz.y_max), normal: Vector2::new(0.0, 1.0) },
        MirrorLine { point: Vector2::new(0.0, dz.y_min), normal: Vector2::new(0.0, -1.0) },
    ];
    let outside: Vec<&MirrorLine> = faces.iter().filter(|f| f.signed_distance(cop) >= 0.0).collect();
    let candidates: Vec<&MirrorLine> = if outside.is_empty() { faces.iter().collect() } else { outside };
    let mut best = *candidates[0];
    let mut best_score = f64::NEG_INFINITY;
    for f in candidates {
        let score = if cop_vel.norm() > 0.0 { f.normal.dot(cop_vel) } else { f.signed_distance(cop) };
        if score > best_score + 1e-12 {
            best = *f;
            best_score = score;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct BalanceStateMachine {
    pub strategy: Strategy,
    pub state: BalanceState,
    pub x_star: Option<Pose6>,
    pub mirror: Option<MirrorLine>,
    pub t_latch: Option<f64>,
    p2_hint: Vector3<f64>,
    rng: ChaCha8Rng,
}

impl BalanceStateMachine {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p2_hint = random_unit(&mut rng);
        Self { strategy, state: BalanceState::Stable, x_star: None, mirror: None, t_latch: None, p2_hint, rng }
    }

    pub fn p2_hint(&self) -> Vector3<f64> {
        self.p2_hint
    }

    /// Advances the machine; latches `x*` and the mirror line on leaving the DZ.
    pub fn update_state(
        &mut self,
        cop: &Vector2<f64>,
        cop_vel: &Vector2<f64>,
        region: &SupportRegion,
        ee: &Pose6,
        t: f64,
    ) {
        let inside = region.dz.contains(cop);
        match (self.state, inside) {
            (BalanceState::Stable, false) => {
                self.state = BalanceState::Unstable;
                self.x_star = Some(*ee);
                self.mirror = Some(crossed_face(&region.dz, cop, cop_vel));
                self.t_latch = Some(t);
                self.p2_hint = random_unit(&mut self.rng);
            }
            (BalanceState::Unstable, true) => {
                self.state = BalanceState::Stable;
                self.x_star = None;
                self.mirror = None;
                self.t_latch = None;
            }
            _ => {}
        }
    }

    fn stiffness(&self, params: &StrategyParams, t: f64) -> f64 {
        match (params.stiffness_ramp > 0.0, self.t_latch) {
            (true, Some(t0)) => params.k_p1 * ((t - t0) / params.stiffness_ramp).clamp(0.0, 1.0),
            _ => params.k_p1,
        }
    }

    /// Reference for the configured strategy. `x` is the commanded handle pose.
    pub fn reference(
        &self,
        cop: &Vector2<f64>,
        x: &Pose6,
        z_threshold: f64,
        params: &StrategyParams,
        t: f64,
    ) -> ReferenceCommand {
        match self.strategy {
            Strategy::Hwa => hwa_reference(x, z_threshold, &self.p2_hint, params),
            _ if self.state == BalanceState::Stable => ReferenceCommand::free(x, params),
            Strategy::Fsa => fsa_reference(self, &x.position, params, self.stiffness(params, t)),
            Strategy::Mba => mba_reference(self, cop, x, params, self.stiffness(params, t)),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        if let Some(u) = crate::robot_model::normalized(&v, 1e-9) {
            return u;
        }
    }
}

fn outward_normal3(sm: &BalanceStateMachine) -> Vector3<f64> {
    let n = sm.mirror.map_or(Vector2::new(1.0, 0.0), |m| m.normal);
    Vector3::new(n.x, n.y, 0.0)
}

/// Spring anchored at the pose latched on leaving the DZ.
pub fn fsa_reference(sm: &BalanceStateMachine, r: &Vector3<f64>, params: &StrategyParams, k: f64) -> ReferenceCommand {
    let x_star = sm.x_star.expect("FSA reference requires a latched pose");
    let p1 = crate::robot_model::normalized(&(r - x_star.position), 1e-4).unwrap_or_else(|| outward_normal3(sm));
    coupled(x_star, &p1, &sm.p2_hint, k, params)
}

/// Reference pushed back across the mirrored border by twice the CoP overshoot.
pub fn mba_reference(
    sm: &BalanceStateMachine,
    cop: &Vector2<f64>,
    x: &Pose6,
    params: &StrategyParams,
    k: f64,
) -> ReferenceCommand {
    let line = sm.mirror.expect("MBA reference requires a latched mirror line");
    let delta = line.signed_distance(cop).abs();
    let inward = -line.normal;
    let p1 = Vector3::new(inward.x, inward.y, 0.0);
    let offset = if delta < 1e-6 { 0.0 } else { 2.0 * delta };
    let x_ref = Pose6::new(x.position + offset * p1, x.rotation);
    coupled(x_ref, &p1, &sm.p2_hint, k, params)
}

/// Virtual floor under the handle at `z_threshold`.
pub fn hwa_reference(x: &Pose6, z_threshold: f64, p2_hint: &Vector3<f64>, params: &StrategyParams) -> ReferenceCommand {
    if x.position.z >= z_threshold {
        return ReferenceCommand::free(x, params);
    }
    let x_ref = Pose6::new(Vector3::new(x.position.x, x.position.y, z_threshold), x.rotation);
    coupled(x_ref, &Vector3::z(), p2_hint, params.k_p1, params)
}
