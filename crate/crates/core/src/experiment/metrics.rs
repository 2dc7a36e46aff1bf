//! Performance indexes computed from a trial log.

use serde::{Deserialize, Serialize};

use super::log::TrialLog;
use crate::human::Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// First exit episode: `(t_out, t_in)` with `t_in` absent if the CoP never returns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Episode {
    pub t_out: f64,
    pub t_in: Option<f64>,
    /// Index of the first sample outside and one past the last sample outside.
    pub start: usize,
    pub end: usize,
}

pub fn first_episode(log: &TrialLog) -> Option<Episode> {
    let rows = &log.rows;
    let start = rows.iter().position(|r| r.dz_distance() > 0.0)?;
    let back = rows[start..].iter().position(|r| r.dz_distance() == 0.0).map(|i| start + i);
    if let Some(b) = back {
        if rows[b..].iter().any(|r| r.dz_distance() > 0.0) {
            log::warn!("CoP left the DZ more than once; indexes use the first episode");
        }
    }
    Some(Episode { t_out: rows[start].t, t_in: back.map(|b| rows[b].t), start, end: back.unwrap_or(rows.len()) })
}

pub fn failure_time(log: &TrialLog) -> Option<f64> {
    log.rows.iter().find(|r| r.phase == Phase::Stepped).map(|r| r.t)
}

/// `t_in − t_out`; undefined without a complete episode or after a failure.
pub fn metric_time_outside(log: &TrialLog) -> Option<f64> {
    if failure_time(log).is_some() {
        return None;
    }
    let ep = first_episode(log)?;
    ep.t_in.map(|t_in| t_in - ep.t_out)
}

/// Largest DZ distance over the first episode, metres.
pub fn metric_max_distance(log: &TrialLog) -> Option<f64> {
    if failure_time(log).is_some() {
        return None;
    }
    let ep = first_episode(log)?;
    log.rows[ep.start..ep.end].iter().map(|r| r.dz_distance()).reduce(f64::max)
}

/// Sample range `[t_out, t_in]`, or `[t_out, t_fail]` for a failed trial.
fn force_window(log: &TrialLog) -> Option<(usize, usize)> {
    let ep = first_episode(log)?;
    let end_t = match failure_time(log) {
        Some(tf) => tf,
        None => ep.t_in.unwrap_or(f64::INFINITY),
    };
    let end = log.rows.iter().rposition(|r| r.t <= end_t)?;
    (end >= ep.start).then_some((ep.start, end + 1))
}

/// Peak force along `axis` over the exit window, percent of `w_h` (N).
pub fn metric_max_force(log: &TrialLog, w_h: f64, axis: Axis) -> f64 {
    let k = match axis {
        Axis::X => 0,
        Axis::Z => 2,
    };
    force_window(log).map(|(a, b)| log.rows[a..b].iter().map(|r| r.f[k].abs()).fold(0.0, f64::max)).unwrap_or(0.0) / w_h
        * 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// s
    pub dt_out: Option<f64>,
    /// m
    pub d_max: Option<f64>,
    /// percent of body weight
    pub f_max_x: f64,
    pub f_max_z: f64,
    pub failed: bool,
    pub t_out: Option<f64>,
    pub t_in: Option<f64>,
    pub t_fail: Option<f64>,
}

pub fn compute_result(log: &TrialLog, w_h: f64) -> TrialResult {
    let ep = first_episode(log);
    let t_fail = failure_time(log);
    TrialResult {
        dt_out: metric_time_outside(log),
        d_max: metric_max_distance(log),
        f_max_x: metric_max_force(log, w_h, Axis::X),
        f_max_z: metric_max_force(log, w_h, Axis::Z),
        failed: t_fail.is_some(),
        t_out: ep.map(|e| e.t_out),
        t_in: ep.and_then(|e| e.t_in),
        t_fail,
    }
}
