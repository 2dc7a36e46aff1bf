//! Simulation of a mobile manipulator that assists a standing person who is
//! losing balance, comparing three interaction strategies.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admittance;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod hqp;
pub mod human;
pub mod plot;
pub mod robot_model;
pub mod strategies;
