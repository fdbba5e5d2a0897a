use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluation at z = {z} is at or near a pole (|den| = {den_abs:e})")]
    PoleAtPoint { z: Complex64, den_abs: f64 },
    #[error("pole on the set near z = {z}")]
    PoleOnSet { z: Complex64 },
    #[error("coefficient {index} requested beyond truncation order {order}")]
    TruncationExceeded { index: usize, order: usize },
    #[error("series is not in D_({p},{q}): log|det| = {log_abs_det:.3}, log threshold = {log_threshold:.3}")]
    NotInDpq {
        p: usize,
        q: usize,
        log_abs_det: f64,
        log_threshold: f64,
    },
    #[error("denominator degree {q} exceeds the oracle cap {cap}")]
    OrderTooLarge { q: usize, cap: usize },
    #[error("shape has no primitives or produced an empty grid")]
    EmptyShape,
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    #[error("parameter search exhausted after {halvings} halvings")]
    SearchExhausted { halvings: usize },
    #[error("sampled determinants do not determine a degree-{q} polynomial (relative leading coefficient {relative_leading:e})")]
    DegenerateInterpolation { q: usize, relative_leading: f64 },
    #[error("no admissible d away from the Hankel roots")]
    NoSafeD,
    #[error("no polynomial of degree <= {cap} met the bounds (best errors {best_d:e} on D, {best_k:e} on K)")]
    DegreeCapExceeded { cap: usize, best_d: f64, best_k: f64 },
    #[error("schedule incompatible: {0}")]
    ScheduleIncompatible(String),
    #[error("task {task} infeasible: {reason}")]
    TaskInfeasible { task: usize, reason: String },
    #[error("corrupt transcript: {0}")]
    CorruptTranscript(String),
}

pub type Result<T> = std::result::Result<T, Error>;
