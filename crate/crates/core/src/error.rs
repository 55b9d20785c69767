use thiserror::Error;

/// Errors produced by the leg model, planner, optimizer and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid segment dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("wall thickness calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("segment duration must be positive and finite, got {0}")]
    InvalidDuration(f64),

    #[error("time {t} outside segment range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("inertia matrix is not positive definite at t = {time} s (min pivot {min_pivot:e})")]
    SingularInertia { time: f64, min_pivot: f64 },

    #[error("integration unstable at t = {time} s: joint rate reached {rate:e} rad/s")]
    Unstable { time: f64, rate: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
