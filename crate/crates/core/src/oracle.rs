//! Numerical cross-checks of the closed-form dynamics.
//!
//! Everything here goes through [`kinetic_energy`] and [`potential_energy`]
//! only; nothing reuses the inverse-dynamics terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    inverse_dynamics, kinetic_energy, potential_energy, DynamicsParams, JointTorques, TorqueTrace,
};
use crate::error::{Error, Result};
use crate::trajectory::{JointState, Trajectory};

/// Torque magnitude below which deviations are judged in absolute terms, N·m.
pub const TORQUE_FLOOR: f64 = 1e-2;

/// Step sizes for the central differences.
///
/// `rate_step` perturbs joint rates; the kinetic energy is quadratic in the
/// rates, so this difference has no truncation error and a large step keeps
/// the nested `d/dt` difference clear of cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// rad
    pub angle_step: f64,
    /// rad/s
    pub rate_step: f64,
    /// s
    pub time_step: f64,
    /// Relative deviation accepted against the closed form.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            angle_step: 1e-6,
            rate_step: 1e-2,
            time_step: 1e-5,
            tolerance: 1e-6,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.angle_step,
            self.rate_step,
            self.time_step,
            self.tolerance,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "oracle steps and tolerance must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdTorques {
    pub torques: JointTorques,
    /// Estimated cancellation error of the differences, N·m.
    pub roundoff_floor: f64,
    /// Set when `roundoff_floor` alone could exceed the configured tolerance.
    pub low_confidence: bool,
}

fn unit(i: usize, h: f64) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[i] = h;
    v
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn axpy(a: f64, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

/// State advanced along its own rate and acceleration by `dt`.
fn advance(s: &JointState, dt: f64) -> JointState {
    JointState {
        angle: add(
            axpy(dt, s.rate, s.angle),
            s.accel.map(|a| 0.5 * a * dt * dt),
        ),
        rate: axpy(dt, s.accel, s.rate),
        accel: s.accel,
    }
}

fn ek(p: &DynamicsParams, angle: [f64; 3], rate: [f64; 3]) -> f64 {
    kinetic_energy(
        p,
        &JointState {
            angle,
            rate,
            accel: [0.0; 3],
        },
    )
}

/// `τ = d/dt ∂E_k/∂θ̇ − ∂E_k/∂θ + ∂E_p/∂θ` by central differences.
pub fn fd_torques(p: &DynamicsParams, s: &JointState, cfg: &OracleConfig) -> FdTorques {
    let (hq, hv, ht) = (cfg.angle_step, cfg.rate_step, cfg.time_step);
    let momentum = |st: &JointState, i: usize| {
        let e = unit(i, hv);
        (ek(p, st.angle, add(st.rate, e)) - ek(p, st.angle, axpy(-1.0, e, st.rate))) / (2.0 * hv)
    };
    let fwd = advance(s, ht);
    let back = advance(s, -ht);

    let mut tau = [0.0; 3];
    for (i, t) in tau.iter_mut().enumerate() {
        let dmomentum = (momentum(&fwd, i) - momentum(&back, i)) / (2.0 * ht);
        let e = unit(i, hq);
        let (qp, qm) = (add(s.angle, e), axpy(-1.0, e, s.angle));
        let dek = (ek(p, qp, s.rate) - ek(p, qm, s.rate)) / (2.0 * hq);
        let dep = (potential_energy(p, &qp) - potential_energy(p, &qm)) / (2.0 * hq);
        *t = dmomentum - dek + dep;
    }

    let scale = ek(p, s.angle, s.rate).abs()
        + ek(p, fwd.angle, fwd.rate).abs()
        + potential_energy(p, &s.angle).abs();
    let eps = f64::EPSILON;
    let roundoff_floor = eps * scale * (1.0 / (hv * ht) + 2.0 / hq);
    let magnitude = tau
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(TORQUE_FLOOR);
    FdTorques {
        torques: JointTorques(tau),
        roundoff_floor,
        low_confidence: roundoff_floor > cfg.tolerance * magnitude,
    }
}

/// Largest componentwise deviation, relative to the reference torque's
/// largest component (floored at [`TORQUE_FLOOR`]).
pub fn relative_deviation(candidate: &JointTorques, reference: &JointTorques) -> f64 {
    let scale = reference
        .0
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(TORQUE_FLOOR);
    (0..3)
        .map(|i| (candidate[i] - reference[i]).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Ranges for randomly drawn states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRanges {
    pub angle: f64,
    pub rate: f64,
    pub accel: f64,
}

impl Default for StateRanges {
    fn default() -> Self {
        Self {
            angle: std::f64::consts::PI,
            rate: 10.0,
            accel: 50.0,
        }
    }
}

pub fn random_states(count: usize, seed: u64, ranges: StateRanges) -> Vec<JointState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: f64| -> [f64; 3] { std::array::from_fn(|_| rng.gen_range(-r..=r)) };
    (0..count)
        .map(|_| JointState {
            angle: draw(ranges.angle),
            rate: draw(ranges.rate),
            accel: draw(ranges.accel),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub states: usize,
    pub max_relative: f64,
    pub worst_state: Option<JointState>,
    pub low_confidence: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares closed-form and finite-difference torques on seeded random states.
pub fn sweep(p: &DynamicsParams, cfg: &OracleConfig, count: usize, seed: u64) -> SweepReport {
    let mut report = SweepReport {
        states: count,
        max_relative: 0.0,
        worst_state: None,
        low_confidence: 0,
        tolerance: cfg.tolerance,
        passed: true,
    };
    for s in random_states(count, seed, StateRanges::default()) {
        let fd = fd_torques(p, &s, cfg);
        let dev = relative_deviation(&fd.torques, &inverse_dynamics(p, &s));
        if fd.low_confidence {
            report.low_confidence += 1;
        }
        if dev > report.max_relative || report.worst_state.is_none() {
            report.max_relative = dev;
            report.worst_state = Some(s);
        }
    }
    report.passed = report.max_relative < cfg.tolerance && report.low_confidence == 0;
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBalanceReport {
    /// `|Σᵢ τᵢθ̇ᵢ − d(E_k + E_p)/dt|` per sample, W.
    pub residuals: Vec<f64>,
    pub max: f64,
    pub rms: f64,
}

impl PowerBalanceReport {
    fn from_residuals(residuals: Vec<f64>) -> Self {
        let max = residuals.iter().copied().fold(0.0, f64::max);
        let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
        Self {
            residuals,
            max,
            rms,
        }
    }
}

fn total_energy(p: &DynamicsParams, s: &JointState) -> f64 {
    kinetic_energy(p, s) + potential_energy(p, &s.angle)
}

/// Power balance with `dE/dt` taken by second-order differences across the
/// trajectory samples themselves (three-point stencils, one-sided at the
/// ends), so the residual shrinks with the square of the sample spacing.
pub fn check_power_balance(
    trace: &TorqueTrace,
    traj: &Trajectory,
    p: &DynamicsParams,
) -> Result<PowerBalanceReport> {
    trace.check_aligned(traj)?;
    let n = traj.len();
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "power balance needs at least 3 samples, got {n}"
        )));
    }
    let t: Vec<f64> = traj.times().collect();
    let e: Vec<f64> = traj
        .samples()
        .iter()
        .map(|s| total_energy(p, &s.state))
        .collect();
    let derivative = |k: usize| -> f64 {
        // Stencil over (k0, k0+1, k0+2), evaluated at index k.
        let k0 = k.saturating_sub(1).min(n - 3);
        let (t0, t1, t2) = (t[k0], t[k0 + 1], t[k0 + 2]);
        let x = t[k];
        // Derivative of the Lagrange interpolant through the three points.
        let w0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
        let w1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
        let w2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
        w0 * e[k0] + w1 * e[k0 + 1] + w2 * e[k0 + 2]
    };
    let residuals = (0..n)
        .map(|k| (trace.power[k].iter().sum::<f64>() - derivative(k)).abs())
        .collect();
    Ok(PowerBalanceReport::from_residuals(residuals))
}

/// Power balance with `dE/dt` taken at each sample by a central difference
/// of `cfg.time_step` along the sample's own rate and acceleration.
pub fn check_power_balance_local(
    trace: &TorqueTrace,
    traj: &Trajectory,
    p: &DynamicsParams,
    cfg: &OracleConfig,
) -> Result<PowerBalanceReport> {
    trace.check_aligned(traj)?;
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory"));
    }
    let h = cfg.time_step;
    let residuals = traj
        .samples()
        .iter()
        .zip(&trace.power)
        .map(|(s, pw)| {
            let de = (total_energy(p, &advance(&s.state, h))
                - total_energy(p, &advance(&s.state, -h)))
                / (2.0 * h);
            (pw.iter().sum::<f64>() - de).abs()
        })
        .collect();
    Ok(PowerBalanceReport::from_residuals(residuals))
}
