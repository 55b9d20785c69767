//! Forward re-integration under prescribed torques, and joint driving power.
//!
//! The mass matrix and bias forces are recovered from [`inverse_dynamics`]
//! itself by unit-acceleration probing, so the forward model exercises exactly
//! the same equations that produced the torques.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    inverse_dynamics, kinetic_energy, potential_energy, DynamicsParams, TorqueTrace,
};
use crate::error::{Error, Result};
use crate::trajectory::{JointState, SwingPlan};

/// Rates beyond this are treated as a blown-up integration.
pub const RATE_LIMIT: f64 = 1e3;

/// Per-joint power `Pᵢ = τᵢ·θ̇ᵢ` on the trace's time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurves {
    pub times: Vec<f64>,
    pub power: Vec<[f64; 3]>,
    /// Per-joint max |Pᵢ|, W.
    pub peak: [f64; 3],
}

impl PowerCurves {
    /// Columns: time, P1, P2, P3.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,P1,P2,P3")?;
        for (t, p) in self.times.iter().zip(&self.power) {
            writeln!(out, "{},{},{},{}", t, p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

fn peak_abs(rows: &[[f64; 3]]) -> [f64; 3] {
    rows.iter().fold([0.0; 3], |acc, r| {
        std::array::from_fn(|i| acc[i].max(r[i].abs()))
    })
}

pub fn power_curves(trace: &TorqueTrace) -> PowerCurves {
    PowerCurves {
        times: trace.times.clone(),
        power: trace.power.clone(),
        peak: peak_abs(&trace.power),
    }
}

/// Peak power before and after, with the per-joint relative reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub before: [f64; 3],
    pub after: [f64; 3],
    /// `100·(before − after)/before`, %.
    pub reduction_percent: [f64; 3],
}

pub fn compare_power(before: &PowerCurves, after: &PowerCurves) -> PowerComparison {
    PowerComparison {
        before: before.peak,
        after: after.peak,
        reduction_percent: std::array::from_fn(|i| {
            100.0 * (before.peak[i] - after.peak[i]) / before.peak[i]
        }),
    }
}

/// Joint torques as a function of time.
pub trait TorqueProfile {
    fn torque(&self, t: f64) -> [f64; 3];
}

impl<F: Fn(f64) -> [f64; 3]> TorqueProfile for F {
    fn torque(&self, t: f64) -> [f64; 3] {
        self(t)
    }
}

/// Piecewise-linear interpolation of a torque trace, held constant outside
/// its time range.
#[derive(Debug, Clone)]
pub struct SampledTorques<'a> {
    trace: &'a TorqueTrace,
}

impl<'a> SampledTorques<'a> {
    pub fn new(trace: &'a TorqueTrace) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::EmptyInput("torque trace"));
        }
        Ok(Self { trace })
    }
}

impl TorqueProfile for SampledTorques<'_> {
    fn torque(&self, t: f64) -> [f64; 3] {
        let (ts, tau) = (&self.trace.times, &self.trace.torque);
        let k = ts.partition_point(|&x| x <= t);
        if k == 0 {
            return tau[0];
        }
        if k == ts.len() {
            return tau[k - 1];
        }
        let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        std::array::from_fn(|i| tau[k - 1][i] + w * (tau[k][i] - tau[k - 1][i]))
    }
}

/// Torques the planned motion requires, evaluated exactly at any time.
#[derive(Debug, Clone)]
pub struct PlannedTorques<'a> {
    pub params: &'a DynamicsParams,
    pub plan: &'a SwingPlan,
}

impl TorqueProfile for PlannedTorques<'_> {
    fn torque(&self, t: f64) -> [f64; 3] {
        let t = t.clamp(0.0, self.plan.total_time());
        let s = self.plan.state_at(t).expect("time clamped into plan range");
        inverse_dynamics(self.params, &s).0
    }
}

/// Joint-space mass matrix at `angles`, probed column by column.
pub fn inertia_matrix(p: &DynamicsParams, angles: [f64; 3]) -> Matrix3<f64> {
    let free = p.without_gravity();
    let rest = JointState::at_rest(angles);
    let bias = inverse_dynamics(&free, &rest).0;
    let mut m = Matrix3::zeros();
    for k in 0..3 {
        let mut s = rest;
        s.accel[k] = 1.0;
        let col = inverse_dynamics(&free, &s).0;
        for i in 0..3 {
            m[(i, k)] = col[i] - bias[i];
        }
    }
    m
}

/// Coriolis, centrifugal and gravity torques: inverse dynamics at zero
/// acceleration.
pub fn bias_torques(p: &DynamicsParams, angles: [f64; 3], rates: [f64; 3]) -> [f64; 3] {
    inverse_dynamics(
        p,
        &JointState {
            angle: angles,
            rate: rates,
            accel: [0.0; 3],
        },
    )
    .0
}

/// `θ̈ = M⁻¹(τ − h)`; fails when `M` is not positive definite.
pub fn forward_accel(
    p: &DynamicsParams,
    angles: [f64; 3],
    rates: [f64; 3],
    torque: [f64; 3],
    time: f64,
) -> Result<[f64; 3]> {
    let m = inertia_matrix(p, angles);
    let h = bias_torques(p, angles, rates);
    let rhs = Vector3::from_fn(|i, _| torque[i] - h[i]);
    let scale = m.diagonal().amax();
    let singular = || {
        let min_pivot = m.symmetric_eigenvalues().min();
        Error::SingularInertia { time, min_pivot }
    };
    if scale.is_nan() || scale <= 0.0 {
        return Err(singular());
    }
    let chol = m.cholesky().ok_or_else(singular)?;
    let l = chol.l_dirty();
    let min_diag = (0..3)
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if min_diag <= 1e-12 * scale {
        return Err(singular());
    }
    let a = chol.solve(&rhs);
    Ok([a[0], a[1], a[2]])
}

/// Integrated motion with its driving torques and power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub times: Vec<f64>,
    /// Angle, rate and the acceleration the dynamics produce at each step.
    pub states: Vec<JointState>,
    pub torque: Vec<[f64; 3]>,
    pub power: Vec<[f64; 3]>,
    pub peak_power: [f64; 3],
    /// Max |θ_sim − θ_ref| over the grid, when a reference was supplied.
    pub tracking_error: Option<f64>,
}

impl SimResult {
    pub fn power_curves(&self) -> PowerCurves {
        PowerCurves {
            times: self.times.clone(),
            power: self.power.clone(),
            peak: self.peak_power,
        }
    }

    /// Total mechanical energy at every step.
    pub fn energy(&self, p: &DynamicsParams) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| kinetic_energy(p, s) + potential_energy(p, &s.angle))
            .collect()
    }
}

fn check_step(dt: f64, duration: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidDuration(duration));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 * duration.max(dt) {
        return Err(Error::InvalidConfig(format!(
            "duration {duration} is not a whole number of {dt} s steps"
        )));
    }
    Ok(n as usize)
}

/// Classical RK4 on `(θ, θ̇)` with fixed step `dt` over `[0, duration]`.
pub fn forward_simulate<P: TorqueProfile + ?Sized>(
    p: &DynamicsParams,
    profile: &P,
    s0: &JointState,
    dt: f64,
    duration: f64,
) -> Result<SimResult> {
    let n = check_step(dt, duration)?;
    let h = if n == 0 { 0.0 } else { duration / n as f64 };
    let mut q = s0.angle;
    let mut v = s0.rate;

    let mut out = SimResult {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        torque: Vec::with_capacity(n + 1),
        power: Vec::with_capacity(n + 1),
        peak_power: [0.0; 3],
        tracking_error: None,
    };
    let add =
        |a: [f64; 3], b: [f64; 3], k: f64| -> [f64; 3] { std::array::from_fn(|i| a[i] + k * b[i]) };

    for step in 0..=n {
        let t = step as f64 * h;
        let tau = profile.torque(t);
        let a = forward_accel(p, q, v, tau, t)?;
        out.times.push(t);
        out.states.push(JointState {
            angle: q,
            rate: v,
            accel: a,
        });
        out.torque.push(tau);
        out.power.push(std::array::from_fn(|i| tau[i] * v[i]));
        if step == n {
            break;
        }

        let (k1q, k1v) = (v, a);
        let (q2, v2) = (add(q, k1q, h / 2.0), add(v, k1v, h / 2.0));
        let k2v = forward_accel(p, q2, v2, profile.torque(t + h / 2.0), t + h / 2.0)?;
        let (q3, v3) = (add(q, v2, h / 2.0), add(v, k2v, h / 2.0));
        let k3v = forward_accel(p, q3, v3, profile.torque(t + h / 2.0), t + h / 2.0)?;
        let (q4, v4) = (add(q, v3, h), add(v, k3v, h));
        let k4v = forward_accel(p, q4, v4, profile.torque(t + h), t + h)?;

        q = std::array::from_fn(|i| q[i] + h / 6.0 * (k1q[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]));
        v = std::array::from_fn(|i| {
            v[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])
        });

        if let Some(rate) = v
            .iter()
            .map(|x| x.abs())
            .find(|x| x.is_nan() || *x > RATE_LIMIT)
        {
            return Err(Error::Unstable { time: t + h, rate });
        }
    }
    out.peak_power = peak_abs(&out.power);
    Ok(out)
}

/// Drives the leg with the torques the plan requires, starting from the plan's
/// initial state, and records how far the result strays from the plan.
pub fn round_trip(p: &DynamicsParams, plan: &SwingPlan, dt: f64) -> Result<SimResult> {
    let profile = PlannedTorques { params: p, plan };
    let s0 = plan.state_at(0.0)?;
    let mut sim = forward_simulate(p, &profile, &s0, dt, plan.total_time())?;
    let mut err: f64 = 0.0;
    for (t, s) in sim.times.iter().zip(&sim.states) {
        let r = plan.state_at(t.min(plan.total_time()))?;
        for i in 0..3 {
            err = err.max((s.angle[i] - r.angle[i]).abs());
        }
    }
    sim.tracking_error = Some(err);
    Ok(sim)
}

/// Max |E(t) − E(0)| for the unactuated leg released from `s0`.
pub fn passive_energy_drift(
    p: &DynamicsParams,
    s0: &JointState,
    dt: f64,
    duration: f64,
) -> Result<f64> {
    let sim = forward_simulate(p, &|_: f64| [0.0; 3], s0, dt, duration)?;
    let e = sim.energy(p);
    Ok(e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max))
}
