//! Peak torque, joint energy and the constraint quantities for one geometry.

use serde::{Deserialize, Serialize};

use crate::dynamics::{torque_trace, DynamicsParams, TorqueTrace};
use crate::error::{Error, Result};
use crate::geometry::{segment_properties_with, InertiaModel, LegGeometry, MaterialParams};
use crate::kinematics::{max_reach, KneeConvention, LegChain};
use crate::trajectory::{plan_swing, SwingProfile, Trajectory};

/// How per-sample joint power is accumulated into energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// `Σ |τ·θ̇|·Δt`
    #[default]
    Absolute,
    /// `Σ τ·θ̇·Δt`
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    /// Per-joint peak |τ|, N·m.
    pub peak_torque: [f64; 3],
    /// Per-joint energy, J.
    pub energy: [f64; 3],
    /// Farthest radial foot distance, m.
    pub reach: f64,
    /// Per-segment bending stiffness, N·m².
    pub stiffness: [f64; 3],
}

/// Metrics of the initial geometry; denominators for every ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Baseline(MetricValues);

impl Baseline {
    pub fn freeze(values: MetricValues) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &MetricValues {
        &self.0
    }
}

/// Componentwise `value / baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRatios {
    pub peak_torque: [f64; 3],
    pub energy: [f64; 3],
    pub reach: f64,
    pub stiffness: [f64; 3],
}

impl MetricValues {
    pub fn ratios(&self, base: &Baseline) -> MetricRatios {
        let b = base.values();
        let div = |a: [f64; 3], d: [f64; 3]| std::array::from_fn(|i| a[i] / d[i]);
        MetricRatios {
            peak_torque: div(self.peak_torque, b.peak_torque),
            energy: div(self.energy, b.energy),
            reach: self.reach / b.reach,
            stiffness: div(self.stiffness, b.stiffness),
        }
    }
}

pub fn peak_torque(trace: &TorqueTrace) -> Result<[f64; 3]> {
    if trace.torque.is_empty() {
        return Err(Error::EmptyInput("torque trace"));
    }
    Ok(trace.torque.iter().fold([0.0; 3], |acc, t| {
        std::array::from_fn(|i| acc[i].max(t[i].abs()))
    }))
}

/// `Qᵢ = Σⱼ Pᵢʲ·(tⱼ − tⱼ₋₁)` over samples `j ≥ 1`.
pub fn joint_energy(trace: &TorqueTrace, traj: &Trajectory, mode: EnergyMode) -> Result<[f64; 3]> {
    trace.check_aligned(traj)?;
    let mut q = [0.0; 3];
    for (w, pw) in trace.times.windows(2).zip(&trace.power[1..]) {
        let dt = w[1] - w[0];
        for i in 0..3 {
            q[i] += match mode {
                EnergyMode::Absolute => pw[i].abs(),
                EnergyMode::Signed => pw[i],
            } * dt;
        }
    }
    Ok(q)
}

/// Everything held fixed while the geometry varies.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSetup {
    pub trajectory: Trajectory,
    pub material: MaterialParams,
    pub knee: KneeConvention,
    pub inertia: InertiaModel,
    pub energy_mode: EnergyMode,
}

impl EvaluationSetup {
    pub fn new(profile: &SwingProfile, material: MaterialParams) -> Result<Self> {
        material.validate()?;
        Ok(Self {
            trajectory: plan_swing(profile)?,
            material,
            knee: KneeConvention::default(),
            inertia: InertiaModel::default(),
            energy_mode: EnergyMode::default(),
        })
    }

    pub fn dynamics(&self, geom: &LegGeometry) -> Result<DynamicsParams> {
        DynamicsParams::from_geometry_with(geom, &self.material, self.knee, self.inertia)
    }

    pub fn chain(&self, geom: &LegGeometry) -> LegChain {
        LegChain::new(geom, self.material.base_height, self.knee)
    }
}

/// Geometry → properties → torques → metrics, plus reach and stiffness.
pub fn evaluate(geom: &LegGeometry, setup: &EvaluationSetup) -> Result<MetricValues> {
    geom.validate()?;
    evaluate_with_trace(geom, setup).map(|(m, _)| m)
}

pub fn evaluate_with_trace(
    geom: &LegGeometry,
    setup: &EvaluationSetup,
) -> Result<(MetricValues, TorqueTrace)> {
    let params = setup.dynamics(geom)?;
    let trace = torque_trace(&params, &setup.trajectory)?;
    let peak_torque = peak_torque(&trace)?;
    let energy = joint_energy(&trace, &setup.trajectory, setup.energy_mode)?;
    let reach = max_reach(&setup.chain(geom), &setup.trajectory)?;
    let mut stiffness = [0.0; 3];
    for (s, d) in stiffness.iter_mut().zip(geom.segments()) {
        *s = segment_properties_with(d, &setup.material, setup.inertia)?.bending_stiffness;
    }
    Ok((
        MetricValues {
            peak_torque,
            energy,
            reach,
            stiffness,
        },
        trace,
    ))
}
