//! Closed-form Lagrangian dynamics of the three-segment leg.
//!
//! Segments are uniform rods with their center of mass at mid-length. The
//! coxa turns about the vertical root axis; femur and tibia swing in the
//! vertical plane that the root joint rotates. In model coordinates `q`
//! (see [`KneeConvention`]) with tibia pitch `φ = q₃ − q₂`:
//!
//! ```text
//! E_k = ½(m₁a₁² + I₁)q̇₁²
//!     + ½m₂[(l₁ + a₂cos q₂)² q̇₁² + a₂² q̇₂²] + ½I₂q̇₂²
//!     + ½m₃[(l₁ + l₂cos q₂ + a₃cos φ)² q̇₁² + 2l₂a₃ q̇₂(q̇₂ − q̇₃)cos q₃
//!           + l₂² q̇₂² + a₃²(q̇₂ − q̇₃)²] + ½I₃q̇₃²
//! E_p = m₁g·h + m₂g(h + a₂ sin q₂) + m₃g(h + l₂ sin q₂ − a₃ sin φ)
//! ```
//!
//! Torques follow `τ = d/dt ∂E_k/∂q̇ − ∂E_k/∂q + ∂E_p/∂q`.

use std::io::Write;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_properties_with, InertiaModel, LegGeometry, MaterialParams};
use crate::kinematics::KneeConvention;
use crate::trajectory::{JointState, Trajectory};

/// Mass properties and constants that enter the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub mass: [f64; 3],
    /// Center-of-mass distance from each segment's proximal joint, m.
    pub com_offset: [f64; 3],
    pub inertia: [f64; 3],
    pub length: [f64; 3],
    pub gravity: f64,
    pub base_height: f64,
    pub knee: KneeConvention,
}

impl DynamicsParams {
    pub fn from_geometry(
        geom: &LegGeometry,
        mat: &MaterialParams,
        knee: KneeConvention,
    ) -> Result<Self> {
        geom.validate()?;
        Self::from_geometry_with(geom, mat, knee, InertiaModel::Centroidal)
    }

    /// Like [`from_geometry`](Self::from_geometry) with a chosen inertia
    /// axis. Zero-length segments are accepted and come out massless.
    pub fn from_geometry_with(
        geom: &LegGeometry,
        mat: &MaterialParams,
        knee: KneeConvention,
        inertia: InertiaModel,
    ) -> Result<Self> {
        let props = [
            segment_properties_with(&geom.coxa, mat, inertia)?,
            segment_properties_with(&geom.femur, mat, inertia)?,
            segment_properties_with(&geom.tibia, mat, inertia)?,
        ];
        Ok(Self {
            mass: props.map(|p| p.mass),
            com_offset: props.map(|p| p.com_offset),
            inertia: props.map(|p| p.inertia),
            length: geom.lengths(),
            gravity: mat.gravity,
            base_height: mat.base_height,
            knee,
        })
    }

    pub fn without_gravity(&self) -> Self {
        Self {
            gravity: 0.0,
            ..*self
        }
    }

    /// Scales every mass and inertia by `k`.
    pub fn with_mass_scale(&self, k: f64) -> Self {
        Self {
            mass: self.mass.map(|m| m * k),
            inertia: self.inertia.map(|i| i * k),
            ..*self
        }
    }
}

/// Root, hip and knee torques, N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointTorques(pub [f64; 3]);

impl Index<usize> for JointTorques {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn kinetic_energy(p: &DynamicsParams, s: &JointState) -> f64 {
    let q = p.knee.to_model(s.angle);
    let dq = p.knee.to_model(s.rate);
    let [m1, m2, m3] = p.mass;
    let [a1, a2, a3] = p.com_offset;
    let [i1, i2, i3] = p.inertia;
    let [l1, l2, _] = p.length;
    let phi = q[2] - q[1];

    let coxa = 0.5 * m1 * a1 * a1 * dq[0] * dq[0] + 0.5 * i1 * dq[0] * dq[0];

    let r2 = l1 + a2 * q[1].cos();
    let femur =
        0.5 * m2 * (r2 * r2 * dq[0] * dq[0] + a2 * a2 * dq[1] * dq[1]) + 0.5 * i2 * dq[1] * dq[1];

    let r3 = l1 + l2 * q[1].cos() + a3 * phi.cos();
    let rel = dq[1] - dq[2];
    let tibia = 0.5
        * m3
        * (r3 * r3 * dq[0] * dq[0]
            + 2.0 * l2 * a3 * dq[1] * rel * q[2].cos()
            + l2 * l2 * dq[1] * dq[1]
            + a3 * a3 * rel * rel)
        + 0.5 * i3 * dq[2] * dq[2];

    coxa + femur + tibia
}

pub fn potential_energy(p: &DynamicsParams, angles: &[f64; 3]) -> f64 {
    let q = p.knee.to_model(*angles);
    let [m1, m2, m3] = p.mass;
    let [_, a2, a3] = p.com_offset;
    let l2 = p.length[1];
    let (g, h) = (p.gravity, p.base_height);
    m1 * g * h
        + m2 * g * (h + a2 * q[1].sin())
        + m3 * g * (h + l2 * q[1].sin() - a3 * (q[2] - q[1]).sin())
}

/// Configuration-dependent terms in model coordinates. `M` has no coupling
/// between the yaw joint and the two pitch joints.
#[derive(Debug, Clone, Copy)]
struct ModelTerms {
    m11: f64,
    m22: f64,
    m23: f64,
    m33: f64,
    dm11_dq2: f64,
    dm11_dq3: f64,
    dm22_dq3: f64,
    dm23_dq3: f64,
    g2: f64,
    g3: f64,
}

fn model_terms(p: &DynamicsParams, q: &[f64; 3]) -> ModelTerms {
    let [m1, m2, m3] = p.mass;
    let [a1, a2, a3] = p.com_offset;
    let [i1, i2, i3] = p.inertia;
    let [l1, l2, _] = p.length;
    let g = p.gravity;
    let (s2, c2) = q[1].sin_cos();
    let (s3, c3) = q[2].sin_cos();
    let (sp, cp) = (q[2] - q[1]).sin_cos();

    let r2 = l1 + a2 * c2;
    let r3 = l1 + l2 * c2 + a3 * cp;
    // ∂r₂/∂q₂, ∂r₃/∂q₂, ∂r₃/∂q₃
    let dr2_2 = -a2 * s2;
    let dr3_2 = -l2 * s2 + a3 * sp;
    let dr3_3 = -a3 * sp;

    ModelTerms {
        m11: m1 * a1 * a1 + i1 + m2 * r2 * r2 + m3 * r3 * r3,
        m22: m2 * a2 * a2 + i2 + m3 * (l2 * l2 + a3 * a3 + 2.0 * l2 * a3 * c3),
        m23: -m3 * (a3 * a3 + l2 * a3 * c3),
        m33: m3 * a3 * a3 + i3,
        dm11_dq2: 2.0 * (m2 * r2 * dr2_2 + m3 * r3 * dr3_2),
        dm11_dq3: 2.0 * m3 * r3 * dr3_3,
        dm22_dq3: -2.0 * m3 * l2 * a3 * s3,
        dm23_dq3: m3 * l2 * a3 * s3,
        g2: g * (m2 * a2 * c2 + m3 * (l2 * c2 + a3 * cp)),
        g3: -g * m3 * a3 * cp,
    }
}

pub fn inverse_dynamics(p: &DynamicsParams, s: &JointState) -> JointTorques {
    let m = p.knee.state_to_model(s);
    let (q, dq, ddq) = (m.angle, m.rate, m.accel);
    let t = model_terms(p, &q);

    let tau1 = t.m11 * ddq[0] + (t.dm11_dq2 * dq[1] + t.dm11_dq3 * dq[2]) * dq[0];
    let tau2 =
        t.m22 * ddq[1] + t.m23 * ddq[2] + t.dm22_dq3 * dq[1] * dq[2] + t.dm23_dq3 * dq[2] * dq[2]
            - 0.5 * t.dm11_dq2 * dq[0] * dq[0]
            + t.g2;
    let tau3 = t.m23 * ddq[1] + t.m33 * ddq[2]
        - 0.5 * t.dm11_dq3 * dq[0] * dq[0]
        - 0.5 * t.dm22_dq3 * dq[1] * dq[1]
        + t.g3;

    JointTorques(p.knee.to_model([tau1, tau2, tau3]))
}

/// Torque and power per trajectory sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueTrace {
    pub times: Vec<f64>,
    pub torque: Vec<[f64; 3]>,
    /// `τᵢ·θ̇ᵢ`, W.
    pub power: Vec<[f64; 3]>,
}

impl TorqueTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns: time, τ1..τ3, P1..P3.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,tau1,tau2,tau3,p1,p2,p3")?;
        for ((t, tau), pw) in self.times.iter().zip(&self.torque).zip(&self.power) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t, tau[0], tau[1], tau[2], pw[0], pw[1], pw[2]
            )?;
        }
        Ok(())
    }

    pub(crate) fn check_aligned(&self, traj: &Trajectory) -> Result<()> {
        if self.len() != traj.len()
            || self.torque.len() != self.len()
            || self.power.len() != self.len()
        {
            return Err(Error::Misaligned(format!(
                "trace has {} samples, trajectory {}",
                self.len(),
                traj.len()
            )));
        }
        if let Some((a, b)) = self.times.iter().zip(traj.times()).find(|(a, b)| *a != b) {
            return Err(Error::Misaligned(format!(
                "time {a} in trace vs {b} in trajectory"
            )));
        }
        Ok(())
    }
}

pub fn torque_trace(p: &DynamicsParams, traj: &Trajectory) -> Result<TorqueTrace> {
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory"));
    }
    let n = traj.len();
    let mut trace = TorqueTrace {
        times: Vec::with_capacity(n),
        torque: Vec::with_capacity(n),
        power: Vec::with_capacity(n),
    };
    for s in traj.samples() {
        let tau = inverse_dynamics(p, &s.state).0;
        trace.times.push(s.time);
        trace.torque.push(tau);
        trace.power.push([
            tau[0] * s.state.rate[0],
            tau[1] * s.state.rate[1],
            tau[2] * s.state.rate[2],
        ]);
    }
    Ok(trace)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::geometry::INITIAL_LEG;
    use crate::trajectory::{plan_swing, SwingProfile, TrajectorySample};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(knee: KneeConvention) -> DynamicsParams {
        let mat = MaterialParams::default();
        let geom = LegGeometry::calibrated(&INITIAL_LEG, mat.density).unwrap();
        DynamicsParams::from_geometry(&geom, &mat, knee).unwrap()
    }

    /// Mass matrix assembled entry by entry from the energy expression,
    /// in joint coordinates.
    fn assembled_mass_matrix(p: &DynamicsParams, angle: [f64; 3]) -> [[f64; 3]; 3] {
        let s = p.knee.sign();
        let q = p.knee.to_model(angle);
        let [m1, m2, m3] = p.mass;
        let [a1, a2, a3] = p.com_offset;
        let [i1, i2, i3] = p.inertia;
        let [l1, l2, _] = p.length;
        let r2 = l1 + a2 * q[1].cos();
        let r3 = l1 + l2 * q[1].cos() + a3 * (q[2] - q[1]).cos();
        let m11 = m1 * a1 * a1 + i1 + m2 * r2 * r2 + m3 * r3 * r3;
        // from ½m₃[2l₂a₃q̇₂(q̇₂−q̇₃)cos q₃ + l₂²q̇₂² + a₃²(q̇₂−q̇₃)²]
        let m22 = m2 * a2 * a2 + i2 + m3 * (2.0 * l2 * a3 * q[2].cos() + l2 * l2 + a3 * a3);
        let m23 = m3 * (-l2 * a3 * q[2].cos() - a3 * a3);
        let m33 = m3 * a3 * a3 + i3;
        [[m11, 0.0, 0.0], [0.0, m22, s * m23], [0.0, s * m23, m33]]
    }

    fn state(angle: [f64; 3], rate: [f64; 3], accel: [f64; 3]) -> JointState {
        JointState { angle, rate, accel }
    }

    #[test]
    fn zero_rate_has_zero_kinetic_energy() {
        let p = params(KneeConvention::Mirrored);
        assert_eq!(
            kinetic_energy(&p, &JointState::at_rest([0.3, 0.2, -1.0])),
            0.0
        );
    }

    #[test]
    fn yaw_only_kinetic_energy() {
        let p = params(KneeConvention::Printed);
        let w = 1.7;
        let ek = kinetic_energy(&p, &state([0.4, 0.0, 0.0], [w, 0.0, 0.0], [0.0; 3]));
        let [m1, m2, m3] = p.mass;
        let [a1, a2, a3] = p.com_offset;
        let [l1, l2, _] = p.length;
        let want = 0.5 * (m1 * a1 * a1 + p.inertia[0]) * w * w
            + 0.5 * m2 * (l1 + a2).powi(2) * w * w
            + 0.5 * m3 * (l1 + l2 + a3).powi(2) * w * w;
        assert_relative_eq!(ek, want, max_relative = 1e-14);
    }

    #[test]
    fn potential_energy_cases() {
        let p = params(KneeConvention::Printed);
        assert_eq!(potential_energy(&p, &[0.5, 0.0, 0.0]), 0.0);
        let ep = potential_energy(&p, &[0.0, FRAC_PI_2, FRAC_PI_2]);
        let want = p.gravity * (p.mass[1] * p.com_offset[1] + p.mass[2] * p.length[1]);
        assert_relative_eq!(ep, want, max_relative = 1e-14);
    }

    #[test]
    fn potential_energy_matches_com_heights() {
        for knee in [KneeConvention::Printed, KneeConvention::Mirrored] {
            let p = DynamicsParams {
                base_height: 0.3,
                ..params(knee)
            };
            let angles = [-PI / 4.0; 3];
            // Center-of-mass heights by placing each rod midpoint.
            let q = knee.to_model(angles);
            let femur_mid = p.base_height + 0.5 * p.length[1] * q[1].sin();
            let knee_z = p.base_height + p.length[1] * q[1].sin();
            let tibia_mid = knee_z - 0.5 * p.length[2] * (q[2] - q[1]).sin();
            let want = p.gravity
                * (p.mass[0] * p.base_height + p.mass[1] * femur_mid + p.mass[2] * tibia_mid);
            assert_relative_eq!(potential_energy(&p, &angles), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn static_torques_match_gravity_formulas() {
        let p = params(KneeConvention::Printed);
        let [_, m2, m3] = p.mass;
        let [_, l2, l3] = p.length;
        let g = p.gravity;
        for angle in [[0.2, -0.7, 0.4], [-PI / 4.0; 3], [1.0, 0.3, -2.2]] {
            let tau = inverse_dynamics(&p, &JointState::at_rest(angle));
            let (t2, t3) = (angle[1], angle[2]);
            let hip = 0.5 * m2 * g * l2 * t2.cos()
                + m3 * g * l2 * t2.cos()
                + 0.5 * m3 * g * l3 * (t3 - t2).cos();
            let knee = -0.5 * m3 * g * l3 * (t3 - t2).cos();
            assert_eq!(tau[0], 0.0);
            assert!((tau[1] - hip).abs() < 1e-12 * hip.abs().max(1.0));
            assert!((tau[2] - knee).abs() < 1e-12 * knee.abs().max(1.0));
        }
    }

    #[test]
    fn mirrored_static_knee_torque_flips_sign() {
        let pp = params(KneeConvention::Printed);
        let pm = params(KneeConvention::Mirrored);
        let a = [0.1, 0.6, -1.1];
        let tp = inverse_dynamics(&pp, &JointState::at_rest([a[0], a[1], -a[2]]));
        let tm = inverse_dynamics(&pm, &JointState::at_rest(a));
        assert_eq!(tp[1], tm[1]);
        assert_eq!(tp[2], -tm[2]);
    }

    #[test]
    fn constant_yaw_rate_without_gravity() {
        let p = params(KneeConvention::Printed).without_gravity();
        let w = 2.0;
        let (t2, t3) = (0.3, -0.5);
        let tau = inverse_dynamics(&p, &state([0.0, t2, t3], [w, 0.0, 0.0], [0.0; 3]));
        assert_eq!(tau[0], 0.0);
        // Centrifugal terms: τ = −½ ∂M₁₁/∂q · ω²
        let [_, m2, m3] = p.mass;
        let [_, a2, a3] = p.com_offset;
        let [l1, l2, _] = p.length;
        let phi = t3 - t2;
        let r2 = l1 + a2 * t2.cos();
        let r3 = l1 + l2 * t2.cos() + a3 * phi.cos();
        let hip = (m2 * r2 * a2 * t2.sin() + m3 * r3 * (l2 * t2.sin() - a3 * phi.sin())) * w * w;
        let knee = m3 * r3 * a3 * phi.sin() * w * w;
        assert_relative_eq!(tau[1], hip, max_relative = 1e-13);
        assert_relative_eq!(tau[2], knee, max_relative = 1e-13);
    }

    #[test]
    fn trace_is_hip_dominated_and_powers_match() {
        let p = params(KneeConvention::Mirrored);
        let traj = plan_swing(&SwingProfile::default()).unwrap();
        let trace = torque_trace(&p, &traj).unwrap();
        assert_eq!(trace.len(), traj.len());
        for (k, s) in traj.samples().iter().enumerate() {
            for j in 0..3 {
                assert_eq!(trace.power[k][j], trace.torque[k][j] * s.state.rate[j]);
            }
        }
        let peak = |j: usize| trace.torque.iter().map(|t| t[j].abs()).fold(0.0, f64::max);
        assert!(peak(1) > peak(0) && peak(1) > peak(2));
    }

    #[test]
    fn empty_trajectory_rejected() {
        let p = params(KneeConvention::Mirrored);
        let traj = Trajectory::from_samples(vec![TrajectorySample {
            time: 0.0,
            state: JointState::default(),
        }])
        .unwrap();
        assert_eq!(torque_trace(&p, &traj).unwrap().len(), 1);
        let mut buf = Vec::new();
        torque_trace(&p, &traj)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("time,tau1"));
    }

    fn arb_state() -> impl Strategy<Value = JointState> {
        (
            prop::array::uniform3(-PI..PI),
            prop::array::uniform3(-10.0f64..10.0),
            prop::array::uniform3(-50.0f64..50.0),
        )
            .prop_map(|(angle, rate, accel)| JointState { angle, rate, accel })
    }

    proptest! {
        #[test]
        fn kinetic_energy_is_quadratic_form(s in arb_state(), printed in any::<bool>()) {
            let knee = if printed { KneeConvention::Printed } else { KneeConvention::Mirrored };
            let p = params(knee);
            let m = assembled_mass_matrix(&p, s.angle);
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += 0.5 * s.rate[i] * m[i][j] * s.rate[j];
                }
            }
            let ek = kinetic_energy(&p, &s);
            prop_assert!((ek - quad).abs() <= 1e-12 * ek.abs().max(1.0));
        }

        #[test]
        fn torques_are_linear_in_mass(s in arb_state(), k in 0.1f64..5.0) {
            let p = params(KneeConvention::Mirrored);
            let a = inverse_dynamics(&p, &s);
            let b = inverse_dynamics(&p.with_mass_scale(k), &s);
            for j in 0..3 {
                prop_assert!((b[j] - k * a[j]).abs() <= 1e-11 * (k * a[j]).abs().max(1.0));
            }
        }

        #[test]
        fn inertial_part_matches_mass_matrix(s in arb_state()) {
            // τ(θ, 0, θ̈) − τ(θ, 0, 0) = M(θ)·θ̈
            let p = params(KneeConvention::Mirrored);
            let m = assembled_mass_matrix(&p, s.angle);
            let full = inverse_dynamics(&p, &JointState { rate: [0.0; 3], ..s });
            let grav = inverse_dynamics(&p, &JointState::at_rest(s.angle));
            for i in 0..3 {
                let want: f64 = (0..3).map(|j| m[i][j] * s.accel[j]).sum();
                prop_assert!((full[i] - grav[i] - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
    }
}
