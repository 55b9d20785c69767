//! Forward kinematics of the root-yaw / hip-pitch / knee-pitch chain.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LegGeometry;
use crate::trajectory::{JointState, Trajectory};

/// Sign convention linking the planned knee angle to the tibia pose.
///
/// The leg model is written in a knee coordinate `q₃` where the tibia makes
/// angle `q₃ − θ₂` with the horizontal (measured downward). `Printed` uses the
/// planned knee angle directly (`q₃ = θ₃`); `Mirrored` flips it (`q₃ = −θ₃`),
/// so the tibia pitch is `θ₂ + θ₃` and the default swing keeps the tibia
/// vertical at every waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KneeConvention {
    Printed,
    #[default]
    Mirrored,
}

impl KneeConvention {
    pub fn sign(self) -> f64 {
        match self {
            KneeConvention::Printed => 1.0,
            KneeConvention::Mirrored => -1.0,
        }
    }

    /// Maps a joint-space vector (angle, rate, accel or torque) into model
    /// coordinates. The map is its own inverse.
    pub fn to_model(self, v: [f64; 3]) -> [f64; 3] {
        [v[0], v[1], self.sign() * v[2]]
    }

    pub fn state_to_model(self, s: &JointState) -> JointState {
        JointState {
            angle: self.to_model(s.angle),
            rate: self.to_model(s.rate),
            accel: self.to_model(s.accel),
        }
    }
}

/// Foot location in polar (about the root axis) and cartesian form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootPosition {
    /// Horizontal distance from the root joint axis, m.
    pub radial: f64,
    pub azimuth: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Link lengths plus the conventions needed to place the foot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegChain {
    pub lengths: [f64; 3],
    pub base_height: f64,
    pub knee: KneeConvention,
}

impl LegChain {
    pub fn new(geom: &LegGeometry, base_height: f64, knee: KneeConvention) -> Self {
        Self {
            lengths: geom.lengths(),
            base_height,
            knee,
        }
    }

    pub fn foot(&self, angles: [f64; 3]) -> FootPosition {
        forward_kinematics(self, angles)
    }
}

pub fn forward_kinematics(chain: &LegChain, angles: [f64; 3]) -> FootPosition {
    let [l1, l2, l3] = chain.lengths;
    let q = chain.knee.to_model(angles);
    let tibia = q[2] - q[1];
    let radial = l1 + l2 * q[1].cos() + l3 * tibia.cos();
    let z = chain.base_height + l2 * q[1].sin() - l3 * tibia.sin();
    let (s, c) = q[0].sin_cos();
    FootPosition {
        radial,
        azimuth: q[0],
        x: radial * c,
        y: radial * s,
        z,
    }
}

/// Farthest radial foot distance over the trajectory samples.
pub fn max_reach(chain: &LegChain, traj: &Trajectory) -> Result<f64> {
    traj.samples()
        .iter()
        .map(|s| forward_kinematics(chain, s.state.angle).radial)
        .reduce(f64::max)
        .ok_or(Error::EmptyInput("trajectory"))
}

/// Columns: time, x, y, z, r.
pub fn write_foot_path_csv<W: Write>(
    chain: &LegChain,
    traj: &Trajectory,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "time,x,y,z,r")?;
    for s in traj.samples() {
        let f = forward_kinematics(chain, s.state.angle);
        writeln!(out, "{},{},{},{},{}", s.time, f.x, f.y, f.z, f.radial)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{plan_swing, SwingProfile, TrajectorySample};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn chain(knee: KneeConvention) -> LegChain {
        LegChain {
            lengths: [0.2, 0.4, 0.4],
            base_height: 0.0,
            knee,
        }
    }

    #[test]
    fn fully_extended() {
        let f = chain(KneeConvention::Printed).foot([0.0; 3]);
        assert!((f.radial - 1.0).abs() < 1e-15);
        assert_eq!(f.z, 0.0);
    }

    #[test]
    fn start_pose_printed() {
        let f = chain(KneeConvention::Printed).foot([-FRAC_PI_4; 3]);
        assert!((f.radial - (0.2 + 0.4 * 0.5f64.sqrt() + 0.4)).abs() < 1e-12);
        assert!((f.radial - 0.8828).abs() < 1e-4);
        assert!((f.z + 0.2828).abs() < 1e-4);
    }

    #[test]
    fn mid_pose_printed() {
        let f = chain(KneeConvention::Printed).foot([0.0, FRAC_PI_4, -3.0 * FRAC_PI_4]);
        assert!((f.radial - 0.0828).abs() < 1e-4);
    }

    #[test]
    fn mirrored_keeps_tibia_vertical_at_waypoints() {
        let c = chain(KneeConvention::Mirrored);
        let p = SwingProfile::default();
        for w in [p.start, p.mid, p.end] {
            let f = c.foot(w.angle);
            let femur_tip = 0.2 + 0.4 * w.angle[1].cos();
            assert!((f.radial - femur_tip).abs() < 1e-12);
        }
    }

    #[test]
    fn reach_on_default_swing() {
        let traj = plan_swing(&SwingProfile::default()).unwrap();
        let d = max_reach(&chain(KneeConvention::Printed), &traj).unwrap();
        let brute = traj
            .samples()
            .iter()
            .map(|s| {
                let [_, t2, t3] = s.state.angle;
                0.2 + 0.4 * t2.cos() + 0.4 * (t3 - t2).cos()
            })
            .fold(f64::MIN, f64::max);
        assert_eq!(d, brute);
        // The leg stretches past its start pose early in the first phase.
        let start = chain(KneeConvention::Printed).foot([-FRAC_PI_4; 3]).radial;
        assert!(d > start);
        assert!((d - 0.90405).abs() < 1e-4, "reach {d}");
    }

    #[test]
    fn constant_pose_reach() {
        let pose = JointState::at_rest([0.1, 0.2, -0.4]);
        let traj = Trajectory::from_samples(vec![TrajectorySample {
            time: 0.0,
            state: pose,
        }])
        .unwrap();
        let c = chain(KneeConvention::Mirrored);
        assert_eq!(max_reach(&c, &traj).unwrap(), c.foot(pose.angle).radial);
    }

    proptest! {
        #[test]
        fn yaw_does_not_change_reach(a in prop::array::uniform3(-PI..PI), yaw in -PI..PI) {
            for knee in [KneeConvention::Printed, KneeConvention::Mirrored] {
                let c = chain(knee);
                let f1 = c.foot(a);
                let f2 = c.foot([yaw, a[1], a[2]]);
                prop_assert!((f1.radial - f2.radial).abs() < 1e-14);
                prop_assert!((f1.x.hypot(f1.y) - f1.radial.abs()).abs() < 1e-12);
                prop_assert!(f1.radial <= 1.0 + 1e-12);
            }
        }
    }
}
