//! Two-phase quintic swing planning in joint space.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angle, rate and acceleration of a single joint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointState {
    pub angle: f64,
    pub rate: f64,
    pub accel: f64,
}

/// Angles (rad), rates (rad/s) and accelerations (rad/s²) of the root, hip and
/// knee joints.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointState {
    pub angle: [f64; 3],
    pub rate: [f64; 3],
    pub accel: [f64; 3],
}

impl JointState {
    pub fn at_rest(angle: [f64; 3]) -> Self {
        Self {
            angle,
            ..Default::default()
        }
    }

    pub fn joint(&self, i: usize) -> PointState {
        PointState {
            angle: self.angle[i],
            rate: self.rate[i],
            accel: self.accel[i],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub start: PointState,
    pub end: PointState,
    pub duration: f64,
}

/// `θ(t) = Σ cₖ tᵏ` on `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    coefficients: [f64; 6],
    duration: f64,
}

/// Unique quintic meeting angle, rate and acceleration at both ends.
pub fn solve_quintic(bc: &BoundaryConditions) -> Result<QuinticSegment> {
    let t = bc.duration;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidDuration(t));
    }
    let (a, b) = (bc.start, bc.end);
    let c0 = a.angle;
    let c1 = a.rate;
    let c2 = 0.5 * a.accel;
    // Residuals left for the t³..t⁵ terms to absorb at t = T.
    let dp = b.angle - (c0 + c1 * t + c2 * t * t);
    let dv = (b.rate - (c1 + 2.0 * c2 * t)) * t;
    let da = (b.accel - 2.0 * c2) * t * t;
    let t3 = t * t * t;
    let c3 = (20.0 * dp - 8.0 * dv + da) / (2.0 * t3);
    let c4 = (-30.0 * dp + 14.0 * dv - 2.0 * da) / (2.0 * t3 * t);
    let c5 = (12.0 * dp - 6.0 * dv + da) / (2.0 * t3 * t * t);
    Ok(QuinticSegment {
        coefficients: [c0, c1, c2, c3, c4, c5],
        duration: t,
    })
}

impl QuinticSegment {
    pub fn coefficients(&self) -> [f64; 6] {
        self.coefficients
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn eval(&self, t: f64) -> Result<PointState> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> PointState {
        let c = &self.coefficients;
        let angle = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let rate = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let accel = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        PointState { angle, rate, accel }
    }
}

/// Start, lift (mid) and touchdown (end) waypoints with the swing timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwingProfile {
    pub start: JointState,
    pub mid: JointState,
    pub end: JointState,
    /// Total swing time, split equally between the two phases, s.
    pub total_time: f64,
    pub samples_per_phase: usize,
}

impl Default for SwingProfile {
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            start: JointState::at_rest([-FRAC_PI_4, -FRAC_PI_4, -FRAC_PI_4]),
            mid: JointState {
                angle: [0.0, FRAC_PI_4, -3.0 * FRAC_PI_4],
                rate: [FRAC_PI_2, 0.0, 0.0],
                accel: [0.0; 3],
            },
            end: JointState::at_rest([FRAC_PI_4, -FRAC_PI_4, -FRAC_PI_4]),
            total_time: 2.0,
            samples_per_phase: 100,
        }
    }
}

impl SwingProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::InvalidDuration(self.total_time));
        }
        if self.samples_per_phase == 0 {
            return Err(Error::InvalidConfig(
                "samples_per_phase must be at least 1".into(),
            ));
        }
        let all_finite = [self.start, self.mid, self.end].iter().all(|s| {
            s.angle
                .iter()
                .chain(&s.rate)
                .chain(&s.accel)
                .all(|v| v.is_finite())
        });
        if !all_finite {
            return Err(Error::InvalidConfig("non-finite waypoint value".into()));
        }
        Ok(())
    }
}

/// Continuous two-phase plan; phase 2 uses its own local time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingPlan {
    phases: [[QuinticSegment; 3]; 2],
    phase_duration: f64,
}

impl SwingPlan {
    pub fn new(profile: &SwingProfile) -> Result<Self> {
        profile.validate()?;
        let phase_duration = 0.5 * profile.total_time;
        let phase = |from: &JointState, to: &JointState| -> Result<[QuinticSegment; 3]> {
            let seg = |j: usize| {
                solve_quintic(&BoundaryConditions {
                    start: from.joint(j),
                    end: to.joint(j),
                    duration: phase_duration,
                })
            };
            Ok([seg(0)?, seg(1)?, seg(2)?])
        };
        Ok(Self {
            phases: [
                phase(&profile.start, &profile.mid)?,
                phase(&profile.mid, &profile.end)?,
            ],
            phase_duration,
        })
    }

    pub fn phase(&self, index: usize) -> &[QuinticSegment; 3] {
        &self.phases[index]
    }

    pub fn phase_duration(&self) -> f64 {
        self.phase_duration
    }

    pub fn total_time(&self) -> f64 {
        2.0 * self.phase_duration
    }

    /// State at global time `t ∈ [0, total_time]`; the join belongs to phase 2.
    pub fn state_at(&self, t: f64) -> Result<JointState> {
        let total = self.total_time();
        if !(0.0..=total).contains(&t) {
            return Err(Error::OutOfRange { t, duration: total });
        }
        if t < self.phase_duration {
            Ok(self.local_state(0, t))
        } else {
            Ok(self.local_state(1, (t - self.phase_duration).min(self.phase_duration)))
        }
    }

    fn local_state(&self, phase: usize, t: f64) -> JointState {
        let mut s = JointState::default();
        for (j, seg) in self.phases[phase].iter().enumerate() {
            let p = seg.eval_unchecked(t);
            s.angle[j] = p.angle;
            s.rate[j] = p.rate;
            s.accel[j] = p.accel;
        }
        s
    }

    /// `n` samples per phase, `2n + 1` in total with the join shared.
    pub fn sample(&self, n: usize) -> Result<Trajectory> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "samples_per_phase must be at least 1".into(),
            ));
        }
        let dur = self.phase_duration;
        let mut samples = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            let local = dur * k as f64 / n as f64;
            samples.push(TrajectorySample {
                time: local,
                state: self.local_state(0, local),
            });
        }
        for k in 0..=n {
            let local = dur * k as f64 / n as f64;
            samples.push(TrajectorySample {
                time: dur + local,
                state: self.local_state(1, local),
            });
        }
        Ok(Trajectory {
            samples,
            phase_boundaries: vec![dur],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub state: JointState,
}

/// Time-ordered samples plus the times at which phases join.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    phase_boundaries: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from raw samples; times must strictly increase.
    pub fn from_samples(samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        if samples.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidConfig(
                "trajectory sample times must strictly increase".into(),
            ));
        }
        Ok(Self {
            samples,
            phase_boundaries: Vec::new(),
        })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn phase_boundaries(&self) -> &[f64] {
        &self.phase_boundaries
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time)
    }

    /// Columns: time, θ1..θ3, θ̇1..θ̇3, θ̈1..θ̈3.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "time,theta1,theta2,theta3,dtheta1,dtheta2,dtheta3,ddtheta1,ddtheta2,ddtheta3"
        )?;
        for s in &self.samples {
            let st = &s.state;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.time,
                st.angle[0],
                st.angle[1],
                st.angle[2],
                st.rate[0],
                st.rate[1],
                st.rate[2],
                st.accel[0],
                st.accel[1],
                st.accel[2]
            )?;
        }
        Ok(())
    }
}

/// Plans and samples the swing described by `profile`.
pub fn plan_swing(profile: &SwingProfile) -> Result<Trajectory> {
    SwingPlan::new(profile)?.sample(profile.samples_per_phase)
}
