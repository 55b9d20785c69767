//! Run artifacts: GA history CSV, best-genome JSON, before/after tables and
//! the verification summary.
//!
//! Floats are written with `{}`, which is the shortest representation that
//! parses back to the same value.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{segment_properties_with, InertiaModel, LegGeometry, MaterialParams};
use crate::metrics::MetricValues;
use crate::optimizer::{FitnessReport, GaConfig, GaOutcome, GenerationRecord, Genome, RunStatus};

const SEGMENTS: [&str; 3] = ["coxa", "femur", "tibia"];
const JOINTS: [&str; 3] = ["root", "hip", "knee"];

/// Columns: generation, best_eval, best_f, f_t, f_q, f_d, f_ei, feasible.
pub fn write_history_csv<W: Write>(
    history: &[GenerationRecord],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "generation,best_eval,best_f,f_t,f_q,f_d,f_ei,feasible")?;
    for r in history {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.generation,
            r.best_eval,
            r.best_objective,
            r.torque_penalty,
            r.energy_penalty,
            r.reach_penalty,
            r.stiffness_penalty,
            r.feasible
        )?;
    }
    Ok(())
}

/// Best genome with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestGenome {
    pub status: RunStatus,
    pub genome: Genome,
    pub fitness: FitnessReport,
    pub converged_at: usize,
    pub generations: usize,
    pub config: GaConfig,
}

impl BestGenome {
    pub fn new(outcome: &GaOutcome, cfg: &GaConfig) -> Self {
        Self {
            status: outcome.status,
            genome: outcome.best.genome,
            fitness: outcome.best.fitness,
            converged_at: outcome.converged_at,
            generations: outcome.history.len().saturating_sub(1),
            config: *cfg,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn reduction(before: f64, after: f64) -> f64 {
    100.0 * (before - after) / before
}

/// Segment dimensions and masses, initial vs optimized.
pub fn dimensions_table(
    before: &LegGeometry,
    after: &LegGeometry,
    mat: &MaterialParams,
    inertia: InertiaModel,
) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "segment", "l0 (m)", "l (m)", "w0 (m)", "w (m)", "h0 (m)", "h (m)", "m0 (kg)", "m (kg)"
    );
    for (i, name) in SEGMENTS.iter().enumerate() {
        let (b, a) = (before.segments()[i], after.segments()[i]);
        let mb = segment_properties_with(b, mat, inertia)?.mass;
        let ma = segment_properties_with(a, mat, inertia)?.mass;
        let _ = writeln!(
            s,
            "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.3} {:>10.3}",
            name, b.length, a.length, b.width, a.width, b.height, a.height, mb, ma
        );
    }
    Ok(s)
}

fn joint_table(title: &str, unit: &str, before: [f64; 3], after: [f64; 3]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:>16} {:>16} {:>14}",
        "joint",
        format!("initial {title} ({unit})"),
        format!("optimized ({unit})"),
        "reduction (%)"
    );
    for (i, name) in JOINTS.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:<6} {:>16.2} {:>16.2} {:>14.2}",
            name,
            before[i],
            after[i],
            reduction(before[i], after[i])
        );
    }
    s
}

pub fn torque_table(before: &MetricValues, after: &MetricValues) -> String {
    joint_table("T_M", "N·m", before.peak_torque, after.peak_torque)
}

pub fn energy_table(before: &MetricValues, after: &MetricValues) -> String {
    joint_table("Q", "J", before.energy, after.energy)
}

/// All three before/after tables plus reach and stiffness lines.
pub fn comparison_report(
    before_geom: &LegGeometry,
    after_geom: &LegGeometry,
    before: &MetricValues,
    after: &MetricValues,
    mat: &MaterialParams,
    inertia: InertiaModel,
) -> Result<String> {
    let mut s = String::from("Segment dimensions\n");
    s += &dimensions_table(before_geom, after_geom, mat, inertia)?;
    s += "\nPeak joint torque\n";
    s += &torque_table(before, after);
    s += "\nJoint energy\n";
    s += &energy_table(before, after);
    let _ = writeln!(
        s,
        "\nreach: {:.4} m -> {:.4} m ({:+.2}%)",
        before.reach,
        after.reach,
        -reduction(before.reach, after.reach)
    );
    for (i, name) in SEGMENTS.iter().enumerate() {
        let _ = writeln!(
            s,
            "EI {name}: {:.4e} -> {:.4e} N·m² ({:+.2}%)",
            before.stiffness[i],
            after.stiffness[i],
            -reduction(before.stiffness[i], after.stiffness[i])
        );
    }
    Ok(s)
}

/// One named check with its measured value and accepted range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            lower: None,
            upper: Some(limit),
            passed: value < limit,
            detail: detail.into(),
        }
    }

    /// Passes when `lower ≤ value ≤ upper`.
    pub fn within(
        name: &str,
        value: f64,
        lower: f64,
        upper: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            lower: Some(lower),
            upper: Some(upper),
            passed: (lower..=upper).contains(&value),
            detail: detail.into(),
        }
    }

    /// Reported but not gated.
    pub fn info(name: &str, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            lower: None,
            upper: None,
            passed: true,
            detail: detail.into(),
        }
    }

    pub fn failed(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: None,
            lower: None,
            upper: None,
            passed: false,
            detail: detail.into(),
        }
    }

    fn is_gated(&self) -> bool {
        self.value.is_none() || self.lower.is_some() || self.upper.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = match (c.is_gated(), c.passed) {
                (false, _) => "INFO",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            let _ = write!(s, "{tag} {}", c.name);
            if let Some(v) = c.value {
                let _ = write!(s, ": {v:e}");
            }
            match (c.lower, c.upper) {
                (Some(lo), Some(hi)) => {
                    let _ = write!(s, " (accepted [{lo}, {hi}])");
                }
                (None, Some(hi)) => {
                    let _ = write!(s, " (limit {hi:e})");
                }
                _ => {}
            }
            if !c.detail.is_empty() {
                let _ = write!(s, " [{}]", c.detail);
            }
            s.push('\n');
        }
        let gated: Vec<_> = self.checks.iter().filter(|c| c.is_gated()).collect();
        let n = gated.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "{n}/{} checks passed", gated.len());
        s
    }
}
