use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use swingleg::dynamics::torque_trace;
use swingleg::kinematics::write_foot_path_csv;
use swingleg::metrics::{evaluate_with_trace, MetricRatios};
use swingleg::optimizer::{run_ga, RunStatus};
use swingleg::oracle::{check_power_balance, check_power_balance_local, sweep};
use swingleg::report::{
    comparison_report, write_history_csv, BestGenome, CheckResult, VerificationReport,
};
use swingleg::simcheck::{
    compare_power, passive_energy_drift, power_curves, round_trip, PowerComparison,
};
use swingleg::trajectory::{plan_swing, SwingPlan};
use swingleg::{
    Baseline, DesignProblem, EvaluationSetup, JointState, LegGeometry, MetricValues, SwingProfile,
};

use crate::config::{GeometrySpec, RunConfig, SegmentSpec};
use crate::CliError;

fn output_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir)
}

fn write_with<F>(dir: &Path, name: &str, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    write_with(dir, name, |w| w.write_all(text.as_bytes()))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_text(dir, name, &text)
}

fn setup(cfg: &RunConfig) -> Result<EvaluationSetup, CliError> {
    cfg.trajectory.validate()?;
    let mut s = EvaluationSetup::new(&cfg.trajectory, cfg.material)?;
    s.knee = cfg.model.knee;
    s.inertia = cfg.model.inertia;
    s.energy_mode = cfg.energy_mode;
    Ok(s)
}

fn geometry_spec(g: &LegGeometry) -> GeometrySpec {
    let spec = |d: &swingleg::SegmentDims| SegmentSpec {
        length: d.length,
        width: d.width,
        height: d.height,
        mass: None,
        wall_thickness: Some(d.thickness),
    };
    GeometrySpec {
        coxa: spec(&g.coxa),
        femur: spec(&g.femur),
        tibia: spec(&g.tibia),
    }
}

pub fn plan(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.trajectory.validate()?;
    let geom = cfg.initial_geometry()?;
    let traj = plan_swing(&cfg.trajectory)?;
    let dir = output_dir(cfg)?;
    write_with(dir, "trajectory.csv", |w| traj.write_csv(w))?;
    let chain = swingleg::LegChain::new(&geom, cfg.material.base_height, cfg.model.knee);
    write_with(dir, "foot_path.csv", |w| {
        write_foot_path_csv(&chain, &traj, w)
    })?;
    writeln!(
        out,
        "wrote {} samples to {}",
        traj.len(),
        dir.join("trajectory.csv").display()
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MetricsFile {
    geometry: GeometrySpec,
    values: MetricValues,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Baseline>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratios: Option<MetricRatios>,
}

pub fn evaluate(
    cfg: &RunConfig,
    geometry: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let setup = setup(cfg)?;
    let initial = cfg.initial_geometry()?;
    let (base_values, base_trace) = evaluate_with_trace(&initial, &setup)?;
    let dir = output_dir(cfg)?;

    let Some(path) = geometry else {
        write_with(dir, "torque_trace.csv", |w| base_trace.write_csv(w))?;
        write_json(
            dir,
            "metrics.json",
            &MetricsFile {
                geometry: geometry_spec(&initial),
                values: base_values,
                baseline: None,
                ratios: None,
            },
        )?;
        writeln!(out, "peak torque (N·m): {:?}", base_values.peak_torque)?;
        writeln!(out, "energy (J): {:?}", base_values.energy)?;
        return Ok(());
    };

    let candidate =
        GeometrySpec::load(path)?.resolve(cfg.material.density, cfg.allow_degenerate)?;
    let (values, trace) = evaluate_with_trace(&candidate, &setup)?;
    let baseline = Baseline::freeze(base_values);
    write_with(dir, "torque_trace.csv", |w| trace.write_csv(w))?;
    write_json(
        dir,
        "metrics.json",
        &MetricsFile {
            geometry: geometry_spec(&candidate),
            values,
            baseline: Some(baseline),
            ratios: Some(values.ratios(&baseline)),
        },
    )?;
    let table = comparison_report(
        &initial,
        &candidate,
        &base_values,
        &values,
        &cfg.material,
        cfg.model.inertia,
    )?;
    write_text(dir, "comparison.txt", &table)?;
    write!(out, "{table}")?;
    Ok(())
}

pub fn optimize(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let setup = setup(cfg)?;
    let initial = cfg.initial_geometry()?;
    initial.validate()?;
    let problem = DesignProblem::new(initial, setup)?;
    let outcome = pool.install(|| run_ga(&problem, &cfg.ga))?;
    let best_geom = problem.geometry(&outcome.best.genome);

    let dir = output_dir(cfg)?;
    write_with(dir, "history.csv", |w| {
        write_history_csv(&outcome.history, w)
    })?;
    let mut json = BestGenome::new(&outcome, &cfg.ga).to_json();
    json.push('\n');
    write_text(dir, "best_genome.json", &json)?;
    write_json(dir, "optimized_geometry.json", &geometry_spec(&best_geom))?;

    let after = swingleg::metrics::evaluate(&best_geom, &problem.setup)?;
    let table = comparison_report(
        &problem.initial,
        &best_geom,
        problem.baseline.values(),
        &after,
        &cfg.material,
        cfg.model.inertia,
    )?;
    write_text(dir, "comparison.txt", &table)?;
    write!(out, "{table}")?;
    let f = &outcome.best.fitness;
    writeln!(
        out,
        "best eval {} (F = {}), converged at generation {}",
        f.eval, f.objective, outcome.converged_at
    )?;
    match outcome.status {
        RunStatus::Feasible => Ok(()),
        RunStatus::Infeasible => Err(CliError::Infeasible(format!(
            "best eval {} carries penalty {}",
            f.eval,
            f.total_penalty()
        ))),
    }
}

fn push_result<T>(
    report: &mut VerificationReport,
    name: &str,
    result: swingleg::Result<T>,
    check: impl FnOnce(T) -> CheckResult,
) {
    report.push(match result {
        Ok(v) => check(v),
        Err(e) => CheckResult::failed(name, e.to_string()),
    });
}

pub fn verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.verify.oracle.validate()?;
    let setup = setup(cfg)?;
    let geom = cfg.initial_geometry()?;
    let params = setup.dynamics(&geom)?;
    let v = &cfg.verify;
    let mut report = VerificationReport::default();

    let sw = sweep(&params, &v.oracle, v.states, v.seed);
    let mut c = CheckResult::below(
        "oracle sweep, max relative torque deviation",
        sw.max_relative,
        sw.tolerance,
        format!(
            "{} states, {} below the cancellation floor",
            sw.states, sw.low_confidence
        ),
    );
    c.passed = sw.passed;
    report.push(c);

    let traj = &setup.trajectory;
    let trace = torque_trace(&params, traj)?;
    push_result(
        &mut report,
        "power balance, local",
        check_power_balance_local(&trace, traj, &params, &v.oracle),
        |r| CheckResult::below("power balance, local", r.max, v.power_tolerance, "W"),
    );
    let sampled = check_power_balance(&trace, traj, &params);
    let doubled_profile = SwingProfile {
        samples_per_phase: 2 * cfg.trajectory.samples_per_phase,
        ..cfg.trajectory
    };
    let doubled = plan_swing(&doubled_profile).and_then(|t| {
        let tr = torque_trace(&params, &t)?;
        check_power_balance(&tr, &t, &params)
    });
    match (sampled, doubled) {
        (Ok(a), Ok(b)) => {
            report.push(CheckResult::info(
                "power balance, sample differencing",
                a.max,
                format!(
                    "W at {} samples per phase",
                    cfg.trajectory.samples_per_phase
                ),
            ));
            report.push(CheckResult::within(
                "power balance, residual ratio at doubled sampling",
                a.max / b.max,
                3.0,
                5.0,
                "second-order differencing",
            ));
        }
        (Err(e), _) | (_, Err(e)) => report.push(CheckResult::failed(
            "power balance, sample differencing",
            e.to_string(),
        )),
    }

    let plan = SwingPlan::new(&cfg.trajectory)?;
    push_result(
        &mut report,
        "forward round trip",
        round_trip(&params, &plan, cfg.simulation.dt),
        |sim| {
            CheckResult::below(
                "forward round trip, max joint error",
                sim.tracking_error.unwrap_or(f64::NAN),
                v.round_trip_tolerance,
                format!("rad at dt = {} s", cfg.simulation.dt),
            )
        },
    );
    let rest = JointState::at_rest(cfg.trajectory.start.angle);
    push_result(
        &mut report,
        "passive energy drift",
        passive_energy_drift(&params, &rest, v.energy_dt, plan.total_time()),
        |d| {
            CheckResult::below(
                "passive energy drift",
                d,
                v.energy_tolerance,
                format!("J over {} s at dt = {} s", plan.total_time(), v.energy_dt),
            )
        },
    );

    let dir = output_dir(cfg)?;
    let text = report.to_text();
    write_text(dir, "verification.txt", &text)?;
    write_json(dir, "verification.json", &report)?;
    write!(out, "{text}")?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Verification(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct PowerSummary {
    initial_peak_power: [f64; 3],
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    comparison: Option<PowerComparison>,
    round_trip_error: f64,
}

pub fn simulate(
    cfg: &RunConfig,
    geometry: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let setup = setup(cfg)?;
    let plan = SwingPlan::new(&cfg.trajectory)?;
    let initial = cfg.initial_geometry()?;
    let params = setup.dynamics(&initial)?;
    let sim = round_trip(&params, &plan, cfg.simulation.dt)?;
    let before = power_curves(&torque_trace(&params, &setup.trajectory)?);

    let dir = output_dir(cfg)?;
    write_with(dir, "simulated.csv", |w| {
        writeln!(w, "time,theta1,theta2,theta3,dtheta1,dtheta2,dtheta3")?;
        for (t, s) in sim.times.iter().zip(&sim.states) {
            let (a, r) = (s.angle, s.rate);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t, a[0], a[1], a[2], r[0], r[1], r[2]
            )?;
        }
        Ok(())
    })?;
    write_with(dir, "power.csv", |w| before.write_csv(w))?;

    let comparison = match geometry {
        Some(path) => {
            let g =
                GeometrySpec::load(path)?.resolve(cfg.material.density, cfg.allow_degenerate)?;
            let p = setup.dynamics(&g)?;
            let after = power_curves(&torque_trace(&p, &setup.trajectory)?);
            write_with(dir, "power_compared.csv", |w| after.write_csv(w))?;
            Some(compare_power(&before, &after))
        }
        None => None,
    };
    let err = sim.tracking_error.unwrap_or(f64::NAN);
    writeln!(out, "round-trip max joint error: {err:e} rad")?;
    writeln!(out, "peak power (W): {:?}", before.peak)?;
    if let Some(c) = &comparison {
        writeln!(out, "compared peak power (W): {:?}", c.after)?;
        writeln!(out, "reduction (%): {:?}", c.reduction_percent)?;
    }
    write_json(
        dir,
        "power_summary.json",
        &PowerSummary {
            initial_peak_power: before.peak,
            comparison,
            round_trip_error: err,
        },
    )
}
