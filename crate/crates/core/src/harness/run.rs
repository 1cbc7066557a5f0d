use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use super::{initial_field, Diagnostic, HarnessError, RunConfig};
use crate::constants::ConstantLedger;
use crate::extension::{dtn_check, DtnCheck};
use crate::oscillation::{
    calibrate_tail_constant, run_iteration_suite, tail_estimates, IterationConfig, IterationReport, SpectralHistory,
    TailEstimate,
};
use crate::solver::{
    audit_energy, check_l2_monotone, check_linf_decay, read_checkpoint, write_checkpoint, EnergyLedger, LevelAudit,
    LinfDecayFit, MonotoneReport, Solver, SolverConfig,
};
use crate::spectral::{forward_transform, ScalarField};

/// Time at which the tail constant is measured.
pub const TAIL_CALIBRATION_TIME: f64 = 0.1;
const ENERGY_LEVELS: usize = 16;
const LINF_WINDOW_START: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not applicable to this series, e.g. a window shorter than needed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
        }
    }

    fn skipped(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySection {
    pub ledger: EnergyLedger,
    pub monotone: MonotoneReport,
    pub audit: Vec<LevelAudit>,
    pub linf: Option<LinfDecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSection {
    pub calibration_time: f64,
    pub constant: f64,
    pub estimates: Vec<TailEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    /// The config in file form; parses back to `config`.
    pub config_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<DtnCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<IterationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantLedger>,
    pub checks: Vec<CheckOutcome>,
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            config_text: config.render(),
            energy: None,
            tail: None,
            extension: None,
            oscillation: None,
            constants: None,
            checks: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// No check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(Timing {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Levels `λ_i = i · max θ₀ / 16`, `i = 0, …, 15`.
pub fn energy_levels(initial: &ScalarField) -> Vec<f64> {
    let top = initial.max();
    (0..ENERGY_LEVELS)
        .map(|i| top.max(0.0) * i as f64 / ENERGY_LEVELS as f64)
        .collect()
}

fn check_series(snapshots: &[ScalarField]) -> Result<(), HarnessError> {
    let first = snapshots
        .first()
        .ok_or_else(|| HarnessError::InconsistentSeries("no snapshots".into()))?;
    for w in snapshots.windows(2) {
        if w[1].grid() != first.grid() {
            return Err(HarnessError::InconsistentSeries("snapshots on different grids".into()));
        }
        if !(w[1].time() > w[0].time()) {
            return Err(HarnessError::InconsistentSeries(format!(
                "times not increasing: {} then {}",
                w[0].time(),
                w[1].time()
            )));
        }
    }
    Ok(())
}

fn energy_section(report: &mut RunReport, snapshots: &[ScalarField], alpha: f64) -> Result<(), HarnessError> {
    let levels = energy_levels(&snapshots[0]);
    let audit = audit_energy(snapshots, &levels, alpha)?;
    let monotone = check_l2_monotone(&audit.ledger);
    report.checks.push(CheckOutcome::new(
        "l2_monotone",
        monotone.pass,
        format!("max relative increase {:.3e}", monotone.max_relative_increase),
    ));
    let failing = audit.levels.iter().filter(|l| !l.pass).count();
    report.checks.push(CheckOutcome::new(
        "energy_audit",
        audit.pass,
        format!("{failing} of {} levels violate the budget", audit.levels.len()),
    ));
    let t_last = *audit.ledger.times.last().unwrap_or(&0.0);
    let l2_initial = snapshots[0].l2_norm();
    let linf = if t_last >= 2.0 * LINF_WINDOW_START {
        match check_linf_decay(&audit.ledger, l2_initial, alpha, LINF_WINDOW_START, t_last) {
            Ok(fit) => {
                // One run only bounds its own constant; the slope limit is an
                // ensemble property and is reported, not enforced, here.
                report.checks.push(CheckOutcome::new(
                    "linf_decay",
                    fit.constant.is_finite(),
                    format!(
                        "constant {:.4e}, slope {:?} (ensemble limit {:.3}, {})",
                        fit.constant,
                        fit.slope,
                        fit.slope_limit,
                        if fit.pass { "met" } else { "not met" }
                    ),
                ));
                Some(fit)
            }
            Err(e) => {
                report.checks.push(CheckOutcome::skipped("linf_decay", e.to_string()));
                None
            }
        }
    } else {
        report.checks.push(CheckOutcome::skipped(
            "linf_decay",
            format!("series ends at t = {t_last}"),
        ));
        None
    };
    report.energy = Some(EnergySection {
        ledger: audit.ledger,
        monotone,
        audit: audit.levels,
        linf,
    });
    Ok(())
}

fn tail_section(report: &mut RunReport, snapshots: &[ScalarField], alpha: f64) -> Result<(), HarnessError> {
    let center = [0.0, 0.0];
    let l2_initial = snapshots[0].l2_norm();
    let Some(cal) = snapshots
        .iter()
        .find(|s| s.time() >= TAIL_CALIBRATION_TIME * (1.0 - 1e-12))
    else {
        report.checks.push(CheckOutcome::skipped(
            "tail",
            format!("no snapshot at t >= {TAIL_CALIBRATION_TIME}"),
        ));
        return Ok(());
    };
    let constant = calibrate_tail_constant(cal, center, l2_initial)?;
    let checked: Vec<ScalarField> = snapshots.iter().filter(|s| s.time() >= cal.time()).cloned().collect();
    let estimates = tail_estimates(&checked, center, l2_initial, alpha, constant)?;
    let failing = estimates.iter().filter(|e| !e.pass).count();
    report.checks.push(CheckOutcome::new(
        "tail",
        failing == 0,
        format!(
            "C = {constant:.4e} at t = {}; {failing} of {} snapshots exceed the bounds",
            cal.time(),
            estimates.len()
        ),
    ));
    report.tail = Some(TailSection {
        calibration_time: cal.time(),
        constant,
        estimates,
    });
    Ok(())
}

fn spectral_history(snapshots: &[ScalarField], alpha: f64) -> Result<SpectralHistory, HarnessError> {
    let mut history = SpectralHistory::new(*snapshots[0].grid(), 1e-12);
    for s in snapshots {
        let solver = Solver::new(s, SolverConfig::new(alpha, 1e-3, s.time() + 1.0))?;
        history.push(s.time(), &forward_transform(s)?, &solver.time_derivative());
    }
    Ok(history)
}

fn oscillation_section(
    report: &mut RunReport,
    snapshots: &[ScalarField],
    config: &RunConfig,
) -> Result<(), HarnessError> {
    let wants_osc = config.diagnostics.contains(&Diagnostic::Oscillation);
    let wants_constants = config.diagnostics.contains(&Diagnostic::Constants);
    if snapshots.len() < 2 {
        for (on, name) in [(wants_osc, "oscillation"), (wants_constants, "constants")] {
            if on {
                report
                    .checks
                    .push(CheckOutcome::skipped(name, "needs at least two snapshots".into()));
            }
        }
        return Ok(());
    }
    let history = Arc::new(spectral_history(snapshots, config.alpha)?);
    let t_end = snapshots.last().map(|s| s.time()).unwrap_or(0.0);
    let iter = IterationConfig::new(config.alpha, t_end, config.iteration_steps.max(1));
    let suite = match run_iteration_suite(history, &iter) {
        Ok(s) => s,
        Err(e) => {
            for (on, name) in [(wants_osc, "oscillation"), (wants_constants, "constants")] {
                if on {
                    report.checks.push(CheckOutcome::new(name, false, e.to_string()));
                }
            }
            return Ok(());
        }
    };
    if wants_osc {
        let detail = match (&suite.failure, suite.fitted_exponent) {
            (Some(f), _) => format!("step {}: {}", f.k, f.reason),
            (None, Some(d)) => format!("{} steps, fitted exponent {d:.4}", suite.records.len()),
            (None, None) if suite.degenerate => "zero oscillation".into(),
            (None, None) => "no exponent fitted".into(),
        };
        report
            .checks
            .push(CheckOutcome::new("oscillation", suite.success(), detail));
    }
    if wants_constants {
        let ledger = suite.ledger.clone();
        let pass = suite.degenerate || ledger.feasible();
        report.checks.push(CheckOutcome::new(
            "constants",
            pass,
            format!("rho = {:?}, delta = {:?}", ledger.rho, ledger.delta),
        ));
        report.constants = Some(ledger);
    }
    if wants_osc {
        report.oscillation = Some(suite);
    }
    Ok(())
}

/// Run every enabled diagnostic on a snapshot series (first snapshot is
/// `θ₀`). Diagnostics that need more data than the series holds are
/// reported as skipped.
pub fn diagnose(snapshots: &[ScalarField], config: &RunConfig) -> Result<RunReport, HarnessError> {
    let mut report = RunReport::new(config);
    if config.diagnostics.is_empty() {
        return Ok(report);
    }
    check_series(snapshots)?;
    let alpha = config.alpha;
    for d in &config.diagnostics {
        match d {
            Diagnostic::Energy => report.time("energy", |r| energy_section(r, snapshots, alpha))?,
            Diagnostic::Tail => report.time("tail", |r| tail_section(r, snapshots, alpha))?,
            Diagnostic::Extension => report.time("extension", |r| -> Result<(), HarnessError> {
                let last = snapshots.last().expect("series checked non-empty");
                let check = dtn_check(last, 1.0 - alpha)?;
                r.checks.push(CheckOutcome::new(
                    "extension",
                    check.pass,
                    format!("relative error {:.3e} at t = {}", check.relative_error, last.time()),
                ));
                r.extension = Some(check);
                Ok(())
            })?,
            // Both come out of one suite run.
            Diagnostic::Oscillation => report.time("oscillation", |r| oscillation_section(r, snapshots, config))?,
            Diagnostic::Constants => {
                if !config.diagnostics.contains(&Diagnostic::Oscillation) {
                    report.time("constants", |r| oscillation_section(r, snapshots, config))?
                }
            }
        }
    }
    Ok(report)
}

pub struct Simulation {
    pub snapshots: Vec<ScalarField>,
    pub checkpoints: Vec<PathBuf>,
    pub report: RunReport,
}

fn checkpoint_name(index: usize) -> String {
    format!("snapshot_{index:05}.sqgd")
}

/// Snapshot files in `dir`, sorted by name.
pub fn checkpoint_paths(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sqgd"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Read checkpoints, requiring a common grid and `α`.
pub fn load_checkpoints(paths: &[PathBuf]) -> Result<(Vec<ScalarField>, f64), HarnessError> {
    let mut fields = Vec::with_capacity(paths.len());
    let mut alpha = None;
    for p in paths {
        let cp = read_checkpoint(p).map_err(|source| HarnessError::Checkpoint {
            path: p.clone(),
            source,
        })?;
        match alpha {
            None => alpha = Some(cp.alpha),
            Some(a) if a != cp.alpha => {
                return Err(HarnessError::InconsistentSeries(format!(
                    "{} has alpha {}, expected {a}",
                    p.display(),
                    cp.alpha
                )))
            }
            _ => {}
        }
        fields.push(cp.field);
    }
    let alpha = alpha.ok_or_else(|| HarnessError::InconsistentSeries("no checkpoints".into()))?;
    check_series(&fields)?;
    Ok((fields, alpha))
}

fn write_outputs(dir: &Path, report: &RunReport, snapshots: &[ScalarField]) -> Result<(), HarnessError> {
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    let mut csv = String::from("t,l2,linf\n");
    for s in snapshots {
        csv.push_str(&format!("{:?},{:?},{:?}\n", s.time(), s.l2_norm(), s.max_abs()));
    }
    std::fs::write(dir.join("timeseries.csv"), csv)?;
    Ok(())
}

/// Evolve, write `snapshot_NNNNN.sqgd` every `snapshot_interval` (and at
/// `t_end`), then diagnose and write `report.json` and `timeseries.csv`.
pub fn simulate(config: &RunConfig) -> Result<Simulation, HarnessError> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let initial = initial_field(&config.initial_condition, config.n, config.seed)?;
    let solver_config = SolverConfig::new(config.alpha, config.dt, config.t_end);
    let mut snapshots = vec![initial.clone()];
    let mut checkpoints = Vec::new();
    let write = |field: &ScalarField, checkpoints: &mut Vec<PathBuf>| -> Result<(), HarnessError> {
        let path = dir.join(checkpoint_name(checkpoints.len()));
        write_checkpoint(&path, config.alpha, field).map_err(|source| HarnessError::Checkpoint {
            path: path.clone(),
            source,
        })?;
        checkpoints.push(path);
        Ok(())
    };
    write(&initial, &mut checkpoints)?;
    if config.t_end > 0.0 {
        let mut solver = Solver::new(&initial, solver_config.clone())?;
        let (_, dt) = solver_config.steps_for(config.t_end);
        let every = ((config.snapshot_interval / dt).round() as usize).max(1);
        let mut pending: Result<(), HarnessError> = Ok(());
        let outcome = solver.run(config.t_end, every, |s| {
            let field = s.state()?;
            if pending.is_ok() {
                pending = write(&field, &mut checkpoints);
            }
            snapshots.push(field);
            Ok(())
        });
        pending?;
        if let Err(source) = outcome {
            let mut report = RunReport::new(config);
            report
                .checks
                .push(CheckOutcome::new("solver", false, source.to_string()));
            report.timings.push(Timing {
                name: "simulate".into(),
                seconds: start.elapsed().as_secs_f64(),
            });
            write_outputs(dir, &report, &snapshots)?;
            return Err(HarnessError::Aborted {
                report: Box::new(report),
                source,
            });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = diagnose(&snapshots, config)?;
    report.timings.insert(
        0,
        Timing {
            name: "simulate".into(),
            seconds: elapsed,
        },
    );
    write_outputs(dir, &report, &snapshots)?;
    Ok(Simulation {
        snapshots,
        checkpoints,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::InitialCondition;

    fn config(dir: &Path) -> RunConfig {
        RunConfig {
            n: 32,
            alpha: 1.0,
            dt: 1e-2,
            t_end: 0.5,
            snapshot_interval: 0.1,
            output_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn single_mode_decays_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let sim = simulate(&config(dir.path())).unwrap();
        assert_eq!(sim.checkpoints.len(), 6);
        let last = sim.snapshots.last().unwrap();
        let exact = ScalarField::from_fn(*last.grid(), 0.5, |x| (-0.5f64).exp() * x[0].sin()).unwrap();
        assert!(last.axpby(1.0, &exact, -1.0).unwrap().max_abs() < 1e-6);
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn zero_end_time_writes_initial_condition() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.t_end = 0.0;
        cfg.initial_condition = InitialCondition::RandomBandLimited {
            k_min: 2.0,
            k_max: 6.0,
            amplitude: 1.0,
        };
        let sim = simulate(&cfg).unwrap();
        assert_eq!(sim.checkpoints.len(), 1);
        let ic = initial_field(&cfg.initial_condition, 32, cfg.seed).unwrap();
        assert_eq!(read_checkpoint(&sim.checkpoints[0]).unwrap().field, ic);
    }

    #[test]
    fn empty_toggles_echo_config_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let report = diagnose(&[], &cfg).unwrap();
        assert!(report.checks.is_empty() && report.passed());
        assert_eq!(RunConfig::parse(&report.config_text).unwrap(), cfg);
    }

    #[test]
    fn out_of_order_series_rejected() {
        let grid = crate::spectral::Grid::periodic(16).unwrap();
        let a = ScalarField::zeros(grid, 1.0);
        let b = ScalarField::zeros(grid, 0.5);
        let mut cfg = RunConfig::default();
        cfg.diagnostics.insert(Diagnostic::Energy);
        assert!(matches!(
            diagnose(&[a, b], &cfg),
            Err(HarnessError::InconsistentSeries(_))
        ));
    }
}
