use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use sqg_core::constants::ConstantLedger;
use sqg_core::degiorgi::{
    calibrate_isoperimetric, constants_by_radius, isoperimetric_check, random_family, HalfBall, WeightedRegion,
};
use sqg_core::extension::{calibrate_dtn, dtn_check};
use sqg_core::harness::{
    checkpoint_paths, diagnose, energy_levels, load_checkpoints, random_band_limited, simulate, HarnessError,
    RunConfig, RunReport,
};
use sqg_core::seed;
use sqg_core::solver::audit_energy;
use sqg_core::spectral::Grid;

#[derive(Parser)]
#[command(name = "sqg", version, about = "Dissipative SQG solver and regularity diagnostics")]
struct Cli {
    /// Run configuration file (flat `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial condition, write checkpoints and a report.
    Simulate,
    /// Run the configured diagnostics on a checkpoint series.
    Diagnose {
        /// Checkpoints in time order (default: every `.sqgd` file in the output directory).
        checkpoints: Vec<PathBuf>,
    },
    /// Select ρ and δ and check the closing inequality.
    Constants {
        #[arg(long, default_value_t = 0.0)]
        l: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Compare the weighted Neumann trace with the spectral operator.
    ExtensionCheck {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.05, 0.1])]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        fields: usize,
    },
    /// Calibrate and check the weighted isoperimetric inequality.
    Isoperimetric {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1])]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        #[arg(long, default_value_t = 24)]
        grid: usize,
    },
    /// Level-set energy audit of a checkpoint series.
    EnergyAudit { checkpoints: Vec<PathBuf> },
}

struct Outcome {
    json: Value,
    csv: String,
    pass: bool,
}

fn colour() -> bool {
    std::env::var_os("SQG_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

fn status_line(pass: bool) {
    let (word, code) = if pass { ("PASS", "32") } else { ("FAIL", "31") };
    if colour() {
        eprintln!("\x1b[{code}m{word}\x1b[0m");
    } else {
        eprintln!("{word}");
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn series_paths(cfg: &RunConfig, given: &[PathBuf]) -> Result<Vec<PathBuf>, HarnessError> {
    if given.is_empty() {
        checkpoint_paths(&cfg.output_dir)
    } else {
        Ok(given.to_vec())
    }
}

fn report_outcome(report: &RunReport) -> Result<Outcome, HarnessError> {
    let mut csv = String::from("check,status,detail\n");
    for c in &report.checks {
        let status = serde_json::to_value(c.status)?;
        csv.push_str(&format!(
            "{},{},\"{}\"\n",
            c.name,
            status.as_str().unwrap_or(""),
            c.detail.replace('"', "'")
        ));
    }
    Ok(Outcome {
        json: serde_json::to_value(report)?,
        csv,
        pass: report.passed(),
    })
}

fn run(cli: &Cli) -> Result<Outcome, HarnessError> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let sim = simulate(&cfg)?;
            report_outcome(&sim.report)
        }
        Command::Diagnose { checkpoints } => {
            let mut cfg = load_config(cli)?;
            let (fields, alpha) = load_checkpoints(&series_paths(&cfg, checkpoints)?)?;
            cfg.alpha = alpha;
            report_outcome(&diagnose(&fields, &cfg)?)
        }
        Command::Constants { l, c, m, alpha, eta } => {
            let ledger = ConstantLedger::solve(1.0 - alpha, *l, *c, *m, *eta)
                .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            let json = serde_json::to_value(&ledger)?;
            let mut csv = String::from("key,value\n");
            if let Value::Object(map) = &json {
                for (k, v) in map {
                    csv.push_str(&format!("{k},\"{}\"\n", v.to_string().replace('"', "'")));
                }
            }
            Ok(Outcome {
                json,
                csv,
                pass: ledger.feasible(),
            })
        }
        Command::ExtensionCheck { epsilon, n, fields } => {
            let grid = Grid::periodic(*n)?;
            let master = load_config(cli)?.seed;
            let mut rows = Vec::new();
            let mut csv = String::from("epsilon,kind,index,value,pass\n");
            let mut pass = true;
            for &eps in epsilon {
                let cal = calibrate_dtn(eps, &[1, 2, 4, 8], (*n).max(64))?;
                let spread_ok = cal.spread <= 0.005;
                pass &= spread_ok;
                csv.push_str(&format!("{eps},mode_spread,0,{:e},{spread_ok}\n", cal.spread));
                let mut errors = Vec::new();
                for i in 0..*fields {
                    let mut rng = seed::rng(master, "extension-check", i as u64);
                    let theta = random_band_limited(grid, 1.0, (*n / 8) as f64, 1.0, &mut rng)?;
                    let check = dtn_check(&theta, eps)?;
                    pass &= check.pass;
                    csv.push_str(&format!(
                        "{eps},relative_error,{i},{:e},{}\n",
                        check.relative_error, check.pass
                    ));
                    errors.push(check.relative_error);
                }
                rows.push(json!({ "epsilon": eps, "calibration": cal, "relative_errors": errors }));
            }
            Ok(Outcome {
                json: json!({ "checks": rows, "pass": pass }),
                csv,
                pass,
            })
        }
        Command::Isoperimetric {
            epsilon,
            count,
            samples,
            grid,
        } => {
            let master = load_config(cli)?.seed;
            let calibration_family = random_family(seed::derive(master, "isoperimetric-cli", 0), *count, *grid);
            let cal = calibrate_isoperimetric(&calibration_family, epsilon, *samples, master, 1.5)?;
            let by_radius = constants_by_radius(&calibration_family, &[0.5, 1.0], epsilon, *samples, master, 1.5)?;
            let family = random_family(seed::derive(master, "isoperimetric-cli", 1), *count, *grid);
            let mut csv = String::from("epsilon,index,lhs,rhs,sigma,pass\n");
            let mut failures = 0usize;
            for &eps in epsilon {
                for (i, w) in family.iter().enumerate() {
                    let mc = WeightedRegion::new(
                        HalfBall::B1Star,
                        eps,
                        *samples,
                        seed::derive(master, "isoperimetric-check", i as u64),
                    );
                    let r = isoperimetric_check(w, cal.constant, &mc)?;
                    failures += usize::from(!r.pass);
                    csv.push_str(&format!("{eps},{i},{:e},{:e},{:e},{}\n", r.lhs, r.rhs, r.sigma, r.pass));
                }
            }
            Ok(Outcome {
                json: json!({
                    "constant": cal.constant,
                    "max_ratio": cal.max_ratio,
                    "constants_by_radius": by_radius,
                    "failures": failures,
                    "checked": family.len() * epsilon.len(),
                }),
                csv,
                pass: failures == 0,
            })
        }
        Command::EnergyAudit { checkpoints } => {
            let cfg = load_config(cli)?;
            let (fields, alpha) = load_checkpoints(&series_paths(&cfg, checkpoints)?)?;
            let levels = energy_levels(&fields[0]);
            let audit = audit_energy(&fields, &levels, alpha)?;
            let mut csv = String::from("level,pairs,violations,worst_excess,pass\n");
            for l in &audit.levels {
                csv.push_str(&format!(
                    "{:e},{},{},{:e},{}\n",
                    l.level, l.pairs_checked, l.violation_count, l.worst_excess, l.pass
                ));
            }
            Ok(Outcome {
                json: serde_json::to_value(&audit)?,
                csv,
                pass: audit.pass,
            })
        }
    }
}

fn write_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn emit(outcome: &Outcome, format: Format) {
    match format {
        Format::Json => write_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&outcome.json).unwrap_or_default()
        )),
        Format::Csv => write_stdout(&outcome.csv),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(outcome) => {
            emit(&outcome, cli.format);
            status_line(outcome.pass);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(HarnessError::Aborted { report, source }) => {
            if let Ok(o) = report_outcome(&report) {
                emit(&o, cli.format);
            }
            eprintln!("error: run aborted: {source}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(2)
        }
    }
}
