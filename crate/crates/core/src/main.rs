use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use focusqm::inference::{brute_force_best_equivariant, is_equivariant, LossFunction, Probability};
use focusqm::io::{inference_model_from_json, Model};
use focusqm::report::{Check, ScenarioReport, Table};
use focusqm::scenarios::{run_scenario, verify_model, Settings, SCENARIOS};

#[derive(Parser)]
#[command(name = "focusqm", version, about = "Checks and scenarios for quantum models built from group actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override every floating-point tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock runtime in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check group, action, measure and parameters of a model file.
    Verify { model: PathBuf },
    /// Run a named scenario, or `all`.
    Run {
        scenario: String,
        /// Scenario-specific JSON config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Pitman estimator and equivariant risks for a finite inference model.
    Infer {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Loss::SquaredCyclic)]
        loss: Loss,
    },
    /// List scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    ZeroOne,
    SquaredCyclic,
}

/// Unreadable or invalid input; exit code 2.
struct InputError(String);

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn infer(path: &Path, loss: Loss, settings: &Settings) -> Result<ScenarioReport, InputError> {
    let model = inference_model_from_json(&read(path)?).map_err(|e| InputError(e.to_string()))?;
    let n = model.thetas();
    let loss = match loss {
        Loss::ZeroOne => LossFunction::zero_one(n),
        Loss::SquaredCyclic => LossFunction::squared_cyclic(n),
    };
    let best = brute_force_best_equivariant(&model, &loss).map_err(|e| InputError(e.to_string()))?;
    let mut r = ScenarioReport::new("infer", settings.seed);
    r.check(Check::holds("pitman_equivariant", is_equivariant(&best.pitman, &model).is_ok()));
    r.check(Check::within("pitman_risk_vs_best", best.pitman_risk.to_f64(), best.best_risk.to_f64(), 0.0));
    r.check(Check::holds("pitman_risk_equals_best_exactly", best.pitman_is_optimal));
    r.note(format!("loss {}, pitman risk {}", loss.name, best.pitman_risk));
    let mut est = Table::new("pitman_estimator", &["y", "estimate"]);
    for (y, t) in best.pitman.0.iter().enumerate() {
        est.push(vec![y.to_string(), t.to_string()]);
    }
    let mut risks = Table::new("risk", &["reference_value", "theta", "risk"]);
    for c in &best.candidates {
        for (t, x) in c.risks.iter().enumerate() {
            risks.push(vec![c.reference_value.to_string(), t.to_string(), x.to_string()]);
        }
    }
    r.table(est);
    r.table(risks);
    Ok(r)
}

fn timed(timing: bool, f: impl FnOnce() -> Result<ScenarioReport, InputError>) -> Result<ScenarioReport, InputError> {
    let start = Instant::now();
    let mut r = f()?;
    if timing {
        r.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(r)
}

fn emit(reports: &[ScenarioReport], cli: &Cli) -> Result<(), InputError> {
    let write = |path: &Path, text: &str| fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())));
    let text = match cli.format {
        Format::Json if reports.len() == 1 => reports[0].to_json(),
        Format::Json => serde_json::to_string_pretty(reports).expect("reports serialize"),
        Format::Csv => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                let csv = r.checks_csv();
                // one header for the concatenation
                out.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
            }
            out
        }
    };
    match &cli.output {
        None => print!("{text}"),
        Some(path) => {
            write(path, &text)?;
            if let Format::Csv = cli.format {
                let stem = path.with_extension("");
                for r in reports {
                    for t in &r.tables {
                        let name = format!("{}.{}.{}.csv", stem.display(), r.scenario, t.name);
                        write(Path::new(&name), &t.to_csv())?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, InputError> {
    let settings = Settings {
        seed: cli.seed,
        tol: cli.tol,
    };
    let reports = match &cli.command {
        Command::List => {
            for (name, about) in SCENARIOS {
                println!("{name:<12} {about}");
            }
            return Ok(true);
        }
        Command::Verify { model } => {
            let text = read(model)?;
            let model = Model::from_json(&text).map_err(|e| InputError(e.to_string()))?;
            vec![timed(cli.timing, || Ok(verify_model(&model, &settings)))?]
        }
        Command::Infer { model, loss } => vec![timed(cli.timing, || infer(model, *loss, &settings))?],
        Command::Run { scenario, config } => {
            let config: Option<Value> = match config {
                Some(path) => Some(serde_json::from_str(&read(path)?).map_err(|e| InputError(format!("config: {e}")))?),
                None => None,
            };
            let names: Vec<&str> = if scenario == "all" {
                if config.is_some() {
                    return Err(InputError("--config applies to a single scenario".into()));
                }
                SCENARIOS.iter().map(|(n, _)| *n).collect()
            } else {
                vec![scenario.as_str()]
            };
            names
                .into_iter()
                .map(|name| {
                    timed(cli.timing, || {
                        run_scenario(name, config.as_ref(), &settings).map_err(|e| InputError(e.to_string()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    emit(&reports, cli)?;
    for r in &reports {
        for c in r.failures() {
            eprintln!("FAIL {}: {} measured {} expected {} tol {}", r.scenario, c.name, c.measured, c.expected, c.tolerance);
        }
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
