use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use uj_core::acceptance;
use uj_core::bell::{box_chsh, chsh, optimal_settings, smeared_chsh, Settings};
use uj_core::decompose::{compress_sector, neumark_dilate, two_projector_blocks};
use uj_core::io;
use uj_core::joint::{
    jointly_measurable, lambda_opt_search, OracleSettings, PairSource, Route, SearchSettings, Verdict,
};
use uj_core::operators::{DensityMatrix, DichotomicObservable, Projector};
use uj_core::unsharp::{smear, UnsharpParam};
use uj_core::{Error, Result};

const SCHEMA: &str = "uj/1";

#[derive(Parser)]
#[command(name = "uj", version, about = "Joint measurability of unsharp observables and CHSH bounds")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    WorstCase,
    Pair,
}

#[derive(Subcommand)]
enum Command {
    /// Smear an observable.
    Smear {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        lambda: f64,
    },
    /// Two-projector block decomposition.
    Blocks {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Neumark dilation of an observable.
    Dilate {
        #[arg(long)]
        obs: PathBuf,
    },
    /// Decide joint measurability of two smeared observables.
    JointlyMeasurable {
        #[arg(long)]
        o1: PathBuf,
        #[arg(long)]
        o2: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Use the numerical oracle instead of the constructive route.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Exit with status 2 unless the verdict is feasible.
        #[arg(long)]
        expect_feasible: bool,
    },
    /// Largest unsharpness keeping a pair (or every qubit pair) jointly measurable.
    LambdaOpt {
        #[arg(long, value_enum, default_value = "worst-case")]
        mode: Mode,
        #[arg(long)]
        o1: Option<PathBuf>,
        #[arg(long)]
        o2: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        mesh: usize,
        #[arg(long, default_value_t = acceptance::SEED)]
        seed: u64,
    },
    /// CHSH value of a state, optionally with Alice's observables smeared.
    Chsh {
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// CHSH value of a no-signaling box.
    BoxChsh {
        #[arg(long = "box")]
        table: PathBuf,
    },
    /// CSV of feasibility and smeared CHSH over a lambda grid.
    Sweep {
        #[arg(long)]
        o1: PathBuf,
        #[arg(long)]
        o2: PathBuf,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        start: f64,
        #[arg(long, default_value_t = 0.9)]
        stop: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Run the acceptance criteria.
    Acceptance {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

enum Report {
    Json(Value),
    Csv(String),
}

struct Outcome {
    report: Report,
    status: u8,
}

impl Outcome {
    fn json(v: impl Serialize) -> Result<Self> {
        Ok(Self {
            report: Report::Json(tagged(v)?),
            status: 0,
        })
    }
}

fn tagged(v: impl Serialize) -> Result<Value> {
    let mut v = serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    match v.as_object_mut() {
        Some(map) => {
            map.insert("schema".into(), Value::from(SCHEMA));
            Ok(v)
        }
        None => Ok(json!({ "schema": SCHEMA, "value": v })),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-2).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} outside [1e-12, 1e-2]")));
    }
    Ok(())
}

fn observable(path: &Path) -> Result<DichotomicObservable> {
    io::observable_from_value(&io::read_value(path)?).map_err(|e| with_path(path, e))
}

fn projector(path: &Path) -> Result<Projector> {
    Projector::new(io::operator_from_value(&io::read_value(path)?).map_err(|e| with_path(path, e))?)
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn state_and_settings(state: Option<&Path>, settings: Option<&Path>) -> Result<(DensityMatrix, Settings)> {
    let rho = match state {
        Some(p) => io::state_from_value(&io::read_value(p)?).map_err(|e| with_path(p, e))?,
        None => DensityMatrix::singlet(),
    };
    let s = match settings {
        Some(p) => io::settings_from_value(&io::read_value(p)?).map_err(|e| with_path(p, e))?,
        None => optimal_settings(),
    };
    Ok((rho, s))
}

/// Fifteen significant digits, fixed notation.
fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    let decimals = (14 - e).max(0) as usize;
    format!("{x:.decimals$}")
}

fn sweep_csv(
    o1: &DichotomicObservable,
    o2: &DichotomicObservable,
    rho: &DensityMatrix,
    settings: &Settings,
    (start, stop, step): (f64, f64, f64),
) -> Result<String> {
    if !(step > 0.0) || !(start <= stop) {
        return Err(Error::InvalidArgument("grid needs start <= stop and step > 0".into()));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| start + step * k as f64).collect();
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&l| {
            let lam = UnsharpParam::new(l)?;
            let verdict = jointly_measurable(o1, o2, lam, Route::Auto)?.feasible;
            let value = smeared_chsh(rho, settings, lam)?.value;
            let verdict = serde_json::to_value(verdict).map_err(|e| Error::Parse(e.to_string()))?;
            Ok(format!(
                "{},{},{},{}",
                sig15(l),
                verdict.as_str().unwrap_or_default(),
                sig15(value),
                sig15(2.0 / l)
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = String::from("lambda,feasible,smeared_chsh,bound\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Smear { obs, lambda } => {
            let lam = UnsharpParam::new(lambda)?;
            let s = smear(&observable(&obs)?, lam);
            Outcome::json(json!({ "lambda": lambda, "yes": s.yes().matrix(), "no": s.no().matrix() }))
        }
        Command::Blocks { p, q } => {
            let (p, q) = (projector(&p)?, projector(&q)?);
            let dec = two_projector_blocks(&p, &q)?;
            let residuals = dec.residuals(&p, &q);
            Outcome::json(json!({ "decomposition": dec, "residuals": residuals }))
        }
        Command::Dilate { obs } => {
            let o = observable(&obs)?;
            let d = neumark_dilate(&o);
            let back = compress_sector(d.projector.matrix(), 0)?;
            Outcome::json(json!({
                "projector": d.projector.matrix(),
                "convention": d.convention,
                "compression_residual": back.max_abs_diff(o.yes().matrix()),
            }))
        }
        Command::JointlyMeasurable {
            o1,
            o2,
            lambda,
            oracle,
            max_iter,
            tol,
            expect_feasible,
        } => {
            check_tol(tol)?;
            let lam = UnsharpParam::new(lambda)?;
            let route = if oracle {
                Route::Oracle(OracleSettings { max_iter, tol })
            } else {
                Route::Auto
            };
            let r = jointly_measurable(&observable(&o1)?, &observable(&o2)?, lam, route)?;
            let status = u8::from(expect_feasible && r.feasible != Verdict::Feasible) * 2;
            Ok(Outcome {
                report: Report::Json(tagged(&r)?),
                status,
            })
        }
        Command::LambdaOpt {
            mode,
            o1,
            o2,
            tol,
            mesh,
            seed,
        } => {
            check_tol(tol)?;
            let source = match mode {
                Mode::WorstCase => PairSource::WorstCase { mesh, seed },
                Mode::Pair => {
                    let (Some(o1), Some(o2)) = (o1, o2) else {
                        return Err(Error::InvalidArgument("--mode pair needs --o1 and --o2".into()));
                    };
                    let (a, b) = (observable(&o1)?, observable(&o2)?);
                    match (Projector::from_observable(&a), Projector::from_observable(&b)) {
                        (Some(p), Some(q)) => PairSource::Projectors(p, q),
                        _ => PairSource::Povm(a, b),
                    }
                }
            };
            let r = lambda_opt_search(&source, &SearchSettings::new(tol))?;
            Outcome::json(json!({
                "lambda_opt": r.lambda_opt,
                "reference": FRAC_1_SQRT_2,
                "search": r,
            }))
        }
        Command::Chsh { state, settings, lambda } => {
            let (rho, s) = state_and_settings(state.as_deref(), settings.as_deref())?;
            let r = match lambda {
                Some(l) => smeared_chsh(&rho, &s, UnsharpParam::new(l)?)?,
                None => chsh(&rho, &s)?,
            };
            Outcome::json(r)
        }
        Command::BoxChsh { table } => {
            let b = io::box_from_value(&io::read_value(&table)?).map_err(|e| with_path(&table, e))?;
            Outcome::json(json!({
                "report": box_chsh(&b),
                "signaling_residual": b.signaling_residual(),
                "exact_input": b.is_exact(),
            }))
        }
        Command::Sweep {
            o1,
            o2,
            state,
            settings,
            start,
            stop,
            step,
        } => {
            let (rho, s) = state_and_settings(state.as_deref(), settings.as_deref())?;
            let csv = sweep_csv(&observable(&o1)?, &observable(&o2)?, &rho, &s, (start, stop, step))?;
            Ok(Outcome {
                report: Report::Csv(csv),
                status: 0,
            })
        }
        Command::Acceptance { only } => {
            let results = match only {
                Some(id) => vec![acceptance::run(id).ok_or_else(|| {
                    Error::InvalidArgument(format!("no acceptance criterion {id}"))
                })?],
                None => acceptance::run_all(),
            };
            for r in &results {
                eprintln!("{}", r.line());
            }
            let failed = results.iter().any(|r| !r.passed);
            Ok(Outcome {
                report: Report::Json(tagged(json!({ "criteria": results, "passed": !failed }))?),
                status: u8::from(failed),
            })
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("UJ_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("UJ_THREADS={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn write(out: Option<&Path>, report: &Report) -> Result<()> {
    let text = match report {
        Report::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            s
        }
        Report::Csv(s) => s.clone(),
    };
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| run(cli.command)).and_then(|o| {
        write(cli.out.as_deref(), &o.report)?;
        Ok(o.status)
    });
    match result {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
