use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use shadowlp::bounds::{BoundInputs, BoundReport};
use shadowlp::census::{discretized_shadow, exact_shadow, BoundaryPolicy, CensusError};
use shadowlp::experiment::{run_experiment, summarize, write_csv, ExperimentOptions};
use shadowlp::random::parse_seed;
use shadowlp::{
    perturb, read_lp, two_phase_solve, write_lp, InterpolationObjective, LinearProgram,
    PerturbationSpec, RngStream, Status,
};

const EXIT_ERROR: u8 = 1;
const EXIT_TOO_LARGE: u8 = 2;
const EXIT_UNBOUNDED: u8 = 10;
const EXIT_INFEASIBLE: u8 = 11;

#[derive(Parser)]
#[command(
    name = "shadowlp",
    version,
    about = "Shadow-vertex LP solver and smoothed-analysis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with the two-phase shadow-vertex method.
    Solve {
        path: PathBuf,
        #[arg(long, default_value = "0", value_parser = seed_arg)]
        seed: u64,
    },
    /// Run seeded perturbation trials and print one CSV row per trial.
    Experiment {
        path: PathBuf,
        #[arg(long = "sigma", required = true)]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value = "0", value_parser = seed_arg)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-sigma summary (JSON) here instead of stderr.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Fill the wall_nanos column (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
        /// Fill the shadow_exact column.
        #[arg(long)]
        shadow: bool,
    },
    /// Count the shadow of the plane spanned by t and z.
    Shadow {
        path: PathBuf,
        /// `rand:<seed>` or comma-separated coordinates.
        #[arg(long, default_value = "rand:0")]
        t: String,
        /// Same format as --t; defaults to the instance objective.
        #[arg(long)]
        z: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Grid size for the discretized mode.
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        /// Count cones touching the plane only along a ray instead of failing.
        #[arg(long)]
        closed: bool,
    },
    /// Evaluate the smoothed bounds.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        sigma: f64,
    },
    /// Write a Gaussian perturbation of an instance.
    Perturb {
        path: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value = "0", value_parser = seed_arg)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Discretized,
}

fn seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn load(path: &Path) -> Result<LinearProgram> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_lp(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn print_json(text: String) -> Result<()> {
    emit(None, format!("{text}\n").as_bytes())
}

fn vector_spec(spec: &str, d: usize) -> Result<Vec<f64>> {
    if let Some(seed) = spec.strip_prefix("rand:") {
        let seed = parse_seed(seed).with_context(|| format!("bad seed in {spec:?}"))?;
        let mut s = RngStream::new(seed, 0);
        return Ok((0..d).map(|_| s.standard_normal()).collect());
    }
    let v = spec
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad vector {spec:?}"))?;
    if v.len() != d {
        bail!("vector {spec:?} has {} entries, expected {d}", v.len());
    }
    Ok(v)
}

fn solve(path: &Path, seed: u64) -> Result<u8> {
    let lp = load(path)?;
    let mut stream = RngStream::new(seed, 0);
    let (result, trace) = two_phase_solve(&lp, &mut stream)?;
    print_json(serde_json::to_string_pretty(
        &json!({ "result": result, "trace": trace }),
    )?)?;
    Ok(match result.status() {
        Status::Optimal => 0,
        Status::Unbounded => EXIT_UNBOUNDED,
        Status::Infeasible => EXIT_INFEASIBLE,
    })
}

fn shadow(path: &Path, t: &str, z: Option<&str>, mode: Mode, m: usize, closed: bool) -> Result<u8> {
    let lp = load(path)?;
    let d = lp.d();
    let t = vector_spec(t, d)?;
    let z = match z {
        Some(spec) => vector_spec(spec, d)?,
        None => lp.z().to_vec(),
    };
    let plane = InterpolationObjective::new(t, z);
    let policy = if closed {
        BoundaryPolicy::Closed
    } else {
        BoundaryPolicy::Strict
    };
    let outcome = match mode {
        Mode::Exact => exact_shadow(&lp, &plane, policy).map(|s| (s.bases, Some(s.min_arc_width))),
        Mode::Discretized => {
            if m < 4 {
                bail!("--m must be at least 4");
            }
            discretized_shadow(&lp, &plane, m).map(|b| (b, None))
        }
    };
    let (bases, width) = match outcome {
        Ok(v) => v,
        Err(e @ CensusError::TooLarge(_)) => {
            eprintln!("error: {e}");
            return Ok(EXIT_TOO_LARGE);
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = json!({ "count": bases.len(), "bases": bases });
    if let Some(w) = width.filter(|w| w.is_finite()) {
        report["min_arc_width"] = json!(w);
    }
    print_json(serde_json::to_string_pretty(&report)?)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { path, seed } => solve(&path, seed),
        Command::Experiment {
            path,
            sigmas,
            trials,
            seed,
            threads,
            out,
            summary,
            timing,
            shadow,
        } => {
            let base = load(&path)?;
            let options = ExperimentOptions {
                threads,
                timing,
                shadow_exact: shadow,
            };
            let records = run_experiment(&base, &sigmas, trials, seed, &options)?;
            let mut csv = Vec::new();
            write_csv(&mut csv, &records)?;
            emit(out.as_deref(), &csv)?;
            let text = serde_json::to_string_pretty(&summarize(&records))?;
            match summary {
                Some(p) => {
                    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?
                }
                None => eprintln!("{text}"),
            }
            Ok(0)
        }
        Command::Shadow {
            path,
            t,
            z,
            mode,
            m,
            closed,
        } => shadow(&path, &t, z.as_deref(), mode, m, closed),
        Command::Bound { n, d, sigma } => {
            let b = BoundInputs::new(n, d, sigma)?;
            print_json(serde_json::to_string_pretty(&BoundReport::new(&b))?)?;
            Ok(0)
        }
        Command::Perturb {
            path,
            sigma,
            seed,
            out,
        } => {
            if !(sigma.is_finite() && sigma >= 0.0) {
                bail!("sigma must be finite and >= 0");
            }
            let base = load(&path)?;
            let lp = perturb(
                &base,
                &PerturbationSpec::new(sigma, &base),
                &mut RngStream::new(seed, 0),
            );
            emit(out.as_deref(), write_lp(&lp).as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
