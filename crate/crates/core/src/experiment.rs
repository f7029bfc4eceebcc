//! Seeded trial batches: perturb a base instance, solve it with the
//! two-phase method and record one row per `(sigma, trial)`.
//!
//! Trial `k` draws from the stream `RngStream::for_trial(seed, k)` at every
//! sigma, so the noise pattern is shared across sigmas and only its scale
//! changes. Rows are produced on a thread pool and gathered in order, which
//! keeps the output independent of the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{BoundInputs, BoundReport};
use crate::census::{exact_shadow, BoundaryPolicy};
use crate::lp::{fmt_f64, LinearProgram, SolveResult};
use crate::random::{perturb, PerturbationSpec, RngStream};
use crate::two_phase::{lp_plus_from_trace, two_phase_run, TwoPhaseTrace};

pub const CSV_HEADER: [&str; 14] = [
    "trial_index",
    "sigma",
    "seed",
    "n",
    "d",
    "status",
    "phase1_pivots",
    "phase2_pivots",
    "objective",
    "kappa",
    "M",
    "shadow_exact",
    "wall_nanos",
    "message",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("at least one sigma is required")]
    NoSigmas,
    #[error("sigma must be finite and >= 0 (got {0})")]
    InvalidSigma(f64),
    #[error("cannot build a thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExperimentOptions {
    /// Worker threads; `0` lets the pool decide.
    pub threads: usize,
    /// Fill `wall_nanos`. Off by default because timings differ between runs.
    pub timing: bool,
    /// Count the exact shadow of the phase-2 plane for every solved trial.
    pub shadow_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub sigma: f64,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    /// `OPTIMAL`, `UNBOUNDED`, `INFEASIBLE` or `ERROR`.
    pub status: String,
    pub phase1_pivots: Option<usize>,
    pub phase2_pivots: Option<usize>,
    pub objective: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub shadow_exact: Option<usize>,
    pub wall_nanos: Option<u128>,
    pub message: String,
}

impl TrialRecord {
    pub fn is_error(&self) -> bool {
        self.status == "ERROR"
    }

    /// Phase-1 plus phase-2 pivots, when the run got that far.
    pub fn total_pivots(&self) -> Option<usize> {
        match (self.phase1_pivots, self.phase2_pivots) {
            (Some(a), Some(b)) => Some(a + b),
            (Some(a), None) if self.status == "UNBOUNDED" => Some(a),
            _ => None,
        }
    }

    fn csv_fields(&self) -> [String; 14] {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        fn optf(v: Option<f64>) -> String {
            v.map(fmt_f64).unwrap_or_default()
        }
        [
            self.trial_index.to_string(),
            fmt_f64(self.sigma),
            self.seed.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            self.status.clone(),
            opt(self.phase1_pivots),
            opt(self.phase2_pivots),
            optf(self.objective),
            optf(self.kappa),
            optf(self.m),
            opt(self.shadow_exact),
            opt(self.wall_nanos),
            self.message.clone(),
        ]
    }
}

/// Runs one trial; never fails, errors become `ERROR` rows.
pub fn run_trial(
    base: &LinearProgram,
    sigma: f64,
    seed: u64,
    trial_index: usize,
    options: &ExperimentOptions,
) -> TrialRecord {
    let started = Instant::now();
    let mut record = TrialRecord {
        trial_index,
        sigma,
        seed,
        n: base.n(),
        d: base.d(),
        status: "ERROR".into(),
        phase1_pivots: None,
        phase2_pivots: None,
        objective: None,
        kappa: None,
        m: None,
        shadow_exact: None,
        wall_nanos: None,
        message: String::new(),
    };
    let mut stream = RngStream::for_trial(seed, trial_index as u64);
    let lp = perturb(base, &PerturbationSpec::new(sigma, base), &mut stream);
    let fill = |record: &mut TrialRecord, trace: &TwoPhaseTrace| {
        record.kappa = Some(trace.kappa);
        record.m = Some(trace.m);
    };
    match two_phase_run(&lp, &mut stream) {
        Ok(run) => {
            fill(&mut record, &run.trace);
            record.status = run.result.status().to_string();
            record.phase1_pivots = Some(run.trace.phase1_pivots);
            if run.phase2_path.is_some() {
                record.phase2_pivots = Some(run.trace.phase2_pivots);
            }
            if let SolveResult::Optimal { objective, .. } = run.result {
                record.objective = Some(objective);
            }
            if options.shadow_exact && run.phase2_path.is_some() {
                match phase2_shadow(&lp, &run.trace) {
                    Ok(count) => record.shadow_exact = Some(count),
                    Err(e) => record.message = format!("shadow: {e}"),
                }
            }
        }
        Err(e) => {
            if let Some(trace) = &e.trace {
                fill(&mut record, trace);
            }
            record.message = e.to_string();
        }
    }
    if options.timing {
        record.wall_nanos = Some(started.elapsed().as_nanos());
    }
    record
}

/// Exact shadow size of the plane phase 2 walks in.
pub fn phase2_shadow(lp: &LinearProgram, trace: &TwoPhaseTrace) -> Result<usize, String> {
    let lp_plus = lp_plus_from_trace(lp, trace).map_err(|e| e.to_string())?;
    exact_shadow(
        &lp_plus.normalized(),
        &lp_plus.census_plane(),
        BoundaryPolicy::Closed,
    )
    .map(|s| s.len())
    .map_err(|e| e.to_string())
}

/// Runs `trials` trials at every sigma; rows are ordered by sigma, then trial.
pub fn run_experiment(
    base: &LinearProgram,
    sigmas: &[f64],
    trials: usize,
    seed: u64,
    options: &ExperimentOptions,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    if sigmas.is_empty() {
        return Err(ExperimentError::NoSigmas);
    }
    if let Some(&s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(ExperimentError::InvalidSigma(s));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    let jobs: Vec<(f64, usize)> = sigmas
        .iter()
        .flat_map(|&s| (0..trials).map(move |k| (s, k)))
        .collect();
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(sigma, k)| run_trial(base, sigma, seed, k, options))
            .collect()
    }))
}

/// Writes records as CSV, header first.
pub fn write_csv<W: std::io::Write>(out: W, records: &[TrialRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub trials: usize,
    pub errors: usize,
    pub optimal: usize,
    pub unbounded: usize,
    pub infeasible: usize,
    pub mean_pivots: Option<f64>,
    pub median_pivots: Option<f64>,
    pub mean_phase1_pivots: Option<f64>,
    pub mean_phase2_pivots: Option<f64>,
    /// Absent when `(n, d)` lies outside the bounds' domain or `sigma = 0`.
    pub bounds: Option<BoundReport>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[h]
    } else {
        0.5 * (s[h - 1] + s[h])
    })
}

/// Per-sigma aggregates, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<SigmaSummary> {
    let mut sigmas: Vec<f64> = Vec::new();
    for r in records {
        if !sigmas.iter().any(|s| s.to_bits() == r.sigma.to_bits()) {
            sigmas.push(r.sigma);
        }
    }
    sigmas
        .into_iter()
        .map(|sigma| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.sigma.to_bits() == sigma.to_bits())
                .collect();
            let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
            let totals: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.total_pivots())
                .map(|p| p as f64)
                .collect();
            let p1: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.phase1_pivots)
                .map(|p| p as f64)
                .collect();
            let p2: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.phase2_pivots)
                .map(|p| p as f64)
                .collect();
            let (n, d) = rows.first().map(|r| (r.n, r.d)).unwrap_or((0, 0));
            SigmaSummary {
                sigma,
                trials: rows.len(),
                errors: count("ERROR"),
                optimal: count("OPTIMAL"),
                unbounded: count("UNBOUNDED"),
                infeasible: count("INFEASIBLE"),
                mean_pivots: mean(&totals),
                median_pivots: median(&totals),
                mean_phase1_pivots: mean(&p1),
                mean_phase2_pivots: mean(&p2),
                bounds: BoundInputs::new(n, d, sigma)
                    .ok()
                    .map(|b| BoundReport::new(&b)),
            }
        })
        .collect()
}
