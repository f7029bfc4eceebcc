//! Two-phase shadow-vertex method for `maximize ⟨z, x⟩, A x ≤ y` with
//! arbitrary signs in `y`.
//!
//! Phase 1 solves `LP′`, the same constraints with inflated right-hand sides
//! `y′`, chosen so that a well-conditioned basis `I` from a random shortlist
//! is a known optimal facet for `t₀ = Σ α_i a_i`. Phase 2 solves `LP⁺` in one
//! more dimension, whose extra coordinate `x₀` interpolates between `LP′`
//! (`x₀ = −1`) and the original program (`x₀ = 1`), walking from
//! `(−ζ, z)` to `(1, 0, …, 0)`.
//!
//! Row order of `LP⁺`: row 0 is `(−1, 0, …, 0)` (`x₀ ≥ −1`), row 1 is
//! `(1, 0, …, 0)` (`x₀ ≤ 1`), and row `i + 2` lifts original row `i`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Lu, Mat};
use crate::lp::{Basis, LinearProgram, LpError, SolveResult};
use crate::random::{sample_alpha, sample_dsets, RngStream};
use crate::shadow_vertex::{
    is_opt_simp, polar_shadow_vertex, InterpolationObjective, PivotError, ShadowPath,
};

/// `LP⁺` row holding `−x₀ ≤ 1`.
pub const LOWER_ROW: usize = 0;
/// `LP⁺` row holding `x₀ ≤ 1`.
pub const UPPER_ROW: usize = 1;
/// Offset of original row `i` inside `LP⁺`.
pub const LIFT_OFFSET: usize = 2;

/// `x₀ ≥ 1 − X0_FEASIBLE_TOL` counts as feasible.
pub const X0_FEASIBLE_TOL: f64 = 1e-9;
/// A shortlist basis with `smin(A_I) < SINGULAR_REL_TOL · scale` is unusable.
pub const SINGULAR_REL_TOL: f64 = 1e-13;
const ZETA_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveErrorKind {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("every shortlisted basis is singular")]
    AllSingular,
    #[error("sqrt(d) M / (4 kappa) = {0} < 1")]
    KappaMViolated(f64),
    #[error("chosen basis is not the optimal facet of LP' for t0")]
    InitialVertexViolated,
    #[error("LP+ right-hand side {value} at row {row} is not positive")]
    NonPositiveYPlus { row: usize, value: f64 },
    #[error("no zeta found after {0} doublings")]
    ZetaSearchFailed(usize),
    #[error("phase {phase}: {source}")]
    Pivot { phase: u8, source: PivotError },
    #[error("phase 2 reported an unbounded interpolation program")]
    Phase2Unbounded,
    #[error("final LP+ basis {0} reaches x0 = 1 without the x0 <= 1 row")]
    DegenerateFinalBasis(Basis),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Failure of [`two_phase_solve`], with the trace recorded up to the point
/// of failure when one exists.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}")]
pub struct SolveError {
    pub kind: SolveErrorKind,
    pub trace: Option<Box<TwoPhaseTrace>>,
}

impl From<SolveErrorKind> for SolveError {
    fn from(kind: SolveErrorKind) -> Self {
        Self { kind, trace: None }
    }
}

impl From<LpError> for SolveError {
    fn from(e: LpError) -> Self {
        SolveErrorKind::Lp(e).into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseTrace {
    pub shortlist: Vec<Basis>,
    #[serde(rename = "chosen_I")]
    pub chosen_i: Basis,
    pub kappa: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub alpha: Vec<f64>,
    pub t0: Vec<f64>,
    pub y_prime: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Option<Basis>,
    pub zeta: Option<f64>,
    /// Final basis of `LP⁺` in its own row numbering.
    #[serde(rename = "K")]
    pub k: Option<Basis>,
    pub x0: Option<f64>,
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
}

/// The interpolation program `LP⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpPlus {
    rows: Mat,
    y_plus: Vec<f64>,
    z_plus: Vec<f64>,
    /// Objective of the original program, needed for `(−ζ, z)`.
    objective: Vec<f64>,
}

impl LpPlus {
    pub fn rows(&self) -> &Mat {
        &self.rows
    }

    pub fn y_plus(&self) -> &[f64] {
        &self.y_plus
    }

    pub fn z_plus(&self) -> &[f64] {
        &self.z_plus
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// `d + 1`
    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    /// Rows `a⁺_i / y⁺_i` with unit right-hand sides and objective `z⁺`.
    pub fn normalized(&self) -> LinearProgram {
        let mut rows = Vec::with_capacity(self.rows.rows());
        for (r, &yp) in self.rows.row_iter().zip(&self.y_plus) {
            rows.push(r.iter().map(|v| v / yp).collect::<Vec<f64>>());
        }
        LinearProgram::from_rows(&rows, vec![1.0; rows.len()], self.z_plus.clone())
            .expect("LP+ rows are finite with positive right-hand sides")
    }

    /// The objective `(−ζ, z)` phase 2 starts from.
    pub fn start_objective(&self, zeta: f64) -> Vec<f64> {
        std::iter::once(-zeta)
            .chain(self.objective.iter().copied())
            .collect()
    }

    /// The plane phase 2 walks in: `Span((0, z), z⁺)`, which also contains
    /// every start objective `(−ζ, z)`.
    pub fn census_plane(&self) -> InterpolationObjective {
        InterpolationObjective::new(self.start_objective(0.0), self.z_plus.clone())
    }

    /// Lifts a basis of the original program into `LP⁺` and adds `extra`.
    pub fn lift(&self, basis: &Basis, extra: usize) -> Basis {
        let mut v: Vec<usize> = basis.as_slice().iter().map(|i| i + LIFT_OFFSET).collect();
        v.push(extra);
        v.sort_unstable();
        Basis::from_sorted(v)
    }
}

/// Size of the random basis shortlist, `⌈3 n d ln n⌉`.
pub fn shortlist_size(n: usize, d: usize) -> usize {
    (3.0 * n as f64 * d as f64 * (n as f64).ln()).ceil() as usize
}

/// Draws the shortlist and keeps the basis with the largest `smin(A_I)`,
/// first occurrence winning ties.
pub fn choose_basis(
    lp: &LinearProgram,
    stream: &mut RngStream,
) -> Result<(Vec<Basis>, Basis), SolveError> {
    let (n, d) = (lp.n(), lp.d());
    if n < d {
        return Err(
            SolveErrorKind::InvalidInput(format!("need n >= d, got n = {n}, d = {d}")).into(),
        );
    }
    let shortlist = sample_dsets(stream, n, d, shortlist_size(n, d));
    let mut best: Option<(usize, f64)> = None;
    for (k, b) in shortlist.iter().enumerate() {
        let s = linalg::smin(&lp.basis_matrix(b));
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((k, s));
        }
    }
    let (k, s) = best.expect("shortlist is non-empty for n > d >= 2");
    if s < SINGULAR_REL_TOL * lp.scale() {
        return Err(SolveErrorKind::AllSingular.into());
    }
    let chosen = shortlist[k].clone();
    Ok((shortlist, chosen))
}

/// `M = 2^(⌈lg max_i ‖(y_i, a_i)‖⌉ + 2)`
pub fn magnitude_power(scale: f64) -> f64 {
    let mut m = 2f64.powi(scale.log2().ceil() as i32 + 2);
    // guard the rounding of log2 near exact powers of two
    while m < 4.0 * scale {
        m *= 2.0;
    }
    while m / 2.0 >= 4.0 * scale {
        m /= 2.0;
    }
    m
}

/// `κ = 2^⌊lg smin⌋`
pub fn conditioning_power(smin: f64) -> f64 {
    let mut k = 2f64.powi(smin.log2().floor() as i32);
    while k > smin {
        k /= 2.0;
    }
    while 2.0 * k <= smin {
        k *= 2.0;
    }
    k
}

/// Builds `LP′`: `y′_i = M` on the chosen basis and `√d M² / (4κ)` elsewhere.
/// Returns `(LP′, κ, M)`.
pub fn build_lp_prime(
    lp: &LinearProgram,
    chosen: &Basis,
) -> Result<(LinearProgram, f64, f64), SolveError> {
    let s = linalg::smin(&lp.basis_matrix(chosen));
    if s <= 0.0 {
        return Err(SolveErrorKind::AllSingular.into());
    }
    let kappa = conditioning_power(s);
    let m = magnitude_power(lp.scale());
    let off = (lp.d() as f64).sqrt() * m * m / (4.0 * kappa);
    let y_prime = (0..lp.n())
        .map(|i| if chosen.contains(i) { m } else { off })
        .collect();
    Ok((lp.with_rhs(y_prime)?, kappa, m))
}

/// Builds `LP⁺` from the original program and `LP′`.
pub fn build_lp_plus(lp: &LinearProgram, lp_prime: &LinearProgram) -> Result<LpPlus, SolveError> {
    let (n, d) = (lp.n(), lp.d());
    let mut data = Vec::with_capacity((n + 2) * (d + 1));
    let mut y_plus = Vec::with_capacity(n + 2);
    let mut unit = vec![0.0; d + 1];
    unit[0] = -1.0;
    data.extend_from_slice(&unit);
    unit[0] = 1.0;
    data.extend_from_slice(&unit);
    y_plus.extend([1.0, 1.0]);
    for i in 0..n {
        let (yi, ypi) = (lp.y()[i], lp_prime.y()[i]);
        data.push((ypi - yi) / 2.0);
        data.extend_from_slice(lp.row(i));
        let yp = (ypi + yi) / 2.0;
        if yp.is_nan() || yp <= 0.0 {
            return Err(SolveErrorKind::NonPositiveYPlus {
                row: i + LIFT_OFFSET,
                value: yp,
            }
            .into());
        }
        y_plus.push(yp);
    }
    let rows = Mat::new(n + 2, d + 1, data).map_err(LpError::from)?;
    let mut z_plus = vec![0.0; d + 1];
    z_plus[0] = 1.0;
    Ok(LpPlus {
        rows,
        y_plus,
        z_plus,
        objective: lp.z().to_vec(),
    })
}

/// Finds `ζ > 0` with `{lower row} ∪ J` optimal for `(−ζ, z)` in `LP⁺`.
///
/// Writing `z = Σ_{i∈J} α_i a_i` gives `(−ζ₀, z) = Σ α_i a⁺_i`; any `ζ > ζ₀`
/// works, so the search starts at `max(2ζ₀, 1)` and doubles until the
/// membership test accepts.
pub fn find_zeta(lp_plus: &LpPlus, j: &Basis) -> Result<f64, SolveError> {
    let d = lp_plus.dim() - 1;
    let lifted: Vec<usize> = j.as_slice().iter().map(|i| i + LIFT_OFFSET).collect();
    let a_j = Mat::from_rows(
        &lifted
            .iter()
            .map(|&r| lp_plus.rows.row(r)[1..].to_vec())
            .collect::<Vec<_>>(),
    )
    .map_err(LpError::from)?;
    debug_assert_eq!(a_j.rows(), d);
    let alpha = Lu::factor(&a_j)
        .map_err(LpError::from)?
        .solve_transpose(&lp_plus.objective);
    let zeta0 = -lifted
        .iter()
        .zip(&alpha)
        .map(|(&r, a)| a * lp_plus.rows.get(r, 0))
        .sum::<f64>();
    let normalized = lp_plus.normalized();
    let start = lp_plus.lift(j, LOWER_ROW);
    let mut zeta = (2.0 * zeta0).max(1.0);
    for _ in 0..ZETA_DOUBLINGS {
        if is_opt_simp(&normalized, &lp_plus.start_objective(zeta), &start) {
            return Ok(zeta);
        }
        zeta *= 2.0;
    }
    Err(SolveErrorKind::ZetaSearchFailed(ZETA_DOUBLINGS).into())
}

/// Everything a two-phase run produced, including both shadow paths.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseRun {
    pub result: SolveResult,
    pub trace: TwoPhaseTrace,
    pub phase1_path: ShadowPath,
    pub phase2_path: Option<ShadowPath>,
}

/// Solves `lp` with the two-phase shadow-vertex method.
pub fn two_phase_solve(
    lp: &LinearProgram,
    stream: &mut RngStream,
) -> Result<(SolveResult, TwoPhaseTrace), SolveError> {
    two_phase_run(lp, stream).map(|r| (r.result, r.trace))
}

/// As [`two_phase_solve`], also returning the shadow paths.
pub fn two_phase_run(
    lp: &LinearProgram,
    stream: &mut RngStream,
) -> Result<TwoPhaseRun, SolveError> {
    let d = lp.d();
    let (shortlist, chosen) = choose_basis(lp, stream)?;
    let (lp_prime, kappa, m) = build_lp_prime(lp, &chosen)?;
    let alpha = sample_alpha(stream, d);
    let t0 = lp.basis_matrix(&chosen).tr_mul_vec(&alpha);

    let mut trace = TwoPhaseTrace {
        shortlist,
        chosen_i: chosen.clone(),
        kappa,
        m,
        alpha,
        t0,
        y_prime: lp_prime.y().to_vec(),
        j: None,
        zeta: None,
        k: None,
        x0: None,
        phase1_pivots: 0,
        phase2_pivots: 0,
    };
    let fail = |kind: SolveErrorKind, trace: &TwoPhaseTrace| SolveError {
        kind,
        trace: Some(Box::new(trace.clone())),
    };

    let ratio = (d as f64).sqrt() * m / (4.0 * kappa);
    if ratio < 1.0 {
        return Err(fail(SolveErrorKind::KappaMViolated(ratio), &trace));
    }
    if !is_opt_simp(&lp_prime, &trace.t0, &chosen) {
        return Err(fail(SolveErrorKind::InitialVertexViolated, &trace));
    }

    let (res1, path1) = polar_shadow_vertex(&lp_prime, &chosen, &trace.t0)
        .map_err(|source| fail(SolveErrorKind::Pivot { phase: 1, source }, &trace))?;
    trace.phase1_pivots = path1.pivots();
    let j = match res1 {
        SolveResult::Optimal { basis, .. } => basis,
        SolveResult::Unbounded => {
            return Ok(TwoPhaseRun {
                result: SolveResult::Unbounded,
                trace,
                phase1_path: path1,
                phase2_path: None,
            })
        }
        SolveResult::Infeasible => unreachable!("the polar walk never reports infeasibility"),
    };
    trace.j = Some(j.clone());

    let lp_plus = build_lp_plus(lp, &lp_prime).map_err(|e| fail(e.kind, &trace))?;
    let zeta = find_zeta(&lp_plus, &j).map_err(|e| fail(e.kind, &trace))?;
    trace.zeta = Some(zeta);

    let normalized = lp_plus.normalized();
    let start = lp_plus.lift(&j, LOWER_ROW);
    let (res2, path2) = polar_shadow_vertex(&normalized, &start, &lp_plus.start_objective(zeta))
        .map_err(|source| fail(SolveErrorKind::Pivot { phase: 2, source }, &trace))?;
    trace.phase2_pivots = path2.pivots();
    let SolveResult::Optimal {
        vertex, basis: k, ..
    } = res2
    else {
        return Err(fail(SolveErrorKind::Phase2Unbounded, &trace));
    };
    let x0 = vertex[0];
    trace.k = Some(k.clone());
    trace.x0 = Some(x0);

    if x0 < 1.0 - X0_FEASIBLE_TOL {
        return Ok(TwoPhaseRun {
            result: SolveResult::Infeasible,
            trace,
            phase1_path: path1,
            phase2_path: Some(path2),
        });
    }
    if !k.contains(UPPER_ROW) {
        return Err(fail(SolveErrorKind::DegenerateFinalBasis(k), &trace));
    }
    let original = Basis::from_sorted(
        k.as_slice()
            .iter()
            .filter(|&&r| r != UPPER_ROW)
            .map(|r| r - LIFT_OFFSET)
            .collect(),
    );
    let x = lp
        .vertex(&original)
        .map_err(|e| fail(SolveErrorKind::Lp(e.into()), &trace))?;
    let objective = lp.objective(&x);
    Ok(TwoPhaseRun {
        result: SolveResult::Optimal {
            vertex: x,
            basis: original,
            objective,
        },
        trace,
        phase1_path: path1,
        phase2_path: Some(path2),
    })
}

/// Rebuilds `LP⁺` for a finished run from its trace.
pub fn lp_plus_from_trace(lp: &LinearProgram, trace: &TwoPhaseTrace) -> Result<LpPlus, SolveError> {
    build_lp_plus(lp, &lp.with_rhs(trace.y_prime.clone())?)
}
