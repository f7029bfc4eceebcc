//! The polar shadow-vertex simplex method.
//!
//! For an instance with `y > 0`, a basis `I` is optimal for an objective `q`
//! when its vertex `x = A_I⁻¹ y_I` is feasible and `q ∈ cone(a_i : i ∈ I)`.
//! The walk follows `q_λ = (1−λ)t + λz` from `λ = 0` to `λ = 1`: inside a
//! basis the cone coordinates `β(λ) = A_I⁻ᵀ q_λ` are affine in `λ`, so the
//! next breakpoint is the first root of a coordinate that turns negative.
//! That coordinate leaves; the entering row comes from the primal ratio test
//! along the edge that releases the leaving constraint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Lu};
use crate::lp::{binomial, Basis, LinearProgram, SolveResult};

/// A cone coordinate below `-CONE_EXIT_TOL · ‖β‖` counts as negative.
pub const CONE_EXIT_TOL: f64 = 1e-10;
/// Entering rows need `⟨a_j, w⟩ > RATIO_ADMIT_TOL · ‖a_j‖ ‖w‖`.
pub const RATIO_ADMIT_TOL: f64 = 1e-12;
/// Relative slack allowed when testing vertex feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PivotError {
    #[error("start basis {0} is not optimal for the start objective")]
    NotOptimalStart(Basis),
    #[error("degenerate pivot at basis {basis} (lambda = {lambda}): {reason}")]
    DegeneratePivot {
        basis: Basis,
        lambda: f64,
        reason: String,
    },
    #[error("pivot guard tripped after {pivots} pivots")]
    CycleGuard { pivots: usize },
    #[error("the polar walk needs every right-hand side positive")]
    NonPositiveRhs,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `q_λ = (1−λ) t + λ z`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationObjective {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
}

impl InterpolationObjective {
    pub fn new(t: Vec<f64>, z: Vec<f64>) -> Self {
        assert_eq!(t.len(), z.len(), "objectives must share a dimension");
        Self { t, z }
    }

    pub fn at(&self, lambda: f64) -> Vec<f64> {
        self.t
            .iter()
            .zip(&self.z)
            .map(|(t, z)| (1.0 - lambda) * t + lambda * z)
            .collect()
    }

    /// `q_θ = z sin θ + t cos θ`
    pub fn at_angle(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        self.t
            .iter()
            .zip(&self.z)
            .map(|(t, z)| z * s + t * c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub basis: Basis,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    Optimal,
    /// The walk left `cone(a_1, …, a_n)` at this `λ`.
    Unbounded {
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowPath {
    pub segments: Vec<PathSegment>,
    pub terminal: Terminal,
}

impl ShadowPath {
    pub fn pivots(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    pub fn bases(&self) -> impl Iterator<Item = &Basis> + '_ {
        self.segments.iter().map(|s| &s.basis)
    }
}

fn feasibility_slack(yj: f64, aj: &[f64], x: &[f64]) -> f64 {
    FEASIBILITY_TOL * (yj.abs() + linalg::norm(aj) * linalg::norm(x))
}

/// Whether every constraint holds at `x` up to the feasibility tolerance.
pub fn vertex_feasible(lp: &LinearProgram, x: &[f64], skip: Option<&Basis>) -> bool {
    (0..lp.n())
        .filter(|&j| skip.is_none_or(|b| !b.contains(j)))
        .all(|j| {
            let aj = lp.row(j);
            linalg::dot(aj, x) <= lp.y()[j] + feasibility_slack(lp.y()[j], aj, x)
        })
}

/// Membership of `basis` in the set of bases optimal for `q`: `A_I` is
/// nonsingular, its vertex is feasible (so `a_i / y_i, i ∈ I` span a facet
/// of the polar) and `q` lies in the closed cone of its rows.
pub fn is_opt_simp(lp: &LinearProgram, q: &[f64], basis: &Basis) -> bool {
    if basis.len() != lp.d() || q.len() != lp.d() || !lp.all_rhs_positive() {
        return false;
    }
    let m = lp.basis_matrix(basis);
    let Ok(lu) = Lu::factor(&m) else {
        return false;
    };
    let x = lu.solve(&basis.select(lp.y()));
    if !vertex_feasible(lp, &x, Some(basis)) {
        return false;
    }
    let beta = lu.solve_transpose(q);
    let tol = linalg::cone_tolerance(linalg::norm(q), linalg::smin(&m));
    linalg::clamp_cone_coefficients(beta, tol).is_some()
}

/// Runs the polar shadow-vertex method from `start`, which must be optimal
/// for `t`, toward the instance objective.
pub fn polar_shadow_vertex(
    lp: &LinearProgram,
    start: &Basis,
    t: &[f64],
) -> Result<(SolveResult, ShadowPath), PivotError> {
    let (n, d) = (lp.n(), lp.d());
    if t.len() != d {
        return Err(PivotError::DimensionMismatch {
            expected: d,
            got: t.len(),
        });
    }
    if !lp.all_rhs_positive() {
        return Err(PivotError::NonPositiveRhs);
    }
    if start.len() != d || !is_opt_simp(lp, t, start) {
        return Err(PivotError::NotOptimalStart(start.clone()));
    }
    let z = lp.z();
    let guard = usize::try_from(binomial(n, d))
        .unwrap_or(usize::MAX)
        .saturating_add(1);

    let mut basis = start.clone();
    let mut lu = Lu::factor(&lp.basis_matrix(&basis))?;
    let mut lambda = 0.0_f64;
    let mut segments = Vec::new();

    loop {
        let beta_t = lu.solve_transpose(t);
        let beta_z = lu.solve_transpose(z);
        let exit_tol = CONE_EXIT_TOL * linalg::norm(&beta_z);

        // β(λ) = (1−λ) β_t + λ β_z; only coordinates negative at λ = 1 can
        // leave before the walk ends.
        let mut leave: Option<(usize, f64)> = None;
        for (pos, (&bt, &bz)) in beta_t.iter().zip(&beta_z).enumerate() {
            if bz >= -exit_tol {
                continue;
            }
            let bt = bt.max(0.0);
            let root = bt / (bt - bz);
            if leave.is_none_or(|(_, best)| root < best) {
                leave = Some((pos, root));
            }
        }

        let Some((leave_pos, root)) = leave else {
            segments.push(PathSegment {
                basis: basis.clone(),
                lambda_lo: lambda,
                lambda_hi: 1.0,
            });
            let vertex = lu.solve(&basis.select(lp.y()));
            let objective = lp.objective(&vertex);
            return Ok((
                SolveResult::Optimal {
                    vertex,
                    basis,
                    objective,
                },
                ShadowPath {
                    segments,
                    terminal: Terminal::Optimal,
                },
            ));
        };

        let next = root.max(lambda);
        segments.push(PathSegment {
            basis: basis.clone(),
            lambda_lo: lambda,
            lambda_hi: next,
        });

        // Edge direction w: ⟨a_i, w⟩ = 0 for i ∈ I − {k}, ⟨a_k, w⟩ = −1.
        let x = lu.solve(&basis.select(lp.y()));
        let mut rhs = vec![0.0; d];
        rhs[leave_pos] = -1.0;
        let w = lu.solve(&rhs);
        let w_norm = linalg::norm(&w);

        let mut enter: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !basis.contains(j)) {
            let aj = lp.row(j);
            let aw = linalg::dot(aj, &w);
            if aw <= RATIO_ADMIT_TOL * linalg::norm(aj) * w_norm {
                continue;
            }
            let ratio = ((lp.y()[j] - linalg::dot(aj, &x)) / aw).max(0.0);
            if enter.is_none_or(|(_, best)| ratio < best) {
                enter = Some((j, ratio));
            }
        }

        let Some((enter_row, _)) = enter else {
            return Ok((
                SolveResult::Unbounded,
                ShadowPath {
                    segments,
                    terminal: Terminal::Unbounded { lambda: next },
                },
            ));
        };

        let leave_row = basis.as_slice()[leave_pos];
        let new_basis = basis.exchange(leave_row, enter_row);
        lu = Lu::factor(&lp.basis_matrix(&new_basis)).map_err(|e| PivotError::DegeneratePivot {
            basis: new_basis.clone(),
            lambda: next,
            reason: e.to_string(),
        })?;
        basis = new_basis;
        lambda = next;
        if segments.len() > guard {
            return Err(PivotError::CycleGuard {
                pivots: segments.len(),
            });
        }
    }
}
