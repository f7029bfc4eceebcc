//! Ground truth by enumeration: the exact shadow of a plane, the shadow seen
//! through a finite grid of directions, and a brute-force LP oracle.
//!
//! A basis belongs to the shadow of `Span(t, z)` when its vertex is feasible
//! and some nonzero `q = c_t t + c_z z` lies in the cone of its rows. With
//! `u = A_I⁻ᵀ t` and `v = A_I⁻ᵀ z` that is the 2-D cone
//! `{c ≠ 0 : c_t u_k + c_z v_k ≥ 0 ∀k}`: an intersection of half-planes
//! through the origin, nonempty iff the directions `(u_k, v_k)` leave an
//! angular gap of at least `π`. Its angular width is that gap minus `π`, and
//! since `q_θ = z sin θ + t cos θ` has `c = (cos θ, sin θ)`, the width is
//! measured in the same `θ` the discretized census steps through.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Lu};
use crate::lp::{check_enumerable, combinations, Basis, LinearProgram, LpError, SolveResult};
use crate::shadow_vertex::{vertex_feasible, InterpolationObjective};

/// Angular tolerance for boundary coincidences.
pub const ANGLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CensusError {
    #[error(transparent)]
    TooLarge(LpError),
    #[error("cone boundary coincidence at basis {basis} (width {width:e})")]
    DegenerateCone { basis: Basis, width: f64 },
    #[error("every right-hand side must be positive")]
    NonPositiveRhs,
    #[error("t and z must be linearly independent")]
    DependentPlane,
    #[error("cannot certify feasibility from vertices: constraint matrix has rank < d")]
    UnresolvedDegenerate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// How a cone that touches the plane only along a boundary ray is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Raise [`CensusError::DegenerateCone`].
    #[default]
    Strict,
    /// Count the basis (closed-cone semantics).
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowSet {
    pub bases: BTreeSet<Basis>,
    pub plane: InterpolationObjective,
    /// Smallest angular width among the members' cones, `+∞` when empty.
    pub min_arc_width: f64,
}

impl ShadowSet {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// A basis with a feasible vertex, and the cone coordinates of `t` and `z`.
struct FacetCoords {
    basis: Basis,
    u: Vec<f64>,
    v: Vec<f64>,
    /// Absolute slack for a coordinate to count as nonnegative at unit `‖q‖`.
    tol: f64,
}

fn check_plane(lp: &LinearProgram, plane: &InterpolationObjective) -> Result<(), CensusError> {
    let d = lp.d();
    for v in [&plane.t, &plane.z] {
        if v.len() != d {
            return Err(CensusError::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
    }
    if !lp.all_rhs_positive() {
        return Err(CensusError::NonPositiveRhs);
    }
    let (t, z) = (&plane.t, &plane.z);
    let tz = linalg::dot(t, z);
    let cross = linalg::dot(t, t) * linalg::dot(z, z) - tz * tz;
    if cross.is_nan() || cross <= 1e-24 * linalg::dot(t, t) * linalg::dot(z, z) {
        return Err(CensusError::DependentPlane);
    }
    Ok(())
}

/// Facets of the polar: every basis whose vertex is feasible.
fn facets(
    lp: &LinearProgram,
    plane: &InterpolationObjective,
) -> Result<Vec<FacetCoords>, CensusError> {
    check_enumerable(lp.n(), lp.d()).map_err(CensusError::TooLarge)?;
    let all: Vec<Basis> = combinations(lp.n(), lp.d()).collect();
    Ok(all
        .into_par_iter()
        .filter_map(|basis| {
            let m = lp.basis_matrix(&basis);
            let lu = Lu::factor(&m).ok()?;
            let x = lu.solve(&basis.select(lp.y()));
            if !vertex_feasible(lp, &x, Some(&basis)) {
                return None;
            }
            let u = lu.solve_transpose(&plane.t);
            let v = lu.solve_transpose(&plane.z);
            let tol = linalg::cone_tolerance(1.0, linalg::smin(&m));
            Some(FacetCoords { basis, u, v, tol })
        })
        .collect())
}

/// Width of `{c ≠ 0 : c·g_k ≥ 0 ∀k}` with `g_k = (u_k, v_k)`; negative when
/// the cone is `{0}`. Directions of (numerically) zero length impose nothing.
pub fn cone_arc_width(u: &[f64], v: &[f64]) -> f64 {
    let scale = u.iter().chain(v).fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut angles: Vec<f64> = u
        .iter()
        .zip(v)
        .filter(|(a, b)| a.hypot(**b) > 1e-14 * scale)
        .map(|(a, b)| b.atan2(*a))
        .collect();
    if angles.is_empty() {
        return TAU;
    }
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + TAU - angles[angles.len() - 1];
    let max_gap = angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    max_gap - PI
}

/// Exact shadow of `Span(t, z)`: every basis whose vertex is feasible and
/// whose cone meets the plane outside the origin. The instance objective is
/// not used.
pub fn exact_shadow(
    lp: &LinearProgram,
    plane: &InterpolationObjective,
    policy: BoundaryPolicy,
) -> Result<ShadowSet, CensusError> {
    check_plane(lp, plane)?;
    let mut bases = BTreeSet::new();
    let mut min_arc_width = f64::INFINITY;
    for f in facets(lp, plane)? {
        let width = cone_arc_width(&f.u, &f.v);
        if width > ANGLE_TOL {
            min_arc_width = min_arc_width.min(width);
            bases.insert(f.basis);
        } else if width >= -ANGLE_TOL {
            match policy {
                BoundaryPolicy::Strict => {
                    return Err(CensusError::DegenerateCone {
                        basis: f.basis,
                        width,
                    })
                }
                BoundaryPolicy::Closed => {
                    min_arc_width = min_arc_width.min(width.max(0.0));
                    bases.insert(f.basis);
                }
            }
        }
    }
    Ok(ShadowSet {
        bases,
        plane: plane.clone(),
        min_arc_width,
    })
}

/// Union over `θ = 2πk/m, k = 1..m` of the bases optimal for
/// `q_θ = z sin θ + t cos θ`, each found by a full scan.
///
/// Two bases both strictly containing a grid direction would contradict
/// general position and raise [`CensusError::DegenerateCone`]; grid points
/// within tolerance of a shared boundary count for both.
pub fn discretized_shadow(
    lp: &LinearProgram,
    plane: &InterpolationObjective,
    m: usize,
) -> Result<BTreeSet<Basis>, CensusError> {
    assert!(m >= 4, "grid needs at least 4 directions");
    check_plane(lp, plane)?;
    let facets = facets(lp, plane)?;
    let per_theta: Vec<Result<Vec<usize>, CensusError>> = (1..=m)
        .into_par_iter()
        .map(|k| {
            let theta = TAU * k as f64 / m as f64;
            let (ct, cz) = (theta.cos(), theta.sin());
            let qn = linalg::norm(&plane.at_angle(theta));
            let mut hits = Vec::new();
            let mut strict: Option<usize> = None;
            for (idx, f) in facets.iter().enumerate() {
                let min_beta =
                    f.u.iter()
                        .zip(&f.v)
                        .map(|(u, v)| (ct * u + cz * v) / qn)
                        .fold(f64::INFINITY, f64::min);
                if min_beta >= -f.tol {
                    hits.push(idx);
                    if min_beta > f.tol {
                        if let Some(prev) = strict {
                            return Err(CensusError::DegenerateCone {
                                basis: facets[prev].basis.clone(),
                                width: 0.0,
                            });
                        }
                        strict = Some(idx);
                    }
                }
            }
            Ok(hits)
        })
        .collect();
    let mut out = BTreeSet::new();
    for hits in per_theta {
        for idx in hits? {
            out.insert(facets[idx].basis.clone());
        }
    }
    Ok(out)
}

/// Solves `lp` by scanning every basis: infeasible when no vertex is
/// feasible, optimal when some feasible vertex has `z` in its cone,
/// unbounded otherwise.
pub fn brute_force_solve(lp: &LinearProgram) -> Result<SolveResult, CensusError> {
    let (n, d) = (lp.n(), lp.d());
    check_enumerable(n, d).map_err(CensusError::TooLarge)?;
    // A polyhedron without vertices cannot be certified feasible this way.
    let full = lp.a();
    if n < d
        || linalg::smin(&full.transpose().mul_mat(full)).sqrt() <= 1e-12 * lp.scale().max(1e-300)
    {
        return Err(CensusError::UnresolvedDegenerate);
    }
    let z_norm = linalg::norm(lp.z());
    let mut any_feasible = false;
    let mut best: Option<(f64, Vec<f64>, Basis)> = None;
    for basis in combinations(n, d) {
        let m = lp.basis_matrix(&basis);
        let Ok(lu) = Lu::factor(&m) else { continue };
        let x = lu.solve(&basis.select(lp.y()));
        if !vertex_feasible(lp, &x, Some(&basis)) {
            continue;
        }
        any_feasible = true;
        let beta = lu.solve_transpose(lp.z());
        let tol = linalg::cone_tolerance(z_norm, linalg::smin(&m));
        if beta.iter().any(|&b| b < -tol) {
            continue;
        }
        let obj = lp.objective(&x);
        if best.as_ref().is_none_or(|(b, _, _)| obj > *b) {
            best = Some((obj, x, basis));
        }
    }
    Ok(match (any_feasible, best) {
        (false, _) => SolveResult::Infeasible,
        (true, None) => SolveResult::Unbounded,
        (true, Some((objective, vertex, basis))) => SolveResult::Optimal {
            vertex,
            basis,
            objective,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Status;

    fn simplex3(z: Vec<f64>) -> LinearProgram {
        LinearProgram::from_rows(
            &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![1.0; 3],
            z,
        )
        .unwrap()
    }

    fn plane(t: &[f64], z: &[f64]) -> InterpolationObjective {
        InterpolationObjective::new(t.to_vec(), z.to_vec())
    }

    #[test]
    fn arc_width_basics() {
        // half-planes c1 ≥ 0 and c2 ≥ 0: a quarter circle
        assert!((cone_arc_width(&[1.0, 0.0], &[0.0, 1.0]) - PI / 2.0).abs() < 1e-15);
        // c1 ≥ 0 and −c1 ≥ 0: only the c2 axis
        assert!(cone_arc_width(&[1.0, -1.0], &[0.0, 0.0]).abs() < 1e-15);
        // three directions spread over the circle: empty
        let w = cone_arc_width(&[1.0, -0.5, -0.5], &[0.0, 0.8, -0.8]);
        assert!(w < 0.0);
    }

    #[test]
    fn simplex_shadow_is_single_facet() {
        let lp = simplex3(vec![1.0; 3]);
        let s = exact_shadow(
            &lp,
            &plane(&[1.0, 0.2, 0.3], &[0.1, 1.0, 0.5]),
            BoundaryPolicy::Strict,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.bases.iter().next().unwrap().as_slice(), &[0, 1, 2]);
        let disc = discretized_shadow(&lp, &plane(&[1.0, 0.2, 0.3], &[0.1, 1.0, 0.5]), 4).unwrap();
        assert_eq!(disc, s.bases);
    }

    #[test]
    fn plane_missing_the_cone_is_empty() {
        // every q in the plane has mixed-sign coordinates except 0
        let lp = simplex3(vec![1.0; 3]);
        let s = exact_shadow(
            &lp,
            &plane(&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]),
            BoundaryPolicy::Strict,
        )
        .unwrap();
        // (1,-1,0)c1 + (0,1,-1)c2 = (c1, c2 - c1, -c2) ≥ 0 forces c = 0
        assert!(s.is_empty());
    }

    #[test]
    fn boundary_policy() {
        // plane spanned by e1 and e2 touches the orthant cone along a face:
        // arc width π/2 so not degenerate
        let lp = simplex3(vec![1.0; 3]);
        let s = exact_shadow(
            &lp,
            &plane(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            BoundaryPolicy::Strict,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        // plane spanned by e1 and (0,1,-1) meets the orthant only along e1
        let p = plane(&[1.0, 0.0, 0.0], &[0.0, 1.0, -1.0]);
        assert!(matches!(
            exact_shadow(&lp, &p, BoundaryPolicy::Strict),
            Err(CensusError::DegenerateCone { .. })
        ));
        assert_eq!(
            exact_shadow(&lp, &p, BoundaryPolicy::Closed).unwrap().len(),
            1
        );
    }

    #[test]
    fn dependent_plane_rejected() {
        let lp = simplex3(vec![1.0; 3]);
        assert_eq!(
            exact_shadow(
                &lp,
                &plane(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]),
                BoundaryPolicy::Strict
            ),
            Err(CensusError::DependentPlane)
        );
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_solve(&simplex3(vec![1.0; 3])).unwrap();
        assert_eq!(r.status(), Status::Optimal);
        assert!((r.objective().unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(
            brute_force_solve(&simplex3(vec![-1.0, 0.0, 0.0])).unwrap(),
            SolveResult::Unbounded
        );
        let infeasible = LinearProgram::from_rows(
            &[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            vec![-1.0, -1.0, 1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            brute_force_solve(&infeasible).unwrap(),
            SolveResult::Infeasible
        );
    }

    #[test]
    fn brute_force_rank_deficient() {
        let lp =
            LinearProgram::from_rows(&[[1.0, 0.0], [2.0, 0.0]], vec![1.0, 1.0], vec![1.0, 0.0])
                .unwrap();
        assert_eq!(
            brute_force_solve(&lp),
            Err(CensusError::UnresolvedDegenerate)
        );
    }

    fn random_vec(seed: u64, d: usize) -> Vec<f64> {
        let mut s = crate::random::RngStream::new(seed, 0);
        (0..d).map(|_| s.standard_normal()).collect()
    }

    #[test]
    fn cube_exact_matches_converged_grid() {
        let rows: Vec<Vec<f64>> = (0..3)
            .flat_map(|i| {
                let mut e = vec![0.0; 3];
                e[i] = 1.0;
                [e.clone(), e.iter().map(|v| -v).collect()]
            })
            .collect();
        let lp = LinearProgram::from_rows(&rows, vec![1.0; 6], vec![1.0, 2.0, 3.0]).unwrap();
        let p = plane(&random_vec(11, 3), &random_vec(12, 3));
        let exact = exact_shadow(&lp, &p, BoundaryPolicy::Strict).unwrap();
        // a generic plane through the centre of a cube cuts it in a hexagon
        assert_eq!(exact.len(), 6);
        let m = (4.0 * TAU / exact.min_arc_width) as usize;
        assert_eq!(discretized_shadow(&lp, &p, m.max(4)).unwrap(), exact.bases);
    }

    #[test]
    fn square_instance_with_plane_outside_cone() {
        // u = (1, 2, -1) and v = (-2, -1, 1) leave no common nonnegative direction
        let lp = LinearProgram::from_rows(
            &[[1.0, 0.2, 0.1], [0.3, 1.0, -0.2], [0.1, -0.4, 1.0]],
            vec![1.0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let m = lp.a().transpose();
        let p = plane(
            &m.mul_vec(&[1.0, 2.0, -1.0]),
            &m.mul_vec(&[-2.0, -1.0, 1.0]),
        );
        assert!(exact_shadow(&lp, &p, BoundaryPolicy::Strict)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn grid_counts_settle_on_exact_count() {
        let mut s = crate::random::RngStream::new(8, 0);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..3).map(|_| s.standard_normal()).collect())
            .collect();
        let lp = LinearProgram::from_rows(&rows, vec![1.0; 8], vec![1.0, 0.0, 0.0]).unwrap();
        let p = plane(&random_vec(21, 3), &random_vec(22, 3));
        let exact = exact_shadow(&lp, &p, BoundaryPolicy::Strict).unwrap();
        assert!(exact.len() >= 3);
        let stable = ((2.0 * TAU / exact.min_arc_width) as usize)
            .next_power_of_two()
            .max(8);
        let mut prev: Option<BTreeSet<Basis>> = None;
        let mut m = 4;
        while m <= 2 * stable {
            let found = discretized_shadow(&lp, &p, m).unwrap();
            assert!(found.is_subset(&exact.bases));
            if let Some(prev) = &prev {
                assert!(prev.is_subset(&found), "grid of {m} lost a basis");
            }
            prev = Some(found);
            m *= 2;
        }
        assert_eq!(prev.unwrap(), exact.bases);
    }
}
