//! Linear programs of the form `maximize ⟨z, x⟩ subject to ⟨a_i, x⟩ ≤ y_i`,
//! bases, solve results, the general-position report and the plain-text
//! instance format.
//!
//! # File format
//!
//! ```text
//! # comment lines start with '#'
//! n d
//! a_11 ... a_1d y_1
//! ...
//! a_n1 ... a_nd y_n
//! z_1 ... z_d
//! ```
//!
//! Numbers are whitespace separated decimals (scientific notation allowed).
//! [`write_lp`] emits 17 significant digits so that reading the output back
//! reproduces every entry bit for bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Lu, Mat};

/// Largest number of index subsets any exhaustive scan will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid linear program: {0}")]
    Invalid(String),
    #[error("enumeration of C({n},{k}) = {count} subsets exceeds the limit")]
    TooLarge { n: usize, k: usize, count: u128 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `maximize ⟨z, x⟩` subject to `A x ≤ y`, with `A` holding the constraint
/// normals as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    a: Mat,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl LinearProgram {
    pub fn new(a: Mat, y: Vec<f64>, z: Vec<f64>) -> Result<Self, LpError> {
        let (n, d) = (a.rows(), a.cols());
        if d < 2 {
            return Err(LpError::Invalid(format!(
                "dimension d = {d} must be at least 2"
            )));
        }
        if y.len() != n {
            return Err(LpError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if z.len() != d {
            return Err(LpError::DimensionMismatch {
                expected: d,
                got: z.len(),
            });
        }
        if y.iter().chain(&z).any(|v| !v.is_finite()) {
            return Err(LpError::Invalid(
                "non-finite right-hand side or objective".into(),
            ));
        }
        if linalg::norm(&z) == 0.0 {
            return Err(LpError::Invalid("objective must be nonzero".into()));
        }
        Ok(Self { a, y, z })
    }

    pub fn from_rows<R: AsRef<[f64]>>(
        rows: &[R],
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, LpError> {
        Self::new(Mat::from_rows(rows)?, y, z)
    }

    /// Number of constraints.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Number of variables.
    pub fn d(&self) -> usize {
        self.a.cols()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.a.row(i)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Same constraint normals and objective, new right-hand side.
    pub fn with_rhs(&self, y: Vec<f64>) -> Result<Self, LpError> {
        Self::new(self.a.clone(), y, self.z.clone())
    }

    pub fn with_objective(&self, z: Vec<f64>) -> Result<Self, LpError> {
        Self::new(self.a.clone(), self.y.clone(), z)
    }

    /// `max_i ‖(y_i, a_i)‖`
    pub fn scale(&self) -> f64 {
        self.a
            .row_iter()
            .zip(&self.y)
            .map(|(r, &yi)| {
                let mut v = Vec::with_capacity(r.len() + 1);
                v.push(yi);
                v.extend_from_slice(r);
                linalg::norm(&v)
            })
            .fold(0.0, f64::max)
    }

    pub fn all_rhs_positive(&self) -> bool {
        self.y.iter().all(|&v| v > 0.0)
    }

    /// `A_I`, the rows indexed by the basis.
    pub fn basis_matrix(&self, basis: &Basis) -> Mat {
        self.a.select_rows(basis.as_slice())
    }

    /// The point where every constraint in `basis` is tight.
    pub fn vertex(&self, basis: &Basis) -> Result<Vec<f64>, LinalgError> {
        let lu = Lu::factor(&self.basis_matrix(basis))?;
        Ok(lu.solve(&basis.select(&self.y)))
    }

    /// `max_i (⟨a_i, x⟩ − y_i)`, positive when `x` is infeasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a
            .row_iter()
            .zip(&self.y)
            .map(|(r, &yi)| linalg::dot(r, x) - yi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.z, x)
    }
}

/// A sorted set of `d` distinct constraint indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Basis(Vec<usize>);

impl Basis {
    /// Sorts the indices and checks they are distinct and below `n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self, LpError> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(LpError::Invalid(format!(
                "repeated index in basis {indices:?}"
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(LpError::Invalid(format!(
                "basis index {bad} out of range 0..{n}"
            )));
        }
        Ok(Self(indices))
    }

    /// Wraps indices that are already sorted and distinct.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Position of index `i` within the basis.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    /// `I ∪ {enter} − {leave}`
    pub fn exchange(&self, leave: usize, enter: usize) -> Basis {
        let mut v: Vec<usize> = self.0.iter().copied().filter(|&i| i != leave).collect();
        v.push(enter);
        v.sort_unstable();
        Basis(v)
    }

    /// Picks the entries of `v` at the basis indices.
    pub fn select(&self, v: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| v[i]).collect()
    }

    /// Number of indices shared with `other`.
    pub fn overlap(&self, other: &Basis) -> usize {
        self.0.iter().filter(|&&i| other.contains(i)).count()
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum SolveResult {
    Optimal {
        vertex: Vec<f64>,
        basis: Basis,
        objective: f64,
    },
    Unbounded,
    Infeasible,
}

impl SolveResult {
    pub fn status(&self) -> Status {
        match self {
            SolveResult::Optimal { .. } => Status::Optimal,
            SolveResult::Unbounded => Status::Unbounded,
            SolveResult::Infeasible => Status::Infeasible,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            SolveResult::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Unbounded,
    Infeasible,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "OPTIMAL",
            Status::Unbounded => "UNBOUNDED",
            Status::Infeasible => "INFEASIBLE",
        })
    }
}

/// `C(n, k)` in `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

pub(crate) fn check_enumerable(n: usize, k: usize) -> Result<(), LpError> {
    let count = binomial(n, k);
    if count > ENUMERATION_LIMIT {
        return Err(LpError::TooLarge { n, k, count });
    }
    Ok(())
}

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

pub fn combinations(n: usize, k: usize) -> Combinations {
    Combinations {
        n,
        current: (k <= n).then(|| (0..k).collect()),
    }
}

impl Iterator for Combinations {
    type Item = Basis;

    fn next(&mut self) -> Option<Basis> {
        let cur = self.current.as_mut()?;
        let out = Basis(cur.clone());
        let k = cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Thresholds for [`check_general_position`], relative to
/// `scale = max_i ‖(y_i, a_i)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralPositionTol {
    /// An off-basis constraint with `|⟨a_j, x⟩ − y_j| ≤ tight_gap · scale` is tight.
    pub tight_gap: f64,
    /// A basis with `smin(A_I) ≤ subset_smin · scale` is singular.
    pub subset_smin: f64,
}

impl Default for GeneralPositionTol {
    fn default() -> Self {
        Self {
            tight_gap: 1e-9,
            subset_smin: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DegeneracyKind {
    /// `A_I` is (numerically) rank deficient.
    SingularBasis,
    /// The vertex of a basis makes the named off-basis constraint tight.
    TightConstraint { row: usize },
    /// The objective lies in the span of `d − 1` constraint normals.
    ObjectiveInSpan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFlag {
    pub indices: Vec<usize>,
    pub kind: DegeneracyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub min_subset_smin: f64,
    pub min_slack_gap: f64,
    /// Smallest `smin` of `[a_S/scale; z/‖z‖]` over `(d−1)`-sets `S`.
    pub min_objective_distance: f64,
    pub degenerate_flags: Vec<DegenerateFlag>,
}

impl GeneralPositionReport {
    pub fn is_general(&self) -> bool {
        self.degenerate_flags.is_empty()
    }
}

/// Enumerates every `d`-set and `(d−1)`-set of constraints looking for the
/// coincidences that break general position.
pub fn check_general_position(
    lp: &LinearProgram,
    tol: GeneralPositionTol,
) -> Result<GeneralPositionReport, LpError> {
    let (n, d) = (lp.n(), lp.d());
    check_enumerable(n, d)?;
    check_enumerable(n, d - 1)?;
    let scale = lp.scale().max(f64::MIN_POSITIVE);
    let mut report = GeneralPositionReport {
        min_subset_smin: f64::INFINITY,
        min_slack_gap: f64::INFINITY,
        min_objective_distance: f64::INFINITY,
        degenerate_flags: Vec::new(),
    };

    for basis in combinations(n, d) {
        let m = lp.basis_matrix(&basis);
        let s = linalg::smin(&m);
        report.min_subset_smin = report.min_subset_smin.min(s);
        if s <= tol.subset_smin * scale {
            report.degenerate_flags.push(DegenerateFlag {
                indices: basis.as_slice().to_vec(),
                kind: DegeneracyKind::SingularBasis,
            });
            continue;
        }
        let x = match lp.vertex(&basis) {
            Ok(x) => x,
            Err(_) => {
                report.degenerate_flags.push(DegenerateFlag {
                    indices: basis.as_slice().to_vec(),
                    kind: DegeneracyKind::SingularBasis,
                });
                continue;
            }
        };
        for j in (0..n).filter(|&j| !basis.contains(j)) {
            let gap = (linalg::dot(lp.row(j), &x) - lp.y()[j]).abs();
            report.min_slack_gap = report.min_slack_gap.min(gap);
            if gap <= tol.tight_gap * scale {
                report.degenerate_flags.push(DegenerateFlag {
                    indices: basis.as_slice().to_vec(),
                    kind: DegeneracyKind::TightConstraint { row: j },
                });
            }
        }
    }

    let z_unit: Vec<f64> = {
        let zn = linalg::norm(lp.z());
        lp.z().iter().map(|v| v / zn).collect()
    };
    for subset in combinations(n, d - 1) {
        let mut rows: Vec<Vec<f64>> = subset
            .as_slice()
            .iter()
            .map(|&i| lp.row(i).iter().map(|v| v / scale).collect())
            .collect();
        rows.push(z_unit.clone());
        let s = linalg::smin(&Mat::from_rows(&rows)?);
        report.min_objective_distance = report.min_objective_distance.min(s);
        if s <= tol.subset_smin {
            report.degenerate_flags.push(DegenerateFlag {
                indices: subset.as_slice().to_vec(),
                kind: DegeneracyKind::ObjectiveInSpan,
            });
        }
    }
    Ok(report)
}

/// Parses the plain-text instance format.
pub fn read_lp(text: &str) -> Result<LinearProgram, LpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let parse_numbers = |line: usize, l: &str| -> Result<Vec<f64>, LpError> {
        l.split_whitespace()
            .map(|tok| {
                let v: f64 = tok.parse().map_err(|_| LpError::Parse {
                    line,
                    message: format!("invalid number {tok:?}"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(LpError::Parse {
                        line,
                        message: format!("non-finite number {tok:?}"),
                    })
                }
            })
            .collect()
    };

    let (hline, header) = lines.next().ok_or(LpError::Parse {
        line: 1,
        message: "missing header \"n d\"".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| LpError::Parse {
            line: hline,
            message: format!("invalid header {header:?}, expected \"n d\""),
        })?;
    let [n, d] = dims[..] else {
        return Err(LpError::Parse {
            line: hline,
            message: format!("header must hold exactly two integers, got {}", dims.len()),
        });
    };
    if n < 1 || d < 2 {
        return Err(LpError::Parse {
            line: hline,
            message: format!("need n >= 1 and d >= 2, got n = {n}, d = {d}"),
        });
    }

    let mut a = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let (line, l) = lines.next().ok_or(LpError::DimensionMismatch {
            expected: n,
            got: k,
        })?;
        let nums = parse_numbers(line, l)?;
        if nums.len() != d + 1 {
            return Err(LpError::Parse {
                line,
                message: format!(
                    "constraint row has {} entries, expected {}",
                    nums.len(),
                    d + 1
                ),
            });
        }
        a.extend_from_slice(&nums[..d]);
        y.push(nums[d]);
    }
    let (zline, l) = lines.next().ok_or(LpError::Parse {
        line: text.lines().count() + 1,
        message: "missing objective line".into(),
    })?;
    let z = parse_numbers(zline, l)?;
    if z.len() != d {
        return Err(LpError::Parse {
            line: zline,
            message: format!("objective has {} entries, expected {d}", z.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(LpError::Parse {
            line,
            message: "unexpected content after objective line".into(),
        });
    }
    LinearProgram::new(Mat::new(n, d, a)?, y, z)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", lp.n(), lp.d());
    for (row, yi) in lp.a().row_iter().zip(lp.y()) {
        let fields: Vec<String> = row
            .iter()
            .chain(std::iter::once(yi))
            .map(|&v| fmt_f64(v))
            .collect();
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    let fields: Vec<String> = lp.z().iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "{}", fields.join(" "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn simplex3() -> LinearProgram {
        LinearProgram::from_rows(
            &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![1.0; 3],
            vec![1.0; 3],
        )
        .unwrap()
    }

    fn cube3(z: Vec<f64>) -> LinearProgram {
        let mut rows = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; 3];
                r[i] = s;
                rows.push(r);
            }
        }
        LinearProgram::from_rows(&rows, vec![1.0; 6], z).unwrap()
    }

    #[test]
    fn reads_simplex_instance() {
        let lp = read_lp("3 3\n1 0 0 1\n0 1 0 1\n0 0 1 1\n1 1 1\n").unwrap();
        assert_eq!(lp, simplex3());
    }

    #[test]
    fn accepts_comments_crlf_and_scientific() {
        let text = "# header comment\r\n2 2\r\n1e0 0 1\r\n# mid\r\n0 1.0E+0 1\r\n1 1\r\n";
        let lp = read_lp(text).unwrap();
        assert_eq!(lp.n(), 2);
        assert_eq!(lp.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn malformed_row_names_line() {
        let err = read_lp("3 3\n1 0 0 1\n0 1 0\n0 0 1 1\n1 1 1\n").unwrap_err();
        assert!(matches!(err, LpError::Parse { line: 3, .. }), "{err:?}");
        let err = read_lp("2 2\n1 0 1\n0 x 1\n1 1\n").unwrap_err();
        assert!(matches!(err, LpError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn truncated_file_is_dimension_mismatch() {
        let err = read_lp("3 2\n1 0 1\n").unwrap_err();
        assert_eq!(
            err,
            LpError::DimensionMismatch {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn zero_objective_rejected() {
        assert!(matches!(
            read_lp("1 2\n1 0 1\n0 0\n"),
            Err(LpError::Invalid(_))
        ));
    }

    #[test]
    fn write_is_readable() {
        let lp = simplex3();
        assert_eq!(read_lp(&write_lp(&lp)).unwrap(), lp);
    }

    #[test]
    fn combinations_enumerate_all() {
        let all: Vec<_> = combinations(5, 3).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0].as_slice(), &[0, 1, 2]);
        assert_eq!(all[9].as_slice(), &[2, 3, 4]);
        assert_eq!(combinations(3, 0).count(), 1);
        assert_eq!(combinations(2, 3).count(), 0);
        assert_eq!(binomial(14, 5), 2002);
    }

    #[test]
    fn basis_validation_and_exchange() {
        let b = Basis::new(vec![4, 1, 2], 5).unwrap();
        assert_eq!(b.as_slice(), &[1, 2, 4]);
        assert!(Basis::new(vec![1, 1], 5).is_err());
        assert!(Basis::new(vec![0, 5], 5).is_err());
        let c = b.exchange(2, 0);
        assert_eq!(c.as_slice(), &[0, 1, 4]);
        assert_eq!(b.overlap(&c), 2);
    }

    #[test]
    fn general_position_simplex() {
        let rep = check_general_position(&simplex3(), GeneralPositionTol::default()).unwrap();
        assert!(rep.is_general(), "{rep:?}");
    }

    #[test]
    fn general_position_duplicate_row() {
        let lp = LinearProgram::from_rows(
            &[
                [1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![1.0, 2.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let rep = check_general_position(&lp, GeneralPositionTol::default()).unwrap();
        assert!(rep
            .degenerate_flags
            .iter()
            .any(|f| f.kind == DegeneracyKind::SingularBasis && f.indices[..2] == [0, 1]));
    }

    #[test]
    fn general_position_cube_objective_in_span() {
        // z = e1 lies in the span of any pair holding row 0 (e1) or row 1
        // (−e1): {0,1} plus four partners each. The parallel pairs {2,3} and
        // {4,5} span a line, so the test matrix is singular for them too.
        let rep =
            check_general_position(&cube3(vec![1.0, 0.0, 0.0]), GeneralPositionTol::default())
                .unwrap();
        let spans: Vec<_> = rep
            .degenerate_flags
            .iter()
            .filter(|f| f.kind == DegeneracyKind::ObjectiveInSpan)
            .map(|f| f.indices.clone())
            .collect();
        assert_eq!(spans.len(), 11);
        assert!(spans.contains(&vec![0, 2]));
        assert!(spans.contains(&vec![2, 3]));
        assert!(!spans.contains(&vec![2, 4]));
    }

    #[test]
    fn general_position_guard() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![1.0, i as f64, 0.0, 0.0, 0.0, 1.0])
            .collect();
        let lp = LinearProgram::from_rows(&rows, vec![1.0; 60], vec![1.0; 6]).unwrap();
        assert!(matches!(
            check_general_position(&lp, GeneralPositionTol::default()),
            Err(LpError::TooLarge { .. })
        ));
    }
}
