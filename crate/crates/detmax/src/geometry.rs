//! Point sets, orthogonal bases, and log-space volumes.
//!
//! The volume of the parallelepiped spanned by vectors `v_1..v_t` equals the
//! product of residual norms produced by Gram-Schmidt, and its square equals
//! the determinant of the Gram matrix. Everything here works in log space:
//! a volume is either exactly zero (linear dependence under the rank
//! tolerance) or a finite `ln` value, so products of many tiny or huge
//! residuals never overflow.
//!
//! Orthogonalization is modified Gram-Schmidt with one conditional
//! re-orthogonalization pass: when a residual loses more than half its
//! squared mass against the basis, one extra sweep restores orthogonality
//! to working precision. Values are immutable; extending a basis returns a
//! new one.

use thiserror::Error;

/// Relative rank tolerance. A residual of norm `r` counts as zero when
/// `r <= RANK_REL_TOL * max(1, ||v||)` for the incoming vector `v`. The
/// `max(1, ..)` guard keeps near-zero input vectors from passing as
/// independent on noise alone.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Residual threshold that triggers the second orthogonalization pass:
/// one re-sweep whenever the first pass removes more than half the
/// squared norm of the input.
const REORTH_FACTOR: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Rank cutoff for a vector of the given Euclidean norm.
pub fn rank_tolerance(input_norm: f64) -> f64 {
    RANK_REL_TOL * input_norm.max(1.0)
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a point set must contain at least one point")]
    EmptyPointSet,
    #[error("vectors must be at least one-dimensional")]
    ZeroDimension,
    #[error("vector entries must be finite")]
    NonFiniteEntry,
    #[error("point ids must be unique, id {0} repeats")]
    DuplicateId(u64),
    #[error("id list length {ids} does not match point count {points}")]
    IdCountMismatch { ids: usize, points: usize },
    #[error(
        "rank-deficient extension: residual norm {residual_norm:.3e} is below the rank tolerance"
    )]
    RankDeficientExtension { residual_norm: f64 },
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += c * x`
pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

// ---------------------------------------------------------------------------
// PointSet
// ---------------------------------------------------------------------------

/// A finite set of points in `R^d` with stable integer ids.
///
/// Positions (`0..len`) index storage order; ids are the stable external
/// identity and survive subsetting. For freshly constructed sets the two
/// coincide. Composed sets (see [`crate::coreset::compose`]) carry synthetic
/// ids that encode the originating part.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    ids: Vec<u64>,
    dim: usize,
}

impl PointSet {
    /// Builds a set with ids `0..n`. Rejects empty input, ragged or
    /// zero-dimensional rows, and non-finite entries.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let n = points.len();
        Self::with_ids(points, (0..n as u64).collect())
    }

    /// Builds a set with caller-chosen ids, which must be unique.
    pub fn with_ids(points: Vec<Vec<f64>>, ids: Vec<u64>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyPointSet);
        }
        if ids.len() != points.len() {
            return Err(GeometryError::IdCountMismatch {
                ids: ids.len(),
                points: points.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        for p in &points {
            if p.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFiniteEntry);
            }
        }
        let mut seen = ids.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(GeometryError::DuplicateId(w[0]));
            }
        }
        Ok(Self { points, ids, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 is a construction invariant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, position: usize) -> &[f64] {
        &self.points[position]
    }

    pub fn id(&self, position: usize) -> u64 {
        self.ids[position]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }

    /// The sub-set at the given positions, preserving ids and order.
    pub fn subset(&self, positions: &[usize]) -> Result<PointSet, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::EmptyPointSet);
        }
        let points = positions.iter().map(|&p| self.points[p].clone()).collect();
        let ids = positions.iter().map(|&p| self.ids[p]).collect();
        PointSet::with_ids(points, ids)
    }
}

// ---------------------------------------------------------------------------
// LogVolume
// ---------------------------------------------------------------------------

/// Volume of a vector set, in log space.
///
/// `Zero` means the set is linearly dependent under the rank tolerance;
/// there is no log value to read in that case, which the enum makes
/// unrepresentable. The empty set has volume 1 (`Finite(0.0)`), the empty
/// product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogVolume {
    Zero,
    Finite(f64),
}

impl LogVolume {
    pub fn is_zero(self) -> bool {
        matches!(self, LogVolume::Zero)
    }

    /// The log value, when the volume is nonzero.
    pub fn finite(self) -> Option<f64> {
        match self {
            LogVolume::Zero => None,
            LogVolume::Finite(v) => Some(v),
        }
    }

    /// Collapses to `-inf` for zero volume. Handy for ordering; never
    /// feed the result back into arithmetic that assumes finiteness.
    pub fn log_or_neg_inf(self) -> f64 {
        match self {
            LogVolume::Zero => f64::NEG_INFINITY,
            LogVolume::Finite(v) => v,
        }
    }
}

// ---------------------------------------------------------------------------
// OrthoBasis
// ---------------------------------------------------------------------------

/// An incrementally built orthogonal basis.
///
/// `original[j]` is the j-th appended vector, `orthogonalized[j]` its
/// residual against the preceding ones, and `residual_norms[j]` that
/// residual's Euclidean norm. The orthogonalized vectors are mutually
/// orthogonal and span the same subspace as the originals.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    dim: usize,
    original: Vec<Vec<f64>>,
    orthogonalized: Vec<Vec<f64>>,
    residual_norms: Vec<f64>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(Self {
            dim,
            original: Vec::new(),
            orthogonalized: Vec::new(),
            residual_norms: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn original(&self) -> &[Vec<f64>] {
        &self.original
    }

    pub fn orthogonalized(&self) -> &[Vec<f64>] {
        &self.orthogonalized
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    /// Sum of log residual norms, i.e. the log volume of the appended
    /// vectors, treating any below-tolerance entry as a dependence.
    pub fn log_volume(&self) -> LogVolume {
        let mut acc = 0.0;
        for (j, &r) in self.residual_norms.iter().enumerate() {
            if r <= rank_tolerance(norm(&self.original[j])) {
                return LogVolume::Zero;
            }
            acc += r.ln();
        }
        LogVolume::Finite(acc)
    }

    /// Component of `v` orthogonal to the basis span, with its norm.
    ///
    /// One modified Gram-Schmidt sweep, plus a second sweep when the first
    /// removes more than half of the squared input norm. Against an empty
    /// basis the residual is `v` itself.
    pub fn residual(&self, v: &[f64]) -> Result<(Vec<f64>, f64), GeometryError> {
        if v.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let input_norm = norm(v);
        let mut r = v.to_vec();
        self.project_out(&mut r);
        let mut rn = norm(&r);
        if rn < REORTH_FACTOR * input_norm && !self.is_empty() {
            self.project_out(&mut r);
            rn = norm(&r);
        }
        Ok((r, rn))
    }

    /// Subtracts from `r` its projection onto each basis direction in turn.
    fn project_out(&self, r: &mut [f64]) {
        for (q, &qn) in self.orthogonalized.iter().zip(&self.residual_norms) {
            if qn > 0.0 {
                let c = dot(r, q) / (qn * qn);
                axpy(-c, q, r);
            }
        }
    }

    /// A new basis with `v` appended, or an error when `v` lies in the
    /// current span (residual below the rank tolerance). The distinct
    /// error signal lets callers tell rank deficiency apart from shape
    /// problems.
    pub fn extend(&self, v: &[f64]) -> Result<OrthoBasis, GeometryError> {
        let (r, rn) = self.residual(v)?;
        if rn <= rank_tolerance(norm(v)) {
            return Err(GeometryError::RankDeficientExtension { residual_norm: rn });
        }
        let mut next = self.clone();
        next.push_raw(v.to_vec(), r, rn);
        Ok(next)
    }

    /// Appends an entry without the rank gate. Used by the solvers to
    /// record dependent picks in rank-deficient solutions; the zero-volume
    /// flag is handled at the solution level.
    pub(crate) fn push_raw(&mut self, original: Vec<f64>, orthogonalized: Vec<f64>, rn: f64) {
        debug_assert_eq!(original.len(), self.dim);
        self.original.push(original);
        self.orthogonalized.push(orthogonalized);
        self.residual_norms.push(rn);
    }
}

// ---------------------------------------------------------------------------
// Free operations
// ---------------------------------------------------------------------------

fn common_dim<V: AsRef<[f64]>>(vectors: &[V]) -> Result<usize, GeometryError> {
    let dim = vectors[0].as_ref().len();
    if dim == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    for v in vectors {
        if v.as_ref().len() != dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: v.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// The Gram matrix `G[i][j] = <v_i, v_j>`. Empty input gives the 0x0 matrix.
pub fn gram_matrix<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<Vec<f64>>, GeometryError> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    common_dim(vectors)?;
    let t = vectors.len();
    let mut g = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in i..t {
            let v = dot(vectors[i].as_ref(), vectors[j].as_ref());
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

/// Log volume of the parallelepiped spanned by the vectors: the sum of log
/// residual norms under Gram-Schmidt, or `Zero` when any residual falls
/// below the rank tolerance. The empty set yields `Finite(0.0)`.
pub fn log_volume<V: AsRef<[f64]>>(vectors: &[V]) -> Result<LogVolume, GeometryError> {
    if vectors.is_empty() {
        return Ok(LogVolume::Finite(0.0));
    }
    let dim = common_dim(vectors)?;
    let mut basis = OrthoBasis::new(dim)?;
    let mut acc = 0.0;
    for v in vectors {
        let v = v.as_ref();
        let (r, rn) = basis.residual(v)?;
        if rn <= rank_tolerance(norm(v)) {
            return Ok(LogVolume::Zero);
        }
        acc += rn.ln();
        basis.push_raw(v.to_vec(), r, rn);
    }
    Ok(LogVolume::Finite(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: f64 = 1e-12;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }

    // ==== gram_matrix ======================================================

    #[test]
    fn gram_of_standard_basis_is_identity() {
        let g = gram_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn gram_of_sheared_pair() {
        let g = gram_matrix(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(g, vec![vec![1.0, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn gram_of_single_vector_is_squared_norm() {
        let g = gram_matrix(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(g, vec![vec![25.0]]);
    }

    #[test]
    fn gram_rejects_mixed_dimensions() {
        let err = gram_matrix(&[vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert_eq!(
            err,
            GeometryError::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    // ==== log_volume =======================================================

    #[test]
    fn unit_area_shear() {
        // {(1,0),(1,1)} spans a parallelogram of area 1.
        let lv = log_volume(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_close(lv.finite().unwrap(), 0.0, TIGHT, "log area");
    }

    #[test]
    fn collinear_pair_is_zero() {
        let lv = log_volume(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(lv.is_zero());
    }

    #[test]
    fn scaled_axes_volume() {
        // Three orthogonal vectors of norm sqrt(3): volume 3^(3/2).
        let s = 3.0f64.sqrt();
        let lv = log_volume(&[
            vec![s, 0.0, 0.0],
            vec![0.0, s, 0.0],
            vec![0.0, 0.0, s],
        ])
        .unwrap();
        assert_close(lv.finite().unwrap(), 1.5 * 3.0f64.ln(), TIGHT, "log volume");
    }

    #[test]
    fn empty_set_has_unit_volume() {
        let lv = log_volume::<Vec<f64>>(&[]).unwrap();
        assert_eq!(lv, LogVolume::Finite(0.0));
    }

    #[test]
    fn appending_a_spanned_vector_forces_zero() {
        let v1 = vec![0.3, -1.2, 0.5];
        let v2 = vec![2.0, 0.1, -0.7];
        let combo: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| 0.4 * a - 1.3 * b).collect();
        let lv = log_volume(&[v1, v2, combo]).unwrap();
        assert!(lv.is_zero(), "dependent triple must have zero volume");
    }

    #[test]
    fn scaling_one_vector_shifts_log_volume() {
        let base = vec![vec![1.0, 2.0, 0.0], vec![0.5, -1.0, 1.0]];
        let before = log_volume(&base).unwrap().finite().unwrap();
        let scaled = vec![
            base[0].clone(),
            base[1].iter().map(|x| 7.5 * x).collect::<Vec<_>>(),
        ];
        let after = log_volume(&scaled).unwrap().finite().unwrap();
        assert_close(after - before, 7.5f64.ln(), 1e-10, "scaling shift");
    }

    // ==== residual =========================================================

    #[test]
    fn residual_against_one_axis() {
        let mut basis = OrthoBasis::new(2).unwrap();
        basis.push_raw(vec![1.0, 0.0], vec![1.0, 0.0], 1.0);
        let (r, rn) = basis.residual(&[3.0, 4.0]).unwrap();
        assert_eq!(r, vec![0.0, 4.0]);
        assert_close(rn, 4.0, TIGHT, "residual norm");
    }

    #[test]
    fn residual_against_empty_basis_is_input() {
        let basis = OrthoBasis::new(2).unwrap();
        let (r, rn) = basis.residual(&[3.0, 4.0]).unwrap();
        assert_eq!(r, vec![3.0, 4.0]);
        assert_close(rn, 5.0, TIGHT, "norm of untouched input");
    }

    #[test]
    fn residual_against_diagonal_direction() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut basis = OrthoBasis::new(2).unwrap();
        basis.push_raw(vec![h, h], vec![h, h], 1.0);
        let (r, rn) = basis.residual(&[1.0, 0.0]).unwrap();
        assert_close(r[0], 0.5, TIGHT, "residual x");
        assert_close(r[1], -0.5, TIGHT, "residual y");
        assert_close(rn, 0.5f64.sqrt(), TIGHT, "residual norm");
    }

    #[test]
    fn residual_rejects_wrong_dimension() {
        let basis = OrthoBasis::new(3).unwrap();
        assert!(matches!(
            basis.residual(&[1.0, 0.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn near_parallel_input_gets_second_pass() {
        // v is almost inside the basis span; the residual should still be
        // orthogonal to the basis to working precision.
        let mut basis = OrthoBasis::new(3).unwrap();
        basis.push_raw(vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], 1.0);
        let v = vec![1.0, 1e-7, 0.0];
        let (r, _) = basis.residual(&v).unwrap();
        assert!(
            dot(&r, &[1.0, 0.0, 0.0]).abs() < 1e-15,
            "residual not orthogonal after conditional re-pass"
        );
    }

    // ==== extend ===========================================================

    #[test]
    fn extend_rejects_spanned_vector_with_distinct_signal() {
        let basis = OrthoBasis::new(2).unwrap();
        let basis = basis.extend(&[1.0, 0.0]).unwrap();
        let basis = basis.extend(&[0.0, 1.0]).unwrap();
        let err = basis.extend(&[0.3, -0.9]).unwrap_err();
        assert!(matches!(
            err,
            GeometryError::RankDeficientExtension { .. }
        ));
    }

    #[test]
    fn extend_is_persistent_not_in_place() {
        let b0 = OrthoBasis::new(2).unwrap();
        let b1 = b0.extend(&[2.0, 0.0]).unwrap();
        assert_eq!(b0.len(), 0);
        assert_eq!(b1.len(), 1);
        assert_close(b1.residual_norms()[0], 2.0, TIGHT, "first residual");
    }

    #[test]
    fn basis_log_volume_matches_free_function() {
        let vs = [vec![1.0, 2.0, -1.0], vec![0.0, 1.0, 1.0], vec![3.0, 0.0, 1.0]];
        let mut basis = OrthoBasis::new(3).unwrap();
        for v in &vs {
            basis = basis.extend(v).unwrap();
        }
        let a = basis.log_volume().finite().unwrap();
        let b = log_volume(&vs).unwrap().finite().unwrap();
        assert_close(a, b, 1e-10, "two volume routes");
    }

    // ==== PointSet =========================================================

    #[test]
    fn point_set_validates_input() {
        assert_eq!(
            PointSet::new(Vec::new()).unwrap_err(),
            GeometryError::EmptyPointSet
        );
        assert_eq!(
            PointSet::new(vec![vec![]]).unwrap_err(),
            GeometryError::ZeroDimension
        );
        assert!(matches!(
            PointSet::new(vec![vec![1.0], vec![1.0, 2.0]]).unwrap_err(),
            GeometryError::DimensionMismatch { .. }
        ));
        assert_eq!(
            PointSet::new(vec![vec![f64::NAN]]).unwrap_err(),
            GeometryError::NonFiniteEntry
        );
        assert_eq!(
            PointSet::with_ids(vec![vec![1.0], vec![2.0]], vec![5, 5]).unwrap_err(),
            GeometryError::DuplicateId(5)
        );
    }

    #[test]
    fn subset_preserves_ids() {
        let p = PointSet::with_ids(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![10, 20, 30],
        )
        .unwrap();
        let s = p.subset(&[2, 0]).unwrap();
        assert_eq!(s.ids(), &[30, 10]);
        assert_eq!(s.point(0), &[3.0]);
    }
}
