//! Composable summaries for distributed volume maximization.
//!
//! A dataset is split into parts; a mapper shrinks each part to a small
//! image while looking only at that part; the union of images then stands
//! in for the whole dataset. For mappers that return `(1+eps)`-locally
//! optimal solutions, the max determinant over the union of images is at
//! most a factor `(2k(1+eps))^(2k)` below the max determinant over the
//! union of parts, no matter how the data was split. [`verify_composition`]
//! measures the observed factor against that guarantee by exact
//! enumeration on both unions.
//!
//! Unions are multisets: images from different parts may repeat a point,
//! and composition never deduplicates. Composite ids encode the origin of
//! each point as `(part index, original id)`.

use crate::diagnostics::composition_bound;
use crate::geometry::{GeometryError, LogVolume, PointSet};
use crate::solvers::{self, SolverError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoresetError {
    #[error("a coreset family needs at least one part")]
    EmptyFamily,
    #[error("part count and part size must be at least 1")]
    EmptyPart,
    #[error("part size {requested} exceeds the {available} available points")]
    PartSizeExceedsSource { requested: usize, available: usize },
    #[error("parts disagree on dimension: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("id {id} in part {part} does not fit the composite id layout")]
    IdOverflow { part: usize, id: u64 },
    #[error("family was built for k = {family_k}, verification asked for k = {requested}")]
    KMismatch { family_k: usize, requested: usize },
    #[error("enumerated optima are inconsistent (coreset above union or zero mismatch)")]
    InconsistentOptima,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// Mappers
// ---------------------------------------------------------------------------

/// How each part is summarized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapper {
    /// Greedy selection of `k` points.
    Greedy,
    /// Greedy followed by `(1+epsilon)` local search.
    LocalSearch { epsilon: f64 },
    /// The part itself, unshrunk. Composition is then lossless, which
    /// pins the observed factor at exactly zero.
    Identity,
}

impl Mapper {
    /// Stable label for report rows.
    pub fn label(&self) -> String {
        match self {
            Mapper::Greedy => "greedy".to_string(),
            Mapper::LocalSearch { epsilon } => format!("local-search({epsilon})"),
            Mapper::Identity => "identity".to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

/// Draws `m` parts of `n_i` points each from `p`, uniformly without
/// replacement within a part; parts are drawn independently, so the same
/// source point may appear in several parts. Positions within a part keep
/// the source order, so ids ascend. Fully determined by `seed`.
pub fn partition_dataset(
    p: &PointSet,
    m: usize,
    n_i: usize,
    seed: u64,
) -> Result<Vec<PointSet>, CoresetError> {
    if m < 1 || n_i < 1 {
        return Err(CoresetError::EmptyPart);
    }
    if n_i > p.len() {
        return Err(CoresetError::PartSizeExceedsSource {
            requested: n_i,
            available: p.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::with_capacity(m);
    for _ in 0..m {
        let mut positions = rand::seq::index::sample(&mut rng, p.len(), n_i).into_vec();
        positions.sort_unstable();
        parts.push(p.subset(&positions)?);
    }
    Ok(parts)
}

// ---------------------------------------------------------------------------
// Mapping and composition
// ---------------------------------------------------------------------------

/// Applies the mapper to one part, preserving original ids.
///
/// Solver mappers return `min(k, |part|)` points; a part smaller than `k`
/// comes back whole (the family records it as undersized). The identity
/// mapper always returns the whole part.
pub fn map_part(part: &PointSet, k: usize, mapper: Mapper) -> Result<PointSet, CoresetError> {
    let k_eff = k.min(part.len());
    let selected = match mapper {
        Mapper::Identity => return Ok(part.clone()),
        Mapper::Greedy => solvers::greedy(part, k_eff)?,
        Mapper::LocalSearch { epsilon } => solvers::local_search(part, k_eff, epsilon)?.0,
    };
    Ok(part.subset(selected.selected())?)
}

/// A partitioned dataset with its per-part images.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetFamily {
    parts: Vec<PointSet>,
    images: Vec<PointSet>,
    mapper: Mapper,
    k: usize,
    undersized: Vec<bool>,
}

impl CoresetFamily {
    /// Maps every part independently. Parts must agree on dimension.
    pub fn build(parts: Vec<PointSet>, k: usize, mapper: Mapper) -> Result<Self, CoresetError> {
        if parts.is_empty() {
            return Err(CoresetError::EmptyFamily);
        }
        if k < 1 {
            return Err(CoresetError::Solver(SolverError::InvalidK {
                k,
                n: parts[0].len(),
            }));
        }
        let dim = parts[0].dim();
        for part in &parts {
            if part.dim() != dim {
                return Err(CoresetError::DimensionMismatch {
                    expected: dim,
                    found: part.dim(),
                });
            }
        }
        let mut images = Vec::with_capacity(parts.len());
        let mut undersized = Vec::with_capacity(parts.len());
        for part in &parts {
            images.push(map_part(part, k, mapper)?);
            undersized.push(part.len() < k);
        }
        Ok(Self {
            parts,
            images,
            mapper,
            k,
            undersized,
        })
    }

    pub fn parts(&self) -> &[PointSet] {
        &self.parts
    }

    pub fn images(&self) -> &[PointSet] {
        &self.images
    }

    pub fn mapper(&self) -> Mapper {
        self.mapper
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Which parts had fewer than `k` points and were passed through whole.
    pub fn undersized(&self) -> &[bool] {
        &self.undersized
    }
}

/// Composite id layout: part index in the high 32 bits, original id in the
/// low 32.
pub fn composite_id(part: usize, original: u64) -> Result<u64, CoresetError> {
    if part >= (1 << 32) || original >= (1 << 32) {
        return Err(CoresetError::IdOverflow { part, id: original });
    }
    Ok(((part as u64) << 32) | original)
}

/// Inverse of [`composite_id`].
pub fn split_composite_id(id: u64) -> (usize, u64) {
    ((id >> 32) as usize, id & 0xffff_ffff)
}

/// Multiset union of the given sets, with fresh composite ids recording
/// `(part index, original id)`. Nothing is deduplicated: a point present
/// in two images appears twice, under two different ids.
pub fn compose(images: &[PointSet]) -> Result<PointSet, CoresetError> {
    if images.is_empty() {
        return Err(CoresetError::EmptyFamily);
    }
    let dim = images[0].dim();
    let mut points = Vec::new();
    let mut ids = Vec::new();
    for (part, image) in images.iter().enumerate() {
        if image.dim() != dim {
            return Err(CoresetError::DimensionMismatch {
                expected: dim,
                found: image.dim(),
            });
        }
        for pos in 0..image.len() {
            points.push(image.point(pos).to_vec());
            ids.push(composite_id(part, image.id(pos))?);
        }
    }
    Ok(PointSet::with_ids(points, ids)?)
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Enumerated optima over the two unions and the factor between them.
///
/// Determinants are squared volumes, so every log here is twice a log
/// volume; zero-volume optima surface as `-inf` in the maxdet fields with
/// an observed factor of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    pub k: usize,
    pub log_maxdet_union: f64,
    pub log_maxdet_coresets: f64,
    /// `log_maxdet_union - log_maxdet_coresets`, at least zero.
    pub log_alpha_observed: f64,
    /// The guarantee for this family's mapper: `2k ln(2k(1+eps))` with
    /// `eps = sqrt(k)` for greedy, the mapper's own `eps` for local
    /// search, and zero for identity.
    pub log_alpha_bound: f64,
}

/// Brute-forces the max determinant over the union of parts and over the
/// union of images, and reports the observed composition factor against
/// the mapper's guarantee. `k` must match the family's build size.
pub fn verify_composition(
    family: &CoresetFamily,
    k: usize,
) -> Result<CompositionReport, CoresetError> {
    if k != family.k {
        return Err(CoresetError::KMismatch {
            family_k: family.k,
            requested: k,
        });
    }
    let union_all = compose(&family.parts)?;
    let union_images = compose(&family.images)?;
    let opt_union = solvers::brute_force_maxvol(&union_all, k)?;
    let opt_images = solvers::brute_force_maxvol(&union_images, k)?;

    let (maxdet_union, maxdet_images, observed) =
        match (opt_union.log_vol(), opt_images.log_vol()) {
            (LogVolume::Finite(u), LogVolume::Finite(c)) => {
                let diff = 2.0 * (u - c);
                if diff < -1e-9 {
                    // The image union is a subset of the part union, so its
                    // optimum can never genuinely win.
                    return Err(CoresetError::InconsistentOptima);
                }
                (2.0 * u, 2.0 * c, diff.max(0.0))
            }
            (LogVolume::Zero, LogVolume::Zero) => {
                (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0)
            }
            _ => return Err(CoresetError::InconsistentOptima),
        };

    let bound = match family.mapper {
        Mapper::Greedy => composition_bound(k, (k as f64).sqrt()),
        Mapper::LocalSearch { epsilon } => composition_bound(k, epsilon),
        Mapper::Identity => 0.0,
    };
    Ok(CompositionReport {
        k,
        log_maxdet_union: maxdet_union,
        log_maxdet_coresets: maxdet_images,
        log_alpha_observed: observed,
        log_alpha_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::tightness_instance;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }

    fn grid(n: usize, d: usize) -> PointSet {
        let points = (0..n)
            .map(|i| (0..d).map(|j| ((i * d + j) % 7 + 1) as f64).collect())
            .collect();
        PointSet::new(points).unwrap()
    }

    // ==== partition_dataset ===============================================

    #[test]
    fn partition_is_deterministic_and_well_formed() {
        let p = grid(10, 3);
        let a = partition_dataset(&p, 4, 6, 99).unwrap();
        let b = partition_dataset(&p, 4, 6, 99).unwrap();
        assert_eq!(a, b);
        for part in &a {
            assert_eq!(part.len(), 6);
            // Ids ascend and point back into the source.
            for w in part.ids().windows(2) {
                assert!(w[0] < w[1]);
            }
            for pos in 0..part.len() {
                let src = part.id(pos) as usize;
                assert_eq!(part.point(pos), p.point(src));
            }
        }
        let c = partition_dataset(&p, 4, 6, 100).unwrap();
        assert_ne!(a, c, "different seeds should draw different parts");
    }

    #[test]
    fn partition_rejects_oversized_parts() {
        let p = grid(5, 2);
        assert_eq!(
            partition_dataset(&p, 2, 6, 1).unwrap_err(),
            CoresetError::PartSizeExceedsSource {
                requested: 6,
                available: 5
            }
        );
        assert_eq!(
            partition_dataset(&p, 0, 2, 1).unwrap_err(),
            CoresetError::EmptyPart
        );
    }

    // ==== map_part / compose ==============================================

    #[test]
    fn greedy_mapper_keeps_original_ids() {
        let p = tightness_instance(2).unwrap();
        let image = map_part(&p, 2, Mapper::Greedy).unwrap();
        assert_eq!(image.ids(), &[0, 1]);
    }

    #[test]
    fn identity_mapper_returns_whole_part() {
        let p = grid(5, 2);
        let image = map_part(&p, 2, Mapper::Identity).unwrap();
        assert_eq!(image, p);
    }

    #[test]
    fn undersized_parts_pass_through_flagged() {
        let parts = vec![grid(2, 2), grid(5, 2)];
        let family = CoresetFamily::build(parts, 3, Mapper::Greedy).unwrap();
        assert_eq!(family.undersized(), &[true, false]);
        assert_eq!(family.images()[0].len(), 2);
        assert_eq!(family.images()[1].len(), 3);
    }

    #[test]
    fn compose_builds_multiset_with_origin_ids() {
        let a = PointSet::with_ids(vec![vec![1.0, 0.0]], vec![3]).unwrap();
        let b = PointSet::with_ids(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![3, 4]).unwrap();
        let u = compose(&[a, b]).unwrap();
        assert_eq!(u.len(), 3, "no deduplication across parts");
        assert_eq!(split_composite_id(u.id(0)), (0, 3));
        assert_eq!(split_composite_id(u.id(1)), (1, 3));
        assert_eq!(split_composite_id(u.id(2)), (1, 4));
    }

    #[test]
    fn compose_rejects_empty_and_mismatched_input() {
        assert_eq!(compose(&[]).unwrap_err(), CoresetError::EmptyFamily);
        let a = grid(2, 2);
        let b = grid(2, 3);
        assert!(matches!(
            compose(&[a, b]).unwrap_err(),
            CoresetError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn composite_id_roundtrip_and_overflow() {
        let id = composite_id(7, 123).unwrap();
        assert_eq!(split_composite_id(id), (7, 123));
        assert!(matches!(
            composite_id(0, 1 << 32),
            Err(CoresetError::IdOverflow { .. })
        ));
    }

    // ==== verify_composition ==============================================

    #[test]
    fn identity_family_composes_losslessly() {
        let p = grid(6, 3);
        let parts = partition_dataset(&p, 1, 6, 5).unwrap();
        let family = CoresetFamily::build(parts, 2, Mapper::Identity).unwrap();
        let report = verify_composition(&family, 2).unwrap();
        assert_eq!(report.log_alpha_observed, 0.0);
        assert_eq!(report.log_alpha_bound, 0.0);
    }

    #[test]
    fn greedy_family_on_two_tight_parts() {
        let part = tightness_instance(2).unwrap();
        let family =
            CoresetFamily::build(vec![part.clone(), part], 2, Mapper::Greedy).unwrap();
        let report = verify_composition(&family, 2).unwrap();
        // Union optimum: the two axis vectors, det 4. Image union keeps
        // only {all-ones, first axis} per part, det 2.
        assert_close(
            report.log_maxdet_union,
            2.0 * 2.0f64.ln(),
            1e-12,
            "union maxdet",
        );
        assert_close(
            report.log_maxdet_coresets,
            2.0f64.ln(),
            1e-12,
            "image maxdet",
        );
        assert_close(
            report.log_alpha_observed,
            2.0f64.ln(),
            1e-12,
            "observed factor",
        );
        assert_close(
            report.log_alpha_bound,
            9.070671792557735,
            1e-12,
            "greedy guarantee at k = 2",
        );
        assert!(report.log_alpha_observed <= report.log_alpha_bound);
    }

    #[test]
    fn verify_rejects_mismatched_k() {
        let family = CoresetFamily::build(vec![grid(4, 2)], 2, Mapper::Greedy).unwrap();
        assert_eq!(
            verify_composition(&family, 3).unwrap_err(),
            CoresetError::KMismatch {
                family_k: 2,
                requested: 3
            }
        );
    }
}
