//! Empirical checks of the solvers' guarantees.
//!
//! The central quantity is the local-optimality ratio of a solution: the
//! largest factor by which any single swap can grow its volume. For greedy
//! solutions on full-rank inputs that ratio never exceeds `1 + sqrt(k)`,
//! and [`tightness_instance`] constructs the input where it lands exactly
//! on `sqrt(k)`, so the bound cannot be sharpened below that. The offline
//! counterpart compares greedy directly against the enumerated optimum:
//! the volume gap is at most `sum_{i=2..k} ln(1 + sqrt(i))`, which beats
//! the classical `ln k!` guarantee once `k >= 4`.

use crate::geometry::{norm, LogVolume, PointSet};
use crate::solvers::{self, Solution, SolverError, SwapScan};
use thiserror::Error;

/// Slack added to theoretical bounds before declaring a violation, to
/// absorb honest floating-point error in the measured side.
pub const BOUND_SLACK: f64 = 1e-9;

/// Largest input-norm to residual-norm spread the fast swap scan is
/// trusted with. The scan works through the inverse Gram matrix, whose
/// conditioning is roughly the square of this spread; past the limit its
/// cancellation error can dwarf the true ratio, so the meter falls back
/// to evaluating every swap from scratch.
const SCAN_SPREAD_LIMIT: f64 = 1e3;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("the tight instance needs k >= 2, got {0}")]
    TightnessTooSmall(usize),
    #[error("greedy reported zero volume where the optimum is positive")]
    InconsistentVolumes,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

// ---------------------------------------------------------------------------
// Local optimality measurement
// ---------------------------------------------------------------------------

/// How close a solution is to single-swap optimality.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub k: usize,
    /// Largest volume ratio any single swap achieves, floored at 1.
    /// `None` when the solution has zero volume but some swap reaches a
    /// positive one: the ratio is then unbounded and incomparable.
    pub measured_ratio: Option<f64>,
    /// `1 + sqrt(k)`, the guarantee for greedy solutions on full-rank input.
    pub theoretical_bound: f64,
    /// `(out_position, in_id)` of the best swap, ties to the lowest
    /// position then the lowest id. `None` when no candidate exists or the
    /// report is incomparable.
    pub argmax_swap: Option<(usize, u64)>,
    pub rank_deficient: bool,
    /// Best raw ratio per out-position (not floored). Empty for
    /// zero-volume solutions and when no candidates exist.
    pub per_position_max: Vec<f64>,
}

/// Scans every (selected position, outside point) pair and reports the
/// largest volume ratio a single swap achieves over `sol`.
///
/// With no outside candidates the ratio is 1 by convention. Zero-volume
/// solutions are flagged rank-deficient: the ratio is 1 when every swap
/// also yields zero volume, and incomparable otherwise. Well-conditioned
/// solutions are scanned through the fast inverse-Gram route; badly
/// spread ones are measured pair by pair from scratch instead, trading
/// speed for accuracy.
pub fn measure_local_optimality(
    p: &PointSet,
    sol: &Solution,
) -> Result<OptimalityReport, DiagnosticsError> {
    sol.validate_for(p)?;
    let k = sol.k();
    let n = p.len();
    let bound = 1.0 + (k as f64).sqrt();

    let mut in_solution = vec![false; n];
    for &pos in sol.selected() {
        in_solution[pos] = true;
    }
    let candidates: Vec<usize> = (0..n).filter(|&j| !in_solution[j]).collect();

    if candidates.is_empty() {
        return Ok(OptimalityReport {
            k,
            measured_ratio: Some(1.0),
            theoretical_bound: bound,
            argmax_swap: None,
            rank_deficient: sol.rank_deficient(),
            per_position_max: Vec::new(),
        });
    }

    if sol.log_vol().is_zero() {
        // Ratios against a zero volume are either 1 (all swaps stay at
        // zero) or unbounded (some swap escapes to positive volume).
        let mut escapes = false;
        for pos in 0..k {
            for &cand in &candidates {
                let gain = solvers::swap_volume(
                    sol,
                    pos,
                    p.point(cand),
                    solvers::SwapMode::Recompute,
                )?;
                if gain.ratio == solvers::SwapRatio::ZeroToPositive {
                    escapes = true;
                    break;
                }
            }
            if escapes {
                break;
            }
        }
        return Ok(OptimalityReport {
            k,
            measured_ratio: if escapes { None } else { Some(1.0) },
            theoretical_bound: bound,
            argmax_swap: None,
            rank_deficient: true,
            per_position_max: Vec::new(),
        });
    }

    let mut best: Option<(f64, usize, u64)> = None;
    let mut per_position = vec![0.0f64; k];
    let spread_ok = {
        let min_residual = sol
            .basis()
            .residual_norms()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let max_input = sol
            .basis()
            .original()
            .iter()
            .map(|v| norm(v))
            .fold(0.0f64, f64::max);
        max_input <= min_residual * SCAN_SPREAD_LIMIT
    };
    if spread_ok {
        let scan = SwapScan::new(sol)?.expect("nonzero volume");
        for &cand in &candidates {
            let scores = scan.scores(p.point(cand));
            let id = p.id(cand);
            for pos in 0..k {
                let det = scan.det_ratio(&scores, pos);
                fold_pair(&mut best, &mut per_position, det.value.max(0.0).sqrt(), pos, id);
            }
        }
    } else {
        for &cand in &candidates {
            let id = p.id(cand);
            for pos in 0..k {
                let gain =
                    solvers::swap_volume(sol, pos, p.point(cand), solvers::SwapMode::Recompute)?;
                let ratio = match gain.ratio {
                    solvers::SwapRatio::Finite(r) => r.exp(),
                    // The current volume is positive, so a swap can only
                    // stay finite or collapse to zero.
                    _ => 0.0,
                };
                fold_pair(&mut best, &mut per_position, ratio, pos, id);
            }
        }
    }
    let (max_ratio, pos, id) = best.expect("candidates nonempty");
    // Snap to exactly 1 within the measurement noise floor so trivially
    // optimal cases (k = 1, k = n) report a clean ratio.
    let mut measured = max_ratio.max(1.0);
    if (measured - 1.0).abs() <= 1e-12 {
        measured = 1.0;
    }
    Ok(OptimalityReport {
        k,
        measured_ratio: Some(measured),
        theoretical_bound: bound,
        argmax_swap: Some((pos, id)),
        rank_deficient: false,
        per_position_max: per_position,
    })
}

/// Folds one evaluated swap into the running argmax and per-position
/// maxima; ties go to the lowest position, then the lowest incoming id.
fn fold_pair(
    best: &mut Option<(f64, usize, u64)>,
    per_position: &mut [f64],
    ratio: f64,
    pos: usize,
    id: u64,
) {
    if ratio > per_position[pos] {
        per_position[pos] = ratio;
    }
    let better = match best {
        None => true,
        Some((bv, bp, bi)) => ratio > *bv || (ratio == *bv && (pos, id) < (*bp, *bi)),
    };
    if better {
        *best = Some((ratio, pos, id));
    }
}

// ---------------------------------------------------------------------------
// Worst-case instance
// ---------------------------------------------------------------------------

/// The `k+1` points in `R^k` on which greedy's swap ratio is exactly
/// `sqrt(k)`: the all-ones vector followed by `sqrt(k) e_1 .. sqrt(k) e_k`.
///
/// All points share the norm `sqrt(k)`, so greedy (lowest position on
/// ties) picks positions `0..k`, reaching volume `k^((k-1)/2)` while the
/// axis-only subset achieves `k^(k/2)`. Swapping the all-ones vector for
/// the remaining axis vector realizes the full `sqrt(k)` jump.
pub fn tightness_instance(k: usize) -> Result<PointSet, DiagnosticsError> {
    if k < 2 {
        return Err(DiagnosticsError::TightnessTooSmall(k));
    }
    let s = (k as f64).sqrt();
    let mut points = Vec::with_capacity(k + 1);
    points.push(vec![1.0; k]);
    for j in 0..k {
        let mut axis = vec![0.0; k];
        axis[j] = s;
        points.push(axis);
    }
    Ok(PointSet::new(points).expect("construction is well-formed"))
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

/// Log of the worst-case offline ratio of greedy:
/// `sum_{i=2..k} ln(1 + sqrt(i))`. Zero for `k <= 1`.
pub fn greedy_offline_bound(k: usize) -> f64 {
    (2..=k).map(|i| (1.0 + (i as f64).sqrt()).ln()).sum()
}

/// `ln k!`, the classical comparison point for [`greedy_offline_bound`].
/// The product form is strictly smaller from `k = 4` on.
pub fn log_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Log of the composition guarantee for coresets built by a
/// `(1+eps)`-locally-optimal mapper: `2k ln(2k (1+eps))`.
///
/// The greedy mapper is `(1 + sqrt(k))`-locally optimal, so its guarantee
/// is this bound at `eps = sqrt(k)`. Requires `k >= 1` and `eps >= 0`.
pub fn composition_bound(k: usize, eps: f64) -> f64 {
    debug_assert!(k >= 1 && eps >= 0.0);
    let kf = k as f64;
    2.0 * kf * (2.0 * kf * (1.0 + eps)).ln()
}

// ---------------------------------------------------------------------------
// Offline comparison
// ---------------------------------------------------------------------------

/// Greedy versus the enumerated optimum on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineReport {
    pub k: usize,
    pub log_greedy: LogVolume,
    pub log_optimal: LogVolume,
    /// `ln(vol_opt / vol_greedy)`; zero when both volumes are zero.
    pub log_gap: f64,
    /// `sum_{i=2..k} ln(1 + sqrt(i))`.
    pub log_bound: f64,
    /// The looser classical guarantee `ln k!`, for comparison.
    pub log_factorial_bound: f64,
    /// Whether `log_gap <= log_bound + BOUND_SLACK`.
    pub holds: bool,
}

/// Runs greedy and exact enumeration on the same instance and checks the
/// offline guarantee `vol(greedy) >= vol(opt) / prod_{i=2..k} (1+sqrt(i))`.
pub fn verify_offline_approximation(
    p: &PointSet,
    k: usize,
) -> Result<OfflineReport, DiagnosticsError> {
    let g = solvers::greedy(p, k)?;
    let opt = solvers::brute_force_maxvol(p, k)?;
    let log_gap = match (opt.log_vol(), g.log_vol()) {
        (LogVolume::Finite(o), LogVolume::Finite(gr)) => o - gr,
        (LogVolume::Zero, LogVolume::Zero) => 0.0,
        (LogVolume::Zero, LogVolume::Finite(_)) => {
            // The optimum dominates every subset, greedy included.
            return Err(DiagnosticsError::InconsistentVolumes);
        }
        (LogVolume::Finite(_), LogVolume::Zero) => {
            return Err(DiagnosticsError::InconsistentVolumes)
        }
    };
    let log_bound = greedy_offline_bound(k);
    Ok(OfflineReport {
        k,
        log_greedy: g.log_vol(),
        log_optimal: opt.log_vol(),
        log_gap,
        log_bound,
        log_factorial_bound: log_factorial(k),
        holds: log_gap <= log_bound + BOUND_SLACK,
    })
}
