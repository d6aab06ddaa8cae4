//! Subset selection maximizing spanned volume.
//!
//! Three solvers over a [`PointSet`]:
//!
//! * [`greedy`]: k rounds, each appending the point with the largest
//!   residual norm against the current basis, which is exactly the point
//!   with the largest volume gain.
//! * [`local_search`]: starts from greedy, then repeatedly applies the best
//!   single swap that grows the volume by a factor of at least `1 + eps`,
//!   stopping when none exists. The returned solution is `(1+eps)`-locally
//!   optimal by construction.
//! * [`brute_force_maxvol`]: exact enumeration under a subset budget, the
//!   ground truth for small instances.
//!
//! Swap gains are computed along two independent routes. The incremental
//! route updates the Gram determinant with two rank-one determinant-lemma
//! steps against the factored Gram inverse; the recompute route rebuilds
//! the swapped set's volume from scratch. Both are exposed through
//! [`swap_volume`] and the agreement between them is part of the test
//! surface, so neither is allowed to delegate to the other.

use crate::geometry::{
    axpy, dot, log_volume, norm, rank_tolerance, GeometryError, LogVolume, OrthoBasis, PointSet,
};
use thiserror::Error;

/// Default cap on the number of subsets [`brute_force_maxvol`] may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Relative margin below which two greedy residual norms count as tied.
const GREEDY_TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("k must lie in 1..={n}, got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("epsilon must be strictly positive and finite, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("enumeration needs {required} subsets, budget is {budget}")]
    EnumerationBudget { required: u128, budget: u128 },
    #[error("swap position {position} is out of range for a solution of size {k}")]
    InvalidSwapPosition { position: usize, k: usize },
    #[error("solution does not belong to this point set: {0}")]
    InvalidSolution(String),
    #[error("gram matrix is too ill-conditioned for incremental swap evaluation")]
    IllConditioned,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// Solution
// ---------------------------------------------------------------------------

/// A selected subset together with its orthogonalization and volume.
///
/// `selected` holds positions into the originating [`PointSet`], in
/// selection order; stable ids are recovered through [`Solution::selected_ids`].
/// `log_vol` always agrees with recomputing the volume of the selected
/// vectors from scratch, and `rank_deficient` marks selections whose
/// vectors are linearly dependent (zero volume).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    selected: Vec<usize>,
    basis: OrthoBasis,
    log_vol: LogVolume,
    rank_deficient: bool,
}

impl Solution {
    /// Rebuilds a solution from scratch for the given positions: the
    /// canonical recompute route. Positions must be distinct and in range.
    pub fn from_positions(p: &PointSet, positions: &[usize]) -> Result<Self, SolverError> {
        if positions.is_empty() || positions.len() > p.len() {
            return Err(SolverError::InvalidK {
                k: positions.len(),
                n: p.len(),
            });
        }
        let mut seen = vec![false; p.len()];
        for &pos in positions {
            if pos >= p.len() {
                return Err(SolverError::InvalidSolution(format!(
                    "position {pos} out of range for {} points",
                    p.len()
                )));
            }
            if seen[pos] {
                return Err(SolverError::InvalidSolution(format!(
                    "position {pos} selected twice"
                )));
            }
            seen[pos] = true;
        }
        let mut basis = OrthoBasis::new(p.dim())?;
        for &pos in positions {
            let v = p.point(pos);
            let (r, rn) = basis.residual(v)?;
            if rn <= rank_tolerance(norm(v)) {
                // Dependent pick: record a zero entry so later projections
                // never divide by a vanishing norm.
                basis.push_raw(v.to_vec(), vec![0.0; p.dim()], 0.0);
            } else {
                basis.push_raw(v.to_vec(), r, rn);
            }
        }
        Ok(Self::from_parts(positions.to_vec(), basis))
    }

    fn from_parts(selected: Vec<usize>, basis: OrthoBasis) -> Self {
        let log_vol = basis.log_volume();
        Self {
            selected,
            basis,
            log_vol,
            rank_deficient: log_vol.is_zero(),
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn k(&self) -> usize {
        self.selected.len()
    }

    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn log_vol(&self) -> LogVolume {
        self.log_vol
    }

    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// The selected vector at the given solution position.
    pub fn vector(&self, position: usize) -> &[f64] {
        &self.basis.original()[position]
    }

    /// Stable ids of the selected points, in selection order.
    pub fn selected_ids(&self, p: &PointSet) -> Vec<u64> {
        self.selected.iter().map(|&pos| p.id(pos)).collect()
    }

    /// Checks that this solution was built over `p`: positions in range,
    /// distinct, and storing exactly the vectors `p` holds there.
    pub fn validate_for(&self, p: &PointSet) -> Result<(), SolverError> {
        let mut seen = vec![false; p.len()];
        for (slot, &pos) in self.selected.iter().enumerate() {
            if pos >= p.len() || seen[pos] {
                return Err(SolverError::InvalidSolution(format!(
                    "position {pos} invalid or repeated"
                )));
            }
            seen[pos] = true;
            if self.basis.original()[slot] != p.point(pos) {
                return Err(SolverError::InvalidSolution(format!(
                    "stored vector at slot {slot} does not match point {pos}"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Greedy
// ---------------------------------------------------------------------------

/// Picks `k` points, each round taking the one with the largest residual
/// norm against the span of the picks so far (ties to the lowest position).
///
/// When the input's rank is exhausted before `k` picks, the remaining
/// slots are filled with the lowest-position leftover points and the
/// solution comes back flagged rank-deficient with zero volume.
pub fn greedy(p: &PointSet, k: usize) -> Result<Solution, SolverError> {
    let n = p.len();
    if k < 1 || k > n {
        return Err(SolverError::InvalidK { k, n });
    }
    let d = p.dim();
    let orig_norms: Vec<f64> = p.iter().map(norm).collect();

    // Per-candidate residual workspace, deflated against each new basis
    // direction as it lands.
    let mut work: Vec<Vec<f64>> = p.iter().map(|v| v.to_vec()).collect();
    let mut work_norms = orig_norms.clone();
    let mut picked = vec![false; n];
    let mut selected = Vec::with_capacity(k);
    let mut basis = OrthoBasis::new(d)?;

    while selected.len() < k {
        // Ties go to the lowest position. Residual norms that agree in
        // exact arithmetic can differ by rounding (summation order varies
        // per candidate), so a challenger must clear the incumbent by a
        // relative margin before it counts as strictly better.
        let mut best: Option<usize> = None;
        for j in 0..n {
            if !picked[j]
                && best.map_or(true, |b| {
                    work_norms[j] > work_norms[b] * (1.0 + GREEDY_TIE_REL_TOL)
                })
            {
                best = Some(j);
            }
        }
        let j = best.expect("k <= n leaves a candidate");

        let exhausted = work_norms[j] <= rank_tolerance(orig_norms[j]);
        if !exhausted {
            // Canonical entry for the winner: re-derive its residual from
            // the original vector so the stored basis matches a recompute.
            let (r, rn) = basis.residual(p.point(j))?;
            if rn > rank_tolerance(orig_norms[j]) {
                basis.push_raw(p.point(j).to_vec(), r.clone(), rn);
                selected.push(j);
                picked[j] = true;
                let rr = rn * rn;
                for c in 0..n {
                    if !picked[c] {
                        let coef = dot(&work[c], &r) / rr;
                        axpy(-coef, &r, &mut work[c]);
                        work_norms[c] = norm(&work[c]);
                    }
                }
                continue;
            }
        }
        // Rank exhausted: every remaining candidate lies in the span.
        // Complete with the lowest-position leftovers as zero entries.
        for c in 0..n {
            if selected.len() == k {
                break;
            }
            if !picked[c] {
                picked[c] = true;
                selected.push(c);
                basis.push_raw(p.point(c).to_vec(), vec![0.0; d], 0.0);
            }
        }
    }
    Ok(Solution::from_parts(selected, basis))
}

// ---------------------------------------------------------------------------
// Incremental swap evaluation
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor of a flat row-major SPD matrix, or
/// `None` when a pivot is not strictly positive.
fn cholesky(g: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i * n + j];
            for p in 0..j {
                sum -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` in place.
fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut x = b[i];
        for p in 0..i {
            x -= l[i * n + p] * b[p];
        }
        b[i] = x / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut x = b[i];
        for p in i + 1..n {
            x -= l[p * n + i] * b[p];
        }
        b[i] = x / l[i * n + i];
    }
}

/// Prepared state for evaluating many single swaps against one solution.
///
/// Replacing the vector at position `i` with `w` turns the Gram matrix `G`
/// into `G + e_i a^T + a e_i^T + gamma e_i e_i^T` with `a = V^T (w - v_i)`
/// and `gamma = ||w - v_i||^2`. Splitting that into two rank-one updates
/// and applying the determinant lemma to each gives the determinant ratio
///
/// ```text
/// det(G') / det(G) = f1 * sw_i - Ginv_ii * (a.s + gamma (sw_i - 1)),
/// f1 = sw_i + gamma * Ginv_ii,
/// ```
///
/// where `sw = Ginv V^T w`, all obtainable from the factored `G` alone.
/// The ratio of swapped to current volume is the square root of that
/// determinant ratio.
pub(crate) struct SwapScan {
    k: usize,
    gram: Vec<f64>,
    inv: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

/// Per-candidate precomputation shared by all `k` out-positions.
pub(crate) struct CandidateScores {
    bw: Vec<f64>,
    sw: Vec<f64>,
    bs: f64,
    w2: f64,
}

/// A determinant ratio along with the magnitude of the terms it came from,
/// for telling true zeros from cancellation noise.
pub(crate) struct DetRatio {
    pub value: f64,
    pub scale: f64,
}

impl DetRatio {
    /// Whether the swapped set should count as zero-volume: a non-positive
    /// ratio, or one indistinguishable from the cancellation floor.
    pub fn is_zero(&self) -> bool {
        self.value <= 1e-12 * self.scale
    }
}

impl SwapScan {
    /// Prepares the factored Gram state. `None` when the solution volume is
    /// zero; `Err(IllConditioned)` when the Gram matrix defeats Cholesky
    /// despite a nonzero volume flag.
    pub(crate) fn new(sol: &Solution) -> Result<Option<Self>, SolverError> {
        if sol.log_vol().is_zero() {
            return Ok(None);
        }
        let k = sol.k();
        let vectors: Vec<Vec<f64>> = sol.basis.original().to_vec();
        let flat = {
            let mut g = vec![0.0; k * k];
            for i in 0..k {
                for j in i..k {
                    let v = dot(&vectors[i], &vectors[j]);
                    g[i * k + j] = v;
                    g[j * k + i] = v;
                }
            }
            g
        };
        let l = cholesky(&flat, k).ok_or(SolverError::IllConditioned)?;
        let mut inv = vec![0.0; k * k];
        for i in 0..k {
            let mut col = vec![0.0; k];
            col[i] = 1.0;
            cholesky_solve(&l, k, &mut col);
            for j in 0..k {
                inv[j * k + i] = col[j];
            }
        }
        Ok(Some(Self {
            k,
            gram: flat,
            inv,
            vectors,
        }))
    }

    pub(crate) fn scores(&self, w: &[f64]) -> CandidateScores {
        let k = self.k;
        let bw: Vec<f64> = self.vectors.iter().map(|v| dot(v, w)).collect();
        let mut sw = vec![0.0; k];
        for i in 0..k {
            sw[i] = dot(&self.inv[i * k..(i + 1) * k], &bw);
        }
        CandidateScores {
            bs: dot(&bw, &sw),
            w2: dot(w, w),
            bw,
            sw,
        }
    }

    /// Determinant ratio for swapping out `position` in favor of the
    /// candidate behind `scores`.
    pub(crate) fn det_ratio(&self, scores: &CandidateScores, position: usize) -> DetRatio {
        let k = self.k;
        let i = position;
        let g_ii = self.gram[i * k + i];
        let t_ii = self.inv[i * k + i];
        let sw_i = scores.sw[i];
        let gamma = scores.w2 - 2.0 * scores.bw[i] + g_ii;
        let a_dot_s = scores.bs - 2.0 * scores.bw[i] + g_ii;
        let f1 = sw_i + gamma * t_ii;
        let term1 = f1 * sw_i;
        let term2 = t_ii * (a_dot_s + gamma * (sw_i - 1.0));
        DetRatio {
            value: term1 - term2,
            scale: term1.abs() + term2.abs(),
        }
    }
}

// ---------------------------------------------------------------------------
// swap_volume
// ---------------------------------------------------------------------------

/// Which route evaluates a swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapMode {
    /// Rank-one determinant-lemma updates against the factored Gram inverse.
    Incremental,
    /// Full volume recomputation of the swapped set.
    Recompute,
}

/// Log volume ratio of a single swap, with explicit zero-volume cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapRatio {
    /// Both volumes positive: `ln vol(C - v_i + w) - ln vol(C)`.
    Finite(f64),
    /// Current volume zero, swapped volume positive.
    ZeroToPositive,
    /// Current volume positive, swapped volume zero.
    PositiveToZero,
    /// Both volumes zero.
    ZeroToZero,
}

impl SwapRatio {
    /// Whether the swap strictly grows the volume by at least `1 + eps`.
    pub fn improves_by(&self, eps: f64) -> bool {
        match self {
            SwapRatio::Finite(r) => *r >= (1.0 + eps).ln(),
            SwapRatio::ZeroToPositive => true,
            _ => false,
        }
    }
}

/// Outcome of evaluating one swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapGain {
    /// Position in the solution whose vector leaves.
    pub out_position: usize,
    pub ratio: SwapRatio,
}

/// Evaluates replacing the solution vector at `out_position` with `w`.
///
/// Both modes agree on full-rank inputs to well within 1e-7 in log ratio;
/// that agreement is a correctness check, not a fallback, so the
/// incremental route reports [`SolverError::IllConditioned`] rather than
/// silently recomputing. A zero current volume cannot seed the incremental
/// update and is classified by recomputation in either mode.
pub fn swap_volume(
    sol: &Solution,
    out_position: usize,
    w: &[f64],
    mode: SwapMode,
) -> Result<SwapGain, SolverError> {
    let k = sol.k();
    if out_position >= k {
        return Err(SolverError::InvalidSwapPosition {
            position: out_position,
            k,
        });
    }
    if w.len() != sol.basis.dim() {
        return Err(SolverError::Geometry(GeometryError::DimensionMismatch {
            expected: sol.basis.dim(),
            found: w.len(),
        }));
    }

    if sol.log_vol().is_zero() {
        let swapped = swapped_log_volume(sol, out_position, w)?;
        let ratio = if swapped.is_zero() {
            SwapRatio::ZeroToZero
        } else {
            SwapRatio::ZeroToPositive
        };
        return Ok(SwapGain { out_position, ratio });
    }

    let ratio = match mode {
        SwapMode::Recompute => {
            let current = sol.log_vol().finite().expect("nonzero checked");
            match swapped_log_volume(sol, out_position, w)? {
                LogVolume::Zero => SwapRatio::PositiveToZero,
                LogVolume::Finite(v) => SwapRatio::Finite(v - current),
            }
        }
        SwapMode::Incremental => {
            let scan = SwapScan::new(sol)?.expect("nonzero volume");
            let det = scan.det_ratio(&scan.scores(w), out_position);
            if det.is_zero() {
                SwapRatio::PositiveToZero
            } else {
                SwapRatio::Finite(0.5 * det.value.ln())
            }
        }
    };
    Ok(SwapGain { out_position, ratio })
}

/// Volume of the solution's vectors with `out_position` replaced by `w`.
fn swapped_log_volume(
    sol: &Solution,
    out_position: usize,
    w: &[f64],
) -> Result<LogVolume, SolverError> {
    let mut vecs: Vec<&[f64]> = sol.basis.original().iter().map(|v| v.as_slice()).collect();
    vecs[out_position] = w;
    Ok(log_volume(&vecs)?)
}

// ---------------------------------------------------------------------------
// Local search
// ---------------------------------------------------------------------------

/// Hard ceiling on the number of improving swaps for a full-rank input:
/// `ceil(k ln k / ln(1+eps)) + 1`.
pub fn max_swap_count(k: usize, eps: f64) -> usize {
    let kf = k as f64;
    (kf * kf.ln() / (1.0 + eps).ln()).ceil() as usize + 1
}

/// Greedy start, then best-improvement swaps until `(1+eps)`-local
/// optimality. Returns the final solution and the number of swaps applied.
///
/// A swap is applied only when it multiplies the volume by at least
/// `1 + eps`, so the swap count on full-rank inputs stays within
/// [`max_swap_count`]. `eps` must be strictly positive; `eps = 0` would
/// allow non-improving swap cycles.
pub fn local_search(p: &PointSet, k: usize, eps: f64) -> Result<(Solution, usize), SolverError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(SolverError::NonPositiveEpsilon(eps));
    }
    let mut sol = greedy(p, k)?;
    let n = p.len();
    if n == k {
        return Ok((sol, 0));
    }

    // Termination is guaranteed by the fixed multiplicative gain per swap;
    // the cap only guards against floating-point stall on adversarial input.
    let cap = max_swap_count(k, eps).saturating_mul(4).saturating_add(16);
    let det_threshold = (1.0 + eps) * (1.0 + eps);
    let mut swaps = 0usize;

    while swaps < cap {
        let mut in_solution = vec![false; n];
        for &pos in sol.selected() {
            in_solution[pos] = true;
        }

        // (out position, candidate position) of the best improving swap,
        // ranked by gain, ties to lowest position then lowest candidate id.
        let mut best: Option<(f64, usize, usize)> = None;
        let consider = |value: f64, pos: usize, cand: usize, best: &mut Option<(f64, usize, usize)>| {
            let better = match best {
                None => true,
                Some((bv, bp, bc)) => {
                    value > *bv
                        || (value == *bv && (pos, p.id(cand)) < (*bp, p.id(*bc)))
                }
            };
            if better {
                *best = Some((value, pos, cand));
            }
        };

        if sol.log_vol().is_zero() {
            // From a zero-volume state only swaps reaching positive volume
            // improve; rank them by the volume they reach.
            for pos in 0..k {
                for cand in 0..n {
                    if in_solution[cand] {
                        continue;
                    }
                    if let LogVolume::Finite(v) =
                        swapped_log_volume(&sol, pos, p.point(cand))?
                    {
                        consider(v, pos, cand, &mut best);
                    }
                }
            }
        } else {
            let scan = SwapScan::new(&sol)?.expect("nonzero volume");
            for cand in 0..n {
                if in_solution[cand] {
                    continue;
                }
                let scores = scan.scores(p.point(cand));
                for pos in 0..k {
                    let det = scan.det_ratio(&scores, pos);
                    if !det.is_zero() && det.value >= det_threshold {
                        consider(det.value, pos, cand, &mut best);
                    }
                }
            }
        }

        let Some((_, pos, cand)) = best else { break };
        let mut next_selected = sol.selected().to_vec();
        next_selected.remove(pos);
        next_selected.push(cand);
        let next = Solution::from_positions(p, &next_selected)?;
        // The incremental gain said "improving"; believe it only if the
        // recomputed volume agrees in direction, otherwise stop rather
        // than risk a floating-point swap cycle.
        if !sol.log_vol().is_zero()
            && next.log_vol().log_or_neg_inf() <= sol.log_vol().log_or_neg_inf()
        {
            break;
        }
        sol = next;
        swaps += 1;
    }
    Ok((sol, swaps))
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

/// `C(n, k)` capped: any intermediate exceeding `cap` reports `cap + 1`.
fn binomial_capped(n: u128, k: u128, cap: u128) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // Exact at every step: the prefix products are themselves binomials.
        match c.checked_mul(n - k + i) {
            Some(v) => c = v / i,
            None => return cap + 1,
        }
        if c > cap {
            return cap + 1;
        }
    }
    c
}

/// Exact maximum-volume subset by enumeration, under the default budget.
pub fn brute_force_maxvol(p: &PointSet, k: usize) -> Result<Solution, SolverError> {
    brute_force_maxvol_with_budget(p, k, DEFAULT_ENUMERATION_BUDGET)
}

/// Exact maximum-volume subset of size `k`, visiting every subset in
/// lexicographic order. Ties keep the lexicographically smallest index
/// list. Errors out before visiting anything when `C(n, k)` exceeds the
/// budget.
pub fn brute_force_maxvol_with_budget(
    p: &PointSet,
    k: usize,
    budget: u128,
) -> Result<Solution, SolverError> {
    let n = p.len();
    if k < 1 || k > n {
        return Err(SolverError::InvalidK { k, n });
    }
    let required = binomial_capped(n as u128, k as u128, budget);
    if required > budget {
        return Err(SolverError::EnumerationBudget { required, budget });
    }

    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let vecs: Vec<&[f64]> = idx.iter().map(|&i| p.point(i)).collect();
        let value = log_volume(&vecs)?.log_or_neg_inf();
        if best.as_ref().map_or(true, |(bv, _)| value > *bv) {
            best = Some((value, idx.clone()));
        }

        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                let (_, positions) = best.expect("at least one subset visited");
                return Solution::from_positions(p, &positions);
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::tightness_instance;

    fn set(points: &[&[f64]]) -> PointSet {
        PointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }

    // ==== greedy ===========================================================

    #[test]
    fn greedy_prefers_long_then_most_orthogonal() {
        let p = set(&[
            &[3.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[1.0, 1.0, 1.0],
        ]);
        let sol = greedy(&p, 2).unwrap();
        assert_eq!(sol.selected(), &[0, 1]);
        assert_close(
            sol.log_vol().finite().unwrap(),
            6.0f64.ln(),
            1e-12,
            "greedy volume",
        );
        assert!(!sol.rank_deficient());
    }

    #[test]
    fn greedy_on_tightness_instance_picks_prefix() {
        for k in [2usize, 3, 5, 8] {
            let p = tightness_instance(k).unwrap();
            let sol = greedy(&p, k).unwrap();
            let expect: Vec<usize> = (0..k).collect();
            assert_eq!(sol.selected(), expect.as_slice(), "k = {k}");
            let want = (k as f64 - 1.0) / 2.0 * (k as f64).ln();
            assert_close(
                sol.log_vol().finite().unwrap(),
                want,
                1e-9,
                "greedy tightness volume",
            );
        }
    }

    #[test]
    fn greedy_single_point() {
        let p = set(&[&[5.0, 0.0]]);
        let sol = greedy(&p, 1).unwrap();
        assert_eq!(sol.selected(), &[0]);
        assert_close(
            sol.log_vol().finite().unwrap(),
            5.0f64.ln(),
            1e-12,
            "single point volume",
        );
    }

    #[test]
    fn greedy_rank_deficient_fills_lowest_leftovers() {
        let p = set(&[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0]]);
        let sol = greedy(&p, 3).unwrap();
        // Picks (2,0), then (0,1); rank exhausted, fills with position 0.
        assert_eq!(sol.selected(), &[1, 2, 0]);
        assert!(sol.rank_deficient());
        assert!(sol.log_vol().is_zero());
    }

    #[test]
    fn greedy_rejects_bad_k() {
        let p = set(&[&[1.0], &[2.0]]);
        assert_eq!(greedy(&p, 0).unwrap_err(), SolverError::InvalidK { k: 0, n: 2 });
        assert_eq!(greedy(&p, 3).unwrap_err(), SolverError::InvalidK { k: 3, n: 2 });
    }

    #[test]
    fn greedy_residual_norms_non_increasing() {
        let p = set(&[
            &[2.0, 1.0, 0.0],
            &[1.0, 3.0, 1.0],
            &[0.0, 1.0, 2.0],
            &[1.0, 1.0, 1.0],
            &[3.0, 0.0, 1.0],
        ]);
        let sol = greedy(&p, 3).unwrap();
        let r = sol.basis().residual_norms();
        for w in r.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-10) + 1e-12,
                "residual norms must not increase: {:?}",
                r
            );
        }
    }

    // ==== local search =====================================================

    #[test]
    fn local_search_escapes_greedy_on_tightness_pair() {
        let p = tightness_instance(2).unwrap();
        let (sol, swaps) = local_search(&p, 2, 0.2).unwrap();
        assert_eq!(swaps, 1);
        assert_eq!(sol.selected(), &[1, 2]);
        assert_close(
            sol.log_vol().finite().unwrap(),
            2.0f64.ln(),
            1e-12,
            "post-swap volume",
        );
    }

    #[test]
    fn local_search_with_no_outside_candidates_does_nothing() {
        let p = set(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let (sol, swaps) = local_search(&p, 2, 0.5).unwrap();
        assert_eq!(swaps, 0);
        assert_eq!(sol.selected(), greedy(&p, 2).unwrap().selected());
    }

    #[test]
    fn local_search_rejects_non_positive_epsilon() {
        let p = set(&[&[1.0], &[2.0]]);
        for eps in [0.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                local_search(&p, 1, eps),
                Err(SolverError::NonPositiveEpsilon(_))
            ));
        }
    }

    #[test]
    fn local_search_never_loses_volume_versus_greedy() {
        let p = set(&[
            &[1.0, 2.0, 0.5],
            &[2.0, 0.1, 1.0],
            &[0.3, 1.5, 2.0],
            &[1.1, 1.1, 1.0],
            &[0.7, 0.2, 2.2],
            &[2.1, 1.9, 0.1],
        ]);
        let g = greedy(&p, 3).unwrap();
        let (s, _) = local_search(&p, 3, 0.05).unwrap();
        assert!(s.log_vol().log_or_neg_inf() >= g.log_vol().log_or_neg_inf());
    }

    #[test]
    fn swap_cap_formula() {
        // k = 2, eps = 0.2: ceil(2 ln 2 / ln 1.2) + 1 = 9.
        assert_eq!(max_swap_count(2, 0.2), 9);
        assert_eq!(max_swap_count(1, 0.5), 1);
    }

    // ==== brute force ======================================================

    #[test]
    fn brute_force_finds_axis_triple_on_tightness_instance() {
        let p = tightness_instance(3).unwrap();
        let sol = brute_force_maxvol(&p, 3).unwrap();
        assert_eq!(sol.selected(), &[1, 2, 3]);
        assert_close(
            sol.log_vol().finite().unwrap(),
            1.5 * 3.0f64.ln(),
            1e-12,
            "optimal volume",
        );
    }

    #[test]
    fn brute_force_breaks_ties_lexicographically() {
        let p = set(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let sol = brute_force_maxvol(&p, 2).unwrap();
        assert_eq!(sol.selected(), &[0, 1]);
        assert_close(sol.log_vol().finite().unwrap(), 0.0, 1e-12, "unit volume");
    }

    #[test]
    fn brute_force_respects_budget() {
        let points: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 1.0]).collect();
        let p = PointSet::new(points).unwrap();
        let err = brute_force_maxvol(&p, 15).unwrap_err();
        assert!(matches!(err, SolverError::EnumerationBudget { .. }));
    }

    #[test]
    fn binomial_counting() {
        assert_eq!(binomial_capped(14, 5, u128::MAX - 1), 2002);
        assert_eq!(binomial_capped(30, 15, 10_000_000), 10_000_001);
    }

    // ==== swap_volume ======================================================

    #[test]
    fn swap_gain_on_axis_pair_both_modes() {
        let p = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let sol = Solution::from_positions(&p, &[0, 1]).unwrap();
        for mode in [SwapMode::Incremental, SwapMode::Recompute] {
            let gain = swap_volume(&sol, 1, &[0.0, 3.0], mode).unwrap();
            match gain.ratio {
                SwapRatio::Finite(r) => {
                    assert_close(r, 3.0f64.ln(), 1e-12, "axis swap log ratio")
                }
                other => panic!("expected finite ratio, got {other:?}"),
            }
        }
    }

    #[test]
    fn swap_gain_on_tightness_instance() {
        let p = tightness_instance(4).unwrap();
        let sol = greedy(&p, 4).unwrap();
        // Swap the all-ones vector out for the unpicked axis vector.
        for mode in [SwapMode::Incremental, SwapMode::Recompute] {
            let gain = swap_volume(&sol, 0, p.point(4), mode).unwrap();
            match gain.ratio {
                SwapRatio::Finite(r) => {
                    assert_close(r, 2.0f64.ln(), 1e-9, "tightness swap ratio")
                }
                other => panic!("expected finite ratio, got {other:?}"),
            }
        }
    }

    #[test]
    fn swap_to_spanned_copy_is_flagged_zero() {
        let p = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let sol = Solution::from_positions(&p, &[0, 1]).unwrap();
        for mode in [SwapMode::Incremental, SwapMode::Recompute] {
            let gain = swap_volume(&sol, 0, &[0.0, 2.0], mode).unwrap();
            assert_eq!(gain.ratio, SwapRatio::PositiveToZero, "{mode:?}");
        }
    }

    #[test]
    fn swaps_out_of_zero_volume_are_classified() {
        let p = set(&[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0], &[3.0, 0.0]]);
        let sol = Solution::from_positions(&p, &[0, 1]).unwrap();
        assert!(sol.log_vol().is_zero());
        let up = swap_volume(&sol, 1, p.point(2), SwapMode::Incremental).unwrap();
        assert_eq!(up.ratio, SwapRatio::ZeroToPositive);
        let flat = swap_volume(&sol, 1, p.point(3), SwapMode::Recompute).unwrap();
        assert_eq!(flat.ratio, SwapRatio::ZeroToZero);
    }

    #[test]
    fn swap_position_must_be_in_range() {
        let p = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let sol = Solution::from_positions(&p, &[0, 1]).unwrap();
        assert_eq!(
            swap_volume(&sol, 2, &[1.0, 1.0], SwapMode::Recompute).unwrap_err(),
            SolverError::InvalidSwapPosition { position: 2, k: 2 }
        );
    }

    #[test]
    fn incremental_and_recompute_agree_on_random_swaps() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let n = rng.random_range(4..12);
            let d = rng.random_range(3..8);
            let k = rng.random_range(2..=d.min(n - 1));
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let p = match PointSet::new(points) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let sol = greedy(&p, k).unwrap();
            if sol.rank_deficient() {
                continue;
            }
            let outside: Vec<usize> =
                (0..n).filter(|i| !sol.selected().contains(i)).collect();
            let cand = outside[rng.random_range(0..outside.len())];
            let pos = rng.random_range(0..k);
            let a = swap_volume(&sol, pos, p.point(cand), SwapMode::Incremental).unwrap();
            let b = swap_volume(&sol, pos, p.point(cand), SwapMode::Recompute).unwrap();
            match (a.ratio, b.ratio) {
                (SwapRatio::Finite(x), SwapRatio::Finite(y)) => {
                    assert_close(x, y, 1e-7, &format!("trial {trial} dual-route"));
                }
                (x, y) => assert_eq!(x, y, "trial {trial} classification"),
            }
        }
    }

    // ==== Solution =========================================================

    #[test]
    fn from_positions_validates() {
        let p = set(&[&[1.0], &[2.0]]);
        assert!(matches!(
            Solution::from_positions(&p, &[0, 0]),
            Err(SolverError::InvalidSolution(_))
        ));
        assert!(matches!(
            Solution::from_positions(&p, &[5]),
            Err(SolverError::InvalidSolution(_))
        ));
        assert!(matches!(
            Solution::from_positions(&p, &[]),
            Err(SolverError::InvalidK { .. })
        ));
    }

    #[test]
    fn solution_ids_follow_selection_order() {
        let p = PointSet::with_ids(
            vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]],
            vec![7, 8, 9],
        )
        .unwrap();
        let sol = greedy(&p, 2).unwrap();
        assert_eq!(sol.selected(), &[1, 0]);
        assert_eq!(sol.selected_ids(&p), vec![8, 7]);
    }
}
