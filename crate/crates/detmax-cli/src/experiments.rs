//! Experiment grids: build parts, solve, measure local optimality, and
//! aggregate into report rows.
//!
//! For every repetition the parts are built once and shared across the
//! whole k grid. Within one (repetition, k) cell the parts are measured
//! in parallel; the per-cell maximum and the fixed (k, size) output order
//! make the result independent of scheduling.

use anyhow::{anyhow, Context, Result};
use detmax::coreset::partition_dataset;
use detmax::data::{
    derive_seed, load_csv, sample_gaussian, sample_unit_sphere, DatasetSource, ExperimentConfig,
    ReportRow,
};
use detmax::diagnostics::measure_local_optimality;
use detmax::solvers::greedy;
use detmax::PointSet;
use rayon::prelude::*;
use std::time::Instant;

pub struct SweepPlan {
    /// Experiment tag written into every row.
    pub experiment: &'static str,
    /// Validated configuration; `part_size` is overridden per entry of
    /// `sizes`.
    pub config: ExperimentConfig,
    /// Part sizes to sweep; a single entry for the fixed-size sweeps.
    pub sizes: Vec<usize>,
    /// Base seed recorded in the rows; repetition seeds derive from it.
    pub base_seed: u64,
    /// Record wall-clock seconds per row. Off by default so report bytes
    /// depend only on the configuration.
    pub timing: bool,
}

fn build_parts(
    dataset: &DatasetSource,
    source: Option<&PointSet>,
    m: usize,
    size: usize,
    rep_seed: u64,
) -> Result<Vec<PointSet>> {
    match dataset {
        DatasetSource::Csv(path) => {
            let full = source.expect("csv source loaded upfront");
            partition_dataset(full, m, size, derive_seed(rep_seed, &[size as u64]))
                .with_context(|| format!("partitioning {}", path.display()))
        }
        DatasetSource::Sphere { d, .. } => (0..m)
            .map(|j| {
                Ok(sample_unit_sphere(
                    size,
                    *d,
                    derive_seed(rep_seed, &[size as u64, j as u64]),
                )?)
            })
            .collect(),
        DatasetSource::Gaussian { d, .. } => (0..m)
            .map(|j| {
                Ok(sample_gaussian(
                    size,
                    *d,
                    derive_seed(rep_seed, &[size as u64, j as u64]),
                )?)
            })
            .collect(),
        DatasetSource::Tightness { .. } => {
            Err(anyhow!("the tightness generator cannot back a grid"))
        }
    }
}

/// Largest local-optimality ratio over the parts for one solve size.
fn max_ratio_over_parts(parts: &[PointSet], k: usize) -> Result<f64> {
    let maxima: Vec<f64> = parts
        .par_iter()
        .map(|part| -> Result<f64> {
            let sol = greedy(part, k)?;
            let report = measure_local_optimality(part, &sol)?;
            report.measured_ratio.ok_or_else(|| {
                anyhow!("solution volume is zero while a swap escapes it; ratio unbounded")
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    maxima
        .into_iter()
        .reduce(f64::max)
        .ok_or_else(|| anyhow!("no parts"))
}

pub fn run_grid(plan: &SweepPlan) -> Result<Vec<ReportRow>> {
    let source = match &plan.config.dataset {
        DatasetSource::Csv(path) => {
            let load =
                load_csv(path).with_context(|| format!("loading {}", path.display()))?;
            if load.dropped_rows > 0 {
                eprintln!("note: dropped {} unparseable rows", load.dropped_rows);
            }
            Some(load.points)
        }
        _ => None,
    };

    let k_grid = &plan.config.k_values;
    let reps = plan.config.repetitions;
    let mut rows = Vec::with_capacity(plan.sizes.len() * k_grid.len());
    for &size in &plan.sizes {
        // ratio_sums[i] accumulates the per-repetition maxima for k_grid[i].
        let mut ratio_sums = vec![0.0f64; k_grid.len()];
        let mut elapsed = vec![0.0f64; k_grid.len()];
        for &rep_seed in &plan.config.seeds {
            let parts = build_parts(
                &plan.config.dataset,
                source.as_ref(),
                plan.config.parts,
                size,
                rep_seed,
            )?;
            for (i, &k) in k_grid.iter().enumerate() {
                let started = Instant::now();
                ratio_sums[i] += max_ratio_over_parts(&parts, k)?;
                elapsed[i] += started.elapsed().as_secs_f64();
            }
        }
        for (i, &k) in k_grid.iter().enumerate() {
            rows.push(ReportRow {
                experiment: plan.experiment.to_string(),
                k,
                part_size: size,
                mapper: "greedy".to_string(),
                measured_ratio: ratio_sums[i] / reps as f64,
                bound: 1.0 + (k as f64).sqrt(),
                seed: plan.base_seed,
                wall_time_secs: if plan.timing { elapsed[i] } else { 0.0 },
            });
        }
    }
    rows.sort_by_key(|r| (r.k, r.part_size));
    Ok(rows)
}
