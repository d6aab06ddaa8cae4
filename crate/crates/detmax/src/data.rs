//! Dataset ingestion, seeded generators, and report files.
//!
//! Every random draw in the crate flows through ChaCha8 keyed by an
//! explicit `u64` seed, so the same seed always reproduces the same data
//! on any platform. [`derive_seed`] folds structured components
//! (repetition, part) into a base seed through SplitMix64 steps, giving
//! each generated object its own stream without correlated streams.
//!
//! Report rows serialize to CSV (fixed column order) or JSON (array of
//! objects). Reals are written in shortest round-trip decimal form, up to
//! 17 significant digits, so reading a report back reproduces every value
//! bit for bit and re-running a command with the same seeds reproduces
//! the same bytes.

use crate::geometry::{GeometryError, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no valid data rows")]
    NoValidRows,
    #[error("row {line} has {found} fields, expected {expected}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("report does not match the expected schema: {0}")]
    SchemaMismatch(String),
    #[error("the generator needs dimension >= {required}, got {got}")]
    DimensionTooSmall { required: usize, got: usize },
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds components (repetition index, part index, ...) into a base seed.
/// Order matters; every distinct component sequence yields an independent
/// stream seed.
pub fn derive_seed(base: u64, components: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for (i, &c) in components.iter().enumerate() {
        s = splitmix64(s ^ splitmix64(c.wrapping_add(i as u64 + 1)));
    }
    s
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// A loaded CSV with the number of rows dropped during parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLoad {
    pub points: PointSet,
    pub dropped_rows: usize,
}

/// Reads a point per row from a CSV file. Ids are assigned in valid-row
/// order, starting at 0.
///
/// The first row is treated as a header when any of its fields fails to
/// parse as a finite real. The column count is fixed by the first row;
/// rows with a different field count are a structural error, while rows
/// with the right count but a non-numeric, missing, or non-finite field
/// are dropped and counted.
pub fn load_csv(path: &Path) -> Result<CsvLoad, DataError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let mut expected: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0usize;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
        let parsed: Option<Vec<f64>> = record
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        let width = match expected {
            Some(w) => w,
            None => {
                // First row fixes the column count; skip it when it does
                // not read as numbers.
                expected = Some(record.len());
                if parsed.is_none() {
                    continue;
                }
                record.len()
            }
        };
        if record.len() != width {
            let line = record
                .position()
                .map(|p| p.line())
                .unwrap_or(index as u64 + 1);
            return Err(DataError::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        match parsed {
            Some(values) => rows.push(values),
            None => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(DataError::NoValidRows);
    }
    Ok(CsvLoad {
        points: PointSet::new(rows)?,
        dropped_rows: dropped,
    })
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `n` points drawn uniformly from the unit sphere in `R^d` (`d >= 2`):
/// standard Gaussian vectors, normalized.
pub fn sample_unit_sphere(n: usize, d: usize, seed: u64) -> Result<PointSet, DataError> {
    if d < 2 {
        return Err(DataError::DimensionTooSmall { required: 2, got: d });
    }
    if n < 1 {
        return Err(DataError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let v = gaussian_vector(&mut rng, d);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            points.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(PointSet::new(points)?)
}

/// `n` points with independent standard Gaussian coordinates (`d >= 1`).
pub fn sample_gaussian(n: usize, d: usize, seed: u64) -> Result<PointSet, DataError> {
    if d < 1 {
        return Err(DataError::DimensionTooSmall { required: 1, got: d });
    }
    if n < 1 {
        return Err(DataError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n).map(|_| gaussian_vector(&mut rng, d)).collect();
    Ok(PointSet::new(points)?)
}

/// Adversarial generator: `n` points hugging `clusters` random directions
/// (`d >= 2`). Point `i` is its cluster direction scaled by a log-normal
/// length, plus `jitter`-sized Gaussian noise. Small jitters produce
/// nearly dependent families that stress rank detection and swap
/// evaluation without quite collapsing the volume to zero.
pub fn sample_near_collinear(
    n: usize,
    d: usize,
    clusters: usize,
    jitter: f64,
    seed: u64,
) -> Result<PointSet, DataError> {
    if d < 2 {
        return Err(DataError::DimensionTooSmall { required: 2, got: d });
    }
    if n < 1 || clusters < 1 {
        return Err(DataError::EmptySample);
    }
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(DataError::InvalidConfig(format!(
            "jitter must be a finite non-negative real, got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Vec::with_capacity(clusters);
    while directions.len() < clusters {
        let v = gaussian_vector(&mut rng, d);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            directions.push(v.into_iter().map(|x| x / norm).collect::<Vec<_>>());
        }
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let dir = &directions[i % clusters];
        let length = (0.5 * rng.sample::<f64, _>(StandardNormal)).exp();
        let point: Vec<f64> = dir
            .iter()
            .map(|&x| length * x + jitter * rng.sample::<f64, _>(StandardNormal))
            .collect();
        points.push(point);
    }
    Ok(PointSet::new(points)?)
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Where experiment data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv(PathBuf),
    Sphere { n: usize, d: usize },
    Gaussian { n: usize, d: usize },
    /// Worst-case instance; sized by its own `k`, so it fits single
    /// solves but not partitioned grids.
    Tightness { k: usize },
}

impl DatasetSource {
    /// Short tag for report rows and logs.
    pub fn label(&self) -> String {
        match self {
            DatasetSource::Csv(path) => format!("csv:{}", path.display()),
            DatasetSource::Sphere { .. } => "sphere".to_string(),
            DatasetSource::Gaussian { .. } => "gaussian".to_string(),
            DatasetSource::Tightness { .. } => "tightness".to_string(),
        }
    }
}

/// Full description of one experiment grid run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Number of parts per repetition (`m`).
    pub parts: usize,
    /// Points per part (`n_i`).
    pub part_size: usize,
    /// Solve sizes, strictly ascending.
    pub k_values: Vec<usize>,
    /// Local-search epsilon, for configs that run local search.
    pub epsilon: Option<f64>,
    /// One seed per repetition, all distinct.
    pub seeds: Vec<u64>,
    pub repetitions: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |msg: String| Err(DataError::InvalidConfig(msg));
        if matches!(self.dataset, DatasetSource::Tightness { .. }) {
            return fail("the tightness generator is sized by k and cannot back a grid".into());
        }
        if self.parts < 1 {
            return fail("part count must be at least 1".into());
        }
        if self.part_size < 1 {
            return fail("part size must be at least 1".into());
        }
        if self.k_values.is_empty() {
            return fail("at least one k value is required".into());
        }
        for w in self.k_values.windows(2) {
            if w[0] >= w[1] {
                return fail(format!("k values must strictly ascend, got {:?}", self.k_values));
            }
        }
        if self.k_values[0] < 1 {
            return fail("k values must be at least 1".into());
        }
        if *self.k_values.last().unwrap() > self.part_size {
            return fail(format!(
                "largest k {} exceeds part size {}",
                self.k_values.last().unwrap(),
                self.part_size
            ));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return fail(format!("epsilon must be strictly positive, got {eps}"));
            }
        }
        if self.repetitions < 1 || self.seeds.len() != self.repetitions {
            return fail(format!(
                "need exactly one seed per repetition: {} seeds for {} repetitions",
                self.seeds.len(),
                self.repetitions
            ));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return fail("repetition seeds must be distinct".into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One measured grid cell. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub k: usize,
    pub part_size: usize,
    pub mapper: String,
    /// Max local-optimality ratio over parts, averaged over repetitions.
    pub measured_ratio: f64,
    /// `1 + sqrt(k)`.
    pub bound: f64,
    pub seed: u64,
    /// Zero unless timing was requested, to keep report bytes reproducible.
    pub wall_time_secs: f64,
}

const REPORT_HEADER: [&str; 8] = [
    "experiment",
    "k",
    "part_size",
    "mapper",
    "measured_ratio",
    "bound",
    "seed",
    "wall_time_secs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

/// Renders rows to the exact bytes a report file would hold. CSV always
/// carries the header line; JSON is a pretty-printed array of objects.
/// Output depends only on the rows.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> Result<String, DataError> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            writer
                .write_record(REPORT_HEADER)
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            for row in rows {
                writer
                    .serialize(row)
                    .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows)
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

/// Writes [`render_report`]'s bytes to `path`.
pub fn write_report(
    rows: &[ReportRow],
    format: ReportFormat,
    path: &Path,
) -> Result<(), DataError> {
    let text = render_report(rows, format)?;
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Reads rows back. The file must be in the named format with exactly the
/// [`ReportRow`] schema; anything else is a schema error.
pub fn read_report(path: &Path, format: ReportFormat) -> Result<Vec<ReportRow>, DataError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    match format {
        ReportFormat::Csv => {
            let mut csv_reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_reader(reader);
            let headers = csv_reader
                .headers()
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))?;
            if headers.iter().ne(REPORT_HEADER.iter().copied()) {
                return Err(DataError::SchemaMismatch(format!(
                    "unexpected csv header: {headers:?}"
                )));
            }
            csv_reader
                .deserialize()
                .collect::<Result<Vec<ReportRow>, _>>()
                .map_err(|e| DataError::SchemaMismatch(e.to_string()))
        }
        ReportFormat::Json => serde_json::from_reader(reader)
            .map_err(|e| DataError::SchemaMismatch(e.to_string())),
    }
}
