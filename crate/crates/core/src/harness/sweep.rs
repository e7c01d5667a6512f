use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, HarnessError, OutputFormat, TrialReport};
use crate::gmm::{em_estimate, fit_single_gaussian, method_of_moments, EmOptions, EstimatorBranch};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// One value per axis, in axis order.
    pub coords: Vec<f64>,
    /// One value per column, in column order.
    pub values: Vec<f64>,
}

/// Grid of aggregated measurements: `cells.len()` equals the product of the
/// axis lengths, with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub columns: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value of `column` in cell `cell`.
    pub fn value(&self, cell: usize, column: &str) -> Option<f64> {
        Some(self.cells.get(cell)?.values[self.column(column)?])
    }
}

/// All coordinate tuples of the grid, last axis fastest.
fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Column names of [`sweep`] results.
pub const SWEEP_COLUMNS: [&str; 12] = [
    "trials",
    "failed",
    "rel_error_mean",
    "rel_error_std",
    "abs_error_mean",
    "abs_error_std",
    "queries_mean",
    "queries_std",
    "em_count",
    "mom_count",
    "single_count",
    "noiseless_count",
];

/// Aggregates trial reports into the [`SWEEP_COLUMNS`] row. Errors use the
/// worse of the two vectors per trial.
pub fn summarize(reports: &[TrialReport]) -> Vec<f64> {
    let ok: Vec<_> = reports.iter().filter_map(|r| r.report.as_ref()).collect();
    let rel: Vec<f64> = ok.iter().map(|r| r.errors.max_relative_error()).collect();
    let abs: Vec<f64> = ok.iter().map(|r| r.errors.max_error()).collect();
    let queries: Vec<f64> = ok.iter().map(|r| r.total_queries as f64).collect();
    let count = |b: EstimatorBranch| {
        ok.iter()
            .map(|r| r.estimator_branch_histogram.get(&b).copied().unwrap_or(0))
            .sum::<usize>() as f64
    };
    let (rm, rs) = mean_std(&rel);
    let (am, as_) = mean_std(&abs);
    let (qm, qs) = mean_std(&queries);
    vec![
        reports.len() as f64,
        (reports.len() - ok.len()) as f64,
        rm,
        rs,
        am,
        as_,
        qm,
        qs,
        count(EstimatorBranch::ExpectationMaximization),
        count(EstimatorBranch::MethodOfMoments),
        count(EstimatorBranch::SingleGaussian),
        count(EstimatorBranch::Noiseless),
    ]
}

/// Runs `base` at every grid point. Axis names are those accepted by
/// [`ExperimentConfig::set_param`]. The base output path is ignored.
pub fn sweep(base: &ExperimentConfig, axes: &[SweepAxis]) -> Result<SweepResult, HarnessError> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(HarnessError::Config("every sweep axis needs at least one value".into()));
    }
    let points = grid(axes);
    // Validate the whole grid before running anything.
    let configs: Vec<ExperimentConfig> = points
        .iter()
        .map(|coords| {
            let mut cfg = base.clone();
            cfg.output = None;
            for (axis, &v) in axes.iter().zip(coords) {
                cfg.set_param(&axis.name, v)?;
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut cells = Vec::with_capacity(points.len());
    for (coords, cfg) in points.into_iter().zip(&configs) {
        let reports = run_experiment(cfg)?;
        cells.push(SweepCell {
            coords,
            values: summarize(&reports),
        });
    }
    Ok(SweepResult {
        axes: axes.to_vec(),
        columns: SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

/// Knobs of [`estimator_comparison`] beyond the figure's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOptions {
    /// Median-of-means batches for the method of moments.
    pub mom_batches: usize,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { mom_batches: 1 }
    }
}

/// Column names of [`estimator_comparison`] results.
pub const COMPARISON_COLUMNS: [&str; 6] = [
    "em_error_mean",
    "em_error_std",
    "mom_error_mean",
    "mom_error_std",
    "single_error_mean",
    "single_error_std",
];

/// Mean absolute parameter error of EM, the method of moments and the
/// single-Gaussian fit on `N(0, sigma^2)/N(d, sigma^2)` mixtures, for each
/// separation `d`. Every trial draws fresh samples shared by the three
/// estimators.
pub fn estimator_comparison(
    separations: &[f64],
    samples_per_trial: usize,
    trials: usize,
    sigma: f64,
    seed: u64,
    opts: &ComparisonOptions,
) -> Result<SweepResult, HarnessError> {
    if separations.is_empty() || trials == 0 {
        return Err(HarnessError::Config("need at least one separation and one trial".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(HarnessError::Config(format!("sigma must be > 0, got {sigma}")));
    }
    if samples_per_trial < 2 * opts.mom_batches.max(2) {
        return Err(HarnessError::Config(format!(
            "{samples_per_trial} samples are too few for {} batches",
            opts.mom_batches
        )));
    }
    let mut cells = Vec::with_capacity(separations.len());
    for (si, &d) in separations.iter().enumerate() {
        let errors: Vec<[f64; 3]> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, si as u64), t as u64));
                let ys: Vec<f64> = (0..samples_per_trial)
                    .map(|_| {
                        let mu = if rng.random::<bool>() { d } else { 0.0 };
                        mu + sigma * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect();
                let em = em_estimate(&ys, sigma, &EmOptions::default())?.means;
                let mom = method_of_moments(&ys, sigma, opts.mom_batches)?;
                let c = fit_single_gaussian(&ys)?;
                Ok([
                    em.mean_abs_error(0.0, d),
                    mom.mean_abs_error(0.0, d),
                    ((c - 0.0).abs() + (c - d).abs()) / 2.0,
                ])
            })
            .collect::<Result<_, crate::gmm::GmmError>>()?;
        let mut values = Vec::with_capacity(6);
        for e in 0..3 {
            let col: Vec<f64> = errors.iter().map(|r| r[e]).collect();
            let (m, s) = mean_std(&col);
            values.extend([m, s]);
        }
        cells.push(SweepCell {
            coords: vec![d],
            values,
        });
    }
    Ok(SweepResult {
        axes: vec![SweepAxis {
            name: "separation".into(),
            values: separations.to_vec(),
        }],
        columns: COMPARISON_COLUMNS.iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

/// JSON layout written by [`emit_plot_data`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotTable {
    /// Axis names followed by column names.
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl From<&SweepResult> for PlotTable {
    fn from(r: &SweepResult) -> Self {
        let header = r
            .axes
            .iter()
            .map(|a| a.name.clone())
            .chain(r.columns.iter().cloned())
            .collect();
        let rows = r
            .cells
            .iter()
            .map(|c| c.coords.iter().chain(&c.values).copied().collect())
            .collect();
        Self { header, rows }
    }
}

/// Writes one row per cell: axis coordinates first, then the columns.
pub fn emit_plot_data(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    if result.cells.is_empty() {
        return Err(HarnessError::EmptyResult);
    }
    let table = PlotTable::from(result);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|v| format!("{v:?}")))?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut f = std::fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut f, &table)?;
            f.write_all(b"\n")?;
        }
    }
    Ok(())
}
