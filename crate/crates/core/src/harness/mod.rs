//! Batch experimentation: parameter grids, repeated seeded trials and the
//! median / interquartile-range summaries derived from them.
//!
//! Trial seeds are a stable 64-bit mix of the base seed, the cell's own
//! parameter values and the trial index, so every cell is reproducible in
//! isolation: adding or removing cells never changes another cell's
//! results, and interrupted sweeps can resume from their raw records.

pub mod files;

use crate::controller::ControllerParams;
use crate::engine::{run_trial, TrialConfig};
use crate::error::{Error, Result};
use crate::robot::BodySpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Parameters of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub swarm_size: u32,
    pub rho_informed: f64,
    pub rho_black: f64,
    pub variant: String,
}

impl CellKey {
    /// Total order used for grouping and for canonical output ordering.
    /// The proportions are non-negative, so bit order equals numeric order.
    pub fn ord_tuple(&self) -> (u32, u64, u64, &str) {
        (
            self.swarm_size,
            self.rho_informed.to_bits(),
            self.rho_black.to_bits(),
            &self.variant,
        )
    }
}

/// The grid of cells to sweep and how many seeded trials to run per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub swarm_sizes: Vec<u32>,
    pub rho_informed_values: Vec<f64>,
    pub rho_black_values: Vec<f64>,
    pub variants: Vec<String>,
    pub trials_per_cell: u32,
    pub base_seed: u64,
}

impl SweepSpec {
    /// The canonical experiment grid: both swarm sizes, five informed
    /// proportions, six black proportions, both variants, 20 trials per
    /// cell (120 cells, 2400 trials).
    pub fn canonical_grid(base_seed: u64) -> SweepSpec {
        SweepSpec {
            swarm_sizes: vec![50, 100],
            rho_informed_values: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            rho_black_values: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            variants: vec!["simplified".into(), "baseline".into()],
            trials_per_cell: 20,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("swarm_sizes", self.swarm_sizes.is_empty()),
            ("rho_informed_values", self.rho_informed_values.is_empty()),
            ("rho_black_values", self.rho_black_values.is_empty()),
            ("variants", self.variants.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.trials_per_cell == 0 {
            return Err(Error::Config("trials_per_cell must be at least 1".into()));
        }
        Ok(())
    }

    /// Cells in fixed enumeration order: size, then informed proportion,
    /// then black proportion, then variant.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for &swarm_size in &self.swarm_sizes {
            for &rho_informed in &self.rho_informed_values {
                for &rho_black in &self.rho_black_values {
                    for variant in &self.variants {
                        cells.push(CellKey {
                            swarm_size,
                            rho_informed,
                            rho_black,
                            variant: variant.clone(),
                        });
                    }
                }
            }
        }
        cells
    }

    /// Every (cell, trial) pair with its derived seed.
    pub fn plan(&self) -> Vec<PlannedTrial> {
        let mut planned = Vec::new();
        for cell in self.cells() {
            for trial_index in 0..self.trials_per_cell {
                let seed = trial_seed(self.base_seed, &cell, trial_index);
                planned.push(PlannedTrial {
                    cell: cell.clone(),
                    trial_index,
                    seed,
                });
            }
        }
        planned
    }
}

/// Trial-level settings shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepContext {
    pub body: BodySpec,
    pub controller: ControllerParams,
    pub duration: f64,
    pub tick_dt: f64,
}

impl Default for SweepContext {
    fn default() -> Self {
        SweepContext {
            body: BodySpec::default(),
            controller: ControllerParams::default(),
            duration: 30_000.0,
            tick_dt: 0.1,
        }
    }
}

/// One trial of a sweep, with its content-derived seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub cell: CellKey,
    pub trial_index: u32,
    pub seed: u64,
}

impl PlannedTrial {
    pub fn config(&self, context: &SweepContext) -> Result<TrialConfig> {
        let config = TrialConfig {
            swarm_size: self.cell.swarm_size,
            rho_informed: self.cell.rho_informed,
            rho_black: self.cell.rho_black,
            variant: self.cell.variant.clone(),
            arena: crate::arena::ArenaSpec::preset(self.cell.swarm_size)?,
            body: context.body,
            controller: context.controller,
            duration: context.duration,
            tick_dt: context.tick_dt,
            seed: self.seed,
            record_timeseries: false,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Raw record of one finished trial: the persistent form from which all
/// summaries are recomputable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub swarm_size: u32,
    pub rho_informed: f64,
    pub rho_black: f64,
    pub variant: String,
    pub trial_index: u32,
    pub seed: u64,
    pub on_black: u32,
    pub on_white: u32,
    pub elsewhere: u32,
}

impl TrialRecord {
    pub fn cell(&self) -> CellKey {
        CellKey {
            swarm_size: self.swarm_size,
            rho_informed: self.rho_informed,
            rho_black: self.rho_black,
            variant: self.variant.clone(),
        }
    }
}

/// A trial that could not run; never silently dropped from aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub cell: CellKey,
    pub trial_index: u32,
    pub seed: u64,
    pub error: String,
}

/// Per-cell medians and interquartile ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: CellKey,
    pub trials: u32,
    pub median_black: f64,
    pub median_white: f64,
    pub iqr_black: f64,
    pub iqr_white: f64,
}

/// Summaries plus the raw records they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub cells: Vec<CellSummary>,
    pub records: Vec<TrialRecord>,
}

/// Result of running a sweep: the summary table plus any trial failures.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub summary: SummaryTable,
    pub failures: Vec<TrialFailure>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for one trial, derived from the cell's own parameters (not
/// its position in the grid) so cells are independent of each other.
pub fn trial_seed(base_seed: u64, cell: &CellKey, trial_index: u32) -> u64 {
    let mut h = splitmix64(base_seed ^ GOLDEN_GAMMA);
    h = splitmix64(h ^ u64::from(cell.swarm_size));
    h = splitmix64(h ^ cell.rho_informed.to_bits());
    h = splitmix64(h ^ cell.rho_black.to_bits());
    for byte in cell.variant.bytes() {
        h = splitmix64(h ^ u64::from(byte));
    }
    splitmix64(h ^ u64::from(trial_index))
}

/// Median and interquartile range of integer counts.
///
/// Quantiles use linear interpolation between order statistics (the
/// midpoint convention for even-length medians falls out of the same
/// formula); the IQR is Q3 - Q1.
pub fn median_and_iqr(samples: &[u32]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample("median_and_iqr"));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|&v| f64::from(v)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| -> f64 {
        let position = p * (sorted.len() - 1) as f64;
        let lower = position.floor() as usize;
        let upper = position.ceil() as usize;
        let fraction = position - lower as f64;
        sorted[lower] + (sorted[upper] - sorted[lower]) * fraction
    };
    Ok((quantile(0.5), quantile(0.75) - quantile(0.25)))
}

/// Runs the given trials (in parallel) and collects records and failures,
/// both in planned order. `on_done` is called as each trial finishes, from
/// worker threads.
pub fn run_planned<F>(
    planned: &[PlannedTrial],
    context: &SweepContext,
    on_done: F,
) -> (Vec<TrialRecord>, Vec<TrialFailure>)
where
    F: Fn(&TrialRecord) + Sync,
{
    let outcomes: Vec<std::result::Result<TrialRecord, TrialFailure>> = planned
        .par_iter()
        .map(|trial| {
            let result = trial.config(context).and_then(|config| run_trial(&config));
            match result {
                Ok(outcome) => {
                    let record = TrialRecord {
                        swarm_size: trial.cell.swarm_size,
                        rho_informed: trial.cell.rho_informed,
                        rho_black: trial.cell.rho_black,
                        variant: trial.cell.variant.clone(),
                        trial_index: trial.trial_index,
                        seed: trial.seed,
                        on_black: outcome.robots_on_black,
                        on_white: outcome.robots_on_white,
                        elsewhere: outcome.robots_elsewhere,
                    };
                    on_done(&record);
                    Ok(record)
                }
                Err(e) => Err(TrialFailure {
                    cell: trial.cell.clone(),
                    trial_index: trial.trial_index,
                    seed: trial.seed,
                    error: e.to_string(),
                }),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    (records, failures)
}

/// Groups records by cell and computes the per-site median and IQR. The
/// output is canonically ordered and contains the (sorted) input records,
/// so running it on a summary's own records reproduces the summary.
pub fn summarize(records: &[TrialRecord]) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::EmptySample("no trial records to summarize"));
    }
    let mut sorted_records = records.to_vec();
    sorted_records.sort_by(|a, b| {
        (a.cell().ord_tuple(), a.trial_index).cmp(&(b.cell().ord_tuple(), b.trial_index))
    });

    type CellGroup = (CellKey, Vec<u32>, Vec<u32>);
    let mut groups: BTreeMap<(u32, u64, u64, String), CellGroup> = BTreeMap::new();
    for record in &sorted_records {
        let cell = record.cell();
        let (size, rho_i, rho_b, variant) = cell.ord_tuple();
        let entry = groups
            .entry((size, rho_i, rho_b, variant.to_string()))
            .or_insert_with(|| (cell.clone(), Vec::new(), Vec::new()));
        entry.1.push(record.on_black);
        entry.2.push(record.on_white);
    }

    let mut cells = Vec::with_capacity(groups.len());
    for (_, (cell, blacks, whites)) in groups {
        let (median_black, iqr_black) = median_and_iqr(&blacks)?;
        let (median_white, iqr_white) = median_and_iqr(&whites)?;
        cells.push(CellSummary {
            cell,
            trials: blacks.len() as u32,
            median_black,
            median_white,
            iqr_black,
            iqr_white,
        });
    }
    Ok(SummaryTable {
        cells,
        records: sorted_records,
    })
}

/// Runs every planned trial of the sweep and summarizes the outcome.
pub fn run_sweep(spec: &SweepSpec, context: &SweepContext) -> Result<SweepOutcome> {
    spec.validate()?;
    let planned = spec.plan();
    let (records, failures) = run_planned(&planned, context, |_| {});
    let summary = summarize(&records)?;
    Ok(SweepOutcome { summary, failures })
}

/// Frequencies of final per-site counts over repeated runs without informed
/// robots, plus the pooled statistics of robots resting on neither site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryBreakingResult {
    /// (final robots-on-a-site count, frequency); each run contributes two
    /// entries, one per site.
    pub histogram: Vec<(u32, u32)>,
    pub offsite_median: f64,
    pub offsite_iqr: f64,
    pub records: Vec<TrialRecord>,
}

/// Repeats the no-informed-robots experiment under the simplified variant
/// and bins the final per-site counts.
pub fn symmetry_breaking_experiment(
    swarm_size: u32,
    runs: u32,
    base_seed: u64,
    context: &SweepContext,
) -> Result<SymmetryBreakingResult> {
    let spec = SweepSpec {
        swarm_sizes: vec![swarm_size],
        rho_informed_values: vec![0.0],
        rho_black_values: vec![0.5],
        variants: vec!["simplified".into()],
        trials_per_cell: runs,
        base_seed,
    };
    spec.validate()?;
    let (records, failures) = run_planned(&spec.plan(), context, |_| {});
    if let Some(first) = failures.first() {
        return Err(Error::Init(format!(
            "trial {} failed: {}",
            first.trial_index, first.error
        )));
    }
    let mut bins: BTreeMap<u32, u32> = BTreeMap::new();
    for record in &records {
        *bins.entry(record.on_black).or_insert(0) += 1;
        *bins.entry(record.on_white).or_insert(0) += 1;
    }
    let offsite: Vec<u32> = records.iter().map(|r| r.elsewhere).collect();
    let (offsite_median, offsite_iqr) = median_and_iqr(&offsite)?;
    Ok(SymmetryBreakingResult {
        histogram: bins.into_iter().collect(),
        offsite_median,
        offsite_iqr,
        records,
    })
}
