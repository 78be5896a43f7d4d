//! Campaign orchestration: runs every disorder sample of an `(p, L)` grid on
//! a worker pool, persists the records, and drives the analysis.

pub mod analysis;
pub mod config;
pub mod store;
pub mod verify;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

pub use analysis::{analyze, AnalysisOptions, ThresholdAnalysis};
pub use config::CampaignConfig;
pub use store::{GroupVerdict, ResultStore};
pub use verify::{verify_bruteforce, VerifyReport};

use crate::disorder::{sample_disorder, ErrorModel};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng::{self, STREAM_DYNAMICS};
use crate::tempering::{run_sample, RunParams, TemperatureGrid};
use store::{Group, PointLine, SampleLine, StoreWriter};

/// Seed of one disorder sample, derived from the master seed and the
/// sample's coordinates so that adding grid points leaves others unchanged.
pub fn sample_seed(master: u64, p: f64, size: usize, sample: u64) -> u64 {
    rng::derive_seed(master, &[p.to_bits(), size as u64, sample])
}

/// Simulates one sample; failures are captured in the sample line.
pub fn simulate_sample(
    config: &CampaignConfig,
    grid: &TemperatureGrid,
    lattice: &Arc<Lattice>,
    p: f64,
    sample: u64,
) -> (SampleLine, Vec<PointLine>) {
    let size = lattice.size();
    let seed = sample_seed(config.seed, p, size, sample);
    let run = || -> Result<(SampleLine, Vec<PointLine>)> {
        let model = ErrorModel::new(config.d, p)?;
        let disorder = sample_disorder(Arc::clone(lattice), &model, seed);
        let mut rng = rng::stream(seed, STREAM_DYNAMICS);
        let params = RunParams::new(config.t_eq(), config.measure_every, sample)?;
        let result = run_sample(&disorder, grid, params, &mut rng, |_| {})?;
        let points = result
            .slots
            .iter()
            .enumerate()
            .map(|(t, s)| PointLine {
                p,
                size,
                sample,
                t_index: t,
                temperature: s.temperature,
                measurements: s.measurements,
                energy: s.energy,
                chi0: s.chi0,
                chik: s.chik,
                metropolis_acceptance: s.metropolis_acceptance,
                energy_bins: s.energy_bins.clone(),
                chi0_bins: s.chi0_bins.clone(),
                chik_bins: s.chik_bins.clone(),
            })
            .collect();
        let line = SampleLine {
            p,
            size,
            sample,
            seed,
            errors: disorder.error_count(),
            warnings: result.tuning_warnings(),
            exchange_acceptance: result.exchange_acceptance,
            all_replicas_traversed: result.all_replicas_traversed,
            failure: None,
        };
        Ok((line, points))
    };
    let failed = |msg: String| SampleLine {
        p,
        size,
        sample,
        seed,
        errors: 0,
        exchange_acceptance: Vec::new(),
        all_replicas_traversed: false,
        warnings: Vec::new(),
        failure: Some(msg),
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(out)) => out,
        Ok(Err(e)) => (failed(e.to_string()), Vec::new()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "worker panicked".into());
            (failed(msg), Vec::new())
        }
    }
}

/// Runs the whole campaign into `dir`, calling `progress` after each
/// `(p, L)` group is written.
pub fn run_campaign<F>(config: &CampaignConfig, dir: &Path, mut progress: F) -> Result<Vec<GroupVerdict>>
where
    F: FnMut(&GroupVerdict),
{
    config.validate()?;
    let grid = config.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_workers()?)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut writer = StoreWriter::create(dir, config)?;
    let mut summaries = Vec::new();
    for &p in &config.p {
        for &size in &config.sizes {
            let lattice = Arc::new(Lattice::new(size)?);
            let runs: Vec<(SampleLine, Vec<PointLine>)> = pool.install(|| {
                (0..config.samples as u64)
                    .into_par_iter()
                    .map(|s| simulate_sample(config, &grid, &lattice, p, s))
                    .collect()
            });
            let mut group = Group::default();
            for (line, points) in runs {
                group.samples.push(line);
                group.points.extend(points);
            }
            let summary = writer.write_group(group)?;
            progress(&summary);
            summaries.push(summary);
        }
    }
    Ok(summaries)
}
