//! Exact enumeration of small lattices as an oracle for the Monte Carlo.

use std::sync::Arc;

use serde::Serialize;

use crate::disorder::{sample_disorder, DisorderRealization, ErrorModel};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::observables::Measurer;
use crate::potts::PottsSystem;
use crate::rng::{self, STREAM_DYNAMICS};
use crate::stats;
use crate::tempering::{run_sample, RunParams, TemperatureGrid};

/// Largest state space that will be enumerated.
pub const MAX_STATES: u128 = 10_000_000;
const BLOCKS: usize = 64;

/// Exact Boltzmann averages; susceptibilities are normalised by `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exact {
    pub states: u64,
    pub log_partition: f64,
    pub energy: f64,
    pub chi0: f64,
    pub chik: f64,
}

/// Sums over every spin configuration of a fixed disorder realization.
pub fn enumerate(disorder: &DisorderRealization, beta: f64) -> Result<Exact> {
    let d = disorder.dimension();
    let n = disorder.lattice().num_vertices();
    let states = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > MAX_STATES {
        return Err(Error::StateSpaceTooLarge(states));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be finite and non-negative, got {beta}")));
    }
    let system = PottsSystem::new(disorder.clone());
    let mut measurer = Measurer::new(disorder.lattice(), d)?;
    let for_each = |f: &mut dyn FnMut(&[u8])| {
        let mut spins = vec![0u8; n];
        loop {
            f(&spins);
            let mut i = 0;
            while i < n {
                spins[i] += 1;
                if (spins[i] as usize) < d {
                    break;
                }
                spins[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    };
    let mut e_min = i64::MAX;
    for_each(&mut |s| e_min = e_min.min(system.energy(s)));
    let (mut z, mut ze, mut z0, mut zk) = (0.0, 0.0, 0.0, 0.0);
    for_each(&mut |s| {
        let e = system.energy(s);
        let w = (-beta * (e - e_min) as f64).exp();
        let (c0, ck) = measurer.measure(s);
        z += w;
        ze += w * e as f64;
        z0 += w * c0;
        zk += w * ck;
    });
    Ok(Exact {
        states: states as u64,
        log_partition: z.ln() - beta * e_min as f64,
        energy: ze / z,
        chi0: z0 / z / n as f64,
        chik: zk / z / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub observable: String,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl Comparison {
    /// Deviation in units of the Monte Carlo standard error. Exact
    /// agreement with zero error gives 0.
    pub fn z_score(&self) -> f64 {
        let diff = self.estimate - self.exact;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub d: usize,
    pub size: usize,
    pub beta: f64,
    pub seed: u64,
    pub sweeps: u64,
    pub errors: usize,
    pub exact: Exact,
    pub comparisons: Vec<Comparison>,
}

impl VerifyReport {
    pub fn max_abs_z(&self) -> f64 {
        self.comparisons.iter().map(|c| c.z_score().abs()).fold(0.0, f64::max)
    }

    pub fn passed(&self, z_limit: f64) -> bool {
        self.max_abs_z() <= z_limit
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "d = {}, L = {}, beta = {}, seed = {}, {} errors, {} states, {} sweeps",
            self.d, self.size, self.beta, self.seed, self.errors, self.exact.states, self.sweeps
        )?;
        writeln!(f, "{:>8}  {:>14}  {:>14}  {:>12}  {:>8}", "quantity", "exact", "monte carlo", "std error", "z")?;
        for c in &self.comparisons {
            writeln!(
                f,
                "{:>8}  {:>14.8}  {:>14.8}  {:>12.3e}  {:>8.3}",
                c.observable,
                c.exact,
                c.estimate,
                c.std_error,
                c.z_score()
            )?;
        }
        Ok(())
    }
}

/// Samples a disorder realization at error rate `p` and compares
/// enumeration with a Monte Carlo run at `beta`.
pub fn verify_bruteforce(d: usize, size: usize, p: f64, beta: f64, seed: u64, sweeps: u64) -> Result<VerifyReport> {
    let lattice = Arc::new(Lattice::new(size)?);
    let model = ErrorModel::new(d, p)?;
    verify_realization(&sample_disorder(lattice, &model, seed), beta, seed, sweeps)
}

/// Compares enumeration with Monte Carlo for a given realization. The run
/// uses `sweeps` sweeps of equilibration followed by `sweeps` measured
/// sweeps; errors come from blocking.
pub fn verify_realization(disorder: &DisorderRealization, beta: f64, seed: u64, sweeps: u64) -> Result<VerifyReport> {
    let exact = enumerate(disorder, beta)?;
    if sweeps < BLOCKS as u64 {
        return Err(Error::invalid(format!("need at least {BLOCKS} sweeps")));
    }
    let n = disorder.lattice().num_vertices() as f64;
    let grid = TemperatureGrid::single_beta(beta)?;
    let mut rng = rng::stream(seed, STREAM_DYNAMICS);
    let mut series: [Vec<f64>; 3] = Default::default();
    run_sample(disorder, &grid, RunParams::new(sweeps, 1, 0)?, &mut rng, |rec| {
        series[0].push(rec.energy as f64);
        series[1].push(rec.chi0_term / n);
        series[2].push(rec.chik_term / n);
    })?;
    let comparisons = ["energy", "chi0", "chik"]
        .iter()
        .zip([exact.energy, exact.chi0, exact.chik])
        .zip(&series)
        .map(|((name, exact), xs)| Comparison {
            observable: name.to_string(),
            exact,
            estimate: stats::mean(xs),
            std_error: stats::block_standard_error(xs, BLOCKS),
        })
        .collect();
    Ok(VerifyReport {
        d: disorder.dimension(),
        size: disorder.lattice().size(),
        beta,
        seed,
        sweeps,
        errors: disorder.error_count(),
        exact,
        comparisons,
    })
}
