//! Parallel tempering over a ladder of temperatures for one disorder
//! realization.
//!
//! A run performs `2·t_eq` sweeps numbered `0..2·t_eq`. Sweep 0 is never
//! measured; from sweep 1 on, observables are accumulated into logarithmic
//! bins (bin `b` covers sweeps `[2^b, 2^{b+1})`). With `t_eq = 2^b` the last
//! bin is exactly the measurement phase `[t_eq, 2·t_eq)`, and only that
//! phase enters the thermal averages.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::observables::{LogBins, MeasurementRecord, Measurer};
use crate::potts::{sweep_with_table, BoltzmannTable, PottsSystem, Replica};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// Uniform in ln T.
    #[default]
    Geometric,
    Linear,
}

/// Ascending temperatures and the matching inverse temperatures.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureGrid {
    temperatures: Vec<f64>,
    betas: Vec<f64>,
}

impl TemperatureGrid {
    pub fn new(t_min: f64, t_max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if !(t_min > 0.0 && t_max.is_finite() && t_min < t_max) {
            return Err(Error::invalid(format!(
                "temperature bounds must satisfy 0 < T_min < T_max, got [{t_min}, {t_max}]"
            )));
        }
        if count < 2 {
            return Err(Error::invalid(format!("need at least 2 temperatures, got {count}")));
        }
        let last = (count - 1) as f64;
        let mut temperatures: Vec<f64> = (0..count)
            .map(|i| {
                let f = i as f64 / last;
                match spacing {
                    Spacing::Geometric => t_min * (t_max / t_min).powf(f),
                    Spacing::Linear => t_min + (t_max - t_min) * f,
                }
            })
            .collect();
        temperatures[0] = t_min;
        temperatures[count - 1] = t_max;
        Self::from_temperatures(temperatures)
    }

    /// An arbitrary strictly ascending list of positive temperatures.
    pub fn from_temperatures(temperatures: Vec<f64>) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::invalid("empty temperature grid"));
        }
        if temperatures.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::invalid("temperatures must be positive"));
        }
        if temperatures.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("temperatures must be strictly ascending"));
        }
        let betas = temperatures.iter().map(|t| 1.0 / t).collect();
        Ok(Self { temperatures, betas })
    }

    /// A single inverse temperature; `β = 0` is allowed and maps to `T = ∞`.
    pub fn single_beta(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be finite and non-negative, got {beta}")));
        }
        Ok(Self {
            temperatures: vec![1.0 / beta],
            betas: vec![beta],
        })
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Feedback re-spacing: redistributes the interior temperatures so that
    /// the cumulative `Σ √(−ln a)` over measured pair acceptances `a` grows
    /// uniformly along the ladder. Endpoints are kept.
    pub fn respaced(&self, acceptance: &[f64]) -> Result<Self> {
        let n = self.len();
        if n < 3 {
            return Ok(self.clone());
        }
        if acceptance.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                got: acceptance.len(),
            });
        }
        let mut cum = vec![0.0];
        for &a in acceptance {
            let step = (-a.clamp(1e-6, 1.0).ln()).sqrt().max(1e-9);
            cum.push(cum.last().unwrap() + step);
        }
        let total = *cum.last().unwrap();
        let mut temps = vec![self.temperatures[0]];
        for k in 1..n - 1 {
            let target = total * k as f64 / (n - 1) as f64;
            let i = cum.partition_point(|&c| c <= target).clamp(1, n - 1) - 1;
            let f = (target - cum[i]) / (cum[i + 1] - cum[i]);
            let beta = self.betas[i] + f * (self.betas[i + 1] - self.betas[i]);
            temps.push(1.0 / beta);
        }
        temps.push(self.temperatures[n - 1]);
        Self::from_temperatures(temps)
    }
}

/// `min(1, exp[(β_i − β_j)(E_i − E_j)])` for swapping the replicas held at
/// inverse temperatures `β_i` and `β_j`.
pub fn exchange_probability(beta_i: f64, beta_j: f64, e_i: f64, e_j: f64) -> f64 {
    let x = (beta_i - beta_j) * (e_i - e_j);
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Replicas of one disorder realization, one per temperature slot.
#[derive(Debug, Clone)]
pub struct SampleRun {
    system: PottsSystem,
    betas: Vec<f64>,
    tables: Vec<BoltzmannTable>,
    replicas: Vec<Replica>,
    slot_to_replica: Vec<usize>,
    sweeps: u64,
    exchange_attempts: Vec<u64>,
    exchange_accepts: Vec<u64>,
    // visits[replica][slot]
    visits: Vec<Vec<u64>>,
    metropolis_accepts: Vec<f64>,
}

impl SampleRun {
    /// Replicas start from independent uniformly random configurations.
    pub fn new(system: PottsSystem, grid: &TemperatureGrid, rng: &mut SimRng) -> Self {
        let n = grid.len();
        let replicas: Vec<Replica> = (0..n).map(|slot| Replica::random(&system, slot, rng)).collect();
        Self::with_replicas(system, grid, replicas)
    }

    pub fn with_replicas(system: PottsSystem, grid: &TemperatureGrid, mut replicas: Vec<Replica>) -> Self {
        let n = grid.len();
        assert_eq!(replicas.len(), n, "one replica per temperature");
        for (slot, r) in replicas.iter_mut().enumerate() {
            r.slot = slot;
        }
        Self {
            system,
            betas: grid.betas().to_vec(),
            tables: grid.betas().iter().map(|&b| BoltzmannTable::new(b)).collect(),
            replicas,
            slot_to_replica: (0..n).collect(),
            sweeps: 0,
            exchange_attempts: vec![0; n.saturating_sub(1)],
            exchange_accepts: vec![0; n.saturating_sub(1)],
            visits: vec![vec![0; n]; n],
            metropolis_accepts: vec![0.0; n],
        }
    }

    pub fn system(&self) -> &PottsSystem {
        &self.system
    }

    pub fn num_slots(&self) -> usize {
        self.betas.len()
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// The replica currently held at temperature slot `slot`.
    pub fn replica_at(&self, slot: usize) -> &Replica {
        &self.replicas[self.slot_to_replica[slot]]
    }

    pub fn replicas(&self) -> &[Replica] {
        &self.replicas
    }

    pub fn slot_assignment(&self) -> &[usize] {
        &self.slot_to_replica
    }

    #[cfg(test)]
    fn set_energy_for_test(&mut self, slot: usize, energy: i64) {
        let r = self.slot_to_replica[slot];
        self.replicas[r].force_energy(energy);
    }

    /// One Metropolis sweep of every replica at its slot's temperature.
    pub fn sweep(&mut self, rng: &mut SimRng) {
        for (slot, &r) in self.slot_to_replica.iter().enumerate() {
            let acc = sweep_with_table(&mut self.replicas[r], &self.system, &self.tables[slot], rng);
            self.metropolis_accepts[slot] += acc;
        }
        self.sweeps += 1;
        for (slot, &r) in self.slot_to_replica.iter().enumerate() {
            self.visits[r][slot] += 1;
        }
    }

    /// Attempts swaps on the adjacent pairs `(i, i+1)` with `i` of the given
    /// parity. Returns the number of accepted swaps.
    pub fn exchange(&mut self, parity: Parity, rng: &mut SimRng) -> usize {
        let n = self.num_slots();
        let mut accepted = 0;
        let mut i = parity.offset();
        while i + 1 < n {
            let a = self.slot_to_replica[i];
            let b = self.slot_to_replica[i + 1];
            let p = exchange_probability(
                self.betas[i],
                self.betas[i + 1],
                self.replicas[a].energy() as f64,
                self.replicas[b].energy() as f64,
            );
            self.exchange_attempts[i] += 1;
            if p >= 1.0 || rng.random::<f64>() < p {
                self.slot_to_replica.swap(i, i + 1);
                self.replicas[a].slot = i + 1;
                self.replicas[b].slot = i;
                self.exchange_accepts[i] += 1;
                accepted += 1;
            }
            i += 2;
        }
        debug_assert!(self.is_permutation());
        accepted
    }

    fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.num_slots()];
        for (slot, &r) in self.slot_to_replica.iter().enumerate() {
            if seen[r] || self.replicas[r].slot != slot {
                return false;
            }
            seen[r] = true;
        }
        true
    }

    /// Accepted fraction of exchange attempts for each adjacent pair.
    pub fn exchange_acceptance(&self) -> Vec<f64> {
        self.exchange_attempts
            .iter()
            .zip(&self.exchange_accepts)
            .map(|(&n, &k)| if n == 0 { 0.0 } else { k as f64 / n as f64 })
            .collect()
    }

    /// Number of sweeps each replica spent at each slot, `[replica][slot]`.
    pub fn visit_counts(&self) -> &[Vec<u64>] {
        &self.visits
    }

    /// Whether every replica has visited both the coldest and hottest slot.
    pub fn all_replicas_traversed(&self) -> bool {
        let n = self.num_slots();
        self.visits.iter().all(|v| v[0] > 0 && v[n - 1] > 0)
    }

    pub fn metropolis_acceptance(&self) -> Vec<f64> {
        self.metropolis_accepts
            .iter()
            .map(|&a| if self.sweeps == 0 { 0.0 } else { a / self.sweeps as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunParams {
    /// Equilibration sweeps; the measurement phase has the same length.
    pub t_eq: u64,
    pub measure_every: u64,
    /// Identifier copied into every measurement record.
    pub sample: u64,
}

impl RunParams {
    pub fn new(t_eq: u64, measure_every: u64, sample: u64) -> Result<Self> {
        if t_eq < 1 {
            return Err(Error::invalid("t_eq must be at least 1"));
        }
        if measure_every < 1 {
            return Err(Error::invalid("measure_every must be at least 1"));
        }
        Ok(Self {
            t_eq,
            measure_every,
            sample,
        })
    }
}

/// Thermal averages and log-binned histories at one temperature slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSummary {
    pub temperature: f64,
    pub measurements: u64,
    pub energy: f64,
    pub chi0: f64,
    pub chik: f64,
    pub energy_bins: LogBins,
    pub chi0_bins: LogBins,
    pub chik_bins: LogBins,
    pub metropolis_acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub slots: Vec<SlotSummary>,
    pub exchange_acceptance: Vec<f64>,
    pub all_replicas_traversed: bool,
}

impl SampleResult {
    /// Human-readable tuning warnings: adjacent-pair acceptance outside
    /// `[0.2, 0.9]` and replicas that never reached both ends of the ladder.
    pub fn tuning_warnings(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .exchange_acceptance
            .iter()
            .enumerate()
            .filter(|(_, &a)| !(0.2..=0.9).contains(&a))
            .map(|(i, a)| format!("exchange acceptance {a:.3} between slots {i} and {}", i + 1))
            .collect();
        if !self.all_replicas_traversed && self.slots.len() > 1 {
            out.push("some replica never visited both ends of the temperature ladder".into());
        }
        out
    }
}

/// Runs the full equilibration + measurement protocol for one disorder
/// realization. `observer` receives every measurement-phase record.
pub fn run_sample<F>(
    disorder: &DisorderRealization,
    grid: &TemperatureGrid,
    params: RunParams,
    rng: &mut SimRng,
    mut observer: F,
) -> Result<SampleResult>
where
    F: FnMut(&MeasurementRecord),
{
    let system = PottsSystem::new(disorder.clone());
    let mut measurer = Measurer::new(disorder.lattice(), disorder.dimension())?;
    let mut run = SampleRun::new(system, grid, rng);
    let n = grid.len();
    let mut bins = vec![(LogBins::default(), LogBins::default(), LogBins::default()); n];
    let mut sums = vec![(0u64, 0.0f64, 0.0f64, 0.0f64); n];
    let total = 2 * params.t_eq;

    for t in 0..total {
        run.sweep(rng);
        let parity = if t % 2 == 0 { Parity::Even } else { Parity::Odd };
        run.exchange(parity, rng);
        if t == 0 || t % params.measure_every != 0 {
            continue;
        }
        let measuring = t >= params.t_eq;
        for slot in 0..n {
            let rep = run.replica_at(slot);
            let energy = rep.energy();
            let (chi0, chik) = measurer.measure(rep.spins());
            let b = &mut bins[slot];
            b.0.push(t, energy as f64);
            b.1.push(t, chi0);
            b.2.push(t, chik);
            if measuring {
                let s = &mut sums[slot];
                s.0 += 1;
                s.1 += energy as f64;
                s.2 += chi0;
                s.3 += chik;
                observer(&MeasurementRecord {
                    sample: params.sample,
                    temperature_index: slot,
                    sweep: t,
                    energy,
                    chi0_term: chi0,
                    chik_term: chik,
                });
            }
        }
    }

    let acceptance = run.metropolis_acceptance();
    let slots = bins
        .into_iter()
        .zip(sums)
        .enumerate()
        .map(|(slot, ((eb, c0b, ckb), (count, e, c0, ck)))| {
            let norm = if count == 0 { f64::NAN } else { 1.0 / count as f64 };
            SlotSummary {
                temperature: grid.temperatures()[slot],
                measurements: count,
                energy: e * norm,
                chi0: c0 * norm,
                chik: ck * norm,
                energy_bins: eb,
                chi0_bins: c0b,
                chik_bins: ckb,
                metropolis_acceptance: acceptance[slot],
            }
        })
        .collect();
    Ok(SampleResult {
        slots,
        exchange_acceptance: run.exchange_acceptance(),
        all_replicas_traversed: run.all_replicas_traversed(),
    })
}
