//! The disordered d-state Potts model.
//!
//! An edge `ℓ = (a → b)` with shift `ε` is satisfied when
//! `(ε + S_a − S_b) mod d = 0`; the uniform Hamiltonian is minus the number
//! of satisfied edges. Energies are kept as integers so the cached replica
//! energy can be compared exactly against a full recomputation.

use rand::{Rng, RngCore};

use crate::disorder::{DisorderRealization, ErrorModel};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng::SimRng;

#[inline]
fn edge_term(d: usize, eps: u8, s_origin: u8, s_target: u8) -> usize {
    (eps as usize + s_origin as usize + d - s_target as usize) % d
}

fn check_spins(spins: &[u8], dis: &DisorderRealization) -> Result<()> {
    let n = dis.lattice().num_vertices();
    if spins.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spins.len(),
        });
    }
    let d = dis.dimension();
    if let Some(&bad) = spins.iter().find(|&&s| s as usize >= d) {
        return Err(Error::invalid(format!("spin value {bad} is not below d = {d}")));
    }
    Ok(())
}

/// `H = −Σ_ℓ δ(ε_ℓ + S_origin − S_target mod d, 0)`, in `[−2L², 0]`.
pub fn energy_uniform(spins: &[u8], dis: &DisorderRealization) -> Result<i64> {
    check_spins(spins, dis)?;
    Ok(energy_unchecked(spins, dis))
}

fn energy_unchecked(spins: &[u8], dis: &DisorderRealization) -> i64 {
    let lat = dis.lattice();
    let d = dis.dimension();
    let eps = dis.errors();
    let mut satisfied = 0i64;
    for v in 0..lat.num_vertices() {
        let nb = lat.neighbors(v);
        let s = spins[v];
        satisfied += (edge_term(d, eps[2 * v], s, spins[nb[0] as usize]) == 0) as i64;
        satisfied += (edge_term(d, eps[2 * v + 1], s, spins[nb[1] as usize]) == 0) as i64;
    }
    -satisfied
}

/// Coupling constants `J_ε` of the general Hamiltonian
/// `H = Σ_ℓ J[(ε_ℓ + S_origin − S_target) mod d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    couplings: Vec<f64>,
}

impl CouplingTable {
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        if couplings.len() < 2 {
            return Err(Error::invalid("need at least two couplings"));
        }
        if couplings.iter().any(|j| !j.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(Self { couplings })
    }

    /// `J_ε = −ln(p_ε)/β`, so that `p_ε = exp(−β J_ε)`.
    pub fn from_error_model(model: &ErrorModel, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive and finite, got {beta}")));
        }
        let couplings = model
            .probabilities()
            .into_iter()
            .map(|p| {
                if p > 0.0 {
                    Ok(-p.ln() / beta)
                } else {
                    Err(Error::invalid("zero-probability error class has infinite coupling"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(couplings)
    }

    pub fn dimension(&self) -> usize {
        self.couplings.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.couplings
    }
}

/// General-coupling energy. No constant is dropped: every edge contributes
/// exactly `J[(ε + S_origin − S_target) mod d]`.
pub fn energy_general(spins: &[u8], dis: &DisorderRealization, couplings: &CouplingTable) -> Result<f64> {
    check_spins(spins, dis)?;
    let d = dis.dimension();
    if couplings.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: couplings.dimension(),
        });
    }
    let lat = dis.lattice();
    let eps = dis.errors();
    let j = couplings.values();
    let mut h = 0.0;
    for v in 0..lat.num_vertices() {
        let nb = lat.neighbors(v);
        h += j[edge_term(d, eps[2 * v], spins[v], spins[nb[0] as usize])];
        h += j[edge_term(d, eps[2 * v + 1], spins[v], spins[nb[1] as usize])];
    }
    Ok(h)
}

/// A disorder realization prepared for fast local updates.
///
/// For vertex `v` with value `x`, each incident edge is satisfied iff
/// `x == (S_neighbor + shift) mod d`; the table stores those shifts in the
/// neighbour order `[right, down, left, up]`.
#[derive(Debug, Clone)]
pub struct PottsSystem {
    disorder: DisorderRealization,
    neighbors: Vec<[u32; 4]>,
    shifts: Vec<[u8; 4]>,
}

impl PottsSystem {
    pub fn new(disorder: DisorderRealization) -> Self {
        let lat = disorder.lattice();
        let d = disorder.dimension();
        let eps = disorder.errors();
        let n = lat.num_vertices();
        let neighbors: Vec<[u32; 4]> = (0..n).map(|v| lat.neighbors(v)).collect();
        let shifts = (0..n)
            .map(|v| {
                let [_, _, left, up] = neighbors[v];
                [
                    ((d - eps[2 * v] as usize) % d) as u8,
                    ((d - eps[2 * v + 1] as usize) % d) as u8,
                    eps[2 * left as usize],
                    eps[2 * up as usize + 1],
                ]
            })
            .collect();
        Self {
            disorder,
            neighbors,
            shifts,
        }
    }

    pub fn disorder(&self) -> &DisorderRealization {
        &self.disorder
    }

    pub fn lattice(&self) -> &Lattice {
        self.disorder.lattice()
    }

    pub fn dimension(&self) -> usize {
        self.disorder.dimension()
    }

    pub fn num_spins(&self) -> usize {
        self.neighbors.len()
    }

    /// Values of `S_v` that satisfy each of the four incident edges.
    #[inline(always)]
    fn targets(&self, spins: &[u8], v: usize) -> [u8; 4] {
        let d = self.dimension() as u16;
        let nb = self.neighbors[v];
        let sh = self.shifts[v];
        let mut t = [0u8; 4];
        for k in 0..4 {
            let x = spins[nb[k] as usize] as u16 + sh[k] as u16;
            t[k] = if x >= d { (x - d) as u8 } else { x as u8 };
        }
        t
    }

    pub fn energy(&self, spins: &[u8]) -> i64 {
        energy_unchecked(spins, &self.disorder)
    }
}

#[inline(always)]
fn count_equal(t: &[u8; 4], x: u8) -> i32 {
    (t[0] == x) as i32 + (t[1] == x) as i32 + (t[2] == x) as i32 + (t[3] == x) as i32
}

/// A spin configuration with its cached energy and temperature slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    spins: Vec<u8>,
    energy: i64,
    pub slot: usize,
}

impl Replica {
    pub fn new(spins: Vec<u8>, system: &PottsSystem, slot: usize) -> Result<Self> {
        check_spins(&spins, system.disorder())?;
        let energy = system.energy(&spins);
        Ok(Self {
            spins,
            energy,
            slot,
        })
    }

    pub fn random(system: &PottsSystem, slot: usize, rng: &mut SimRng) -> Self {
        let d = system.dimension();
        let spins: Vec<u8> = (0..system.num_spins())
            .map(|_| rng.random_range(0..d) as u8)
            .collect();
        let energy = system.energy(&spins);
        Self {
            spins,
            energy,
            slot,
        }
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    #[cfg(test)]
    pub(crate) fn force_energy(&mut self, energy: i64) {
        self.energy = energy;
    }
}

/// Acceptance thresholds `exp(−β ΔE)` for `ΔE = 1..=4`, scaled to `u32`
/// so a single 32-bit draw decides each uphill move.
#[derive(Debug, Clone, Copy)]
pub struct BoltzmannTable([u64; 5]);

impl BoltzmannTable {
    pub fn new(beta: f64) -> Self {
        let mut w = [1u64 << 32; 5];
        for (de, slot) in w.iter_mut().enumerate().skip(1) {
            *slot = ((-beta * de as f64).exp() * 4_294_967_296.0).round() as u64;
        }
        Self(w)
    }

    /// `exp(−β ΔE)` as represented in the table.
    pub fn probability(&self, de: usize) -> f64 {
        self.0[de] as f64 / 4_294_967_296.0
    }
}

/// One sweep of `N` single-spin Metropolis proposals in sequential site order.
/// Each proposal picks one of the `d − 1` other values uniformly. Returns the
/// fraction of accepted proposals.
pub fn metropolis_sweep(replica: &mut Replica, system: &PottsSystem, beta: f64, rng: &mut SimRng) -> f64 {
    sweep_with_table(replica, system, &BoltzmannTable::new(beta), rng)
}

pub fn sweep_with_table(
    replica: &mut Replica,
    system: &PottsSystem,
    table: &BoltzmannTable,
    rng: &mut SimRng,
) -> f64 {
    let d = system.dimension();
    let n = system.num_spins();
    let spins = &mut replica.spins;
    let mut energy = replica.energy;
    let mut accepted = 0usize;
    for v in 0..n {
        let s = spins[v];
        let proposal = if d == 2 {
            1 - s
        } else {
            let x = s as usize + 1 + rng.random_range(0..d as u32 - 1) as usize;
            (if x >= d { x - d } else { x }) as u8
        };
        let t = system.targets(spins, v);
        let de = count_equal(&t, s) - count_equal(&t, proposal);
        if de <= 0 || (rng.next_u32() as u64) < table.0[de as usize] {
            spins[v] = proposal;
            energy += de as i64;
            accepted += 1;
        }
    }
    replica.energy = energy;
    accepted as f64 / n as f64
}

/// Unit vectors to the `d` corners of a regular simplex in `d − 1`
/// dimensions, built from the Helmert basis: distinct corners have dot
/// product `−1/(d − 1)` and the corners sum to zero.
pub fn simplex_vector(d: usize, s: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::invalid(format!("simplex needs d >= 2, got {d}")));
    }
    if s >= d {
        return Err(Error::OutOfRange { index: s, limit: d });
    }
    let scale = (d as f64 / (d - 1) as f64).sqrt();
    Ok((1..d)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let h = if s < k {
                1.0 / norm
            } else if s == k {
                -(k as f64) / norm
            } else {
                0.0
            };
            h * scale
        })
        .collect())
}

/// All `d` simplex vectors, flattened row-major (`d × (d − 1)`).
#[derive(Debug, Clone)]
pub struct SimplexTable {
    d: usize,
    flat: Vec<f64>,
}

impl SimplexTable {
    pub fn new(d: usize) -> Result<Self> {
        let mut flat = Vec::with_capacity(d * (d - 1));
        for s in 0..d {
            flat.extend(simplex_vector(d, s)?);
        }
        Ok(Self { d, flat })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> usize {
        self.d - 1
    }

    #[inline]
    pub fn vector(&self, s: u8) -> &[f64] {
        let c = self.d - 1;
        &self.flat[s as usize * c..(s as usize + 1) * c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{nishimori_beta, sample_disorder};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn clean(l: usize, d: usize) -> DisorderRealization {
        DisorderRealization::clean(Arc::new(Lattice::new(l).unwrap()), d).unwrap()
    }

    fn all_states(n: usize, d: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..d.pow(n as u32)).map(move |mut code| {
            (0..n)
                .map(|_| {
                    let s = (code % d) as u8;
                    code /= d;
                    s
                })
                .collect()
        })
    }

    #[test]
    fn ground_state_energy() {
        let dis = clean(4, 3);
        assert_eq!(energy_uniform(&vec![1; 16], &dis).unwrap(), -32);
    }

    #[test]
    fn one_error_breaks_one_edge() {
        let lat = Arc::new(Lattice::new(4).unwrap());
        let mut eps = vec![0; 32];
        eps[5] = 2;
        let dis = DisorderRealization::from_errors(lat, 3, eps, 0).unwrap();
        assert_eq!(energy_uniform(&vec![0; 16], &dis).unwrap(), -31);
    }

    #[test]
    fn energy_rejects_bad_spins() {
        let dis = clean(3, 3);
        assert!(energy_uniform(&vec![0; 8], &dis).is_err());
        assert!(energy_uniform(&vec![3; 9], &dis).is_err());
        let j = CouplingTable::new(vec![0.0, 1.0]).unwrap();
        assert!(energy_general(&vec![0; 9], &dis, &j).is_err());
    }

    #[test]
    fn qubit_case_is_half_the_random_bond_ising_energy() {
        let lat = Arc::new(Lattice::new(3).unwrap());
        let m = ErrorModel::new(2, 0.3).unwrap();
        let dis = sample_disorder(lat.clone(), &m, 5);
        for spins in all_states(9, 2) {
            let sigma = |s: u8| if s == 0 { 1i64 } else { -1 };
            let mut ising = 0i64;
            for e in 0..lat.num_edges() {
                let (a, b) = lat.edge_endpoints(e).unwrap();
                let j = if dis.errors()[e] == 0 { 1 } else { -1 };
                ising -= j * sigma(spins[a]) * sigma(spins[b]);
            }
            let h = energy_uniform(&spins, &dis).unwrap();
            // H = −L² + ½ H_Ising
            assert_eq!(2 * h, -2 * 9 + ising);
        }
    }

    #[test]
    fn degenerate_couplings_give_constant_energy() {
        let m = ErrorModel::new(3, 0.3).unwrap();
        let dis = sample_disorder(Arc::new(Lattice::new(3).unwrap()), &m, 1);
        let j = CouplingTable::new(vec![0.7; 3]).unwrap();
        for spins in all_states(9, 3).step_by(97) {
            let h = energy_general(&spins, &dis, &j).unwrap();
            assert!((h - 0.7 * 18.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_general_counts_unsatisfied_edges() {
        let m = ErrorModel::new(2, 0.3).unwrap();
        let dis = sample_disorder(Arc::new(Lattice::new(3).unwrap()), &m, 8);
        let j = CouplingTable::new(vec![0.0, 1.0]).unwrap();
        for spins in all_states(9, 2) {
            let unsat = 18 + energy_uniform(&spins, &dis).unwrap();
            assert_eq!(energy_general(&spins, &dis, &j).unwrap(), unsat as f64);
        }
    }

    #[test]
    fn nishimori_couplings_shift_the_uniform_energy() {
        // On the Nishimori line J_{ε≠0} − J_0 = 1, so H_general = H_uniform + 2L²·J_{ε≠0}.
        let p = 0.2;
        let m = ErrorModel::new(3, p).unwrap();
        let beta = nishimori_beta(3, p).unwrap();
        let j = CouplingTable::from_error_model(&m, beta).unwrap();
        assert!((j.values()[1] - j.values()[0] - 1.0).abs() < 1e-12);
        let lat = Arc::new(Lattice::new(2).unwrap());
        let dis = sample_disorder(lat, &m, 77);
        let shift = 8.0 * j.values()[1];
        let mut by_general: Vec<(f64, usize)> = Vec::new();
        let mut by_uniform: Vec<(i64, usize)> = Vec::new();
        for (i, spins) in all_states(4, 3).enumerate() {
            let hg = energy_general(&spins, &dis, &j).unwrap();
            let hu = energy_uniform(&spins, &dis).unwrap();
            assert!((hg - (hu as f64 + shift)).abs() < 1e-9);
            by_general.push((hg, i));
            by_uniform.push((hu, i));
        }
        let argmin_g: Vec<usize> = {
            let min = by_general.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
            by_general.iter().filter(|x| (x.0 - min).abs() < 1e-9).map(|x| x.1).collect()
        };
        let argmin_u: Vec<usize> = {
            let min = by_uniform.iter().map(|x| x.0).min().unwrap();
            by_uniform.iter().filter(|x| x.0 == min).map(|x| x.1).collect()
        };
        assert_eq!(argmin_g, argmin_u);
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let m = ErrorModel::new(3, 0.2).unwrap();
        let sys = PottsSystem::new(sample_disorder(Arc::new(Lattice::new(6).unwrap()), &m, 3));
        let mut r = rng::stream(1, 1);
        let mut rep = Replica::random(&sys, 0, &mut r);
        for _ in 0..10 {
            assert_eq!(metropolis_sweep(&mut rep, &sys, 0.0, &mut r), 1.0);
        }
    }

    #[test]
    fn frozen_ground_state_rejects_everything() {
        let sys = PottsSystem::new(clean(6, 4));
        let mut r = rng::stream(1, 1);
        let mut rep = Replica::new(vec![2; 36], &sys, 0).unwrap();
        assert_eq!(metropolis_sweep(&mut rep, &sys, 1e3, &mut r), 0.0);
        assert_eq!(rep.energy(), -72);
    }

    #[test]
    fn boltzmann_histogram_matches_enumeration() {
        // d = 3, L = 2, clean, β = 1: 81 states.
        let d = 3;
        let beta = 1.0;
        let dis = clean(2, d);
        let mut exact = std::collections::BTreeMap::<i64, f64>::new();
        for spins in all_states(4, d) {
            let e = energy_uniform(&spins, &dis).unwrap();
            *exact.entry(e).or_default() += (-beta * e as f64).exp();
        }
        let z: f64 = exact.values().sum();
        let sys = PottsSystem::new(dis);
        let mut r = rng::stream(42, 1);
        let mut rep = Replica::random(&sys, 0, &mut r);
        for _ in 0..1000 {
            metropolis_sweep(&mut rep, &sys, beta, &mut r);
        }
        let sweeps = 200_000;
        let mut hist = std::collections::BTreeMap::<i64, f64>::new();
        for _ in 0..sweeps {
            metropolis_sweep(&mut rep, &sys, beta, &mut r);
            *hist.entry(rep.energy()).or_default() += 1.0;
        }
        for (e, w) in &exact {
            let prob = w / z;
            let observed = hist.get(e).copied().unwrap_or(0.0) / sweeps as f64;
            // successive sweeps are correlated; allow a generous 4x inflation of the binomial σ
            let sigma = 4.0 * (prob * (1.0 - prob) / sweeps as f64).sqrt();
            assert!((observed - prob).abs() < 3.0 * sigma + 1e-4, "E={e}: {observed} vs {prob}");
        }
    }

    #[test]
    fn simplex_geometry() {
        assert_eq!(simplex_vector(2, 0).unwrap(), vec![1.0]);
        assert!((simplex_vector(2, 1).unwrap()[0] + 1.0).abs() < 1e-15);
        for d in [2usize, 3, 4, 6, 10] {
            let vs: Vec<Vec<f64>> = (0..d).map(|s| simplex_vector(d, s).unwrap()).collect();
            for a in 0..d {
                assert_eq!(vs[a].len(), d - 1);
                for b in 0..d {
                    let dot: f64 = vs[a].iter().zip(&vs[b]).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { -1.0 / (d - 1) as f64 };
                    assert!((dot - want).abs() < 1e-12, "d={d} {a}·{b} = {dot}");
                }
            }
            for k in 0..d - 1 {
                let sum: f64 = vs.iter().map(|v| v[k]).sum();
                assert!(sum.abs() < 1e-12);
            }
        }
        assert!(simplex_vector(3, 3).is_err());
    }

    proptest! {
        #[test]
        fn energy_is_invariant_under_global_shift(
            d in 2usize..11, l in 2usize..7, seed in any::<u64>(), c in 0usize..10,
        ) {
            let m = ErrorModel::new(d, 0.5 * crate::disorder::max_error_rate(d)).unwrap();
            let dis = sample_disorder(Arc::new(Lattice::new(l).unwrap()), &m, seed);
            let mut r = rng::stream(seed, 9);
            let spins: Vec<u8> = (0..l * l).map(|_| r.random_range(0..d) as u8).collect();
            let shifted: Vec<u8> = spins.iter().map(|&s| ((s as usize + c) % d) as u8).collect();
            prop_assert_eq!(energy_uniform(&spins, &dis).unwrap(), energy_uniform(&shifted, &dis).unwrap());
        }

        #[test]
        fn cached_energy_tracks_sweeps(d in 2usize..8, l in 2usize..7, seed in any::<u64>(), beta in 0.0f64..3.0) {
            let m = ErrorModel::new(d, 0.3 * crate::disorder::max_error_rate(d)).unwrap();
            let sys = PottsSystem::new(sample_disorder(Arc::new(Lattice::new(l).unwrap()), &m, seed));
            let mut r = rng::stream(seed, 1);
            let mut rep = Replica::random(&sys, 0, &mut r);
            for _ in 0..20 {
                metropolis_sweep(&mut rep, &sys, beta, &mut r);
                prop_assert_eq!(rep.energy(), energy_uniform(rep.spins(), sys.disorder()).unwrap());
            }
        }
    }
}
