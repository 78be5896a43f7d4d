//! Quenched errors from the uniform qudit error model, anyon syndromes and
//! the Nishimori inverse temperature.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng;

/// Largest supported qudit dimension; spins and error values are stored as `u8`.
pub const MAX_DIMENSION: usize = 255;

const P_TOLERANCE: f64 = 1e-12;

/// Uniform error model: each edge suffers a non-trivial shift with total
/// probability `p`, each of the `d − 1` shifts being equally likely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    d: usize,
    p: f64,
}

impl ErrorModel {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        check_dimension(d)?;
        let p_max = max_error_rate(d);
        if !(p >= 0.0 && p <= p_max + P_TOLERANCE) {
            return Err(Error::invalid(format!(
                "error rate p = {p} outside [0, {p_max}] for d = {d}"
            )));
        }
        Ok(Self { d, p: p.min(p_max) })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn error_rate(&self) -> f64 {
        self.p
    }

    /// Probability of the shift `eps`.
    pub fn probability(&self, eps: usize) -> f64 {
        match eps {
            0 => 1.0 - self.p,
            e if e < self.d => self.p / (self.d - 1) as f64,
            _ => 0.0,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.d).map(|e| self.probability(e)).collect()
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if (2..=MAX_DIMENSION).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "qudit dimension must lie in 2..={MAX_DIMENSION}, got {d}"
        )))
    }
}

/// The maximally mixed point `(d − 1)/d`.
pub fn max_error_rate(d: usize) -> f64 {
    (d - 1) as f64 / d as f64
}

/// One quenched error configuration, one shift per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    lattice: Arc<Lattice>,
    d: usize,
    eps: Vec<u8>,
    seed: u64,
}

impl DisorderRealization {
    /// Wrap an explicit error configuration. `seed` is informational.
    pub fn from_errors(lattice: Arc<Lattice>, d: usize, eps: Vec<u8>, seed: u64) -> Result<Self> {
        check_dimension(d)?;
        if eps.len() != lattice.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: lattice.num_edges(),
                got: eps.len(),
            });
        }
        if let Some(&bad) = eps.iter().find(|&&e| e as usize >= d) {
            return Err(Error::invalid(format!("error value {bad} is not below d = {d}")));
        }
        Ok(Self {
            lattice,
            d,
            eps,
            seed,
        })
    }

    /// The error-free configuration.
    pub fn clean(lattice: Arc<Lattice>, d: usize) -> Result<Self> {
        let n = lattice.num_edges();
        Self::from_errors(lattice, d, vec![0; n], 0)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shared_lattice(&self) -> Arc<Lattice> {
        Arc::clone(&self.lattice)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn errors(&self) -> &[u8] {
        &self.eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of edges carrying a non-trivial shift.
    pub fn error_count(&self) -> usize {
        self.eps.iter().filter(|&&e| e != 0).count()
    }
}

/// Draw i.i.d. per-edge errors from `model`, reproducibly from `seed`.
pub fn sample_disorder(lattice: Arc<Lattice>, model: &ErrorModel, seed: u64) -> DisorderRealization {
    let mut rng = rng::stream(seed, rng::STREAM_DISORDER);
    let d = model.dimension();
    let p = model.error_rate();
    let eps = (0..lattice.num_edges())
        .map(|_| {
            if rng.random::<f64>() < p {
                1 + rng.random_range(0..d - 1) as u8
            } else {
                0
            }
        })
        .collect();
    DisorderRealization {
        lattice,
        d,
        eps,
        seed,
    }
}

/// Nishimori inverse temperature `ln[(d − 1)(1 − p)/p]`.
pub fn nishimori_beta(d: usize, p: f64) -> Result<f64> {
    check_dimension(d)?;
    let p_max = max_error_rate(d);
    if p == 0.0 {
        return Err(Error::InfiniteBeta);
    }
    if !(p > 0.0) || p > p_max + P_TOLERANCE {
        return Err(Error::invalid(format!(
            "error rate p = {p} outside (0, {p_max}] for d = {d}"
        )));
    }
    if (p - p_max).abs() <= P_TOLERANCE {
        return Ok(0.0);
    }
    Ok(((d - 1) as f64 * (1.0 - p) / p).ln())
}

/// Nishimori temperature `1/β`, with `T = 0` at `p = 0`.
pub fn nishimori_temperature(d: usize, p: f64) -> Result<f64> {
    match nishimori_beta(d, p) {
        Ok(beta) => Ok(1.0 / beta),
        Err(Error::InfiniteBeta) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Signed plaquette sums `(v₁ + v₂ − v₃ − v₄) mod d` of per-edge values.
pub fn plaquette_charges(lattice: &Lattice, d: usize, edge_values: &[u8]) -> Result<Vec<u8>> {
    if edge_values.len() != lattice.num_edges() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_edges(),
            got: edge_values.len(),
        });
    }
    (0..lattice.num_plaquettes())
        .map(|p| {
            let sum: i64 = lattice
                .incidence(p)?
                .iter()
                .map(|&(e, s)| s as i64 * edge_values[e] as i64)
                .sum();
            Ok(sum.rem_euclid(d as i64) as u8)
        })
        .collect()
}

/// Anyon type on every plaquette for the errors of `dis`.
pub fn syndrome(dis: &DisorderRealization) -> Vec<u8> {
    plaquette_charges(&dis.lattice, dis.d, &dis.eps).expect("realization matches its lattice")
}

/// Edge differences `κ = (S_target − S_origin) mod d` of a vertex configuration.
pub fn gauge_field(spins: &[u8], lattice: &Lattice, d: usize) -> Result<Vec<u8>> {
    if spins.len() != lattice.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_vertices(),
            got: spins.len(),
        });
    }
    (0..lattice.num_edges())
        .map(|e| {
            let (a, b) = lattice.edge_endpoints(e)?;
            Ok(((spins[b] as usize + d - spins[a] as usize) % d) as u8)
        })
        .collect()
}
