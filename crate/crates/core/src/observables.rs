//! Susceptibility terms in the simplex representation, the two-point
//! finite-size correlation length, and the logarithmic-binning
//! equilibration test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::potts::SimplexTable;

/// One measurement of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub sample: u64,
    pub temperature_index: usize,
    pub sweep: u64,
    pub energy: i64,
    pub chi0_term: f64,
    pub chik_term: f64,
}

/// Evaluates `|Σ_i S_i|²` and `|Σ_i S_i e^{i k·R_i}|²` (summed over simplex
/// components, not normalized by N) for one lattice size and dimension.
///
/// The k-term is the mean of the two minimal wave vectors `(2π/L, 0)` and
/// `(0, 2π/L)`.
#[derive(Debug, Clone)]
pub struct Measurer {
    size: usize,
    simplex: SimplexTable,
    cos: Vec<f64>,
    sin: Vec<f64>,
    // spin-value histograms per column and per row
    col_counts: Vec<u32>,
    row_counts: Vec<u32>,
}

impl Measurer {
    pub fn new(lattice: &Lattice, d: usize) -> Result<Self> {
        let l = lattice.size();
        let simplex = SimplexTable::new(d)?;
        let k = 2.0 * PI / l as f64;
        Ok(Self {
            size: l,
            simplex,
            cos: (0..l).map(|x| (k * x as f64).cos()).collect(),
            sin: (0..l).map(|x| (k * x as f64).sin()).collect(),
            col_counts: vec![0; l * d],
            row_counts: vec![0; l * d],
        })
    }

    /// `(chi0_term, chik_term)` for one configuration.
    pub fn measure(&mut self, spins: &[u8]) -> (f64, f64) {
        let l = self.size;
        let d = self.simplex.dimension();
        self.col_counts.iter_mut().for_each(|c| *c = 0);
        self.row_counts.iter_mut().for_each(|c| *c = 0);
        for y in 0..l {
            let row = &spins[y * l..(y + 1) * l];
            for (x, &s) in row.iter().enumerate() {
                self.col_counts[x * d + s as usize] += 1;
                self.row_counts[y * d + s as usize] += 1;
            }
        }
        let comps = self.simplex.components();
        let mut chi0 = 0.0;
        let mut chik = 0.0;
        for c in 0..comps {
            let (mut m0, mut xr, mut xi, mut yr, mut yi) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for x in 0..l {
                let mut col = 0.0;
                let mut row = 0.0;
                for s in 0..d {
                    let v = self.simplex.vector(s as u8)[c];
                    col += self.col_counts[x * d + s] as f64 * v;
                    row += self.row_counts[x * d + s] as f64 * v;
                }
                m0 += col;
                xr += col * self.cos[x];
                xi += col * self.sin[x];
                yr += row * self.cos[x];
                yi += row * self.sin[x];
            }
            chi0 += m0 * m0;
            chik += 0.5 * (xr * xr + xi * xi + yr * yr + yi * yi);
        }
        (chi0, chik)
    }
}

/// Convenience wrapper around [`Measurer`] for one-off evaluations.
pub fn measure(spins: &[u8], lattice: &Lattice, d: usize) -> Result<(f64, f64)> {
    if spins.len() != lattice.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_vertices(),
            got: spins.len(),
        });
    }
    if spins.iter().any(|&s| s as usize >= d) {
        return Err(Error::invalid("spin value out of range"));
    }
    Ok(Measurer::new(lattice, d)?.measure(spins))
}

/// `ξ_L = √(χ(0)/χ(k_min) − 1) / (2 sin(k_min/2))` with `k_min = 2π/L`.
pub fn correlation_length(chi0: f64, chik: f64, size: usize) -> Result<f64> {
    if size < 2 {
        return Err(Error::invalid("lattice size must be at least 2"));
    }
    if chik <= 0.0 {
        return Err(Error::Diverged);
    }
    if chi0 < chik {
        return Err(Error::Unphysical { chi0, chik });
    }
    let kmin = 2.0 * PI / size as f64;
    Ok((chi0 / chik - 1.0).sqrt() / (2.0 * (kmin / 2.0).sin()))
}

/// Running sums over logarithmic bins: bin `t` holds sweeps `[2^t, 2^{t+1})`,
/// sweeps being numbered from 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogBins {
    pub count: Vec<u64>,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl LogBins {
    pub fn bin_of(sweep: u64) -> usize {
        assert!(sweep >= 1, "sweeps are numbered from 1");
        63 - sweep.leading_zeros() as usize
    }

    pub fn push(&mut self, sweep: u64, value: f64) {
        let b = Self::bin_of(sweep);
        if self.count.len() <= b {
            self.count.resize(b + 1, 0);
            self.sum.resize(b + 1, 0.0);
            self.sum_sq.resize(b + 1, 0.0);
        }
        self.count[b] += 1;
        self.sum[b] += value;
        self.sum_sq[b] += value * value;
    }

    pub fn len(&self) -> usize {
        self.count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count.is_empty()
    }

    /// Bin means; empty bins yield `None`.
    pub fn means(&self) -> Vec<Option<f64>> {
        self.count
            .iter()
            .zip(&self.sum)
            .map(|(&n, &s)| (n > 0).then(|| s / n as f64))
            .collect()
    }

    /// Mean and naive (uncorrelated) standard error of each bin.
    pub fn naive_stats(&self) -> Vec<BinStat> {
        (0..self.len())
            .filter(|&b| self.count[b] > 0)
            .map(|b| {
                let n = self.count[b] as f64;
                let mean = self.sum[b] / n;
                let var = if n > 1.0 {
                    ((self.sum_sq[b] - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                BinStat {
                    mean,
                    se: (var / n).sqrt(),
                }
            })
            .collect()
    }
}

/// Mean and standard error of one logarithmic bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// Fewer than three bins.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationReport {
    pub observables: Vec<(String, Verdict)>,
    pub combined: Verdict,
}

/// Two bin means agree if `|a − b| ≤ 2·√(se_a² + se_b²)`.
pub fn compatible(a: BinStat, b: BinStat) -> bool {
    (a.mean - b.mean).abs() <= 2.0 * (a.se * a.se + b.se * b.se).sqrt()
}

/// Passes an observable iff its last three bins are pairwise compatible.
pub fn check_series(bins: &[BinStat]) -> Verdict {
    if bins.len() < 3 {
        return Verdict::Indeterminate;
    }
    let last = &bins[bins.len() - 3..];
    let ok = compatible(last[0], last[1]) && compatible(last[0], last[2]) && compatible(last[1], last[2]);
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs [`check_series`] for every named observable. The combined verdict
/// fails if any observable fails, and is indeterminate if none fails but
/// some lack bins.
pub fn equilibration_check<S: AsRef<str>>(series: &[(S, Vec<BinStat>)]) -> EquilibrationReport {
    let observables: Vec<(String, Verdict)> = series
        .iter()
        .map(|(name, bins)| (name.as_ref().to_string(), check_series(bins)))
        .collect();
    let combined = if observables.iter().any(|(_, v)| *v == Verdict::Fail) {
        Verdict::Fail
    } else if observables.iter().any(|(_, v)| *v == Verdict::Indeterminate) || observables.is_empty() {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    EquilibrationReport {
        observables,
        combined,
    }
}
