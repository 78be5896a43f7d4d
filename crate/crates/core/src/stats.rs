//! Small statistics helpers: sample moments, blocking errors, bootstrap and
//! least-squares fits.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean of a correlated series, from the scatter of
/// `blocks` equal-length block means. Trailing values that do not fill a
/// block are dropped.
pub fn block_standard_error(series: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.max(2);
    let len = series.len() / blocks;
    if len == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = series.chunks_exact(len).take(blocks).map(mean).collect();
    std_dev(&means) / (blocks as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std_error: f64,
    pub resamples: usize,
}

impl BootstrapSummary {
    /// A single resample carries no spread information.
    pub fn is_degenerate(&self) -> bool {
        self.resamples < 2
    }
}

/// Summarises replicate values: mean and standard deviation (denominator
/// `n`, the usual bootstrap convention).
pub fn summarize_replicates(values: &[f64]) -> BootstrapSummary {
    let n = values.len();
    if n == 0 {
        return BootstrapSummary {
            mean: f64::NAN,
            std_error: f64::NAN,
            resamples: 0,
        };
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
    BootstrapSummary {
        mean: m,
        std_error: var.sqrt(),
        resamples: n,
    }
}

/// Draws `n` indices in `0..n` with replacement.
pub fn resample_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap of `statistic` over `data`.
pub fn bootstrap<T, R, F>(data: &[T], resamples: usize, rng: &mut R, statistic: F) -> BootstrapSummary
where
    R: Rng,
    F: Fn(&[&T]) -> f64,
{
    let mut buf: Vec<&T> = Vec::with_capacity(data.len());
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            buf.clear();
            buf.extend(resample_indices(data.len(), rng).into_iter().map(|i| &data[i]));
            statistic(&buf)
        })
        .collect();
    summarize_replicates(&values)
}

/// Least-squares line `y = intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let c = polyfit(xs, ys, 1)?;
    Ok((c[0], c[1]))
}

/// Least-squares polynomial coefficients, lowest order first. The fit is
/// done in a centred and scaled variable and mapped back.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() <= degree {
        return Err(Error::invalid(format!(
            "need more than {degree} points for a degree-{degree} fit, got {}",
            xs.len()
        )));
    }
    let poly = ScaledPoly::fit(xs, ys, degree)?;
    Ok(poly.coefficients())
}

/// A polynomial in `u = (x − center)/scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoly {
    center: f64,
    scale: f64,
    coef: Vec<f64>,
}

impl ScaledPoly {
    pub fn fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Self> {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = 0.5 * (lo + hi);
        let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let m = DMatrix::from_fn(xs.len(), degree + 1, |i, k| ((xs[i] - center) / scale).powi(k as i32));
        let b = DVector::from_column_slice(ys);
        let svd = m.svd(true, true);
        let sol = svd
            .solve(&b, 1e-13)
            .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
        Ok(Self {
            center,
            scale,
            coef: sol.iter().copied().collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coef.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Coefficients in the original variable `x`, lowest order first.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.coef.len();
        let mut out = vec![0.0; n];
        // Σ c_k ((x − a)/s)^k expanded with binomials
        for (k, &c) in self.coef.iter().enumerate() {
            let ck = c / self.scale.powi(k as i32);
            let mut binom = 1.0;
            for j in 0..=k {
                out[j] += ck * binom * (-self.center).powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}
