//! Finite-size scaling of `ξ_L/L`: pairwise crossings, extrapolation in
//! the average inverse size, bootstrap errors, and the intersection of the
//! phase boundary with the Nishimori line.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::nishimori_temperature;
use crate::error::{Error, Result};
use crate::observables::correlation_length;
use crate::stats::{self, BootstrapSummary, ScaledPoly};

/// Default polynomial order for the crossing fits.
pub const FIT_DEGREE: usize = 3;
/// Minimum number of points in a crossing window.
pub const MIN_WINDOW: usize = 6;
const ROOT_SCAN: usize = 4096;

/// `ξ_L/L` against temperature for one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub size: usize,
    /// `(T, ξ_L/L)`, ascending in `T`.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(size: usize, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { size, points }
    }

    fn value_at(&self, t: f64) -> Option<f64> {
        let i = self.points.partition_point(|p| p.0 < t);
        if i < self.points.len() && self.points[i].0 == t {
            return Some(self.points[i].1);
        }
        if i == 0 || i == self.points.len() {
            return None;
        }
        let (t0, y0) = self.points[i - 1];
        let (t1, y1) = self.points[i];
        Some(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub temperature: f64,
    /// Several candidate roots, or none with the ordering-side slope.
    pub ambiguous: bool,
    pub window: (f64, f64),
}

/// Locates where the `ξ/L` curves of two sizes cross.
///
/// Each curve is fitted with a cubic over a window of at least
/// [`MIN_WINDOW`] points around the temperature where the two curves are
/// closest; the crossing is the root of the difference of the fits inside
/// the window. Among several roots, the one where the larger system crosses
/// from above on lowering `T` is preferred, ties broken by distance to the
/// window centre.
pub fn find_crossing(a: &Curve, b: &Curve) -> Result<Crossing> {
    find_crossing_with(a, b, FIT_DEGREE)
}

pub fn find_crossing_with(a: &Curve, b: &Curve, degree: usize) -> Result<Crossing> {
    let (small, large) = if a.size <= b.size { (a, b) } else { (b, a) };
    let lo = small.points.first().map(|p| p.0).unwrap_or(f64::NAN).max(large.points.first().map(|p| p.0).unwrap_or(f64::NAN));
    let hi = small.points.last().map(|p| p.0).unwrap_or(f64::NAN).min(large.points.last().map(|p| p.0).unwrap_or(f64::NAN));
    let in_common = |c: &Curve| c.points.iter().filter(|p| p.0 >= lo && p.0 <= hi).count();
    let need = (degree + 1).max(4);
    if !(lo < hi) || in_common(small) < need || in_common(large) < need {
        return Err(Error::invalid(format!(
            "curves for L = {} and L = {} share fewer than {need} points",
            small.size, large.size
        )));
    }

    // Difference on the temperatures of the smaller size's curve.
    let grid: Vec<(f64, f64)> = small
        .points
        .iter()
        .filter(|p| p.0 >= lo && p.0 <= hi)
        .filter_map(|&(t, y)| large.value_at(t).map(|yl| (t, yl - y)))
        .collect();
    let closest = grid
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.abs().total_cmp(&y.1 .1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    // Widen the window around the closest approach until the fitted
    // difference changes sign or the whole common range is used.
    let min_width = MIN_WINDOW.max(degree + 3).min(grid.len());
    let lean_right = closest + 1 < grid.len() && grid[closest].1 * grid[closest + 1].1 <= 0.0;
    let mut width = min_width;
    let (roots, w_lo, w_hi) = loop {
        let half = if lean_right { (width - 1) / 2 } else { width / 2 };
        let start = closest.saturating_sub(half).min(grid.len() - width);
        let (w_lo, w_hi) = (grid[start].0, grid[start + width - 1].0);
        let roots = window_roots(small, large, w_lo, w_hi, degree)?;
        if !roots.is_empty() {
            break (roots, w_lo, w_hi);
        }
        if width == grid.len() {
            return Err(Error::NoCrossing);
        }
        width = (width + 2).min(grid.len());
    };
    let center = 0.5 * (w_lo + w_hi);
    let physical: Vec<f64> = roots.iter().filter(|r| r.1).map(|r| r.0).collect();
    let (pool, mut ambiguous) = if physical.is_empty() {
        (roots.iter().map(|r| r.0).collect::<Vec<_>>(), true)
    } else {
        (physical, false)
    };
    if pool.len() > 1 {
        ambiguous = true;
    }
    let temperature = pool
        .into_iter()
        .min_by(|x, y| (x - center).abs().total_cmp(&(y - center).abs()))
        .expect("non-empty");
    Ok(Crossing {
        temperature,
        ambiguous,
        window: (w_lo, w_hi),
    })
}

/// Roots of the difference of polynomial fits over `[w_lo, w_hi]`, each
/// tagged with whether the larger size lies above on the low-`T` side.
fn window_roots(small: &Curve, large: &Curve, w_lo: f64, w_hi: f64, degree: usize) -> Result<Vec<(f64, bool)>> {
    let fit = |c: &Curve| -> Result<ScaledPoly> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = c.points.iter().filter(|p| p.0 >= w_lo && p.0 <= w_hi).copied().unzip();
        let deg = degree.min(xs.len().saturating_sub(1));
        ScaledPoly::fit(&xs, &ys, deg)
    };
    let fit_small = fit(small)?;
    let fit_large = fit(large)?;
    let diff = |t: f64| fit_large.eval(t) - fit_small.eval(t);

    let mut roots = Vec::new();
    let step = (w_hi - w_lo) / ROOT_SCAN as f64;
    let mut t0 = w_lo;
    let mut f0 = diff(t0);
    for k in 1..=ROOT_SCAN {
        let t1 = if k == ROOT_SCAN { w_hi } else { w_lo + step * k as f64 };
        let f1 = diff(t1);
        if f0 == 0.0 {
            roots.push((t0, f1 < 0.0));
        } else if f0 * f1 < 0.0 {
            roots.push((bisect(&diff, t0, t1, f0), f0 > 0.0));
        } else if k == ROOT_SCAN && f1 == 0.0 {
            roots.push((t1, f0 > 0.0));
        }
        t0 = t1;
        f0 = f1;
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// True if, at every common temperature `T ≥ t_floor`, larger sizes have
/// strictly smaller `ξ/L` (disordered-side ordering).
pub fn strictly_size_ordered(curves: &[Curve], t_floor: f64) -> bool {
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.size);
    sorted.windows(2).all(|w| {
        w[0].points
            .iter()
            .filter(|p| p.0 >= t_floor)
            .all(|&(t, y)| w[1].value_at(t).map_or(true, |yl| yl < y))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub small: usize,
    pub large: usize,
    pub temperature: f64,
}

impl PairCrossing {
    /// Average inverse size `2/(L₁ + L₂)`.
    pub fn inverse_size(&self) -> f64 {
        2.0 / (self.small + self.large) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub critical_temperature: f64,
    pub slope: f64,
    /// False when only one size pair was available.
    pub extrapolated: bool,
}

/// Linear fit of `T*` against `2/(L₁ + L₂)`; the intercept estimates `T_c`.
pub fn extrapolate(crossings: &[PairCrossing]) -> Result<Extrapolation> {
    match crossings {
        [] => Err(Error::invalid("no crossings to extrapolate")),
        [only] => Ok(Extrapolation {
            critical_temperature: only.temperature,
            slope: 0.0,
            extrapolated: false,
        }),
        _ => {
            let xs: Vec<f64> = crossings.iter().map(PairCrossing::inverse_size).collect();
            let ys: Vec<f64> = crossings.iter().map(|c| c.temperature).collect();
            let (intercept, slope) = stats::linear_fit(&xs, &ys)?;
            Ok(Extrapolation {
                critical_temperature: intercept,
                slope,
                extrapolated: true,
            })
        }
    }
}

/// Per-sample thermal averages for one size, retained for resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeData {
    pub size: usize,
    pub temperatures: Vec<f64>,
    /// `chi0[sample][t]`
    pub chi0: Vec<Vec<f64>>,
    /// `chik[sample][t]`
    pub chik: Vec<Vec<f64>>,
}

impl SizeData {
    pub fn num_samples(&self) -> usize {
        self.chi0.len()
    }

    /// `ξ/L` from disorder averages over the given sample indices. Points
    /// where the correlation length is undefined are dropped.
    pub fn curve_from(&self, samples: &[usize]) -> Curve {
        let n = samples.len() as f64;
        let points = (0..self.temperatures.len())
            .filter_map(|t| {
                let c0 = samples.iter().map(|&s| self.chi0[s][t]).sum::<f64>() / n;
                let ck = samples.iter().map(|&s| self.chik[s][t]).sum::<f64>() / n;
                correlation_length(c0, ck, self.size)
                    .ok()
                    .filter(|xi| xi.is_finite())
                    .map(|xi| (self.temperatures[t], xi / self.size as f64))
            })
            .collect();
        Curve::new(self.size, points)
    }

    pub fn curve(&self) -> Curve {
        self.curve_from(&(0..self.num_samples()).collect::<Vec<_>>())
    }
}

/// All sizes simulated at one error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub sizes: Vec<SizeData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAnalysis {
    pub curves: Vec<Curve>,
    pub crossings: Vec<PairCrossing>,
    /// Size pairs whose curves did not cross, with the reason.
    pub gaps: Vec<(usize, usize, String)>,
    pub extrapolation: Option<Extrapolation>,
}

/// Consecutive-size crossings and their extrapolation for a list of curves.
pub fn analyze_curves(mut curves: Vec<Curve>) -> CurveAnalysis {
    curves.sort_by_key(|c| c.size);
    let mut crossings = Vec::new();
    let mut gaps = Vec::new();
    for w in curves.windows(2) {
        match find_crossing(&w[0], &w[1]) {
            Ok(c) => crossings.push(PairCrossing {
                small: w[0].size,
                large: w[1].size,
                temperature: c.temperature,
            }),
            Err(e) => gaps.push((w[0].size, w[1].size, e.to_string())),
        }
    }
    let extrapolation = extrapolate(&crossings).ok();
    CurveAnalysis {
        curves,
        crossings,
        gaps,
        extrapolation,
    }
}

impl CurveSet {
    pub fn analyze(&self) -> CurveAnalysis {
        analyze_curves(self.sizes.iter().map(SizeData::curve).collect())
    }

    /// One bootstrap replicate: samples are redrawn with replacement
    /// independently for every size, and shared across temperatures.
    pub fn resampled_critical_temperature<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        let curves = self
            .sizes
            .iter()
            .map(|s| s.curve_from(&stats::resample_indices(s.num_samples(), rng)))
            .collect();
        let a = analyze_curves(curves);
        if !a.gaps.is_empty() {
            return None;
        }
        a.extrapolation.map(|e| e.critical_temperature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub summary: BootstrapSummary,
    /// Critical temperature of every successful replicate.
    pub replicates: Vec<Option<f64>>,
}

impl BootstrapOutcome {
    pub fn failures(&self) -> usize {
        self.replicates.iter().filter(|r| r.is_none()).count()
    }
}

/// Bootstrap standard error of the extrapolated critical temperature.
pub fn bootstrap_error<R: Rng>(set: &CurveSet, resamples: usize, rng: &mut R) -> BootstrapOutcome {
    let replicates: Vec<Option<f64>> = (0..resamples).map(|_| set.resampled_critical_temperature(rng)).collect();
    let ok: Vec<f64> = replicates.iter().flatten().copied().collect();
    BootstrapOutcome {
        summary: stats::summarize_replicates(&ok),
        replicates,
    }
}

/// A point `(p, T_c(p))` on the phase boundary with its error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub p: f64,
    pub critical_temperature: f64,
    pub error: f64,
}

/// Root of `T_c(p) − T_N(p)` with `T_c` interpolated linearly between
/// boundary points and `T_N` the exact Nishimori temperature.
pub fn threshold_intersection(boundary: &[BoundaryPoint], d: usize) -> Result<f64> {
    let mut pts: Vec<BoundaryPoint> = boundary.to_vec();
    pts.sort_by(|a, b| a.p.total_cmp(&b.p));
    if pts.is_empty() {
        return Err(Error::invalid("empty phase boundary"));
    }
    let gap = |p: f64, tc: f64| -> Result<f64> { Ok(tc - nishimori_temperature(d, p)?) };
    let values = pts
        .iter()
        .map(|b| gap(b.p, b.critical_temperature))
        .collect::<Result<Vec<f64>>>()?;
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            return Ok(pts[i].p);
        }
        if i + 1 < values.len() && v * values[i + 1] < 0.0 {
            let (a, b) = (pts[i], pts[i + 1]);
            let f = |p: f64| {
                let tc = a.critical_temperature
                    + (b.critical_temperature - a.critical_temperature) * (p - a.p) / (b.p - a.p);
                gap(p, tc).unwrap_or(f64::NAN)
            };
            return Ok(bisect(&f, a.p, b.p, v));
        }
    }
    Err(Error::BracketFailure {
        p_first: pts[0].p,
        first: values[0],
        p_last: pts[pts.len() - 1].p,
        last: values[values.len() - 1],
    })
}

/// Threshold from each bootstrap replicate of the boundary; replicates that
/// do not bracket the Nishimori line are skipped.
pub fn threshold_bootstrap(replicates: &[Vec<BoundaryPoint>], d: usize) -> BootstrapSummary {
    let values: Vec<f64> = replicates
        .iter()
        .filter_map(|b| threshold_intersection(b, d).ok())
        .collect();
    stats::summarize_replicates(&values)
}
