use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::store::ResultStore;
use crate::disorder::{max_error_rate, nishimori_temperature};
use crate::error::Result;
use crate::fss::{self, BoundaryPoint, CurveAnalysis, CurveSet};
use crate::rng::{self, STREAM_BOOTSTRAP};
use crate::stats;

pub const DEFAULT_RESAMPLES: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub resamples: usize,
    /// Seed for bootstrap resampling; defaults to the campaign seed.
    pub seed: Option<u64>,
    /// Restrict the analysis to these error rates.
    pub p_grid: Option<Vec<f64>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            seed: None,
            p_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeUsage {
    pub size: usize,
    pub used: usize,
    pub excluded: usize,
    pub failed_runs: usize,
}

/// Finite-size scaling results at one error rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateAnalysis {
    pub p: f64,
    pub nishimori_temperature: f64,
    pub sizes: Vec<SizeUsage>,
    pub curves: CurveAnalysis,
    pub critical_temperature: Option<f64>,
    pub error: Option<f64>,
    pub bootstrap_failures: usize,
    #[serde(skip)]
    replicates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdAnalysis {
    pub d: usize,
    pub resamples: usize,
    pub rates: Vec<RateAnalysis>,
    pub boundary: Vec<BoundaryPoint>,
    /// Nishimori intersection and its bootstrap error.
    pub threshold: Option<(f64, f64)>,
    /// Everything that could not be computed, with the reason.
    pub gaps: Vec<String>,
}

/// Full analysis of a store: curves, crossings, `T_c(p)` with bootstrap
/// errors, and the Nishimori intersection.
pub fn analyze(store: &ResultStore, options: &AnalysisOptions) -> ThresholdAnalysis {
    let d = store.config.d;
    let seed = options.seed.unwrap_or(store.config.seed);
    let mut gaps = Vec::new();
    let rates: Vec<f64> = store
        .error_rates()
        .into_iter()
        .filter(|p| {
            options
                .p_grid
                .as_ref()
                .is_none_or(|grid| grid.iter().any(|q| (q - p).abs() < 1e-12))
        })
        .collect();
    if rates.is_empty() {
        gaps.push("no error rates to analyse".into());
    }

    let mut analyses = Vec::new();
    for p in rates {
        let sizes = store.sizes(p);
        let set = CurveSet {
            sizes: sizes.iter().map(|&l| store.size_data(p, l)).collect(),
        };
        let usage = sizes
            .iter()
            .zip(&set.sizes)
            .map(|(&size, data)| {
                let g = store.group_verdicts.iter().find(|g| g.p == p && g.size == size);
                SizeUsage {
                    size,
                    used: data.num_samples(),
                    excluded: g.map_or(0, |g| g.excluded),
                    failed_runs: g.map_or(0, |g| g.failed_runs),
                }
            })
            .collect();
        let mut curves = set.analyze();
        if set.sizes.iter().any(|s| s.num_samples() == 0) {
            gaps.push(format!("p = {p}: some sizes have no usable samples"));
            curves.extrapolation = None;
        }
        if sizes.len() < 2 {
            gaps.push(format!("p = {p}: fewer than two system sizes"));
        }
        for (a, b, why) in &curves.gaps {
            gaps.push(format!("p = {p}: L = {a}, {b}: {why}"));
        }
        let critical_temperature = curves.extrapolation.map(|e| e.critical_temperature);
        let (error, replicates, failures) = match critical_temperature {
            Some(_) if options.resamples > 0 => {
                let mut r = rng::stream(rng::derive_seed(seed, &[p.to_bits()]), STREAM_BOOTSTRAP);
                let out = fss::bootstrap_error(&set, options.resamples, &mut r);
                let failures = out.failures();
                let err = (out.summary.resamples > 0).then_some(out.summary.std_error);
                (err, out.replicates, failures)
            }
            _ => (None, Vec::new(), 0),
        };
        analyses.push(RateAnalysis {
            p,
            nishimori_temperature: nishimori_temperature(d, p).unwrap_or(f64::NAN),
            sizes: usage,
            curves,
            critical_temperature,
            error,
            bootstrap_failures: failures,
            replicates,
        });
    }

    let boundary: Vec<BoundaryPoint> = analyses
        .iter()
        .filter_map(|a| {
            a.critical_temperature.map(|t| BoundaryPoint {
                p: a.p,
                critical_temperature: t,
                error: a.error.unwrap_or(0.0),
            })
        })
        .collect();
    let threshold = if boundary.len() < 2 {
        gaps.push("fewer than two boundary points; no threshold".into());
        None
    } else {
        match fss::threshold_intersection(&boundary, d) {
            Ok(pc) => {
                let mut values = Vec::new();
                for r in 0..options.resamples {
                    let replica: Vec<BoundaryPoint> = analyses
                        .iter()
                        .filter_map(|a| {
                            a.replicates.get(r).copied().flatten().map(|t| BoundaryPoint {
                                p: a.p,
                                critical_temperature: t,
                                error: 0.0,
                            })
                        })
                        .collect();
                    if let Ok(v) = fss::threshold_intersection(&replica, d) {
                        values.push(v);
                    }
                }
                let summary = stats::summarize_replicates(&values);
                Some((pc, if summary.resamples > 0 { summary.std_error } else { f64::NAN }))
            }
            Err(e) => {
                gaps.push(format!("threshold: {e}"));
                None
            }
        }
    };

    ThresholdAnalysis {
        d,
        resamples: options.resamples,
        rates: analyses,
        boundary,
        threshold,
        gaps,
    }
}

impl ThresholdAnalysis {
    /// Writes `phase_boundary.dat`, `nishimori_line.dat` and
    /// `xi_curves.dat` into `dir`.
    pub fn write_plot_data(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut boundary = String::from("# p T_c sigma\n");
        for b in &self.boundary {
            writeln!(boundary, "{} {} {}", b.p, b.critical_temperature, b.error).unwrap();
        }

        let p_top = self.rates.iter().map(|r| r.p).fold(0.0, f64::max);
        let p_max = (1.25 * p_top).max(0.05).min(max_error_rate(self.d));
        let mut nishimori = String::from("# p T_N\n");
        for k in 0..=200 {
            let p = p_max * k as f64 / 200.0;
            if let Ok(t) = nishimori_temperature(self.d, p) {
                writeln!(nishimori, "{p} {t}").unwrap();
            }
        }

        let mut curves = String::from("# p L T xi_over_L\n");
        for r in &self.rates {
            for c in &r.curves.curves {
                for (t, y) in &c.points {
                    writeln!(curves, "{} {} {} {}", r.p, c.size, t, y).unwrap();
                }
                curves.push('\n');
            }
        }

        let files = [
            ("phase_boundary.dat", boundary),
            ("nishimori_line.dat", nishimori),
            ("xi_curves.dat", curves),
        ];
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

impl fmt::Display for ThresholdAnalysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}, bootstrap resamples = {}", self.d, self.resamples)?;
        writeln!(f)?;
        writeln!(f, "{:>8}  {:>10}  {:>10}  {:>8}  {:<24}  crossings", "p", "T_N", "T_c", "sigma", "samples L:used(excl)")?;
        for r in &self.rates {
            let usage: Vec<String> = r
                .sizes
                .iter()
                .map(|s| format!("{}:{}({})", s.size, s.used, s.excluded))
                .collect();
            let crossings: Vec<String> = r
                .curves
                .crossings
                .iter()
                .map(|c| format!("({},{})={:.4}", c.small, c.large, c.temperature))
                .collect();
            writeln!(
                f,
                "{:>8.4}  {:>10.5}  {:>10}  {:>8}  {:<24}  {}",
                r.p,
                r.nishimori_temperature,
                opt(r.critical_temperature, 5),
                opt(r.error, 5),
                usage.join(" "),
                crossings.join(" ")
            )?;
        }
        writeln!(f)?;
        match self.threshold {
            Some((pc, sigma)) => writeln!(f, "p_c = {pc:.5} +/- {sigma:.5}")?,
            None => writeln!(f, "p_c = -")?,
        }
        for g in &self.gaps {
            writeln!(f, "gap: {g}")?;
        }
        Ok(())
    }
}
