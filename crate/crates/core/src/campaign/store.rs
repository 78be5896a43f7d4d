//! Line-oriented JSON store. `records.jsonl` starts with a header echoing the
//! configuration, followed by one line per disorder sample and one per
//! `(sample, temperature)`. Equilibration verdicts live in `verdicts.jsonl`
//! so that classifying samples never touches the record payloads.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use crate::error::{Error, Result};
use crate::fss::SizeData;
use crate::observables::{check_series, BinStat, LogBins, Verdict};
use crate::stats;

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub p: f64,
    pub size: usize,
    pub sample: u64,
    pub seed: u64,
    pub errors: usize,
    pub exchange_acceptance: Vec<f64>,
    pub all_replicas_traversed: bool,
    pub warnings: Vec<String>,
    /// Set when the sample could not be simulated.
    pub failure: Option<String>,
}

/// Thermal means and bin sums for one sample at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLine {
    pub p: f64,
    pub size: usize,
    pub sample: u64,
    pub t_index: usize,
    pub temperature: f64,
    pub measurements: u64,
    pub energy: f64,
    pub chi0: f64,
    pub chik: f64,
    pub metropolis_acceptance: f64,
    pub energy_bins: LogBins,
    pub chi0_bins: LogBins,
    pub chik_bins: LogBins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecordLine {
    Header { schema: u32, config: CampaignConfig },
    Sample(SampleLine),
    Point(PointLine),
}

/// Equilibration verdict of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleVerdict {
    pub p: f64,
    pub size: usize,
    pub sample: u64,
    pub verdict: Verdict,
    /// Observables whose last three bins disagree.
    pub failing: Vec<String>,
}

/// Equilibration of a whole `(p, L)` group from disorder-averaged bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupVerdict {
    pub p: f64,
    pub size: usize,
    pub verdict: Verdict,
    pub samples: usize,
    pub failed_runs: usize,
    pub excluded: usize,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VerdictLine {
    Sample(SampleVerdict),
    Group(GroupVerdict),
}

/// Records of one `(p, L)` group, sorted by sample and temperature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Group {
    pub samples: Vec<SampleLine>,
    pub points: Vec<PointLine>,
}

impl Group {
    pub fn sort(&mut self) {
        self.samples.sort_by_key(|s| s.sample);
        self.points.sort_by_key(|pt| (pt.sample, pt.t_index));
    }

    fn usable_samples(&self) -> Vec<u64> {
        self.samples.iter().filter(|s| s.failure.is_none()).map(|s| s.sample).collect()
    }

    /// Per-sample and group verdicts. Each sample's bin means are compared
    /// using, as the error of each bin, the scatter of that bin over the
    /// group's other samples; the group check uses the disorder-averaged
    /// bins with the standard error of that average.
    pub fn verdicts(&self) -> (Vec<SampleVerdict>, GroupVerdict) {
        let ids = self.usable_samples();
        // Without disorder the sample scatter is thermal noise alone and
        // cannot single out unequilibrated runs.
        let disordered = self.samples.iter().any(|s| s.failure.is_none() && s.errors > 0);
        let (p, size) = self
            .samples
            .first()
            .map(|s| (s.p, s.size))
            .unwrap_or((f64::NAN, 0));
        let n_t = self.points.iter().map(|pt| pt.t_index + 1).max().unwrap_or(0);
        let at = |sample: u64, t: usize| {
            self.points
                .iter()
                .find(|pt| pt.sample == sample && pt.t_index == t)
        };

        let mut failing: Vec<Vec<String>> = vec![Vec::new(); ids.len()];
        let mut indeterminate = vec![false; ids.len()];
        let mut group_failing = Vec::new();
        let mut group_indeterminate = false;
        for t in 0..n_t {
            let rows: Vec<&PointLine> = ids.iter().filter_map(|&s| at(s, t)).collect();
            if rows.len() != ids.len() {
                group_indeterminate = true;
                indeterminate.iter_mut().for_each(|x| *x = true);
                continue;
            }
            let observables: [(&str, fn(&PointLine) -> &LogBins); 3] = [
                ("energy", |pt| &pt.energy_bins),
                ("chi0", |pt| &pt.chi0_bins),
                ("chik", |pt| &pt.chik_bins),
            ];
            for (name, bins_of) in observables {
                let label = format!("{name}@T{t}");
                let means: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|pt| bins_of(pt).means().into_iter().map(|m| m.unwrap_or(f64::NAN)).collect())
                    .collect();
                let nbins = means.iter().map(Vec::len).min().unwrap_or(0);
                let scatter: Vec<f64> = (0..nbins)
                    .map(|k| stats::std_dev(&means.iter().map(|m| m[k]).collect::<Vec<_>>()))
                    .collect();
                // Each sample is judged against the scatter of the others.
                let sums: Vec<(f64, f64)> = (0..nbins)
                    .map(|k| means.iter().fold((0.0, 0.0), |(a, b), m| (a + m[k], b + m[k] * m[k])))
                    .collect();
                for (i, m) in means.iter().enumerate() {
                    if rows.len() < 3 || !disordered {
                        indeterminate[i] = true;
                        continue;
                    }
                    let rest = (rows.len() - 1) as f64;
                    let series: Vec<BinStat> = (0..nbins)
                        .map(|k| {
                            let (s, q) = sums[k];
                            let mean = (s - m[k]) / rest;
                            let var = ((q - m[k] * m[k] - rest * mean * mean) / (rest - 1.0)).max(0.0);
                            BinStat {
                                mean: m[k],
                                se: var.sqrt(),
                            }
                        })
                        .collect();
                    match check_series(&series) {
                        Verdict::Fail => failing[i].push(label.clone()),
                        Verdict::Indeterminate => indeterminate[i] = true,
                        Verdict::Pass => {}
                    }
                }
                let averaged: Vec<BinStat> = if rows.len() >= 2 {
                    (0..nbins)
                        .map(|k| BinStat {
                            mean: stats::mean(&means.iter().map(|m| m[k]).collect::<Vec<_>>()),
                            se: scatter[k] / (rows.len() as f64).sqrt(),
                        })
                        .collect()
                } else {
                    rows.first().map(|pt| bins_of(pt).naive_stats()).unwrap_or_default()
                };
                match check_series(&averaged) {
                    Verdict::Fail => group_failing.push(label),
                    Verdict::Indeterminate => group_indeterminate = true,
                    Verdict::Pass => {}
                }
            }
        }

        let per_sample: Vec<SampleVerdict> = ids
            .iter()
            .enumerate()
            .map(|(i, &sample)| SampleVerdict {
                p,
                size,
                sample,
                verdict: if !failing[i].is_empty() {
                    Verdict::Fail
                } else if indeterminate[i] {
                    Verdict::Indeterminate
                } else {
                    Verdict::Pass
                },
                failing: std::mem::take(&mut failing[i]),
            })
            .collect();
        let group = GroupVerdict {
            p,
            size,
            verdict: if !group_failing.is_empty() {
                Verdict::Fail
            } else if group_indeterminate || ids.is_empty() {
                Verdict::Indeterminate
            } else {
                Verdict::Pass
            },
            samples: self.samples.len(),
            failed_runs: self.samples.len() - ids.len(),
            excluded: per_sample.iter().filter(|v| v.verdict == Verdict::Fail).count(),
            failing: group_failing,
        };
        (per_sample, group)
    }
}

/// Appends records to a store directory.
pub struct StoreWriter {
    dir: PathBuf,
    records: BufWriter<File>,
    verdicts: BufWriter<File>,
}

impl StoreWriter {
    /// Creates the store files, replacing any existing ones.
    pub fn create(dir: &Path, config: &CampaignConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut w = Self {
            dir: dir.to_path_buf(),
            records: BufWriter::new(File::create(dir.join(RECORDS_FILE))?),
            verdicts: BufWriter::new(File::create(dir.join(VERDICTS_FILE))?),
        };
        w.line(&RecordLine::Header {
            schema: SCHEMA_VERSION,
            config: config.clone(),
        })?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn line(&mut self, rec: &RecordLine) -> Result<()> {
        serde_json::to_writer(&mut self.records, rec)?;
        self.records.write_all(b"\n")?;
        Ok(())
    }

    /// Writes a finished group and its verdicts; returns the group verdict.
    pub fn write_group(&mut self, mut group: Group) -> Result<GroupVerdict> {
        group.sort();
        for s in &group.samples {
            self.line(&RecordLine::Sample(s.clone()))?;
        }
        for pt in &group.points {
            self.line(&RecordLine::Point(pt.clone()))?;
        }
        self.records.flush()?;
        let (per_sample, summary) = group.verdicts();
        for v in per_sample {
            serde_json::to_writer(&mut self.verdicts, &VerdictLine::Sample(v))?;
            self.verdicts.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut self.verdicts, &VerdictLine::Group(summary.clone()))?;
        self.verdicts.write_all(b"\n")?;
        self.verdicts.flush()?;
        Ok(summary)
    }
}

/// A loaded store.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultStore {
    pub config: CampaignConfig,
    pub samples: Vec<SampleLine>,
    pub points: Vec<PointLine>,
    pub sample_verdicts: Vec<SampleVerdict>,
    pub group_verdicts: Vec<GroupVerdict>,
}

impl ResultStore {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RECORDS_FILE);
        let file = File::open(&path).map_err(|e| Error::Store(format!("{}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let config = match lines.next() {
            Some((_, line)) => match serde_json::from_str(&line?)? {
                RecordLine::Header { schema, config } if schema == SCHEMA_VERSION => config,
                RecordLine::Header { schema, .. } => {
                    return Err(Error::Store(format!("unsupported schema version {schema}")))
                }
                _ => return Err(Error::Store("first line is not a header".into())),
            },
            None => return Err(Error::Store("empty record file".into())),
        };
        let mut samples = Vec::new();
        let mut points = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line).map_err(|e| Error::Store(format!("line {}: {e}", i + 1)))? {
                RecordLine::Sample(s) => samples.push(s),
                RecordLine::Point(pt) => points.push(pt),
                RecordLine::Header { .. } => return Err(Error::Store(format!("line {}: repeated header", i + 1))),
            }
        }

        let mut sample_verdicts = Vec::new();
        let mut group_verdicts = Vec::new();
        let vpath = dir.join(VERDICTS_FILE);
        if vpath.exists() {
            for (i, line) in BufReader::new(File::open(vpath)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str(&line).map_err(|e| Error::Store(format!("verdict line {}: {e}", i + 1)))? {
                    VerdictLine::Sample(v) => sample_verdicts.push(v),
                    VerdictLine::Group(g) => group_verdicts.push(g),
                }
            }
        }
        Ok(Self {
            config,
            samples,
            points,
            sample_verdicts,
            group_verdicts,
        })
    }

    /// Error rates present in the store, ascending.
    pub fn error_rates(&self) -> Vec<f64> {
        let mut ps: Vec<f64> = self.samples.iter().map(|s| s.p).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ps
    }

    pub fn sizes(&self, p: f64) -> Vec<usize> {
        let mut ls: Vec<usize> = self.samples.iter().filter(|s| s.p == p).map(|s| s.size).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    pub fn group(&self, p: f64, size: usize) -> Group {
        let mut g = Group {
            samples: self.samples.iter().filter(|s| s.p == p && s.size == size).cloned().collect(),
            points: self.points.iter().filter(|pt| pt.p == p && pt.size == size).cloned().collect(),
        };
        g.sort();
        g
    }

    fn excluded(&self, p: f64, size: usize, sample: u64) -> bool {
        self.sample_verdicts
            .iter()
            .any(|v| v.p == p && v.size == size && v.sample == sample && v.verdict == Verdict::Fail)
    }

    /// Thermal means of the usable samples of one group: failed runs and
    /// samples that failed the equilibration check are left out.
    pub fn size_data(&self, p: f64, size: usize) -> SizeData {
        let g = self.group(p, size);
        let temps: Vec<f64> = {
            let mut ts: Vec<(usize, f64)> = g.points.iter().map(|pt| (pt.t_index, pt.temperature)).collect();
            ts.sort_by_key(|t| t.0);
            ts.dedup_by_key(|t| t.0);
            ts.into_iter().map(|t| t.1).collect()
        };
        let mut chi0 = Vec::new();
        let mut chik = Vec::new();
        for s in g.samples.iter().filter(|s| s.failure.is_none() && !self.excluded(p, size, s.sample)) {
            let rows: Vec<&PointLine> = g.points.iter().filter(|pt| pt.sample == s.sample).collect();
            if rows.len() != temps.len() {
                continue;
            }
            chi0.push(rows.iter().map(|pt| pt.chi0).collect());
            chik.push(rows.iter().map(|pt| pt.chik).collect());
        }
        SizeData {
            size,
            temperatures: temps,
            chi0,
            chik,
        }
    }
}
