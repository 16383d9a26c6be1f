//! Evaluation rows and their CSV tables.
//!
//! | file                   | columns                                                                        |
//! |------------------------|--------------------------------------------------------------------------------|
//! | `fig8_allocated.csv`   | requested, admitted, rejected, t_avg                                           |
//! | `fig9_lengths.csv`     | requested, hops, te_paths, natural_paths                                       |
//! | `fig10_sr_lengths.csv` | requested, sids, sr_paths                                                      |
//! | `fig11_means.csv`      | requested, admitted, mean_te_hops, mean_natural_hops, mean_sids, max_sids, valid_sr_paths |
//! | `fig12_times.csv`      | requested, admitted, cspf_s, reassign_s, flow_assignment_s, sr_assignment_s    |
//!
//! Histogram files hold one line per length from 1 to the longest seen in
//! that run; runs with nothing admitted have no histogram lines.

use std::path::Path;

use serde::Serialize;

use super::{EvalError, Solved};

pub const CSV_FILES: [&str; 5] =
    ["fig8_allocated.csv", "fig9_lengths.csv", "fig10_sr_lengths.csv", "fig11_means.csv", "fig12_times.csv"];

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub requested: usize,
    pub admitted: usize,
    pub t_avg: f64,
    /// `te_hist[k]`: admitted flows whose engineered path has k hops.
    pub te_hist: Vec<usize>,
    pub natural_hist: Vec<usize>,
    pub sr_hist: Vec<usize>,
    pub mean_te: f64,
    pub mean_natural: f64,
    pub mean_sids: f64,
    pub max_sids: usize,
    pub valid_sr_paths: usize,
    pub cspf_s: f64,
    pub reassign_s: f64,
    pub sr_s: f64,
}

fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut h = Vec::new();
    for v in values {
        if h.len() <= v {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

fn mean(h: &[usize]) -> f64 {
    let n: usize = h.iter().sum();
    if n == 0 {
        return 0.0;
    }
    h.iter().enumerate().map(|(k, c)| (k * c) as f64).sum::<f64>() / n as f64
}

impl EvalRow {
    pub fn new(requested: usize, s: &Solved, natural_hops: impl IntoIterator<Item = usize>, valid: usize) -> Self {
        let a = &s.allocation;
        let te_hist = histogram(a.admitted.iter().map(|f| f.path.len() - 1));
        let natural_hist = histogram(natural_hops);
        let sr_hist = histogram(s.sr_paths.iter().map(|(_, p)| p.len()));
        Self {
            requested,
            admitted: a.admitted.len(),
            t_avg: a.t_avg,
            mean_te: mean(&te_hist),
            mean_natural: mean(&natural_hist),
            mean_sids: mean(&sr_hist),
            max_sids: sr_hist.len().saturating_sub(1),
            te_hist,
            natural_hist,
            sr_hist,
            valid_sr_paths: valid,
            cspf_s: a.timing.cspf_s,
            reassign_s: a.timing.reassign_s,
            sr_s: s.sr_s,
        }
    }

    pub fn clear_times(&mut self) {
        self.cspf_s = 0.0;
        self.reassign_s = 0.0;
        self.sr_s = 0.0;
    }

    pub fn flow_assignment_s(&self) -> f64 {
        self.cspf_s + self.reassign_s
    }

    /// Share of SR paths with exactly one SID.
    pub fn single_sid_fraction(&self) -> f64 {
        match self.admitted {
            0 => 0.0,
            n => self.sr_hist.get(1).copied().unwrap_or(0) as f64 / n as f64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

#[derive(Serialize)]
struct Allocated {
    requested: usize,
    admitted: usize,
    rejected: usize,
    t_avg: f64,
}

#[derive(Serialize)]
struct Lengths {
    requested: usize,
    hops: usize,
    te_paths: usize,
    natural_paths: usize,
}

#[derive(Serialize)]
struct SrLengths {
    requested: usize,
    sids: usize,
    sr_paths: usize,
}

#[derive(Serialize)]
struct Means {
    requested: usize,
    admitted: usize,
    mean_te_hops: f64,
    mean_natural_hops: f64,
    mean_sids: f64,
    max_sids: usize,
    valid_sr_paths: usize,
}

#[derive(Serialize)]
struct Times {
    requested: usize,
    admitted: usize,
    cspf_s: f64,
    reassign_s: f64,
    flow_assignment_s: f64,
    sr_assignment_s: f64,
}

/// Header written up front so that tables without rows still carry one.
fn table<R: Serialize>(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), EvalError> {
    let path = dir.join(name);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| EvalError::Io { path, source })
}

/// Writes the five tables into `dir`, creating it if needed.
pub fn write_csvs(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io { path: dir.to_owned(), source })?;
    let rows = &report.rows;
    table(
        dir,
        CSV_FILES[0],
        &["requested", "admitted", "rejected", "t_avg"],
        rows.iter().map(|r| Allocated {
            requested: r.requested,
            admitted: r.admitted,
            rejected: r.requested - r.admitted,
            t_avg: r.t_avg,
        }),
    )?;
    let at = |h: &[usize], k: usize| h.get(k).copied().unwrap_or(0);
    table(
        dir,
        CSV_FILES[1],
        &["requested", "hops", "te_paths", "natural_paths"],
        rows.iter().flat_map(|r| {
            let n = r.te_hist.len().max(r.natural_hist.len());
            (1..n).map(move |k| Lengths {
                requested: r.requested,
                hops: k,
                te_paths: at(&r.te_hist, k),
                natural_paths: at(&r.natural_hist, k),
            })
        }),
    )?;
    table(
        dir,
        CSV_FILES[2],
        &["requested", "sids", "sr_paths"],
        rows.iter().flat_map(|r| {
            (1..r.sr_hist.len()).map(move |k| SrLengths { requested: r.requested, sids: k, sr_paths: r.sr_hist[k] })
        }),
    )?;
    table(
        dir,
        CSV_FILES[3],
        &["requested", "admitted", "mean_te_hops", "mean_natural_hops", "mean_sids", "max_sids", "valid_sr_paths"],
        rows.iter().map(|r| Means {
            requested: r.requested,
            admitted: r.admitted,
            mean_te_hops: r.mean_te,
            mean_natural_hops: r.mean_natural,
            mean_sids: r.mean_sids,
            max_sids: r.max_sids,
            valid_sr_paths: r.valid_sr_paths,
        }),
    )?;
    table(
        dir,
        CSV_FILES[4],
        &["requested", "admitted", "cspf_s", "reassign_s", "flow_assignment_s", "sr_assignment_s"],
        rows.iter().map(|r| Times {
            requested: r.requested,
            admitted: r.admitted,
            cspf_s: r.cspf_s,
            reassign_s: r.reassign_s,
            flow_assignment_s: r.flow_assignment_s(),
            sr_assignment_s: r.sr_s,
        }),
    )
}
