//! File-level commands behind the `srte` binary, and the prefix-subset
//! experiment that produces the evaluation tables.
//!
//! Every command reads and writes the JSON formats of the other modules.
//! With timing disabled, wall-clock fields are written as zero so that
//! repeated runs produce identical bytes.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

pub use report::{write_csvs, EvalReport, EvalRow, CSV_FILES};

use crate::demand::{self, DemandError, DemandParams, DemandSet};
use crate::mpls::{rules_to_json, synthesize_edge_rules, DepthLimit, EdgeRules, MplsError, Service};
use crate::sim;
use crate::sr::{self, parse_sr_paths, sr_paths_to_json, SegmentAllocator, SrError, SrPath};
use crate::te::{self, allocation_to_json, parse_allocation, Allocation, AllocationError, SolverConfig};
use crate::topo::{load_graphml, load_json, GraphmlOptions, ShortestPaths, TopoError, Topology};

pub const ALLOCATION_FILE: &str = "allocation.json";
pub const SR_PATHS_FILE: &str = "sr_paths.json";
pub const RULES_FILE: &str = "rules.json";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: unknown topology format, expected .graphml or .json")]
    Format(PathBuf),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error("flow {0}: {1}")]
    Mpls(u32, MplsError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid endpoints JSON: {0}")]
    Endpoints(serde_json::Error),
    #[error("flow ids differ between allocation and SR paths: {0}")]
    Mismatch(String),
    #[error("bad subset size {0:?}: expected a flow count or a percentage like 30%")]
    Subset(String),
}

fn read(path: &Path) -> Result<String, EvalError> {
    fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, text: &str) -> Result<(), EvalError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| EvalError::Io { path: dir.to_owned(), source })?;
    }
    fs::write(path, text).map_err(|source| EvalError::Io { path: path.to_owned(), source })
}

/// Loads GraphML or topology JSON, chosen by file extension.
pub fn load_topology(path: &Path) -> Result<Topology, EvalError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let text = read(path)?;
    match ext.as_deref() {
        Some("graphml" | "xml") => Ok(load_graphml(&text, &GraphmlOptions::default())?),
        Some("json") => Ok(load_json(&text)?),
        _ => Err(EvalError::Format(path.to_owned())),
    }
}

pub fn cmd_demand(t: &Topology, params: &DemandParams, seed: u64, out: &Path) -> Result<DemandSet, EvalError> {
    let d = demand::generate(t, params, seed)?;
    write(out, &demand::save(t, &d))?;
    Ok(d)
}

/// Options shared by the solving commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub allocator: std::sync::Arc<dyn SegmentAllocator>,
    /// Write wall-clock times; off for reproducible output.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), allocator: std::sync::Arc::new(sr::Greedy), timing: true }
    }
}

pub struct Solved {
    pub allocation: Allocation,
    pub sr_paths: Vec<(u32, SrPath)>,
    pub sr_s: f64,
}

/// Flow assignment followed by segment-list assignment, in memory.
pub fn solve_and_assign(t: &Topology, d: &DemandSet, cfg: &RunConfig) -> Result<Solved, EvalError> {
    let allocation = te::solve(t, d, &cfg.solver);
    let start = Instant::now();
    let sr_paths = sr::assign_all(t, &allocation, cfg.allocator.as_ref())?;
    let sr_s = start.elapsed().as_secs_f64();
    Ok(Solved { allocation, sr_paths, sr_s })
}

/// Writes `allocation.json` and `sr_paths.json` into `out_dir`.
pub fn cmd_solve(t: &Topology, demand_file: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<Solved, EvalError> {
    let d = demand::load(t, &read(demand_file)?)?;
    let s = solve_and_assign(t, &d, cfg)?;
    write(&out_dir.join(ALLOCATION_FILE), &allocation_to_json(t, &s.allocation, cfg.timing))?;
    write(&out_dir.join(SR_PATHS_FILE), &sr_paths_to_json(t, &s.sr_paths))?;
    Ok(s)
}

/// Segment lists for the paths of an existing allocation file.
pub fn cmd_assign(
    t: &Topology,
    allocation_file: &Path,
    out: &Path,
    alg: &dyn SegmentAllocator,
) -> Result<Vec<(u32, SrPath)>, EvalError> {
    let rec = parse_allocation(t, &read(allocation_file)?)?;
    let sp = ShortestPaths::new(t);
    let paths =
        rec.admitted.iter().map(|(id, p)| Ok((*id, alg.allocate(&sp, p)?))).collect::<Result<Vec<_>, SrError>>()?;
    write(out, &sr_paths_to_json(t, &paths))?;
    Ok(paths)
}

/// CE port of each flow; flows not listed use their position in the SR
/// paths file.
pub fn parse_endpoints(text: &str) -> Result<BTreeMap<u32, u32>, EvalError> {
    serde_json::from_str(text).map_err(EvalError::Endpoints)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EncodeConfig {
    pub service: Service,
    pub limit: DepthLimit,
}

/// Edge rules for every SR path. The flow's port is both the ingress match
/// port and the egress output port, and the endpoint id of its inmost label.
pub fn encode_all(
    t: &Topology,
    paths: &[(u32, SrPath)],
    ports: &BTreeMap<u32, u32>,
    cfg: EncodeConfig,
) -> Result<Vec<(u32, EdgeRules)>, EvalError> {
    let sp = ShortestPaths::new(t);
    paths
        .iter()
        .enumerate()
        .map(|(k, (id, p))| {
            let port = ports.get(id).copied().unwrap_or(k as u32);
            synthesize_edge_rules(cfg.service, p, port, port, &sp, cfg.limit)
                .map(|r| (*id, r))
                .map_err(|e| EvalError::Mpls(*id, e))
        })
        .collect()
}

pub fn cmd_encode(
    t: &Topology,
    sr_paths_file: &Path,
    endpoints_file: Option<&Path>,
    out: &Path,
    cfg: EncodeConfig,
) -> Result<Vec<(u32, EdgeRules)>, EvalError> {
    let paths: Vec<_> = parse_sr_paths(t, &read(sr_paths_file)?)?.into_iter().map(|r| (r.flow_id, r.path)).collect();
    let ports = match endpoints_file {
        Some(f) => parse_endpoints(&read(f)?)?,
        None => BTreeMap::new(),
    };
    let rules = encode_all(t, &paths, &ports, cfg)?;
    write(out, &rules_to_json(t, &rules))?;
    Ok(rules)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidateReport {
    pub passed: usize,
    /// Flow ids whose segment list does not reproduce the engineered path.
    pub failed: Vec<u32>,
}

impl ValidateReport {
    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }
}

pub fn validate_all(
    t: &Topology,
    te_paths: &[(u32, Vec<crate::topo::NodeId>)],
    sr_paths: &[(u32, SrPath)],
) -> Result<ValidateReport, EvalError> {
    let te: BTreeMap<_, _> = te_paths.iter().map(|(id, p)| (*id, p)).collect();
    let sr: BTreeMap<_, _> = sr_paths.iter().map(|(id, p)| (*id, p)).collect();
    let (a, b): (BTreeSet<_>, BTreeSet<_>) = (te.keys().collect(), sr.keys().collect());
    if a != b {
        let diff: Vec<_> = a.symmetric_difference(&b).map(|id| id.to_string()).collect();
        return Err(EvalError::Mismatch(diff.join(", ")));
    }
    let sp = ShortestPaths::new(t);
    let mut report = ValidateReport::default();
    for (id, p) in te {
        if sim::validate(&sp, p, sr[&id]) {
            report.passed += 1;
        } else {
            report.failed.push(id);
        }
    }
    Ok(report)
}

pub fn cmd_validate(t: &Topology, allocation_file: &Path, sr_paths_file: &Path) -> Result<ValidateReport, EvalError> {
    let rec = parse_allocation(t, &read(allocation_file)?)?;
    let sr: Vec<_> = parse_sr_paths(t, &read(sr_paths_file)?)?.into_iter().map(|r| (r.flow_id, r.path)).collect();
    validate_all(t, &rec.admitted, &sr)
}

/// Size of one demand prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubsetSize {
    Flows(usize),
    Percent(f64),
}

impl SubsetSize {
    pub fn resolve(self, total: usize) -> usize {
        match self {
            Self::Flows(n) => n.min(total),
            Self::Percent(p) => ((p / 100.0 * total as f64).round() as usize).min(total),
        }
    }

    /// 10%, 20%, ..., 100%.
    pub fn deciles() -> Vec<SubsetSize> {
        (1..=10).map(|k| Self::Percent(10.0 * k as f64)).collect()
    }
}

impl FromStr for SubsetSize {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        let bad = || EvalError::Subset(s.to_owned());
        let s = s.trim();
        match s.strip_suffix('%') {
            Some(p) => {
                let v: f64 = p.trim().parse().map_err(|_| bad())?;
                if (0.0..=100.0).contains(&v) {
                    Ok(Self::Percent(v))
                } else {
                    Err(bad())
                }
            }
            None => s.parse().map(Self::Flows).map_err(|_| bad()),
        }
    }
}

/// Generates the demand once, then solves, assigns and validates every
/// requested prefix of it.
pub fn run_eval(t: &Topology, d: &DemandSet, subsets: &[SubsetSize], cfg: &RunConfig) -> Result<EvalReport, EvalError> {
    let sp = ShortestPaths::new(t);
    let mut rows = Vec::with_capacity(subsets.len());
    for s in subsets {
        let prefix = d.prefix(s.resolve(d.len()));
        let solved = solve_and_assign(t, &prefix, cfg)?;
        let te_paths: Vec<_> = solved.allocation.admitted.iter().map(|f| (f.flow.id, f.path.clone())).collect();
        let valid = validate_all(t, &te_paths, &solved.sr_paths)?;
        let natural = solved
            .allocation
            .admitted
            .iter()
            .map(|f| sp.natural_path(f.flow.src, f.flow.dst).expect("admitted flows are routable").len() - 1);
        let mut row = EvalRow::new(prefix.len(), &solved, natural, valid.passed);
        if !cfg.timing {
            row.clear_times();
        }
        log::info!(
            "{} flows: admitted {}, mean hops TE {:.2} natural {:.2}, mean SIDs {:.2}",
            row.requested,
            row.admitted,
            row.mean_te,
            row.mean_natural,
            row.mean_sids
        );
        rows.push(row);
    }
    Ok(EvalReport { rows })
}

pub fn cmd_eval(
    t: &Topology,
    params: &DemandParams,
    seed: u64,
    subsets: &[SubsetSize],
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<EvalReport, EvalError> {
    let d = demand::generate(t, params, seed)?;
    let t = t.with_pes(&d.pes);
    let report = run_eval(&t, &d, subsets, cfg)?;
    write_csvs(&report, out_dir)?;
    Ok(report)
}
