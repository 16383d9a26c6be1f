//! `srte`: traffic-engineered flow assignment and segment-routing paths.
//!
//! Set `SRTE_LOG` (e.g. `info`, `debug`) for progress output on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use srte_core::demand::DemandParams;
use srte_core::eval::{self, EncodeConfig, RunConfig, SubsetSize};
use srte_core::mpls::{DepthLimit, DepthPolicy, Service, DEFAULT_STEERING_DEPTH};
use srte_core::sr::{allocators, DEFAULT_ALLOCATOR};
use srte_core::te::{metrics, SolverConfig, DEFAULT_METRIC};
use srte_core::topo::Topology;

#[derive(Parser)]
#[command(name = "srte", version, about = "Traffic-engineered flow assignment with segment-routing paths")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random demand between PE nodes.
    Demand {
        #[command(flatten)]
        topo: TopoArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file.
        #[arg(long, short, default_value = "demand.json")]
        out: PathBuf,
    },
    /// Assign flows to paths and compute their segment lists.
    Solve {
        #[command(flatten)]
        topo: TopoArg,
        #[arg(long)]
        demand: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute segment lists for the paths of an allocation file.
    Assign {
        #[command(flatten)]
        topo: TopoArg,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, default_value = DEFAULT_ALLOCATOR)]
        sr_algo: String,
        #[arg(long, short, default_value = eval::SR_PATHS_FILE)]
        out: PathBuf,
    },
    /// Encode segment lists as MPLS label stacks and edge rules.
    Encode {
        #[command(flatten)]
        topo: TopoArg,
        #[arg(long)]
        sr_paths: PathBuf,
        /// JSON object mapping flow id to CE port; other flows use their
        /// position in the SR paths file.
        #[arg(long)]
        endpoints: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ServiceArg::IpVll)]
        service: ServiceArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::Error)]
        depth_policy: PolicyArg,
        #[arg(long, default_value_t = DEFAULT_STEERING_DEPTH)]
        max_depth: usize,
        #[arg(long, short, default_value = eval::RULES_FILE)]
        out: PathBuf,
    },
    /// Check that every segment list forwards exactly along its path.
    Validate {
        #[command(flatten)]
        topo: TopoArg,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long)]
        sr_paths: PathBuf,
    },
    /// Solve growing prefixes of one demand and write the result tables.
    Eval {
        #[command(flatten)]
        topo: TopoArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Prefix sizes: flow counts or percentages, e.g. `100,50%,100%`.
        #[arg(long, value_delimiter = ',', default_value = "10%,20%,30%,40%,50%,60%,70%,80%,90%,100%")]
        subsets: Vec<SubsetSize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct TopoArg {
    /// Topology file, `.graphml` or `.json`.
    #[arg(long)]
    topology: PathBuf,
}

impl TopoArg {
    fn load(&self) -> Result<Topology> {
        eval::load_topology(&self.topology).context("loading topology")
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.4)]
    pe_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pair_fraction: f64,
    #[arg(long, default_value_t = 3.5)]
    mean_flows: f64,
    #[arg(long, default_value_t = 0.1)]
    pair_load: f64,
    /// Reference link capacity in b/s.
    #[arg(long, default_value_t = 10e9)]
    capacity: f64,
}

impl ParamArgs {
    fn params(&self) -> DemandParams {
        DemandParams {
            pe_fraction: self.pe_fraction,
            active_pair_fraction: self.pair_fraction,
            mean_flows_per_direction: self.mean_flows,
            pair_load_fraction: self.pair_load,
            link_capacity: self.capacity,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    /// Relative crossing-time gain below which re-assignment stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Route computations per admitted flow for multi-flow moves.
    #[arg(long, default_value_t = 1024)]
    search_budget: usize,
    #[arg(long, default_value = DEFAULT_METRIC)]
    metric: String,
    #[arg(long, default_value = DEFAULT_ALLOCATOR)]
    sr_algo: String,
    /// Write zero for wall-clock times so that output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        if self.tol.is_nan() || self.tol < 0.0 {
            bail!("--tol must be non-negative");
        }
        Ok(RunConfig {
            solver: SolverConfig {
                metric: metrics().get(&self.metric)?,
                tol: self.tol,
                max_passes: self.max_passes,
                search_budget: self.search_budget,
            },
            allocator: allocators().get(&self.sr_algo)?,
            timing: !self.no_timing,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ServiceArg {
    IpVll,
    Pw,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Error,
    Warn,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Demand { topo, params, seed, out } => {
            let t = topo.load()?;
            let d = eval::cmd_demand(&t, &params.params(), seed, &out)?;
            println!("{} flows between {} PEs -> {}", d.len(), d.pes.len(), out.display());
        }
        Cmd::Solve { topo, demand, out_dir, run } => {
            let t = topo.load()?;
            let s = eval::cmd_solve(&t, &demand, &out_dir, &run.config()?)?;
            let a = &s.allocation;
            println!(
                "admitted {} rejected {} T_avg {:.6e} -> {}",
                a.admitted.len(),
                a.rejected.len(),
                a.t_avg,
                out_dir.display()
            );
        }
        Cmd::Assign { topo, allocation, sr_algo, out } => {
            let t = topo.load()?;
            let alg = allocators().get(&sr_algo)?;
            let paths = eval::cmd_assign(&t, &allocation, &out, alg.as_ref())?;
            println!("{} SR paths -> {}", paths.len(), out.display());
        }
        Cmd::Encode { topo, sr_paths, endpoints, service, depth_policy, max_depth, out } => {
            let t = topo.load()?;
            let cfg = EncodeConfig {
                service: match service {
                    ServiceArg::IpVll => Service::IpVll,
                    ServiceArg::Pw => Service::Pw,
                },
                limit: DepthLimit {
                    max: max_depth,
                    policy: match depth_policy {
                        PolicyArg::Error => DepthPolicy::Error,
                        PolicyArg::Warn => DepthPolicy::Warn,
                    },
                },
            };
            let rules = eval::cmd_encode(&t, &sr_paths, endpoints.as_deref(), &out, cfg)?;
            println!("{} rule pairs -> {}", rules.len(), out.display());
        }
        Cmd::Validate { topo, allocation, sr_paths } => {
            let t = topo.load()?;
            let r = eval::cmd_validate(&t, &allocation, &sr_paths)?;
            println!("{} passed, {} failed", r.passed, r.failed.len());
            for id in &r.failed {
                println!("flow {id}: segment list does not reproduce the path");
            }
            if !r.ok() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Eval { topo, params, seed, subsets, out_dir, run } => {
            let t = topo.load()?;
            let report = eval::cmd_eval(&t, &params.params(), seed, &subsets, &out_dir, &run.config()?)?;
            println!("requested admitted mean_te mean_natural mean_sids max_sids");
            for r in &report.rows {
                println!(
                    "{} {} {:.2} {:.2} {:.2} {}",
                    r.requested, r.admitted, r.mean_te, r.mean_natural, r.mean_sids, r.max_sids
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SRTE_LOG", "warn")).format_timestamp(None).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
