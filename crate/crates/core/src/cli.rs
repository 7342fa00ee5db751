//! Command-line front end. Vertex and row indices are 1-based on the command
//! line and in files.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::consensus::{self, AgentEnsemble};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::graph::{DegreeStats, GraphFamily, Network};
use crate::kaczmarz::{self, Schedule};
use crate::linalg::{fmt_shortest, load_system, read_vector_csv};
use crate::walks::{self, BoundReport};

#[derive(Debug, Parser)]
#[command(name = "topocon", version, about = "Projection-consensus solver for Ax = b over agent networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Er,
    Ws,
    Sf,
    Rr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundMode {
    /// Enumerate every walk.
    Enum,
    /// Dynamic program over visited sets (n <= 20).
    Dp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    /// Rows 1..n repeated.
    Cyclic,
    /// Uniformly random rows.
    Random,
    /// Rows read from --schedule-file.
    File,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random connected network and write it as an edge list.
    GenGraph {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Number of vertices.
        #[arg(long)]
        n: usize,
        /// Link probability (er) or rewiring probability (ws).
        #[arg(long)]
        p: Option<f64>,
        /// Lattice degree (ws) or regular degree (rr).
        #[arg(long)]
        k: Option<usize>,
        /// Edges per new vertex (sf).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output edge list; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the distributed iteration and write the error trace.
    Solve {
        /// Coefficient matrix CSV.
        #[arg(long)]
        system: PathBuf,
        /// Right-hand side CSV; zeros when omitted.
        #[arg(long)]
        rhs: Option<PathBuf>,
        /// Edge list of the agent network.
        #[arg(long)]
        graph: PathBuf,
        /// Number of synchronous rounds.
        #[arg(long)]
        steps: usize,
        /// Checkpoint spacing.
        #[arg(long, default_value_t = consensus::DEFAULT_STRIDE)]
        stride: usize,
        /// Norm of the random offset in each agent's initial state.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace CSV (t,eps_1..eps_n,R); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the walk-sum bound on one agent's error.
    Bound {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long)]
        graph: PathBuf,
        /// Agent whose error is bounded (1-based).
        #[arg(long)]
        source: usize,
        /// Walk length; bounds the error after t + 1 rounds.
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value_t = BoundMode::Dp)]
        mode: BoundMode,
        /// Initial error norms CSV, one per agent. Without it they come from
        /// the seeded initialisation used by `solve`.
        #[arg(long)]
        y0: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run sequential row projections and check their contraction envelope.
    Kaczmarz {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Cyclic)]
        schedule: ScheduleArg,
        /// Row indices (1-based), whitespace or comma separated.
        #[arg(long)]
        schedule_file: Option<PathBuf>,
        /// Sweeps of n steps for cyclic and random schedules.
        #[arg(long, default_value_t = 1)]
        sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting vector CSV; zeros when omitted.
        #[arg(long)]
        z0: Option<PathBuf>,
        /// Error series CSV (k,row,error); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ensemble experiment and write per-group quantiles of R(t).
    Experiment {
        /// JSON config; the desk preset when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the n = 100, 2000-step preset instead of the desk preset.
        #[arg(long, conflicts_with = "config")]
        full_scale: bool,
        /// Override the master seed.
        #[arg(long)]
        master_seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the worker count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Quantile CSV; a .meta.json sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print network and system statistics as JSON.
    Stats {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 for invalid input, 2 for runtime failures.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(parsed.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn one_based(index: usize, len: usize) -> Result<usize> {
    if index == 0 || index > len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    Ok(index - 1)
}

fn family_from_args(
    family: FamilyArg,
    p: Option<f64>,
    k: Option<usize>,
    m: Option<usize>,
) -> Result<GraphFamily> {
    let need = |name: &str| Error::InvalidParams(format!("--{} is required for this family", name));
    Ok(match family {
        FamilyArg::Er => GraphFamily::Er { p: p.ok_or_else(|| need("p"))? },
        FamilyArg::Ws => GraphFamily::Ws {
            k: k.ok_or_else(|| need("k"))?,
            p: p.ok_or_else(|| need("p"))?,
        },
        FamilyArg::Sf => GraphFamily::Sf { m: m.ok_or_else(|| need("m"))? },
        FamilyArg::Rr => GraphFamily::Rr { k: k.ok_or_else(|| need("k"))? },
    })
}

#[derive(Serialize)]
struct BoundOutput<'a> {
    source: usize,
    t: usize,
    mode: &'a str,
    phi: f64,
    bound: f64,
    bound_by_order: &'a [f64],
    mass_by_order: &'a [f64],
    y0_norms: &'a [f64],
}

#[derive(Serialize)]
struct GraphStats {
    n: usize,
    edges: usize,
    diameter: usize,
    mean_degree: f64,
    degrees: DegreeStats,
}

#[derive(Serialize)]
struct SystemStats {
    n: usize,
    tau: f64,
    norm: f64,
    inv_norm: f64,
    frobenius: f64,
    phi: f64,
    kappa: f64,
    kappa_scaled: f64,
}

#[derive(Serialize, Default)]
struct Stats {
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<SystemStats>,
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenGraph {
            family,
            n,
            p,
            k,
            m,
            seed,
            out,
        } => {
            let net = family_from_args(family, p, k, m)?.generate(n, seed)?;
            let mut buf = Vec::new();
            net.write_edge_list(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Solve {
            system,
            rhs,
            graph,
            steps,
            stride,
            radius,
            seed,
            out,
        } => {
            let sys = load_system(&system, rhs.as_deref())?;
            let net = Network::load(&graph)?;
            let trace = consensus::run(&sys, &net, steps, stride, radius, seed)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Bound {
            system,
            rhs,
            graph,
            source,
            t,
            mode,
            y0,
            radius,
            seed,
            out,
        } => {
            let sys = load_system(&system, rhs.as_deref())?;
            let net = Network::load(&graph)?;
            let i = one_based(source, net.n())?;
            let y0_norms: Vec<f64> = match y0 {
                Some(path) => read_vector_csv(path)?.iter().copied().collect(),
                None => AgentEnsemble::init(&sys, &net, radius, seed)?.errors(),
            };
            let (report, label): (BoundReport, &str) = match mode {
                BoundMode::Enum => (walks::bound_bruteforce(&sys, &net, i, t, &y0_norms)?, "enum"),
                BoundMode::Dp => (walks::bound_dp(&sys, &net, i, t, &y0_norms)?, "dp"),
            };
            let body = BoundOutput {
                source,
                t,
                mode: label,
                phi: report.phi,
                bound: report.bound,
                bound_by_order: &report.bound_by_order,
                mass_by_order: &report.mass_by_order,
                y0_norms: &y0_norms,
            };
            emit(out.as_deref(), &to_json(&body)?)
        }
        Command::Kaczmarz {
            system,
            rhs,
            schedule,
            schedule_file,
            sweeps,
            seed,
            z0,
            out,
        } => {
            let sys = load_system(&system, rhs.as_deref())?;
            let n = sys.n();
            let rows = match schedule {
                ScheduleArg::Cyclic => Schedule::Cyclic.rows(n, sweeps),
                ScheduleArg::Random => Schedule::Random { seed }.rows(n, sweeps),
                ScheduleArg::File => {
                    let path = schedule_file.ok_or_else(|| {
                        Error::InvalidParams("--schedule file needs --schedule-file".into())
                    })?;
                    kaczmarz::read_schedule(path)?
                }
            };
            if let Some(&j) = rows.iter().find(|&&j| j >= n) {
                return Err(Error::IndexOutOfRange { index: j + 1, len: n });
            }
            let z0 = match z0 {
                Some(p) => read_vector_csv(p)?,
                None => DVector::zeros(n),
            };
            let report = kaczmarz::verify_sequence_bounds(&sys, &z0, &rows)?;
            let mut buf = Vec::new();
            writeln!(buf, "k,row,error")?;
            for (k, e) in report.errors.iter().enumerate() {
                let row = if k == 0 { String::new() } else { (rows[k - 1] + 1).to_string() };
                writeln!(buf, "{},{},{}", k, row, fmt_shortest(*e))?;
            }
            emit(out.as_deref(), &buf)?;
            match report.envelope {
                Some(env) => eprintln!(
                    "order {}: final/initial = {} <= envelope {}",
                    report.order,
                    report.final_error / report.initial_error,
                    env
                ),
                None => eprintln!("order 0: error non-increasing"),
            }
            Ok(())
        }
        Command::Experiment {
            config,
            full_scale,
            master_seed,
            trials,
            workers,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(path)?,
                None if full_scale => ExperimentConfig::full_scale(0),
                None => ExperimentConfig::desk(0),
            };
            if let Some(s) = master_seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let result = run_experiment(&cfg)?;
            result.save(&cfg, &out)?;
            Ok(())
        }
        Command::Stats {
            graph,
            system,
            rhs,
            out,
        } => {
            if graph.is_none() && system.is_none() {
                return Err(Error::InvalidParams("give --graph and/or --system".into()));
            }
            let mut stats = Stats::default();
            if let Some(path) = graph {
                let net = Network::load(path)?;
                let degrees = net.degree_stats();
                stats.graph = Some(GraphStats {
                    n: net.n(),
                    edges: net.edge_count(),
                    diameter: net.diameter(),
                    mean_degree: degrees.mean_without_loops(),
                    degrees,
                });
            }
            if let Some(path) = system {
                let sys = load_system(path, rhs.as_deref())?;
                let c = sys.condition_numbers();
                stats.system = Some(SystemStats {
                    n: sys.n(),
                    tau: sys.tau(),
                    norm: sys.norm(),
                    inv_norm: sys.inv_norm(),
                    frobenius: sys.frobenius_norm(),
                    phi: sys.phi(),
                    kappa: c.kappa,
                    kappa_scaled: c.kappa_scaled,
                });
            }
            emit(out.as_deref(), &to_json(&stats)?)
        }
    }
}
