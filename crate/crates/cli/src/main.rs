use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pace_core::bench::{generate_workload, run_bench, WorkloadSpec};
use pace_core::engine::{Engine, PeriodGraph, Variant};
use pace_core::eval::{eval_kl, KlOptions};
use pace_core::graph::{extract_by_period, PaceGraph};
use pace_core::heuristics::{build_table, min_cost_map};
use pace_core::io;
use pace_core::oracle::{exact_best_with, format_table};
use pace_core::par::{self, Execution};
use pace_core::router::{Query, RouteOptions};
use pace_core::synth::{generate_synthetic, SyntheticSpec};
use pace_core::vpath::{build_vpaths, BuildOptions, UpdatedPaceGraph};
use pace_core::Error;

/// Worker threads for data-parallel stages. Unset means one per core.
const WORKERS_ENV: &str = "PACE_WORKERS";

#[derive(Parser)]
#[command(name = "pace", version, about = "Arriving-on-time routing over path-centric uncertain road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic road graph and trajectories.
    Gen {
        /// TOML synthetic spec; missing keys take defaults.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Mine T-paths from trajectories, one PACE file per period tag.
    ExtractTpaths {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        tau: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Combine T-paths into V-paths and write the unit store.
    BuildVpaths {
        #[arg(long)]
        pace: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precompute heuristics for one or every destination.
    Heuristics {
        #[arg(long)]
        pace: PathBuf,
        /// Unit store from build-vpaths; built in memory when omitted.
        #[arg(long)]
        units: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, required_if_eq("kind", "table"))]
        delta: Option<u64>,
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        dest: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer every query in a query file.
    Route {
        #[command(flatten)]
        graphs: GraphArgs,
        #[arg(long)]
        query_file: PathBuf,
        #[arg(long, default_value = "V-BS-1")]
        variant: String,
        /// Disable dominance pruning in the V-path router.
        #[arg(long)]
        no_pruning: bool,
    },
    /// Enumerate every simple path for one query and print the table.
    Oracle {
        #[arg(long)]
        pace: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        dest: String,
        #[arg(long)]
        budget: u32,
        /// Longest path to enumerate; defaults to the vertex count.
        #[arg(long)]
        max_edges: Option<usize>,
    },
    /// K-fold KL evaluation of T-path estimates against held-out trips.
    EvalKl {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        tau: u64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        min_occurrences: usize,
        /// Machine-readable TOML summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run a workload under several variants and check they agree.
    Bench {
        #[command(flatten)]
        graphs: GraphArgs,
        /// Comma-separated, e.g. T-None,T-B-P,V-BS-1.
        #[arg(long, value_delimiter = ',', required = true)]
        variants: Vec<String>,
        /// TOML workload spec; missing keys take defaults.
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Binary,
    Table,
}

#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct GraphArgs {
    /// A single PACE file used for every departure time.
    #[arg(long)]
    pace: Option<PathBuf>,
    /// TOML list of `[[period]]` entries with `pace`, `start` and `end`.
    #[arg(long)]
    periods: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodsFile {
    period: Vec<PeriodEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodEntry {
    pace: PathBuf,
    start: u64,
    end: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_pace(path: &Path) -> Result<PaceGraph> {
    io::parse_pace(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_engine(args: &GraphArgs) -> Result<Engine> {
    if let Some(p) = &args.pace {
        return Ok(Engine::single(load_pace(p)?)?);
    }
    let path = args.periods.as_ref().expect("clap enforces one of --pace/--periods");
    let cfg: PeriodsFile = toml::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let periods =
        cfg.period.iter().map(|p| Ok(PeriodGraph::new(load_pace(&base.join(&p.pace))?, p.start, p.end)?)).collect::<Result<Vec<_>>>()?;
    Ok(Engine::new(periods)?)
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw.parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer, got '{raw}'"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn gen(spec: &Path, seed: u64, out_dir: &Path) -> Result<()> {
    let spec: SyntheticSpec = toml::from_str(&read(spec)?).context("parsing synthetic spec")?;
    let syn = generate_synthetic(&spec, seed)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("graph.txt"), io::format_graph(&syn.graph))?;
    fs::write(out_dir.join("trajectories.txt"), io::format_trajectories(&syn.trajectories, &syn.graph))?;
    eprintln!("{} vertices, {} edges, {} trajectories", syn.graph.vertex_count(), syn.graph.edge_count(), syn.trajectories.len());
    Ok(())
}

fn extract(graph: &Path, trajectories: &Path, tau: u64, out_dir: &Path) -> Result<()> {
    let g = io::parse_graph(&read(graph)?).context("parsing graph")?;
    let ts = io::parse_trajectories(&read(trajectories)?, &g).context("parsing trajectories")?;
    fs::create_dir_all(out_dir)?;
    for pace in extract_by_period(&ts, &g, tau)? {
        let path = out_dir.join(format!("{}.pace", pace.period_tag));
        fs::write(&path, io::format_pace(&pace))?;
        println!("{}\t{}\t{}", pace.period_tag, pace.tpaths().len(), path.display());
    }
    Ok(())
}

fn vpaths(pace: &Path, max_len: Option<usize>, out: Option<&Path>) -> Result<()> {
    let g = load_pace(pace)?;
    let (up, stats) = build_vpaths(&g, &BuildOptions { max_len, execution: None })?;
    eprintln!("{} T-paths, {} V-paths, per iteration {:?}", up.tpath_count(), up.vpath_count(), stats.per_iteration);
    write_or_print(out, &io::format_units(&up))
}

fn load_updated(pace: &PaceGraph, units: Option<&Path>) -> Result<UpdatedPaceGraph> {
    Ok(match units {
        Some(p) => io::parse_units(&read(p)?, pace).with_context(|| format!("parsing {}", p.display()))?,
        None => build_vpaths(pace, &BuildOptions::default())?.0,
    })
}

fn heuristics(pace: &Path, units: Option<&Path>, kind: Kind, delta: Option<u64>, dest: Option<&str>, out: Option<&Path>) -> Result<()> {
    let g = load_pace(pace)?;
    let up = load_updated(&g, units)?;
    let dests: Vec<_> = match dest {
        Some(name) => vec![g.base.require_vertex(name)?],
        None => g.base.vertices().collect(),
    };
    let blocks = par::map(Execution::default(), &dests, |&d| -> pace_core::Result<String> {
        let m = min_cost_map(&up, d)?;
        Ok(match kind {
            Kind::Binary => io::format_min_costs(&m, &g.base),
            Kind::Table => io::format_table(&build_table(&up, d, delta.expect("clap requires --delta"), None, &m)?, &g.base),
        })
    });
    let text = blocks.into_iter().collect::<pace_core::Result<Vec<_>>>()?.concat();
    write_or_print(out, &text)
}

fn route(graphs: &GraphArgs, query_file: &Path, variant: &str, no_pruning: bool) -> Result<()> {
    let variant: Variant = variant.parse()?;
    let mut engine = load_engine(graphs)?;
    engine.options = RouteOptions { dominance_pruning: !no_pruning };
    let g = &engine.periods()[0].pace.base;
    let queries: Vec<Query> = io::parse_queries(&read(query_file)?, g).context("parsing queries")?;
    let lines = par::map(Execution::default(), &queries, |q| {
        let start = Instant::now();
        engine.run(variant, q).map(|r| io::format_result(&r, g, start.elapsed()))
    });
    for line in lines {
        println!("{}", line?);
    }
    Ok(())
}

fn oracle(pace: &Path, source: &str, dest: &str, budget: u32, max_edges: Option<usize>) -> Result<()> {
    let g = load_pace(pace)?;
    let q = Query { source: g.base.require_vertex(source)?, dest: g.base.require_vertex(dest)?, departure: 0, budget };
    let r = exact_best_with(&g, &q, max_edges.unwrap_or(g.base.vertex_count()), Execution::default())?;
    print!("{}", format_table(&g.base, &r));
    let best = if r.best_path.is_empty() { "-".to_string() } else { g.base.edge_names(&r.best_path).join(",") };
    eprintln!("best {best} {:.9}", r.best_probability);
    Ok(())
}

fn kl(graph: &Path, trajectories: &Path, opts: KlOptions, summary: Option<&Path>) -> Result<()> {
    let g = io::parse_graph(&read(graph)?).context("parsing graph")?;
    let ts = io::parse_trajectories(&read(trajectories)?, &g).context("parsing trajectories")?;
    let r = eval_kl(&ts, &g, &opts)?;
    println!("fold\tpaths\tuncovered\ttpaths\tpace_kl\tedge_kl");
    for (k, f) in r.folds.iter().enumerate() {
        println!("{k}\t{}\t{}\t{}\t{:.6}\t{:.6}", f.paths, f.uncovered, f.tpaths, f.pace, f.edge);
    }
    println!("mean\t-\t{}\t-\t{:.6}±{:.6}\t{:.6}±{:.6}", r.uncovered, r.pace_mean, r.pace_ci95, r.edge_mean, r.edge_ci95);
    if let Some(p) = summary {
        fs::write(p, toml::to_string(&r)?)?;
    }
    Ok(())
}

fn bench(graphs: &GraphArgs, variants: &[String], workload: Option<&Path>, out: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    let variants = variants.iter().map(|v| v.parse()).collect::<pace_core::Result<Vec<Variant>>>()?;
    let spec: WorkloadSpec = match workload {
        Some(p) => toml::from_str(&read(p)?).context("parsing workload spec")?,
        None => WorkloadSpec::default(),
    };
    let engine = load_engine(graphs)?;
    let period = engine.period_for(spec.departure)?;
    let queries = generate_workload(&engine.periods()[period].pace.base, &spec)?;
    let report = run_bench(&engine, &queries, &spec, &variants, Execution::default())?;
    write_or_print(out, &report.to_tsv())?;
    if let Some(p) = summary {
        fs::write(p, toml::to_string(&report)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    match cli.command {
        Command::Gen { spec, seed, out_dir } => gen(&spec, seed, &out_dir),
        Command::ExtractTpaths { graph, trajectories, tau, out_dir } => extract(&graph, &trajectories, tau, &out_dir),
        Command::BuildVpaths { pace, max_len, out } => vpaths(&pace, max_len, out.as_deref()),
        Command::Heuristics { pace, units, kind, delta, dest, all: _, out } => {
            heuristics(&pace, units.as_deref(), kind, delta, dest.as_deref(), out.as_deref())
        }
        Command::Route { graphs, query_file, variant, no_pruning } => route(&graphs, &query_file, &variant, no_pruning),
        Command::Oracle { pace, source, dest, budget, max_edges } => oracle(&pace, &source, &dest, budget, max_edges),
        Command::EvalKl { graph, trajectories, tau, folds, min_occurrences, summary } => {
            let opts = KlOptions { tau, folds, min_occurrences, ..KlOptions::default() };
            kl(&graph, &trajectories, opts, summary.as_deref())
        }
        Command::Bench { graphs, variants, workload, out, summary } => {
            bench(&graphs, &variants, workload.as_deref(), out.as_deref(), summary.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Disagreement between variants gets its own code so scripts can
            // tell a correctness failure from bad input.
            if matches!(e.downcast_ref::<Error>(), Some(Error::Disagreement(_))) {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
