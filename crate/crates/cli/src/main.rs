//! `xtalk`: design crosstalk-detection experiments, simulate them, analyze
//! datasets and render reports.
//!
//! Exit codes: 0 no crosstalk detected (or command succeeded), 1 crosstalk
//! detected, 2 error.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use xtalk::dataset::Dataset;
use xtalk::design::{build_plan, default_params, ExperimentPlan, SignalRegime};
use xtalk::discovery::{analyze, render_dot, EdgeClass, GraphEdge};
use xtalk::regions::{brute_force_cover, one_partition, partition_cover, Partition};
use xtalk::rng::sub_seed;
use xtalk::simulator::run_plan;
use xtalk::stats::CountTable;

use config::{resolve_layout, PartitionMode, RunConfig};

#[derive(Parser)]
#[command(
    name = "xtalk",
    version,
    about = "Crosstalk detection by causal discovery on randomized experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON or TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an experiment plan (one file per partition).
    Design {
        #[command(flatten)]
        common: Common,
        /// Preset `full:N`, `line:N`, `ladder6`, or a layout JSON file.
        #[arg(long)]
        layout: Option<String>,
        #[arg(long, value_enum)]
        partition: Option<PartitionMode>,
        /// Output plan path.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate a plan under the configured error model.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Output dataset path (JSON lines).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the crosstalk graph of a dataset.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// DOT graph path.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Divide alpha by the number of initially tested edges.
        #[arg(long)]
        bonferroni: bool,
        /// Largest conditioning set.
        #[arg(long)]
        max_cond: Option<usize>,
        /// Weight intra-region edges too.
        #[arg(long)]
        tvd_expected: bool,
    },
    /// Summarize a saved report; optionally re-emit its DOT graph.
    Report {
        report: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Design {
            common,
            layout,
            partition,
            out,
        } => {
            let mut cfg = load(&common)?;
            if layout.is_some() {
                cfg.layout = layout;
            }
            if let Some(p) = partition {
                cfg.partition = p;
            }
            let out = out
                .or(cfg.paths.plan.clone())
                .ok_or_else(|| anyhow!("no plan path: pass --out or set paths.plan"))?;
            design(&cfg, &out)?;
            Ok(0)
        }
        Command::Simulate { common, plan, out } => {
            let cfg = load(&common)?;
            let plan = plan
                .or(cfg.paths.plan.clone())
                .ok_or_else(|| anyhow!("no plan: pass --plan or set paths.plan"))?;
            let out = out
                .or(cfg.paths.dataset.clone())
                .ok_or_else(|| anyhow!("no dataset path: pass --out or set paths.dataset"))?;
            simulate(&cfg, &plan, &out)?;
            Ok(0)
        }
        Command::Analyze {
            common,
            dataset,
            report,
            dot,
            alpha,
            bonferroni,
            max_cond,
            tvd_expected,
        } => {
            let mut cfg = load(&common)?;
            if let Some(a) = alpha {
                cfg.analysis.alpha = a;
            }
            cfg.analysis.bonferroni |= bonferroni;
            cfg.analysis.tvd_for_expected |= tvd_expected;
            if max_cond.is_some() {
                cfg.analysis.max_cond = max_cond;
            }
            let dataset = dataset
                .or(cfg.paths.dataset.clone())
                .ok_or_else(|| anyhow!("no dataset: pass --dataset or set paths.dataset"))?;
            let report = report.or(cfg.paths.report.clone());
            let dot = dot.or(cfg.paths.dot.clone());
            let detected = analyze_dataset(&cfg, &dataset, report.as_deref(), dot.as_deref())?;
            Ok(u8::from(detected))
        }
        Command::Report { report, dot } => {
            let detected = summarize(&report, dot.as_deref())?;
            Ok(u8::from(detected))
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `plan.json` becomes `plan-003.json`.
fn numbered(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plan");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{k:03}.{ext}"),
        None => format!("{stem}-{k:03}"),
    };
    path.with_file_name(name)
}

fn design(cfg: &RunConfig, out: &Path) -> Result<()> {
    let layout = resolve_layout(
        cfg.layout
            .as_deref()
            .ok_or_else(|| anyhow!("no layout: pass --layout or set layout"))?,
    )?;
    let partitions: Vec<Partition> = match cfg.partition {
        PartitionMode::One => vec![one_partition(&layout)],
        PartitionMode::Brute2 => brute_force_cover(&layout).partitions,
        PartitionMode::Random2 => {
            partition_cover(&layout, cfg.cover_epsilon, sub_seed(cfg.seed, "cover", 0))?.partitions
        }
    };
    if partitions.is_empty() {
        bail!("layout admits no partition of the requested kind");
    }
    let single = partitions.len() == 1;
    for (k, partition) in partitions.iter().enumerate() {
        let params = cfg
            .design
            .clone()
            .unwrap_or_else(|| default_params(partition.len(), SignalRegime::Low));
        let plan = build_plan(partition, &params, sub_seed(cfg.seed, "design", k as u64))?;
        let path = if single {
            out.to_path_buf()
        } else {
            numbered(out, k)
        };
        fs::write(&path, plan.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        println!(
            "{}: {} regions, {} circuits, {} records",
            path.display(),
            plan.n_regions(),
            plan.circuits.len(),
            plan.n_records()
        );
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, plan_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(plan_path)
        .with_context(|| format!("reading plan {}", plan_path.display()))?;
    let plan = ExperimentPlan::from_json(&text)
        .with_context(|| format!("parsing plan {}", plan_path.display()))?;
    let spec = cfg
        .model
        .as_ref()
        .ok_or_else(|| anyhow!("no error model in the config"))?;
    let model = spec.build()?;
    let seed = sub_seed(cfg.seed, "simulate", 0);
    let mut data = run_plan(&model, &plan, seed)?;
    if let Some(h) = data.header.as_mut() {
        h.model = Some(serde_json::to_value(spec)?);
        h.seeds.insert("master".into(), cfg.seed);
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    data.write_jsonl(&mut w)?;
    w.flush()?;
    println!(
        "{}: {} records, digest {}",
        out.display(),
        data.n_records(),
        data.digest()
    );
    Ok(())
}

fn analyze_dataset(
    cfg: &RunConfig,
    path: &Path,
    report: Option<&Path>,
    dot: Option<&Path>,
) -> Result<bool> {
    let file = File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    let data = Dataset::read_jsonl(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    let table = CountTable::from_dataset(&data)?;
    let graph = analyze(&table, &cfg.analysis, Some(data.digest()))?;
    for w in &graph.skeleton.warnings {
        log::warn!("{w}");
    }
    if let Some(p) = report {
        let mut value = graph.report();
        let seeds = data
            .header
            .as_ref()
            .map(|h| h.seeds.clone())
            .unwrap_or_default();
        value["seeds"] = json!(seeds);
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = dot {
        fs::write(p, graph.to_dot()).with_context(|| format!("writing {}", p.display()))?;
    }
    print_edges(&graph.edges);
    Ok(graph.has_crosstalk())
}

fn print_edges(edges: &[GraphEdge]) {
    let crosstalk: Vec<&GraphEdge> = edges
        .iter()
        .filter(|e| e.class == EdgeClass::Crosstalk)
        .collect();
    println!("{} edges, {} crosstalk", edges.len(), crosstalk.len());
    for e in edges {
        let class = match e.class {
            EdgeClass::Expected => "expected",
            EdgeClass::Crosstalk => "crosstalk",
        };
        let weight = match e.tvd.as_ref().map(|t| (t.max, t.median)) {
            Some((Some(max), Some(median))) => format!("  tvd {max:.4} (median {median:.4})"),
            Some(_) => "  tvd not computable".to_string(),
            None => String::new(),
        };
        println!("  {} -- {}  {class}{weight}", e.a, e.b);
    }
}

fn summarize(path: &Path, dot: Option<&Path>) -> Result<bool> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading report {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let edges: Vec<GraphEdge> =
        serde_json::from_value(value["edges"].clone()).context("report has no valid edges")?;
    let nodes: Vec<&str> = value["nodes"]
        .as_array()
        .ok_or_else(|| anyhow!("report has no nodes"))?
        .iter()
        .filter_map(|n| n["id"].as_str())
        .collect();
    let meta = &value["analysis"];
    println!(
        "alpha {} ({}, per test {}), {} records, {} tests",
        meta["alpha"],
        meta["mode"].as_str().unwrap_or("?"),
        meta["alpha_per_test"],
        meta["n_records"],
        value["tests"].as_array().map_or(0, Vec::len)
    );
    print_edges(&edges);
    if let Some(p) = dot {
        fs::write(p, render_dot(nodes, &edges))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(edges.iter().any(|e| e.class == EdgeClass::Crosstalk))
}
