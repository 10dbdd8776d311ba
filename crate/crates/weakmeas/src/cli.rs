//! Command-line entry points.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use weakmeas_core::analysis::{
    collapse_fit, rescale, AnalysisError, CollapseParams, Dataset, ScalingPoint,
};
use weakmeas_core::model::cube_product;
use weakmeas_core::oracle::OracleError;
use weakmeas_core::sampler::{InitMode, ProposalOrder};
use weakmeas_core::{LatticeGraph, LatticeKind};

use crate::config::{
    output_dir, parse_angle, parse_lattice, parse_size, size_label, Angles, ConfigError, Cut, Grid,
    RunConfig,
};
use crate::exact::{exact_report, oned_row};
use crate::io::{
    self, aggregate_row, fmt_f64, read_aggregate, write_chain, write_json, write_table, IoError,
    Manifest, AGGREGATE_HEADER,
};
use crate::run::{run_point, thread_pool, RunError, SamplingOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("exact computation: {0}")]
    Oracle(#[from] OracleError),
    #[error("collapse: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Analysis(_) => 2,
            CliError::Oracle(OracleError::TooLarge { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "weakmeas",
    version,
    about = "Sample and analyse weak-measurement circuit ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run Markov chains at one (t_A, t_B) point.
    Sample(SampleArgs),
    /// Run Markov chains over a t_A grid along a cut.
    Scan(ScanArgs),
    /// Exact enumeration, closed forms and Nishimori checks on small lattices.
    Exact(ExactArgs),
    /// Finite-size-scaling collapse of aggregated scan tables.
    Collapse(CollapseArgs),
    /// 1D closed forms, optionally side by side with sampled values.
    Oned(OnedArgs),
}

#[derive(Args, Debug, Clone)]
pub struct LatticeArgs {
    /// chain, lieb, heavy_hex or cubic.
    #[arg(long, default_value = "lieb")]
    pub lattice: String,
    /// N (natural shape) or AxB / AxBxC extents.
    #[arg(long, short = 'L')]
    pub size: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ProposalArg {
    Raster,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum InitArg {
    UniformPlus,
    UniformMinus,
    Random,
    RandomFluxFree,
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 11)]
    pub chains: usize,
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: usize,
    /// Fraction of leading sweeps discarded.
    #[arg(long, default_value_t = 0.1)]
    pub discard: f64,
    /// Snapshot every N retained sweeps (0: none).
    #[arg(long, default_value_t = 0)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub cutoff: f64,
    #[arg(long, default_value_t = 256)]
    pub chi_max: usize,
    #[arg(long, value_enum, default_value = "raster")]
    pub proposal: ProposalArg,
    #[arg(long, value_enum, default_value = "random")]
    pub init: InitArg,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (default: $WEAKMEAS_OUT/<run name> or runs/<run name>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the lattice as graph.json.
    #[arg(long)]
    pub dump_graph: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// e.g. 0.149pi.
    #[arg(long = "tA")]
    pub t_a: String,
    /// Defaults to pi/4 (the Nishimori line).
    #[arg(long = "tB")]
    pub t_b: Option<String>,
    #[command(flatten)]
    pub chains: ChainArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// nishimori (t_B = pi/4), diagonal (t_B = t_A) or fixed_tb.
    #[arg(long, default_value = "nishimori")]
    pub cut: String,
    /// t_B for the fixed_tb cut.
    #[arg(long = "tB")]
    pub t_b: Option<String>,
    #[arg(long = "tA-min", default_value = "0.1pi")]
    pub t_min: String,
    #[arg(long = "tA-max", default_value = "0.2pi")]
    pub t_max: String,
    #[arg(long, default_value_t = 9)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub chains: ChainArgs,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// A single t_A; omit to scan the grid instead.
    #[arg(long = "tA")]
    pub t_a: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CollapseArgs {
    /// Aggregated tables (aggregate.csv) of a scan at several sizes.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "window-min", default_value = "0.1pi")]
    pub window_min: String,
    #[arg(long = "window-max", default_value = "0.2pi")]
    pub window_max: String,
    #[arg(long = "init-tc", default_value = "0.15pi")]
    pub init_tc: String,
    #[arg(long = "init-nu", default_value_t = 1.4)]
    pub init_nu: f64,
    #[arg(long = "init-beta-nu", default_value_t = 0.25)]
    pub init_beta_nu: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OnedArgs {
    /// Comma-separated even chain lengths.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also sample each point with the Monte Carlo chains.
    #[arg(long)]
    pub sample: bool,
    #[command(flatten)]
    pub chains: ChainArgs,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Collapse(a) => cmd_collapse(a),
        Command::Oned(a) => cmd_oned(a),
    }
}

fn lattice_of(args: &LatticeArgs) -> Result<(LatticeKind, weakmeas_core::Extents), ConfigError> {
    let kind = parse_lattice(&args.lattice)?;
    Ok((kind, parse_size(kind, &args.size)?))
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn grid_angles(g: &GridArgs) -> Result<Angles, ConfigError> {
    let t_b = g.t_b.as_deref().map(parse_angle).transpose()?;
    Ok(Angles::Scan {
        cut: Cut::parse(&g.cut, t_b)?,
        grid: Grid {
            t_min: parse_angle(&g.t_min)?,
            t_max: parse_angle(&g.t_max)?,
            points: g.points,
        },
    })
}

fn run_config(
    kind: LatticeKind,
    extents: weakmeas_core::Extents,
    angles: Angles,
    c: &ChainArgs,
    name: &str,
) -> RunConfig {
    RunConfig {
        lattice: kind,
        extents,
        angles,
        chains: c.chains,
        sweeps: c.sweeps,
        discard: c.discard,
        thin: c.thin,
        seed: c.seed,
        cutoff: c.cutoff,
        chi_max: c.chi_max,
        proposal: match c.proposal {
            ProposalArg::Raster => ProposalOrder::Raster,
            ProposalArg::Random => ProposalOrder::Random,
        },
        init: match c.init {
            InitArg::UniformPlus => InitMode::UniformPlus,
            InitArg::UniformMinus => InitMode::UniformMinus,
            InitArg::Random => InitMode::Random,
            InitArg::RandomFluxFree => InitMode::RandomFluxFree,
        },
        threads: c.threads.unwrap_or_else(default_threads),
        out_dir: output_dir(
            c.out.clone(),
            &format!(
                "{name}_{}_{}_seed{}",
                kind.name(),
                size_label(kind, &extents),
                c.seed
            ),
        ),
    }
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let (kind, extents) = lattice_of(&a.lattice)?;
    let t_a = parse_angle(&a.t_a)?;
    let t_b = a
        .t_b
        .as_deref()
        .map(parse_angle)
        .transpose()?
        .unwrap_or(std::f64::consts::FRAC_PI_4);
    let cfg = run_config(
        kind,
        extents,
        Angles::Point { t_a, t_b },
        &a.chains,
        "sample",
    );
    run_sampling("sample", &cfg, a.chains.dump_graph)
}

fn cmd_scan(a: ScanArgs) -> Result<(), CliError> {
    let (kind, extents) = lattice_of(&a.lattice)?;
    let cfg = run_config(kind, extents, grid_angles(&a.grid)?, &a.chains, "scan");
    run_sampling("scan", &cfg, a.chains.dump_graph)
}

fn options(cfg: &RunConfig) -> SamplingOptions {
    SamplingOptions {
        chains: cfg.chains,
        schedule: cfg.schedule(),
        seed: cfg.seed,
        contraction: cfg.contraction(),
        proposal: cfg.proposal,
        init: cfg.init,
    }
}

fn dump_graph(
    dir: &Path,
    graph: &LatticeGraph,
    manifest_artifacts: &mut Vec<String>,
) -> Result<(), IoError> {
    write_json(&dir.join("graph.json"), graph)?;
    manifest_artifacts.push("graph.json".into());
    Ok(())
}

/// Validates, then writes `chains/*.csv`, `aggregate.csv` and `manifest.json`.
pub fn run_sampling(command: &str, cfg: &RunConfig, graph_json: bool) -> Result<(), CliError> {
    let graph = cfg.validate()?;
    let pool = thread_pool(cfg.threads)?;
    let opts = options(cfg);
    let l = size_label(cfg.lattice, &cfg.extents);
    let mut manifest = Manifest::new(command, cfg.threads, cfg.clone());
    let mut results = Vec::new();
    for (i, (t_a, t_b)) in cfg.angles.pairs().into_iter().enumerate() {
        let start = Instant::now();
        let res = pool.install(|| run_point(&graph, t_a, t_b, i, &opts))?;
        let s = &res.summary;
        eprintln!(
            "{} L={l} t_A={:.4}pi t_B={:.4}pi q={:.5}±{:.5} acc={:.3} chi={} ({:.1}s)",
            cfg.lattice,
            t_a / std::f64::consts::PI,
            t_b / std::f64::consts::PI,
            s.q.mean,
            s.q.stderr,
            s.acceptance,
            s.max_bond_dim,
            start.elapsed().as_secs_f64()
        );
        results.push((i, res));
    }
    // Artifacts only once every point has succeeded.
    let dir = &cfg.out_dir;
    io::create_dir(&dir.join("chains"))?;
    let mut rows = Vec::new();
    for (i, res) in &results {
        for (j, r) in res.records.iter().enumerate() {
            let name = format!("chains/point{i:03}_chain{j:03}.csv");
            write_chain(&dir.join(&name), r)?;
            manifest.artifacts.push(name);
        }
        if cfg.thin > 0 {
            let name = format!("chains/point{i:03}_snapshots.json");
            let snaps: Vec<_> = res
                .records
                .iter()
                .map(|r| (r.chain_index, &r.snapshots))
                .collect();
            write_json(&dir.join(&name), &snaps)?;
            manifest.artifacts.push(name);
        }
        rows.push(aggregate_row(l, cfg.chains, &res.summary));
    }
    write_table(&dir.join("aggregate.csv"), &AGGREGATE_HEADER, &rows)?;
    manifest.artifacts.push("aggregate.csv".into());
    if graph_json {
        dump_graph(dir, &graph, &mut manifest.artifacts)?;
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ExactConfig {
    lattice: LatticeKind,
    extents: weakmeas_core::Extents,
    angles: Angles,
}

fn cmd_exact(a: ExactArgs) -> Result<(), CliError> {
    let (kind, extents) = lattice_of(&a.lattice)?;
    let grid = grid_angles(&a.grid)?;
    let angles = match a.t_a.as_deref().map(parse_angle).transpose()? {
        Some(t_a) => {
            let Angles::Scan { cut, .. } = grid else {
                unreachable!()
            };
            Angles::Point {
                t_a,
                t_b: cut.t_b(t_a),
            }
        }
        None => grid,
    };
    let graph =
        LatticeGraph::build(kind, extents).map_err(|e| ConfigError::Geometry(e.to_string()))?;
    let report = exact_report(&graph, &angles.pairs())?;
    let dir = output_dir(
        a.out,
        &format!("exact_{}_{}", kind.name(), size_label(kind, &extents)),
    );
    io::create_dir(&dir)?;
    write_json(&dir.join("report.json"), &report)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            let cube = p.observables.iter().find(|o| o.name == "cube_product");
            vec![
                fmt_f64(p.t_a),
                fmt_f64(p.t_b),
                opt(p.q),
                opt(p.q_closed_form),
                opt(cube.map(|c| c.enumerated)),
                opt(cube.map(|_| cube_product(p.t_a, p.t_b))),
                opt(cube.map(|_| (2.0 * p.t_a).sin().powi(6))),
                p.nishimori
                    .as_ref()
                    .map(|r| r.passed().to_string())
                    .unwrap_or_default(),
                p.passed().to_string(),
            ]
        })
        .collect();
    let header = [
        "t_a",
        "t_b",
        "q",
        "q_closed_form",
        "cube_product",
        "cube_product_closed_form",
        "sin6_2ta",
        "nishimori_checks_passed",
        "passed",
    ];
    write_table(&dir.join("exact.csv"), &header, &rows)?;
    let mut manifest = Manifest::new(
        "exact",
        1,
        ExactConfig {
            lattice: kind,
            extents,
            angles,
        },
    );
    manifest.artifacts = vec!["report.json".into(), "exact.csv".into()];
    write_json(&dir.join("manifest.json"), &manifest)?;
    eprintln!("wrote {}", dir.display());
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!(
            "exact checks failed; see {}",
            dir.join("report.json").display()
        )))
    }
}

/// Groups aggregated rows by system size.
pub fn datasets_from_rows(rows: &[io::AggregateRow]) -> Vec<Dataset> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|l| {
            let mut points: Vec<ScalingPoint> = rows
                .iter()
                .filter(|r| r.l == l)
                .map(|r| ScalingPoint {
                    t: r.t_a,
                    q: r.q,
                    err: r.q_err,
                })
                .collect();
            points.sort_by(|a, b| a.t.total_cmp(&b.t));
            Dataset {
                l: l as f64,
                points,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CollapseConfig {
    inputs: Vec<PathBuf>,
    window: (f64, f64),
    init: CollapseParams,
}

fn cmd_collapse(a: CollapseArgs) -> Result<(), CliError> {
    let window = (parse_angle(&a.window_min)?, parse_angle(&a.window_max)?);
    let init = CollapseParams {
        t_c: parse_angle(&a.init_tc)?,
        nu: a.init_nu,
        beta_over_nu: a.init_beta_nu,
    };
    let mut rows = Vec::new();
    for p in &a.inputs {
        rows.extend(read_aggregate(p)?);
    }
    let datasets = datasets_from_rows(&rows);
    let fit = collapse_fit(&datasets, window, init)?;
    let dir = output_dir(a.out, "collapse");
    io::create_dir(&dir)?;
    write_json(&dir.join("fit.json"), &fit)?;
    let mut table = Vec::new();
    for set in rescale(&datasets, &fit.params(), window) {
        for p in set {
            table.push(vec![
                format!("{}", p.l),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.dy),
            ]);
        }
    }
    write_table(&dir.join("collapse.csv"), &["L", "x", "y", "dy"], &table)?;
    let mut manifest = Manifest::new(
        "collapse",
        1,
        CollapseConfig {
            inputs: a.inputs.clone(),
            window,
            init,
        },
    );
    manifest.artifacts = vec!["fit.json".into(), "collapse.csv".into()];
    write_json(&dir.join("manifest.json"), &manifest)?;
    eprintln!(
        "t_c = {:.5}pi, nu = {:.4}, beta/nu = {:.4}, quality = {:.3}{}",
        fit.t_c / std::f64::consts::PI,
        fit.nu,
        fit.beta_over_nu,
        fit.quality,
        if fit.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    Ok(())
}

fn cmd_oned(a: OnedArgs) -> Result<(), CliError> {
    let angles = grid_angles(&a.grid)?;
    if a.sizes.is_empty() {
        return Err(ConfigError::Invalid("no chain lengths given".into()).into());
    }
    let mut header = vec!["t_a", "t_b", "L", "q_closed_form", "p_bond"];
    if a.sample {
        header.extend(["q", "q_err"]);
    }
    let mut rows = Vec::new();
    let mut configs = Vec::new();
    for &l in &a.sizes {
        let cfg = run_config(
            LatticeKind::Chain,
            weakmeas_core::Extents::line(l),
            angles.clone(),
            &a.chains,
            "oned",
        );
        let graph = if a.sample {
            Some(cfg.validate()?)
        } else {
            None
        };
        let pool = thread_pool(cfg.threads)?;
        for (i, (t_a, t_b)) in angles.pairs().into_iter().enumerate() {
            let r = oned_row(t_a, t_b, l)?;
            let mut row = vec![
                fmt_f64(t_a),
                fmt_f64(t_b),
                l.to_string(),
                fmt_f64(r.q),
                fmt_f64(r.p_bond),
            ];
            if let Some(g) = &graph {
                let res = pool.install(|| run_point(g, t_a, t_b, i, &options(&cfg)))?;
                row.extend([fmt_f64(res.summary.q.mean), fmt_f64(res.summary.q.stderr)]);
            }
            rows.push(row);
        }
        configs.push(cfg);
    }
    let dir = output_dir(a.chains.out.clone(), "oned");
    io::create_dir(&dir)?;
    write_table(&dir.join("oned.csv"), &header, &rows)?;
    let mut manifest = Manifest::new("oned", configs[0].threads, configs);
    manifest.artifacts = vec!["oned.csv".into()];
    write_json(&dir.join("manifest.json"), &manifest)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}
