//! Command-line front end: single runs, parameter sweeps and channel tables,
//! all emitting CSV.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{classify, interference_factor, ChannelId};
use crate::config::{parse_config, ConfigErrors, ScenarioConfig, ScenarioError, TopologySpec};
use crate::engine::{corciar_run, run_traced, Protocol, RunOutput, Topology};
use crate::mac::{handle_rts, RtsMode, TrafficClass};
use crate::metrics::{classify_collision, median, CorReport};

pub const CSV_HEADER: &str =
    "scenario,seed,protocol,n_nodes,n_hops,throughput_kbps,delivery_ratio,mean_delay_ms,mean_rtt_ms,cor,collision_class";
pub const ROUTES_HEADER: &str = "node,destination,next_hop,hop_count,rtt_cost_ms,expires_at";

#[derive(Debug, Parser)]
#[command(name = "meshsim", version, about = "Multi-radio multi-channel mesh network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and print one CSV row per protocol.
    Run(RunArgs),
    /// Run a scenario over a hop-count or node-count axis and several seeds.
    Sweep(SweepArgs),
    /// Print channel separation, interference and RTS/CTS decision matrices.
    ChannelTable(OutArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file [default: standard output]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (same as --config)
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_file: Option<PathBuf>,
    /// Scenario file [default: built-in defaults]
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run seed, overriding the file [default: the file's seed, else 1]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
    /// Write the dispatched-event trace (time in s, node, action) here
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Write every node's final routing table here as CSV (times in s, costs
    /// in ms); with protocol = both the second phase is dumped
    #[arg(long, value_name = "PATH")]
    pub dump_routes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario file used as the base of every cell [default: built-in defaults]
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Hop counts for a chain sweep, e.g. 2,4,6,8 [default: none; give --hops or --nodes]
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        conflicts_with = "nodes",
        required_unless_present = "nodes"
    )]
    pub hops: Option<Vec<usize>>,
    /// Node counts for a random-topology sweep, e.g. 20,40,60 [default: none]
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    /// Seeds as a range `a..b` (inclusive) or a list `1,5,9`
    #[arg(long, value_name = "LIST", default_value = "1..10")]
    pub seeds: String,
    /// Add the 80 and 100 node points to a node sweep [default: off]
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Invalid(m) => CliError::Config(m),
            ScenarioError::Engine(e) => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(format!("{}:\n{e}", p.display())))
        }
    }
}

/// `a..b` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| format!("bad seed {x:?}"))).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed list {s:?} is empty"));
    }
    Ok(seeds)
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub seed: Option<u64>,
    pub protocol: String,
    pub n_nodes: usize,
    pub n_hops: Option<f64>,
    pub throughput_kbps: f64,
    pub delivery_ratio: Option<f64>,
    pub mean_delay_ms: Option<f64>,
    pub mean_rtt_ms: Option<f64>,
    pub cor: Option<f64>,
}

impl Row {
    fn from_run(scenario: &str, seed: u64, topo: &Topology, run: &RunOutput, cor: Option<&CorReport>) -> Row {
        Row {
            scenario: scenario.to_string(),
            seed: Some(seed),
            protocol: run.protocol.label().to_string(),
            n_nodes: topo.nodes.len(),
            n_hops: run.final_routes.first().and_then(|r| r.as_ref()).map(|p| (p.len() - 1) as f64),
            throughput_kbps: run.summary.throughput_kbps,
            delivery_ratio: run.summary.delivery_ratio,
            mean_delay_ms: run.summary.mean_e2e_delay_ms,
            mean_rtt_ms: run.summary.mean_rtt_ms,
            cor: cor.map(|c| c.cor),
        }
    }

    pub fn to_csv(&self) -> String {
        let class = self.cor.map(|c| classify_collision(c).to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{:.6},{},{},{},{},{}",
            self.scenario,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.protocol,
            self.n_nodes,
            fmt_num(self.n_hops),
            self.throughput_kbps,
            fmt_num(self.delivery_ratio),
            fmt_num(self.mean_delay_ms),
            fmt_num(self.mean_rtt_ms),
            fmt_num(self.cor),
            class
        )
    }
}

/// Outputs of one scenario execution, one per protocol run.
pub struct Executed {
    pub topology: Topology,
    pub runs: Vec<RunOutput>,
    pub cor: Option<CorReport>,
}

/// Runs the protocols a configuration asks for. The protocol under test
/// always runs after the baseline so it can start from the baseline's
/// link estimates; with `protocol = corciar` the baseline run is not
/// reported.
pub fn execute(cfg: &ScenarioConfig, trace: Option<&mut dyn Write>) -> Result<Executed, CliError> {
    let scenario = cfg.build()?;
    let (topo, params) = (scenario.topology, scenario.params);
    let protocols = cfg.protocols();
    let err = |e: crate::engine::EngineError| CliError::Runtime(e.to_string());
    let (runs, cor) = if protocols == [Protocol::AodvHop] {
        (vec![run_traced(&topo, &params, Protocol::AodvHop, None, trace).map_err(err)?], None)
    } else {
        let out = corciar_run(&topo, &params, trace).map_err(err)?;
        if protocols.len() == 2 {
            (vec![out.baseline, out.corciar], out.cor)
        } else {
            (vec![out.corciar], None)
        }
    };
    Ok(Executed { topology: topo, runs, cor })
}

/// CSV rows of an executed scenario, one per reported run.
pub fn rows_of(cfg: &ScenarioConfig, ex: &Executed) -> Vec<Row> {
    ex.runs
        .iter()
        .map(|r| {
            let cor = (r.protocol == Protocol::Corciar).then_some(ex.cor.as_ref()).flatten();
            Row::from_run(&cfg.name, cfg.seed, &ex.topology, r, cor)
        })
        .collect()
}

/// Header plus rows.
pub fn render_csv(rows: &[Row]) -> String {
    let mut csv = format!("{CSV_HEADER}\n");
    for r in rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    csv
}

pub fn routes_csv(run: &RunOutput) -> String {
    let mut out = format!("{ROUTES_HEADER}\n");
    for (node, e) in &run.route_tables {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6}",
            node, e.destination, e.next_hop, e.hop_count, e.rtt_cost, e.expires_at
        );
    }
    out
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes()).and_then(|_| s.flush()).map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let mut cfg = load_config(args.config_file.as_deref().or(args.config.as_deref()))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let mut trace_file = match &args.trace {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => None,
    };
    let ex = execute(&cfg, trace_file.as_mut().map(|w| w as &mut dyn Write))?;
    if let (Some(w), Some(p)) = (trace_file.as_mut(), &args.trace) {
        w.flush().map_err(|e| io_err(p, e))?;
    }
    if let Some(p) = &args.dump_routes {
        let last = ex.runs.last().expect("at least one run");
        std::fs::write(p, routes_csv(last)).map_err(|e| io_err(p, e))?;
    }
    let csv = render_csv(&rows_of(&cfg, &ex));
    write_out(args.out.out.as_deref(), &csv)?;
    Ok(csv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Hops(usize),
    Nodes(usize),
}

impl Axis {
    fn label(self) -> String {
        match self {
            Axis::Hops(h) => format!("hops{h}"),
            Axis::Nodes(n) => format!("nodes{n}"),
        }
    }

    fn apply(self, base: &ScenarioConfig, seed: u64) -> ScenarioConfig {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.name = format!("{}-{}", base.name, self.label());
        cfg.topology = match self {
            Axis::Hops(h) => TopologySpec::Chain(h + 1),
            Axis::Nodes(n) => TopologySpec::Random(n, None),
        };
        cfg
    }
}

/// Rows of a sweep: data rows in (axis, seed, protocol) order, then one
/// median row per axis value and protocol. Cells that fail are reported on
/// standard error and skipped.
pub fn sweep_rows(base: &ScenarioConfig, axis: &[Axis], seeds: &[u64]) -> Result<Vec<Row>, CliError> {
    let cells: Vec<(Axis, u64)> = axis.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let results: Vec<Result<Vec<Row>, CliError>> = cells
        .par_iter()
        .map(|&(a, s)| {
            let cfg = a.apply(base, s);
            execute(&cfg, None).map(|ex| rows_of(&cfg, &ex))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for ((a, s), r) in cells.iter().zip(results) {
        match r {
            Ok(rs) => rows.extend(rs),
            Err(e) => {
                failed += 1;
                eprintln!("cell {} seed {s} failed: {e}", a.label());
            }
        }
    }
    if failed == cells.len() {
        return Err(CliError::Runtime("every sweep cell failed".into()));
    }
    let mut medians = Vec::new();
    for &a in axis {
        let name = format!("{}-{}", base.name, a.label());
        for p in base.protocols() {
            let group: Vec<&Row> = rows.iter().filter(|r| r.scenario == name && r.protocol == p.label()).collect();
            if group.is_empty() {
                continue;
            }
            let med = |f: &dyn Fn(&Row) -> Option<f64>| median(&group.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            medians.push(Row {
                scenario: name.clone(),
                seed: None,
                protocol: format!("median:{}", p.label()),
                n_nodes: group[0].n_nodes,
                n_hops: med(&|r| r.n_hops),
                throughput_kbps: med(&|r| Some(r.throughput_kbps)).unwrap_or(0.0),
                delivery_ratio: med(&|r| r.delivery_ratio),
                mean_delay_ms: med(&|r| r.mean_delay_ms),
                mean_rtt_ms: med(&|r| r.mean_rtt_ms),
                cor: med(&|r| r.cor),
            });
        }
    }
    rows.extend(medians);
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let base = load_config(args.config.as_deref())?;
    let seeds = parse_seeds(&args.seeds).map_err(CliError::Config)?;
    let axis: Vec<Axis> = match (&args.hops, &args.nodes) {
        (Some(h), _) => {
            if let Some(&bad) = h.iter().find(|&&h| !(1..=10).contains(&h)) {
                return Err(CliError::Config(format!("hop count {bad} outside [1,10]")));
            }
            h.iter().map(|&h| Axis::Hops(h)).collect()
        }
        (None, Some(n)) => {
            let mut n = n.clone();
            if args.full {
                for extra in [80, 100] {
                    if !n.contains(&extra) {
                        n.push(extra);
                    }
                }
            }
            if let Some(&bad) = n.iter().find(|&&n| n < 2) {
                return Err(CliError::Config(format!("node count {bad} below 2")));
            }
            n.into_iter().map(Axis::Nodes).collect()
        }
        (None, None) => return Err(CliError::Config("sweep needs --hops or --nodes".into())),
    };
    let csv = render_csv(&sweep_rows(&base, &axis, &seeds)?);
    write_out(args.out.out.as_deref(), &csv)?;
    Ok(csv)
}

fn matrix(title: &str, cell: impl Fn(ChannelId, ChannelId) -> String) -> String {
    let chans: Vec<ChannelId> = ChannelId::all().collect();
    let mut out = format!("# {title}\nc1\\c2");
    for c in &chans {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for &a in &chans {
        out.push_str(&a.to_string());
        for &b in &chans {
            let _ = write!(out, ",{}", cell(a, b));
        }
        out.push('\n');
    }
    out
}

/// Channel matrices separated by blank lines. In the RTS/CTS matrices the
/// row is the requested channel and the column the receiver's single busy
/// local channel.
pub fn channel_tables() -> String {
    let mut blocks = vec![
        matrix("separation_class", |a, b| classify(a, b).to_string()),
        matrix("interference_factor", |a, b| format!("{:.6}", interference_factor(a, b))),
    ];
    for (class, cname) in [(TrafficClass::Qos, "qos"), (TrafficClass::DelayTolerant, "delay_tolerant")] {
        for mode in [RtsMode::Literal, RtsMode::Symmetric] {
            let title = format!("rts_{cname}_{}", mode.as_str());
            blocks.push(matrix(&title, |c1, local| handle_rts(class, c1, &[local], mode).to_string()));
        }
    }
    blocks.join("\n")
}

pub fn cmd_channel_table(args: &OutArgs) -> Result<String, CliError> {
    let text = channel_tables();
    write_out(args.out.as_deref(), &text)?;
    Ok(text)
}

/// Parses `args` and runs the command, returning the process exit code.
/// Usage errors count as configuration errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_cli(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ChannelTable(a) => cmd_channel_table(a),
    };
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
