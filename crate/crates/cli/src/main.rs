use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coauthnet::corpus::{write_jsonl, write_tagged, InputFormat};
use coauthnet::divergence::{decompose, Decomposition};
use coauthnet::graph::{ego_network, shrink, CoauthNetwork};
use coauthnet::io::choropleth::{render_choropleth_svg, Geometry};
use coauthnet::io::pajek::{read_net_file, write_net, write_partition};
use coauthnet::io::svg::render_network_svg;
use coauthnet::pipeline::{
    build_network, detect_communities, ingest, load_table, run, write_json, CommunitySection, IngestReport,
    NetworkSection, ReportHeader, RunConfig,
};
use coauthnet::stats::{compare_networks, ComparisonReport};
use coauthnet::synth::{generate, SynthConfig};
use coauthnet::Error;

const EXIT_INELIGIBLE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "coauthnet", version, about = "Co-authorship network analysis of bibliographic records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and normalize a corpus; write canonical JSON lines and a summary.
    Ingest(Common),
    /// Build the co-occurrence network and its statistics.
    Network(Common),
    /// Louvain communities of a network.
    Communities(NetArgs),
    /// QAP, Jaccard and share z-scores between two networks.
    Compare(CompareArgs),
    /// Ego network of one node, or of every node listed in a group file.
    Ego(EgoArgs),
    /// Collapse a group of nodes into one.
    Shrink(ShrinkArgs),
    /// Domestic versus international predictor test per unit.
    Kltest(Common),
    /// Network plot and verdict map as SVG.
    Map(Common),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Every stage end to end, with a JSON run report.
    Run(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file; repeat for several.
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,
    /// tagged or jsonl.
    #[arg(long)]
    format: Option<String>,
    /// Second corpus for comparisons; repeat for several.
    #[arg(long = "compare")]
    compare_inputs: Vec<PathBuf>,
    /// Country and state normalization table.
    #[arg(long)]
    table: Option<PathBuf>,
    /// country, us_state or org.
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    min_node_fractional: Option<f64>,
    #[arg(long)]
    min_edge_weight: Option<u64>,
    /// Organizations need strictly more items than this.
    #[arg(long)]
    min_items: Option<u64>,
    /// Keep the first record of a repeated id instead of failing.
    #[arg(long)]
    dedup: bool,
    /// Sets the Louvain, QAP and layout seeds at once.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated Louvain seeds.
    #[arg(long)]
    louvain_seeds: Option<String>,
    /// Leave isolated nodes out of community detection.
    #[arg(long)]
    drop_isolates: bool,
    #[arg(long)]
    qap_seed: Option<u64>,
    #[arg(long)]
    qap_permutations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    layout_seed: Option<u64>,
    #[arg(long)]
    layout_iterations: Option<usize>,
    /// Heaviest edges to draw, or `all`.
    #[arg(long)]
    map_top_edges: Option<String>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Polygon file for the verdict map.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> coauthnet::Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_kv_file(path)?;
        }
        let paths = |ps: &[PathBuf]| ps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",");
        let mut flags: Vec<(&str, String)> = Vec::new();
        if !self.inputs.is_empty() {
            flags.push(("inputs", paths(&self.inputs)));
        }
        if !self.compare_inputs.is_empty() {
            flags.push(("compare_inputs", paths(&self.compare_inputs)));
        }
        let mut opt = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k, v));
            }
        };
        opt("format", self.format.clone());
        opt("table", self.table.as_ref().map(|p| p.display().to_string()));
        opt("level", self.level.clone());
        opt("min_node_fractional", self.min_node_fractional.map(|v| v.to_string()));
        opt("min_edge_weight", self.min_edge_weight.map(|v| v.to_string()));
        opt("min_items", self.min_items.map(|v| v.to_string()));
        opt("dedup", self.dedup.then(|| "true".to_string()));
        opt("seed", self.seed.map(|v| v.to_string()));
        opt("louvain_seeds", self.louvain_seeds.clone());
        opt("drop_isolates", self.drop_isolates.then(|| "true".to_string()));
        opt("qap_seed", self.qap_seed.map(|v| v.to_string()));
        opt("qap_permutations", self.qap_permutations.map(|v| v.to_string()));
        opt("alpha", self.alpha.map(|v| v.to_string()));
        opt("layout_seed", self.layout_seed.map(|v| v.to_string()));
        opt("layout_iterations", self.layout_iterations.map(|v| v.to_string()));
        opt("map_top_edges", self.map_top_edges.clone());
        opt("top_k", self.top_k.map(|v| v.to_string()));
        opt("geometry", self.geometry.as_ref().map(|p| p.display().to_string()));
        opt("output_dir", self.out.as_ref().map(|p| p.display().to_string()));
        for (k, v) in flags {
            c.set(k, &v)?;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct NetArgs {
    /// Read the network from a .net file instead of building it from a corpus.
    #[arg(long)]
    net: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    /// First network as a .net file.
    #[arg(long)]
    net: Option<PathBuf>,
    /// Second network as a .net file.
    #[arg(long)]
    other_net: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EgoArgs {
    #[arg(long)]
    net: Option<PathBuf>,
    /// Focal node.
    #[arg(long)]
    node: Option<String>,
    /// File with one focal node per line.
    #[arg(long)]
    group: Option<PathBuf>,
    /// Drop links among the neighbors, leaving a star.
    #[arg(long)]
    remove_inside: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ShrinkArgs {
    #[arg(long)]
    net: Option<PathBuf>,
    /// File with one member per line.
    #[arg(long)]
    group: PathBuf,
    /// Key of the merged node.
    #[arg(long)]
    label: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 50)]
    countries: usize,
    #[arg(long, default_value_t = 500)]
    orgs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    universe_seed: u64,
    #[arg(long, default_value_t = 0.35)]
    international_rate: f64,
    /// tagged or jsonl.
    #[arg(long, default_value = "tagged")]
    format: String,
    #[arg(long, short = 'o')]
    output: PathBuf,
}

enum Failure {
    Input(Error),
    Ineligible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Undefined(msg) => Failure::Ineligible(msg),
            other => Failure::Input(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn prepare(config: &RunConfig) -> coauthnet::Result<()> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> coauthnet::Result<()>) -> coauthnet::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn read_group(path: &Path) -> coauthnet::Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read `{}`: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// A network from a .net file when given, otherwise built from the corpus.
fn obtain_network(net: Option<&Path>, config: &RunConfig) -> coauthnet::Result<CoauthNetwork> {
    match net {
        Some(path) => {
            fs::create_dir_all(&config.output_dir)?;
            read_net_file(path)
        }
        None => {
            prepare(config)?;
            let table = load_table(config.table.as_deref())?;
            let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
            Ok(build_network(&ing.citable(), config).network)
        }
    }
}

fn cmd_ingest(common: &Common) -> CmdResult {
    let config = common.config()?;
    prepare(&config)?;
    let table = load_table(config.table.as_deref())?;
    let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
    let dir = &config.output_dir;
    write_file(&dir.join("corpus.jsonl"), |w| write_jsonl(&ing.documents, w))?;
    #[derive(Serialize)]
    struct Diagnostics<'a> {
        files: &'a [coauthnet::pipeline::FileDiagnostics],
        addresses: &'a coauthnet::address::AddressDiagnostics,
        dropped_duplicates: &'a [String],
    }
    write_json(
        &Diagnostics {
            files: &ing.files,
            addresses: &ing.address_diagnostics,
            dropped_duplicates: &ing.dropped_duplicates,
        },
        dir.join("diagnostics.json"),
    )?;
    write_json(&IngestReport::new(ReportHeader::new("ingest", &config), &ing), dir.join("summary.json"))?;
    Ok(())
}

fn cmd_network(common: &Common) -> CmdResult {
    let config = common.config()?;
    prepare(&config)?;
    let table = load_table(config.table.as_deref())?;
    let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
    let stage = build_network(&ing.citable(), &config);
    let dir = &config.output_dir;
    write_file(&dir.join("network.net"), |w| write_net(&stage.network, w))?;
    write_file(&dir.join("entity_totals.csv"), |w| stage.totals.write_csv(w))?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: ReportHeader,
        network: NetworkSection,
    }
    write_json(
        &Report {
            header: ReportHeader::new("network", &config),
            network: stage.section,
        },
        dir.join("network_report.json"),
    )?;
    Ok(())
}

fn cmd_communities(args: &NetArgs) -> CmdResult {
    let config = args.common.config()?;
    let net = obtain_network(args.net.as_deref(), &config)?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: ReportHeader,
        status: &'static str,
        communities: Option<CommunitySection>,
    }
    let found = detect_communities(&net, &config.louvain_seeds, config.drop_isolates)?;
    if let Some(c) = &found {
        let keys: Vec<&str> = c.network.keys().collect();
        write_file(&config.output_dir.join("communities.clu"), |w| {
            write_partition(&c.outcome.partition, &keys, &keys, w)
        })?;
    }
    let report = Report {
        header: ReportHeader::new("communities", &config),
        status: if found.is_some() { "ok" } else { "no edges" },
        communities: found.map(|c| c.section),
    };
    write_json(&report, config.output_dir.join("communities.json"))?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CmdResult {
    let config = args.common.config()?;
    let (a, b) = match (&args.net, &args.other_net) {
        (Some(a), Some(b)) => {
            fs::create_dir_all(&config.output_dir)?;
            (read_net_file(a)?, read_net_file(b)?)
        }
        (None, None) => {
            if config.compare_inputs.is_empty() {
                return Err(Error::InvalidArgument("compare needs --compare inputs or two .net files".into()).into());
            }
            prepare(&config)?;
            let table = load_table(config.table.as_deref())?;
            let ia = ingest(&config.inputs, config.format, &table, config.dedup)?;
            let ib = ingest(&config.compare_inputs, config.format, &table, config.dedup)?;
            (
                build_network(&ia.citable(), &config).network,
                build_network(&ib.citable(), &config).network,
            )
        }
        _ => return Err(Error::InvalidArgument("give both --net and --other-net, or neither".into()).into()),
    };
    let comparison = compare_networks(&a, &b, config.qap_permutations, config.qap_seed, config.alpha)?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: ReportHeader,
        comparison: ComparisonReport,
    }
    write_json(
        &Report {
            header: ReportHeader::new("compare", &config),
            comparison,
        },
        config.output_dir.join("comparison.json"),
    )?;
    Ok(())
}

fn file_stem_for(key: &str) -> String {
    key.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn cmd_ego(args: &EgoArgs) -> CmdResult {
    let config = args.common.config()?;
    let mut egos: Vec<String> = args.node.iter().cloned().collect();
    if let Some(path) = &args.group {
        egos.extend(read_group(path)?);
    }
    if egos.is_empty() {
        return Err(Error::InvalidArgument("ego needs --node or --group".into()).into());
    }
    let net = obtain_network(args.net.as_deref(), &config)?;
    #[derive(Serialize)]
    struct EgoEntry {
        ego: String,
        file: String,
        n_nodes: usize,
        n_edges: usize,
    }
    let mut entries = Vec::new();
    for (k, ego) in egos.iter().enumerate() {
        let sub = ego_network(&net, ego, args.remove_inside)?;
        let file = if egos.len() == 1 {
            "ego.net".to_string()
        } else {
            format!("ego_{:03}_{}.net", k + 1, file_stem_for(ego))
        };
        write_file(&config.output_dir.join(&file), |w| write_net(&sub, w))?;
        entries.push(EgoEntry {
            ego: ego.clone(),
            file,
            n_nodes: sub.node_count(),
            n_edges: sub.edge_count(),
        });
    }
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: ReportHeader,
        remove_inside: bool,
        egos: Vec<EgoEntry>,
    }
    write_json(
        &Report {
            header: ReportHeader::new("ego", &config),
            remove_inside: args.remove_inside,
            egos: entries,
        },
        config.output_dir.join("ego.json"),
    )?;
    Ok(())
}

fn cmd_shrink(args: &ShrinkArgs) -> CmdResult {
    let config = args.common.config()?;
    let group = read_group(&args.group)?;
    let net = obtain_network(args.net.as_deref(), &config)?;
    let shrunk = shrink(&net, &group, &args.label)?;
    write_file(&config.output_dir.join("shrunk.net"), |w| write_net(&shrunk, w))?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: ReportHeader,
        label: String,
        group_size: usize,
        n_nodes_before: usize,
        n_nodes_after: usize,
        n_edges_after: usize,
    }
    write_json(
        &Report {
            header: ReportHeader::new("shrink", &config),
            label: args.label.clone(),
            group_size: group.len(),
            n_nodes_before: net.node_count(),
            n_nodes_after: shrunk.node_count(),
            n_edges_after: shrunk.edge_count(),
        },
        config.output_dir.join("shrink.json"),
    )?;
    Ok(())
}

fn kltest_outputs(config: &RunConfig) -> coauthnet::Result<Decomposition> {
    let table = load_table(config.table.as_deref())?;
    let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
    Ok(decompose(&ing.citable(), config.unit_level(), config.min_items))
}

fn cmd_kltest(common: &Common) -> CmdResult {
    let config = common.config()?;
    prepare(&config)?;
    let d = kltest_outputs(&config)?;
    let dir = &config.output_dir;
    write_file(&dir.join("verdicts.csv"), |w| d.write_verdict_csv(w))?;
    write_file(&dir.join("ineligible.csv"), |w| d.write_ineligible_csv(w))?;
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        header: ReportHeader,
        divergence: &'a Decomposition,
    }
    write_json(
        &Report {
            header: ReportHeader::new("kltest", &config),
            divergence: &d,
        },
        dir.join("kltest.json"),
    )?;
    if d.units.is_empty() {
        return Err(Failure::Ineligible("no unit has two or more eligible organizations".into()));
    }
    Ok(())
}

fn cmd_map(common: &Common) -> CmdResult {
    let config = common.config()?;
    prepare(&config)?;
    let table = load_table(config.table.as_deref())?;
    let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
    let citable = ing.citable();
    let stage = build_network(&citable, &config);
    let dir = &config.output_dir;
    if !stage.network.is_empty() {
        let found = detect_communities(&stage.network, &config.louvain_seeds, config.drop_isolates)?;
        let partition = found.as_ref().map(|c| c.partition_for(&stage.network));
        let svg = render_network_svg(&stage.network, &config.layout_config(), partition.as_ref())?;
        fs::write(dir.join("network.svg"), svg)?;
    }
    let d = decompose(&citable, config.unit_level(), config.min_items);
    let geometry = config.geometry.as_ref().map(Geometry::load).transpose()?;
    let ineligible: Vec<String> = d.ineligible.iter().map(|u| u.unit.clone()).collect();
    let map = render_choropleth_svg(&d.verdicts(), &ineligible, geometry.as_ref());
    fs::write(dir.join("verdict_map.svg"), &map.svg)?;
    for w in &map.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let format: InputFormat = args.format.parse()?;
    let config = SynthConfig {
        n_docs: args.docs,
        n_countries: args.countries,
        n_orgs: args.orgs,
        universe_seed: args.universe_seed,
        seed: args.seed,
        international_rate: args.international_rate,
        ..SynthConfig::default()
    };
    let docs = generate(&config, &coauthnet::address::NormalizationTable::builtin())?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_file(&args.output, |w| match format {
        InputFormat::Tagged => write_tagged(&docs, w),
        InputFormat::Jsonl => write_jsonl(&docs, w),
    })?;
    Ok(())
}

fn cmd_run(common: &Common) -> CmdResult {
    let config = common.config()?;
    let report = run(&config)?;
    for w in &report.map_warnings {
        eprintln!("warning: {w}");
    }
    if report.is_ineligible() {
        return Err(Failure::Ineligible("no unit has two or more eligible organizations".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(c) => cmd_ingest(c),
        Command::Network(c) => cmd_network(c),
        Command::Communities(a) => cmd_communities(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Ego(a) => cmd_ego(a),
        Command::Shrink(a) => cmd_shrink(a),
        Command::Kltest(c) => cmd_kltest(c),
        Command::Map(c) => cmd_map(c),
        Command::Synth(a) => cmd_synth(a),
        Command::Run(c) => cmd_run(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Ineligible(msg)) => {
            eprintln!("coauthnet: {msg}");
            ExitCode::from(EXIT_INELIGIBLE)
        }
        Err(Failure::Input(e)) => {
            eprintln!("coauthnet: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
