//! End-to-end runs: ingest, networks, communities, comparison, predictor
//! test and maps, driven by a [`RunConfig`] and summarized in a JSON
//! [`RunReport`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::address::{normalize_documents, AddressDiagnostics, NormalizationTable, NormalizedDocument};
use crate::community::{louvain_best_of, LouvainConfig, LouvainOutcome, Partition};
use crate::corpus::{
    corpus_summary, dedup_by_id, ensure_unique_ids, parse_corpus, write_jsonl, CorpusSummary, Diagnostic, Document,
    InputFormat,
};
use crate::counting::{build_cooccurrence, build_incidence, fractional_totals, is_international, EntityLevel, EntityTotals};
use crate::divergence::{decompose, Decomposition, UnitLevel, DEFAULT_MIN_ITEMS};
use crate::error::{Error, Result};
use crate::graph::{centrality_report, threshold_filter, CoauthNetwork, NetworkParameters, NodeCentrality};
use crate::io::choropleth::{render_choropleth_svg, Geometry};
use crate::io::pajek::{write_net, write_partition};
use crate::io::svg::{render_network_svg, EdgeDisplay, LabelRule, LayoutConfig, NodeSizeRule};
use crate::stats::{compare_networks, ComparisonReport};

pub const TOOL_NAME: &str = "coauthnet";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: InputFormat,
    /// Second corpus for the comparison stage; skipped when empty.
    pub compare_inputs: Vec<PathBuf>,
    pub table: Option<PathBuf>,
    pub level: EntityLevel,
    pub min_node_fractional: f64,
    pub min_edge_weight: u64,
    pub min_items: u64,
    /// Keep the first of several records sharing an id instead of failing.
    pub dedup: bool,
    pub louvain_seeds: Vec<u64>,
    /// Run community detection without isolated nodes.
    pub drop_isolates: bool,
    pub qap_seed: u64,
    pub qap_permutations: usize,
    pub alpha: f64,
    pub layout_seed: u64,
    pub layout_iterations: usize,
    /// Show only the `k` heaviest edges (plus ties) on the network plot.
    pub map_top_edges: Option<usize>,
    pub top_k: usize,
    pub geometry: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            format: InputFormat::Tagged,
            compare_inputs: Vec::new(),
            table: None,
            level: EntityLevel::Country,
            min_node_fractional: 0.0,
            min_edge_weight: 0,
            min_items: DEFAULT_MIN_ITEMS,
            dedup: false,
            louvain_seeds: vec![1, 2, 3, 4, 5],
            drop_isolates: false,
            qap_seed: 42,
            qap_permutations: 1000,
            alpha: 0.05,
            layout_seed: 7,
            layout_iterations: 200,
            map_top_edges: Some(100),
            top_k: 20,
            geometry: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad value `{value}` for `{key}`"))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn join_paths(xs: &[PathBuf]) -> String {
    xs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub const KEYS: [&'static str; 21] = [
        "inputs",
        "format",
        "compare_inputs",
        "table",
        "level",
        "min_node_fractional",
        "min_edge_weight",
        "min_items",
        "dedup",
        "louvain_seeds",
        "drop_isolates",
        "qap_seed",
        "qap_permutations",
        "alpha",
        "layout_seed",
        "layout_iterations",
        "map_top_edges",
        "top_k",
        "geometry",
        "output_dir",
        "seed",
    ];

    /// Sets one field from its textual form. `seed` is shorthand for
    /// setting the Louvain, QAP and layout seeds together.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "inputs" | "input" => self.inputs = parse_list::<PathBuf>(key, value)?,
            "format" => self.format = value.parse()?,
            "compare_inputs" | "compare" => self.compare_inputs = parse_list::<PathBuf>(key, value)?,
            "table" => self.table = opt_path(value),
            "level" => self.level = value.parse()?,
            "min_node_fractional" => {
                let v: f64 = parse_value(key, value)?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument("min_node_fractional must be a nonnegative number".into()));
                }
                self.min_node_fractional = v;
            }
            "min_edge_weight" => self.min_edge_weight = parse_value(key, value)?,
            "min_items" => self.min_items = parse_value(key, value)?,
            "dedup" => self.dedup = parse_bool(key, value)?,
            "louvain_seeds" => self.louvain_seeds = parse_list(key, value)?,
            "drop_isolates" => self.drop_isolates = parse_bool(key, value)?,
            "qap_seed" => self.qap_seed = parse_value(key, value)?,
            "qap_permutations" => self.qap_permutations = parse_value(key, value)?,
            "alpha" => {
                let v: f64 = parse_value(key, value)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
                }
                self.alpha = v;
            }
            "layout_seed" => self.layout_seed = parse_value(key, value)?,
            "layout_iterations" => self.layout_iterations = parse_value(key, value)?,
            "map_top_edges" => {
                self.map_top_edges = match value {
                    "" | "all" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "top_k" => self.top_k = parse_value(key, value)?,
            "geometry" => self.geometry = opt_path(value),
            "output_dir" | "out" => self.output_dir = PathBuf::from(value),
            "seed" => {
                let s: u64 = parse_value(key, value)?;
                self.louvain_seeds = (0..5).map(|k| s.wrapping_add(k)).collect();
                self.qap_seed = s;
                self.layout_seed = s;
            }
            other => return Err(Error::InvalidArgument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, "expected `key = value`"))?;
            self.set(k.trim(), v).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_kv_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.apply_kv_str(&fs::read_to_string(path)?)
    }

    /// Every analytical setting in a fixed order, without the output
    /// directory.
    pub fn canonical_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("inputs", join_paths(&self.inputs)),
            ("format", self.format.to_string()),
            ("compare_inputs", join_paths(&self.compare_inputs)),
            ("table", self.table.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("level", self.level.as_str().to_string()),
            ("min_node_fractional", self.min_node_fractional.to_string()),
            ("min_edge_weight", self.min_edge_weight.to_string()),
            ("min_items", self.min_items.to_string()),
            ("dedup", self.dedup.to_string()),
            ("louvain_seeds", join(&self.louvain_seeds)),
            ("drop_isolates", self.drop_isolates.to_string()),
            ("qap_seed", self.qap_seed.to_string()),
            ("qap_permutations", self.qap_permutations.to_string()),
            ("alpha", self.alpha.to_string()),
            ("layout_seed", self.layout_seed.to_string()),
            ("layout_iterations", self.layout_iterations.to_string()),
            ("map_top_edges", self.map_top_edges.map_or("all".to_string(), |k| k.to_string())),
            ("top_k", self.top_k.to_string()),
            ("geometry", self.geometry.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ]
    }

    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical_pairs() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        format!("{:x}", h.finalize())
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            louvain: self.louvain_seeds.clone(),
            qap: self.qap_seed,
            layout: self.layout_seed,
        }
    }

    pub fn unit_level(&self) -> UnitLevel {
        match self.level {
            EntityLevel::UsState => UnitLevel::UsState,
            EntityLevel::Country | EntityLevel::Org => UnitLevel::Country,
        }
    }

    pub fn layout_config(&self) -> LayoutConfig {
        LayoutConfig {
            seed: self.layout_seed,
            iterations: self.layout_iterations,
            node_size_rule: NodeSizeRule::LogFractional,
            edge_display: self.map_top_edges.map_or(EdgeDisplay::All, EdgeDisplay::TopK),
            label_rule: LabelRule::All,
        }
    }

    /// Checks that the inputs exist and the settings are usable.
    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::InvalidArgument("no input files given".into()));
        }
        let paths = self
            .inputs
            .iter()
            .chain(&self.compare_inputs)
            .chain(self.table.iter())
            .chain(self.geometry.iter());
        for p in paths {
            if !p.is_file() {
                return Err(Error::InvalidArgument(format!("cannot read `{}`", p.display())));
            }
        }
        if self.louvain_seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one Louvain seed is required".into()));
        }
        if self.qap_permutations == 0 {
            return Err(Error::InvalidArgument("qap_permutations must be at least 1".into()));
        }
        if self.layout_iterations == 0 {
            return Err(Error::InvalidArgument("layout_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub louvain: Vec<u64>,
    pub qap: u64,
    pub layout: u64,
}

/// Identification block carried by every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seeds: Seeds,
}

impl ReportHeader {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ReportHeader {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: command.to_string(),
            config_hash: config.config_hash(),
            seeds: config.seeds(),
        }
    }
}

pub fn load_table(path: Option<&Path>) -> Result<NormalizationTable> {
    match path {
        Some(p) => NormalizationTable::load(p),
        None => Ok(NormalizationTable::builtin()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDiagnostics {
    pub path: String,
    pub n_records: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub documents: Vec<Document>,
    pub normalized: Vec<NormalizedDocument>,
    pub international: Vec<bool>,
    pub files: Vec<FileDiagnostics>,
    pub address_diagnostics: AddressDiagnostics,
    pub dropped_duplicates: Vec<String>,
    pub summary: CorpusSummary,
}

impl Ingested {
    /// Normalized articles, reviews and letters.
    pub fn citable(&self) -> Vec<NormalizedDocument> {
        self.normalized.iter().filter(|d| d.citable).cloned().collect()
    }
}

/// Parses and normalizes every file. Records repeating an id seen in an
/// earlier file are an error unless `dedup` is set.
pub fn ingest<P: AsRef<Path>>(paths: &[P], format: InputFormat, table: &NormalizationTable, dedup: bool) -> Result<Ingested> {
    let mut documents = Vec::new();
    let mut files = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot open `{}`: {e}", path.display()))
        })?);
        let out = parse_corpus(reader, format)?;
        files.push(FileDiagnostics {
            path: path.display().to_string(),
            n_records: out.documents.len(),
            diagnostics: out.diagnostics,
        });
        documents.extend(out.documents);
    }
    ingest_documents(documents, files, table, dedup)
}

pub fn ingest_documents(
    documents: Vec<Document>,
    files: Vec<FileDiagnostics>,
    table: &NormalizationTable,
    dedup: bool,
) -> Result<Ingested> {
    let (documents, dropped_duplicates) = if dedup {
        dedup_by_id(documents)
    } else {
        ensure_unique_ids(&documents)?;
        (documents, Vec::new())
    };
    let (normalized, address_diagnostics) = normalize_documents(&documents, table);
    let international: Vec<bool> = normalized.iter().map(is_international).collect();
    let summary = corpus_summary(&documents, &international)?;
    Ok(Ingested {
        documents,
        normalized,
        international,
        files,
        address_diagnostics,
        dropped_duplicates,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub summary: CorpusSummary,
    pub files: Vec<FileDiagnostics>,
    pub n_addresses_parsed: usize,
    pub n_addresses_unresolved: usize,
    pub dropped_duplicates: Vec<String>,
}

impl IngestReport {
    pub fn new(header: ReportHeader, ing: &Ingested) -> Self {
        IngestReport {
            header,
            summary: ing.summary.clone(),
            files: ing.files.clone(),
            n_addresses_parsed: ing.address_diagnostics.n_addresses,
            n_addresses_unresolved: ing.address_diagnostics.n_unresolved,
            dropped_duplicates: ing.dropped_duplicates.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkStage {
    pub totals: EntityTotals,
    /// Co-occurrence network after thresholds.
    pub network: CoauthNetwork,
    pub section: NetworkSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSection {
    /// `"ok"` or `"no network"` when no node survives the thresholds.
    pub status: &'static str,
    pub level: EntityLevel,
    pub min_node_fractional: f64,
    pub min_edge_weight: u64,
    pub parameters: NetworkParameters,
    pub top_by_betweenness: Vec<NodeCentrality>,
}

/// Counts entities over citable documents and builds the thresholded
/// co-occurrence network with its statistics.
pub fn build_network(citable: &[NormalizedDocument], config: &RunConfig) -> NetworkStage {
    let level = config.level;
    let matrix = build_incidence(citable, |a| level.entity_of(a));
    let totals = fractional_totals(&matrix);
    let full = build_cooccurrence(&matrix);
    let network = threshold_filter(&full, config.min_node_fractional, config.min_edge_weight, false);
    let report = centrality_report(&network);
    let section = NetworkSection {
        status: if network.is_empty() { "no network" } else { "ok" },
        level,
        min_node_fractional: config.min_node_fractional,
        min_edge_weight: config.min_edge_weight,
        top_by_betweenness: report.top_by_betweenness(config.top_k).into_iter().cloned().collect(),
        parameters: report.network,
    };
    NetworkStage { totals, network, section }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Community {
    pub id: usize,
    pub size: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunitySection {
    pub seeds_tried: Vec<u64>,
    pub best_seed: u64,
    pub modularity: f64,
    pub isolates_dropped: usize,
    pub n_communities: usize,
    pub communities: Vec<Community>,
}

#[derive(Debug, Clone)]
pub struct CommunityStage {
    /// The network the partition refers to; without isolates when they
    /// were dropped.
    pub network: CoauthNetwork,
    pub outcome: LouvainOutcome,
    pub section: CommunitySection,
}

impl CommunityStage {
    /// Community of every node of `full`, with nodes outside the detection
    /// network placed in singleton communities after the detected ones.
    pub fn partition_for(&self, full: &CoauthNetwork) -> Partition {
        let k = self.outcome.partition.k();
        let mut extra = 0;
        let raw: Vec<usize> = full
            .keys()
            .map(|key| match self.network.index_of(key) {
                Some(i) => self.outcome.partition.community_of(i),
                None => {
                    extra += 1;
                    k + extra - 1
                }
            })
            .collect();
        Partition::from_assignment(&raw)
    }
}

/// Best-of-seeds Louvain, optionally after removing isolates. `None` when
/// the network has no edges.
pub fn detect_communities(net: &CoauthNetwork, seeds: &[u64], drop_isolates: bool) -> Result<Option<CommunityStage>> {
    if net.edge_count() == 0 {
        return Ok(None);
    }
    let network = if drop_isolates { net.without_isolates() } else { net.clone() };
    let outcome = louvain_best_of(&network, seeds, &LouvainConfig::default())?;
    let communities = outcome
        .partition
        .members()
        .into_iter()
        .enumerate()
        .map(|(id, m)| Community {
            id: id + 1,
            size: m.len(),
            members: m.iter().map(|&i| network.node(i).key.clone()).collect(),
        })
        .collect();
    let section = CommunitySection {
        seeds_tried: seeds.to_vec(),
        best_seed: outcome.seed,
        modularity: outcome.modularity,
        isolates_dropped: net.node_count() - network.node_count(),
        n_communities: outcome.partition.k(),
        communities,
    };
    Ok(Some(CommunityStage {
        network,
        outcome,
        section,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub config: BTreeMap<&'static str, String>,
    pub corpus: CorpusSummary,
    pub n_addresses_unresolved: usize,
    pub dropped_duplicates: usize,
    pub network: NetworkSection,
    pub communities: Option<CommunitySection>,
    pub comparison: Option<ComparisonReport>,
    pub divergence: Decomposition,
    pub map_warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunReport {
    /// True when no unit received a verdict.
    pub fn is_ineligible(&self) -> bool {
        self.divergence.units.is_empty()
    }
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>> {
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Runs every stage and writes all artifacts plus `report.json` into the
/// output directory.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let table = load_table(config.table.as_deref())?;
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();

    let ing = ingest(&config.inputs, config.format, &table, config.dedup)?;
    {
        let mut w = create(dir, "corpus.jsonl", &mut outputs)?;
        write_jsonl(&ing.documents, &mut w)?;
        w.flush()?;
    }
    let citable = ing.citable();

    let stage = build_network(&citable, config);
    {
        let mut w = create(dir, "entity_totals.csv", &mut outputs)?;
        stage.totals.write_csv(&mut w)?;
        w.flush()?;
        let mut w = create(dir, "network.net", &mut outputs)?;
        write_net(&stage.network, &mut w)?;
        w.flush()?;
    }

    let communities = detect_communities(&stage.network, &config.louvain_seeds, config.drop_isolates)?;
    if let Some(c) = &communities {
        let keys: Vec<&str> = c.network.keys().collect();
        let mut w = create(dir, "communities.clu", &mut outputs)?;
        write_partition(&c.outcome.partition, &keys, &keys, &mut w)?;
        w.flush()?;
    }

    let comparison = if config.compare_inputs.is_empty() {
        None
    } else {
        let other = ingest(&config.compare_inputs, config.format, &table, config.dedup)?;
        let other_stage = build_network(&other.citable(), config);
        let mut w = create(dir, "compare.net", &mut outputs)?;
        write_net(&other_stage.network, &mut w)?;
        w.flush()?;
        Some(compare_networks(
            &stage.network,
            &other_stage.network,
            config.qap_permutations,
            config.qap_seed,
            config.alpha,
        )?)
    };

    let divergence = decompose(&citable, config.unit_level(), config.min_items);
    {
        let mut w = create(dir, "verdicts.csv", &mut outputs)?;
        divergence.write_verdict_csv(&mut w)?;
        w.flush()?;
        let mut w = create(dir, "ineligible.csv", &mut outputs)?;
        divergence.write_ineligible_csv(&mut w)?;
        w.flush()?;
    }

    if !stage.network.is_empty() {
        let partition = communities.as_ref().map(|c| c.partition_for(&stage.network));
        let svg = render_network_svg(&stage.network, &config.layout_config(), partition.as_ref())?;
        let mut w = create(dir, "network.svg", &mut outputs)?;
        w.write_all(svg.as_bytes())?;
        w.flush()?;
    }
    let geometry = config.geometry.as_ref().map(Geometry::load).transpose()?;
    let ineligible_units: Vec<String> = divergence.ineligible.iter().map(|u| u.unit.clone()).collect();
    let map = render_choropleth_svg(&divergence.verdicts(), &ineligible_units, geometry.as_ref());
    {
        let mut w = create(dir, "verdict_map.svg", &mut outputs)?;
        w.write_all(map.svg.as_bytes())?;
        w.flush()?;
    }

    outputs.push("report.json".to_string());
    let report = RunReport {
        header: ReportHeader::new("run", config),
        config: config.canonical_pairs().into_iter().collect(),
        corpus: ing.summary.clone(),
        n_addresses_unresolved: ing.address_diagnostics.n_unresolved,
        dropped_duplicates: ing.dropped_duplicates.len(),
        network: stage.section,
        communities: communities.map(|c| c.section),
        comparison,
        divergence,
        map_warnings: map.warnings,
        outputs,
    };
    write_json(&report, dir.join("report.json"))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_config_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_kv_str("# comment\ninputs = a.txt, b.txt\nlevel = us_state\nmin_items=5\nseed = 9\n")
            .unwrap();
        assert_eq!(c.inputs, vec![PathBuf::from("a.txt"), PathBuf::from("b.txt")]);
        assert_eq!(c.level, EntityLevel::UsState);
        assert_eq!(c.min_items, 5);
        assert_eq!(c.louvain_seeds, vec![9, 10, 11, 12, 13]);
        assert_eq!(c.qap_seed, 9);
        assert_eq!(c.unit_level(), UnitLevel::UsState);
        c.set("min_items", "10").unwrap();
        assert_eq!(c.min_items, 10);
        assert!(c.apply_kv_str("nonsense\n").is_err());
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("alpha", "1.5").is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.qap_seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn every_key_is_settable() {
        let mut c = RunConfig::default();
        for (k, v) in RunConfig::default().canonical_pairs() {
            c.set(k, &v).unwrap();
        }
        assert_eq!(c, RunConfig::default());
        for k in RunConfig::KEYS {
            let err = c.clone().set(k, "?").err().map(|e| e.to_string()).unwrap_or_default();
            assert!(!err.contains("unknown config key"), "{k}");
        }
    }
}
