//! Command line interface: a thin adapter over the library API.
//!
//! Every subcommand loads the store, calls the same functions a library
//! consumer would, and prints the result — identical inputs through the CLI
//! and through the API yield identical answers. Only `ingest`, `distill`,
//! and `gen` write anything; the rest are read-only.
//!
//! Exit status: 0 on success, 1 for user/input errors (bad flags, missing
//! files, unparseable documents, unknown ids), 2 when persisting the store
//! or another output of ours fails. A closed stdout (`ckn dump | head`) is
//! a normal way for a pipeline to stop reading, not an error.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use ckn_core::{
    campaign_instances, cosine_similarity, distance_similarity, distill::status_id,
    distill_campaign, encode_snapshot, find, find_exact_run, on_sweep_group_complete,
    AttributeQuery, DetailLevel, GraphStore, LineageGraph, NodeId, NodeKind, SchemaRegistry,
    Signature, SimilarityMatrix, SimilarityMetric, GRAY_SCOTT_SCHEMA,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::generate_campaign;
use crate::ingest_dir::DirectoryIngestor;
use crate::matrix_io::{matrix_to_pgm, matrix_to_tsv};
use crate::query_file::{read_query_file, QueryRequest};
use crate::spec_file::read_spec;
use crate::store_io::{load_store, save_store};

#[derive(Parser)]
#[command(
    name = "ckn",
    version,
    about = "Campaign knowledge graph: ingest runs, trace lineage, compare sweeps"
)]
struct Cli {
    /// Store file holding the graph (created on first write).
    #[arg(long, global = true, env = "CKN_STORE", value_name = "FILE")]
    store: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory of campaign specs (.json) and run logs (.log).
    Ingest {
        /// Directory to scan.
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
        /// `post` scans once and exits; `poll` rescans until interrupted.
        #[arg(long, value_enum, default_value_t = Mode::Post)]
        mode: Mode,
        /// Pause between scans in poll mode.
        #[arg(long, value_name = "MS", default_value_t = 1000)]
        interval_ms: u64,
    },
    /// Look up nodes and walk provenance.
    Query {
        /// Read the request from an XML query document instead of flags.
        #[arg(long, value_name = "FILE")]
        file: Option<PathBuf>,
        /// Output as tab-separated rows or a JSON document.
        #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
        format: Format,
        #[command(subcommand)]
        op: Option<QueryOp>,
    },
    /// Compare runs by their parameter signatures.
    Sim {
        /// Feature schema the signatures are built from.
        #[arg(long, global = true, default_value = GRAY_SCOTT_SCHEMA)]
        schema: String,
        /// Output as tab-separated rows or a JSON document.
        #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
        format: Format,
        #[command(subcommand)]
        op: SimOp,
    },
    /// Roll sweeps up into summary and status nodes.
    Distill {
        /// Campaign id to distill (all groups, then the campaign status).
        #[arg(long)]
        campaign: Option<String>,
        /// Single sweep-group id to distill instead of the whole campaign.
        #[arg(long)]
        group: Option<String>,
    },
    /// Run the reaction-diffusion harness over a campaign spec.
    Gen {
        /// Campaign spec file (JSON).
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Directory the run artifacts are written into.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Print the store snapshot to stdout.
    Dump,
}

#[derive(Subcommand)]
enum QueryOp {
    /// Find nodes by name substring and/or exact property values.
    Find {
        /// Substring matched against node names.
        #[arg(long)]
        name: Option<String>,
        /// Property filter KEY=VALUE; repeatable, all must hold.
        #[arg(long = "attr", value_name = "KEY=VALUE")]
        attrs: Vec<String>,
        /// Node kind to search; repeatable. Default: every kind.
        #[arg(long = "kind", value_name = "KIND")]
        kinds: Vec<String>,
    },
    /// Ancestors and descendants of an entity, merged.
    Lineage(LineageArgs),
    /// Everything the entity was (transitively) derived from.
    Ancestors(LineageArgs),
    /// Everything (transitively) derived from the entity.
    Descendants(LineageArgs),
    /// Alias of `ancestors`.
    Sources(LineageArgs),
    /// Alias of `descendants`.
    Products(LineageArgs),
    /// Instances of a campaign whose parameters equal the given map exactly.
    Exact {
        /// Campaign id to search within.
        #[arg(long)]
        campaign: String,
        /// Parameter KEY=VALUE; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

#[derive(Args)]
struct LineageArgs {
    /// Entity id the walk is anchored at.
    #[arg(long)]
    entity: String,
    /// `fine` keeps activities and agents; `coarse` collapses to entities.
    #[arg(long, value_enum, default_value_t = Detail::Fine)]
    detail: Detail,
}

#[derive(Subcommand)]
enum SimOp {
    /// Print one instance's signature.
    Signature {
        /// Instance id.
        #[arg(long)]
        instance: String,
    },
    /// Similarity between two instances.
    Pair {
        /// First instance id.
        #[arg(long)]
        a: String,
        /// Second instance id.
        #[arg(long)]
        b: String,
        /// cosine, euclidean, or manhattan.
        #[arg(long)]
        metric: String,
    },
    /// Pairwise similarity over every instance of a campaign.
    Matrix {
        /// Campaign id.
        #[arg(long)]
        campaign: String,
        /// cosine, euclidean, or manhattan.
        #[arg(long)]
        metric: String,
        /// Write the matrix to this file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Also render the matrix as a PGM heatmap.
        #[arg(long, value_name = "FILE")]
        heatmap: Option<PathBuf>,
    },
    /// Instances of a campaign closest to a target parameter point.
    Nearest {
        /// Campaign id to search within.
        #[arg(long)]
        campaign: String,
        /// cosine, euclidean, or manhattan.
        #[arg(long)]
        metric: String,
        /// Target feature KEY=VALUE; one per schema feature.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// How many neighbours to report.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Post,
    Poll,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Detail {
    Fine,
    Coarse,
}

impl Detail {
    fn level(self) -> DetailLevel {
        match self {
            Detail::Fine => DetailLevel::Fine,
            Detail::Coarse => DetailLevel::Coarse,
        }
    }
}

/// Parse the command line, run it, and return the process exit status.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io::stdout(), "{err}");
                    0
                }
                _ => {
                    let _ = write!(io::stderr(), "{err}");
                    1
                }
            };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(()) => {
            let _ = out.flush();
            0
        }
        // The reader went away (`ckn dump | head`); stop quietly like any
        // other well-behaved filter.
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(err) => {
            report(format_args!("error: {err}"));
            err.exit_code()
        }
    }
}

/// Best-effort stderr line; a closed stderr must not panic a report path.
fn report(message: std::fmt::Arguments<'_>) {
    let _ = writeln!(io::stderr(), "{message}");
}

fn stdout_err(source: io::Error) -> Error {
    Error::io("<stdout>", source)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest { dir, mode, interval_ms } => {
            let store_path = require_store(&cli.store)?;
            cmd_ingest(store_path, &dir, mode, interval_ms, out)
        }
        Command::Query { file, format, op } => {
            let store = load_store(require_store(&cli.store)?)?;
            match (file, op) {
                (Some(_), Some(_)) => {
                    Err(Error::usage("--file and a query subcommand are mutually exclusive"))
                }
                (None, None) => {
                    Err(Error::usage("query needs a subcommand or --file <FILE>; see ckn query --help"))
                }
                (Some(path), None) => cmd_query_file(&store, &path, format, out),
                (None, Some(op)) => cmd_query(&store, op, format, out),
            }
        }
        Command::Sim { schema, format, op } => {
            let store = load_store(require_store(&cli.store)?)?;
            cmd_sim(&store, &schema, format, op, out)
        }
        Command::Distill { campaign, group } => {
            let store_path = require_store(&cli.store)?;
            cmd_distill(store_path, campaign, group, out)
        }
        Command::Gen { spec, out: out_dir } => cmd_gen(&spec, &out_dir, out),
        Command::Dump => {
            let store = load_store(require_store(&cli.store)?)?;
            write!(out, "{}", encode_snapshot(&store)).map_err(stdout_err)?;
            Ok(())
        }
    }
}

fn require_store(store: &Option<PathBuf>) -> Result<&Path> {
    store
        .as_deref()
        .ok_or_else(|| Error::usage("no store given: pass --store <FILE> or set CKN_STORE"))
}

/// The exactly-once ledger lives next to the store, never in the watched dir.
fn ledger_path(store_path: &Path) -> PathBuf {
    let mut name = store_path.as_os_str().to_os_string();
    name.push(".ingested");
    PathBuf::from(name)
}

fn split_pair(raw: &str) -> Result<(String, String)> {
    match raw.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(Error::usage(format!("expected KEY=VALUE, got {raw:?}"))),
    }
}

fn split_pairs(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter().map(|r| split_pair(r)).collect()
}

fn epoch_seconds() -> i64 {
    match SystemTime::now().duration_since(UNIX_EPOCH) {
        Ok(elapsed) => elapsed.as_secs() as i64,
        Err(_) => 0,
    }
}

// ---------------------------------------------------------------- ingest --

fn cmd_ingest(
    store_path: &Path,
    dir: &Path,
    mode: Mode,
    interval_ms: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let mut store = load_store(store_path)?;
    let mut ingestor = DirectoryIngestor::new(dir, ledger_path(store_path))?;
    loop {
        let report = ingestor.scan_once(&mut store)?;
        if report.changed() {
            save_store(store_path, &store)?;
        }
        for (path, message) in &report.errors {
            self::report(format_args!("{}: {message}", path.display()));
        }
        writeln!(out, "{}", report.summary_line()).map_err(stdout_err)?;
        if mode == Mode::Post {
            return Ok(());
        }
        out.flush().map_err(stdout_err)?;
        std::thread::sleep(std::time::Duration::from_millis(interval_ms));
    }
}

// ----------------------------------------------------------------- query --

fn cmd_query(store: &GraphStore, op: QueryOp, format: Format, out: &mut dyn Write) -> Result<()> {
    match op {
        QueryOp::Find { name, attrs, kinds } => {
            let query = AttributeQuery::new(name, split_pairs(&attrs)?)?;
            let kinds = parse_kinds(&kinds)?;
            let result = find(store, &query, &kinds);
            print_ids(&result.matches, format, out)
        }
        QueryOp::Lineage(args) => {
            let graph = ckn_core::lineage(store, &node_id(&args.entity), args.detail.level())?;
            print_lineage(&graph, format, out)
        }
        QueryOp::Ancestors(args) | QueryOp::Sources(args) => {
            let graph = ckn_core::sources(store, &node_id(&args.entity), args.detail.level())?;
            print_lineage(&graph, format, out)
        }
        QueryOp::Descendants(args) | QueryOp::Products(args) => {
            let graph = ckn_core::products(store, &node_id(&args.entity), args.detail.level())?;
            print_lineage(&graph, format, out)
        }
        QueryOp::Exact { campaign, params } => {
            let params: BTreeMap<String, String> = split_pairs(&params)?.into_iter().collect();
            let matches = find_exact_run(store, &params, &node_id(&campaign))?;
            print_ids(&matches, format, out)
        }
    }
}

fn cmd_query_file(
    store: &GraphStore,
    path: &Path,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    match read_query_file(path)? {
        QueryRequest::Find { name, attributes } => {
            let query = AttributeQuery::new(name, attributes)?;
            let result = find(store, &query, &NodeKind::ALL.into_iter().collect());
            print_ids(&result.matches, format, out)
        }
        QueryRequest::Lineage { entity, detail } => {
            print_lineage(&ckn_core::lineage(store, &entity, detail)?, format, out)
        }
        QueryRequest::Sources { entity, detail } => {
            print_lineage(&ckn_core::sources(store, &entity, detail)?, format, out)
        }
        QueryRequest::Products { entity, detail } => {
            print_lineage(&ckn_core::products(store, &entity, detail)?, format, out)
        }
    }
}

fn node_id(raw: &str) -> NodeId {
    NodeId::from(raw.to_string())
}

/// Node kinds on the command line match case-insensitively; the strict
/// CamelCase spelling is only required inside snapshots.
fn parse_kinds(raw: &[String]) -> Result<std::collections::BTreeSet<NodeKind>> {
    if raw.is_empty() {
        return Ok(NodeKind::ALL.into_iter().collect());
    }
    raw.iter()
        .map(|k| {
            NodeKind::ALL
                .into_iter()
                .find(|kind| kind.as_str().eq_ignore_ascii_case(k))
                .ok_or_else(|| Error::usage(format!("unknown node kind {k:?}")))
        })
        .collect()
}

fn print_ids(ids: &[NodeId], format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Tsv => {
            for id in ids {
                writeln!(out, "{id}").map_err(stdout_err)?;
            }
        }
        Format::Json => {
            let doc = serde_json::json!({
                "matches": ids.iter().map(|id| id.as_str()).collect::<Vec<_>>(),
                "total": ids.len(),
            });
            writeln!(out, "{doc:#}").map_err(stdout_err)?;
        }
    }
    Ok(())
}

fn print_lineage(graph: &LineageGraph, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Tsv => {
            for node in &graph.nodes {
                writeln!(out, "node\t{}\t{}", node.id, node.kind).map_err(stdout_err)?;
            }
            for edge in &graph.edges {
                writeln!(out, "edge\t{}\t{}\t{}", edge.src, edge.dst, edge.relation)
                    .map_err(stdout_err)?;
            }
        }
        Format::Json => {
            let nodes: Vec<_> = graph
                .nodes
                .iter()
                .map(|n| {
                    serde_json::json!({
                        "id": n.id.as_str(),
                        "kind": n.kind.as_str(),
                        "properties": n.properties,
                    })
                })
                .collect();
            let edges: Vec<_> = graph
                .edges
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "src": e.src.as_str(),
                        "dst": e.dst.as_str(),
                        "relation": e.relation.to_string(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "root": graph.root.as_str(),
                "nodes": nodes,
                "edges": edges,
            });
            writeln!(out, "{doc:#}").map_err(stdout_err)?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------------- sim --

fn cmd_sim(
    store: &GraphStore,
    schema: &str,
    format: Format,
    op: SimOp,
    out: &mut dyn Write,
) -> Result<()> {
    let registry = SchemaRegistry::builtin();
    match op {
        SimOp::Signature { instance } => {
            let sig = ckn_core::signature_of(store, &node_id(&instance), &registry, schema)?;
            print_signature(&sig, format, out)
        }
        SimOp::Pair { a, b, metric } => {
            let metric = SimilarityMetric::from_str(&metric)?;
            let sig_a = ckn_core::signature_of(store, &node_id(&a), &registry, schema)?;
            let sig_b = ckn_core::signature_of(store, &node_id(&b), &registry, schema)?;
            let similarity = pair_similarity(&sig_a, &sig_b, metric)?;
            match format {
                Format::Tsv => writeln!(out, "{similarity}").map_err(stdout_err)?,
                Format::Json => {
                    let doc = serde_json::json!({
                        "a": a, "b": b,
                        "metric": metric.as_str(),
                        "similarity": similarity,
                    });
                    writeln!(out, "{doc:#}").map_err(stdout_err)?;
                }
            }
            Ok(())
        }
        SimOp::Matrix { campaign, metric, out: out_path, heatmap } => {
            let metric = SimilarityMetric::from_str(&metric)?;
            let instances = campaign_instances(store, &node_id(&campaign))?;
            let matrix = ckn_core::similarity_matrix(store, &instances, metric, &registry, schema)?;
            if let Some(path) = &heatmap {
                std::fs::write(path, matrix_to_pgm(&matrix))
                    .map_err(|e| Error::persist(path, e))?;
            }
            match out_path {
                Some(path) => {
                    std::fs::write(&path, matrix_to_tsv(&matrix))
                        .map_err(|e| Error::persist(&path, e))?;
                    Ok(())
                }
                None => print_matrix(&matrix, format, out),
            }
        }
        SimOp::Nearest { campaign, metric, params, top_k } => {
            let metric = SimilarityMetric::from_str(&metric)?;
            let target = target_signature(schema, &registry, &params)?;
            let ranked =
                ckn_core::find_similar(store, &target, &node_id(&campaign), metric, &registry, top_k)?;
            match format {
                Format::Tsv => {
                    for (id, similarity) in &ranked {
                        writeln!(out, "{id}\t{similarity}").map_err(stdout_err)?;
                    }
                }
                Format::Json => {
                    let rows: Vec<_> = ranked
                        .iter()
                        .map(|(id, s)| {
                            serde_json::json!({ "id": id.as_str(), "similarity": s })
                        })
                        .collect();
                    writeln!(out, "{:#}", serde_json::Value::Array(rows)).map_err(stdout_err)?;
                }
            }
            Ok(())
        }
    }
}

/// Distance normalization for a lone pair spans just those two signatures.
fn pair_similarity(a: &Signature, b: &Signature, metric: SimilarityMetric) -> Result<f64> {
    match metric.distance() {
        None => Ok(cosine_similarity(a, b)?),
        Some(distance) => {
            let norm = ckn_core::build_norm_context(&[a.clone(), b.clone()])?;
            Ok(distance_similarity(a, b, distance, &norm)?)
        }
    }
}

/// Build the target point for `sim nearest` from KEY=VALUE flags; every
/// schema feature must be supplied and numeric.
fn target_signature(
    schema: &str,
    registry: &SchemaRegistry,
    params: &[String],
) -> Result<Signature> {
    let given: BTreeMap<String, String> = split_pairs(params)?.into_iter().collect();
    let mut features = Vec::new();
    for name in registry.feature_names(schema)? {
        let raw = given
            .get(name)
            .ok_or_else(|| Error::usage(format!("missing --param {name}=<value>")))?;
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::usage(format!("--param {name}={raw}: not a number")))?;
        features.push((name.to_string(), value));
    }
    Ok(Signature::new(schema, features)?)
}

fn print_signature(sig: &Signature, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Tsv => {
            writeln!(out, "# schema={}", sig.schema()).map_err(stdout_err)?;
            for (name, value) in sig.features() {
                writeln!(out, "{name}\t{value}").map_err(stdout_err)?;
            }
        }
        Format::Json => {
            let mut features = serde_json::Map::new();
            for (name, value) in sig.features() {
                features.insert(name.clone(), serde_json::json!(value));
            }
            let doc = serde_json::json!({
                "schema": sig.schema(),
                "features": features,
            });
            writeln!(out, "{doc:#}").map_err(stdout_err)?;
        }
    }
    Ok(())
}

fn print_matrix(matrix: &SimilarityMatrix, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Tsv => write!(out, "{}", matrix_to_tsv(matrix)).map_err(stdout_err)?,
        Format::Json => {
            let doc = serde_json::json!({
                "metric": matrix.metric.as_str(),
                "schema": matrix.schema,
                "ids": matrix.ids.iter().map(|id| id.as_str()).collect::<Vec<_>>(),
                "values": matrix.values,
            });
            writeln!(out, "{doc:#}").map_err(stdout_err)?;
        }
    }
    Ok(())
}

// --------------------------------------------------------------- distill --

fn cmd_distill(
    store_path: &Path,
    campaign: Option<String>,
    group: Option<String>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut store = load_store(store_path)?;
    let now = epoch_seconds();
    let status = match (campaign, group) {
        (Some(campaign), None) => distill_campaign(&mut store, &node_id(&campaign), now)?,
        (campaign, Some(group)) => {
            // A bare group name is qualified by the campaign when both are given.
            let group_id = match campaign {
                Some(campaign) => node_id(&format!("{campaign}/{group}")),
                None => node_id(&group),
            };
            on_sweep_group_complete(&mut store, &group_id, now)?;
            status_id(&group_id)
        }
        (None, None) => {
            return Err(Error::usage("distill needs --campaign and/or --group"));
        }
    };
    save_store(store_path, &store)?;
    let node = store.get_node(&status)?;
    writeln!(out, "{status}").map_err(stdout_err)?;
    for (key, value) in &node.properties {
        writeln!(out, "{key}={value}").map_err(stdout_err)?;
    }
    Ok(())
}

// ------------------------------------------------------------------- gen --

fn cmd_gen(spec_path: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let spec = read_spec(spec_path)?;
    let generation = generate_campaign(&spec, out_dir)?;
    for (instance, reason) in &generation.failures {
        report(format_args!("{instance}: {reason}"));
    }
    writeln!(out, "{}", generation.summary_line()).map_err(stdout_err)?;
    Ok(())
}
