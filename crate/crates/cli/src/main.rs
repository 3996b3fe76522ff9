use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ddsrecon::capture::{codec, ParticipantDatabase, ParticipantId};
use ddsrecon::intersection::{EdgeOracle, EdgeVerifier};
use ddsrecon::netsim::{emit_capture, generate_grid, generate_random, simulate, Scenario};
use ddsrecon::pdp::{differential_search, evaluate, PdpVariant};
use ddsrecon::permissions::{obfuscate_permissions, parse_permissions, serialize_permissions};
use ddsrecon::time::Timestamp;
use ddsrecon::topology::{
    find_path, heuristic_graph, isolate_source, isolate_target, min_cut_between, CutOutcome, CutResult,
    HeuristicGraph, TopicMatchMode,
};

/// Reconstruct and query Secure DDS data-bus topology from permission documents.
#[derive(Parser)]
#[command(name = "ddsrecon", version)]
struct Cli {
    /// Render results for people instead of as JSON.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and its capture.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Load capture files into a participant database.
    Ingest {
        /// Capture files; `-` reads standard input.
        #[arg(required = true)]
        captures: Vec<String>,
        #[arg(long, default_value = "jsonl")]
        codec: String,
        /// Existing database to extend.
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Build the heuristic participant graph.
    Graph {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Verify every edge at this instant (RFC 3339).
        #[arg(long)]
        verify_at: Option<String>,
    },
    /// Reachability and isolation queries.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Run KeepAlive propagation over a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Participants to remove; repeatable, or separated by `;`.
        #[arg(long)]
        remove: Vec<String>,
        /// JSON output of a cut query whose cut_nodes are removed.
        #[arg(long)]
        remove_file: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        /// Report only deliveries from this participant.
        #[arg(long)]
        origin: Option<String>,
        /// Report only deliveries to this participant.
        #[arg(long)]
        receiver: Option<String>,
    },
    /// Search for decisions where a vendor variant disagrees with the compliant PDP.
    DiffVendor {
        #[arg(long)]
        variant: String,
        #[arg(required = true)]
        permissions: Vec<PathBuf>,
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Replace expressions with keyed digests.
    Obfuscate {
        #[arg(long)]
        key: String,
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        directional: bool,
        #[command(flatten)]
        output: GenOutput,
    },
    Random {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edge_probability: f64,
        #[command(flatten)]
        output: GenOutput,
    },
}

#[derive(Args)]
struct GenOutput {
    #[arg(long)]
    seed: u64,
    /// Where to write the scenario text.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Where to write the capture; standard output when absent.
    #[arg(long)]
    capture: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QueryCommand {
    Path {
        #[command(flatten)]
        common: QueryArgs,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    IsolateSrc {
        #[command(flatten)]
        common: QueryArgs,
        #[arg(long)]
        from: String,
    },
    IsolateDst {
        #[command(flatten)]
        common: QueryArgs,
        #[arg(long)]
        to: String,
    },
    Cut {
        #[command(flatten)]
        common: QueryArgs,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    db: PathBuf,
    /// Evaluation instant (RFC 3339); defaults to now.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Fast,
}

impl From<Mode> for TopicMatchMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => TopicMatchMode::ExactIntersection,
            Mode::Fast => TopicMatchMode::FastFnmatch,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

enum Failure {
    /// Query unsatisfiable or no witness found.
    Unsatisfied(String),
    Input(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Unsatisfied(_) => 1,
            Failure::Input(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(input(path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read_file(path)?).map_err(input(path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, bytes).map_err(input(p.display())),
        None => {
            say(&String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

/// Writes to stdout. A closed pipe is not an error: the exit code still reports the result.
fn say(text: &str) {
    if let Err(e) = io::stdout().lock().write_all(text.as_bytes()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("ddsrecon: stdout: {e}");
        }
    }
}

macro_rules! sayln {
    ($($arg:tt)*) => {
        say(&format!("{}\n", format_args!($($arg)*)))
    };
}

fn print_json(value: &Value) {
    sayln!("{}", serde_json::to_string_pretty(value).expect("JSON value"));
}

fn timestamp(at: Option<&str>) -> Result<Timestamp, Failure> {
    match at {
        Some(text) => text.parse().map_err(input("--at")),
        None => Ok(Timestamp::now()),
    }
}

fn load_db(path: &Path) -> Result<ParticipantDatabase, Failure> {
    ParticipantDatabase::from_json(&read_text(path)?).map_err(input(path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Unsatisfied(m) | Failure::Input(m) | Failure::Invariant(m)) = &failure;
            eprintln!("ddsrecon: {m}");
            ExitCode::from(failure.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let human = cli.human;
    match cli.command {
        Command::Gen(GenCommand::Grid { rows, cols, directional, output }) => {
            let s = generate_grid(rows, cols, output.seed, directional).map_err(input("gen grid"))?;
            emit_scenario(&s, &output)
        }
        Command::Gen(GenCommand::Random { nodes, edge_probability, output }) => {
            let s = generate_random(nodes, edge_probability, output.seed).map_err(input("gen random"))?;
            emit_scenario(&s, &output)
        }
        Command::Ingest { captures, codec: name, db, out } => ingest(&captures, &name, db.as_deref(), &out, human),
        Command::Graph { db, mode, format, verify_at } => {
            let db = load_db(&db)?;
            let mut g = heuristic_graph(&db, mode.into());
            if let Some(at) = verify_at {
                let at = timestamp(Some(&at))?;
                g.verify_all(&EdgeOracle::new(&db), at)
                    .map_err(|e| Failure::Invariant(e.to_string()))?;
            }
            let text = match format {
                Format::Json => g.to_json(),
                Format::Dot => g.to_dot(),
            };
            write_out(None, text.as_bytes())
        }
        Command::Query(q) => query(q, human),
        Command::Simulate { scenario, remove, remove_file, rounds, origin, receiver } => {
            run_simulation(&scenario, &remove, remove_file.as_deref(), rounds, origin, receiver)
        }
        Command::DiffVendor { variant, permissions, at, budget } => diff_vendor(&variant, &permissions, at, budget, human),
        Command::Obfuscate { key, input: path, out } => {
            let perm = parse_permissions(&read_file(&path)?).map_err(input(path.display()))?;
            let hidden = obfuscate_permissions(&perm, key.as_bytes()).map_err(input(path.display()))?;
            write_out(out.as_deref(), &serialize_permissions(&hidden))
        }
    }
}

fn emit_scenario(s: &Scenario, output: &GenOutput) -> Outcome {
    if let Some(path) = &output.scenario {
        write_out(Some(path), s.to_text().as_bytes())?;
    }
    let capture = codec("jsonl").expect("built-in codec").encode(&emit_capture(s));
    write_out(output.capture.as_deref(), &capture)
}

fn ingest(captures: &[String], codec_name: &str, existing: Option<&Path>, out: &Path, human: bool) -> Outcome {
    let codec = codec(codec_name).map_err(input("--codec"))?;
    let mut db = match existing {
        Some(p) => load_db(p)?,
        None => ParticipantDatabase::new(),
    };
    let mut anomalies = Vec::new();
    for name in captures {
        let bytes = if name == "-" {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(input("stdin"))?;
            buf
        } else {
            read_file(Path::new(name))?
        };
        let records = codec.decode(&bytes).map_err(input(name))?;
        anomalies.extend(db.load(&records).map_err(input(name))?);
    }
    write_out(Some(out), db.to_json().as_bytes())?;
    if human {
        sayln!("{} participants, {} new anomalies", db.len(), anomalies.len());
    } else {
        print_json(&json!({ "participants": db.len(), "anomalies": anomalies }));
    }
    Ok(())
}

fn describe(db: &ParticipantDatabase, id: ParticipantId) -> Value {
    let subject = db.get(&id).map(|p| p.subject_name.clone()).unwrap_or_default();
    json!({ "id": id, "subject_name": subject })
}

fn name(db: &ParticipantDatabase, id: ParticipantId) -> String {
    db.get(&id)
        .map(|p| p.common_name().unwrap_or_else(|| p.subject_name.clone()))
        .unwrap_or_else(|| id.to_string())
}

fn query(q: QueryCommand, human: bool) -> Outcome {
    let (common, kind) = match &q {
        QueryCommand::Path { common, .. } => (common, "path"),
        QueryCommand::IsolateSrc { common, .. } => (common, "isolate-src"),
        QueryCommand::IsolateDst { common, .. } => (common, "isolate-dst"),
        QueryCommand::Cut { common, .. } => (common, "cut"),
    };
    let db = load_db(&common.db)?;
    let at = timestamp(common.at.as_deref())?;
    let resolve = |ident: &str| db.resolve(ident).map_err(input(ident));
    let g = heuristic_graph(&db, common.mode.into());
    let oracle = EdgeOracle::new(&db);
    let exhaustive = db.len() * db.len().saturating_sub(1);
    let invariant = |e: ddsrecon::topology::QueryError| Failure::Invariant(e.to_string());

    let cut = match q {
        QueryCommand::Path { from, to, .. } => {
            let (src, dst) = (resolve(&from)?, resolve(&to)?);
            let found = find_path(&g, &oracle, src, dst, at).map_err(invariant)?;
            let Some(path) = found else {
                return Err(Failure::Unsatisfied(format!("no verified path from {from} to {to}")));
            };
            for (pair, w) in path.nodes.windows(2).zip(&path.edge_witnesses) {
                let (a, b) = (&db.get(&pair[0]).expect("known").permissions, &db.get(&pair[1]).expect("known").permissions);
                if !w.validates(a, b, at) {
                    return Err(Failure::Invariant(format!("witness for {} -> {} does not re-validate", pair[0], pair[1])));
                }
            }
            if human {
                let names: Vec<String> = path.nodes.iter().map(|id| name(&db, *id)).collect();
                sayln!("{} hops: {}", path.nodes.len() - 1, names.join(" -> "));
                for (i, w) in path.edge_witnesses.iter().enumerate() {
                    sayln!("  hop {}: topic {:?} partition {:?} domain {}", i + 1, w.publisher_action.topic, w.publisher_action.partition, w.publisher_action.domain_id);
                }
                sayln!("oracle calls: {} of {exhaustive} pairs", oracle.solver_calls());
            } else {
                print_json(&json!({
                    "query": kind,
                    "at": at,
                    "mode": g.mode,
                    "hops": path.nodes.len() - 1,
                    "nodes": path.nodes.iter().map(|id| describe(&db, *id)).collect::<Vec<_>>(),
                    "edge_witnesses": path.edge_witnesses,
                    "oracle_calls": oracle.solver_calls(),
                    "exhaustive_pairs": exhaustive,
                }));
            }
            return Ok(());
        }
        QueryCommand::IsolateSrc { from, .. } => isolate_source(&g, &oracle, resolve(&from)?, at),
        QueryCommand::IsolateDst { to, .. } => isolate_target(&g, &oracle, resolve(&to)?, at),
        QueryCommand::Cut { from, to, .. } => min_cut_between(&g, &oracle, resolve(&from)?, resolve(&to)?, at),
    }
    .map_err(invariant)?;
    report_cut(&db, &g, &oracle, kind, at, &cut, exhaustive, human)
}

#[allow(clippy::too_many_arguments)]
fn report_cut(
    db: &ParticipantDatabase,
    g: &HeuristicGraph,
    oracle: &EdgeOracle,
    kind: &str,
    at: Timestamp,
    cut: &CutResult,
    exhaustive: usize,
    human: bool,
) -> Outcome {
    if human {
        match cut.outcome {
            CutOutcome::NoVertexCut => sayln!("no vertex cut: the endpoints share a verified direct edge"),
            CutOutcome::Cut => {
                let names: Vec<String> = cut.cut_nodes.iter().map(|id| name(db, *id)).collect();
                sayln!("cut of {}: {}", names.len(), names.join(", "));
            }
        }
        sayln!("oracle calls: {} of {exhaustive} pairs", oracle.solver_calls());
    } else {
        print_json(&json!({
            "query": kind,
            "at": at,
            "mode": g.mode,
            "outcome": cut.outcome,
            "certified": cut.certified,
            "cut_nodes": cut.cut_nodes.iter().map(|id| describe(db, *id)).collect::<Vec<_>>(),
            "oracle_calls": oracle.solver_calls(),
            "exhaustive_pairs": exhaustive,
        }));
    }
    match cut.outcome {
        CutOutcome::NoVertexCut => Err(Failure::Unsatisfied("no vertex cut exists: direct verified edge".into())),
        CutOutcome::Cut => Ok(()),
    }
}

/// Participant named by guid, label, subject name or common name.
fn scenario_participant(s: &Scenario, ident: &str) -> Result<ParticipantId, Failure> {
    s.participants
        .iter()
        .find(|p| {
            p.id.to_string() == ident
                || p.label == ident
                || p.permissions.subject_name() == ident
                || ddsrecon::capture::common_name(p.permissions.subject_name()).as_deref() == Some(ident)
        })
        .map(|p| p.id)
        .ok_or_else(|| Failure::Input(format!("unknown participant {ident:?}")))
}

fn run_simulation(
    path: &Path,
    remove: &[String],
    remove_file: Option<&Path>,
    rounds: usize,
    origin: Option<String>,
    receiver: Option<String>,
) -> Outcome {
    if rounds == 0 {
        return Err(Failure::Input("--rounds must be at least 1".into()));
    }
    let s = Scenario::from_text(&read_text(path)?).map_err(input(path.display()))?;
    let mut removed = BTreeSet::new();
    for ident in remove.iter().flat_map(|r| r.split(';')).map(str::trim).filter(|r| !r.is_empty()) {
        removed.insert(scenario_participant(&s, ident)?);
    }
    if let Some(file) = remove_file {
        let doc: Value = serde_json::from_str(&read_text(file)?).map_err(input(file.display()))?;
        let nodes = doc["cut_nodes"]
            .as_array()
            .ok_or_else(|| Failure::Input(format!("{}: no cut_nodes array", file.display())))?;
        for node in nodes {
            let id = node["id"]
                .as_str()
                .ok_or_else(|| Failure::Input(format!("{}: cut node without id", file.display())))?;
            removed.insert(scenario_participant(&s, id)?);
        }
    }
    let origin = origin.map(|o| scenario_participant(&s, &o)).transpose()?;
    let receiver = receiver.map(|r| scenario_participant(&s, &r)).transpose()?;
    let mut report = simulate(&s, &removed, rounds);
    let filtered = origin.is_some() || receiver.is_some();
    report
        .deliveries
        .retain(|d| origin.is_none_or(|o| d.origin == o) && receiver.is_none_or(|r| d.receiver == r));
    let label = |id: ParticipantId| s.participant(id).map_or_else(|| id.to_string(), |p| p.label.clone());
    say(&report.to_lines(label));
    if filtered && report.deliveries.is_empty() {
        return Err(Failure::Unsatisfied("no matching deliveries".into()));
    }
    Ok(())
}

fn diff_vendor(variant: &str, files: &[PathBuf], at: Option<String>, budget: usize, human: bool) -> Outcome {
    let variant: PdpVariant = variant.parse().map_err(input("--variant"))?;
    let at = timestamp(at.as_deref())?;
    let mut results = Vec::new();
    let mut found = 0usize;
    for path in files {
        let perm = parse_permissions(&read_file(path)?).map_err(input(path.display()))?;
        let witness = differential_search(&perm, PdpVariant::Compliant, variant, at, budget);
        if let Some(w) = &witness {
            let compliant = evaluate(&perm, &w.action, at, PdpVariant::Compliant).0;
            let vendor = evaluate(&perm, &w.action, at, variant).0;
            if compliant == vendor || (compliant, vendor) != (w.compliant, w.variant_outcome) {
                return Err(Failure::Invariant(format!("{}: witness does not re-validate", path.display())));
            }
            found += 1;
        }
        if human {
            match &witness {
                Some(w) => sayln!(
                    "{}: {} {:?} partition {:?} -> compliant {}, {variant} {}",
                    path.display(),
                    w.action.verb,
                    w.action.topic,
                    w.action.partition,
                    w.compliant,
                    w.variant_outcome
                ),
                None => sayln!("{}: no divergence", path.display()),
            }
        } else {
            results.push(json!({ "file": path.display().to_string(), "witness": witness }));
        }
    }
    if !human {
        print_json(&json!({ "variant": variant, "at": at, "divergent_files": found, "results": results }));
    }
    if found == 0 {
        return Err(Failure::Unsatisfied(format!("no divergence found for {variant}")));
    }
    Ok(())
}
