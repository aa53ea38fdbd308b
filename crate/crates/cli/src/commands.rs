use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use looksearch::datasetgen::{generate_single_product_dataset, CorpusItem, SceneDistribution};
use looksearch::evalkit::detection::{
    detection_map, detection_pr, detection_pr_per_class, per_class_ap, rollup_categories,
    select_operating_threshold, select_operating_thresholds_per_class, DetectionSet, ImageBoxes,
    DEFAULT_IOU_THRESHOLD,
};
use looksearch::evalkit::labels::{
    agreement_by_question, calibration_rate, label_accuracy, label_consistency, validate_label_events, GoldenAnswer,
    LabelEvent, DEFAULT_AGREEMENT_THRESHOLD,
};
use looksearch::evalkit::{relevance_at_k, retrieval_precision_at_k, MatchPair, RelevanceRating, RetrievalEvalParams};
use looksearch::model::{parse_product_corpus, read_jsonl};
use looksearch::{build_index, load_index, parse_restriction, save_index, Error, LshHasher, Metric};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::EngineConfig;
use crate::request::{RequestError, SearchRequest};
use crate::server::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "looksearch", version, about = "LSH retrieval engine with attribute restrictions")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index snapshot from a product corpus (JSONL)
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run search requests (JSONL, `-` for stdin) against a snapshot
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value = "-")]
        queries: PathBuf,
        /// Restriction applied to every request, replacing its own `restrict`
        #[arg(long)]
        restrict: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        search: SearchFlags,
    },
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Label consistency, accuracy and calibration rate
    LabelMetrics {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_AGREEMENT_THRESHOLD)]
        threshold: f64,
    },
    /// Generate the weakly supervised single-product dataset
    GenSingleProduct {
        #[arg(long)]
        corpus: PathBuf,
        /// JSON object: category -> maximum number of examples
        #[arg(long)]
        caps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a snapshot over HTTP
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long)]
        bind: Option<IpAddr>,
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Args)]
struct SearchFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    max_candidates: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Retrieval P@K over ground truths plus distractors
    Retrieval {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10, 20])]
        k: Vec<usize>,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Detection precision / recall at an F1-selected operating point, and mAP
    Detection(DetectionArgs),
    /// Aggregate human relevance ratings over the top K slots
    Relevance {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Debug, Args)]
struct DetectionArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Validation ground truth used to select the operating threshold
    #[arg(long, requires = "pred_val")]
    gt_val: Option<PathBuf>,
    #[arg(long, requires = "gt_val")]
    pred_val: Option<PathBuf>,
    /// Fixed score threshold instead of selecting one
    #[arg(long, conflicts_with = "gt_val")]
    threshold: Option<f64>,
    /// Select one threshold per category
    #[arg(long, requires = "gt_val")]
    per_class: bool,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    iou: f64,
    /// JSON object mapping fine categories to coarse ones
    #[arg(long)]
    rollup: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Restriction(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RequestError> for CliError {
    fn from(e: RequestError) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Runs the CLI and returns the process exit code: 0 success, 1 data error,
/// 2 usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = dispatch(cli.command, out, err).and_then(|()| out.flush().map_err(|e| CliError::Data(e.to_string())));
    match result {
        Ok(()) => 0,
        Err(CliError::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Build { corpus, out: dir, config } => build(&corpus, &dir, config.as_deref(), err),
        Command::Query { index, queries, restrict, k, search } => query(&index, &queries, restrict, k, &search, out),
        Command::Eval(EvalCommand::Retrieval { pairs, corpus, k, search }) => eval_retrieval(&pairs, &corpus, &k, &search, out),
        Command::Eval(EvalCommand::Detection(args)) => eval_detection(&args, out),
        Command::Eval(EvalCommand::Relevance { ratings, k }) => {
            let ratings: Vec<RelevanceRating> = read_rows(&ratings)?;
            write_json(out, &relevance_at_k(&ratings, k)?)
        }
        Command::LabelMetrics { events, golden, threshold } => label_metrics(&events, golden.as_deref(), threshold, out),
        Command::GenSingleProduct { corpus, caps, out: path } => gen_single_product(&corpus, &caps, &path, out),
        Command::Serve { index, search, bind, port } => serve_cmd(&index, &search, bind, port, err),
    }
}

fn open(path: &Path) -> CliResult<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| CliError::from(Error::io(path, e)))?;
    Ok(Box::new(BufReader::new(f)))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    read_jsonl(open(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(Error::io(path, e)))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Data(e.to_string()))
}

fn load_config(path: Option<&Path>) -> CliResult<EngineConfig> {
    match path {
        Some(p) if !p.exists() => Err(CliError::Usage(format!("config {} not found", p.display()))),
        Some(p) => Ok(EngineConfig::load(p)?),
        None => Ok(EngineConfig::default()),
    }
}

fn search_config(flags: &SearchFlags) -> CliResult<EngineConfig> {
    let mut config = load_config(flags.config.as_deref())?;
    if let Some(m) = flags.metric {
        config.search.metric = m;
    }
    if flags.max_candidates.is_some() {
        config.search.max_candidates = flags.max_candidates;
    }
    config.search.search_config(None)?;
    Ok(config)
}

fn build(corpus: &Path, dir: &Path, config: Option<&Path>, err: &mut dyn Write) -> CliResult {
    let config = load_config(config)?;
    let records = parse_product_corpus(open(corpus)?).map_err(|e| CliError::Data(format!("{}: {e}", corpus.display())))?;
    let hasher = LshHasher::new(config.hasher.resolve(records.first().map(|r| r.embedding.dim()))?)?;
    let index = build_index(&records, &hasher)?;
    save_index(&index, dir)?;
    let _ = writeln!(
        err,
        "indexed {} documents into {} shards at {}",
        index.num_docs(),
        index.num_shards(),
        dir.display()
    );
    Ok(())
}

fn query(
    index: &Path,
    queries: &Path,
    restrict: Option<String>,
    k: Option<usize>,
    flags: &SearchFlags,
    out: &mut dyn Write,
) -> CliResult {
    if let Some(text) = &restrict {
        parse_restriction(text).map_err(|e| CliError::Usage(format!("--restrict: {e}")))?;
    }
    if k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let config = search_config(flags)?;
    let index = load_index(index)?;
    let requests: Vec<SearchRequest> = read_rows(queries)?;
    for (i, mut request) in requests.into_iter().enumerate() {
        if restrict.is_some() {
            request.restrict.clone_from(&restrict);
        }
        if k.is_some() {
            request.k = k;
        }
        let results = request
            .execute(&index, &config.search)
            .map_err(|e| CliError::Data(format!("query {}: {e}", i + 1)))?;
        let line = serde_json::to_string(&json!({ "results": results })).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

fn eval_retrieval(pairs: &Path, corpus: &Path, ks: &[usize], flags: &SearchFlags, out: &mut dyn Write) -> CliResult {
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::Usage("--k values must be at least 1".into()));
    }
    let config = search_config(flags)?;
    let pairs: Vec<MatchPair> = read_rows(pairs)?;
    let records = parse_product_corpus(open(corpus)?).map_err(|e| CliError::Data(format!("{}: {e}", corpus.display())))?;
    let hasher = config.hasher.resolve(records.first().map(|r| r.embedding.dim()))?;
    let mut report = BTreeMap::new();
    for &k in ks {
        let params = RetrievalEvalParams {
            hasher,
            max_candidates: config.search.search_config(Some(k))?.max_candidates,
            metric: config.search.metric,
        };
        report.insert(format!("p_at_{k}"), json!(retrieval_precision_at_k(&pairs, &records, &params, k)?));
    }
    report.insert("num_pairs".into(), json!(pairs.len()));
    report.insert("corpus_size".into(), json!(records.len()));
    write_json(out, &report)
}

fn read_detections(path: &Path, rollup: Option<&BTreeMap<String, String>>) -> CliResult<DetectionSet> {
    let set = DetectionSet::from_rows(read_rows::<ImageBoxes>(path)?);
    match rollup {
        Some(m) => rollup_categories(&set, m).map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => Ok(set),
    }
}

fn eval_detection(args: &DetectionArgs, out: &mut dyn Write) -> CliResult {
    if !(args.iou > 0.0 && args.iou <= 1.0) {
        return Err(CliError::Usage("--iou must be in (0, 1]".into()));
    }
    let mapping: Option<BTreeMap<String, String>> = args.rollup.as_deref().map(read_json).transpose()?;
    let gt = read_detections(&args.gt, mapping.as_ref())?;
    let pred = read_detections(&args.pred, mapping.as_ref())?;
    let mut report: BTreeMap<&str, Value> = BTreeMap::new();
    report.insert("map", json!(detection_map(&gt, &pred, args.iou)));
    report.insert("per_class_ap", json!(per_class_ap(&gt, &pred, args.iou)));
    report.insert("iou_threshold", json!(args.iou));

    let val = match (&args.gt_val, &args.pred_val) {
        (Some(g), Some(p)) => Some((read_detections(g, mapping.as_ref())?, read_detections(p, mapping.as_ref())?)),
        _ => None,
    };
    match (val, args.threshold) {
        (Some((gv, pv)), _) if args.per_class => {
            let thresholds = select_operating_thresholds_per_class(&gv, &pv, args.iou)?;
            // categories never predicted on validation keep every prediction
            let pr = detection_pr_per_class(&gt, &pred, &thresholds, f64::NEG_INFINITY, args.iou);
            report.insert("operating_thresholds", json!(thresholds));
            report.insert("operating_point", json!(pr));
        }
        (Some((gv, pv)), _) => {
            let t = select_operating_threshold(&gv, &pv, args.iou)?;
            report.insert("operating_threshold", json!(t));
            report.insert("operating_point", json!(detection_pr(&gt, &pred, t, args.iou)));
        }
        (None, Some(t)) => {
            report.insert("operating_threshold", json!(t));
            report.insert("operating_point", json!(detection_pr(&gt, &pred, t, args.iou)));
        }
        (None, None) => {}
    }
    write_json(out, &report)
}

fn label_metrics(events: &Path, golden: Option<&Path>, threshold: f64, out: &mut dyn Write) -> CliResult {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage("--threshold must be in [0, 1]".into()));
    }
    let events: Vec<LabelEvent> = read_rows(events)?;
    validate_label_events(&events)?;
    let mut report: BTreeMap<&str, Value> = BTreeMap::new();
    report.insert("num_events", json!(events.len()));
    report.insert("num_questions", json!(agreement_by_question(&events).len()));
    report.insert("consistency", json!(label_consistency(&events)));
    report.insert("calibration_rate", json!(calibration_rate(&events, threshold)));
    report.insert("agreement_threshold", json!(threshold));
    if let Some(path) = golden {
        let rows: Vec<GoldenAnswer> = read_rows(path)?;
        let golden: BTreeMap<String, String> = rows.into_iter().map(|g| (g.question_id, g.answer)).collect();
        report.insert("accuracy", json!(label_accuracy(&events, &golden)?));
    }
    write_json(out, &report)
}

fn gen_single_product(corpus: &Path, caps: &Path, path: &Path, out: &mut dyn Write) -> CliResult {
    let items: Vec<CorpusItem> = read_rows(corpus)?;
    let caps: SceneDistribution = read_json(caps)?;
    let result = generate_single_product_dataset(&items, &caps);
    let file = File::create(path).map_err(|e| CliError::from(Error::io(path, e)))?;
    let mut w = BufWriter::new(file);
    for ex in &result.examples {
        let line = serde_json::to_string(ex).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| CliError::from(Error::io(path, e)))?;
    }
    w.flush().map_err(|e| CliError::from(Error::io(path, e)))?;
    write_json(out, &result.summary)
}

fn serve_cmd(index: &Path, flags: &SearchFlags, bind: Option<IpAddr>, port: Option<u16>, err: &mut dyn Write) -> CliResult {
    let config = search_config(flags)?;
    let ip: IpAddr = match bind {
        Some(ip) => ip,
        None => config
            .service
            .bind
            .parse()
            .map_err(|_| CliError::Usage(format!("service.bind {:?} is not an IP address", config.service.bind)))?,
    };
    let addr = SocketAddr::new(ip, port.unwrap_or(config.service.port));
    let index = load_index(index)?;
    let _ = writeln!(err, "loaded {} documents in {} shards", index.num_docs(), index.num_shards());
    let state = AppState {
        index,
        defaults: config.search,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(e.to_string()))?;
    runtime
        .block_on(serve(state, addr, |bound| {
            let _ = writeln!(err, "listening on http://{bound}");
            let _ = err.flush();
        }))
        .map_err(|e| CliError::Data(format!("serve on {addr}: {e}")))
}
