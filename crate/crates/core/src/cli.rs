//! Command-line front end. Every stage reads and writes files so the pipeline
//! can be inspected and rerun one step at a time.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use walkdir::WalkDir;

use crate::abstraction::{abstract_sentence, AbstractionConfig, AbstractionMode, CorpusRecord};
use crate::analysis::{
    attention_csv, attention_trace, category_heatmap, heatmap_csv, import_coordinates, pca_project, project_store,
    projection_csv, projection_html, CategoryMap,
};
use crate::corpus::{
    compute_stats, encode_with, filter_by_length, split_train_test, Vocabulary, MAX_LENGTH, MIN_LENGTH, TRAIN_RATIO,
};
use crate::frontend::ir::{program_records, IrRecord};
use crate::frontend::{Program, ReservedWords};
use crate::neural::{
    gradient_check, reconstruction_accuracy, train, GradCheckConfig, GradCheckProblem, Hyperparameters,
    ModelCheckpoint,
};
use crate::retrieval::{abstract_snippet, competition_rank, EmbeddingStore, QueryContext};

const SOURCE_EXTENSIONS: [&str; 2] = ["cbl", "cob"];

#[derive(Debug, Parser, Serialize)]
#[command(name = "cobol-embed", version, about = "COBOL sentence embeddings: ingest, train, search, analyse")]
pub struct Cli {
    /// Seed for every random choice (split, initialisation, sampling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Parse .cbl/.cob sources into per-sentence IR (JSONL).
    Ingest(IngestArgs),
    /// Rewrite IR sentences into abstract token form (corpus JSONL).
    Abstract(AbstractArgs),
    /// Per-type sentence length table.
    Stats(StatsArgs),
    /// Train the autoencoder and write a checkpoint.
    Train(TrainArgs),
    /// Embed a corpus into a searchable store.
    Embed(EmbedArgs),
    /// Nearest stored sentences for a COBOL snippet.
    Query(QueryArgs),
    /// 2-D projection of a store (CSV, optional HTML).
    Project(ProjectArgs),
    /// Average-linkage clustering of a store (heatmap CSV, dendrogram).
    Cluster(ClusterArgs),
    /// Attention weights of one decoded sentence (CSV).
    Attention(AttentionArgs),
    /// Compare analytic and finite-difference gradients on a small model.
    CheckGradients(GradArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ReservedArgs {
    /// Extra reserved words, one per line (`[verbs]` marks statement verbs).
    #[arg(long, value_name = "FILE")]
    pub reserved_words: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Source files or directories (searched recursively).
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Skip files that fail to parse instead of stopping.
    #[arg(long)]
    pub keep_going: bool,
    #[command(flatten)]
    pub reserved: ReservedArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Single,
    Indexed,
}

#[derive(Debug, Args, Serialize)]
pub struct AbstractionArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Single)]
    pub mode: ModeArg,
    /// Fail on data names that are not declared.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value = "<VAR>")]
    pub var_token: String,
    #[arg(long, default_value = "<ID>")]
    pub id_token: String,
    #[arg(long, default_value = "<LIT>")]
    pub lit_token: String,
}

impl AbstractionArgs {
    fn config(&self) -> AbstractionConfig {
        AbstractionConfig {
            mode: match self.mode {
                ModeArg::Single => AbstractionMode::Single,
                ModeArg::Indexed => AbstractionMode::Indexed,
            },
            var_token: self.var_token.clone(),
            id_token: self.id_token.clone(),
            lit_token: self.lit_token.clone(),
            strict: self.strict,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AbstractArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = MIN_LENGTH)]
    pub min_length: usize,
    #[arg(long, default_value_t = MAX_LENGTH)]
    pub max_length: usize,
    #[command(flatten)]
    pub abstraction: AbstractionArgs,
    #[command(flatten)]
    pub reserved: ReservedArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 512 dimensions, N(0,1) init, 50k iterations.
    Full,
    /// 64 dimensions, 20k iterations.
    Fast,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Profile::Full)]
    pub profile: Profile,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Hidden size; also the embedding size.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub teacher_forcing: Option<f64>,
    #[arg(long)]
    pub init_std: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub log_every: Option<usize>,
    /// Feed the encoder in source order.
    #[arg(long)]
    pub no_reverse: bool,
    #[arg(long, default_value_t = TRAIN_RATIO)]
    pub train_ratio: f64,
    /// Loss curve as CSV (iteration,loss).
    #[arg(long, value_name = "FILE")]
    pub loss_log: Option<PathBuf>,
    /// Vocabulary, one token per line (line number = id).
    #[arg(long, value_name = "FILE")]
    pub vocab_out: Option<PathBuf>,
    /// Abstraction settings the corpus was built with.
    #[command(flatten)]
    pub abstraction: AbstractionArgs,
}

impl TrainArgs {
    fn hyperparameters(&self, seed: u64) -> Hyperparameters {
        let mut hp = match self.profile {
            Profile::Full => Hyperparameters::full(),
            Profile::Fast => Hyperparameters::fast(),
        };
        hp.seed = seed;
        hp.reverse_input = !self.no_reverse;
        if let Some(v) = self.iterations {
            hp.iterations = v;
        }
        if let Some(v) = self.embed_dim {
            hp.embed_dim = v;
        }
        if let Some(v) = self.hidden_dim {
            hp.hidden_dim = v;
            hp.latent_dim = v;
        }
        if let Some(v) = self.learning_rate {
            hp.learning_rate = v;
        }
        if let Some(v) = self.teacher_forcing {
            hp.teacher_forcing_prob = v;
        }
        if let Some(v) = self.init_std {
            hp.init_std = v;
        }
        if let Some(v) = self.batch_size {
            hp.batch_size = v;
        }
        if let Some(v) = self.log_every {
            hp.log_every = v;
        }
        hp
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub ckpt: PathBuf,
    /// Store file; metadata goes to `<FILE>.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct QueryArgs {
    #[arg(long, value_name = "FILE")]
    pub store: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub ckpt: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Resolve names against this program's DATA DIVISION.
    #[arg(long, value_name = "FILE")]
    pub program: Option<PathBuf>,
    #[command(flatten)]
    pub reserved: ReservedArgs,
    pub snippet: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long, value_name = "FILE")]
    pub store: PathBuf,
    /// CSV with id,x,y,type,category.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub html: Option<PathBuf>,
    /// Use these id,x,y coordinates instead of PCA.
    #[arg(long, value_name = "FILE")]
    pub coords: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub category_map: Option<PathBuf>,
    #[arg(long, default_value = "Sentence embeddings")]
    pub title: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long, value_name = "FILE")]
    pub store: PathBuf,
    /// Distance matrix in dendrogram leaf order.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dendrogram: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub category_map: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AttentionArgs {
    #[arg(long, value_name = "FILE")]
    pub ckpt: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Corpus holding the sentence given by `--id`.
    #[arg(long, value_name = "FILE", requires = "id")]
    pub corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus", conflicts_with = "snippet")]
    pub id: Option<usize>,
    #[arg(long, value_name = "FILE", conflicts_with = "id")]
    pub program: Option<PathBuf>,
    #[command(flatten)]
    pub reserved: ReservedArgs,
    #[arg(required_unless_present = "id")]
    pub snippet: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradArgs {
    #[arg(long, default_value_t = 12)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 6)]
    pub length: usize,
    #[arg(long, default_value_t = 0.5)]
    pub init_std: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Deliberately corrupt this tensor's gradient.
    #[arg(long, value_name = "TENSOR")]
    pub corrupt: Option<String>,
}

/// Bad flag combinations found after parsing; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    eprintln!("config: {}", serde_json::to_string(&cli).expect("config serializes"));
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Abstract(a) => abstract_corpus(a),
        Command::Stats(a) => stats(a),
        Command::Train(a) => train_model(a, cli.seed),
        Command::Embed(a) => embed(a),
        Command::Query(a) => query(a),
        Command::Project(a) => project(a),
        Command::Cluster(a) => cluster(a),
        Command::Attention(a) => attention(a),
        Command::CheckGradients(a) => check_gradients(a, cli.seed),
    }
}

fn path_key(p: &Path) -> PathBuf {
    if let Ok(c) = fs::canonicalize(p) {
        return c;
    }
    let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    match (fs::canonicalize(parent), p.file_name()) {
        (Ok(dir), Some(name)) => dir.join(name),
        _ => std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()),
    }
}

/// Rejects outputs that coincide with an input or with each other.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let ins: Vec<PathBuf> = inputs.iter().map(|p| path_key(p)).collect();
    let mut seen: Vec<PathBuf> = Vec::new();
    for out in outputs {
        let key = path_key(out);
        if ins.contains(&key) {
            return Err(UsageError(format!("output {} would overwrite an input", out.display())).into());
        }
        if seen.contains(&key) {
            return Err(UsageError(format!("output {} is given twice", out.display())).into());
        }
        seen.push(key);
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn reserved_words(args: &ReservedArgs) -> Result<ReservedWords> {
    let mut rw = ReservedWords::standard();
    if let Some(path) = &args.reserved_words {
        rw.extend_from_str(&read_text(path)?);
    }
    Ok(rw)
}

fn category_map(path: Option<&PathBuf>) -> Result<CategoryMap> {
    match path {
        Some(p) => CategoryMap::parse(&read_text(p)?).with_context(|| format!("category map {}", p.display())),
        None => Ok(CategoryMap::default()),
    }
}

fn load_program(path: &Path, rw: &ReservedWords) -> Result<Program> {
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    Program::parse(&read_text(path)?, &name, rw).with_context(|| format!("parsing {}", path.display()))
}

/// Source files under `inputs`, each with a name relative to its root so
/// the IR does not depend on where the sources live.
fn collect_sources(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, String)>> {
    let mut files = Vec::new();
    for root in inputs {
        if root.is_file() {
            let name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            files.push((root.clone(), name));
            continue;
        }
        if !root.is_dir() {
            bail!("{} does not exist", root.display());
        }
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.with_context(|| format!("walking {}", root.display()))?;
            let is_source = entry.file_type().is_file()
                && entry
                    .path()
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if is_source {
                let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
                let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                files.push((entry.path().to_path_buf(), name));
            }
        }
    }
    Ok(files)
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    check_paths(&inputs, &[&a.out])?;
    let rw = reserved_words(&a.reserved)?;
    let files = collect_sources(&a.inputs)?;
    if files.is_empty() {
        bail!("no .cbl or .cob files found");
    }
    let parsed: Vec<Result<Program>> = files
        .par_iter()
        .map(|(path, name)| {
            Program::parse(&read_text(path)?, name, &rw).with_context(|| format!("parsing {}", path.display()))
        })
        .collect();
    let mut records = Vec::new();
    let mut n_files = 0;
    for result in parsed {
        let program = match result {
            Ok(p) => p,
            Err(e) if a.keep_going => {
                log::warn!("skipping: {e:#}");
                continue;
            }
            Err(e) => return Err(e),
        };
        for w in &program.warnings {
            log::warn!("{}: {w}", program.file);
        }
        records.extend(program_records(&program));
        n_files += 1;
    }
    write_file(&a.out, to_jsonl(&records))?;
    eprintln!("ingested {} sentences from {n_files} files", records.len());
    Ok(())
}

fn abstract_corpus(a: &AbstractArgs) -> Result<()> {
    check_paths(&[&a.input], &[&a.out])?;
    if a.min_length > a.max_length {
        return Err(UsageError(format!("--min-length {} exceeds --max-length {}", a.min_length, a.max_length)).into());
    }
    let cfg = a.abstraction.config();
    cfg.validate(&reserved_words(&a.reserved)?)?;
    let ir: Vec<IrRecord> = read_jsonl(&a.input)?;
    let abstracted = ir
        .iter()
        .map(|r| {
            let tops: HashMap<String, String> = r
                .tokens
                .iter()
                .filter_map(|t| Some((t.text.clone(), t.top.clone()?)))
                .collect();
            abstract_sentence(&r.to_sentence(), &tops, &cfg).with_context(|| format!("{}:{}", r.file, r.line))
        })
        .collect::<Result<Vec<_>>>()?;
    let total = abstracted.len();
    let kept = filter_by_length(abstracted, a.min_length, a.max_length)?;
    let records: Vec<CorpusRecord> = kept.iter().enumerate().map(|(i, s)| CorpusRecord::new(i, s)).collect();
    write_file(&a.out, to_jsonl(&records))?;
    eprintln!(
        "abstracted {total} sentences, kept {} with length in [{}, {}]",
        records.len(),
        a.min_length,
        a.max_length
    );
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<()> {
    if let Some(out) = &a.out {
        check_paths(&[&a.input], &[out])?;
    }
    let corpus: Vec<CorpusRecord> = read_jsonl(&a.input)?;
    let table = compute_stats(&corpus).to_string();
    match &a.out {
        Some(out) => write_file(out, table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn train_model(a: &TrainArgs, seed: u64) -> Result<()> {
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.loss_log.as_deref());
    outputs.extend(a.vocab_out.as_deref());
    check_paths(&[&a.corpus], &outputs)?;
    let hp = a.hyperparameters(seed);
    hp.validate().map_err(|e| UsageError(e.to_string()))?;
    let abstraction = a.abstraction.config();

    let corpus: Vec<CorpusRecord> = read_jsonl(&a.corpus)?;
    let vocab = Vocabulary::build(&corpus)?;
    let (train_set, test_set) = split_train_test(&corpus, a.train_ratio, seed)?;
    let encode_all = |set: &[CorpusRecord]| -> Vec<_> {
        set.iter().map(|r| encode_with(r.id, r, &vocab, hp.reverse_input)).collect()
    };
    let (train_data, test_data) = (encode_all(&train_set), encode_all(&test_set));
    eprintln!(
        "training on {} sentences ({} held out), vocabulary {}",
        train_data.len(),
        test_data.len(),
        vocab.len()
    );
    let model = train(&train_data, &vocab, &abstraction, &hp)?;
    let train_acc = reconstruction_accuracy(&model.checkpoint.params, &train_data)?;
    let test_acc = if test_data.is_empty() {
        None
    } else {
        Some(reconstruction_accuracy(&model.checkpoint.params, &test_data)?)
    };

    model.checkpoint.save(&a.out)?;
    if let Some(path) = &a.loss_log {
        let mut csv = String::from("iteration,loss\n");
        for p in &model.losses {
            writeln!(csv, "{},{}", p.iteration, p.loss).expect("string write");
        }
        write_file(path, csv)?;
    }
    if let Some(path) = &a.vocab_out {
        write_file(path, vocab.to_file_string())?;
    }
    match test_acc {
        Some(t) => eprintln!("reconstruction accuracy: train {train_acc:.4}, test {t:.4}"),
        None => eprintln!("reconstruction accuracy: train {train_acc:.4}"),
    }
    Ok(())
}

fn embed(a: &EmbedArgs) -> Result<()> {
    let sidecar = EmbeddingStore::sidecar_path(&a.out);
    check_paths(&[&a.corpus, &a.ckpt], &[&a.out, &sidecar])?;
    let ckpt = ModelCheckpoint::load(&a.ckpt)?;
    let corpus: Vec<CorpusRecord> = read_jsonl(&a.corpus)?;
    let store = EmbeddingStore::build(&corpus, &ckpt)?;
    store.save(&a.out)?;
    eprintln!("embedded {} sentences ({} dimensions)", store.len(), store.dim());
    Ok(())
}

fn query(a: &QueryArgs) -> Result<()> {
    if a.k == 0 {
        return Err(UsageError("--k must be at least 1".into()).into());
    }
    let rw = reserved_words(&a.reserved)?;
    let ckpt = ModelCheckpoint::load(&a.ckpt)?;
    let store = EmbeddingStore::load(&a.store)?;
    let program = a.program.as_deref().map(|p| load_program(p, &rw)).transpose()?;
    let context = match &program {
        Some(p) => QueryContext::Program(&p.symbols),
        None => QueryContext::Snippet,
    };
    let hits = store.query(&a.snippet, &ckpt, &rw, context, a.k)?;
    for h in &hits {
        let rank = competition_rank(&hits, h.record.id).expect("hit is ranked");
        println!(
            "{rank}\t{:.6}\t{}\t{}\t{}:{}\t{}",
            h.score, h.record.id, h.record.sentence_type, h.record.file, h.record.line, h.record.source_text
        );
    }
    Ok(())
}

fn project(a: &ProjectArgs) -> Result<()> {
    let mut inputs = vec![a.store.as_path()];
    inputs.extend(a.coords.as_deref());
    inputs.extend(a.category_map.as_deref());
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.html.as_deref());
    check_paths(&inputs, &outputs)?;
    let categories = category_map(a.category_map.as_ref())?;
    let store = EmbeddingStore::load(&a.store)?;
    let coords = match &a.coords {
        Some(path) => import_coordinates(&read_text(path)?)?,
        None => {
            let p = pca_project(&store.vectors())?;
            eprintln!("principal component variances: {:.6}, {:.6}", p.eigenvalues[0], p.eigenvalues[1]);
            store.records().iter().map(|r| r.id).zip(p.coords).collect()
        }
    };
    let points = project_store(&store, &coords, &categories)?;
    write_file(&a.out, projection_csv(&points))?;
    if let Some(html) = &a.html {
        write_file(html, projection_html(&points, &a.title))?;
    }
    eprintln!("projected {} sentences", points.len());
    Ok(())
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let mut inputs = vec![a.store.as_path()];
    inputs.extend(a.category_map.as_deref());
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.dendrogram.as_deref());
    check_paths(&inputs, &outputs)?;
    let categories = category_map(a.category_map.as_ref())?;
    let store = EmbeddingStore::load(&a.store)?;
    let heatmap = category_heatmap(&store, &categories)?;
    write_file(&a.out, heatmap_csv(&heatmap))?;
    if let Some(path) = &a.dendrogram {
        write_file(path, format!("{}\n", heatmap.tree.dendrogram()))?;
    }
    eprintln!("clustered {} sentences", heatmap.ids.len());
    Ok(())
}

fn attention(a: &AttentionArgs) -> Result<()> {
    let mut inputs = vec![a.ckpt.as_path()];
    inputs.extend(a.corpus.as_deref());
    inputs.extend(a.program.as_deref());
    check_paths(&inputs, &[&a.out])?;
    let ckpt = ModelCheckpoint::load(&a.ckpt)?;
    let tokens = match (&a.corpus, a.id, &a.snippet) {
        (Some(corpus), Some(id), _) => {
            let records: Vec<CorpusRecord> = read_jsonl(corpus)?;
            records
                .into_iter()
                .find(|r| r.id == id)
                .with_context(|| format!("no sentence with id {id} in {}", corpus.display()))?
                .tokens
        }
        (_, _, Some(snippet)) => {
            let rw = reserved_words(&a.reserved)?;
            let program = a.program.as_deref().map(|p| load_program(p, &rw)).transpose()?;
            let context = match &program {
                Some(p) => QueryContext::Program(&p.symbols),
                None => QueryContext::Snippet,
            };
            abstract_snippet(snippet, &rw, &ckpt.abstraction, context)?.tokens
        }
        _ => return Err(UsageError("give either --corpus with --id, or a snippet".into()).into()),
    };
    let trace = attention_trace(&tokens, &ckpt)?;
    write_file(&a.out, attention_csv(&trace))?;
    let (steps, len) = trace.shape();
    eprintln!("attention trace: {steps} decode steps over {len} source tokens");
    Ok(())
}

fn check_gradients(a: &GradArgs, seed: u64) -> Result<()> {
    if a.vocab_size < 5 || a.dim == 0 || a.length == 0 {
        return Err(UsageError("need --vocab-size >= 5, --dim >= 1 and --length >= 1".into()).into());
    }
    let problem = GradCheckProblem::random(a.vocab_size, a.dim, a.length, a.init_std, seed);
    let cfg = GradCheckConfig {
        epsilon: a.epsilon,
        min_samples: a.samples,
        seed,
        corrupt: a.corrupt.clone(),
        ..GradCheckConfig::default()
    };
    let report = gradient_check(&problem.params, &problem.input, &problem.target, &cfg)?;
    println!("{:<24} {:>8} {:>14}", "tensor", "checked", "max rel error");
    for t in &report.per_tensor {
        println!("{:<24} {:>8} {:>14.3e}", t.name, t.checked, t.max_rel_error);
    }
    println!("{:<24} {:>8} {:>14.3e}", "all", report.checked, report.max_rel_error);
    if report.max_rel_error >= a.tolerance {
        bail!(
            "gradient check failed: max relative error {:.3e} >= {:.0e}",
            report.max_rel_error,
            a.tolerance
        );
    }
    Ok(())
}
