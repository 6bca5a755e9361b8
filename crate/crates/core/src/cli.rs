//! Command-line front end: a TOML run configuration, flag overrides and one
//! handler per subcommand. Every handler writes fixed-name artifacts under the
//! output directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, CorpusFormat, LoadDiagnostics};
use crate::error::{Error, ErrorKind, Result};
use crate::experiment::{self, ExperimentConfig};
use crate::fetch::{self, FetchConfig, FetchItem};
use crate::model::{self, HyperParams};
use crate::report::{self, AnalysisConfig, AuditReport, CorpusSummary, FieldsReport};
use crate::resources::{ResourcePaths, Resources};
use crate::seed;
use crate::synth::SyntheticSpec;
use crate::textproc::{Mode, Vocabulary};

pub const CORPUS_JSONL: &str = "corpus.jsonl";
pub const FETCH_FAILURES_JSON: &str = "fetch_failures.json";
pub const INGEST_JSON: &str = "ingest.json";
const DEFAULT_CACHE_DIR: &str = ".biasaudit-cache";

/// Everything a run needs. Loaded from `--config`, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    /// Output directory. Not echoed into reports so that reruns into
    /// different directories stay byte-identical.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub mode: Mode,
    pub k: usize,
    pub runs: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub alpha: f64,
    pub strict_vocabulary: bool,
    pub min_per_gender: usize,
    /// Keep only the most frequent occupations; 0 keeps all.
    pub top_occupations: usize,
    pub hyperparams: HyperParams,
    pub analysis: AnalysisConfig,
    pub resources: ResourcePaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            corpus: None,
            format: None,
            out: PathBuf::from("out"),
            mode: e.mode,
            k: e.k,
            runs: e.runs,
            split_ratio: e.split_ratio,
            seed: e.seed,
            alpha: e.alpha,
            strict_vocabulary: e.strict_vocabulary,
            min_per_gender: e.min_per_gender,
            top_occupations: 100,
            hyperparams: e.params,
            analysis: AnalysisConfig::default(),
            resources: ResourcePaths::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut config.corpus);
        let r = &mut config.resources;
        for p in [
            &mut r.lexicon,
            &mut r.adjectives,
            &mut r.nouns,
            &mut r.stoplist,
            &mut r.neutralization,
            &mut r.categories,
            &mut r.fieldmap,
        ] {
            resolve(base, p);
        }
        Ok(config)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            mode: self.mode,
            runs: self.runs,
            split_ratio: self.split_ratio,
            k: self.k,
            seed: self.seed,
            params: self.hyperparams,
            alpha: self.alpha,
            strict_vocabulary: self.strict_vocabulary,
            min_per_gender: self.min_per_gender,
        }
    }

    /// Checks value ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.experiment().validate()?;
        for path in self.corpus.iter().chain(self.resources.all()) {
            if !path.is_file() {
                return Err(Error::Config(format!("file not found: {}", path.display())));
            }
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }

    fn corpus_path(&self) -> Result<&Path> {
        self.corpus.as_deref().ok_or_else(|| {
            Error::Config("no corpus given (use --corpus or `corpus` in the config)".into())
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "biasaudit",
    version,
    about = "Audit a biography corpus for gender-linked word usage"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Per-gender vocabulary cutoff.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Corpus file (.jsonl or .tsv).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download overviews for a manifest of pages into a corpus file.
    Fetch(FetchArgs),
    /// Load, clean and restrict a corpus, writing it in the ingest format.
    Ingest,
    /// Build the vocabulary.
    Vocab,
    /// Fit one model on a balanced draw.
    Train,
    /// Full pipeline: experiment, final model and analyses.
    Audit,
    /// One experiment per occupation field.
    Fields,
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Render an existing report as aligned text.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// TSV with columns id, title, gender, occupation.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = fetch::DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Cache directory; defaults to $BIASAUDIT_CACHE_DIR or .biasaudit-cache.
    #[arg(long, env = fetch::CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Requests per second.
    #[arg(long, default_value_t = 5.0)]
    pub rate_limit: f64,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Planted,
    Null,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "planted")]
    pub preset: Preset,
    /// TOML generator description; replaces the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub docs_per_gender: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report to render; defaults to report.json under the output directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Resolves the effective configuration: file, then flags.
pub fn effective_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut config = match &global.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = global.seed {
        config.seed = v;
    }
    if let Some(v) = &global.out {
        config.out = v.clone();
    }
    if let Some(v) = global.mode {
        config.mode = v;
    }
    if let Some(v) = global.runs {
        config.runs = v;
    }
    if let Some(v) = global.k {
        config.k = v;
    }
    if let Some(v) = &global.corpus {
        config.corpus = Some(v.clone());
    }
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loads the configured corpus, restricts it to the top occupations and
/// assigns fields.
fn load(config: &RunConfig, resources: &Resources) -> Result<(Corpus, LoadDiagnostics)> {
    let path = config.corpus_path()?;
    let format = config
        .format
        .unwrap_or_else(|| CorpusFormat::from_path(path));
    let loaded = corpus::load_corpus(path, format)?;
    let mut corpus = loaded.corpus;
    if config.top_occupations > 0 {
        let top: Vec<String> = corpus::top_occupations(&corpus, config.top_occupations)?
            .into_iter()
            .map(|(o, _)| o)
            .collect();
        corpus = corpus.restrict_to(&top);
    }
    let corpus = corpus::assign_fields(&corpus, &resources.field_map);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok((corpus, loaded.diagnostics))
}

fn cmd_fetch(config: &RunConfig, args: &FetchArgs) -> Result<()> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| Error::io(&args.manifest, e))?;
    let items = FetchItem::parse_manifest(&text)?;
    let fetch_config = FetchConfig {
        endpoint: args.endpoint.clone(),
        cache_dir: args
            .cache_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)),
        rate_limit: args.rate_limit,
        retries: args.retries,
        timeout: Duration::from_secs(args.timeout),
    };
    let outcome = fetch::fetch_overviews(&items, &fetch_config)?;
    let corpus = Corpus::new(outcome.records.clone(), args.manifest.display().to_string())?;
    write_file(&config.out.join(CORPUS_JSONL), &corpus.to_jsonl())?;
    write_file(
        &config.out.join(FETCH_FAILURES_JSON),
        &report::to_json(&outcome.failures)?,
    )?;
    println!(
        "fetched {} of {} pages ({} from cache, {} failed)",
        outcome.records.len(),
        items.len(),
        outcome.cache_hits,
        outcome.failures.len()
    );
    Ok(())
}

fn cmd_ingest(config: &RunConfig, resources: &Resources) -> Result<()> {
    let (corpus, diagnostics) = load(config, resources)?;
    write_file(&config.out.join(CORPUS_JSONL), &corpus.to_jsonl())?;
    let summary = serde_json::json!({
        "schema_version": report::SCHEMA_VERSION,
        "tool": report::tool_id(),
        "config": config.echo(),
        "seed": config.seed,
        "corpus": CorpusSummary::of(&corpus, Some(diagnostics.clone())),
    });
    write_file(&config.out.join(INGEST_JSON), &report::to_json(&summary)?)?;
    println!(
        "kept {} records ({} dropped while loading)",
        corpus.len(),
        diagnostics.dropped()
    );
    Ok(())
}

fn cmd_vocab(config: &RunConfig, resources: &Resources) -> Result<Vocabulary> {
    let (corpus, _) = load(config, resources)?;
    let vocab = Vocabulary::build(&corpus, config.mode, config.k, &resources.preprocessing)?;
    write_file(&config.out.join(report::VOCAB_TXT), &vocab.to_text())?;
    println!("vocabulary: {} words", vocab.len());
    Ok(vocab)
}

fn cmd_train(config: &RunConfig, resources: &Resources) -> Result<()> {
    let (corpus, _) = load(config, resources)?;
    let prep = &resources.preprocessing;
    let vocab = Vocabulary::build(&corpus, config.mode, config.k, prep)?;
    let balanced =
        corpus::balance_by_occupation(&corpus, seed::derive(config.seed, seed::STREAM_FINAL, 0));
    let streams = prep.process_corpus(&balanced);
    let x: Vec<_> = streams.iter().map(|s| vocab.encode_tokens(s)).collect();
    let y: Vec<u8> = balanced.iter().map(|r| r.gender.label()).collect();
    let training = model::train(&x, &y, &config.hyperparams)?;
    let model = training.model.bind(&vocab)?;
    write_file(&config.out.join(report::VOCAB_TXT), &vocab.to_text())?;
    write_file(&config.out.join(report::MODEL_TXT), &model.to_text(&vocab)?)?;
    println!(
        "trained on {} balanced records: {} iterations, training accuracy {:.4}",
        balanced.len(),
        training.losses.len(),
        model.accuracy(&x, &y)?
    );
    Ok(())
}

fn cmd_audit(config: &RunConfig, resources: &Resources) -> Result<()> {
    let (corpus, diagnostics) = load(config, resources)?;
    let artifacts = report::audit(
        &corpus,
        Some(diagnostics),
        resources,
        &config.experiment(),
        &config.analysis,
        config.echo(),
    )?;
    report::write_audit(&config.out, &artifacts)?;
    let e = &artifacts.report.experiment;
    println!(
        "mean accuracy {:.4} +/- {:.4} over {} runs, significant: {}",
        e.mean, e.std, e.runs, e.significant
    );
    Ok(())
}

fn cmd_fields(config: &RunConfig, resources: &Resources) -> Result<()> {
    let (corpus, diagnostics) = load(config, resources)?;
    let fields =
        experiment::run_per_field(&corpus, &resources.preprocessing, &config.experiment())?;
    let report = FieldsReport {
        schema_version: report::SCHEMA_VERSION,
        tool: report::tool_id(),
        config: config.echo(),
        seed: config.seed,
        corpus: CorpusSummary::of(&corpus, Some(diagnostics)),
        fields,
    };
    report::write_fields(&config.out, &report)?;
    println!("{} fields evaluated", report.fields.len());
    Ok(())
}

/// The preset uses the effective seed; a spec file keeps its own seed unless
/// `--seed` is given.
fn cmd_synth(config: &RunConfig, args: &SynthArgs, seed_flag: Option<u64>) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<SyntheticSpec>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => match args.preset {
            Preset::Planted => SyntheticSpec::planted(config.seed),
            Preset::Null => SyntheticSpec::null(config.seed),
        },
    };
    if let (Some(_), Some(seed)) = (&args.spec, seed_flag) {
        spec.seed = seed;
    }
    if let Some(n) = args.docs_per_gender {
        spec.docs_per_gender = n;
    }
    let corpus = spec.generate()?;
    write_file(&config.out.join(CORPUS_JSONL), &corpus.to_jsonl())?;
    write_file(
        &config.out.join("synth.toml"),
        &toml::to_string(&spec).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    println!("wrote {} synthetic records", corpus.len());
    Ok(())
}

fn cmd_report(config: &RunConfig, args: &ReportArgs) -> Result<()> {
    let path = args
        .input
        .clone()
        .unwrap_or_else(|| config.out.join(report::REPORT_JSON));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let parsed: AuditReport = serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    print!("{}", report::render_text(&parsed));
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let config = effective_config(&cli.global)?;
    match &cli.command {
        Command::Fetch(args) => cmd_fetch(&config, args),
        Command::Synth(args) => cmd_synth(&config, args, cli.global.seed),
        Command::Report(args) => cmd_report(&config, args),
        command => {
            let resources = Resources::load(&config.resources)?;
            match command {
                Command::Ingest => cmd_ingest(&config, &resources),
                Command::Vocab => cmd_vocab(&config, &resources).map(drop),
                Command::Train => cmd_train(&config, &resources),
                Command::Audit => cmd_audit(&config, &resources),
                Command::Fields => cmd_fields(&config, &resources),
                Command::Fetch(_) | Command::Synth(_) | Command::Report(_) => unreachable!(),
            }
        }
    }
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Io => 4,
    }
}

/// Machine-readable error record written to stderr on failure.
pub fn error_record(e: &Error) -> String {
    let kind = match e.kind() {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Io => "io",
    };
    serde_json::json!({
        "error": {
            "kind": kind,
            "exit_code": exit_code(e.kind()),
            "message": e.to_string(),
        }
    })
    .to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            exit_code(e.kind())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "runs = 7\nk = 30\nseed = 5\n[hyperparams]\nl2_lambda = 0.01\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "biasaudit",
            "--config",
            path.to_str().unwrap(),
            "--k",
            "12",
            "vocab",
        ])
        .unwrap();
        let c = effective_config(&cli.global).unwrap();
        assert_eq!((c.runs, c.k, c.seed), (7, 12, 5));
        assert_eq!(c.hyperparams.l2_lambda, 0.01);
    }

    #[test]
    fn validation_failures_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "split_ratio = 1.5\n").unwrap();
        let cli = Cli::try_parse_from(["biasaudit", "--config", path.to_str().unwrap(), "audit"])
            .unwrap();
        let err = effective_config(&cli.global).unwrap_err();
        assert_eq!(exit_code(err.kind()), 2);

        fs::write(&path, "corpus = \"missing.jsonl\"\n").unwrap();
        let cli = Cli::try_parse_from(["biasaudit", "--config", path.to_str().unwrap(), "audit"])
            .unwrap();
        assert_eq!(
            effective_config(&cli.global).unwrap_err().kind(),
            ErrorKind::Config
        );

        fs::write(&path, "bogus = 1\n").unwrap();
        let cli = Cli::try_parse_from(["biasaudit", "--config", path.to_str().unwrap(), "audit"])
            .unwrap();
        assert_eq!(
            effective_config(&cli.global).unwrap_err().kind(),
            ErrorKind::Config
        );
    }

    #[test]
    fn error_record_is_json() {
        let record = error_record(&Error::EmptyCorpus);
        let v: serde_json::Value = serde_json::from_str(&record).unwrap();
        assert_eq!(v["error"]["kind"], "data");
        assert_eq!(v["error"]["exit_code"], 3);
    }

    #[test]
    fn echo_omits_output_directory() {
        let a = RunConfig {
            out: "a".into(),
            ..RunConfig::default()
        };
        let b = RunConfig {
            out: "b".into(),
            ..RunConfig::default()
        };
        assert_eq!(a.echo(), b.echo());
    }
}
