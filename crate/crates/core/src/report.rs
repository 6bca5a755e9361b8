//! The full audit pipeline and its artifacts.
//!
//! [`audit`] runs the repeated experiment, then fits one model on a balanced
//! draw and explains it. The resulting [`AuditReport`] contains no timestamps
//! or host details, so identical inputs serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, correlation_from_presence, CorrelationMatrix, PredictiveWordReport, PresenceTable,
    SubjectivityDistribution, TopicReport,
};
use crate::corpus::{self, Corpus, Gender, LoadDiagnostics};
use crate::error::{Error, Result};
use crate::experiment::{self, ExperimentConfig, ExperimentResult, FieldOutcome};
use crate::model::{self, TrainedModel};
use crate::resources::Resources;
use crate::seed;
use crate::textproc::{Mode, Vocabulary};

pub const SCHEMA_VERSION: u32 = 1;

pub const REPORT_JSON: &str = "report.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const VOCAB_TXT: &str = "vocab.txt";
pub const MODEL_TXT: &str = "model.txt";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const FREQUENCIES_CSV: &str = "frequencies.csv";
pub const TOPICS_JSON: &str = "topics.json";
pub const REPORT_TXT: &str = "report.txt";

/// Knobs for the explanation half of the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Predictive words listed per gender.
    pub top_words: usize,
    /// Strongest words per gender fed to the topic scorer.
    pub topic_words: usize,
    pub top_topics: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            top_words: 10,
            topic_words: 20,
            top_topics: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub provenance: String,
    pub records: usize,
    pub female: usize,
    pub male: usize,
    pub occupations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<LoadDiagnostics>,
}

impl CorpusSummary {
    pub fn of(corpus: &Corpus, diagnostics: Option<LoadDiagnostics>) -> Self {
        let occupations: std::collections::BTreeSet<&str> =
            corpus.iter().map(|r| r.occupation.as_str()).collect();
        CorpusSummary {
            provenance: corpus.provenance().to_string(),
            records: corpus.len(),
            female: corpus.count(Gender::Female),
            male: corpus.count(Gender::Male),
            occupations: occupations.len(),
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularySummary {
    pub mode: Mode,
    pub k: usize,
    pub size: usize,
    pub fingerprint: String,
    pub words: Vec<String>,
}

/// The single model that the explanations describe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalModelSummary {
    /// Records in the balanced draw it was fitted on.
    pub balanced_size: usize,
    pub training_accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool: String,
    /// Everything needed to rerun the audit, as supplied by the caller.
    pub config: serde_json::Value,
    pub seed: u64,
    pub corpus: CorpusSummary,
    pub vocabulary: VocabularySummary,
    pub experiment: ExperimentResult,
    pub final_model: FinalModelSummary,
    pub predictive_words: PredictiveWordReport,
    pub topics: TopicReport,
    pub subjectivity: SubjectivityDistribution,
    /// Words of the correlation matrix, in row order.
    pub correlation_words: Vec<String>,
}

/// Everything [`audit`] produces: the report plus the artifacts that are
/// written to their own files.
#[derive(Debug, Clone)]
pub struct AuditArtifacts {
    pub report: AuditReport,
    pub vocabulary: Vocabulary,
    pub model: TrainedModel,
    pub correlations: CorrelationMatrix,
    /// `(word, female frequency, male frequency)` for every vocabulary word.
    pub frequencies: Vec<(String, f64, f64)>,
}

pub fn tool_id() -> String {
    format!("biasaudit {}", env!("CARGO_PKG_VERSION"))
}

/// Runs experiment and analysis over `corpus`.
///
/// The explained model is fitted on a balanced draw of the whole corpus with
/// its own seed stream; frequencies, correlations and subjectivity shares are
/// measured on that same draw.
pub fn audit(
    corpus: &Corpus,
    diagnostics: Option<LoadDiagnostics>,
    resources: &Resources,
    config: &ExperimentConfig,
    analysis_config: &AnalysisConfig,
    config_echo: serde_json::Value,
) -> Result<AuditArtifacts> {
    let prep = &resources.preprocessing;
    let experiment = experiment::run_experiment(corpus, prep, config, "global")?;

    let vocabulary = Vocabulary::build(corpus, config.mode, config.k, prep)?;
    let final_seed = seed::derive(config.seed, seed::STREAM_FINAL, 0);
    let balanced = corpus::balance_by_occupation(corpus, final_seed);
    let streams = prep.process_corpus(&balanced);
    let x: Vec<_> = streams
        .iter()
        .map(|s| vocabulary.encode_tokens(s))
        .collect();
    let y: Vec<u8> = balanced.iter().map(|r| r.gender.label()).collect();
    let training = model::train(&x, &y, &config.params)?;
    let model = training.model.bind(&vocabulary)?;
    let training_accuracy = model.accuracy(&x, &y)?;

    let presence = PresenceTable::build(&balanced, prep);
    let predictive = analysis::annotate_predictive_words(
        &model,
        &vocabulary,
        &resources.subjectivity,
        &presence,
        prep,
        analysis_config.top_words,
    );
    let correlation_words: Vec<String> = predictive.rows().map(|p| p.word.clone()).collect();
    let correlations = correlation_from_presence(&presence, &correlation_words)?;
    let topics = analysis::topics_by_direction(
        &model,
        &vocabulary,
        &resources.categories,
        analysis_config.topic_words,
        analysis_config.top_topics,
    );
    let subjectivity =
        analysis::subjectivity_distribution(&balanced, &resources.subjectivity, prep);
    let frequencies = vocabulary
        .words()
        .iter()
        .map(|w| {
            let (f, m) = presence.frequency(w);
            (w.clone(), f, m)
        })
        .collect();

    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        tool: tool_id(),
        config: config_echo,
        seed: config.seed,
        corpus: CorpusSummary::of(corpus, diagnostics),
        vocabulary: VocabularySummary {
            mode: vocabulary.mode(),
            k: vocabulary.k(),
            size: vocabulary.len(),
            fingerprint: vocabulary.fingerprint(),
            words: vocabulary.words().to_vec(),
        },
        experiment,
        final_model: FinalModelSummary {
            balanced_size: balanced.len(),
            training_accuracy,
            iterations: training.losses.len(),
            converged: training.converged,
            final_loss: training.losses.last().copied().unwrap_or(f64::NAN),
            intercept: model.intercept,
        },
        predictive_words: predictive,
        topics,
        subjectivity,
        correlation_words,
    };
    Ok(AuditArtifacts {
        report,
        vocabulary,
        model,
        correlations,
        frequencies,
    })
}

/// Per-field experiments with a config echo, as written by the `fields` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsReport {
    pub schema_version: u32,
    pub tool: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub corpus: CorpusSummary,
    pub fields: BTreeMap<String, FieldOutcome>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v}"))
}

const SUMMARY_HEADER: &str =
    "scope,status,mode,runs,seed,mean,std,std_percent,t_statistic,critical_value,alpha,significant,vocabulary_size,balanced_size,train_size,test_size\n";

fn summary_row(out: &mut String, r: &ExperimentResult) {
    let _ = writeln!(
        out,
        "{},completed,{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        analysis::csv_field(&r.scope),
        r.mode,
        r.runs,
        r.seed,
        r.mean,
        r.std,
        r.std_percent,
        fmt_opt(r.t_statistic),
        fmt_opt(r.critical_value),
        r.alpha,
        r.significant,
        r.vocabulary_size,
        r.balanced_size,
        r.train_size,
        r.test_size
    );
}

/// One CSV row per scope.
pub fn summary_csv<'a>(results: impl IntoIterator<Item = &'a ExperimentResult>) -> String {
    let mut out = SUMMARY_HEADER.to_string();
    for r in results {
        summary_row(&mut out, r);
    }
    out
}

/// Summary rows for per-field outcomes; fields that did not run get a status
/// and empty numeric cells.
pub fn fields_summary_csv(fields: &BTreeMap<String, FieldOutcome>) -> String {
    let mut out = SUMMARY_HEADER.to_string();
    for (name, outcome) in fields {
        match outcome {
            FieldOutcome::Completed(r) => summary_row(&mut out, r),
            FieldOutcome::InsufficientData { .. } => {
                let _ = writeln!(
                    out,
                    "{},insufficient_data{}",
                    analysis::csv_field(name),
                    ",".repeat(14)
                );
            }
            FieldOutcome::Failed { .. } => {
                let _ = writeln!(
                    out,
                    "{},failed{}",
                    analysis::csv_field(name),
                    ",".repeat(14)
                );
            }
        }
    }
    out
}

/// Long format: one `(word, gender, frequency)` row per word and gender.
pub fn frequencies_csv(rows: &[(String, f64, f64)]) -> String {
    let mut out = String::from("word,gender,frequency\n");
    for (word, f, m) in rows {
        let word = analysis::csv_field(word);
        let _ = writeln!(out, "{word},female,{f}");
        let _ = writeln!(out, "{word},male,{m}");
    }
    out
}

fn render_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, cell) in cells.enumerate() {
            let _ = write!(s, "{cell:<width$}  ", width = widths[i]);
        }
        let _ = writeln!(out, "{}", s.trim_end());
    };
    line(out, &mut header.iter().copied());
    for row in rows {
        line(out, &mut row.iter().map(String::as_str));
    }
}

/// Human-readable rendering with aligned columns.
pub fn render_text(report: &AuditReport) -> String {
    let e = &report.experiment;
    let mut out = String::new();
    let _ = writeln!(out, "{} (schema {})", report.tool, report.schema_version);
    let _ = writeln!(
        out,
        "corpus: {} records ({} female, {} male, {} occupations)",
        report.corpus.records, report.corpus.female, report.corpus.male, report.corpus.occupations
    );
    let _ = writeln!(
        out,
        "mode {} | k {} | vocabulary {} words | seed {}",
        e.mode, report.vocabulary.k, report.vocabulary.size, report.seed
    );
    let _ = writeln!(
        out,
        "accuracy over {} runs: {:.4} +/- {:.4} (t = {}, critical {}, significant: {})\n",
        e.runs,
        e.mean,
        e.std,
        e.t_statistic.map_or("NA".into(), |t| format!("{t:.3}")),
        e.critical_value.map_or("NA".into(), |t| format!("{t:.3}")),
        e.significant
    );

    for (label, words) in [
        ("female", &report.predictive_words.female),
        ("male", &report.predictive_words.male),
    ] {
        let _ = writeln!(out, "{label}-predictive words");
        let rows: Vec<Vec<String>> = words
            .iter()
            .map(|p| {
                vec![
                    p.word.clone(),
                    format!("{:+.4}", p.weight),
                    p.strength.map_or("unknown".into(), |s| s.to_string()),
                    p.polarity.map_or("unknown".into(), |s| s.to_string()),
                    format!("{:.4}", p.freq_female),
                    format!("{:.4}", p.freq_male),
                ]
            })
            .collect();
        render_table(
            &mut out,
            &[
                "word",
                "weight",
                "strength",
                "polarity",
                "freq_female",
                "freq_male",
            ],
            &rows,
        );
        out.push('\n');
    }

    for (label, topics) in [
        ("female", &report.topics.female),
        ("male", &report.topics.male),
    ] {
        let _ = writeln!(out, "{label} topics");
        let rows: Vec<Vec<String>> = topics
            .iter()
            .map(|t| {
                vec![
                    t.category.clone(),
                    format!("{:.4}", t.score),
                    t.words.join(" "),
                ]
            })
            .collect();
        render_table(&mut out, &["category", "score", "words"], &rows);
        out.push('\n');
    }

    let _ = writeln!(out, "adjective subjectivity (token shares)");
    let s = &report.subjectivity;
    let rows: Vec<Vec<String>> = [
        ("female", &s.female),
        ("male", &s.male),
        ("overall", &s.overall),
    ]
    .into_iter()
    .map(|(g, v)| {
        let mut row = vec![g.to_string(), v.tokens.to_string()];
        row.extend(
            [
                v.weak,
                v.strong,
                v.positive,
                v.negative,
                v.neutral,
                v.polarity_unknown,
            ]
            .iter()
            .map(|x| format!("{x:.4}")),
        );
        row
    })
    .collect();
    render_table(
        &mut out,
        &[
            "gender", "tokens", "weak", "strong", "positive", "negative", "neutral", "unknown",
        ],
        &rows,
    );
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes every audit artifact under `dir` with its fixed name.
pub fn write_audit(dir: &Path, artifacts: &AuditArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = &artifacts.report;
    write(dir, REPORT_JSON, &to_json(report)?)?;
    write(dir, REPORT_TXT, &render_text(report))?;
    write(dir, SUMMARY_CSV, &summary_csv([&report.experiment]))?;
    write(dir, VOCAB_TXT, &artifacts.vocabulary.to_text())?;
    write(
        dir,
        MODEL_TXT,
        &artifacts.model.to_text(&artifacts.vocabulary)?,
    )?;
    write(dir, CORRELATIONS_CSV, &artifacts.correlations.to_csv())?;
    write(
        dir,
        FREQUENCIES_CSV,
        &frequencies_csv(&artifacts.frequencies),
    )?;
    let topics = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "seed": report.seed,
        "config": report.config,
        "topics": report.topics,
    });
    write(dir, TOPICS_JSON, &to_json(&topics)?)
}

pub fn write_fields(dir: &Path, report: &FieldsReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, REPORT_JSON, &to_json(report)?)?;
    write(dir, SUMMARY_CSV, &fields_summary_csv(&report.fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SyntheticSpec;

    fn small_audit(seed: u64) -> AuditArtifacts {
        let mut spec = SyntheticSpec::planted(seed);
        spec.docs_per_gender = 150;
        let corpus = spec.generate().unwrap();
        let config = ExperimentConfig {
            runs: 4,
            seed,
            ..ExperimentConfig::default()
        };
        audit(
            &corpus,
            None,
            &Resources::bundled(),
            &config,
            &AnalysisConfig::default(),
            serde_json::json!({"seed": seed}),
        )
        .unwrap()
    }

    #[test]
    fn report_is_reproducible() {
        let a = to_json(&small_audit(2).report).unwrap();
        let b = to_json(&small_audit(2).report).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"schema_version\": 1"));
    }

    #[test]
    fn report_round_trips() {
        let report = small_audit(4).report;
        let back: AuditReport = serde_json::from_str(&to_json(&report).unwrap()).unwrap();
        assert_eq!(
            back.experiment.run_accuracies,
            report.experiment.run_accuracies
        );
        assert_eq!(back.vocabulary, report.vocabulary);
    }

    #[test]
    fn csv_shapes() {
        let art = small_audit(6);
        let summary = summary_csv([&art.report.experiment]);
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        let freq = frequencies_csv(&art.frequencies);
        assert_eq!(freq.lines().count(), 1 + 2 * art.vocabulary.len());
        let text = render_text(&art.report);
        assert!(text.contains("female-predictive words"));
    }

    #[test]
    fn field_rows_keep_column_count() {
        let mut fields = BTreeMap::new();
        fields.insert(
            "Art".to_string(),
            FieldOutcome::InsufficientData {
                female: 1,
                male: 2,
                balanced_per_gender: 1,
                required_per_gender: 20,
            },
        );
        let csv = fields_summary_csv(&fields);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    }
}
