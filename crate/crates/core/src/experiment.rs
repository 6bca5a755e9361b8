//! Repeated balanced holdout: rebalance, split, fit and score `runs` times,
//! then test whether accuracy is above chance.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{self, Biography, Corpus, Gender, UNMAPPED_FIELD};
use crate::error::{Error, Result};
use crate::model::{self, HyperParams};
use crate::seed;
use crate::textproc::{FeatureVector, Mode, Preprocessing, Vocabulary};

/// Chance level on a gender-balanced test set.
pub const CHANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub runs: usize,
    /// Fraction of each (occupation, gender) group used for training.
    pub split_ratio: f64,
    /// Per-gender vocabulary cutoff.
    pub k: usize,
    pub seed: u64,
    pub params: HyperParams,
    /// One-sided significance level.
    pub alpha: f64,
    /// Rebuild the vocabulary from each run's training fold only.
    pub strict_vocabulary: bool,
    /// Minimum balanced records per gender for a per-field experiment.
    pub min_per_gender: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::AdjOnly,
            runs: 50,
            split_ratio: 0.7,
            k: 100,
            seed: 0,
            params: HyperParams::default(),
            alpha: 0.05,
            strict_vocabulary: false,
            min_per_gender: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split_ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        self.params.validate()
    }
}

/// Outcome of a one-sided one-sample t-test against [`CHANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// `None` when the accuracies have zero variance.
    pub t_statistic: Option<f64>,
    pub critical_value: f64,
    pub significant: bool,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One-sided t-test of `accuracies` against 0.5 at level `alpha`.
///
/// With zero variance the verdict is simply `mean > 0.5`.
pub fn t_test(accuracies: &[f64], alpha: f64) -> Result<TTest> {
    if accuracies.len() < 2 {
        return Err(Error::TooFewRuns(accuracies.len()));
    }
    let n = accuracies.len();
    let (mean, std) = mean_std(accuracies);
    let df = (n - 1) as f64;
    let critical_value = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(e.to_string()))?
        .inverse_cdf(1.0 - alpha);
    // spread below rounding noise counts as none
    let (t_statistic, significant) = if std <= 1e-12 * mean.abs().max(1.0) {
        (None, mean > CHANCE)
    } else {
        let t = (mean - CHANCE) / (std / (n as f64).sqrt());
        (Some(t), t > critical_value)
    };
    Ok(TTest {
        n,
        mean,
        std,
        t_statistic,
        critical_value,
        significant,
    })
}

pub fn significance(accuracies: &[f64], alpha: f64) -> Result<bool> {
    t_test(accuracies, alpha).map(|t| t.significant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// `"global"` or a field name.
    pub scope: String,
    pub mode: Mode,
    pub runs: usize,
    pub seed: u64,
    pub run_accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the run accuracies, as a fraction.
    pub std: f64,
    /// The same spread in percentage points.
    pub std_percent: f64,
    pub t_statistic: Option<f64>,
    pub critical_value: Option<f64>,
    pub alpha: f64,
    pub significant: bool,
    pub vocabulary_size: usize,
    /// Size of each run's balanced sample (identical across runs).
    pub balanced_size: usize,
    pub train_size: usize,
    pub test_size: usize,
}

/// Indices of one run's training and test folds, stratified by
/// (occupation, gender).
pub fn stratified_split(
    records: &[Biography],
    sample: &[usize],
    ratio: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut groups: BTreeMap<(&str, Gender), Vec<usize>> = BTreeMap::new();
    for &i in sample {
        groups
            .entry((records[i].occupation.as_str(), records[i].gender))
            .or_default()
            .push(i);
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in groups.into_values() {
        members.shuffle(&mut rng);
        let cut = (ratio * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

struct RunOutcome {
    accuracy: f64,
    balanced: usize,
    train: usize,
    test: usize,
}

/// Tokenized corpus ready for repeated runs.
struct Prepared<'a> {
    records: &'a [Biography],
    streams: Vec<Vec<String>>,
    labels: Vec<u8>,
    /// Encoded documents under the shared vocabulary, if not strict.
    shared: Option<(Vocabulary, Vec<FeatureVector>)>,
}

fn run_once(
    prepared: &Prepared<'_>,
    config: &ExperimentConfig,
    prep: &Preprocessing,
    run: usize,
) -> Result<RunOutcome> {
    let fail = |reason: String| Error::RunFailed { run, reason };
    let records = prepared.records;
    let run_seed = seed::derive(config.seed, seed::STREAM_RUN, run as u64);
    let sample = corpus::balanced_indices(records, seed::derive(run_seed, seed::STREAM_BALANCE, 0));
    let (train_idx, test_idx) = stratified_split(
        records,
        &sample,
        config.split_ratio,
        seed::derive(run_seed, seed::STREAM_SPLIT, 0),
    );
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(fail(format!(
            "empty fold (train {}, test {})",
            train_idx.len(),
            test_idx.len()
        )));
    }

    let strict;
    let (vocab, encoded): (&Vocabulary, Option<&[FeatureVector]>) = match &prepared.shared {
        Some((v, e)) => (v, Some(e)),
        None => {
            let docs = train_idx
                .iter()
                .map(|&i| (records[i].gender, prepared.streams[i].as_slice()));
            strict = Vocabulary::from_streams(docs, config.mode, config.k, &prep.pos)
                .map_err(|e| fail(e.to_string()))?;
            (&strict, None)
        }
    };
    let features = |idx: &[usize]| -> Vec<FeatureVector> {
        idx.iter()
            .map(|&i| match encoded {
                Some(e) => e[i].clone(),
                None => vocab.encode_tokens(&prepared.streams[i]),
            })
            .collect()
    };
    let labels = |idx: &[usize]| -> Vec<u8> { idx.iter().map(|&i| prepared.labels[i]).collect() };

    let (x_train, y_train) = (features(&train_idx), labels(&train_idx));
    let (x_test, y_test) = (features(&test_idx), labels(&test_idx));
    let fit = model::train(&x_train, &y_train, &config.params).map_err(|e| fail(e.to_string()))?;
    let accuracy = fit
        .model
        .accuracy(&x_test, &y_test)
        .map_err(|e| fail(e.to_string()))?;
    Ok(RunOutcome {
        accuracy,
        balanced: sample.len(),
        train: train_idx.len(),
        test: test_idx.len(),
    })
}

/// Runs the repeated balanced-holdout experiment over `corpus`.
///
/// Each run derives its own seed from `(config.seed, run)`, so runs execute in
/// parallel and still reproduce the serial result exactly.
pub fn run_experiment(
    corpus: &Corpus,
    prep: &Preprocessing,
    config: &ExperimentConfig,
    scope: &str,
) -> Result<ExperimentResult> {
    config.validate()?;
    if Gender::ALL.iter().any(|&g| corpus.count(g) == 0) {
        return Err(Error::SingleClass);
    }
    let streams = prep.process_corpus(corpus);
    let shared = if config.strict_vocabulary {
        None
    } else {
        let docs = corpus
            .iter()
            .zip(&streams)
            .map(|(r, s)| (r.gender, s.as_slice()));
        let vocab = Vocabulary::from_streams(docs, config.mode, config.k, &prep.pos)?;
        let encoded = streams.par_iter().map(|s| vocab.encode_tokens(s)).collect();
        Some((vocab, encoded))
    };
    let prepared = Prepared {
        records: corpus.records(),
        labels: corpus.iter().map(|r| r.gender.label()).collect(),
        streams,
        shared,
    };

    let outcomes: Vec<RunOutcome> = (0..config.runs)
        .into_par_iter()
        .map(|run| run_once(&prepared, config, prep, run))
        .collect::<Result<_>>()?;

    let run_accuracies: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let (mean, std) = mean_std(&run_accuracies);
    let test = t_test(&run_accuracies, config.alpha).ok();
    let first = &outcomes[0];
    Ok(ExperimentResult {
        scope: scope.to_string(),
        mode: config.mode,
        runs: config.runs,
        seed: config.seed,
        mean,
        std,
        std_percent: std * 100.0,
        t_statistic: test.and_then(|t| t.t_statistic),
        critical_value: test.map(|t| t.critical_value),
        alpha: config.alpha,
        significant: test.is_some_and(|t| t.significant),
        vocabulary_size: prepared.shared.as_ref().map_or(0, |(v, _)| v.len()),
        balanced_size: first.balanced,
        train_size: first.train,
        test_size: first.test,
        run_accuracies,
    })
}

/// Per-field experiment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FieldOutcome {
    Completed(ExperimentResult),
    InsufficientData {
        female: usize,
        male: usize,
        balanced_per_gender: usize,
        required_per_gender: usize,
    },
    Failed {
        reason: String,
    },
}

/// One independent experiment per occupation field, each with its own
/// vocabulary. Records must already carry a field; the unmapped field is
/// skipped.
pub fn run_per_field(
    corpus: &Corpus,
    prep: &Preprocessing,
    config: &ExperimentConfig,
) -> Result<BTreeMap<String, FieldOutcome>> {
    config.validate()?;
    let mut fields: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in corpus.iter().enumerate() {
        match r.field.as_deref() {
            Some(f) if f != UNMAPPED_FIELD => fields.entry(f).or_default().push(i),
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    for (field, indices) in fields {
        let sub = corpus.select(&indices);
        let balanced = corpus::balanced_size_per_gender(sub.records());
        let outcome = if balanced < config.min_per_gender {
            FieldOutcome::InsufficientData {
                female: sub.count(Gender::Female),
                male: sub.count(Gender::Male),
                balanced_per_gender: balanced,
                required_per_gender: config.min_per_gender,
            }
        } else {
            match run_experiment(&sub, prep, config, field) {
                Ok(result) => FieldOutcome::Completed(result),
                Err(e) => FieldOutcome::Failed {
                    reason: e.to_string(),
                },
            }
        };
        out.insert(field.to_string(), outcome);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_chance_is_not_significant() {
        assert!(!significance(&[0.5; 10], 0.05).unwrap());
    }

    #[test]
    fn zero_variance_above_chance_is_significant() {
        assert!(significance(&[0.7, 0.7, 0.7, 0.7], 0.05).unwrap());
        assert!(!significance(&[0.4, 0.4], 0.05).unwrap());
    }

    #[test]
    fn needs_two_runs() {
        assert!(matches!(
            significance(&[0.9], 0.05),
            Err(Error::TooFewRuns(1))
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.split_ratio = 1.0;
        assert!(c.validate().is_err());
        c.split_ratio = 0.7;
        c.runs = 0;
        assert!(c.validate().is_err());
    }

    fn bio(i: usize, gender: Gender, occupation: &str) -> Biography {
        Biography {
            id: i.to_string(),
            gender,
            occupation: occupation.into(),
            field: None,
            overview: "x".into(),
        }
    }

    #[test]
    fn split_is_disjoint_and_balanced_per_occupation() {
        let mut records = Vec::new();
        for i in 0..30 {
            let occ = if i % 3 == 0 { "a" } else { "b" };
            records.push(bio(i, Gender::Female, occ));
            records.push(bio(100 + i, Gender::Male, occ));
        }
        let sample = corpus::balanced_indices(&records, 5);
        let (train, test) = stratified_split(&records, &sample, 0.7, 9);
        let mut union: Vec<usize> = train.iter().chain(&test).copied().collect();
        union.sort_unstable();
        assert_eq!(union, sample);
        for fold in [&train, &test] {
            for occ in ["a", "b"] {
                let f = fold
                    .iter()
                    .filter(|&&i| {
                        records[i].occupation == occ && records[i].gender == Gender::Female
                    })
                    .count();
                let m = fold
                    .iter()
                    .filter(|&&i| records[i].occupation == occ && records[i].gender == Gender::Male)
                    .count();
                assert!(f.abs_diff(m) <= 1);
            }
        }
    }
}
