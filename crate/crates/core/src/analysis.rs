//! Explaining a trained model: predictive words with subjectivity
//! annotations, per-gender frequencies, word correlations, corpus-level
//! subjectivity shares and topic categories.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Gender};
use crate::error::{Error, Result};
use crate::lexicon::{CategoryLexicon, PartOfSpeech, Polarity, Strength, SubjectivityLexicon};
use crate::model::TrainedModel;
use crate::textproc::{pos_filter, Mode, Preprocessing, Vocabulary};

/// Per-document sets of preprocessed tokens, with the document's gender.
#[derive(Debug, Clone)]
pub struct PresenceTable {
    docs: Vec<(Gender, HashSet<String>)>,
}

impl PresenceTable {
    pub fn build(corpus: &Corpus, prep: &Preprocessing) -> Self {
        let streams = prep.process_corpus(corpus);
        PresenceTable {
            docs: corpus
                .iter()
                .zip(streams)
                .map(|(r, s)| (r.gender, s.into_iter().collect()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Fraction of each gender's documents containing `word`: `(female, male)`.
    pub fn frequency(&self, word: &str) -> (f64, f64) {
        let mut hits = [0usize; 2];
        let mut totals = [0usize; 2];
        for (g, tokens) in &self.docs {
            let slot = g.label() as usize;
            totals[slot] += 1;
            hits[slot] += usize::from(tokens.contains(word));
        }
        let frac = |slot: usize| {
            if totals[slot] == 0 {
                0.0
            } else {
                hits[slot] as f64 / totals[slot] as f64
            }
        };
        (
            frac(Gender::Female.label() as usize),
            frac(Gender::Male.label() as usize),
        )
    }

    /// Presence column for `word` across all documents.
    pub fn column(&self, word: &str) -> Vec<bool> {
        self.docs.iter().map(|(_, t)| t.contains(word)).collect()
    }
}

pub fn word_frequency(corpus: &Corpus, word: &str, prep: &Preprocessing) -> (f64, f64) {
    PresenceTable::build(corpus, prep).frequency(word)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveWord {
    pub word: String,
    pub weight: f64,
    pub direction: Gender,
    /// `None` when the lexicon does not know the word.
    pub strength: Option<Strength>,
    pub polarity: Option<Polarity>,
    pub freq_female: f64,
    pub freq_male: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveWordReport {
    pub female: Vec<PredictiveWord>,
    pub male: Vec<PredictiveWord>,
}

impl PredictiveWordReport {
    pub fn rows(&self) -> impl Iterator<Item = &PredictiveWord> {
        self.female.iter().chain(&self.male)
    }
}

/// Part of speech used to look a vocabulary word up in the lexicon.
fn lookup_pos(word: &str, mode: Mode, prep: &Preprocessing) -> PartOfSpeech {
    match mode {
        Mode::AdjOnly => PartOfSpeech::Adjective,
        Mode::AdjNoun if prep.pos.is_adjective(word) => PartOfSpeech::Adjective,
        Mode::AdjNoun => PartOfSpeech::Noun,
    }
}

/// Top `n` words per direction joined with their subjectivity and frequency.
pub fn annotate_predictive_words(
    model: &TrainedModel,
    vocabulary: &Vocabulary,
    lexicon: &SubjectivityLexicon,
    presence: &PresenceTable,
    prep: &Preprocessing,
    n: usize,
) -> PredictiveWordReport {
    let rows = |direction: Gender| -> Vec<PredictiveWord> {
        model
            .top_coefficients(vocabulary, n, direction)
            .into_iter()
            .map(|(word, weight)| {
                let annotation = lexicon.lookup(&word, lookup_pos(&word, vocabulary.mode(), prep));
                let (freq_female, freq_male) = presence.frequency(&word);
                PredictiveWord {
                    word,
                    weight,
                    direction,
                    strength: annotation.map(|a| a.strength),
                    polarity: annotation.map(|a| a.polarity),
                    freq_female,
                    freq_male,
                }
            })
            .collect()
    };
    PredictiveWordReport {
        female: rows(Gender::Female),
        male: rows(Gender::Male),
    }
}

/// Pairwise phi coefficients between word presence indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub words: Vec<String>,
    /// `None` where either column has zero variance.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// CSV with a header row and a leading word column; undefined cells are `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word");
        for w in &self.words {
            out.push(',');
            out.push_str(&csv_field(w));
        }
        out.push('\n');
        for (w, row) in self.words.iter().zip(&self.values) {
            out.push_str(&csv_field(w));
            for v in row {
                out.push(',');
                match v {
                    Some(v) => out.push_str(&format!("{v:?}")),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Pearson correlation of binary columns, computed from centred values.
pub fn correlation_from_columns(
    words: Vec<String>,
    columns: &[Vec<bool>],
) -> Result<CorrelationMatrix> {
    if columns.is_empty() {
        return Err(Error::EmptyWordList);
    }
    let n = columns[0].len();
    if n < 2 {
        return Err(Error::TooFewDocuments(n));
    }
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().filter(|&&b| b).count() as f64 / n as f64;
            c.iter().map(|&b| f64::from(u8::from(b)) - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>())
        .collect();
    let d = columns.len();
    let mut values = vec![vec![None; d]; d];
    for i in 0..d {
        if norms[i] == 0.0 {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in (i + 1)..d {
            if norms[j] == 0.0 {
                continue;
            }
            let cov: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = (cov / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0);
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix { words, values })
}

pub fn correlation_matrix(
    corpus: &Corpus,
    words: &[String],
    prep: &Preprocessing,
) -> Result<CorrelationMatrix> {
    correlation_from_presence(&PresenceTable::build(corpus, prep), words)
}

pub fn correlation_from_presence(
    presence: &PresenceTable,
    words: &[String],
) -> Result<CorrelationMatrix> {
    if words.is_empty() {
        return Err(Error::EmptyWordList);
    }
    let columns: Vec<Vec<bool>> = words.iter().map(|w| presence.column(w)).collect();
    correlation_from_columns(words.to_vec(), &columns)
}

/// Shares of adjective tokens per strength and polarity bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectivityShares {
    pub tokens: usize,
    pub weak: f64,
    pub strong: f64,
    pub strength_unknown: f64,
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
    pub polarity_unknown: f64,
}

#[derive(Default)]
struct SubjectivityCounts {
    tokens: usize,
    weak: usize,
    strong: usize,
    positive: usize,
    negative: usize,
    neutral: usize,
    unknown: usize,
}

impl SubjectivityCounts {
    fn add(&mut self, lexicon: &SubjectivityLexicon, word: &str) {
        self.tokens += 1;
        match lexicon.lookup(word, PartOfSpeech::Adjective) {
            None => self.unknown += 1,
            Some(a) => {
                match a.strength {
                    Strength::Weak => self.weak += 1,
                    Strength::Strong => self.strong += 1,
                }
                match a.polarity {
                    Polarity::Positive => self.positive += 1,
                    Polarity::Negative => self.negative += 1,
                    Polarity::Neutral => self.neutral += 1,
                }
            }
        }
    }

    fn merge(&mut self, other: &SubjectivityCounts) {
        self.tokens += other.tokens;
        self.weak += other.weak;
        self.strong += other.strong;
        self.positive += other.positive;
        self.negative += other.negative;
        self.neutral += other.neutral;
        self.unknown += other.unknown;
    }

    fn shares(&self) -> SubjectivityShares {
        if self.tokens == 0 {
            return SubjectivityShares::default();
        }
        let n = self.tokens as f64;
        SubjectivityShares {
            tokens: self.tokens,
            weak: self.weak as f64 / n,
            strong: self.strong as f64 / n,
            strength_unknown: self.unknown as f64 / n,
            positive: self.positive as f64 / n,
            negative: self.negative as f64 / n,
            neutral: self.neutral as f64 / n,
            polarity_unknown: self.unknown as f64 / n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectivityDistribution {
    pub female: SubjectivityShares,
    pub male: SubjectivityShares,
    pub overall: SubjectivityShares,
}

/// Token-level subjectivity shares of the adjectives in each gender's overviews.
pub fn subjectivity_distribution(
    corpus: &Corpus,
    lexicon: &SubjectivityLexicon,
    prep: &Preprocessing,
) -> SubjectivityDistribution {
    let streams = prep.process_corpus(corpus);
    let mut counts: [SubjectivityCounts; 2] = Default::default();
    for (r, tokens) in corpus.iter().zip(&streams) {
        let slot = &mut counts[r.gender.label() as usize];
        for adj in pos_filter(tokens, Mode::AdjOnly, &prep.pos) {
            slot.add(lexicon, &adj);
        }
    }
    let [male, female] = counts;
    let mut overall = SubjectivityCounts::default();
    overall.merge(&female);
    overall.merge(&male);
    SubjectivityDistribution {
        female: female.shares(),
        male: male.shares(),
        overall: overall.shares(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub category: String,
    pub score: f64,
    pub words: Vec<String>,
}

/// Categories ranked by the summed |weight| of the predictive words they
/// contain; zero-score categories are omitted, ties broken by name.
pub fn extract_topics(
    words: &[(String, f64)],
    categories: &CategoryLexicon,
    n: usize,
) -> Vec<TopicScore> {
    let mut scored: Vec<TopicScore> = categories
        .categories()
        .iter()
        .filter_map(|(name, members)| {
            let hits: Vec<&(String, f64)> =
                words.iter().filter(|(w, _)| members.contains(w)).collect();
            let score: f64 = hits.iter().map(|(_, weight)| weight.abs()).sum();
            (score > 0.0).then(|| TopicScore {
                category: name.clone(),
                score,
                words: hits.iter().map(|(w, _)| w.clone()).collect(),
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.category.cmp(&b.category))
    });
    scored.truncate(n);
    scored
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub female: Vec<TopicScore>,
    pub male: Vec<TopicScore>,
}

/// Topics for each direction from the model's `n_words` strongest words.
pub fn topics_by_direction(
    model: &TrainedModel,
    vocabulary: &Vocabulary,
    categories: &CategoryLexicon,
    n_words: usize,
    n_topics: usize,
) -> TopicReport {
    let topics = |g| {
        extract_topics(
            &model.top_coefficients(vocabulary, n_words, g),
            categories,
            n_topics,
        )
    };
    TopicReport {
        female: topics(Gender::Female),
        male: topics(Gender::Male),
    }
}
