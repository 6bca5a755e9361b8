//! Measure gender-linked word usage in biography overviews.
//!
//! A logistic regression is trained to predict the subject's gender from
//! binary bag-of-words features on a corpus balanced per occupation. Accuracy
//! above chance is evidence that the two genders are described with different
//! words; the fitted coefficients, joined with a subjectivity lexicon,
//! per-gender frequencies, word correlations and lexical categories, explain
//! which words carry the difference.
//!
//! The pipeline is split into modules that mirror its stages:
//!
//! * [`corpus`]: loading, filtering, occupation fields and balancing
//! * [`fetch`]: page-summary client with an on-disk cache
//! * [`lexicon`]: subjectivity lexicon, POS lists, neutralization, categories
//! * [`textproc`]: tokenization, preprocessing, vocabulary and encoding
//! * [`model`]: logistic regression trained by gradient descent
//! * [`experiment`]: repeated balanced holdout and significance
//! * [`analysis`]: explaining a trained model
//! * [`synth`]: synthetic corpora with planted signal
//! * [`report`]: audit reports and their JSON/CSV/text renderings

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod fetch;
pub mod lexicon;
pub mod model;
pub mod report;
pub mod resources;
pub mod seed;
pub mod synth;
pub mod textproc;

pub use corpus::{Biography, Corpus, CorpusFormat, FieldMap, Gender};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{ExperimentConfig, ExperimentResult};
pub use lexicon::{CategoryLexicon, NeutralizationMap, PosLists, Stoplist, SubjectivityLexicon};
pub use model::{HyperParams, TrainedModel};
pub use resources::Resources;
pub use textproc::{FeatureVector, Mode, Preprocessing, Vocabulary};
