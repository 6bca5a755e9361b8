//! C ABI over the `biasaudit` library.
//!
//! Objects cross the boundary as opaque handles created and destroyed by
//! paired `*_new`/`*_load`/`*_build` and `*_free` functions. Fallible calls
//! return a [`BiasauditStatus`] and write their result through an out
//! pointer; the message of the most recent failure on the calling thread is
//! available from [`biasaudit_last_error`]. Strings returned to the caller
//! are owned by the caller and must be released with [`biasaudit_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use biasaudit::corpus::{self, CorpusFormat};
use biasaudit::report::{self, AnalysisConfig};
use biasaudit::seed;
use biasaudit::synth::SyntheticSpec;
use biasaudit::{model, textproc};
use biasaudit::{
    Corpus, Error, ErrorKind, ExperimentConfig, HyperParams, Mode, Resources, TrainedModel,
    Vocabulary,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasauditStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid configuration or argument value.
    Config = 3,
    /// The data could not be processed (malformed, too small, single class).
    Data = 4,
    /// A file could not be read or written.
    Io = 5,
    /// An index was outside the valid range.
    OutOfRange = 6,
    /// The library panicked; the handle arguments should be considered unusable.
    Panic = 7,
}

/// Feature set used for the vocabulary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasauditMode {
    Adjectives = 0,
    AdjectivesAndNouns = 1,
}

impl From<BiasauditMode> for Mode {
    fn from(m: BiasauditMode) -> Mode {
        match m {
            BiasauditMode::Adjectives => Mode::AdjOnly,
            BiasauditMode::AdjectivesAndNouns => Mode::AdjNoun,
        }
    }
}

/// A loaded corpus of biographies.
pub struct BiasauditCorpus(Corpus);

/// Stoplist, neutralization map, word lists and lexicons.
pub struct BiasauditResources(Resources);

pub struct BiasauditVocabulary(Vocabulary);

/// A fitted model together with the vocabulary its weights are aligned to.
pub struct BiasauditModel {
    model: TrainedModel,
    vocabulary: Vocabulary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(BiasauditStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Config => BiasauditStatus::Config,
            ErrorKind::Data => BiasauditStatus::Data,
            ErrorKind::Io => BiasauditStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(BiasauditStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Outcome<()>) -> BiasauditStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BiasauditStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            BiasauditStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            BiasauditStatus::InvalidUtf8,
            format!("`{what}` is not UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Outcome<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(BiasauditStatus::Data, "string contains a NUL byte".into()))
}

unsafe fn resources_or_bundled(p: *const BiasauditResources) -> Resources {
    match p.as_ref() {
        Some(r) => r.0.clone(),
        None => Resources::bundled(),
    }
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn biasaudit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn biasaudit_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a `.jsonl` or `.tsv` corpus file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_corpus_load(
    path: *const c_char,
    out: *mut *mut BiasauditCorpus,
) -> BiasauditStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let loaded = corpus::load_corpus(path, CorpusFormat::from_path(path.as_ref()))?;
        write_out(
            out,
            Box::into_raw(Box::new(BiasauditCorpus(loaded.corpus))),
            "out",
        )
    })
}

/// Generates a synthetic corpus. With `planted` set, one word is present in
/// 30% of female and 10% of male overviews; otherwise there is no signal.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_corpus_synthetic(
    planted: bool,
    docs_per_gender: usize,
    seed: u64,
    out: *mut *mut BiasauditCorpus,
) -> BiasauditStatus {
    guard(|| {
        let mut spec = if planted {
            SyntheticSpec::planted(seed)
        } else {
            SyntheticSpec::null(seed)
        };
        spec.docs_per_gender = docs_per_gender;
        let corpus = spec.generate()?;
        write_out(out, Box::into_raw(Box::new(BiasauditCorpus(corpus))), "out")
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_corpus_len(corpus: *const BiasauditCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_corpus_free(corpus: *mut BiasauditCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// The bundled resources. Never null.
#[no_mangle]
pub extern "C" fn biasaudit_resources_bundled() -> *mut BiasauditResources {
    Box::into_raw(Box::new(BiasauditResources(Resources::bundled())))
}

/// # Safety
/// `resources` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_resources_free(resources: *mut BiasauditResources) {
    if !resources.is_null() {
        drop(Box::from_raw(resources));
    }
}

/// Builds the vocabulary from the `k` most frequent words per gender.
/// `resources` may be null to use the bundled ones.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_vocabulary_build(
    corpus: *const BiasauditCorpus,
    resources: *const BiasauditResources,
    mode: BiasauditMode,
    k: usize,
    out: *mut *mut BiasauditVocabulary,
) -> BiasauditStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus")?;
        let resources = resources_or_bundled(resources);
        let vocab = Vocabulary::build(&corpus.0, mode.into(), k, &resources.preprocessing)?;
        write_out(
            out,
            Box::into_raw(Box::new(BiasauditVocabulary(vocab))),
            "out",
        )
    })
}

/// Number of words, or 0 for a null handle.
///
/// # Safety
/// `vocabulary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_vocabulary_len(vocabulary: *const BiasauditVocabulary) -> usize {
    vocabulary.as_ref().map_or(0, |v| v.0.len())
}

/// Copies word `index` into a new string owned by the caller.
///
/// # Safety
/// `vocabulary` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_vocabulary_word(
    vocabulary: *const BiasauditVocabulary,
    index: usize,
    out: *mut *mut c_char,
) -> BiasauditStatus {
    guard(|| {
        let vocab = handle(vocabulary, "vocabulary")?;
        let word = vocab.0.words().get(index).ok_or_else(|| {
            Failure(
                BiasauditStatus::OutOfRange,
                format!("index {index} outside vocabulary of {}", vocab.0.len()),
            )
        })?;
        write_out(out, into_c_string(word.clone())?, "out")
    })
}

/// # Safety
/// `vocabulary` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_vocabulary_free(vocabulary: *mut BiasauditVocabulary) {
    if !vocabulary.is_null() {
        drop(Box::from_raw(vocabulary));
    }
}

/// Fits a model with default hyperparameters on a gender-balanced draw of
/// `corpus` chosen by `seed`. The model keeps its own copy of the vocabulary.
///
/// # Safety
/// Handles must be live (`resources` may be null); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_train(
    corpus: *const BiasauditCorpus,
    vocabulary: *const BiasauditVocabulary,
    resources: *const BiasauditResources,
    seed: u64,
    out: *mut *mut BiasauditModel,
) -> BiasauditStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus")?;
        let vocab = handle(vocabulary, "vocabulary")?;
        let resources = resources_or_bundled(resources);
        let balanced =
            corpus::balance_by_occupation(&corpus.0, seed::derive(seed, seed::STREAM_FINAL, 0));
        let streams = resources.preprocessing.process_corpus(&balanced);
        let x: Vec<_> = streams.iter().map(|s| vocab.0.encode_tokens(s)).collect();
        let y: Vec<u8> = balanced.iter().map(|r| r.gender.label()).collect();
        let trained = model::train(&x, &y, &HyperParams::default())?
            .model
            .bind(&vocab.0)?;
        let handle = BiasauditModel {
            model: trained,
            vocabulary: vocab.0.clone(),
        };
        write_out(out, Box::into_raw(Box::new(handle)), "out")
    })
}

/// Probability that `text` describes a woman.
///
/// # Safety
/// `model` must be live (`resources` may be null); `text` NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_predict_proba(
    model: *const BiasauditModel,
    resources: *const BiasauditResources,
    text: *const c_char,
    out: *mut f64,
) -> BiasauditStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let text = str_arg(text, "text")?;
        let resources = resources_or_bundled(resources);
        let x = textproc::encode(text, &m.vocabulary, &resources.preprocessing);
        write_out(out, m.model.predict_proba(&x)?, "out")
    })
}

/// Weight of word `index`; positive weights favour the female class.
///
/// # Safety
/// `model` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_weight(
    model: *const BiasauditModel,
    index: usize,
    out: *mut f64,
) -> BiasauditStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let w = m.model.weights.get(index).copied().ok_or_else(|| {
            Failure(
                BiasauditStatus::OutOfRange,
                format!("index {index} outside {} weights", m.model.weights.len()),
            )
        })?;
        write_out(out, w, "out")
    })
}

/// Serializes the model to its text form (caller frees the string).
///
/// # Safety
/// `model` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_to_text(
    model: *const BiasauditModel,
    out: *mut *mut c_char,
) -> BiasauditStatus {
    guard(|| {
        let m = handle(model, "model")?;
        write_out(out, into_c_string(m.model.to_text(&m.vocabulary)?)?, "out")
    })
}

/// Restores a model from its text form. The vocabulary must be the one the
/// model was trained with; this is verified by fingerprint.
///
/// # Safety
/// `text` NUL-terminated; `vocabulary` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_from_text(
    text: *const c_char,
    vocabulary: *const BiasauditVocabulary,
    out: *mut *mut BiasauditModel,
) -> BiasauditStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let vocab = handle(vocabulary, "vocabulary")?;
        let m = BiasauditModel {
            model: TrainedModel::parse(text, &vocab.0)?,
            vocabulary: vocab.0.clone(),
        };
        write_out(out, Box::into_raw(Box::new(m)), "out")
    })
}

/// # Safety
/// `model` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_model_free(model: *mut BiasauditModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the full audit and returns the report as JSON (caller frees).
///
/// `config_json` may be null for defaults, or a JSON object with any of the
/// experiment settings (`mode`, `runs`, `split_ratio`, `k`, `seed`, `params`,
/// `alpha`, `strict_vocabulary`, `min_per_gender`).
///
/// # Safety
/// `corpus` must be live (`resources` may be null); `config_json` null or
/// NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biasaudit_audit_json(
    corpus: *const BiasauditCorpus,
    resources: *const BiasauditResources,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> BiasauditStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus")?;
        let resources = resources_or_bundled(resources);
        let config: ExperimentConfig = if config_json.is_null() {
            ExperimentConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)
                .map_err(|e| Failure(BiasauditStatus::Config, format!("config_json: {e}")))?
        };
        let echo = serde_json::to_value(&config).unwrap_or_default();
        let artifacts = report::audit(
            &corpus.0,
            None,
            &resources,
            &config,
            &AnalysisConfig::default(),
            echo,
        )?;
        write_out(
            out,
            into_c_string(report::to_json(&artifacts.report)?)?,
            "out",
        )
    })
}
