//! Text to binary bag-of-words features.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Gender};
use crate::error::{Error, Result};
use crate::lexicon::{NeutralizationMap, PosLists, Stoplist};

const VOCAB_MAGIC: &str = "# biasaudit-vocabulary";

/// Which parts of speech enter the vocabulary.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum, Default,
)]
pub enum Mode {
    /// Adjectives only.
    #[default]
    #[serde(rename = "adj")]
    #[value(name = "adj")]
    AdjOnly,
    /// Adjectives and nouns.
    #[serde(rename = "adjnoun")]
    #[value(name = "adjnoun")]
    AdjNoun,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::AdjOnly => "adj",
            Mode::AdjNoun => "adjnoun",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adj" => Ok(Mode::AdjOnly),
            "adjnoun" => Ok(Mode::AdjNoun),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Splits text into lowercase word tokens.
///
/// Tokens are maximal alphanumeric runs. An apostrophe between two
/// alphanumeric characters stays inside the token, and a `*` directly after a
/// token is kept as its final character (the neutral forms such as `act*`).
/// Tokens without any letter are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        if current.chars().any(char::is_alphabetic) {
            tokens.push(std::mem::take(current));
        } else {
            current.clear();
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let next_alnum = chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if c == '\'' && !current.is_empty() && next_alnum {
            current.push(c);
        } else if c == '*' && !current.is_empty() && !next_alnum {
            current.push(c);
            flush(&mut current);
        } else {
            flush(&mut current);
        }
    }
    flush(&mut current);
    tokens
}

/// Keeps the tokens allowed by `mode`, preserving order and repeats.
pub fn pos_filter(tokens: &[String], mode: Mode, pos: &PosLists) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| pos_allowed(t, mode, pos))
        .cloned()
        .collect()
}

fn pos_allowed(token: &str, mode: Mode, pos: &PosLists) -> bool {
    match mode {
        Mode::AdjOnly => pos.is_adjective(token),
        Mode::AdjNoun => pos.is_adjective(token) || pos.is_noun(token),
    }
}

/// Stoplist, neutralization map and POS lists applied to every document.
#[derive(Debug, Clone, Default)]
pub struct Preprocessing {
    pub stoplist: Stoplist,
    pub neutralization: NeutralizationMap,
    pub pos: PosLists,
}

impl Preprocessing {
    pub fn bundled() -> Self {
        Preprocessing {
            stoplist: Stoplist::bundled(),
            neutralization: NeutralizationMap::bundled(),
            pos: PosLists::bundled(),
        }
    }

    /// Neutralizes gendered forms, then removes stopwords.
    pub fn preprocess(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| self.neutralization.neutralize(t))
            .filter(|t| !self.stoplist.contains(t))
            .map(str::to_string)
            .collect()
    }

    /// [`tokenize`] followed by [`Self::preprocess`].
    pub fn process(&self, text: &str) -> Vec<String> {
        self.preprocess(&tokenize(text))
    }

    /// Preprocessed token streams for every record, in corpus order.
    pub fn process_corpus(&self, corpus: &Corpus) -> Vec<Vec<String>> {
        corpus
            .records()
            .par_iter()
            .map(|r| self.process(&r.overview))
            .collect()
    }
}

/// Ordered union of the per-gender top-k words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    mode: Mode,
    k: usize,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>, mode: Mode, k: usize) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary {
            words,
            index,
            mode,
            k,
        })
    }

    /// Builds the vocabulary from the whole corpus.
    pub fn build(corpus: &Corpus, mode: Mode, k: usize, prep: &Preprocessing) -> Result<Self> {
        let streams = prep.process_corpus(corpus);
        let docs = corpus
            .iter()
            .zip(&streams)
            .map(|(r, s)| (r.gender, s.as_slice()));
        Vocabulary::from_streams(docs, mode, k, &prep.pos)
    }

    /// Builds from already preprocessed token streams.
    ///
    /// Token occurrences of POS-allowed words are counted per gender; each
    /// gender's `k` most frequent words are taken (ties lexicographic) and the
    /// female list is followed by the male words not already present.
    pub fn from_streams<'a>(
        docs: impl IntoIterator<Item = (Gender, &'a [String])>,
        mode: Mode,
        k: usize,
        pos: &PosLists,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        let mut counts: [HashMap<&str, usize>; 2] = Default::default();
        for (gender, tokens) in docs {
            let table = &mut counts[gender.label() as usize];
            for t in tokens.iter().filter(|t| pos_allowed(t, mode, pos)) {
                *table.entry(t.as_str()).or_default() += 1;
            }
        }
        let top = |gender: Gender| -> Result<Vec<&str>> {
            let table = &counts[gender.label() as usize];
            if table.is_empty() {
                return Err(Error::NoTokens(gender));
            }
            let mut ranked: Vec<(&str, usize)> = table.iter().map(|(w, c)| (*w, *c)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            Ok(ranked.into_iter().take(k).map(|(w, _)| w).collect())
        };
        let female = top(Gender::Female)?;
        let male = top(Gender::Male)?;
        let mut words: Vec<String> = female.iter().map(|w| w.to_string()).collect();
        for w in male {
            if !female.contains(&w) {
                words.push(w.to_string());
            }
        }
        Vocabulary::from_words(words, mode, k)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// SHA-256 over the newline-joined word list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.words.join("\n").as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Presence vector for an already preprocessed token stream.
    pub fn encode_tokens(&self, tokens: &[String]) -> FeatureVector {
        let mut active: Vec<u32> = tokens
            .iter()
            .filter_map(|t| self.position(t).map(|i| i as u32))
            .collect();
        active.sort_unstable();
        active.dedup();
        FeatureVector {
            dim: self.len(),
            active,
        }
    }

    /// Header line recording mode and k, then one word per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{VOCAB_MAGIC} mode={} k={} size={}\n",
            self.mode,
            self.k,
            self.len()
        );
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let bad = |message: &str| Error::Malformed {
            path: "vocabulary".into(),
            line: 1,
            message: message.into(),
        };
        let rest = header
            .strip_prefix(VOCAB_MAGIC)
            .ok_or_else(|| bad("missing vocabulary header"))?;
        let mut mode = None;
        let mut k = None;
        let mut size = None;
        for kv in rest.split_whitespace() {
            match kv.split_once('=') {
                Some(("mode", v)) => mode = Some(v.parse::<Mode>()?),
                Some(("k", v)) => k = v.parse::<usize>().ok(),
                Some(("size", v)) => size = v.parse::<usize>().ok(),
                _ => return Err(bad("unrecognized header field")),
            }
        }
        let (Some(mode), Some(k)) = (mode, k) else {
            return Err(bad("header lacks mode or k"));
        };
        let words: Vec<String> = lines
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if size.is_some_and(|s| s != words.len()) {
            return Err(bad("size does not match the word count"));
        }
        Vocabulary::from_words(words, mode, k)
    }
}

/// Binary presence vector, stored as the sorted indices of its set bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector {
    dim: usize,
    active: Vec<u32>,
}

impl FeatureVector {
    pub fn from_bits(bits: &[u8]) -> Self {
        FeatureVector {
            dim: bits.len(),
            active: bits
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0)
                .map(|(i, _)| i as u32)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.active.binary_search(&(i as u32)).is_ok()
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn bits(&self) -> Vec<u8> {
        let mut bits = vec![0u8; self.dim];
        for &i in &self.active {
            bits[i as usize] = 1;
        }
        bits
    }
}

/// Bit `i` is set iff vocabulary word `i` occurs in the preprocessed text.
pub fn encode(text: &str, vocabulary: &Vocabulary, prep: &Preprocessing) -> FeatureVector {
    vocabulary.encode_tokens(&prep.process(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Biography;
    use proptest::prelude::*;

    fn strings(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(
            tokenize("He was a FAMOUS player."),
            strings(&["he", "was", "a", "famous", "player"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("act* debuted in 1999"),
            strings(&["act*", "debuted", "in"])
        );
        assert_eq!(
            tokenize("O'Neil's  rock-'n'-roll, 2nd*"),
            strings(&["o'neil's", "rock", "n", "roll", "2nd*"])
        );
        assert_eq!(tokenize("Brontë’s ÉTÉ"), strings(&["brontë's", "été"]));
        assert_eq!(tokenize("*star* a**b"), strings(&["star*", "a*", "b"]));
    }

    #[test]
    fn preprocess_neutralizes_then_removes_stopwords() {
        let prep = Preprocessing::bundled();
        assert_eq!(
            prep.preprocess(&strings(&["she", "was", "beautiful"])),
            strings(&["beautiful"])
        );
        assert_eq!(
            prep.preprocess(&strings(&["actress", "and", "actor"])),
            strings(&["act*", "act*"])
        );
        assert!(prep.preprocess(&[]).is_empty());
    }

    #[test]
    fn pos_filter_modes() {
        let pos = PosLists::bundled();
        let tokens = strings(&["famous", "player", "ran"]);
        assert_eq!(
            pos_filter(&tokens, Mode::AdjOnly, &pos),
            strings(&["famous"])
        );
        assert_eq!(
            pos_filter(&tokens, Mode::AdjNoun, &pos),
            strings(&["famous", "player"])
        );
        assert!(pos_filter(&[], Mode::AdjNoun, &pos).is_empty());
    }

    #[test]
    fn encode_is_presence_only() {
        let prep = Preprocessing::bundled();
        let vocab =
            Vocabulary::from_words(strings(&["beautiful", "dancer", "war"]), Mode::AdjNoun, 3)
                .unwrap();
        assert_eq!(
            encode("a beautiful beautiful dancer", &vocab, &prep).bits(),
            vec![1, 1, 0]
        );
        assert_eq!(encode("nothing here", &vocab, &prep).bits(), vec![0, 0, 0]);
        assert_eq!(
            encode("war dancer beautiful", &vocab, &prep).bits(),
            vec![1, 1, 1]
        );
    }

    fn bio(id: usize, gender: Gender, text: &str) -> Biography {
        Biography {
            id: id.to_string(),
            gender,
            occupation: "x".into(),
            field: None,
            overview: text.into(),
        }
    }

    #[test]
    fn vocabulary_union_female_first() {
        let prep = Preprocessing::bundled();
        let corpus = Corpus::new(
            vec![
                bio(
                    0,
                    Gender::Female,
                    "She was beautiful, famous and creative. Beautiful.",
                ),
                bio(1, Gender::Male, "He was famous, offensive and hard."),
            ],
            "t",
        )
        .unwrap();
        let vocab = Vocabulary::build(&corpus, Mode::AdjOnly, 2, &prep).unwrap();
        // female: beautiful(2), then creative wins the tie with famous
        assert_eq!(
            vocab.words(),
            strings(&["beautiful", "creative", "famous", "hard"]).as_slice()
        );
        let round = Vocabulary::parse(&vocab.to_text()).unwrap();
        assert_eq!(round, vocab);
        assert_eq!(round.fingerprint(), vocab.fingerprint());
    }

    #[test]
    fn vocabulary_requires_tokens_for_both_genders() {
        let prep = Preprocessing::bundled();
        let corpus = Corpus::new(
            vec![
                bio(0, Gender::Female, "She was beautiful."),
                bio(1, Gender::Male, "He ran."),
            ],
            "t",
        )
        .unwrap();
        assert!(matches!(
            Vocabulary::build(&corpus, Mode::AdjOnly, 5, &prep),
            Err(Error::NoTokens(Gender::Male))
        ));
    }

    #[test]
    fn vocabulary_never_contains_stopwords_or_pronouns() {
        let mut prep = Preprocessing::bundled();
        prep.pos
            .adjectives
            .extend(strings(&["he", "she", "the", "her"]));
        let corpus = Corpus::new(
            vec![
                bio(0, Gender::Female, "she her the the beautiful"),
                bio(1, Gender::Male, "he the hard"),
            ],
            "t",
        )
        .unwrap();
        let vocab = Vocabulary::build(&corpus, Mode::AdjOnly, 10, &prep).unwrap();
        assert_eq!(vocab.words(), strings(&["beautiful", "hard"]).as_slice());
    }

    #[test]
    fn bad_vocabulary_header() {
        assert!(Vocabulary::parse("word\n").is_err());
        assert!(Vocabulary::parse("# biasaudit-vocabulary mode=adj k=2 size=3\na\nb\n").is_err());
    }

    proptest! {
        #[test]
        fn encode_ignores_repetition(words in proptest::collection::vec("[a-z]{1,6}", 0..20), reps in 1usize..4) {
            let prep = Preprocessing::bundled();
            let vocab = Vocabulary::from_words(
                vec!["beautiful".into(), "war".into(), "a".into(), "abc".into()], Mode::AdjNoun, 2).unwrap();
            let once = words.join(" ");
            let repeated = std::iter::repeat_n(once.clone(), reps).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(encode(&once, &vocab, &prep), encode(&repeated, &vocab, &prep));
        }

        #[test]
        fn tokens_have_no_whitespace_or_punctuation(text in "\\PC{0,80}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().all(|c| c.is_alphanumeric() || c == '\'' || c == '*'));
                prop_assert!(!t.starts_with('\'') && !t.ends_with('\''));
            }
        }
    }
}
