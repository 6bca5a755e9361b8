//! Word lists and lexicons: subjectivity clues, POS lists, stopwords,
//! gender neutralization and lexical categories.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_SUBJECTIVITY: &str = include_str!("../data/subjectivity.tff");
const BUNDLED_ADJECTIVES: &str = include_str!("../data/adjectives.txt");
const BUNDLED_NOUNS: &str = include_str!("../data/nouns.txt");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUNDLED_NEUTRALIZATION: &str = include_str!("../data/neutralization.tsv");
const BUNDLED_CATEGORIES: &str = include_str!("../data/categories.txt");

/// Pronouns that are always removed, whatever the configured stoplist says.
pub const GENDERED_PRONOUNS: [&str; 8] = [
    "he", "she", "him", "her", "his", "hers", "himself", "herself",
];

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Adjective,
    Noun,
    Verb,
    Adverb,
    Any,
}

impl PartOfSpeech {
    fn from_clue(tag: &str) -> Option<Self> {
        Some(match tag {
            "adj" => PartOfSpeech::Adjective,
            "noun" => PartOfSpeech::Noun,
            "verb" => PartOfSpeech::Verb,
            "adverb" => PartOfSpeech::Adverb,
            "anypos" => PartOfSpeech::Any,
            _ => return None,
        })
    }

    fn clue_tag(self) -> &'static str {
        match self {
            PartOfSpeech::Adjective => "adj",
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adverb => "adverb",
            PartOfSpeech::Any => "anypos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Weak => "weak",
            Strength::Strong => "strong",
        })
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    pub pos: PartOfSpeech,
    pub strength: Strength,
    pub polarity: Polarity,
}

/// Strength and polarity of a known word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub strength: Strength,
    pub polarity: Polarity,
}

/// Subjectivity clues in the MPQA `key=value` line format.
#[derive(Debug, Clone, Default)]
pub struct SubjectivityLexicon {
    entries: HashMap<String, Vec<LexiconEntry>>,
    order: Vec<String>,
    skipped: usize,
}

impl SubjectivityLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SUBJECTIVITY)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&read(path.as_ref())?))
    }

    /// Parses clue lines. Lines lacking `type` or `word1`, or carrying an
    /// unrecognized value, are skipped and counted in [`Self::skipped`].
    pub fn parse(text: &str) -> Self {
        let mut lex = SubjectivityLexicon::default();
        for (line_no, line) in content_lines(text) {
            match parse_clue(line) {
                Some(entry) => lex.push(entry),
                None => {
                    log::warn!("subjectivity lexicon line {line_no}: skipped");
                    lex.skipped += 1;
                }
            }
        }
        if lex.skipped > 0 {
            log::warn!(
                "subjectivity lexicon: {} malformed lines skipped",
                lex.skipped
            );
        }
        lex
    }

    fn push(&mut self, entry: LexiconEntry) {
        let rows = self.entries.entry(entry.word.clone()).or_default();
        if rows.is_empty() {
            self.order.push(entry.word.clone());
        }
        rows.push(entry);
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All rows, words in first-seen order.
    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.order.iter().flat_map(|w| self.entries[w].iter())
    }

    /// Rows matching `pos` exactly, falling back to `anypos` rows. Among several
    /// matches a strong row beats a weak one; within the winning strength the
    /// first-parsed row's polarity is used. `None` means the word is unknown.
    pub fn lookup(&self, word: &str, pos: PartOfSpeech) -> Option<Annotation> {
        let rows = self.entries.get(word)?;
        let pick = |wanted: PartOfSpeech| -> Option<Annotation> {
            let matching: Vec<&LexiconEntry> = rows.iter().filter(|r| r.pos == wanted).collect();
            let strength = matching.iter().map(|r| r.strength).max()?;
            let first = matching.iter().find(|r| r.strength == strength)?;
            if matching
                .iter()
                .any(|r| r.strength == strength && r.polarity != first.polarity)
            {
                log::debug!("`{word}` ({wanted:?}): conflicting polarities, using the first");
            }
            Some(Annotation {
                strength,
                polarity: first.polarity,
            })
        };
        pick(pos).or_else(|| pick(PartOfSpeech::Any))
    }

    /// Serializes back to clue lines.
    pub fn to_clue_format(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            let kind = match e.strength {
                Strength::Weak => "weaksubj",
                Strength::Strong => "strongsubj",
            };
            out.push_str(&format!(
                "type={kind} len=1 word1={} pos1={} stemmed1=n priorpolarity={}\n",
                e.word,
                e.pos.clue_tag(),
                e.polarity
            ));
        }
        out
    }
}

fn parse_clue(line: &str) -> Option<LexiconEntry> {
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for token in line.split_whitespace() {
        if let Some((k, v)) = token.split_once('=') {
            fields.insert(k, v);
        }
    }
    let strength = match *fields.get("type")? {
        "weaksubj" => Strength::Weak,
        "strongsubj" => Strength::Strong,
        _ => return None,
    };
    let word = fields.get("word1")?.to_lowercase();
    if word.is_empty() {
        return None;
    }
    let pos = match fields.get("pos1") {
        Some(tag) => PartOfSpeech::from_clue(tag)?,
        None => PartOfSpeech::Any,
    };
    let polarity = match *fields.get("priorpolarity")? {
        "positive" => Polarity::Positive,
        "negative" => Polarity::Negative,
        "neutral" | "both" => Polarity::Neutral,
        _ => return None,
    };
    Some(LexiconEntry {
        word,
        pos,
        strength,
        polarity,
    })
}

/// Adjective and noun word sets. A word may belong to both.
#[derive(Debug, Clone, Default)]
pub struct PosLists {
    pub adjectives: HashSet<String>,
    pub nouns: HashSet<String>,
}

impl PosLists {
    pub fn bundled() -> Self {
        PosLists {
            adjectives: parse_word_list(BUNDLED_ADJECTIVES),
            nouns: parse_word_list(BUNDLED_NOUNS),
        }
    }

    pub fn from_paths(adjectives: impl AsRef<Path>, nouns: impl AsRef<Path>) -> Result<Self> {
        Ok(PosLists {
            adjectives: parse_word_list(&read(adjectives.as_ref())?),
            nouns: parse_word_list(&read(nouns.as_ref())?),
        })
    }

    pub fn is_adjective(&self, word: &str) -> bool {
        self.adjectives.contains(word)
    }

    pub fn is_noun(&self, word: &str) -> bool {
        self.nouns.contains(word)
    }
}

/// One lowercase word per line; blank and `#` lines ignored.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    content_lines(text).map(|(_, l)| l.to_lowercase()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    pub fn bundled() -> Self {
        Stoplist::parse(BUNDLED_STOPWORDS)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Stoplist::parse(&read(path.as_ref())?))
    }

    pub fn parse(text: &str) -> Self {
        Stoplist {
            words: parse_word_list(text),
        }
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Stoplist {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    /// True for configured stopwords and for every gendered pronoun.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word) || GENDERED_PRONOUNS.contains(&word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Gendered word forms mapped to a shared neutral form.
#[derive(Debug, Clone, Default)]
pub struct NeutralizationMap {
    pairs: BTreeMap<String, String>,
}

impl NeutralizationMap {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_NEUTRALIZATION).expect("bundled neutralization map is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    /// `gendered<TAB>neutral` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let (from, to) = l.split_once('\t').ok_or_else(|| Error::Malformed {
                path: "neutralization map".into(),
                line,
                message: "expected gendered<TAB>neutral".into(),
            })?;
            pairs.insert(from.trim().to_lowercase(), to.trim().to_lowercase());
        }
        Self::from_pairs(pairs)
    }

    /// Fails if a neutral form is itself a key, which would make
    /// neutralization non-idempotent.
    pub fn from_pairs(pairs: BTreeMap<String, String>) -> Result<Self> {
        if let Some(v) = pairs.values().find(|v| pairs.contains_key(*v)) {
            return Err(Error::Config(format!(
                "neutral form `{v}` is also a gendered key"
            )));
        }
        Ok(NeutralizationMap { pairs })
    }

    pub fn neutralize<'a>(&'a self, token: &'a str) -> &'a str {
        self.pairs.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn pairs(&self) -> &BTreeMap<String, String> {
        &self.pairs
    }
}

/// Named word sets used for topic extraction.
#[derive(Debug, Clone, Default)]
pub struct CategoryLexicon {
    categories: BTreeMap<String, BTreeSet<String>>,
}

impl CategoryLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CATEGORIES).expect("bundled categories are valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    /// `name: member member ...` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let (name, members) = l.split_once(':').ok_or_else(|| Error::Malformed {
                path: "category lexicon".into(),
                line,
                message: "expected `name: words...`".into(),
            })?;
            let name = name.trim().to_string();
            let members: BTreeSet<String> =
                members.split_whitespace().map(str::to_lowercase).collect();
            if members.is_empty() {
                return Err(Error::EmptyCategory(name));
            }
            if categories.insert(name.clone(), members).is_some() {
                return Err(Error::DuplicateCategory(name));
            }
        }
        Ok(CategoryLexicon { categories })
    }

    pub fn contains(&self, category: &str, word: &str) -> bool {
        self.categories
            .get(category)
            .is_some_and(|m| m.contains(word))
    }

    pub fn categories(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.categories
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}
