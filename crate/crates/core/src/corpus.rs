//! Biography records: loading, validation, occupation fields and balancing.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Field assigned to occupations missing from the field map.
pub const UNMAPPED_FIELD: &str = "other";

const DEFAULT_FIELD_MAP: &str = include_str!("../data/fieldmap.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    /// Only the exact lowercase labels are accepted.
    pub fn parse(label: &str) -> Option<Gender> {
        match label {
            "female" => Some(Gender::Female),
            "male" => Some(Gender::Male),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }

    /// Classification target: 1 = female, 0 = male.
    pub fn label(self) -> u8 {
        match self {
            Gender::Female => 1,
            Gender::Male => 0,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Biography {
    pub id: String,
    pub gender: Gender,
    pub occupation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub overview: String,
}

/// An ordered, id-unique collection of biographies.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<Biography>,
    provenance: String,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(records: Vec<Biography>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Config(format!("duplicate id `{}`", r.id)));
            }
        }
        Ok(Corpus {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[Biography] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Biography> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn count(&self, gender: Gender) -> usize {
        self.records.iter().filter(|r| r.gender == gender).count()
    }

    /// Records at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&Biography) -> bool) -> Corpus {
        Corpus {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only records whose occupation is in `occupations`.
    pub fn restrict_to<S: AsRef<str>>(&self, occupations: &[S]) -> Corpus {
        let set: HashSet<&str> = occupations.iter().map(|o| o.as_ref()).collect();
        self.filter(|r| set.contains(r.occupation.as_str()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("biography serializes"));
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Biography;
    type IntoIter = std::slice::Iter<'a, Biography>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Counts of records seen and dropped while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadDiagnostics {
    pub total: usize,
    pub kept: usize,
    pub dropped_gender: usize,
    pub dropped_empty_overview: usize,
    pub dropped_empty_occupation: usize,
    pub dropped_duplicate_id: usize,
}

impl LoadDiagnostics {
    pub fn dropped(&self) -> usize {
        self.dropped_gender
            + self.dropped_empty_overview
            + self.dropped_empty_occupation
            + self.dropped_duplicate_id
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub diagnostics: LoadDiagnostics,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    gender: String,
    occupation: String,
    overview: String,
    #[serde(default)]
    field: Option<String>,
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Loaded> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, format, &path.display().to_string())
}

/// Parses corpus text. `source` is used for error messages and provenance.
pub fn parse_corpus(text: &str, format: CorpusFormat, source: &str) -> Result<Loaded> {
    let raws = match format {
        CorpusFormat::Jsonl => parse_jsonl(text, source)?,
        CorpusFormat::Tsv => parse_tsv(text, source)?,
    };

    let mut diag = LoadDiagnostics {
        total: raws.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(raws.len());
    for (line, raw) in raws {
        let Some(gender) = Gender::parse(&raw.gender) else {
            log::warn!(
                "{source}:{line}: dropping record `{}` with gender `{}`",
                raw.id,
                raw.gender
            );
            diag.dropped_gender += 1;
            continue;
        };
        let overview = raw.overview.trim();
        if overview.is_empty() {
            log::warn!(
                "{source}:{line}: dropping record `{}` with empty overview",
                raw.id
            );
            diag.dropped_empty_overview += 1;
            continue;
        }
        let occupation = raw.occupation.trim().to_lowercase();
        if occupation.is_empty() {
            log::warn!(
                "{source}:{line}: dropping record `{}` with empty occupation",
                raw.id
            );
            diag.dropped_empty_occupation += 1;
            continue;
        }
        if !seen.insert(raw.id.clone()) {
            log::warn!(
                "{source}:{line}: duplicate id `{}`, keeping the first",
                raw.id
            );
            diag.dropped_duplicate_id += 1;
            continue;
        }
        records.push(Biography {
            id: raw.id,
            gender,
            occupation,
            field: raw.field.filter(|f| !f.trim().is_empty()),
            overview: overview.to_string(),
        });
    }
    diag.kept = records.len();
    if diag.dropped() > 0 {
        log::info!(
            "{source}: kept {} of {} records ({} dropped)",
            diag.kept,
            diag.total,
            diag.dropped()
        );
    }
    Ok(Loaded {
        corpus: Corpus {
            records,
            provenance: source.to_string(),
        },
        diagnostics: diag,
    })
}

fn parse_jsonl(text: &str, source: &str) -> Result<Vec<(usize, RawRecord)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: source.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, raw));
    }
    Ok(out)
}

fn parse_tsv(text: &str, source: &str) -> Result<Vec<(usize, RawRecord)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let position = |name: &str| columns.iter().position(|c| *c == name);
    let malformed = |line: usize, message: String| Error::Malformed {
        path: source.to_string(),
        line,
        message,
    };
    let mut required = [0usize; 4];
    for (slot, name) in required
        .iter_mut()
        .zip(["id", "gender", "occupation", "overview"])
    {
        *slot =
            position(name).ok_or_else(|| malformed(1, format!("header lacks `{name}` column")))?;
    }
    let field_col = position("field");

    let mut out = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(malformed(
                i + 1,
                format!("expected {} columns, found {}", columns.len(), cells.len()),
            ));
        }
        let [id, gender, occupation, overview] = required.map(|c| cells[c].to_string());
        out.push((
            i + 1,
            RawRecord {
                id,
                gender,
                occupation,
                overview,
                field: field_col.map(|c| cells[c].to_string()),
            },
        ));
    }
    Ok(out)
}

/// Occupations by descending count, ties broken lexicographically.
pub fn top_occupations(corpus: &Corpus, k: usize) -> Result<Vec<(String, usize)>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in corpus {
        *counts.entry(r.occupation.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(o, c)| (o.to_string(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

/// Occupation to field mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldMap {
    entries: BTreeMap<String, String>,
    fields: BTreeSet<String>,
}

impl FieldMap {
    /// The bundled ten-field map.
    pub fn bundled() -> FieldMap {
        FieldMap::parse(DEFAULT_FIELD_MAP).expect("bundled field map parses")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<FieldMap> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FieldMap::parse(&text)
    }

    /// One `occupation<TAB>field` pair per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<FieldMap> {
        let mut map = FieldMap::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (occupation, field) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: "field map".into(),
                line: i + 1,
                message: "expected occupation<TAB>field".into(),
            })?;
            map.insert(occupation.trim(), field.trim());
        }
        Ok(map)
    }

    pub fn insert(&mut self, occupation: &str, field: &str) {
        self.fields.insert(field.to_string());
        self.entries
            .insert(occupation.to_lowercase(), field.to_string());
    }

    pub fn field_of(&self, occupation: &str) -> Option<&str> {
        self.entries.get(occupation).map(String::as_str)
    }

    pub fn fields(&self) -> &BTreeSet<String> {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sets each record's field from `map`; unmapped occupations get [`UNMAPPED_FIELD`].
pub fn assign_fields(corpus: &Corpus, map: &FieldMap) -> Corpus {
    Corpus {
        records: corpus
            .iter()
            .map(|r| Biography {
                field: Some(
                    map.field_of(&r.occupation)
                        .unwrap_or(UNMAPPED_FIELD)
                        .to_string(),
                ),
                ..r.clone()
            })
            .collect(),
        provenance: corpus.provenance.clone(),
    }
}

/// Per occupation, the number of records each gender keeps after balancing.
pub fn balanced_size_per_gender(records: &[Biography]) -> usize {
    let mut counts: HashMap<&str, [usize; 2]> = HashMap::new();
    for r in records {
        counts.entry(&r.occupation).or_default()[r.gender.label() as usize] += 1;
    }
    counts.values().map(|c| c[0].min(c[1])).sum()
}

/// Indices of a per-occupation gender-balanced sample, ascending.
///
/// For every occupation both genders keep `min(#female, #male)` records; the
/// minority is kept whole and the majority is sampled uniformly without
/// replacement.
pub fn balanced_indices(records: &[Biography], seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<&str, [Vec<usize>; 2]> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(&r.occupation).or_default()[r.gender.label() as usize].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut keep = Vec::new();
    for [mut male, mut female] in groups.into_values() {
        let m = male.len().min(female.len());
        if m == 0 {
            continue;
        }
        for side in [&mut female, &mut male] {
            if side.len() > m {
                side.shuffle(&mut rng);
                side.truncate(m);
            }
            keep.extend_from_slice(side);
        }
    }
    keep.sort_unstable();
    keep
}

pub fn balance_by_occupation(corpus: &Corpus, seed: u64) -> Corpus {
    corpus.select(&balanced_indices(&corpus.records, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bio(id: &str, gender: Gender, occupation: &str) -> Biography {
        Biography {
            id: id.into(),
            gender,
            occupation: occupation.into(),
            field: None,
            overview: "text".into(),
        }
    }

    #[test]
    fn drops_genders_outside_the_binary_labels() {
        let text = r#"{"id":"Q1","gender":"female","occupation":"singer","overview":"A singer."}
{"id":"Q2","gender":"male","occupation":"Footballer","overview":"A footballer."}
{"id":"Q3","gender":"non-binary","occupation":"writer","overview":"A writer."}
"#;
        let loaded = parse_corpus(text, CorpusFormat::Jsonl, "t").unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        assert_eq!(loaded.diagnostics.dropped_gender, 1);
        assert_eq!(loaded.diagnostics.kept + loaded.diagnostics.dropped(), 3);
        assert_eq!(loaded.corpus.records()[1].occupation, "footballer");
    }

    #[test]
    fn capitalized_gender_is_not_coerced() {
        let text = r#"{"id":"Q1","gender":"Female","occupation":"singer","overview":"A singer."}"#;
        let loaded = parse_corpus(text, CorpusFormat::Jsonl, "t").unwrap();
        assert!(loaded.corpus.is_empty());
        assert_eq!(loaded.diagnostics.dropped_gender, 1);
    }

    #[test]
    fn empty_input_loads_empty_corpus() {
        let loaded = parse_corpus("", CorpusFormat::Jsonl, "t").unwrap();
        assert!(loaded.corpus.is_empty());
        assert_eq!(loaded.diagnostics, LoadDiagnostics::default());
        let loaded = parse_corpus("", CorpusFormat::Tsv, "t").unwrap();
        assert!(loaded.corpus.is_empty());
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let text = r#"{"id":"Q1","gender":"female","occupation":"singer","overview":"first"}
{"id":"Q1","gender":"male","occupation":"singer","overview":"second"}"#;
        let loaded = parse_corpus(text, CorpusFormat::Jsonl, "t").unwrap();
        assert_eq!(loaded.corpus.len(), 1);
        assert_eq!(loaded.corpus.records()[0].overview, "first");
        assert_eq!(loaded.diagnostics.dropped_duplicate_id, 1);
    }

    #[test]
    fn whitespace_overview_is_dropped() {
        let text = r#"{"id":"Q1","gender":"female","occupation":"singer","overview":"   "}"#;
        let loaded = parse_corpus(text, CorpusFormat::Jsonl, "t").unwrap();
        assert_eq!(loaded.diagnostics.dropped_empty_overview, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"Q1\",\"gender\":\"female\",\"occupation\":\"a\",\"overview\":\"b\"}\n\n{not json}\n";
        match parse_corpus(text, CorpusFormat::Jsonl, "c.jsonl") {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tsv_with_header() {
        let text = "id\tgender\toccupation\toverview\nQ1\tfemale\tsinger\tShe sings.\nQ2\tmale\tpoet\tHe writes.\n";
        let loaded = parse_corpus(text, CorpusFormat::Tsv, "t").unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        let bad = "id\tgender\toccupation\toverview\nQ1\tfemale\tsinger\n";
        assert!(matches!(
            parse_corpus(bad, CorpusFormat::Tsv, "t"),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn top_occupations_breaks_ties_lexicographically() {
        let corpus = Corpus::new(
            vec![
                bio("1", Gender::Male, "b"),
                bio("2", Gender::Male, "a"),
                bio("3", Gender::Male, "c"),
                bio("4", Gender::Male, "b"),
                bio("5", Gender::Female, "a"),
                bio("6", Gender::Female, "b"),
                bio("7", Gender::Female, "a"),
            ],
            "t",
        )
        .unwrap();
        let top = top_occupations(&corpus, 2).unwrap();
        assert_eq!(top, vec![("a".to_string(), 3), ("b".to_string(), 3)]);
        assert_eq!(top_occupations(&corpus, 10).unwrap().len(), 3);
        assert!(matches!(
            top_occupations(&Corpus::default(), 3),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn bundled_field_map_has_ten_fields() {
        let map = FieldMap::bundled();
        assert_eq!(map.fields().len(), 10);
        assert_eq!(map.field_of("footballer"), Some("Sports"));
        assert_eq!(map.field_of("senator"), Some("Politics"));
        let corpus = Corpus::new(vec![bio("1", Gender::Male, "zzz-unknown")], "t").unwrap();
        let assigned = assign_fields(&corpus, &map);
        assert_eq!(assigned.records()[0].field.as_deref(), Some(UNMAPPED_FIELD));
    }

    #[test]
    fn balance_takes_minority_whole() {
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(bio(&format!("f{i}"), Gender::Female, "x"));
        }
        for i in 0..40 {
            records.push(bio(&format!("m{i}"), Gender::Male, "x"));
        }
        for i in 0..40 {
            records.push(bio(&format!("y{i}"), Gender::Male, "y"));
        }
        let corpus = Corpus::new(records, "t").unwrap();
        let balanced = balance_by_occupation(&corpus, 3);
        assert_eq!(balanced.count(Gender::Female), 10);
        assert_eq!(balanced.count(Gender::Male), 10);
        assert!(balanced.iter().all(|r| r.occupation == "x"));
        assert_eq!(balanced_size_per_gender(corpus.records()), 10);
    }
}
