//! Synthetic biography corpora with known, planted gender signal.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Biography, Corpus, Gender};
use crate::error::{Error, Result};
use crate::seed;

/// Background adjectives drawn uniformly for every document.
const BASE_WORDS: &[&str] = &[
    "active",
    "major",
    "famous",
    "popular",
    "high",
    "best",
    "long",
    "notable",
    "prominent",
    "successful",
    "influential",
    "leading",
    "early",
    "late",
    "young",
    "national",
    "international",
    "professional",
    "public",
    "independent",
    "original",
    "modern",
    "traditional",
    "classical",
    "senior",
    "junior",
    "regular",
    "local",
    "regional",
    "important",
    "significant",
    "prolific",
    "renowned",
    "noted",
    "talented",
    "strong",
    "good",
    "great",
    "new",
    "old",
    "key",
    "main",
    "central",
    "social",
    "cultural",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedWord {
    pub word: String,
    pub p_female: f64,
    pub p_male: f64,
    /// Restrict planting to these occupations; all occupations when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationShare {
    pub name: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub docs_per_gender: usize,
    pub base_words: Vec<String>,
    pub words_per_doc: usize,
    #[serde(default)]
    pub planted: Vec<PlantedWord>,
    pub occupations: Vec<OccupationShare>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 1,000 documents per gender over four occupations, no planted words.
    pub fn null(seed: u64) -> Self {
        SyntheticSpec {
            docs_per_gender: 1000,
            base_words: BASE_WORDS.iter().map(|w| w.to_string()).collect(),
            words_per_doc: 6,
            planted: Vec::new(),
            occupations: [
                ("footballer", 0.4),
                ("singer", 0.3),
                ("politician", 0.2),
                ("writer", 0.1),
            ]
            .into_iter()
            .map(|(name, share)| OccupationShare {
                name: name.into(),
                share,
            })
            .collect(),
            seed,
        }
    }

    /// [`Self::null`] plus one word present in 30% of female and 10% of male
    /// overviews.
    pub fn planted(seed: u64) -> Self {
        SyntheticSpec {
            planted: vec![PlantedWord {
                word: "beautiful".into(),
                p_female: 0.30,
                p_male: 0.10,
                occupations: None,
            }],
            ..SyntheticSpec::null(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.occupations.is_empty() {
            return bad("at least one occupation is required".into());
        }
        if self
            .occupations
            .iter()
            .any(|o| !(o.share.is_finite() && o.share > 0.0) || o.name.trim().is_empty())
        {
            return bad("occupation shares must be positive and names non-empty".into());
        }
        for p in &self.planted {
            for prob in [p.p_female, p.p_male] {
                if !(0.0..=1.0).contains(&prob) {
                    return bad(format!(
                        "probability {prob} for `{}` is outside [0, 1]",
                        p.word
                    ));
                }
            }
        }
        if self.words_per_doc > 0 && self.base_words.is_empty() {
            return bad("base_words is empty".into());
        }
        Ok(())
    }

    fn pick_occupation(&self, rng: &mut impl Rng) -> &str {
        let total: f64 = self.occupations.iter().map(|o| o.share).sum();
        let mut u = rng.gen::<f64>() * total;
        for o in &self.occupations {
            if u < o.share {
                return &o.name;
            }
            u -= o.share;
        }
        &self.occupations[self.occupations.len() - 1].name
    }

    fn document(&self, gender: Gender, rng: &mut impl Rng) -> (String, String) {
        let occupation = self.pick_occupation(rng).to_string();
        let mut words: Vec<&str> = (0..self.words_per_doc)
            .map(|_| self.base_words[rng.gen_range(0..self.base_words.len())].as_str())
            .collect();
        for p in &self.planted {
            let applies = p
                .occupations
                .as_ref()
                .is_none_or(|occ| occ.contains(&occupation));
            let prob = match gender {
                Gender::Female => p.p_female,
                Gender::Male => p.p_male,
            };
            // always draw, so the stream does not depend on `applies`
            let hit = rng.gen::<f64>() < prob;
            if applies && hit {
                words.push(&p.word);
            }
        }
        words.shuffle(rng);
        let (subject, object) = match gender {
            Gender::Female => ("She", "her"),
            Gender::Male => ("He", "him"),
        };
        let description = match words.split_last() {
            None => "unremarkable".to_string(),
            Some((last, [])) => last.to_string(),
            Some((last, rest)) => format!("{} and {last}", rest.join(", ")),
        };
        let text =
            format!("{subject} is a {occupation}. Critics described {object} as {description}.");
        (occupation, text)
    }

    pub fn generate(&self) -> Result<Corpus> {
        self.validate()?;
        let mut rng = seed::rng(self.seed);
        let mut records = Vec::with_capacity(2 * self.docs_per_gender);
        for _ in 0..self.docs_per_gender {
            for gender in Gender::ALL {
                let (occupation, overview) = self.document(gender, &mut rng);
                records.push(Biography {
                    id: format!("S{}", records.len() + 1),
                    gender,
                    occupation,
                    field: None,
                    overview,
                });
            }
        }
        Corpus::new(records, format!("synthetic(seed={})", self.seed))
    }
}
