use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::FieldMap;
use crate::error::Result;
use crate::lexicon::{CategoryLexicon, NeutralizationMap, PosLists, Stoplist, SubjectivityLexicon};
use crate::textproc::Preprocessing;

/// Optional overrides for the bundled resource files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub lexicon: Option<PathBuf>,
    pub adjectives: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub neutralization: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub fieldmap: Option<PathBuf>,
}

impl ResourcePaths {
    pub fn all(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.lexicon,
            &self.adjectives,
            &self.nouns,
            &self.stoplist,
            &self.neutralization,
            &self.categories,
            &self.fieldmap,
        ]
        .into_iter()
        .flatten()
    }
}

/// Everything the pipeline reads besides the corpus.
#[derive(Debug, Clone)]
pub struct Resources {
    pub preprocessing: Preprocessing,
    pub subjectivity: SubjectivityLexicon,
    pub categories: CategoryLexicon,
    pub field_map: FieldMap,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources {
            preprocessing: Preprocessing::bundled(),
            subjectivity: SubjectivityLexicon::bundled(),
            categories: CategoryLexicon::bundled(),
            field_map: FieldMap::bundled(),
        }
    }

    /// Loads each overridden file, falling back to the bundled copy.
    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        let pos = match (&paths.adjectives, &paths.nouns) {
            (None, None) => PosLists::bundled(),
            (adj, noun) => {
                let bundled = PosLists::bundled();
                PosLists {
                    adjectives: match adj {
                        Some(p) => PosLists::from_paths(p, p)?.adjectives,
                        None => bundled.adjectives,
                    },
                    nouns: match noun {
                        Some(p) => PosLists::from_paths(p, p)?.nouns,
                        None => bundled.nouns,
                    },
                }
            }
        };
        Ok(Resources {
            preprocessing: Preprocessing {
                stoplist: match &paths.stoplist {
                    Some(p) => Stoplist::from_path(p)?,
                    None => Stoplist::bundled(),
                },
                neutralization: match &paths.neutralization {
                    Some(p) => NeutralizationMap::from_path(p)?,
                    None => NeutralizationMap::bundled(),
                },
                pos,
            },
            subjectivity: match &paths.lexicon {
                Some(p) => SubjectivityLexicon::from_path(p)?,
                None => SubjectivityLexicon::bundled(),
            },
            categories: match &paths.categories {
                Some(p) => CategoryLexicon::from_path(p)?,
                None => CategoryLexicon::bundled(),
            },
            field_map: match &paths.fieldmap {
                Some(p) => FieldMap::from_path(p)?,
                None => FieldMap::bundled(),
            },
        })
    }
}
