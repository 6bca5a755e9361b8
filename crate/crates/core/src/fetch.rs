//! Page-summary client that fills in overview text, with a one-file-per-id
//! disk cache so that reruns need no network.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{Biography, Gender};
use crate::error::{Error, Result};

pub const DEFAULT_ENDPOINT: &str = "https://en.wikipedia.org/api/rest_v1/page/summary/";
/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "BIASAUDIT_CACHE_DIR";

const USER_AGENT: &str = concat!(
    "biasaudit/",
    env!("CARGO_PKG_VERSION"),
    " (corpus builder; https://github.com/biasaudit)"
);

/// One page to fetch, with the metadata that ends up on the record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchItem {
    pub id: String,
    pub title: String,
    pub gender: Gender,
    pub occupation: String,
}

impl FetchItem {
    /// Reads `id<TAB>title<TAB>gender<TAB>occupation` lines. Rows with a gender
    /// other than female/male are skipped.
    pub fn parse_manifest(text: &str) -> Result<Vec<FetchItem>> {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [id, title, gender, occupation] = cells[..] else {
                return Err(Error::Malformed {
                    path: "fetch manifest".into(),
                    line: i + 1,
                    message: "expected id<TAB>title<TAB>gender<TAB>occupation".into(),
                });
            };
            if id == "id" && title == "title" {
                continue;
            }
            let Some(gender) = Gender::parse(gender) else {
                log::warn!("manifest line {}: skipping gender `{gender}`", i + 1);
                continue;
            };
            items.push(FetchItem {
                id: id.into(),
                title: title.into(),
                gender,
                occupation: occupation.to_lowercase(),
            });
        }
        Ok(items)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    NotFound,
    Http { status: u16 },
    Transport { message: String },
    Malformed { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub id: String,
    pub title: String,
    #[serde(flatten)]
    pub kind: FailureKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchOutcome {
    /// Fetched records, sorted by id.
    pub records: Vec<Biography>,
    pub failures: Vec<FetchFailure>,
    pub cache_hits: usize,
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// Base URL; the percent-encoded title is appended as the last path segment.
    pub endpoint: String,
    pub cache_dir: PathBuf,
    /// Maximum requests per second.
    pub rate_limit: f64,
    pub retries: u32,
    pub timeout: Duration,
}

impl FetchConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchConfig {
            endpoint: DEFAULT_ENDPOINT.into(),
            cache_dir: cache_dir.into(),
            rate_limit: 5.0,
            retries: 3,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Deserialize)]
struct Summary {
    #[serde(default)]
    extract: Option<String>,
}

fn cache_path(dir: &Path, id: &str) -> PathBuf {
    let safe: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    dir.join(format!("{safe}.json"))
}

fn summary_url(endpoint: &str, title: &str) -> Result<String> {
    let mut url = url::Url::parse(endpoint).map_err(|e| Error::Config(format!("endpoint: {e}")))?;
    url.path_segments_mut()
        .map_err(|_| Error::Config(format!("endpoint `{endpoint}` cannot take a path")))?
        .pop_if_empty()
        .push(&title.replace(' ', "_"));
    Ok(url.into())
}

fn parse_extract(body: &str) -> std::result::Result<String, String> {
    let summary: Summary = serde_json::from_str(body).map_err(|e| e.to_string())?;
    match summary.extract.map(|e| e.trim().to_string()) {
        Some(text) if !text.is_empty() => Ok(text),
        _ => Err("response has no extract".into()),
    }
}

enum Attempt {
    Body(String),
    Failed(FailureKind),
}

fn request(agent: &ureq::Agent, url: &str, retries: u32) -> Attempt {
    let mut backoff = Duration::from_millis(250);
    let mut attempt = 0;
    loop {
        let retryable = match agent.get(url).set("User-Agent", USER_AGENT).call() {
            Ok(resp) => {
                return match resp.into_string() {
                    Ok(body) => Attempt::Body(body),
                    Err(e) => Attempt::Failed(FailureKind::Malformed {
                        message: e.to_string(),
                    }),
                };
            }
            Err(ureq::Error::Status(404, _)) => return Attempt::Failed(FailureKind::NotFound),
            Err(ureq::Error::Status(status, _)) if status == 429 || status >= 500 => {
                FailureKind::Http { status }
            }
            Err(ureq::Error::Status(status, _)) => {
                return Attempt::Failed(FailureKind::Http { status })
            }
            Err(e) => FailureKind::Transport {
                message: e.to_string(),
            },
        };
        if attempt >= retries {
            return Attempt::Failed(retryable);
        }
        attempt += 1;
        thread::sleep(backoff);
        backoff *= 2;
    }
}

/// Fetches overview text for every item. Cached bodies are used without
/// touching the network; failures are collected per item.
pub fn fetch_overviews(items: &[FetchItem], config: &FetchConfig) -> Result<FetchOutcome> {
    fs::create_dir_all(&config.cache_dir).map_err(|e| Error::io(&config.cache_dir, e))?;
    let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
    let interval = if config.rate_limit > 0.0 {
        Duration::from_secs_f64(1.0 / config.rate_limit)
    } else {
        Duration::ZERO
    };
    let mut last_request: Option<Instant> = None;
    let mut outcome = FetchOutcome::default();

    for item in items {
        let path = cache_path(&config.cache_dir, &item.id);
        let body = match fs::read_to_string(&path) {
            Ok(body) => {
                outcome.cache_hits += 1;
                body
            }
            Err(_) => {
                if let Some(t) = last_request {
                    let elapsed = t.elapsed();
                    if elapsed < interval {
                        thread::sleep(interval - elapsed);
                    }
                }
                last_request = Some(Instant::now());
                let url = summary_url(&config.endpoint, &item.title)?;
                match request(&agent, &url, config.retries) {
                    Attempt::Body(body) => {
                        if parse_extract(&body).is_ok() {
                            fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
                        }
                        body
                    }
                    Attempt::Failed(kind) => {
                        log::warn!("fetch `{}` failed: {kind:?}", item.title);
                        outcome.failures.push(FetchFailure {
                            id: item.id.clone(),
                            title: item.title.clone(),
                            kind,
                        });
                        continue;
                    }
                }
            }
        };
        match parse_extract(&body) {
            Ok(overview) => outcome.records.push(Biography {
                id: item.id.clone(),
                gender: item.gender,
                occupation: item.occupation.clone(),
                field: None,
                overview,
            }),
            Err(message) => outcome.failures.push(FetchFailure {
                id: item.id.clone(),
                title: item.title.clone(),
                kind: FailureKind::Malformed { message },
            }),
        }
    }
    outcome.records.sort_by(|a, b| a.id.cmp(&b.id));
    outcome.failures.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_building_encodes_titles() {
        assert_eq!(
            summary_url(DEFAULT_ENDPOINT, "Ada Lovelace").unwrap(),
            "https://en.wikipedia.org/api/rest_v1/page/summary/Ada_Lovelace"
        );
        assert_eq!(
            summary_url("http://localhost:1/summary", "AC/DC?").unwrap(),
            "http://localhost:1/summary/AC%2FDC%3F"
        );
    }

    #[test]
    fn cache_names_are_filesystem_safe() {
        let p = cache_path(Path::new("/c"), "Q1/../x");
        assert_eq!(p, Path::new("/c/Q1____x.json"));
    }

    #[test]
    fn manifest_parsing() {
        let items = FetchItem::parse_manifest(
            "id\ttitle\tgender\toccupation\nQ7259\tAda Lovelace\tfemale\tMathematician\nQ1\tX\tnon-binary\twriter\n",
        )
        .unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].occupation, "mathematician");
        assert!(FetchItem::parse_manifest("Q1\tonly two\n").is_err());
    }

    #[test]
    fn extract_parsing() {
        assert_eq!(parse_extract(r#"{"extract":" Hi. "}"#).unwrap(), "Hi.");
        assert!(parse_extract(r#"{"title":"x"}"#).is_err());
        assert!(parse_extract("<html>").is_err());
    }
}
