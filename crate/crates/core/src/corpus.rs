//! JSONL ingestion, filtering and tokenization of short documents.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One input record as it appears in the corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default)]
    pub in_reply_to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

/// A tokenized document. `hashtags` is a subset of `tokens`; `labels` holds
/// community ids once the labeler has run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub hashtags: BTreeSet<String>,
    #[serde(default)]
    pub labels: BTreeSet<usize>,
}

impl Document {
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let tokens = tokenize(text);
        let hashtags = extract_hashtags(&tokens);
        Document {
            id: id.into(),
            tokens,
            hashtags,
            labels: BTreeSet::new(),
        }
    }

    /// Number of tokens, w_i.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterRules {
    /// Minimum length of the raw text in Unicode scalar values.
    pub min_chars: usize,
    pub drop_retweets: bool,
    pub drop_replies: bool,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            min_chars: 160,
            drop_retweets: true,
            drop_replies: true,
        }
    }
}

impl FilterRules {
    pub fn accepts(&self, raw: &RawDocument) -> bool {
        if self.drop_retweets && raw.is_retweet {
            return false;
        }
        if self.drop_replies && raw.in_reply_to.is_some() {
            return false;
        }
        raw.text.chars().count() >= self.min_chars
    }
}

/// Reads every record of a JSONL corpus file. Blank lines are skipped; ids
/// must be non-empty and unique.
pub fn read_raw(path: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        if raw.id.is_empty() {
            return Err(Error::EmptyId { line: lineno });
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId {
                id: raw.id,
                line: lineno,
            });
        }
        out.push(raw);
    }
    Ok(out)
}

pub fn write_raw(path: impl AsRef<Path>, docs: &[RawDocument]) -> Result<()> {
    write_jsonl(path.as_ref(), docs)
}

/// Loads a corpus, keeping (in input order) the documents that pass `rules`.
pub fn load_corpus(path: impl AsRef<Path>, rules: &FilterRules) -> Result<Vec<Document>> {
    Ok(read_raw(path)?
        .iter()
        .filter(|raw| rules.accepts(raw))
        .map(|raw| Document::from_text(raw.id.clone(), &raw.text))
        .collect())
}

/// Reads documents written by [`write_documents`].
pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(doc);
    }
    Ok(out)
}

pub fn write_documents(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    write_jsonl(path.as_ref(), docs)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("documents serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn is_url(token: &str) -> bool {
    token.contains("://") || token.starts_with("www.")
}

/// Lowercases and splits `text` into tokens.
///
/// URLs and @-mentions are dropped. Every other whitespace-separated piece is
/// stripped of leading and trailing non-alphanumeric characters, except that a
/// leading `#` is kept so hashtags survive as single tokens. Tokens shorter
/// than two characters are discarded.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split_whitespace()
        .filter_map(|piece| {
            let piece =
                piece.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '#' && c != '@');
            if piece.starts_with('@') || is_url(piece) {
                return None;
            }
            let piece = piece.trim_end_matches(|c: char| !c.is_alphanumeric());
            (piece.chars().count() >= 2).then(|| piece.to_string())
        })
        .collect()
}

/// Unique `#`-prefixed tokens whose tag body contains at least one letter.
pub fn extract_hashtags(tokens: &[String]) -> BTreeSet<String> {
    tokens
        .iter()
        .filter(|t| {
            t.strip_prefix('#')
                .is_some_and(|body| body.chars().any(char::is_alphabetic))
        })
        .cloned()
        .collect()
}
