//! Tokenization, token-id assignment and corpus-level statistics.
//!
//! Positions are 1-based at every public boundary: `Text::token(1)` is the
//! first token and `freq_in(t, i, j)` counts over the inclusive range `[i, j]`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense, corpus-local token identifier.
pub type TokenId = u32;

/// How raw strings are split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Split on runs of Unicode whitespace.
    Whitespace,
    /// Overlapping character q-grams.
    QGram(usize),
    /// One token per raw byte.
    Bytes,
}

impl Scheme {
    pub fn tokenize(&self, raw: &str) -> Result<Vec<String>> {
        let tokens: Vec<String> = match *self {
            Scheme::Whitespace => raw.split_whitespace().map(str::to_owned).collect(),
            Scheme::QGram(q) => {
                if q == 0 {
                    return Err(Error::BadParams("q-gram size must be at least 1".into()));
                }
                let chars: Vec<char> = raw.chars().collect();
                if chars.is_empty() {
                    Vec::new()
                } else if chars.len() < q {
                    // shorter than one gram: the whole string is the only token
                    vec![chars.iter().collect()]
                } else {
                    chars.windows(q).map(|w| w.iter().collect()).collect()
                }
            }
            Scheme::Bytes => raw.bytes().map(|b| format!("{b:02x}")).collect(),
        };
        if tokens.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(tokens)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Whitespace => f.write_str("whitespace"),
            Scheme::QGram(q) => write!(f, "qgram:{q}"),
            Scheme::Bytes => f.write_str("bytes"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "ws" => Ok(Scheme::Whitespace),
            "bytes" | "byte" => Ok(Scheme::Bytes),
            _ => {
                let q = s
                    .strip_prefix("qgram:")
                    .or_else(|| s.strip_prefix("qgram"))
                    .ok_or_else(|| Error::BadParams(format!("unknown tokenization scheme {s:?}")))?;
                let q: usize = q
                    .parse()
                    .map_err(|_| Error::BadParams(format!("bad q-gram size in {s:?}")))?;
                if q == 0 {
                    return Err(Error::BadParams("q-gram size must be at least 1".into()));
                }
                Ok(Scheme::QGram(q))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub scheme: Scheme,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            scheme: Scheme::Whitespace,
            lowercase: false,
        }
    }
}

impl TokenizerConfig {
    pub fn tokenize(&self, raw: &str) -> Result<Vec<String>> {
        if self.lowercase {
            self.scheme.tokenize(&raw.to_lowercase())
        } else {
            self.scheme.tokenize(raw)
        }
    }
}

/// Bidirectional map between token surfaces and dense ids, assigned in
/// first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, TokenId>,
    surfaces: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_surfaces(surfaces: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            if s.is_empty() || ids.insert(s.clone(), i as TokenId).is_some() {
                return Err(Error::BadParams(format!("invalid vocabulary entry {s:?}")));
            }
        }
        Ok(Vocabulary { ids, surfaces })
    }

    pub fn intern(&mut self, surface: &str) -> TokenId {
        if let Some(&id) = self.ids.get(surface) {
            return id;
        }
        let id = self.surfaces.len() as TokenId;
        self.ids.insert(surface.to_owned(), id);
        self.surfaces.push(surface.to_owned());
        id
    }

    pub fn get(&self, surface: &str) -> Option<TokenId> {
        self.ids.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id as usize).map(String::as_str)
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

/// A tokenized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Text {
    pub id: u32,
    pub tokens: Vec<TokenId>,
}

impl Text {
    pub fn new(id: u32, tokens: Vec<TokenId>) -> Self {
        Text { id, tokens }
    }

    /// Builds a text from single-character symbols, mapping `'A'` to 0, `'B'`
    /// to 1 and so on. Handy for the lettered examples used in tests.
    pub fn from_letters(id: u32, letters: &str) -> Self {
        let tokens = letters
            .chars()
            .map(|c| {
                assert!(c.is_ascii_uppercase(), "letter texts use A-Z only");
                c as TokenId - 'A' as TokenId
            })
            .collect();
        Text { id, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based position `i`.
    pub fn token(&self, i: usize) -> Option<TokenId> {
        i.checked_sub(1).and_then(|i| self.tokens.get(i)).copied()
    }

    pub fn freq(&self, t: TokenId) -> u32 {
        self.tokens.iter().filter(|&&u| u == t).count() as u32
    }

    /// Occurrences of `t` in the subsequence `T[i, j]`.
    pub fn freq_in(&self, t: TokenId, i: usize, j: usize) -> Result<u32> {
        if i < 1 || i > j || j > self.len() {
            return Err(Error::Bounds {
                i,
                j,
                len: self.len(),
            });
        }
        Ok(self.tokens[i - 1..j].iter().filter(|&&u| u == t).count() as u32)
    }

    /// Per-token frequencies, ordered by token id.
    pub fn counts(&self) -> BTreeMap<TokenId, u32> {
        counts_of(&self.tokens)
    }

    /// Maximum token frequency `f_T`.
    pub fn max_freq(&self) -> u32 {
        self.counts().into_values().max().unwrap_or(0)
    }
}

pub fn counts_of(tokens: &[TokenId]) -> BTreeMap<TokenId, u32> {
    let mut counts = BTreeMap::new();
    for &t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

/// Document-frequency statistics consumed by the IDF weights.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_texts: u32,
    /// `doc_freq[t]` is the number of texts containing token `t`.
    pub doc_freq: Vec<u32>,
    pub max_freq: BTreeMap<u32, u32>,
}

impl CorpusStats {
    pub fn from_texts(texts: &[Text]) -> Self {
        let mut doc_freq: Vec<u32> = Vec::new();
        let mut max_freq = BTreeMap::new();
        for text in texts {
            let counts = text.counts();
            for &t in counts.keys() {
                let t = t as usize;
                if doc_freq.len() <= t {
                    doc_freq.resize(t + 1, 0);
                }
                doc_freq[t] += 1;
            }
            max_freq.insert(text.id, counts.values().copied().max().unwrap_or(0));
        }
        CorpusStats {
            num_texts: texts.len() as u32,
            doc_freq,
            max_freq,
        }
    }

    /// `N_t`, or `None` when the token never occurs in the corpus.
    pub fn doc_freq(&self, t: TokenId) -> Option<u32> {
        match self.doc_freq.get(t as usize) {
            Some(&n) if n > 0 => Some(n),
            _ => None,
        }
    }
}

/// An ingested corpus: texts, vocabulary, statistics, and the ids of
/// records that were dropped because they tokenized to nothing.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub texts: Vec<Text>,
    pub vocab: Vocabulary,
    pub stats: CorpusStats,
    pub tokenizer: TokenizerConfig,
    pub skipped: Vec<u32>,
}

pub fn ingest_corpus<I, S>(source: I, tokenizer: TokenizerConfig) -> Result<Corpus>
where
    I: IntoIterator<Item = (u32, S)>,
    S: AsRef<str>,
{
    let mut vocab = Vocabulary::new();
    let mut seen = HashSet::new();
    let mut texts = Vec::new();
    let mut skipped = Vec::new();
    for (id, raw) in source {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        match tokenizer.tokenize(raw.as_ref()) {
            Ok(surfaces) => {
                let tokens = surfaces.iter().map(|s| vocab.intern(s)).collect();
                texts.push(Text::new(id, tokens));
            }
            Err(Error::EmptyText) => skipped.push(id),
            Err(e) => return Err(e),
        }
    }
    let stats = CorpusStats::from_texts(&texts);
    Ok(Corpus {
        texts,
        vocab,
        stats,
        tokenizer,
        skipped,
    })
}

#[derive(Deserialize)]
struct Record {
    id: u32,
    text: String,
}

/// Reads `{"id": .., "text": ..}` JSON lines; blank lines are ignored.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<(u32, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::BadRecord {
            line: lineno + 1,
            reason: e.to_string(),
        })?;
        out.push((rec.id, rec.text));
    }
    Ok(out)
}
