//! TF-IDF token weights `w(t, x) = tf(x) * idf(t)`.
//!
//! Every scheme here is non-decreasing in the in-text frequency `x` and
//! depends on nothing else about the text, which is what the weighted
//! partitioning relies on. Logarithms are natural.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStats, TokenId};
use crate::error::{Error, Result};

/// Lower clamp applied to IDF values and final weights.
pub const WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tf {
    Binary = 0,
    RawCount = 1,
    Logarithmic = 2,
    Squared = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Idf {
    Unary = 0,
    Standard = 1,
    Smooth = 2,
    Probabilistic = 3,
}

impl Tf {
    pub const ALL: [Tf; 4] = [Tf::Binary, Tf::RawCount, Tf::Logarithmic, Tf::Squared];

    fn from_tag(tag: u8) -> Option<Tf> {
        Self::ALL.into_iter().find(|k| *k as u8 == tag)
    }
}

impl Idf {
    pub const ALL: [Idf; 4] = [Idf::Unary, Idf::Standard, Idf::Smooth, Idf::Probabilistic];

    fn from_tag(tag: u8) -> Option<Idf> {
        Self::ALL.into_iter().find(|k| *k as u8 == tag)
    }
}

impl fmt::Display for Tf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tf::Binary => "binary",
            Tf::RawCount => "raw",
            Tf::Logarithmic => "log",
            Tf::Squared => "squared",
        })
    }
}

impl fmt::Display for Idf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Idf::Unary => "unary",
            Idf::Standard => "standard",
            Idf::Smooth => "smooth",
            Idf::Probabilistic => "prob",
        })
    }
}

impl FromStr for Tf {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Tf::Binary),
            "raw" | "raw_count" => Ok(Tf::RawCount),
            "log" | "logarithmic" => Ok(Tf::Logarithmic),
            "squared" => Ok(Tf::Squared),
            _ => Err(Error::BadParams(format!("unknown tf kind {s:?}"))),
        }
    }
}

impl FromStr for Idf {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unary" => Ok(Idf::Unary),
            "standard" => Ok(Idf::Standard),
            "smooth" => Ok(Idf::Smooth),
            "prob" | "probabilistic" => Ok(Idf::Probabilistic),
            _ => Err(Error::BadParams(format!("unknown idf kind {s:?}"))),
        }
    }
}

pub fn tf(kind: Tf, x: u32) -> Result<f64> {
    if x == 0 {
        return Err(Error::BadFrequency);
    }
    let x = x as f64;
    Ok(match kind {
        Tf::Binary => 1.0,
        Tf::RawCount => x,
        Tf::Logarithmic => (x + 1.0).ln(),
        Tf::Squared => x * x,
    })
}

fn idf_value(kind: Idf, n: u32, n_t: u32) -> f64 {
    let (n, n_t) = (n as f64, n_t as f64);
    let v = match kind {
        Idf::Unary => 1.0,
        Idf::Standard => (n / n_t).ln(),
        Idf::Smooth => ((n + n_t) / n_t).ln() + 1.0,
        Idf::Probabilistic => ((n - n_t) / n_t).ln(),
    };
    // NaN never arises for n_t >= 1, but -inf does (probabilistic, n_t = n)
    v.max(WEIGHT_FLOOR)
}

/// IDF of `t`, clamped below at [`WEIGHT_FLOOR`].
pub fn idf(kind: Idf, t: TokenId, stats: &CorpusStats) -> Result<f64> {
    if kind == Idf::Unary {
        return Ok(1.0);
    }
    let n_t = stats.doc_freq(t).ok_or(Error::UnknownToken(t))?;
    Ok(idf_value(kind, stats.num_texts, n_t))
}

/// Two-byte scheme identifier recorded in index headers: tf tag in the high
/// byte, idf tag in the low byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeId {
    pub tf: Tf,
    pub idf: Idf,
}

impl SchemeId {
    pub fn to_u16(self) -> u16 {
        ((self.tf as u16) << 8) | self.idf as u16
    }

    pub fn from_u16(raw: u16) -> Option<Self> {
        Some(SchemeId {
            tf: Tf::from_tag((raw >> 8) as u8)?,
            idf: Idf::from_tag((raw & 0xff) as u8)?,
        })
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.tf, self.idf)
    }
}

/// A TF kind paired with precomputed per-token IDF values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    id: SchemeId,
    num_texts: u32,
    idf_table: Vec<f64>,
    clamped: Vec<TokenId>,
}

impl WeightScheme {
    /// `stats` is required unless `idf` is [`Idf::Unary`].
    pub fn new(tf: Tf, idf: Idf, stats: Option<&CorpusStats>) -> Result<Self> {
        let id = SchemeId { tf, idf };
        if idf == Idf::Unary {
            return Ok(WeightScheme {
                id,
                num_texts: stats.map_or(0, |s| s.num_texts),
                idf_table: Vec::new(),
                clamped: Vec::new(),
            });
        }
        let stats = stats.ok_or_else(|| {
            Error::BadParams(format!("idf kind {idf} needs corpus statistics"))
        })?;
        let mut idf_table = Vec::with_capacity(stats.doc_freq.len());
        let mut clamped = Vec::new();
        for (t, &n_t) in stats.doc_freq.iter().enumerate() {
            if n_t == 0 {
                // id allocated but never seen in a kept text
                idf_table.push(f64::NAN);
                continue;
            }
            let v = idf_value(idf, stats.num_texts, n_t);
            if v <= WEIGHT_FLOOR {
                clamped.push(t as TokenId);
            }
            idf_table.push(v);
        }
        Ok(WeightScheme {
            id,
            num_texts: stats.num_texts,
            idf_table,
            clamped,
        })
    }

    /// Raw-count TF with unary IDF: weighted Jaccard becomes multi-set Jaccard.
    pub fn raw_count() -> Self {
        WeightScheme::new(Tf::RawCount, Idf::Unary, None).expect("unary needs no stats")
    }

    pub fn id(&self) -> SchemeId {
        self.id
    }

    pub fn tf_kind(&self) -> Tf {
        self.id.tf
    }

    pub fn idf_kind(&self) -> Idf {
        self.id.idf
    }

    /// Tokens whose IDF was clamped to [`WEIGHT_FLOOR`] (non-positive before clamping).
    pub fn clamped_tokens(&self) -> &[TokenId] {
        &self.clamped
    }

    fn idf_of(&self, t: TokenId) -> Option<f64> {
        if self.id.idf == Idf::Unary {
            return Some(1.0);
        }
        self.idf_table
            .get(t as usize)
            .copied()
            .filter(|v| !v.is_nan())
    }

    pub fn weight(&self, t: TokenId, x: u32) -> Result<f64> {
        let tf = tf(self.id.tf, x)?;
        let idf = self.idf_of(t).ok_or(Error::UnknownToken(t))?;
        Ok((tf * idf).max(WEIGHT_FLOOR))
    }

    /// Like [`weight`](Self::weight), but a token unseen in the corpus is
    /// treated as occurring in exactly one text. Used for query tokens.
    pub fn weight_or_unseen(&self, t: TokenId, x: u32) -> f64 {
        let x = x.max(1);
        let tf = tf(self.id.tf, x).expect("x >= 1");
        let idf = self
            .idf_of(t)
            .unwrap_or_else(|| idf_value(self.id.idf, self.num_texts.max(1), 1));
        (tf * idf).max(WEIGHT_FLOOR)
    }
}
