//! The `k` inverted indexes from min-hash values to compact windows, and
//! their on-disk format.
//!
//! File layout (little-endian):
//!
//! ```text
//! "WALN" | version u16 | kind u8 | k u32 | scheme u16
//! per function: universal a1 a2 b (u64 each) | icws seed u64
//!               | table: entries u32, then (t u32, x u32, v u64)*
//! meta: length u32, then that many bytes of JSON
//! per function: runs u32, then per run:
//!     v (universal u64 | icws t u32, z i64, a f64) | count u32
//!     | count x (text_id, a, b, c, d) as u32
//! trailer: first 8 bytes of SHA-256 over everything above, as u64
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;
use std::time::Instant;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, CorpusStats, Text, TokenizerConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::hashing::{HashFamily, HashKind, HashValue, IcwsHash, TableHash, UniversalHash};
use crate::partition::{monotonic_partitioning, CompactWindow, Mode};
use crate::weights::{Idf, SchemeId, Tf, WeightScheme};

pub const MAGIC: &[u8; 4] = b"WALN";
pub const FORMAT_VERSION: u16 = 1;

/// Everything needed to turn raw query strings into the same token ids and
/// weights the corpus was indexed with.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub tokenizer: TokenizerConfig,
    pub vocabulary: Vec<String>,
    pub stats: CorpusStats,
    pub mode: Mode,
    pub master_seed: Option<u64>,
    /// Length of every indexed text, by id.
    pub text_lengths: BTreeMap<u32, u32>,
}

/// Build parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub kind: HashKind,
    pub k: usize,
    pub master_seed: u64,
    pub tf: Tf,
    pub idf: Idf,
    pub mode: Mode,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            kind: HashKind::Icws,
            k: 64,
            master_seed: 0,
            tf: Tf::RawCount,
            idf: Idf::Unary,
            mode: Mode::ActiveKeys,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub windows_total: u64,
    pub windows_per_fn: Vec<u64>,
    /// Windows per text, summed over all functions.
    pub windows_per_text: BTreeMap<u32, u64>,
    pub build_seconds: f64,
    /// Number of texts by maximum token frequency.
    pub max_freq_histogram: BTreeMap<u32, u32>,
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    family: HashFamily,
    scheme: WeightScheme,
    meta: IndexMeta,
    lists: Vec<BTreeMap<HashValue, Vec<CompactWindow>>>,
}

impl PartialEq for InvertedIndex {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
            && self.scheme.id() == other.scheme.id()
            && self.meta == other.meta
            && self.lists == other.lists
    }
}

fn text_lengths(texts: &[Text]) -> BTreeMap<u32, u32> {
    texts.iter().map(|t| (t.id, t.len() as u32)).collect()
}

impl InvertedIndex {
    /// Samples `cfg.k` functions and indexes every text of `corpus`.
    pub fn build(corpus: &Corpus, cfg: &IndexConfig) -> Result<(Self, BuildStats)> {
        let family = HashFamily::sample(cfg.kind, cfg.k, cfg.master_seed)?;
        let scheme = WeightScheme::new(cfg.tf, cfg.idf, Some(&corpus.stats))?;
        let meta = IndexMeta {
            tokenizer: corpus.tokenizer,
            vocabulary: corpus.vocab.surfaces().to_vec(),
            stats: corpus.stats.clone(),
            mode: cfg.mode,
            master_seed: Some(cfg.master_seed),
            text_lengths: text_lengths(&corpus.texts),
        };
        Self::build_with(&corpus.texts, family, scheme, meta)
    }

    /// Indexes `texts` under an explicit family, e.g. a table hash.
    pub fn build_texts(
        texts: &[Text],
        family: HashFamily,
        scheme: WeightScheme,
        mode: Mode,
    ) -> Result<(Self, BuildStats)> {
        let meta = IndexMeta {
            stats: CorpusStats::from_texts(texts),
            mode,
            text_lengths: text_lengths(texts),
            ..IndexMeta::default()
        };
        Self::build_with(texts, family, scheme, meta)
    }

    fn build_with(
        texts: &[Text],
        family: HashFamily,
        scheme: WeightScheme,
        meta: IndexMeta,
    ) -> Result<(Self, BuildStats)> {
        if texts.is_empty() {
            return Err(Error::BadParams("cannot index an empty corpus".into()));
        }
        if family.is_empty() {
            return Err(Error::BadParams("sketch size k must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in texts {
            if !seen.insert(t.id) {
                return Err(Error::DuplicateId(t.id));
            }
        }
        let start = Instant::now();
        let k = family.len();
        let mode = meta.mode;
        let units: Vec<(usize, usize)> = (0..k)
            .flat_map(|f| (0..texts.len()).map(move |t| (f, t)))
            .collect();
        let parts = units
            .par_iter()
            .map(|&(f, t)| {
                let h = family.bind(f, &scheme);
                monotonic_partitioning(&texts[t], &h, f as u32, mode)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut lists: Vec<BTreeMap<HashValue, Vec<CompactWindow>>> = vec![BTreeMap::new(); k];
        let mut stats = BuildStats {
            windows_per_fn: vec![0; k],
            ..BuildStats::default()
        };
        for p in parts {
            let f = p.fn_index as usize;
            stats.windows_per_fn[f] += p.len() as u64;
            *stats.windows_per_text.entry(p.text_id).or_insert(0) += p.len() as u64;
            for w in p.windows {
                lists[f].entry(w.v).or_default().push(w);
            }
        }
        for list in lists.iter_mut().flat_map(|m| m.values_mut()) {
            list.sort_by_key(|w| (w.text_id, w.a, w.c));
        }
        stats.windows_total = stats.windows_per_fn.iter().sum();
        for t in texts {
            *stats.max_freq_histogram.entry(t.max_freq()).or_insert(0) += 1;
        }
        stats.build_seconds = start.elapsed().as_secs_f64();
        Ok((
            InvertedIndex {
                family,
                scheme,
                meta,
                lists,
            },
            stats,
        ))
    }

    pub fn k(&self) -> usize {
        self.family.len()
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::from_surfaces(self.meta.vocabulary.clone())
    }

    /// Windows stored under `v` for function `i` (0-based).
    pub fn lookup(&self, i: usize, v: &HashValue) -> &[CompactWindow] {
        self.lists
            .get(i)
            .and_then(|m| m.get(v))
            .map_or(&[], |l| l.as_slice())
    }

    /// All lists of function `i`.
    pub fn lists(&self, i: usize) -> &BTreeMap<HashValue, Vec<CompactWindow>> {
        &self.lists[i]
    }

    pub fn window_count(&self) -> u64 {
        self.lists
            .iter()
            .flat_map(|m| m.values())
            .map(|l| l.len() as u64)
            .sum()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u16::<LE>(FORMAT_VERSION)?;
        out.write_u8(self.family.kind().tag())?;
        out.write_u32::<LE>(self.k() as u32)?;
        out.write_u16::<LE>(self.scheme.id().to_u16())?;
        match &self.family {
            HashFamily::Universal(fns) => {
                for h in fns {
                    let (a1, a2, b) = h.params();
                    out.write_u64::<LE>(a1)?;
                    out.write_u64::<LE>(a2)?;
                    out.write_u64::<LE>(b)?;
                }
            }
            HashFamily::Icws(fns) => {
                for h in fns {
                    out.write_u64::<LE>(h.seed())?;
                }
            }
            HashFamily::Table(fns) => {
                for h in fns {
                    out.write_u32::<LE>(h.entries().len() as u32)?;
                    for (&(t, x), &v) in h.entries() {
                        out.write_u32::<LE>(t)?;
                        out.write_u32::<LE>(x)?;
                        out.write_u64::<LE>(v)?;
                    }
                }
            }
        }
        let meta = serde_json::to_vec(&self.meta)
            .map_err(|e| Error::BadParams(format!("cannot encode index metadata: {e}")))?;
        out.write_u32::<LE>(meta.len() as u32)?;
        out.extend_from_slice(&meta);
        for list in &self.lists {
            out.write_u32::<LE>(list.len() as u32)?;
            for (v, windows) in list {
                match *v {
                    HashValue::Universal(x) => out.write_u64::<LE>(x)?,
                    HashValue::Icws { token, z, a } => {
                        out.write_u32::<LE>(token)?;
                        out.write_i64::<LE>(z)?;
                        out.write_f64::<LE>(a)?;
                    }
                }
                out.write_u32::<LE>(windows.len() as u32)?;
                for w in windows {
                    for x in [w.text_id, w.a, w.b, w.c, w.d] {
                        out.write_u32::<LE>(x)?;
                    }
                }
            }
        }
        let sum = checksum(&out);
        out.write_u64::<LE>(sum)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 2 + 8 || &bytes[..4] != MAGIC {
            return Err(Error::CorruptIndex("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
        if checksum(body) != stored {
            return Err(Error::CorruptIndex("checksum mismatch".into()));
        }
        decode(&body[6..]).map_err(|e| match e {
            Error::Io(io) => Error::CorruptIndex(io.to_string()),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndex(msg.into())
}

fn decode(rest: &[u8]) -> Result<InvertedIndex> {
    let mut r = Cursor::new(rest);
    let kind = HashKind::from_tag(r.read_u8()?).ok_or_else(|| corrupt("unknown hash kind"))?;
    let k = r.read_u32::<LE>()? as usize;
    let scheme_id = SchemeId::from_u16(r.read_u16::<LE>()?).ok_or_else(|| corrupt("unknown scheme"))?;
    let family = match kind {
        HashKind::Universal => HashFamily::Universal(
            (0..k)
                .map(|_| {
                    let (a1, a2, b) = (r.read_u64::<LE>()?, r.read_u64::<LE>()?, r.read_u64::<LE>()?);
                    UniversalHash::new(a1, a2, b).map_err(|e| corrupt(e.to_string()))
                })
                .collect::<Result<_>>()?,
        ),
        HashKind::Icws => HashFamily::Icws(
            (0..k)
                .map(|_| Ok(IcwsHash::new(r.read_u64::<LE>()?)))
                .collect::<Result<_>>()?,
        ),
        HashKind::Table => HashFamily::Table(
            (0..k)
                .map(|_| {
                    let len = r.read_u32::<LE>()?;
                    let entries = (0..len)
                        .map(|_| Ok(((r.read_u32::<LE>()?, r.read_u32::<LE>()?), r.read_u64::<LE>()?)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(TableHash::new(entries))
                })
                .collect::<Result<_>>()?,
        ),
    };
    let meta_len = r.read_u32::<LE>()? as usize;
    if meta_len > rest.len() {
        return Err(corrupt("metadata length out of range"));
    }
    let mut meta_bytes = vec![0; meta_len];
    r.read_exact(&mut meta_bytes)?;
    let meta: IndexMeta =
        serde_json::from_slice(&meta_bytes).map_err(|e| corrupt(format!("metadata: {e}")))?;
    let scheme = WeightScheme::new(scheme_id.tf, scheme_id.idf, Some(&meta.stats))
        .map_err(|e| corrupt(e.to_string()))?;

    let mut lists = Vec::with_capacity(k);
    for f in 0..k {
        let runs = r.read_u32::<LE>()?;
        let mut list = BTreeMap::new();
        for _ in 0..runs {
            let v = match kind {
                HashKind::Icws => HashValue::Icws {
                    token: r.read_u32::<LE>()?,
                    z: r.read_i64::<LE>()?,
                    a: r.read_f64::<LE>()?,
                },
                _ => HashValue::Universal(r.read_u64::<LE>()?),
            };
            let count = r.read_u32::<LE>()? as usize;
            if count > rest.len() / 20 {
                return Err(corrupt("window count out of range"));
            }
            let mut windows = Vec::with_capacity(count);
            for _ in 0..count {
                let mut x = [0u32; 5];
                r.read_u32_into::<LE>(&mut x)?;
                windows.push(CompactWindow {
                    text_id: x[0],
                    fn_index: f as u32,
                    v,
                    a: x[1],
                    b: x[2],
                    c: x[3],
                    d: x[4],
                });
            }
            if list.insert(v, windows).is_some() {
                return Err(corrupt("duplicate hash value in a list"));
            }
        }
        lists.push(list);
    }
    if r.position() as usize != rest.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(InvertedIndex {
        family,
        scheme,
        meta,
        lists,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_corpus, TokenizerConfig};
    use crate::oracle::{check_partition, grid, random_text, running_example};
    use crate::partition::Partition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_index(k: usize) -> InvertedIndex {
        let (t, h) = running_example();
        let fam = HashFamily::Table(vec![h; k]);
        InvertedIndex::build_texts(&[t], fam, WeightScheme::raw_count(), Mode::ActiveKeys)
            .unwrap()
            .0
    }

    #[test]
    fn running_example_index() {
        let idx = example_index(1);
        assert_eq!(idx.window_count(), 13);
        let values: Vec<u64> = idx
            .lists(0)
            .keys()
            .map(|v| match v {
                HashValue::Universal(x) => *x,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(values, vec![1, 2, 3, 4, 9]);
        let one = idx.lookup(0, &HashValue::Universal(1));
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].rect(), (1, 2, 8, 10));
        assert!(idx.lookup(0, &HashValue::Universal(77)).is_empty());
        assert_eq!(example_index(2).window_count(), 26);
    }

    #[test]
    fn round_trip_and_errors() {
        let idx = example_index(1);
        let bytes = idx.to_bytes().unwrap();
        assert_eq!(InvertedIndex::from_bytes(&bytes).unwrap(), idx);

        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(InvertedIndex::from_bytes(truncated), Err(Error::CorruptIndex(_))));
        let mut flipped = bytes.clone();
        flipped[20] ^= 1;
        assert!(matches!(InvertedIndex::from_bytes(&flipped), Err(Error::CorruptIndex(_))));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(InvertedIndex::from_bytes(&magic), Err(Error::CorruptIndex(_))));
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(InvertedIndex::from_bytes(&version), Err(Error::UnsupportedVersion(9))));
        assert!(matches!(InvertedIndex::from_bytes(b"WA"), Err(Error::CorruptIndex(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("example.waln");
        let idx = example_index(3);
        idx.save(&path).unwrap();
        assert_eq!(InvertedIndex::load(&path).unwrap(), idx);
    }

    fn small_corpus(seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<(u32, String)> = (0..30)
            .map(|i| {
                let t = random_text(&mut rng, i, 25, 6);
                let s: Vec<String> = t.tokens.iter().map(|x| format!("w{x}")).collect();
                (i, s.join(" "))
            })
            .collect();
        ingest_corpus(raw, TokenizerConfig::default()).unwrap()
    }

    #[test]
    fn build_is_deterministic_and_conserves_windows() {
        let corpus = small_corpus(4);
        for kind in [HashKind::Universal, HashKind::Icws] {
            let cfg = IndexConfig {
                kind,
                k: 8,
                master_seed: 11,
                tf: Tf::Logarithmic,
                idf: Idf::Smooth,
                mode: Mode::ActiveKeys,
            };
            let (a, stats) = InvertedIndex::build(&corpus, &cfg).unwrap();
            let (b, _) = InvertedIndex::build(&corpus, &cfg).unwrap();
            assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
            assert_eq!(stats.windows_total, a.window_count());
            assert_eq!(stats.windows_per_text.values().sum::<u64>(), stats.windows_total);

            // every stored window is re-checked against the oracle grid
            for f in 0..a.k() {
                let h = a.family().bind(f, a.scheme());
                for text in &corpus.texts {
                    let windows: Vec<_> = a
                        .lists(f)
                        .values()
                        .flatten()
                        .filter(|w| w.text_id == text.id)
                        .copied()
                        .collect();
                    let p = Partition {
                        text_id: text.id,
                        fn_index: f as u32,
                        n: text.len() as u32,
                        windows,
                        keys_visited: 0,
                    };
                    check_partition(&p, &grid(text, &h, 512).unwrap()).unwrap();
                }
                for list in a.lists(f).values() {
                    assert!(list.windows(2).all(|w| (w[0].text_id, w[0].a, w[0].c) <= (w[1].text_id, w[1].a, w[1].c)));
                }
            }
            let loaded = InvertedIndex::from_bytes(&a.to_bytes().unwrap()).unwrap();
            assert_eq!(loaded, a);
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        let raw = WeightScheme::raw_count();
        let fam = HashFamily::sample(HashKind::Universal, 1, 0).unwrap();
        assert!(InvertedIndex::build_texts(&[], fam.clone(), raw.clone(), Mode::AllKeys).is_err());
        let t = Text::from_letters(1, "AB");
        assert!(matches!(
            InvertedIndex::build_texts(&[t.clone(), t], fam, raw, Mode::AllKeys),
            Err(Error::DuplicateId(1))
        ));
    }
}
