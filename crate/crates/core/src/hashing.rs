//! Hash families for (weighted) min-hash.
//!
//! Two concrete families share the [`HashValue`] type:
//!
//! * [`UniversalHash`] hashes a `(token, occurrence)` pair for multi-set
//!   min-hash.
//! * [`IcwsHash`] is improved consistent weighted sampling; it hashes a
//!   `(token, weight)` pair so that the probability of two texts sharing a
//!   weighted min-hash equals their weighted Jaccard similarity.
//!
//! Partitioning and querying only see the [`MinHasher`] trait, which maps a
//! token and an in-text frequency `x >= 1` to a hash value.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::weights::WeightScheme;

/// The Mersenne prime `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Exponent of the power permutation applied after the linear step.
/// `gcd(17, p - 1) = 1`, so `v -> v^17 mod p` is a bijection on `[0, p)`.
const SCRAMBLE_EXPONENT: u32 = 17;

/// A min-hash sample value.
///
/// `Universal` values compare as integers. `Icws` values are equal when the
/// token and the integer bucket `z` agree (the real-valued `y` is a
/// deterministic function of both) and are ordered by `a`, with `(token, z)`
/// as a tie-break so the order is total.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum HashValue {
    Universal(u64),
    Icws { token: TokenId, z: i64, a: f64 },
}

impl PartialEq for HashValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (HashValue::Universal(x), HashValue::Universal(y)) => x == y,
            (
                HashValue::Icws { token: t1, z: z1, .. },
                HashValue::Icws { token: t2, z: z2, .. },
            ) => t1 == t2 && z1 == z2,
            _ => false,
        }
    }
}

impl Eq for HashValue {}

impl Hash for HashValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match *self {
            HashValue::Universal(v) => {
                state.write_u8(0);
                state.write_u64(v);
            }
            HashValue::Icws { token, z, .. } => {
                state.write_u8(1);
                state.write_u32(token);
                state.write_i64(z);
            }
        }
    }
}

impl Ord for HashValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (HashValue::Universal(x), HashValue::Universal(y)) => x.cmp(y),
            (
                HashValue::Icws {
                    token: t1,
                    z: z1,
                    a: a1,
                },
                HashValue::Icws {
                    token: t2,
                    z: z2,
                    a: a2,
                },
            ) => {
                if t1 == t2 && z1 == z2 {
                    return Ordering::Equal;
                }
                a1.total_cmp(a2).then(t1.cmp(t2)).then(z1.cmp(z2))
            }
            (HashValue::Universal(_), HashValue::Icws { .. }) => Ordering::Less,
            (HashValue::Icws { .. }, HashValue::Universal(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for HashValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A hash function over `(token, frequency)` pairs.
pub trait MinHasher: Sync {
    /// Hash of the `count`-th occurrence of `token` (`count >= 1`). For
    /// weighted hashers this is `h(token, w(token, count))`.
    fn hash(&self, token: TokenId, count: u32) -> HashValue;

    /// `[hash(token, 1), ..., hash(token, max_count)]`.
    fn hash_sequence(&self, token: TokenId, max_count: u32) -> Vec<HashValue> {
        (1..=max_count).map(|x| self.hash(token, x)).collect()
    }

    /// Min-hash of a whole text given its token counts.
    fn min_hash(&self, counts: &BTreeMap<TokenId, u32>) -> Option<HashValue> {
        counts
            .iter()
            .flat_map(|(&t, &f)| self.hash_sequence(t, f))
            .min()
    }
}

#[inline]
fn reduce(v: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let mut r = (v & p) + (v >> 61);
    while r >= p {
        r -= p;
    }
    r as u64
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

#[inline]
fn scramble(v: u64) -> u64 {
    // v^17 = v^16 * v
    let mut s = v;
    for _ in 0..4 {
        s = mul_mod(s, s);
    }
    debug_assert_eq!(SCRAMBLE_EXPONENT, 17);
    mul_mod(s, v)
}

/// Member of the universal family `(a1*t + a2*x + b) mod p` over
/// `p = 2^61 - 1`, followed by the power permutation `v -> v^17 mod p`.
///
/// The permutation leaves the collision structure of the linear family
/// untouched but removes its arithmetic-progression pattern in `x`, so that
/// the running minimum of `h(t, 1..x)` behaves like that of i.i.d. values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalHash {
    a1: u64,
    a2: u64,
    b: u64,
}

impl UniversalHash {
    pub fn new(a1: u64, a2: u64, b: u64) -> Result<Self> {
        if a1 == 0 || a2 == 0 || a1 >= MERSENNE_61 || a2 >= MERSENNE_61 || b >= MERSENNE_61 {
            return Err(Error::BadParams(format!(
                "universal hash parameters out of range: a1={a1} a2={a2} b={b}"
            )));
        }
        Ok(UniversalHash { a1, a2, b })
    }

    pub fn params(&self) -> (u64, u64, u64) {
        (self.a1, self.a2, self.b)
    }

    /// The linear part `(a1*t + a2*x + b) mod p`.
    pub fn linear(&self, t: TokenId, x: u32) -> u64 {
        let sum = self.a1 as u128 * t as u128 + self.a2 as u128 * x as u128 + self.b as u128;
        reduce(sum)
    }

    #[inline]
    fn value(&self, t: TokenId, x: u32) -> u64 {
        scramble(self.linear(t, x))
    }

    pub fn eval(&self, t: TokenId, x: u32) -> Result<HashValue> {
        if x == 0 {
            return Err(Error::BadFrequency);
        }
        Ok(HashValue::Universal(self.value(t, x)))
    }
}

impl MinHasher for UniversalHash {
    fn hash(&self, token: TokenId, count: u32) -> HashValue {
        HashValue::Universal(self.value(token, count))
    }
}

/// Per-token ICWS draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcwsParams {
    pub r: f64,
    pub c: f64,
    pub beta: f64,
}

/// A full ICWS sample: the bucket `z`, the consistent sample `y <= weight`,
/// and the ranking value `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcwsSample {
    pub z: i64,
    pub y: f64,
    pub a: f64,
}

/// Improved consistent weighted sampling.
///
/// Per-token parameters are derived on demand from a ChaCha stream selected
/// by the token id, so a function is just its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcwsHash {
    seed: u64,
}

impl IcwsHash {
    pub fn new(seed: u64) -> Self {
        IcwsHash { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self, t: TokenId) -> IcwsParams {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        // Gamma(2, 1) as the sum of two unit exponentials
        let r: f64 = rng.sample::<f64, _>(Exp1) + rng.sample::<f64, _>(Exp1);
        let c: f64 = rng.sample::<f64, _>(Exp1) + rng.sample::<f64, _>(Exp1);
        let beta: f64 = rng.random();
        IcwsParams { r, c, beta }
    }

    fn sample_with(p: &IcwsParams, weight: f64) -> IcwsSample {
        let z = (weight.ln() / p.r + p.beta).floor();
        let y = (p.r * (z - p.beta)).exp();
        // a = c / (y * e^r), kept in log space until the end
        let a = p.c * (-(p.r * (z - p.beta)) - p.r).exp();
        IcwsSample { z: z as i64, y, a }
    }

    pub fn sample(&self, t: TokenId, weight: f64) -> Result<IcwsSample> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::BadWeight(weight));
        }
        Ok(Self::sample_with(&self.params(t), weight))
    }

    pub fn eval(&self, t: TokenId, weight: f64) -> Result<HashValue> {
        let s = self.sample(t, weight)?;
        Ok(HashValue::Icws {
            token: t,
            z: s.z,
            a: s.a,
        })
    }
}

/// ICWS bound to a weight scheme, hashing `(t, x)` as `h(t, w(t, x))`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedHasher<'a> {
    pub icws: &'a IcwsHash,
    pub scheme: &'a WeightScheme,
}

impl WeightedHasher<'_> {
    fn value(&self, p: &IcwsParams, token: TokenId, count: u32) -> HashValue {
        let s = IcwsHash::sample_with(p, self.scheme.weight_or_unseen(token, count));
        HashValue::Icws {
            token,
            z: s.z,
            a: s.a,
        }
    }
}

impl MinHasher for WeightedHasher<'_> {
    fn hash(&self, token: TokenId, count: u32) -> HashValue {
        self.value(&self.icws.params(token), token, count)
    }

    fn hash_sequence(&self, token: TokenId, max_count: u32) -> Vec<HashValue> {
        let p = self.icws.params(token);
        (1..=max_count).map(|x| self.value(&p, token, x)).collect()
    }

    /// Weighted min-hash: the minimum over distinct tokens of
    /// `h(t, w(t, f(t, T)))`. Hashes are non-increasing in the frequency,
    /// so this agrees with the minimum over the whole hash value set.
    fn min_hash(&self, counts: &BTreeMap<TokenId, u32>) -> Option<HashValue> {
        counts.iter().map(|(&t, &f)| self.hash(t, f)).min()
    }
}

/// A hash function given by an explicit table of `(token, x) -> value`.
/// Missing entries hash to large distinct values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableHash {
    entries: BTreeMap<(TokenId, u32), u64>,
}

impl TableHash {
    pub fn new(entries: impl IntoIterator<Item = ((TokenId, u32), u64)>) -> Self {
        TableHash {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<(TokenId, u32), u64> {
        &self.entries
    }
}

impl MinHasher for TableHash {
    fn hash(&self, token: TokenId, count: u32) -> HashValue {
        let v = self
            .entries
            .get(&(token, count))
            .copied()
            .unwrap_or_else(|| u64::MAX - (((token as u64) << 32) | count as u64));
        HashValue::Universal(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum HashKind {
    Universal = 0,
    Icws = 1,
    Table = 2,
}

impl HashKind {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(HashKind::Universal),
            1 => Some(HashKind::Icws),
            2 => Some(HashKind::Table),
            _ => None,
        }
    }
}

impl std::str::FromStr for HashKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "universal" => Ok(HashKind::Universal),
            "icws" => Ok(HashKind::Icws),
            _ => Err(Error::BadParams(format!("unknown hash kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for HashKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HashKind::Universal => "universal",
            HashKind::Icws => "icws",
            HashKind::Table => "table",
        })
    }
}

/// `k` hash functions of one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HashFamily {
    Universal(Vec<UniversalHash>),
    Icws(Vec<IcwsHash>),
    Table(Vec<TableHash>),
}

impl HashFamily {
    /// Draws `k` independent functions, fully determined by `master_seed`.
    pub fn sample(kind: HashKind, k: usize, master_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadParams("sketch size k must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        match kind {
            HashKind::Universal => Ok(HashFamily::Universal(
                (0..k)
                    .map(|_| UniversalHash {
                        a1: rng.random_range(1..MERSENNE_61),
                        a2: rng.random_range(1..MERSENNE_61),
                        b: rng.random_range(0..MERSENNE_61),
                    })
                    .collect(),
            )),
            HashKind::Icws => {
                let mut seen = HashSet::with_capacity(k);
                let mut fns = Vec::with_capacity(k);
                while fns.len() < k {
                    let seed: u64 = rng.random();
                    if seen.insert(seed) {
                        fns.push(IcwsHash::new(seed));
                    }
                }
                Ok(HashFamily::Icws(fns))
            }
            HashKind::Table => Err(Error::BadParams(
                "table hash families are constructed explicitly, not sampled".into(),
            )),
        }
    }

    pub fn kind(&self) -> HashKind {
        match self {
            HashFamily::Universal(_) => HashKind::Universal,
            HashFamily::Icws(_) => HashKind::Icws,
            HashFamily::Table(_) => HashKind::Table,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            HashFamily::Universal(v) => v.len(),
            HashFamily::Icws(v) => v.len(),
            HashFamily::Table(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Function `i` (0-based). ICWS functions are bound to `scheme`; the
    /// other kinds hash raw frequencies and ignore it.
    pub fn bind<'a>(&'a self, i: usize, scheme: &'a WeightScheme) -> BoundHasher<'a> {
        match self {
            HashFamily::Universal(v) => BoundHasher::Universal(&v[i]),
            HashFamily::Icws(v) => BoundHasher::Weighted(WeightedHasher {
                icws: &v[i],
                scheme,
            }),
            HashFamily::Table(v) => BoundHasher::Table(&v[i]),
        }
    }
}

/// One function of a [`HashFamily`], ready to hash.
#[derive(Debug, Clone, Copy)]
pub enum BoundHasher<'a> {
    Universal(&'a UniversalHash),
    Weighted(WeightedHasher<'a>),
    Table(&'a TableHash),
}

impl MinHasher for BoundHasher<'_> {
    fn hash(&self, token: TokenId, count: u32) -> HashValue {
        match self {
            BoundHasher::Universal(h) => h.hash(token, count),
            BoundHasher::Weighted(h) => h.hash(token, count),
            BoundHasher::Table(h) => h.hash(token, count),
        }
    }

    fn hash_sequence(&self, token: TokenId, max_count: u32) -> Vec<HashValue> {
        match self {
            BoundHasher::Universal(h) => h.hash_sequence(token, max_count),
            BoundHasher::Weighted(h) => h.hash_sequence(token, max_count),
            BoundHasher::Table(h) => h.hash_sequence(token, max_count),
        }
    }

    fn min_hash(&self, counts: &BTreeMap<TokenId, u32>) -> Option<HashValue> {
        match self {
            BoundHasher::Universal(h) => h.min_hash(counts),
            BoundHasher::Weighted(h) => h.min_hash(counts),
            BoundHasher::Table(h) => h.min_hash(counts),
        }
    }
}

/// Groups hash values by token for quick inspection in tests and tools.
pub fn token_sequences<H: MinHasher + ?Sized>(
    hasher: &H,
    counts: &BTreeMap<TokenId, u32>,
) -> HashMap<TokenId, Vec<HashValue>> {
    counts
        .iter()
        .map(|(&t, &f)| (t, hasher.hash_sequence(t, f)))
        .collect()
}
