//! Monotonic partitioning of a text's subsequence min-hashes into compact
//! windows.
//!
//! A key `(p, q)` is a pair of positions holding the same token. Its hash is
//! `h(T[q], freq(T[q], T[p, q]))`, and the min-hash of `T[i, j]` is the
//! smallest hash among keys inside `[i, j]`. Visiting keys in ascending hash
//! order and keeping the non-dominated ones in a [`Skyline`] yields, per
//! visited key, a staircase of rectangles whose cells all take that key's
//! hash as their min-hash.

pub mod skyline;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Text, TokenId};
use crate::error::{Error, Result};
use crate::hashing::{HashValue, MinHasher};
pub use skyline::{Probe, Skyline};

/// A position pair `(x, y)` with `T[x] = T[y]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Key {
    pub x: u32,
    pub y: u32,
    pub hash: HashValue,
    /// Occurrences of `T[x]` in `T[x, y]`.
    pub freq: u32,
}

/// All subsequences `T[i, j]` with `a <= i <= b` and `c <= j <= d` have
/// min-hash `v` under function `fn_index` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompactWindow {
    pub text_id: u32,
    pub fn_index: u32,
    pub v: HashValue,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl CompactWindow {
    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.a <= i && i <= self.b && self.c <= j && j <= self.d
    }

    /// Number of cells `(i, j)` in the rectangle.
    pub fn area(&self) -> u64 {
        (self.b - self.a + 1) as u64 * (self.d - self.c + 1) as u64
    }

    pub fn rect(&self) -> (u32, u32, u32, u32) {
        (self.a, self.b, self.c, self.d)
    }
}

fn fmt_hash(v: &HashValue) -> String {
    match v {
        HashValue::Universal(x) => x.to_string(),
        HashValue::Icws { token, z, a } => format!("{token}:{z}:{a:e}"),
    }
}

impl fmt::Display for CompactWindow {
    /// `text_id i v a b c d`, with `i` counted from 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {}",
            self.text_id,
            self.fn_index + 1,
            fmt_hash(&self.v),
            self.a,
            self.b,
            self.c,
            self.d
        )
    }
}

/// Which keys the partitioner visits. Both produce the same windows.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub enum Mode {
    AllKeys,
    #[default]
    ActiveKeys,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::AllKeys => "all",
            Mode::ActiveKeys => "active",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_keys" => Ok(Mode::AllKeys),
            "active" | "active_keys" => Ok(Mode::ActiveKeys),
            _ => Err(Error::BadParams(format!("unknown mode {s:?}"))),
        }
    }
}

/// The compact windows of one text under one hash function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub text_id: u32,
    pub fn_index: u32,
    pub n: u32,
    pub windows: Vec<CompactWindow>,
    /// Keys handed to the sweep (all keys or active keys, per mode).
    pub keys_visited: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// One window per line, `text_id i v a b c d`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for w in &self.windows {
            out.push_str(&w.to_string());
            out.push('\n');
        }
        out
    }

    /// Windows sorted by rectangle, for order-insensitive comparison.
    pub fn sorted_windows(&self) -> Vec<CompactWindow> {
        let mut w = self.windows.clone();
        w.sort_by_key(|w| (w.a, w.c, w.b, w.d));
        w
    }
}

/// What happened when one key was visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub key: (u32, u32),
    pub dominated_by: Option<(u32, u32)>,
    /// `(a, b, c, d)` of the windows emitted for this key.
    pub emitted: Vec<(u32, u32, u32, u32)>,
}

fn positions(text: &Text) -> BTreeMap<TokenId, Vec<u32>> {
    let mut pos: BTreeMap<TokenId, Vec<u32>> = BTreeMap::new();
    for (i, &t) in text.tokens.iter().enumerate() {
        pos.entry(t).or_default().push(i as u32 + 1);
    }
    pos
}

/// Every key of `text`, in no particular order.
pub fn generate_keys<H: MinHasher + ?Sized>(text: &Text, hasher: &H) -> Vec<Key> {
    let mut keys = Vec::new();
    for (t, occ) in positions(text) {
        let hs = hasher.hash_sequence(t, occ.len() as u32);
        for i in 0..occ.len() {
            for j in i..occ.len() {
                keys.push(Key {
                    x: occ[i],
                    y: occ[j],
                    hash: hs[j - i],
                    freq: (j - i + 1) as u32,
                });
            }
        }
    }
    keys
}

/// `(freq, hash)` for each active hash value of a token's sequence: values
/// strictly below every value at a lower frequency.
pub fn active_hashes(hs: &[HashValue]) -> Vec<(u32, HashValue)> {
    let mut out = Vec::new();
    let mut best: Option<HashValue> = None;
    for (i, &h) in hs.iter().enumerate() {
        if best.is_none_or(|b| h < b) {
            out.push((i as u32 + 1, h));
            best = Some(h);
        }
    }
    out
}

/// The keys carrying active hash values, already in visit order.
///
/// The distinct active values (at most `n`) are sorted first and then each
/// is expanded into its keys, which come out with ascending `x`.
pub fn generate_active_keys<H: MinHasher + ?Sized>(text: &Text, hasher: &H) -> Vec<Key> {
    let pos = positions(text);
    let mut values: Vec<(HashValue, u32, TokenId)> = Vec::new();
    for (&t, occ) in &pos {
        let hs = hasher.hash_sequence(t, occ.len() as u32);
        values.extend(active_hashes(&hs).into_iter().map(|(f, h)| (h, f, t)));
    }
    values.sort_by(|l, r| l.0.cmp(&r.0).then(l.1.cmp(&r.1)).then(l.2.cmp(&r.2)));

    let mut keys = Vec::new();
    let mut group_start = 0;
    let mut group_values = 0;
    for (idx, &(h, f, t)) in values.iter().enumerate() {
        group_values += 1;
        let occ = &pos[&t];
        let f_us = f as usize;
        keys.extend((0..=occ.len() - f_us).map(|i| Key {
            x: occ[i],
            y: occ[i + f_us - 1],
            hash: h,
            freq: f,
        }));
        let group_ends = values
            .get(idx + 1)
            .is_none_or(|next| next.0 != h || next.1 != f);
        if group_ends {
            // equal (hash, freq) across tokens only happens on a collision
            if group_values > 1 {
                keys[group_start..].sort_by_key(|k| k.x);
            }
            group_start = keys.len();
            group_values = 0;
        }
    }
    keys
}

/// Visit order: ascending hash, then ascending frequency, then ascending `x`.
///
/// Among equal hashes the lower-frequency key goes first. A same-token key
/// with equal hash and higher frequency always contains a lower-frequency
/// one, so it arrives dominated and never changes the skyline.
pub fn visit_cmp(l: &Key, r: &Key) -> std::cmp::Ordering {
    l.hash
        .cmp(&r.hash)
        .then(l.freq.cmp(&r.freq))
        .then(l.x.cmp(&r.x))
}

pub fn key_visit_order(mut keys: Vec<Key>) -> Vec<Key> {
    keys.sort_by(visit_cmp);
    keys
}

fn sweep(
    text: &Text,
    fn_index: u32,
    keys: &[Key],
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Vec<CompactWindow> {
    let n = text.len() as u32;
    let total = n as u64 * (n as u64 + 1) / 2;
    let mut covered = 0u64;
    let mut sky = Skyline::new(n);
    let mut windows = Vec::new();
    for key in keys {
        let (b, c) = (key.x, key.y);
        match sky.probe(b, c) {
            Probe::Dominated { by } => {
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceStep {
                        key: (b, c),
                        dominated_by: Some(by),
                        emitted: Vec::new(),
                    });
                }
            }
            Probe::Clear { lower, upper } => {
                let chain = sky.chain(lower, upper);
                let rects = Skyline::staircase(&chain, b, c);
                for &(a, b, c, d) in &rects {
                    covered += (b - a + 1) as u64 * (d - c + 1) as u64;
                    windows.push(CompactWindow {
                        text_id: text.id,
                        fn_index,
                        v: key.hash,
                        a,
                        b,
                        c,
                        d,
                    });
                }
                sky.insert(&chain, b, c);
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceStep {
                        key: (b, c),
                        dominated_by: None,
                        emitted: rects,
                    });
                }
            }
        }
        if covered == total && trace.is_none() {
            break;
        }
    }
    windows
}

fn visit_keys<H: MinHasher + ?Sized>(text: &Text, hasher: &H, mode: Mode) -> Vec<Key> {
    match mode {
        Mode::AllKeys => key_visit_order(generate_keys(text, hasher)),
        Mode::ActiveKeys => generate_active_keys(text, hasher),
    }
}

/// Partitions all subsequences of `text` by their min-hash under `hasher`.
pub fn monotonic_partitioning<H: MinHasher + ?Sized>(
    text: &Text,
    hasher: &H,
    fn_index: u32,
    mode: Mode,
) -> Result<Partition> {
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    let keys = visit_keys(text, hasher, mode);
    let windows = sweep(text, fn_index, &keys, None);
    Ok(Partition {
        text_id: text.id,
        fn_index,
        n: text.len() as u32,
        windows,
        keys_visited: keys.len(),
    })
}

/// Same as [`monotonic_partitioning`], also recording every visited key.
pub fn traced_partitioning<H: MinHasher + ?Sized>(
    text: &Text,
    hasher: &H,
    fn_index: u32,
    mode: Mode,
) -> Result<(Partition, Vec<TraceStep>)> {
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    let keys = visit_keys(text, hasher, mode);
    let mut trace = Vec::with_capacity(keys.len());
    let windows = sweep(text, fn_index, &keys, Some(&mut trace));
    Ok((
        Partition {
            text_id: text.id,
            fn_index,
            n: text.len() as u32,
            windows,
            keys_visited: keys.len(),
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::{HashFamily, HashKind, IcwsHash, TableHash, WeightedHasher};
    use crate::oracle::{check_partition, grid, random_text, running_example};
    use crate::weights::{Idf, Tf, WeightScheme};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXAMPLE_WINDOWS: [(u64, u32, u32, u32, u32); 13] = [
        (1, 1, 2, 8, 10),
        (2, 1, 1, 1, 7),
        (2, 2, 3, 3, 7),
        (2, 3, 3, 8, 10),
        (2, 4, 5, 5, 10),
        (2, 6, 6, 6, 10),
        (3, 7, 9, 9, 10),
        (3, 10, 10, 10, 10),
        (4, 7, 7, 8, 8),
        (9, 2, 2, 2, 2),
        (9, 4, 4, 4, 4),
        (9, 7, 7, 7, 7),
        (9, 8, 8, 8, 8),
    ];

    #[test]
    fn running_example_key_counts() {
        let (t, h) = running_example();
        let keys = generate_keys(&t, &h);
        assert_eq!(keys.len(), 23);
        let k13 = keys.iter().find(|k| (k.x, k.y) == (1, 3)).unwrap();
        assert_eq!(k13.hash, HashValue::Universal(5));
        assert_eq!(generate_active_keys(&t, &h).len(), 14);
    }

    #[test]
    fn running_example_visit_order() {
        let (t, h) = running_example();
        let order: Vec<_> = key_visit_order(generate_keys(&t, &h))
            .iter()
            .take(8)
            .map(|k| (k.x, k.y))
            .collect();
        assert_eq!(
            order,
            vec![(2, 8), (1, 1), (3, 3), (5, 5), (6, 6), (9, 9), (10, 10), (2, 4)]
        );
        let active: Vec<_> = generate_active_keys(&t, &h)
            .iter()
            .take(8)
            .map(|k| (k.x, k.y))
            .collect();
        assert_eq!(active, order);
    }

    #[test]
    fn running_example_partition() {
        let (t, h) = running_example();
        for mode in [Mode::AllKeys, Mode::ActiveKeys] {
            let p = monotonic_partitioning(&t, &h, 0, mode).unwrap();
            let mut got: Vec<_> = p
                .windows
                .iter()
                .map(|w| {
                    let HashValue::Universal(v) = w.v else { unreachable!() };
                    (v, w.a, w.b, w.c, w.d)
                })
                .collect();
            got.sort();
            let mut want = EXAMPLE_WINDOWS.to_vec();
            want.sort();
            assert_eq!(got, want, "mode {mode}");
            check_partition(&p, &grid(&t, &h, 512).unwrap()).unwrap();
        }
    }

    #[test]
    fn running_example_trace() {
        let (t, h) = running_example();
        let (_, trace) = traced_partitioning(&t, &h, 0, Mode::AllKeys).unwrap();
        assert_eq!(trace[0].emitted, vec![(1, 2, 8, 10)]);
        let step = trace.iter().find(|s| s.key == (3, 3)).unwrap();
        assert_eq!(step.emitted, vec![(2, 3, 3, 7), (3, 3, 8, 10)]);
        let step = trace.iter().find(|s| s.key == (2, 4)).unwrap();
        assert_eq!(step.dominated_by, Some((3, 3)));
    }

    #[test]
    fn single_token_text() {
        let t = Text::from_letters(4, "A");
        let h = TableHash::new([((0, 1), 7)]);
        let p = monotonic_partitioning(&t, &h, 2, Mode::ActiveKeys).unwrap();
        assert_eq!(p.dump(), "4 3 7 1 1 1 1\n");
        assert!(monotonic_partitioning(&Text::new(0, vec![]), &h, 0, Mode::AllKeys).is_err());
    }

    #[test]
    fn icws_ties_keep_modes_equal() {
        // Binary TF makes every frequency of a token share one hash value,
        // the most tie-heavy case there is.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for tf in Tf::ALL {
            let scheme = WeightScheme::new(tf, Idf::Unary, None).unwrap();
            for s in 0..40u64 {
                let text = random_text(&mut rng, 0, 30, 3);
                let icws = IcwsHash::new(s);
                let h = WeightedHasher {
                    icws: &icws,
                    scheme: &scheme,
                };
                let all = monotonic_partitioning(&text, &h, 0, Mode::AllKeys).unwrap();
                let act = monotonic_partitioning(&text, &h, 0, Mode::ActiveKeys).unwrap();
                assert_eq!(all.sorted_windows(), act.sorted_windows(), "{tf} seed {s}");
                check_partition(&act, &grid(&text, &h, 512).unwrap()).unwrap();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn partition_valid_and_modes_agree(seed: u64, n in 1usize..50, alpha in 1u32..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let text = random_text(&mut rng, 0, n, alpha);
            let fam = HashFamily::sample(HashKind::Universal, 1, seed).unwrap();
            let scheme = WeightScheme::raw_count();
            let h = fam.bind(0, &scheme);
            let all = monotonic_partitioning(&text, &h, 0, Mode::AllKeys).unwrap();
            let act = monotonic_partitioning(&text, &h, 0, Mode::ActiveKeys).unwrap();
            prop_assert!(check_partition(&act, &grid(&text, &h, 512).unwrap()).is_ok());
            prop_assert_eq!(all.sorted_windows(), act.sorted_windows());
            prop_assert!(act.len() <= 2 * act.keys_visited);
        }

        #[test]
        fn active_keys_are_a_subset(seed: u64, n in 1usize..40, alpha in 1u32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let text = random_text(&mut rng, 0, n, alpha);
            let fam = HashFamily::sample(HashKind::Universal, 1, seed).unwrap();
            let scheme = WeightScheme::raw_count();
            let h = fam.bind(0, &scheme);
            let all: std::collections::HashSet<_> =
                generate_keys(&text, &h).iter().map(|k| (k.x, k.y)).collect();
            let counts = text.counts();
            let expect: u32 = counts.values().map(|f| f * (f - 1) / 2 + f).sum();
            prop_assert_eq!(all.len() as u32, expect);
            for k in generate_active_keys(&text, &h) {
                prop_assert!(all.contains(&(k.x, k.y)));
            }
        }
    }
}
