//! Brute-force reference implementations used to check the engine.
//!
//! Nothing here touches the partitioner: grids are computed by enumerating
//! hash value sets directly, and queries by scoring every subsequence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use rand::Rng;

use crate::corpus::{counts_of, Text, TokenId};
use crate::error::{Error, Result};
use crate::hashing::{HashFamily, HashValue, MinHasher, TableHash};
use crate::partition::Partition;
use crate::weights::WeightScheme;

pub const DEFAULT_GRID_CAP: usize = 512;

/// Min-hash of every subsequence `T[i, j]`, `1 <= i <= j <= n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashGrid {
    pub n: u32,
    cells: Vec<HashValue>,
}

impl MinHashGrid {
    fn offset(n: u32, i: u32, j: u32) -> usize {
        // rows of lengths n, n-1, ..., stored back to back
        let (n, i, j) = (n as usize, i as usize, j as usize);
        (i - 1) * (2 * n - i + 2) / 2 + (j - i)
    }

    pub fn get(&self, i: u32, j: u32) -> HashValue {
        assert!(1 <= i && i <= j && j <= self.n, "cell ({i}, {j}) out of range");
        self.cells[Self::offset(self.n, i, j)]
    }
}

/// Enumerates `H(T[i, j])` for every subsequence and takes its minimum.
pub fn grid<H: MinHasher + ?Sized>(text: &Text, hasher: &H, cap: usize) -> Result<MinHashGrid> {
    let n = text.len();
    if n == 0 {
        return Err(Error::EmptyText);
    }
    if n > cap {
        return Err(Error::CapExceeded {
            what: "grid text length",
            size: n,
            cap,
        });
    }
    let mut cells = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        // H(T[i, j]) = H(T[i, j - 1]) plus the value for T[j]'s new count
        let mut counts: BTreeMap<TokenId, u32> = BTreeMap::new();
        let mut current: Option<HashValue> = None;
        for &t in &text.tokens[i..] {
            let x = counts.entry(t).or_insert(0);
            *x += 1;
            let h = hasher.hash(t, *x);
            current = Some(current.map_or(h, |c| c.min(h)));
            cells.push(current.expect("set above"));
        }
    }
    Ok(MinHashGrid {
        n: n as u32,
        cells,
    })
}

/// Multi-set Jaccard similarity as an exact fraction.
pub fn multiset_jaccard(a: &[TokenId], b: &[TokenId]) -> Ratio<u64> {
    let (ca, cb) = (counts_of(a), counts_of(b));
    let tokens: BTreeSet<TokenId> = ca.keys().chain(cb.keys()).copied().collect();
    let (mut num, mut den) = (0u64, 0u64);
    for t in tokens {
        let (x, y) = (
            ca.get(&t).copied().unwrap_or(0),
            cb.get(&t).copied().unwrap_or(0),
        );
        num += x.min(y) as u64;
        den += x.max(y) as u64;
    }
    if den == 0 {
        return Ratio::new(1, 1);
    }
    Ratio::new(num, den)
}

/// Weighted Jaccard similarity under `scheme`.
pub fn weighted_jaccard(a: &[TokenId], b: &[TokenId], scheme: &WeightScheme) -> f64 {
    let (ca, cb) = (counts_of(a), counts_of(b));
    let tokens: BTreeSet<TokenId> = ca.keys().chain(cb.keys()).copied().collect();
    let w = |c: &BTreeMap<TokenId, u32>, t: TokenId| {
        c.get(&t)
            .map_or(0.0, |&x| scheme.weight_or_unseen(t, x))
    };
    let (mut num, mut den) = (0.0, 0.0);
    for t in tokens {
        let (x, y) = (w(&ca, t), w(&cb, t));
        num += x.min(y);
        den += x.max(y);
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// A subsequence `T[i, j]` of text `text_id`.
pub type Span = (u32, u32, u32);

/// Every span whose estimated similarity reaches `theta`: at least one and at
/// least `k * theta` of the `k` functions give it the query's min-hash.
pub fn brute_force_query(
    texts: &[Text],
    query: &Text,
    theta: f64,
    family: &HashFamily,
    scheme: &WeightScheme,
    cap: usize,
) -> Result<BTreeSet<Span>> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let k = family.len();
    let q_counts = query.counts();
    let mut support: BTreeMap<Span, usize> = BTreeMap::new();
    for i in 0..k {
        let h = family.bind(i, scheme);
        let qv = h.min_hash(&q_counts).expect("query is non-empty");
        for text in texts {
            let g = grid(text, &h, cap)?;
            for a in 1..=g.n {
                for b in a..=g.n {
                    if g.get(a, b) == qv {
                        *support.entry((text.id, a, b)).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(support
        .into_iter()
        .filter(|&(_, m)| m >= 1 && m as f64 >= k as f64 * theta - 1e-9)
        .map(|(s, _)| s)
        .collect())
}

/// Every span whose exact multi-set Jaccard similarity with `query` is at
/// least `theta`.
pub fn exact_query(texts: &[Text], query: &Text, theta: f64) -> BTreeSet<Span> {
    let mut out = BTreeSet::new();
    for text in texts {
        let n = text.len();
        for i in 0..n {
            for j in i..n {
                let r = multiset_jaccard(&text.tokens[i..=j], &query.tokens);
                if *r.numer() as f64 >= theta * *r.denom() as f64 - 1e-12 {
                    out.insert((text.id, i as u32 + 1, j as u32 + 1));
                }
            }
        }
    }
    out
}

/// Blocks of `f` copies of fresh tokens; the last block is shorter when `f`
/// does not divide `n`.
pub fn hard_case_text(id: u32, n: usize, f: usize) -> Result<Text> {
    if f == 0 || n == 0 || f > n {
        return Err(Error::BadParams(format!(
            "hard case needs 1 <= f <= n, got n={n} f={f}"
        )));
    }
    Ok(Text::new(id, (0..n).map(|i| (i / f) as TokenId).collect()))
}

/// `n` tokens drawn uniformly from an alphabet of size `alphabet`.
pub fn random_text<R: Rng>(rng: &mut R, id: u32, n: usize, alphabet: u32) -> Text {
    Text::new(id, (0..n).map(|_| rng.random_range(0..alphabet)).collect())
}

/// The text `ABABAABBCC` and a hash table for the running example.
pub fn running_example() -> (Text, TableHash) {
    let (a, b, c) = (0, 1, 2);
    let table = TableHash::new([
        ((a, 1), 2),
        ((a, 2), 5),
        ((a, 3), 8),
        ((a, 4), 12),
        ((b, 1), 9),
        ((b, 2), 4),
        ((b, 3), 16),
        ((b, 4), 1),
        ((c, 1), 3),
        ((c, 2), 6),
    ]);
    (Text::from_letters(0, "ABABAABBCC"), table)
}

/// One table hash per ordering of `universe`; over this family the fraction
/// of functions with equal min-hash is exactly the multi-set Jaccard
/// similarity of any two texts whose hash sets lie in `universe`.
pub fn permutation_family(universe: &[(TokenId, u32)]) -> Result<HashFamily> {
    if universe.len() > 9 {
        return Err(Error::CapExceeded {
            what: "permutation universe",
            size: universe.len(),
            cap: 9,
        });
    }
    let mut perm: Vec<u64> = (0..universe.len() as u64).collect();
    let mut fns = Vec::new();
    loop {
        fns.push(TableHash::new(
            universe.iter().copied().zip(perm.iter().copied()),
        ));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(HashFamily::Table(fns))
}

fn next_permutation(v: &mut [u64]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Why a partition fails to match its grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    Uncovered { cell: (u32, u32) },
    Overlap { cell: (u32, u32) },
    WrongLabel {
        cell: (u32, u32),
        expected: HashValue,
        got: HashValue,
    },
    OutOfRange { window: (u32, u32, u32, u32) },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Uncovered { cell } => write!(f, "cell {cell:?} is not covered"),
            Defect::Overlap { cell } => write!(f, "cell {cell:?} is covered twice"),
            Defect::WrongLabel {
                cell,
                expected,
                got,
            } => write!(f, "cell {cell:?} has min-hash {expected:?}, window says {got:?}"),
            Defect::OutOfRange { window } => write!(f, "window {window:?} is malformed"),
        }
    }
}

/// Checks disjointness, coverage and labels cell by cell.
pub fn check_partition(p: &Partition, g: &MinHashGrid) -> std::result::Result<(), Defect> {
    let n = g.n;
    let mut seen = vec![false; (n as usize) * (n as usize + 1) / 2];
    for w in &p.windows {
        if !(1 <= w.a && w.a <= w.b && w.b <= w.c && w.c <= w.d && w.d <= n) {
            return Err(Defect::OutOfRange {
                window: (w.a, w.b, w.c, w.d),
            });
        }
        for i in w.a..=w.b {
            for j in w.c..=w.d {
                let o = MinHashGrid::offset(n, i, j);
                if seen[o] {
                    return Err(Defect::Overlap { cell: (i, j) });
                }
                seen[o] = true;
                let expected = g.get(i, j);
                if expected != w.v {
                    return Err(Defect::WrongLabel {
                        cell: (i, j),
                        expected,
                        got: w.v,
                    });
                }
            }
        }
    }
    for i in 1..=n {
        for j in i..=n {
            if !seen[MinHashGrid::offset(n, i, j)] {
                return Err(Defect::Uncovered { cell: (i, j) });
            }
        }
    }
    Ok(())
}
