//! Query processing: sketch the query, fetch the colliding windows and sweep
//! them for cells covered at least `tau` times.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Text, TokenId};
use crate::error::{Error, Result};
use crate::hashing::MinHasher;
use crate::index::InvertedIndex;
use crate::oracle::Span;
use crate::partition::CompactWindow;

/// Cells `[a, b] x [c, d]` of one text, each covered by at least
/// `support_min` colliding windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub text_id: u32,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub support_min: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        (self.b - self.a + 1) as u64 * (self.d - self.c + 1) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub k: usize,
    pub tau: u32,
    /// Disjoint rectangles per text id, sorted by `(a, c)`.
    pub rects: BTreeMap<u32, Vec<Rect>>,
}

impl QueryResult {
    pub fn is_empty(&self) -> bool {
        self.rects.values().all(|r| r.is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rect> {
        self.rects.values().flatten()
    }

    pub fn cell_count(&self) -> u64 {
        self.iter().map(Rect::area).sum()
    }

    /// Every reported `(text_id, i, j)`; refuses outputs above `cap` cells.
    pub fn cells(&self, cap: u64) -> Result<BTreeSet<Span>> {
        let total = self.cell_count();
        if total > cap {
            return Err(Error::CapExceeded {
                what: "query cell output",
                size: total as usize,
                cap: cap as usize,
            });
        }
        let mut out = BTreeSet::new();
        for r in self.iter() {
            for i in r.a..=r.b {
                for j in r.c..=r.d {
                    out.insert((r.text_id, i, j));
                }
            }
        }
        Ok(out)
    }
}

/// `max(1, ceil(k * theta))`, with a little slack so that products like
/// `0.5 * 16` are not pushed up by rounding.
pub fn support_threshold(k: usize, theta: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::BadParams(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(((k as f64 * theta - 1e-9).ceil() as u32).max(1))
}

/// Reports every cell covered by at least `tau` of `windows` (all from one
/// text) as disjoint rectangles.
///
/// Rows are cut into slabs at every `a` and `b + 1`; inside a slab the set of
/// windows is fixed, and a difference array over their `c` and `d + 1`
/// gives the column runs. Consecutive slabs with identical runs are merged.
pub fn plane_sweep(windows: &[CompactWindow], tau: u32) -> Vec<Rect> {
    let Some(first) = windows.first() else {
        return Vec::new();
    };
    let text_id = first.text_id;
    let tau = tau.max(1);
    let mut rows: Vec<u32> = windows.iter().flat_map(|w| [w.a, w.b + 1]).collect();
    rows.sort_unstable();
    rows.dedup();

    let mut by_start: Vec<&CompactWindow> = windows.iter().collect();
    by_start.sort_by_key(|w| w.a);
    let mut next = 0;
    let mut active: Vec<&CompactWindow> = Vec::new();

    let mut out: Vec<Rect> = Vec::new();
    // rectangles from the previous slab that may still grow downwards
    let mut open: Vec<Rect> = Vec::new();
    let mut open_end = 0u32;

    for s in 0..rows.len().saturating_sub(1) {
        let (top, bottom) = (rows[s], rows[s + 1] - 1);
        active.retain(|w| w.b >= top);
        while next < by_start.len() && by_start[next].a <= top {
            active.push(by_start[next]);
            next += 1;
        }

        let mut deltas: Vec<(u32, i32)> = Vec::with_capacity(active.len() * 2);
        for w in &active {
            deltas.push((w.c, 1));
            deltas.push((w.d + 1, -1));
        }
        deltas.sort_unstable();
        let mut runs: Vec<(u32, u32, u32)> = Vec::new();
        let mut count: i32 = 0;
        let mut run: Option<(u32, u32)> = None; // (start, min support)
        let mut idx = 0;
        while idx < deltas.len() {
            let col = deltas[idx].0;
            while idx < deltas.len() && deltas[idx].0 == col {
                count += deltas[idx].1;
                idx += 1;
            }
            if count as u32 >= tau && count > 0 {
                run = Some(match run {
                    Some((start, m)) => (start, m.min(count as u32)),
                    None => (col, count as u32),
                });
            } else if let Some((start, m)) = run.take() {
                runs.push((start, col - 1, m));
            }
        }

        let continues = open_end + 1 == top
            && open.len() == runs.len()
            && open.iter().zip(&runs).all(|(r, &(c, d, _))| r.c == c && r.d == d);
        if continues {
            for (r, &(_, _, m)) in open.iter_mut().zip(&runs) {
                r.b = bottom;
                r.support_min = r.support_min.min(m);
            }
        } else {
            out.append(&mut open);
            open = runs
                .iter()
                .map(|&(c, d, m)| Rect {
                    text_id,
                    a: top,
                    b: bottom,
                    c,
                    d,
                    support_min: m,
                })
                .collect();
        }
        open_end = bottom;
    }
    out.append(&mut open);
    out.sort_by_key(|r| (r.a, r.c));
    out
}

/// Finds every subsequence of the indexed texts whose estimated similarity
/// with `query` reaches `theta`.
pub fn query(index: &InvertedIndex, query: &Text, theta: f64) -> Result<QueryResult> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let k = index.k();
    let tau = support_threshold(k, theta)?;
    let counts = query.counts();
    let mut per_text: HashMap<u32, Vec<CompactWindow>> = HashMap::new();
    for i in 0..k {
        let h = index.family().bind(i, index.scheme());
        let v = h.min_hash(&counts).expect("query is non-empty");
        for w in index.lookup(i, &v) {
            per_text.entry(w.text_id).or_default().push(*w);
        }
    }
    let mut texts: Vec<(u32, Vec<CompactWindow>)> = per_text.into_iter().collect();
    texts.sort_by_key(|(id, _)| *id);
    let rects = texts
        .par_iter()
        .filter(|(_, ws)| ws.len() >= tau as usize)
        .map(|(id, ws)| (*id, plane_sweep(ws, tau)))
        .filter(|(_, r)| !r.is_empty())
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(QueryResult { k, tau, rects })
}

/// Maps query surfaces to the index's token ids. Surfaces the corpus never
/// saw get fresh ids past the vocabulary, distinct per surface.
pub fn encode_query(index: &InvertedIndex, raw: &str) -> Result<Text> {
    let surfaces = index.meta().tokenizer.tokenize(raw).map_err(|e| match e {
        Error::EmptyText => Error::EmptyQuery,
        other => other,
    })?;
    let vocab = index.vocabulary()?;
    let mut fresh: HashMap<&str, TokenId> = HashMap::new();
    let tokens = surfaces
        .iter()
        .map(|s| {
            vocab.get(s).unwrap_or_else(|| {
                let next = (vocab.len() + fresh.len()) as TokenId;
                *fresh.entry(s.as_str()).or_insert(next)
            })
        })
        .collect();
    Ok(Text::new(u32::MAX, tokens))
}

/// Tokenizes `raw` with the index's tokenizer and runs [`query`].
pub fn query_text(index: &InvertedIndex, raw: &str, theta: f64) -> Result<QueryResult> {
    query(index, &encode_query(index, raw)?, theta)
}

/// Per text, the longest reported subsequence `(i, j)`; ties go to the
/// smallest `i`, then the smallest `j`.
pub fn longest_match(result: &QueryResult) -> BTreeMap<u32, (u32, u32)> {
    let mut best: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    for r in result.iter() {
        // within a rectangle the longest cell is (a, d)
        let cand = (r.a, r.d);
        let better = |old: &(u32, u32)| {
            let (lo, lc) = (old.1 - old.0, cand.1 - cand.0);
            lc > lo || (lc == lo && cand < *old)
        };
        match best.get(&r.text_id) {
            Some(old) if !better(old) => {}
            _ => {
                best.insert(r.text_id, cand);
            }
        }
    }
    best
}
