//! The augmented skyline: visited, mutually non-dominating keys plus the
//! guards `(0, 0)` and `(n + 1, n + 1)`.
//!
//! Keys are kept in coordinate order. For non-dominating keys x-order and
//! y-order coincide (and are strict), so one map per coordinate is enough to
//! binary-search either way.

use std::collections::BTreeMap;

/// Outcome of testing a key `(b, c)` against the skyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// Some member `(x, y)` has `[x, y]` inside `[b, c]`.
    Dominated { by: (u32, u32) },
    /// Not dominated. `lower` is the member with the largest `y < c`, `upper`
    /// the member with the smallest `x > b`.
    Clear {
        lower: (u32, u32),
        upper: (u32, u32),
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skyline {
    by_x: BTreeMap<u32, u32>,
    by_y: BTreeMap<u32, u32>,
}

impl Skyline {
    /// Guard-only skyline for a text of length `n`.
    pub fn new(n: u32) -> Self {
        let mut s = Skyline {
            by_x: BTreeMap::new(),
            by_y: BTreeMap::new(),
        };
        s.put(0, 0);
        s.put(n + 1, n + 1);
        s
    }

    fn put(&mut self, x: u32, y: u32) {
        self.by_x.insert(x, y);
        self.by_y.insert(y, x);
    }

    fn take(&mut self, x: u32, y: u32) {
        self.by_x.remove(&x);
        self.by_y.remove(&y);
    }

    /// Number of members, guards included.
    pub fn len(&self) -> usize {
        self.by_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_x.is_empty()
    }

    /// Members in coordinate order, guards included.
    pub fn keys(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.by_x.iter().map(|(&x, &y)| (x, y))
    }

    /// 1-based position of a member in coordinate order.
    pub fn index_of(&self, key: (u32, u32)) -> Option<usize> {
        if self.by_x.get(&key.0) != Some(&key.1) {
            return None;
        }
        Some(self.by_x.range(..key.0).count() + 1)
    }

    pub fn probe(&self, b: u32, c: u32) -> Probe {
        // the member with the largest y <= c is the only dominance candidate
        let (&y, &x) = self
            .by_y
            .range(..=c)
            .next_back()
            .expect("guard (0, 0) is always present");
        if x >= b && (x, y) != (b, c) {
            return Probe::Dominated { by: (x, y) };
        }
        let (&ly, &lx) = self
            .by_y
            .range(..c)
            .next_back()
            .expect("guard (0, 0) is always present");
        let (&ux, &uy) = self
            .by_x
            .range(b + 1..)
            .next()
            .expect("guard (n + 1, n + 1) is always present");
        Probe::Clear {
            lower: (lx, ly),
            upper: (ux, uy),
        }
    }

    /// The members `S[i], S[i + 1], ..., S[j]` from `lower` to `upper`.
    pub fn chain(&self, lower: (u32, u32), upper: (u32, u32)) -> Vec<(u32, u32)> {
        self.by_x
            .range(lower.0..=upper.0)
            .map(|(&x, &y)| (x, y))
            .collect()
    }

    /// Rectangles `[S[k].x + 1, b] x [c', S[k + 1].y - 1]` over the chain,
    /// with `c'` starting at `c` and moving to `S[k + 1].y`. Empty ones are
    /// skipped. Returned as `(a, b, c', d)`.
    pub fn staircase(chain: &[(u32, u32)], b: u32, c: u32) -> Vec<(u32, u32, u32, u32)> {
        let mut out = Vec::with_capacity(chain.len().saturating_sub(1));
        let mut c_cur = c;
        for pair in chain.windows(2) {
            let a = pair[0].0 + 1;
            let d = pair[1].1 - 1;
            if a <= b && c_cur <= d {
                out.push((a, b, c_cur, d));
            }
            c_cur = pair[1].1;
        }
        out
    }

    /// Removes the interior of `chain` and inserts `(b, c)`.
    pub fn insert(&mut self, chain: &[(u32, u32)], b: u32, c: u32) {
        if chain.len() > 2 {
            for &(x, y) in &chain[1..chain.len() - 1] {
                self.take(x, y);
            }
        }
        self.put(b, c);
    }

    /// Checks the structural invariants: strict coordinate order in both
    /// coordinates (hence no dominance) and the guards at the ends.
    pub fn is_valid(&self, n: u32) -> bool {
        let keys: Vec<_> = self.keys().collect();
        keys.first() == Some(&(0, 0))
            && keys.last() == Some(&(n + 1, n + 1))
            && keys.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
            && keys.iter().all(|&(x, y)| self.by_y.get(&y) == Some(&x))
            && self.by_y.len() == keys.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_keys(n: u32, keys: &[(u32, u32)]) -> Skyline {
        let mut s = Skyline::new(n);
        for &(x, y) in keys {
            s.put(x, y);
        }
        s
    }

    #[test]
    fn probe_running_example() {
        let s = from_keys(10, &[(1, 1), (2, 8)]);
        let Probe::Clear { lower, upper } = s.probe(3, 3) else {
            panic!("(3,3) should be clear")
        };
        assert_eq!(s.index_of(lower), Some(2));
        assert_eq!(s.index_of(upper), Some(4));
        let chain = s.chain(lower, upper);
        assert_eq!(
            Skyline::staircase(&chain, 3, 3),
            vec![(2, 3, 3, 7), (3, 3, 8, 10)]
        );
        let mut s = s;
        s.insert(&chain, 3, 3);
        assert_eq!(
            s.keys().collect::<Vec<_>>(),
            vec![(0, 0), (1, 1), (3, 3), (11, 11)]
        );
        assert_eq!(s.probe(2, 4), Probe::Dominated { by: (3, 3) });
    }

    #[test]
    fn guards_never_dominate() {
        let s = Skyline::new(5);
        for b in 1..=5 {
            for c in b..=5 {
                assert!(matches!(s.probe(b, c), Probe::Clear { .. }));
            }
        }
        let Probe::Clear { lower, upper } = s.probe(2, 4) else {
            unreachable!()
        };
        assert_eq!(Skyline::staircase(&s.chain(lower, upper), 2, 4), vec![(1, 2, 4, 5)]);
    }

    #[test]
    fn adjacent_insert_removes_nothing() {
        let mut s = from_keys(10, &[(2, 2), (6, 6)]);
        let Probe::Clear { lower, upper } = s.probe(4, 4) else {
            unreachable!()
        };
        assert_eq!((lower, upper), ((2, 2), (6, 6)));
        let chain = s.chain(lower, upper);
        s.insert(&chain, 4, 4);
        assert_eq!(s.len(), 5);
        assert!(s.is_valid(10));
    }

    #[test]
    fn first_rectangle_empty_when_next_y_equals_c() {
        let s = from_keys(10, &[(1, 4)]);
        let Probe::Clear { lower, upper } = s.probe(2, 4) else {
            unreachable!()
        };
        let chain = s.chain(lower, upper);
        assert_eq!(chain, vec![(0, 0), (1, 4), (11, 11)]);
        assert_eq!(Skyline::staircase(&chain, 2, 4), vec![(2, 2, 4, 10)]);
    }
}
