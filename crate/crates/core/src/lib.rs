//! Near-duplicate text alignment with compact windows.
//!
//! Texts are partitioned, per min-hash function, into compact windows: sets of
//! subsequences `T[i, j]` with `a <= i <= b <= c <= j <= d` that share one
//! min-hash value. An inverted index over the windows answers "which
//! subsequences have estimated Jaccard similarity at least theta with this
//! query" by sweeping the windows that match the query's sketch.

pub mod corpus;
pub mod error;
pub mod hashing;
pub mod index;
pub mod oracle;
pub mod partition;
pub mod query;
pub mod weights;

pub use corpus::{Corpus, Scheme, Text, TokenId, TokenizerConfig, Vocabulary};
pub use error::{Error, Result};
pub use hashing::{HashFamily, HashKind, HashValue, MinHasher};
pub use index::{BuildStats, IndexConfig, InvertedIndex};
pub use partition::{monotonic_partitioning, CompactWindow, Mode, Partition};
pub use weights::{Idf, Tf, WeightScheme};
pub use query::{query, query_text, QueryResult, Rect};
