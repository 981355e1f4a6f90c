//! A sorted dictionary that sorts lazily. Insertions are cheap because new
//! elements land in unsorted intervals; queries split the key space into
//! gaps and pay comparisons in proportion to how finely they divide it.

pub mod compare;
pub mod error;
pub mod gap_index;
pub mod interval;
pub mod oracle;
pub mod select;
pub mod stats;
pub mod tree;
mod union_find;

pub use compare::Comparator;
pub use error::{Error, Result};
pub use interval::{preview_split, SplitMode, SplitPreview};
pub use oracle::OracleDict;
pub use stats::{compute_b, multiselect_bound, uniform_bound, BoundReport};
pub use tree::{Answer, Config, Entry, GapView, Handle, LazySearchTree, Observation, Outcome, QueryKind, QueryResult, Stats};
