//! Glob expressions as used in permission documents, and the regular-language
//! algebra over them.
//!
//! [`GlobPattern`] parses and matches the `fnmatch` dialect directly;
//! [`PatternAutomaton`] is the compiled form that supports intersection,
//! difference, emptiness and shortest-witness extraction.

mod automaton;
mod pattern;

pub use automaton::PatternAutomaton;
pub use pattern::{
    fnmatch, two_way_match, Dialect, GlobPattern, PatternError, PatternErrorKind, DEFAULT_DIALECT,
};
