//! Heuristic participant graph and the lazily verified path and cut queries.

mod flow;
mod graph;
mod phases;
mod query;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::ParticipantId;
use crate::intersection::OracleError;

pub use graph::HeuristicGraph;
pub use phases::{
    build_bipartite, collapse_topics, heuristic_graph, project_participants, topic_relation, BipartiteGraph,
    ContractedGraph, ExactIntersection, FastFnmatch, TopicRelation,
};
pub use query::{find_path, isolate_source, isolate_target, min_cut_between, CutOutcome, CutResult, PathResult};

/// Relation used to merge topic patterns in phase two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TopicMatchMode {
    /// Patterns match each other's source text; fast but may miss overlaps.
    FastFnmatch,
    /// Pattern languages intersect.
    #[default]
    ExactIntersection,
}

impl fmt::Display for TopicMatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopicMatchMode::FastFnmatch => "fast",
            TopicMatchMode::ExactIntersection => "exact",
        })
    }
}

impl FromStr for TopicMatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fast" | "fast_fnmatch" => Ok(TopicMatchMode::FastFnmatch),
            "exact" | "exact_intersection" => Ok(TopicMatchMode::ExactIntersection),
            _ => Err(format!("unknown topic match mode {s:?} (expected fast or exact)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("participant {0} is not in the graph")]
    UnknownVertex(ParticipantId),
    #[error("source and target are both {0}")]
    SameEndpoints(ParticipantId),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
