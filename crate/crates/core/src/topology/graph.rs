use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TopicMatchMode;
use crate::capture::ParticipantId;
use crate::intersection::{EdgeStatus, EdgeVerifier, OracleError};
use crate::time::Timestamp;

/// Over-approximate participant connectivity; edge statuses start HEURISTIC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicGraph {
    pub vertices: BTreeSet<ParticipantId>,
    pub labels: BTreeMap<ParticipantId, String>,
    pub edges: BTreeMap<(ParticipantId, ParticipantId), EdgeStatus>,
    pub mode: TopicMatchMode,
}

impl HeuristicGraph {
    /// Graph over `vertices` with the given heuristic edges; self-edges are dropped.
    pub fn from_edges(
        vertices: impl IntoIterator<Item = ParticipantId>,
        edges: impl IntoIterator<Item = (ParticipantId, ParticipantId)>,
    ) -> Self {
        let vertices: BTreeSet<_> = vertices.into_iter().collect();
        let edges = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .inspect(|(u, v)| assert!(vertices.contains(u) && vertices.contains(v), "edge endpoint missing"))
            .map(|e| (e, EdgeStatus::Heuristic))
            .collect();
        HeuristicGraph {
            labels: vertices.iter().map(|v| (*v, v.to_string())).collect(),
            vertices,
            edges,
            mode: TopicMatchMode::ExactIntersection,
        }
    }

    pub fn has_edge(&self, from: ParticipantId, to: ParticipantId) -> bool {
        self.edges.contains_key(&(from, to))
    }

    pub fn successors(&self, v: ParticipantId) -> impl Iterator<Item = ParticipantId> + '_ {
        self.edges
            .range((v, ParticipantId::MIN)..=(v, ParticipantId::MAX))
            .map(|((_, to), _)| *to)
    }

    pub fn label(&self, v: ParticipantId) -> String {
        self.labels.get(&v).cloned().unwrap_or_else(|| v.to_string())
    }

    /// Replaces every edge status with the verifier's decision, checking edges in parallel.
    pub fn verify_all(&mut self, verifier: &dyn EdgeVerifier, at: Timestamp) -> Result<(), OracleError> {
        let keys: Vec<_> = self.edges.keys().copied().collect();
        let statuses = keys
            .par_iter()
            .map(|&(u, v)| verifier.verify(u, v, at))
            .collect::<Result<Vec<_>, _>>()?;
        for (key, status) in keys.into_iter().zip(statuses) {
            self.edges.insert(key, status);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&GraphDocument::from(self)).expect("graph serializes");
        text.push('\n');
        text
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph heuristic {\n  node [shape=box];\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{v}\" [label=\"{}\"];", dot_escape(&self.label(*v)));
        }
        for ((u, v), status) in &self.edges {
            let style = match status {
                EdgeStatus::Heuristic => "style=dashed".to_owned(),
                EdgeStatus::Verified(w) => format!("label=\"{}\"", dot_escape(&w.publisher_action.topic)),
                EdgeStatus::Refuted => "style=dotted, color=gray".to_owned(),
            };
            let _ = writeln!(out, "  \"{u}\" -> \"{v}\" [{style}];");
        }
        out.push_str("}\n");
        out
    }
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    mode: TopicMatchMode,
    vertices: Vec<VertexEntry>,
    edges: Vec<EdgeEntry>,
}

#[derive(Serialize, Deserialize)]
struct VertexEntry {
    id: ParticipantId,
    subject_name: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    from: ParticipantId,
    to: ParticipantId,
    #[serde(flatten)]
    status: EdgeStatus,
}

impl From<&HeuristicGraph> for GraphDocument {
    fn from(g: &HeuristicGraph) -> Self {
        GraphDocument {
            mode: g.mode,
            vertices: g
                .vertices
                .iter()
                .map(|v| VertexEntry {
                    id: *v,
                    subject_name: g.label(*v),
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|(&(from, to), status)| EdgeEntry {
                    from,
                    to,
                    status: status.clone(),
                })
                .collect(),
        }
    }
}

impl HeuristicGraph {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        Ok(HeuristicGraph {
            vertices: doc.vertices.iter().map(|v| v.id).collect(),
            labels: doc.vertices.into_iter().map(|v| (v.id, v.subject_name)).collect(),
            edges: doc.edges.into_iter().map(|e| ((e.from, e.to), e.status)).collect(),
            mode: doc.mode,
        })
    }
}
