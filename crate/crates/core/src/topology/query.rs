use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::FlowNetwork;
use super::{HeuristicGraph, QueryError};
use crate::capture::ParticipantId;
use crate::intersection::{ActionPair, EdgeStatus, EdgeVerifier};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathResult {
    pub nodes: Vec<ParticipantId>,
    /// `edge_witnesses[i]` proves the edge `nodes[i] -> nodes[i + 1]`.
    pub edge_witnesses: Vec<ActionPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CutOutcome {
    Cut,
    /// The endpoints are joined by a verified direct edge, so no vertex set separates them.
    NoVertexCut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutResult {
    pub outcome: CutOutcome,
    pub cut_nodes: BTreeSet<ParticipantId>,
    /// Every flow path bounding the cut size was verified.
    pub certified: bool,
}

/// Per-query view of edge statuses, filled in on demand.
struct Lazy<'a> {
    graph: &'a HeuristicGraph,
    verifier: &'a dyn EdgeVerifier,
    at: Timestamp,
    known: HashMap<(ParticipantId, ParticipantId), EdgeStatus>,
}

impl<'a> Lazy<'a> {
    fn new(graph: &'a HeuristicGraph, verifier: &'a dyn EdgeVerifier, at: Timestamp) -> Self {
        let known = graph
            .edges
            .iter()
            .filter(|(_, s)| !matches!(s, EdgeStatus::Heuristic))
            .map(|(e, s)| (*e, s.clone()))
            .collect();
        Lazy {
            graph,
            verifier,
            at,
            known,
        }
    }

    fn live(&self, edge: (ParticipantId, ParticipantId)) -> bool {
        self.graph.has_edge(edge.0, edge.1) && !matches!(self.known.get(&edge), Some(EdgeStatus::Refuted))
    }

    fn verified(&self, edge: (ParticipantId, ParticipantId)) -> bool {
        matches!(self.known.get(&edge), Some(EdgeStatus::Verified(_)))
    }

    /// Verifies the not-yet-decided edges among `edges` in parallel; true when all hold.
    fn confirm(&mut self, edges: &[(ParticipantId, ParticipantId)]) -> Result<bool, QueryError> {
        let pending: Vec<_> = edges.iter().copied().filter(|e| !self.known.contains_key(e)).collect();
        let decided = pending
            .par_iter()
            .map(|&(u, v)| self.verifier.verify(u, v, self.at))
            .collect::<Result<Vec<_>, _>>()?;
        self.known.extend(pending.into_iter().zip(decided));
        Ok(edges.iter().all(|e| self.verified(*e)))
    }
}

fn require(g: &HeuristicGraph, v: ParticipantId) -> Result<(), QueryError> {
    if g.vertices.contains(&v) {
        Ok(())
    } else {
        Err(QueryError::UnknownVertex(v))
    }
}

/// Shortest verified path, verifying edges of candidate paths until one survives.
/// Ties between equally short paths go to the lexicographically smallest id sequence.
pub fn find_path(
    g: &HeuristicGraph,
    verifier: &dyn EdgeVerifier,
    src: ParticipantId,
    dst: ParticipantId,
    at: Timestamp,
) -> Result<Option<PathResult>, QueryError> {
    require(g, src)?;
    require(g, dst)?;
    let mut lazy = Lazy::new(g, verifier, at);
    loop {
        let Some(nodes) = shortest_live_path(&lazy, src, dst) else {
            return Ok(None);
        };
        let edges: Vec<_> = nodes.windows(2).map(|w| (w[0], w[1])).collect();
        // Edges are checked front to back so a refutation stops further work on this path.
        let mut intact = true;
        for edge in &edges {
            if !lazy.confirm(std::slice::from_ref(edge))? {
                intact = false;
                break;
            }
        }
        if intact {
            let edge_witnesses = edges
                .iter()
                .map(|e| match &lazy.known[e] {
                    EdgeStatus::Verified(w) => w.clone(),
                    _ => unreachable!("confirmed above"),
                })
                .collect();
            return Ok(Some(PathResult { nodes, edge_witnesses }));
        }
    }
}

fn shortest_live_path(lazy: &Lazy, src: ParticipantId, dst: ParticipantId) -> Option<Vec<ParticipantId>> {
    let mut parent: BTreeMap<ParticipantId, ParticipantId> = BTreeMap::new();
    let mut queue = VecDeque::from([src]);
    let mut seen = BTreeSet::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            let mut path = vec![dst];
            while let Some(&p) = parent.get(path.last().expect("non-empty")) {
                path.push(p);
            }
            path.reverse();
            return Some(path);
        }
        for v in lazy.graph.successors(u) {
            if lazy.live((u, v)) && seen.insert(v) {
                parent.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    None
}

#[derive(Clone, Copy)]
enum Sink {
    Vertex(usize),
    /// Every vertex reachable from the source drains into a virtual sink.
    AllReachable,
}

/// Minimum set of vertices, other than the endpoints, whose removal leaves no
/// verified path from `src` to `dst`.
pub fn min_cut_between(
    g: &HeuristicGraph,
    verifier: &dyn EdgeVerifier,
    src: ParticipantId,
    dst: ParticipantId,
    at: Timestamp,
) -> Result<CutResult, QueryError> {
    require(g, src)?;
    require(g, dst)?;
    if src == dst {
        return Err(QueryError::SameEndpoints(src));
    }
    lazy_cut(g, verifier, at, src, Some(dst), false)
}

/// Minimum vertex set whose removal stops `src` from reaching anyone.
pub fn isolate_source(
    g: &HeuristicGraph,
    verifier: &dyn EdgeVerifier,
    src: ParticipantId,
    at: Timestamp,
) -> Result<CutResult, QueryError> {
    require(g, src)?;
    lazy_cut(g, verifier, at, src, None, false)
}

/// Minimum vertex set whose removal stops anyone from reaching `dst`.
pub fn isolate_target(
    g: &HeuristicGraph,
    verifier: &dyn EdgeVerifier,
    dst: ParticipantId,
    at: Timestamp,
) -> Result<CutResult, QueryError> {
    require(g, dst)?;
    lazy_cut(g, verifier, at, dst, None, true)
}

/// Max-flow/min-cut on the vertex-split graph, refining away refuted edges
/// until the flow runs over verified edges only. With `reversed` the search
/// walks edges backwards (isolating a target).
fn lazy_cut(
    g: &HeuristicGraph,
    verifier: &dyn EdgeVerifier,
    at: Timestamp,
    source: ParticipantId,
    target: Option<ParticipantId>,
    reversed: bool,
) -> Result<CutResult, QueryError> {
    let vertices: Vec<ParticipantId> = g.vertices.iter().copied().collect();
    let index: HashMap<ParticipantId, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = vertices.len();
    // Orientation-aware view of a graph edge.
    let real = |u: usize, v: usize| {
        if reversed {
            (vertices[v], vertices[u])
        } else {
            (vertices[u], vertices[v])
        }
    };
    let s = index[&source];
    let sink = match target {
        Some(t) => Sink::Vertex(index[&t]),
        None => Sink::AllReachable,
    };
    let mut forward: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in g.edges.keys() {
        let (a, b) = if reversed { (v, u) } else { (u, v) };
        forward[index[&a]].push(index[&b]);
    }
    let mut lazy = Lazy::new(g, verifier, at);

    loop {
        if let Sink::Vertex(t) = sink {
            if lazy.live(real(s, t)) {
                if lazy.confirm(&[real(s, t)])? {
                    return Ok(CutResult {
                        outcome: CutOutcome::NoVertexCut,
                        cut_nodes: BTreeSet::new(),
                        certified: false,
                    });
                }
                continue;
            }
        }
        let big = n as u32 + 1;
        let virtual_sink = 2 * n;
        let mut net = FlowNetwork::new(2 * n + 1);
        for v in 0..n {
            let uncuttable = v == s || matches!(sink, Sink::Vertex(t) if t == v);
            net.add_arc(2 * v, 2 * v + 1, if uncuttable { big } else { 1 });
        }
        let mut handles = Vec::new();
        for u in 0..n {
            for &v in &forward[u] {
                if lazy.live(real(u, v)) {
                    handles.push(((u, v), net.add_arc(2 * u + 1, 2 * v, big)));
                }
            }
        }
        let sink_node = match sink {
            Sink::Vertex(t) => 2 * t,
            Sink::AllReachable => {
                let mut reach = vec![false; n];
                reach[s] = true;
                let mut stack = vec![s];
                while let Some(u) = stack.pop() {
                    for &v in &forward[u] {
                        if !reach[v] && lazy.live(real(u, v)) {
                            reach[v] = true;
                            stack.push(v);
                        }
                    }
                }
                for v in (0..n).filter(|&v| v != s && reach[v]) {
                    net.add_arc(2 * v + 1, virtual_sink, big);
                }
                virtual_sink
            }
        };
        net.max_flow(2 * s + 1, sink_node, big);
        let carrying: Vec<_> = handles
            .iter()
            .filter(|(_, h)| net.flow(*h, big) > 0)
            .map(|((u, v), _)| real(*u, *v))
            .collect();
        if !lazy.confirm(&carrying)? {
            continue;
        }
        let reach = net.residual_reachable(2 * s + 1);
        let cut_nodes = (0..n)
            .filter(|&v| reach[2 * v] && !reach[2 * v + 1])
            .map(|v| vertices[v])
            .collect();
        return Ok(CutResult {
            outcome: CutOutcome::Cut,
            cut_nodes,
            certified: true,
        });
    }
}
