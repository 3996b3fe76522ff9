#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};

use ddsrecon::capture::{Guid, ParticipantId};
use ddsrecon::intersection::{ActionPair, EdgeStatus, EdgeVerifier, OracleError};
use ddsrecon::permissions::{ActionRequest, Verb};
use ddsrecon::time::Timestamp;
use ddsrecon::topology::HeuristicGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vertex(i: usize) -> ParticipantId {
    Guid::from_parts([0xaa; 12], i as u32)
}

/// Verifier backed by a fixed set of true edges.
pub struct ExactEdges {
    pub edges: BTreeSet<(ParticipantId, ParticipantId)>,
    calls: AtomicUsize,
}

impl ExactEdges {
    pub fn new(edges: BTreeSet<(ParticipantId, ParticipantId)>) -> Self {
        ExactEdges {
            edges,
            calls: AtomicUsize::new(0),
        }
    }
}

impl EdgeVerifier for ExactEdges {
    fn verify(&self, from: ParticipantId, to: ParticipantId, _at: Timestamp) -> Result<EdgeStatus, OracleError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(if self.edges.contains(&(from, to)) {
            EdgeStatus::Verified(ActionPair {
                publisher_action: ActionRequest::new(from.to_string(), 0, Verb::Publish, "t"),
                subscriber_action: ActionRequest::new(to.to_string(), 0, Verb::Subscribe, "t"),
            })
        } else {
            EdgeStatus::Refuted
        })
    }

    fn solver_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Vertices reachable from `src` without entering `removed`.
pub fn reachable(
    edges: &BTreeSet<(ParticipantId, ParticipantId)>,
    src: ParticipantId,
    removed: &BTreeSet<ParticipantId>,
) -> BTreeSet<ParticipantId> {
    let mut seen = BTreeSet::from([src]);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &(a, b) in edges {
            if a == u && !removed.contains(&b) && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    seen
}

pub fn hop_distance(
    edges: &BTreeSet<(ParticipantId, ParticipantId)>,
    src: ParticipantId,
    dst: ParticipantId,
) -> Option<usize> {
    let mut frontier = BTreeSet::from([src]);
    let mut seen = frontier.clone();
    for d in 0.. {
        if frontier.contains(&dst) {
            return Some(d);
        }
        let next: BTreeSet<_> = edges
            .iter()
            .filter(|(a, b)| frontier.contains(a) && !seen.contains(b))
            .map(|&(_, b)| b)
            .collect();
        if next.is_empty() {
            return None;
        }
        seen.extend(&next);
        frontier = next;
    }
    unreachable!()
}

/// Smallest vertex subsets drawn from `candidates`, in increasing size, until `separates` holds.
pub fn smallest_separator(
    candidates: &[ParticipantId],
    separates: impl Fn(&BTreeSet<ParticipantId>) -> bool,
) -> Option<usize> {
    let n = candidates.len();
    let mut best: Option<usize> = None;
    for mask in 0u32..1 << n {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let removed: BTreeSet<_> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| candidates[i]).collect();
        if separates(&removed) {
            best = Some(size);
        }
    }
    best
}

/// Random heuristic graph on 2..=10 vertices whose true edges are a random
/// subset of the heuristic ones.
pub fn random_case(seed: u64) -> (HeuristicGraph, ExactEdges, BTreeSet<(Guid, Guid)>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=10);
    let p_heur = rng.random_range(0.1..0.6);
    let mut heuristic = Vec::new();
    let mut truth = BTreeSet::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p_heur) {
                heuristic.push((u, v));
                if rng.random_bool(0.7) {
                    truth.insert((vertex(u), vertex(v)));
                }
            }
        }
    }
    let g = HeuristicGraph::from_edges((0..n).map(vertex), heuristic.iter().map(|&(a, b)| (vertex(a), vertex(b))));
    (g, ExactEdges::new(truth.clone()), truth, n)
}
