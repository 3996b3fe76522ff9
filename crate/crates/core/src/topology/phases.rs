use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{HeuristicGraph, TopicMatchMode};
use crate::capture::{ParticipantDatabase, ParticipantId};
use crate::glob::{two_way_match, GlobPattern, PatternAutomaton};
use crate::intersection::EdgeStatus;
use crate::permissions::{Qualifier, Verb};

/// Participants on one side, distinct topic expressions on the other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    pub participants: Vec<ParticipantId>,
    pub labels: BTreeMap<ParticipantId, String>,
    pub topic_patterns: Vec<GlobPattern>,
    /// (participant index, pattern index): the participant may publish matching topics.
    pub publish_edges: BTreeSet<(usize, usize)>,
    /// (pattern index, participant index): the participant may subscribe to matching topics.
    pub subscribe_edges: BTreeSet<(usize, usize)>,
}

/// Topic patterns merged into components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractedGraph {
    pub participants: Vec<ParticipantId>,
    pub labels: BTreeMap<ParticipantId, String>,
    pub topic_components: Vec<Vec<GlobPattern>>,
    pub publish_edges: BTreeSet<(usize, usize)>,
    pub subscribe_edges: BTreeSet<(usize, usize)>,
}

/// Phase one. Default-ALLOW grants are represented by the pattern `*`.
pub fn build_bipartite(db: &ParticipantDatabase) -> BipartiteGraph {
    let participants: Vec<ParticipantId> = db.ids().collect();
    let labels = db.participants().map(|p| (p.guid, p.subject_name.clone())).collect();
    let mut patterns: BTreeMap<GlobPattern, usize> = BTreeMap::new();
    let mut order: Vec<GlobPattern> = Vec::new();
    let mut publish_edges = BTreeSet::new();
    let mut subscribe_edges = BTreeSet::new();
    let everything = GlobPattern::parse("*").expect("valid pattern");

    for (pi, participant) in db.participants().enumerate() {
        let mut link = |pattern: &GlobPattern, publish: bool, subscribe: bool| {
            let vi = *patterns.entry(pattern.clone()).or_insert_with(|| {
                order.push(pattern.clone());
                order.len() - 1
            });
            if publish {
                publish_edges.insert((pi, vi));
            }
            if subscribe {
                subscribe_edges.insert((vi, pi));
            }
        };
        for grant in &participant.permissions.grants {
            for rule in grant.rules.iter().filter(|r| r.qualifier == Qualifier::Allow) {
                for (verb, criteria) in rule.all_criteria() {
                    let (publish, subscribe) = match verb {
                        Verb::Publish => (true, false),
                        Verb::Subscribe => (false, true),
                        Verb::Relay => (true, true),
                    };
                    for topic in &criteria.topics {
                        link(topic, publish, subscribe);
                    }
                }
            }
            if grant.default == Qualifier::Allow {
                link(&everything, true, true);
            }
        }
    }
    BipartiteGraph {
        participants,
        labels,
        topic_patterns: order,
        publish_edges,
        subscribe_edges,
    }
}

/// When two topic patterns count as "the same" topic vertex.
pub trait TopicRelation: Send + Sync {
    fn mode(&self) -> TopicMatchMode;
    fn related(&self, a: &GlobPattern, b: &GlobPattern) -> bool;
}

/// Either pattern matches the other's source text.
pub struct FastFnmatch;

impl TopicRelation for FastFnmatch {
    fn mode(&self) -> TopicMatchMode {
        TopicMatchMode::FastFnmatch
    }

    fn related(&self, a: &GlobPattern, b: &GlobPattern) -> bool {
        two_way_match(a, b)
    }
}

/// The two patterns share at least one matching string.
pub struct ExactIntersection;

impl TopicRelation for ExactIntersection {
    fn mode(&self) -> TopicMatchMode {
        TopicMatchMode::ExactIntersection
    }

    fn related(&self, a: &GlobPattern, b: &GlobPattern) -> bool {
        match (a.literal(), b.literal()) {
            (Some(x), Some(y)) => x == y,
            (Some(x), None) => b.matches_bytes(&x),
            (None, Some(y)) => a.matches_bytes(&y),
            (None, None) => !PatternAutomaton::compile(a)
                .intersect(&PatternAutomaton::compile(b))
                .is_empty(),
        }
    }
}

static RELATIONS: [&dyn TopicRelation; 2] = [&FastFnmatch, &ExactIntersection];

pub fn topic_relation(mode: TopicMatchMode) -> &'static dyn TopicRelation {
    *RELATIONS
        .iter()
        .find(|r| r.mode() == mode)
        .expect("every mode is registered")
}

/// Phase two: union related patterns into components.
pub fn collapse_topics(g: &BipartiteGraph, mode: TopicMatchMode) -> ContractedGraph {
    let relation = topic_relation(mode);
    let n = g.topic_patterns.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if find(&mut parent, i) != find(&mut parent, j)
                && relation.related(&g.topic_patterns[i], &g.topic_patterns[j])
            {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    // Components numbered by their smallest member index.
    let mut component_of = vec![0usize; n];
    let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
    let mut topic_components: Vec<Vec<GlobPattern>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let c = *roots.entry(root).or_insert_with(|| {
            topic_components.push(Vec::new());
            topic_components.len() - 1
        });
        topic_components[c].push(g.topic_patterns[i].clone());
        component_of[i] = c;
    }
    ContractedGraph {
        participants: g.participants.clone(),
        labels: g.labels.clone(),
        topic_components,
        publish_edges: g.publish_edges.iter().map(|&(p, v)| (p, component_of[v])).collect(),
        subscribe_edges: g.subscribe_edges.iter().map(|&(v, p)| (component_of[v], p)).collect(),
    }
}

/// Phase three: participant u reaches v when some component links them.
pub fn project_participants(g: &ContractedGraph, mode: TopicMatchMode) -> HeuristicGraph {
    let mut subscribers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(c, p) in &g.subscribe_edges {
        subscribers.entry(c).or_default().push(p);
    }
    let mut edges = BTreeMap::new();
    for &(u, c) in &g.publish_edges {
        for &v in subscribers.get(&c).into_iter().flatten() {
            if u != v {
                edges.insert((g.participants[u], g.participants[v]), EdgeStatus::Heuristic);
            }
        }
    }
    HeuristicGraph {
        vertices: g.participants.iter().copied().collect(),
        labels: g.labels.clone(),
        edges,
        mode,
    }
}

/// All three phases.
pub fn heuristic_graph(db: &ParticipantDatabase, mode: TopicMatchMode) -> HeuristicGraph {
    project_participants(&collapse_topics(&build_bipartite(db), mode), mode)
}
