use std::collections::BTreeSet;

use super::domains::DomainRanges;
use super::{ActionPair, Direction};
use crate::glob::PatternAutomaton;
use crate::pdp::{evaluate, PdpVariant};
use crate::permissions::{ActionRequest, DataTag, Grant, PermissionsFile, Qualifier, Verb};
use crate::time::Timestamp;

/// Strings the solver may use for topic and partition witnesses.
#[derive(Debug, Clone)]
pub struct Universe {
    topics: PatternAutomaton,
    partitions: PatternAutomaton,
}

impl Universe {
    /// All well-formed UTF-8 strings.
    pub fn utf8() -> Self {
        let utf8 = PatternAutomaton::utf8();
        Universe {
            topics: utf8.clone(),
            partitions: utf8,
        }
    }

    /// Strings over `alphabet` (ASCII) of length at most `max_len`.
    pub fn bounded(alphabet: &[u8], max_len: usize) -> Self {
        assert!(alphabet.is_ascii(), "bounded universes are ASCII-only");
        let b = PatternAutomaton::bounded(alphabet, max_len);
        Universe {
            topics: b.clone(),
            partitions: b,
        }
    }
}

impl Default for Universe {
    fn default() -> Self {
        Universe::utf8()
    }
}

/// Counters describing one solver run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub candidate_pairs: usize,
    pub boxes_explored: usize,
    pub refinements: usize,
    /// Deepest chain of refinements below one candidate pair.
    pub max_depth: usize,
}

#[derive(Debug, Clone)]
pub struct IntersectionOutcome {
    pub witness: Option<ActionPair>,
    pub stats: SolverStats,
}

/// The part of the action space one rule applies to, for one verb.
#[derive(Debug, Clone)]
struct Region {
    domains: DomainRanges,
    topics: PatternAutomaton,
    partitions: PatternAutomaton,
    tags: BTreeSet<DataTag>,
}

impl Region {
    fn universal() -> Self {
        Region {
            domains: DomainRanges::all(),
            topics: PatternAutomaton::universal(),
            partitions: PatternAutomaton::universal(),
            tags: BTreeSet::new(),
        }
    }
}

struct Side<'a> {
    subject: &'a str,
    file: &'a PermissionsFile,
    verb: Verb,
    /// Indexed by rule position; `None` when the rule has no criteria for `verb`.
    regions: Vec<Option<Region>>,
    /// Regions whose points evaluate to ALLOW unless shadowed by an earlier DENY rule.
    candidates: Vec<Region>,
}

impl<'a> Side<'a> {
    fn new(file: &'a PermissionsFile, verb: Verb, at: Timestamp) -> Option<Self> {
        let subject = file.subject_name();
        let (_, grant) = file.active_grant(subject, at)?;
        let regions: Vec<Option<Region>> = grant
            .rules
            .iter()
            .map(|rule| {
                rule.criteria(verb).map(|c| Region {
                    domains: DomainRanges::from_set(&rule.domains),
                    topics: PatternAutomaton::compile_any(&c.topics),
                    partitions: if c.partitions.is_empty() {
                        PatternAutomaton::literal(b"")
                    } else {
                        PatternAutomaton::compile_any(&c.partitions)
                    },
                    tags: c.data_tags.iter().cloned().collect(),
                })
            })
            .collect();
        let candidates = candidate_regions(grant, &regions);
        Some(Side {
            subject,
            file,
            verb,
            regions,
            candidates,
        })
    }

    fn action(&self, domain_id: u32, topic: &str, partition: &str, tags: &BTreeSet<DataTag>) -> ActionRequest {
        ActionRequest {
            subject_name: self.subject.to_owned(),
            domain_id,
            verb: self.verb,
            topic: topic.to_owned(),
            partition: partition.to_owned(),
            data_tags: tags.clone(),
        }
    }
}

fn candidate_regions(grant: &Grant, regions: &[Option<Region>]) -> Vec<Region> {
    let mut out: Vec<Region> = grant
        .rules
        .iter()
        .zip(regions)
        .filter(|(rule, _)| rule.qualifier == Qualifier::Allow)
        .filter_map(|(_, region)| region.clone())
        .collect();
    if grant.default == Qualifier::Allow {
        out.push(Region::universal());
    }
    out
}

struct Cell {
    domains: DomainRanges,
    topics: PatternAutomaton,
    partitions: PatternAutomaton,
    depth: usize,
}

impl Cell {
    fn is_empty(&self) -> bool {
        self.domains.is_empty() || self.topics.is_empty() || self.partitions.is_empty()
    }

    /// Partitions the points of this cell that `region` does not cover into three cells.
    fn split(self, region: &Region) -> [Cell; 3] {
        let depth = self.depth + 1;
        let inside_domains = self.domains.intersect(&region.domains);
        [
            Cell {
                domains: self.domains.difference(&region.domains),
                topics: self.topics.clone(),
                partitions: self.partitions.clone(),
                depth,
            },
            Cell {
                domains: inside_domains.clone(),
                topics: self.topics.difference(&region.topics),
                partitions: self.partitions.clone(),
                depth,
            },
            Cell {
                domains: inside_domains,
                topics: self.topics.intersect(&region.topics),
                partitions: self.partitions.difference(&region.partitions),
                depth,
            },
        ]
    }
}

/// Exact decision: is there a publish action allowed by one file and a
/// matching subscribe action allowed by the other, in the same domain?
pub fn grant_intersection(
    perm_a: &PermissionsFile,
    perm_b: &PermissionsFile,
    at: Timestamp,
    direction: Direction,
) -> Option<ActionPair> {
    grant_intersection_within(perm_a, perm_b, at, direction, &Universe::default()).witness
}

/// [`grant_intersection`] restricted to topic and partition strings drawn from `universe`.
pub fn grant_intersection_within(
    perm_a: &PermissionsFile,
    perm_b: &PermissionsFile,
    at: Timestamp,
    direction: Direction,
    universe: &Universe,
) -> IntersectionOutcome {
    let (pub_file, sub_file) = direction.roles(perm_a, perm_b);
    let mut stats = SolverStats::default();
    let (Some(publisher), Some(subscriber)) = (
        Side::new(pub_file, Verb::Publish, at),
        Side::new(sub_file, Verb::Subscribe, at),
    ) else {
        return IntersectionOutcome { witness: None, stats };
    };

    for p in &publisher.candidates {
        for s in &subscriber.candidates {
            stats.candidate_pairs += 1;
            let tags: BTreeSet<DataTag> = p.tags.union(&s.tags).cloned().collect();
            let root = Cell {
                domains: p.domains.intersect(&s.domains),
                topics: p.topics.intersect(&s.topics).intersect(&universe.topics),
                partitions: p.partitions.intersect(&s.partitions).intersect(&universe.partitions),
                depth: 0,
            };
            let mut stack = vec![root];
            while let Some(cell) = stack.pop() {
                if cell.is_empty() {
                    continue;
                }
                stats.boxes_explored += 1;
                stats.max_depth = stats.max_depth.max(cell.depth);
                let domain_id = cell.domains.min().expect("non-empty");
                let topic = witness_string(&cell.topics);
                let partition = witness_string(&cell.partitions);
                let pub_action = publisher.action(domain_id, &topic, &partition, &tags);
                let sub_action = subscriber.action(domain_id, &topic, &partition, &tags);

                let shadow = [(&publisher, &pub_action), (&subscriber, &sub_action)]
                    .into_iter()
                    .find_map(|(side, action)| {
                        let (q, trace) = evaluate(side.file, action, at, PdpVariant::Compliant);
                        (q != Qualifier::Allow).then(|| {
                            trace
                                .matched_rule_index
                                .and_then(|k| side.regions[k].as_ref())
                        })
                    });
                match shadow {
                    None => {
                        return IntersectionOutcome {
                            witness: Some(ActionPair {
                                publisher_action: pub_action,
                                subscriber_action: sub_action,
                            }),
                            stats,
                        };
                    }
                    Some(Some(region)) => {
                        stats.refinements += 1;
                        let [outside, topic_gap, partition_gap] = cell.split(region);
                        stack.extend([partition_gap, topic_gap, outside]);
                    }
                    // Denied without a matching rule cannot happen inside a candidate region.
                    Some(None) => debug_assert!(false, "denial without a shadowing rule"),
                }
            }
        }
    }
    IntersectionOutcome { witness: None, stats }
}

fn witness_string(a: &PatternAutomaton) -> String {
    String::from_utf8(a.readable_witness().expect("non-empty")).expect("universe is UTF-8")
}
