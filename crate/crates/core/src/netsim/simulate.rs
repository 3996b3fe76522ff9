use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::Scenario;
use crate::capture::ParticipantId;
use crate::glob::PatternAutomaton;
use crate::pdp::{evaluate, PdpVariant};
use crate::permissions::{ActionRequest, DomainEntry, Qualifier, Verb};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Delivery {
    pub origin: ParticipantId,
    pub receiver: ParticipantId,
    pub round: usize,
    /// Origin first, receiver last.
    pub lineage: Vec<ParticipantId>,
}

/// Earliest delivery for every (origin, receiver) pair that saw one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryReport {
    pub deliveries: BTreeSet<Delivery>,
    pub rounds_run: usize,
}

impl DeliveryReport {
    pub fn first_delivery(&self, origin: ParticipantId, receiver: ParticipantId) -> Option<&Delivery> {
        self.deliveries
            .iter()
            .find(|d| d.origin == origin && d.receiver == receiver)
    }

    /// Tab-separated lines: `rounds_run <n>`, then
    /// `delivery <origin> <receiver> <round> <lineage ids joined by '>'>`.
    pub fn to_lines(&self, label: impl Fn(ParticipantId) -> String) -> String {
        let mut out = format!("rounds_run\t{}\n", self.rounds_run);
        for d in &self.deliveries {
            let lineage: Vec<String> = d.lineage.iter().map(|id| label(*id)).collect();
            let _ = writeln!(
                out,
                "delivery\t{}\t{}\t{}\t{}",
                label(d.origin),
                label(d.receiver),
                d.round,
                lineage.join(">")
            );
        }
        out
    }
}

/// A (domain, topic) pair on which KeepAlives travel, in the default partition.
type Channel = (u32, String);

/// Topics named by the scenario's expressions: literals as written, and the
/// shortest matching string for each wildcard expression.
fn channels(s: &Scenario) -> BTreeSet<Channel> {
    let utf8 = PatternAutomaton::utf8();
    let mut domains = BTreeSet::new();
    let mut topics = BTreeSet::new();
    for p in &s.participants {
        for rule in p.permissions.grants.iter().flat_map(|g| &g.rules) {
            for entry in &rule.domains.entries {
                domains.insert(match *entry {
                    DomainEntry::Id(id) => id,
                    DomainEntry::Range { min, .. } => min,
                });
            }
            for (_, criteria) in rule.all_criteria() {
                for expr in &criteria.topics {
                    let topic = match expr.literal() {
                        Some(bytes) => String::from_utf8(bytes).ok(),
                        None => PatternAutomaton::compile(expr)
                            .intersect(&utf8)
                            .readable_witness()
                            .and_then(|w| String::from_utf8(w).ok()),
                    };
                    topics.extend(topic);
                }
            }
        }
    }
    if domains.is_empty() {
        domains.insert(0);
    }
    domains
        .iter()
        .flat_map(|d| topics.iter().map(move |t| (*d, t.clone())))
        .collect()
}

/// Synchronous KeepAlive propagation evaluated directly against each
/// participant's permissions.
///
/// In round `r` every live participant originates KeepAlive `(self, r)` on each
/// channel it may publish; messages sent in a round arrive in that round, and
/// a receiver relays each `(origin, seq)` once, in the next round, unless it
/// already appears in the lineage. Removed participants neither send nor receive.
pub fn simulate(s: &Scenario, removed: &BTreeSet<ParticipantId>, rounds: usize) -> DeliveryReport {
    let at = s.reference_time;
    let live: Vec<usize> = (0..s.participants.len())
        .filter(|&i| !removed.contains(&s.participants[i].id))
        .collect();
    let allowed = |i: usize, verb: Verb, (domain, topic): &Channel| {
        let p = &s.participants[i];
        let action = ActionRequest::new(p.permissions.subject_name(), *domain, verb, topic.clone());
        evaluate(&p.permissions, &action, at, PdpVariant::Compliant).0 == Qualifier::Allow
    };
    let all_channels = channels(s);
    let mut publishes: BTreeMap<usize, Vec<&Channel>> = BTreeMap::new();
    let mut subscribers: BTreeMap<&Channel, Vec<usize>> = BTreeMap::new();
    for &i in &live {
        for c in &all_channels {
            if allowed(i, Verb::Publish, c) {
                publishes.entry(i).or_default().push(c);
            }
            if allowed(i, Verb::Subscribe, c) {
                subscribers.entry(c).or_default().push(i);
            }
        }
    }

    // (origin, seq) -> participants that already relayed it.
    let mut relayed: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    let mut first: BTreeMap<(usize, usize), Delivery> = BTreeMap::new();
    // Messages to send this round: (sender, origin, seq, lineage as indices).
    let mut outbox: Vec<(usize, usize, usize, Vec<usize>)> = Vec::new();
    for round in 1..=rounds {
        for &i in &live {
            outbox.push((i, i, round, vec![i]));
        }
        let mut next = Vec::new();
        for (sender, origin, seq, lineage) in outbox.drain(..) {
            let mut receivers = BTreeSet::new();
            for c in publishes.get(&sender).into_iter().flatten() {
                receivers.extend(subscribers.get(c).into_iter().flatten().copied());
            }
            for r in receivers {
                if lineage.contains(&r) {
                    continue;
                }
                let mut path = lineage.clone();
                path.push(r);
                first.entry((origin, r)).or_insert_with(|| Delivery {
                    origin: s.participants[origin].id,
                    receiver: s.participants[r].id,
                    round,
                    lineage: path.iter().map(|&k| s.participants[k].id).collect(),
                });
                if relayed.entry((origin, seq)).or_default().insert(r) {
                    next.push((r, origin, seq, path));
                }
            }
        }
        outbox = next;
    }
    DeliveryReport {
        deliveries: first.into_values().collect(),
        rounds_run: rounds,
    }
}
