use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{evaluate_with, EvaluationPolicy, PdpVariant};
use crate::glob::{GlobPattern, PatternAutomaton};
use crate::permissions::{ActionRequest, DataTag, DomainEntry, PermissionsFile, Qualifier, Verb};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialWitness {
    pub action: ActionRequest,
    pub compliant: Qualifier,
    pub variant_outcome: Qualifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DifferentialError {
    #[error("differential search needs a non-compliant variant")]
    CompliantVariant,
}

/// Searches for an action on which `variant` disagrees with the compliant PDP.
pub fn differential_witness(
    perm: &PermissionsFile,
    variant: PdpVariant,
    at: Timestamp,
    search_budget: usize,
) -> Result<Option<DifferentialWitness>, DifferentialError> {
    if variant == PdpVariant::Compliant {
        return Err(DifferentialError::CompliantVariant);
    }
    Ok(differential_search(perm, PdpVariant::Compliant, variant, at, search_budget))
}

/// Systematic search over actions assembled from the document's own
/// expressions, their shortest members, and wildcard-bearing probes. Returns
/// the first action on which `reference` and `candidate` disagree, evaluating
/// at most `budget` actions.
pub fn differential_search(
    perm: &PermissionsFile,
    reference: PdpVariant,
    candidate: PdpVariant,
    at: Timestamp,
    budget: usize,
) -> Option<DifferentialWitness> {
    let policy = EvaluationPolicy::default();
    let space = ProbeSpace::from_permissions(perm);
    let mut evaluated = 0usize;
    for subject in &space.subjects {
        for &domain_id in &space.domains {
            for verb in [Verb::Publish, Verb::Subscribe, Verb::Relay] {
                for topic in &space.topics {
                    for partition in &space.partitions {
                        for tags in &space.tag_sets {
                            if evaluated >= budget {
                                return None;
                            }
                            evaluated += 1;
                            let action = ActionRequest {
                                subject_name: subject.clone(),
                                domain_id,
                                verb,
                                topic: topic.clone(),
                                partition: partition.clone(),
                                data_tags: tags.clone(),
                            };
                            let expected = evaluate_with(reference.decision_point(), &policy, perm, &action, at).0;
                            let actual = evaluate_with(candidate.decision_point(), &policy, perm, &action, at).0;
                            if expected != actual {
                                return Some(DifferentialWitness {
                                    action,
                                    compliant: expected,
                                    variant_outcome: actual,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

struct ProbeSpace {
    subjects: Vec<String>,
    domains: Vec<u32>,
    topics: Vec<String>,
    partitions: Vec<String>,
    tag_sets: Vec<BTreeSet<DataTag>>,
}

impl ProbeSpace {
    fn from_permissions(perm: &PermissionsFile) -> Self {
        let mut subjects = Vec::new();
        let mut domains = Vec::new();
        let mut topics = Vec::new();
        let mut partitions = vec![String::new()];
        let mut tag_sets = vec![BTreeSet::new()];
        for grant in &perm.grants {
            push_unique(&mut subjects, grant.subject_name.clone());
            for rule in &grant.rules {
                for entry in &rule.domains.entries {
                    let id = match *entry {
                        DomainEntry::Id(id) => id,
                        DomainEntry::Range { min, .. } => min,
                    };
                    push_unique(&mut domains, id);
                }
                for (_, criteria) in rule.all_criteria() {
                    for t in &criteria.topics {
                        push_probes(&mut topics, t);
                    }
                    for p in &criteria.partitions {
                        push_probes(&mut partitions, p);
                    }
                    push_unique(&mut tag_sets, criteria.data_tags.iter().cloned().collect());
                }
            }
        }
        // Bare wildcards last: they only matter to implementations that treat values as patterns.
        for probe in ["*", "?"] {
            push_unique(&mut topics, probe.to_owned());
            push_unique(&mut partitions, probe.to_owned());
        }
        if domains.is_empty() {
            domains.push(0);
        }
        ProbeSpace {
            subjects,
            domains,
            topics,
            partitions,
            tag_sets,
        }
    }
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, item: T) {
    if !v.contains(&item) {
        v.push(item);
    }
}

fn push_probes(out: &mut Vec<String>, expression: &GlobPattern) {
    push_unique(out, expression.source().to_owned());
    if let Some(w) = PatternAutomaton::compile(expression)
        .intersect(&PatternAutomaton::utf8())
        .readable_witness()
    {
        push_unique(out, String::from_utf8(w).expect("restricted to UTF-8"));
    }
    // Keep the literal prefix and wildcard the rest.
    let source = expression.source();
    let prefix_len = source.find(['*', '?', '[', '\\']).unwrap_or(source.len());
    if prefix_len > 0 {
        let mut probe = source[..prefix_len.min(source.len() - 1)].to_owned();
        probe.push('*');
        push_unique(out, probe);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdp::evaluate;
    use crate::permissions::{Criteria, DomainSet, Grant, Rule, Validity};

    const T0: Timestamp = Timestamp::from_unix(500);

    fn file(rule: Rule) -> PermissionsFile {
        PermissionsFile::new(vec![Grant {
            name: None,
            subject_name: "CN=p".into(),
            validity: Validity {
                not_before: Timestamp::from_unix(0),
                not_after: Timestamp::from_unix(1_000),
            },
            rules: vec![rule],
            default: Qualifier::Deny,
        }])
        .unwrap()
    }

    fn recheck(perm: &PermissionsFile, variant: PdpVariant, w: &DifferentialWitness) {
        assert_eq!(evaluate(perm, &w.action, T0, PdpVariant::Compliant).0, w.compliant);
        assert_eq!(evaluate(perm, &w.action, T0, variant).0, w.variant_outcome);
        assert_ne!(w.compliant, w.variant_outcome);
    }

    #[test]
    fn finds_skipped_partition_check() {
        let perm = file(
            Rule::new(Qualifier::Allow, DomainSet::ids([0]))
                .publish(Criteria::topics(&["t"]).unwrap().with_partitions(&["secret"]).unwrap()),
        );
        let w = differential_witness(&perm, PdpVariant::SkipPartitionCheck, T0, 10_000)
            .unwrap()
            .unwrap();
        assert_eq!(w.action.partition, "");
        assert_eq!(w.action.topic, "t");
        assert_eq!((w.compliant, w.variant_outcome), (Qualifier::Deny, Qualifier::Allow));
        recheck(&perm, PdpVariant::SkipPartitionCheck, &w);
    }

    #[test]
    fn finds_swapped_arguments() {
        let perm = file(Rule::new(Qualifier::Allow, DomainSet::ids([0])).publish(Criteria::topics(&["data"]).unwrap()));
        let w = differential_witness(&perm, PdpVariant::SwappedFnmatchArgs, T0, 10_000)
            .unwrap()
            .unwrap();
        assert!(w.action.topic.contains('*'));
        assert_eq!((w.compliant, w.variant_outcome), (Qualifier::Deny, Qualifier::Allow));
        recheck(&perm, PdpVariant::SwappedFnmatchArgs, &w);
    }

    #[test]
    fn compliant_is_a_precondition_error() {
        let perm = file(Rule::new(Qualifier::Allow, DomainSet::ids([0])).publish(Criteria::topics(&["t"]).unwrap()));
        assert_eq!(
            differential_witness(&perm, PdpVariant::Compliant, T0, 10),
            Err(DifferentialError::CompliantVariant)
        );
        assert_eq!(differential_search(&perm, PdpVariant::Compliant, PdpVariant::Compliant, T0, 100_000), None);
    }

    #[test]
    fn budget_bounds_the_search() {
        let perm = file(Rule::new(Qualifier::Allow, DomainSet::ids([0])).publish(Criteria::topics(&["data"]).unwrap()));
        assert_eq!(differential_witness(&perm, PdpVariant::SwappedFnmatchArgs, T0, 1).unwrap(), None);
    }
}
