//! Policy decision point: the default access-control evaluation logic plus
//! emulations of known vendor deviations, selectable by name.

mod differential;
mod variants;

use serde::{Deserialize, Serialize};

pub use differential::{differential_search, differential_witness, DifferentialError, DifferentialWitness};
pub use variants::{registry, Compliant, DecisionPoint, PdpVariant, SkipPartitionCheck, SwappedFnmatchArgs, UnknownVariant};

use crate::permissions::{obfuscate_action, ActionRequest, Criteria, PermissionsFile, Qualifier, Verb};
use crate::time::Timestamp;

/// How a criteria list with no `<partitions>` element treats the action's partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EmptyPartitions {
    /// Only the default partition `""` matches.
    #[default]
    DefaultOnly,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TagMatching {
    /// Every tag listed in the criteria must be present on the action.
    #[default]
    Subset,
    /// The action's tag set must equal the listed tags.
    Exact,
}

/// Knobs for behaviour the access-control logic leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvaluationPolicy {
    pub empty_partitions: EmptyPartitions,
    pub tag_matching: TagMatching,
    /// When the first applicable grant has no matching rule, keep scanning later
    /// applicable grants before falling back to the first grant's default.
    pub grant_fallthrough: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Topics,
    Partitions,
    Tags,
}

/// Why a single rule did or did not apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub grant_index: usize,
    pub rule_index: usize,
    pub domain_matched: bool,
    pub has_criteria: bool,
    /// First criterion kind that rejected the action, if any.
    pub failed: Option<CriterionKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationTrace {
    pub matched_grant_index: Option<usize>,
    pub matched_rule_index: Option<usize>,
    /// Last criterion kind checked by the matching rule.
    pub matched_criterion_kind: Option<CriterionKind>,
    pub outcome: Qualifier,
    pub rule_checks: Vec<RuleCheck>,
}

/// Evaluates `action` against `perm` at instant `at` using the named variant.
pub fn evaluate(
    perm: &PermissionsFile,
    action: &ActionRequest,
    at: Timestamp,
    variant: PdpVariant,
) -> (Qualifier, EvaluationTrace) {
    evaluate_with(variant.decision_point(), &EvaluationPolicy::default(), perm, action, at)
}

/// Evaluates an action against an obfuscated document by digesting the
/// action's fields with the same key first.
pub fn evaluate_obfuscated(
    perm: &PermissionsFile,
    action: &ActionRequest,
    key: &[u8],
    at: Timestamp,
    variant: PdpVariant,
) -> (Qualifier, EvaluationTrace) {
    if perm.obfuscated {
        evaluate(perm, &obfuscate_action(action, key), at, variant)
    } else {
        evaluate(perm, action, at, variant)
    }
}

pub fn evaluate_with(
    dp: &dyn DecisionPoint,
    policy: &EvaluationPolicy,
    perm: &PermissionsFile,
    action: &ActionRequest,
    at: Timestamp,
) -> (Qualifier, EvaluationTrace) {
    let mut trace = EvaluationTrace {
        matched_grant_index: None,
        matched_rule_index: None,
        matched_criterion_kind: None,
        outcome: Qualifier::Error,
        rule_checks: Vec::new(),
    };
    let mut first_default = None;
    for (gi, grant) in perm.grants.iter().enumerate() {
        if grant.subject_name != action.subject_name || !grant.validity.covers(at) {
            continue;
        }
        if first_default.is_none() {
            first_default = Some((gi, grant.default));
        }
        for (ri, rule) in grant.rules.iter().enumerate() {
            let domain_matched = rule.domains.contains(action.domain_id);
            let criteria = rule.criteria(action.verb);
            let check = criteria.map(|c| check_criteria(dp, policy, c, action));
            trace.rule_checks.push(RuleCheck {
                grant_index: gi,
                rule_index: ri,
                domain_matched,
                has_criteria: criteria.is_some(),
                failed: check.and_then(Result::err),
            });
            if let (true, Some(Ok(last_kind))) = (domain_matched, check) {
                trace.matched_grant_index = Some(gi);
                trace.matched_rule_index = Some(ri);
                trace.matched_criterion_kind = Some(last_kind);
                trace.outcome = rule.qualifier;
                return (rule.qualifier, trace);
            }
        }
        if !policy.grant_fallthrough {
            break;
        }
    }
    if let Some((gi, default)) = first_default {
        trace.matched_grant_index = Some(gi);
        trace.outcome = default;
    }
    (trace.outcome, trace)
}

// Ok(last kind checked) when every present criterion kind matches.
fn check_criteria(
    dp: &dyn DecisionPoint,
    policy: &EvaluationPolicy,
    criteria: &Criteria,
    action: &ActionRequest,
) -> Result<CriterionKind, CriterionKind> {
    if !criteria.topics.iter().any(|t| dp.expression_matches(t, &action.topic)) {
        return Err(CriterionKind::Topics);
    }
    let mut last = CriterionKind::Topics;
    if dp.checks_partitions() {
        let ok = if criteria.partitions.is_empty() {
            policy.empty_partitions == EmptyPartitions::Any || action.partition.is_empty()
        } else {
            criteria
                .partitions
                .iter()
                .any(|p| dp.expression_matches(p, &action.partition))
        };
        if !ok {
            return Err(CriterionKind::Partitions);
        }
        last = CriterionKind::Partitions;
    }
    if !criteria.data_tags.is_empty() || policy.tag_matching == TagMatching::Exact {
        let ok = match policy.tag_matching {
            TagMatching::Subset => criteria.data_tags.iter().all(|t| action.data_tags.contains(t)),
            TagMatching::Exact => {
                criteria.data_tags.len() == action.data_tags.len()
                    && criteria.data_tags.iter().all(|t| action.data_tags.contains(t))
            }
        };
        if !ok {
            return Err(CriterionKind::Tags);
        }
        last = CriterionKind::Tags;
    }
    Ok(last)
}

/// A publisher action and a subscriber action that would connect.
pub fn match_actions(publisher: &ActionRequest, subscriber: &ActionRequest) -> bool {
    publisher.verb == Verb::Publish
        && subscriber.verb == Verb::Subscribe
        && publisher.topic == subscriber.topic
        && publisher.partition == subscriber.partition
        && publisher.data_tags == subscriber.data_tags
}

/// [`match_actions`] in either orientation.
pub fn actions_connect(a: &ActionRequest, b: &ActionRequest) -> bool {
    match_actions(a, b) || match_actions(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permissions::{DataTag, DomainSet, Grant, Rule, Validity};

    const T0: Timestamp = Timestamp::from_unix(1_000);

    fn file(rules: Vec<Rule>, default: Qualifier) -> PermissionsFile {
        PermissionsFile::new(vec![Grant {
            name: None,
            subject_name: "CN=a".into(),
            validity: Validity {
                not_before: Timestamp::from_unix(0),
                not_after: Timestamp::from_unix(10_000),
            },
            rules,
            default,
        }])
        .unwrap()
    }

    fn publish(topic: &str) -> ActionRequest {
        ActionRequest::new("CN=a", 0, Verb::Publish, topic)
    }

    fn allow_pub(topics: &[&str]) -> Rule {
        Rule::new(Qualifier::Allow, DomainSet::ids([0])).publish(Criteria::topics(topics).unwrap())
    }

    fn deny_pub(topics: &[&str]) -> Rule {
        Rule::new(Qualifier::Deny, DomainSet::ids([0])).publish(Criteria::topics(topics).unwrap())
    }

    #[test]
    fn lone_allow_rule() {
        let perm = file(vec![allow_pub(&["t"])], Qualifier::Deny);
        let (q, trace) = evaluate(&perm, &publish("t"), T0, PdpVariant::Compliant);
        assert_eq!(q, Qualifier::Allow);
        assert_eq!(trace.matched_grant_index, Some(0));
        assert_eq!(trace.matched_rule_index, Some(0));
        assert_eq!(trace.matched_criterion_kind, Some(CriterionKind::Partitions));
    }

    #[test]
    fn first_matching_rule_wins() {
        let perm = file(vec![deny_pub(&["foo/*"]), allow_pub(&["*"])], Qualifier::Allow);
        let (q, trace) = evaluate(&perm, &publish("foo/x"), T0, PdpVariant::Compliant);
        assert_eq!(q, Qualifier::Deny);
        assert_eq!(trace.matched_rule_index, Some(0));
        assert_eq!(evaluate(&perm, &publish("bar"), T0, PdpVariant::Compliant).0, Qualifier::Allow);
    }

    #[test]
    fn outside_validity_is_error() {
        let perm = file(vec![allow_pub(&["t"])], Qualifier::Allow);
        let (q, trace) = evaluate(&perm, &publish("t"), Timestamp::from_unix(20_000), PdpVariant::Compliant);
        assert_eq!(q, Qualifier::Error);
        assert_eq!(trace.matched_grant_index, None);
        let wrong_subject = ActionRequest::new("CN=b", 0, Verb::Publish, "t");
        assert_eq!(evaluate(&perm, &wrong_subject, T0, PdpVariant::Compliant).0, Qualifier::Error);
    }

    #[test]
    fn falls_through_to_default() {
        let perm = file(vec![allow_pub(&["t"])], Qualifier::Deny);
        let (q, trace) = evaluate(&perm, &publish("u"), T0, PdpVariant::Compliant);
        assert_eq!(q, Qualifier::Deny);
        assert_eq!(trace.matched_grant_index, Some(0));
        assert_eq!(trace.matched_rule_index, None);
        assert_eq!(trace.rule_checks[0].failed, Some(CriterionKind::Topics));
        // Wrong domain and wrong verb also fall through.
        let other_domain = ActionRequest::new("CN=a", 1, Verb::Publish, "t");
        assert_eq!(evaluate(&perm, &other_domain, T0, PdpVariant::Compliant).0, Qualifier::Deny);
        let sub = ActionRequest::new("CN=a", 0, Verb::Subscribe, "t");
        assert_eq!(evaluate(&perm, &sub, T0, PdpVariant::Compliant).0, Qualifier::Deny);
    }

    #[test]
    fn partitions_and_tags() {
        let rule = Rule::new(Qualifier::Allow, DomainSet::ids([0])).publish(
            Criteria::topics(&["t"])
                .unwrap()
                .with_partitions(&["p*"])
                .unwrap()
                .with_tags([DataTag::new("k", "v")]),
        );
        let perm = file(vec![rule], Qualifier::Deny);
        let base = publish("t").in_partition("p1");
        assert_eq!(evaluate(&perm, &base, T0, PdpVariant::Compliant).0, Qualifier::Deny);
        let tagged = base.clone().with_tags([DataTag::new("k", "v"), DataTag::new("x", "y")]);
        assert_eq!(evaluate(&perm, &tagged, T0, PdpVariant::Compliant).0, Qualifier::Allow);
        let exact = EvaluationPolicy {
            tag_matching: TagMatching::Exact,
            ..Default::default()
        };
        assert_eq!(evaluate_with(&Compliant, &exact, &perm, &tagged, T0).0, Qualifier::Deny);
        let wrong_partition = publish("t").in_partition("q").with_tags([DataTag::new("k", "v")]);
        let (q, trace) = evaluate(&perm, &wrong_partition, T0, PdpVariant::Compliant);
        assert_eq!(q, Qualifier::Deny);
        assert_eq!(trace.rule_checks[0].failed, Some(CriterionKind::Partitions));
    }

    #[test]
    fn empty_partition_list_admits_only_default_partition() {
        let perm = file(vec![allow_pub(&["t"])], Qualifier::Deny);
        assert_eq!(evaluate(&perm, &publish("t").in_partition("p"), T0, PdpVariant::Compliant).0, Qualifier::Deny);
        let any = EvaluationPolicy {
            empty_partitions: EmptyPartitions::Any,
            ..Default::default()
        };
        assert_eq!(
            evaluate_with(&Compliant, &any, &perm, &publish("t").in_partition("p"), T0).0,
            Qualifier::Allow
        );
    }

    #[test]
    fn first_applicable_grant_is_final_unless_fallthrough() {
        let validity = Validity {
            not_before: Timestamp::from_unix(0),
            not_after: Timestamp::from_unix(10_000),
        };
        let grant = |rules, default| Grant {
            name: None,
            subject_name: "CN=a".into(),
            validity,
            rules,
            default,
        };
        let perm = PermissionsFile::new(vec![
            grant(vec![allow_pub(&["x"])], Qualifier::Deny),
            grant(vec![allow_pub(&["t"])], Qualifier::Deny),
        ])
        .unwrap();
        assert_eq!(evaluate(&perm, &publish("t"), T0, PdpVariant::Compliant).0, Qualifier::Deny);
        let fall = EvaluationPolicy {
            grant_fallthrough: true,
            ..Default::default()
        };
        let (q, trace) = evaluate_with(&Compliant, &fall, &perm, &publish("t"), T0);
        assert_eq!(q, Qualifier::Allow);
        assert_eq!(trace.matched_grant_index, Some(1));
    }

    #[test]
    fn variants_diverge_where_expected() {
        let perm = file(vec![allow_pub(&["data"])], Qualifier::Deny);
        let probe = publish("*");
        assert_eq!(evaluate(&perm, &probe, T0, PdpVariant::Compliant).0, Qualifier::Deny);
        assert_eq!(evaluate(&perm, &probe, T0, PdpVariant::SwappedFnmatchArgs).0, Qualifier::Allow);

        let rule = Rule::new(Qualifier::Allow, DomainSet::ids([0]))
            .publish(Criteria::topics(&["t"]).unwrap().with_partitions(&["secret"]).unwrap());
        let perm = file(vec![rule], Qualifier::Deny);
        assert_eq!(evaluate(&perm, &publish("t"), T0, PdpVariant::Compliant).0, Qualifier::Deny);
        assert_eq!(evaluate(&perm, &publish("t"), T0, PdpVariant::SkipPartitionCheck).0, Qualifier::Allow);
    }

    #[test]
    fn matching_actions() {
        let p = ActionRequest::new("CN=a", 0, Verb::Publish, "t");
        let s = ActionRequest::new("CN=b", 0, Verb::Subscribe, "t");
        assert!(match_actions(&p, &s));
        assert!(!match_actions(&s, &p));
        assert!(actions_connect(&s, &p));
        assert!(!match_actions(&p, &s.clone().in_partition("p")));
        assert!(!match_actions(&p, &p));
        assert!(!match_actions(&p, &s.clone().with_tags([DataTag::new("k", "v")])));
    }
}
