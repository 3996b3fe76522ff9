use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PermissionsError;
use crate::glob::GlobPattern;
use crate::time::Timestamp;

/// Outcome of a rule or grant. `Error` is only ever produced by evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Qualifier {
    Allow,
    Deny,
    Error,
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qualifier::Allow => "ALLOW",
            Qualifier::Deny => "DENY",
            Qualifier::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verb {
    Publish,
    Subscribe,
    Relay,
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verb::Publish => "PUBLISH",
            Verb::Subscribe => "SUBSCRIBE",
            Verb::Relay => "RELAY",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataTag {
    pub name: String,
    pub value: String,
}

impl DataTag {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        DataTag {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainEntry {
    Id(u32),
    /// Inclusive; an absent `max` is unbounded.
    Range { min: u32, max: Option<u32> },
}

impl DomainEntry {
    pub fn contains(&self, id: u32) -> bool {
        match *self {
            DomainEntry::Id(d) => d == id,
            DomainEntry::Range { min, max } => min <= id && max.is_none_or(|m| id <= m),
        }
    }

    /// Half-open bounds `[lo, hi)` over u64 so the unbounded case fits.
    pub fn bounds(&self) -> (u64, u64) {
        match *self {
            DomainEntry::Id(d) => (d as u64, d as u64 + 1),
            DomainEntry::Range { min, max } => (
                min as u64,
                max.map_or(u32::MAX as u64 + 1, |m| m as u64 + 1),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DomainSet {
    pub entries: Vec<DomainEntry>,
}

impl DomainSet {
    pub fn ids(ids: impl IntoIterator<Item = u32>) -> Self {
        DomainSet {
            entries: ids.into_iter().map(DomainEntry::Id).collect(),
        }
    }

    pub fn range(min: u32, max: u32) -> Self {
        DomainSet {
            entries: vec![DomainEntry::Range {
                min,
                max: Some(max),
            }],
        }
    }

    pub fn contains(&self, id: u32) -> bool {
        self.entries.iter().any(|e| e.contains(id))
    }
}

/// Conditions for one verb of a rule. Within a kind any listed expression may
/// match; every kind must match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Criteria {
    pub topics: Vec<GlobPattern>,
    /// Empty means only the default partition `""` is admitted.
    pub partitions: Vec<GlobPattern>,
    pub data_tags: Vec<DataTag>,
}

impl Criteria {
    pub fn topics(topics: &[&str]) -> Result<Self, PermissionsError> {
        Ok(Criteria {
            topics: parse_patterns(topics)?,
            partitions: Vec::new(),
            data_tags: Vec::new(),
        })
    }

    pub fn with_partitions(mut self, partitions: &[&str]) -> Result<Self, PermissionsError> {
        self.partitions = parse_patterns(partitions)?;
        Ok(self)
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = DataTag>) -> Self {
        self.data_tags = tags.into_iter().collect();
        self
    }
}

fn parse_patterns(sources: &[&str]) -> Result<Vec<GlobPattern>, PermissionsError> {
    sources
        .iter()
        .map(|s| {
            GlobPattern::parse(s).map_err(|source| PermissionsError::InvalidPattern {
                path: String::new(),
                offset: 0,
                source,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub qualifier: Qualifier,
    pub domains: DomainSet,
    pub publish: Option<Criteria>,
    pub subscribe: Option<Criteria>,
    pub relay: Option<Criteria>,
}

impl Rule {
    pub fn new(qualifier: Qualifier, domains: DomainSet) -> Self {
        Rule {
            qualifier,
            domains,
            publish: None,
            subscribe: None,
            relay: None,
        }
    }

    pub fn publish(mut self, criteria: Criteria) -> Self {
        self.publish = Some(criteria);
        self
    }

    pub fn subscribe(mut self, criteria: Criteria) -> Self {
        self.subscribe = Some(criteria);
        self
    }

    pub fn relay(mut self, criteria: Criteria) -> Self {
        self.relay = Some(criteria);
        self
    }

    pub fn criteria(&self, verb: Verb) -> Option<&Criteria> {
        match verb {
            Verb::Publish => self.publish.as_ref(),
            Verb::Subscribe => self.subscribe.as_ref(),
            Verb::Relay => self.relay.as_ref(),
        }
    }

    pub(crate) fn criteria_mut(&mut self) -> impl Iterator<Item = &mut Criteria> {
        [&mut self.publish, &mut self.subscribe, &mut self.relay]
            .into_iter()
            .flatten()
    }

    pub fn all_criteria(&self) -> impl Iterator<Item = (Verb, &Criteria)> {
        [
            (Verb::Publish, &self.publish),
            (Verb::Subscribe, &self.subscribe),
            (Verb::Relay, &self.relay),
        ]
        .into_iter()
        .filter_map(|(v, c)| c.as_ref().map(|c| (v, c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Validity {
    pub not_before: Timestamp,
    pub not_after: Timestamp,
}

impl Validity {
    /// Inclusive at both ends.
    pub fn covers(&self, at: Timestamp) -> bool {
        self.not_before <= at && at <= self.not_after
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grant {
    pub name: Option<String>,
    pub subject_name: String,
    pub validity: Validity,
    pub rules: Vec<Rule>,
    pub default: Qualifier,
}

/// A participant's signed capability list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermissionsFile {
    pub grants: Vec<Grant>,
    /// Set once expressions have been replaced by keyed digests.
    pub obfuscated: bool,
}

impl PermissionsFile {
    pub fn new(grants: Vec<Grant>) -> Result<Self, PermissionsError> {
        let file = PermissionsFile {
            grants,
            obfuscated: false,
        };
        file.validate()?;
        Ok(file)
    }

    /// Identity the document is issued to: the subject of its first grant.
    pub fn subject_name(&self) -> &str {
        &self.grants[0].subject_name
    }

    /// First grant issued to `subject` whose validity window covers `at`.
    pub fn active_grant(&self, subject: &str, at: Timestamp) -> Option<(usize, &Grant)> {
        self.grants
            .iter()
            .enumerate()
            .find(|(_, g)| g.subject_name == subject && g.validity.covers(at))
    }

    pub fn validate(&self) -> Result<(), PermissionsError> {
        let invalid = |what: String| Err(PermissionsError::Invariant(what));
        if self.grants.is_empty() {
            return invalid("permissions must contain at least one grant".into());
        }
        for (gi, grant) in self.grants.iter().enumerate() {
            if grant.subject_name.is_empty() {
                return invalid(format!("grant {gi}: empty subject_name"));
            }
            if grant.validity.not_before >= grant.validity.not_after {
                return invalid(format!("grant {gi}: not_before must precede not_after"));
            }
            if grant.default == Qualifier::Error {
                return invalid(format!("grant {gi}: default must be ALLOW or DENY"));
            }
            for (ri, rule) in grant.rules.iter().enumerate() {
                let at = format!("grant {gi} rule {ri}");
                if rule.qualifier == Qualifier::Error {
                    return invalid(format!("{at}: qualifier must be ALLOW or DENY"));
                }
                if rule.domains.entries.is_empty() {
                    return invalid(format!("{at}: empty domain set"));
                }
                for entry in &rule.domains.entries {
                    if let DomainEntry::Range { min, max: Some(max) } = entry {
                        if min > max {
                            return invalid(format!("{at}: empty domain range {min}..{max}"));
                        }
                    }
                }
                if rule.all_criteria().next().is_none() {
                    return invalid(format!("{at}: needs publish, subscribe or relay criteria"));
                }
                if rule.all_criteria().any(|(_, c)| c.topics.is_empty()) {
                    return invalid(format!("{at}: criteria without topics"));
                }
            }
        }
        Ok(())
    }

    /// Every expression appearing in the document, in document order.
    pub fn expressions(&self) -> impl Iterator<Item = &GlobPattern> {
        self.grants
            .iter()
            .flat_map(|g| &g.rules)
            .flat_map(|r| r.all_criteria())
            .flat_map(|(_, c)| c.topics.iter().chain(&c.partitions))
    }
}

/// One concrete access attempt checked against a permissions document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionRequest {
    pub subject_name: String,
    pub domain_id: u32,
    pub verb: Verb,
    pub topic: String,
    pub partition: String,
    pub data_tags: BTreeSet<DataTag>,
}

impl ActionRequest {
    pub fn new(subject_name: impl Into<String>, domain_id: u32, verb: Verb, topic: impl Into<String>) -> Self {
        ActionRequest {
            subject_name: subject_name.into(),
            domain_id,
            verb,
            topic: topic.into(),
            partition: String::new(),
            data_tags: BTreeSet::new(),
        }
    }

    pub fn in_partition(mut self, partition: impl Into<String>) -> Self {
        self.partition = partition.into();
        self
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = DataTag>) -> Self {
        self.data_tags = tags.into_iter().collect();
        self
    }
}
