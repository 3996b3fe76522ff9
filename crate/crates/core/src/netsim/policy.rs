use rand::seq::IndexedRandom;
use rand::Rng;

use crate::glob::GlobPattern;
use crate::permissions::{Criteria, DataTag, DomainEntry, DomainSet, Grant, PermissionsFile, Qualifier, Rule, Validity};
use crate::time::Timestamp;

/// Shape of randomly generated permission files.
#[derive(Debug, Clone)]
pub struct PolicyShape {
    pub max_grants: usize,
    pub max_rules: usize,
    /// Characters drawn for topic and partition expressions.
    pub expression_alphabet: Vec<char>,
    pub max_expression_len: usize,
    /// Domain ids are drawn from `0..=max_domain`.
    pub max_domain: u32,
    pub tag_pool: Vec<DataTag>,
    pub partition_probability: f64,
    pub tag_probability: f64,
    /// Grants cover this instant unless drawn as expired.
    pub reference_time: Timestamp,
}

impl Default for PolicyShape {
    fn default() -> Self {
        PolicyShape {
            max_grants: 3,
            max_rules: 4,
            expression_alphabet: vec!['a', 'b', '/', '*', '?'],
            max_expression_len: 3,
            max_domain: 3,
            tag_pool: vec![DataTag::new("level", "high"), DataTag::new("zone", "b")],
            partition_probability: 0.3,
            tag_probability: 0.25,
            reference_time: Timestamp::from_unix(1_700_000_000),
        }
    }
}

/// Draws a valid permission file whose first grant belongs to `subject`.
pub fn random_permissions<R: Rng + ?Sized>(rng: &mut R, subject: &str, shape: &PolicyShape) -> PermissionsFile {
    let grant_count = rng.random_range(1..=shape.max_grants.max(1));
    let grants = (0..grant_count)
        .map(|i| {
            let subject_name = if i == 0 || rng.random_bool(0.5) {
                subject.to_owned()
            } else {
                format!("CN=other{i}")
            };
            let t = shape.reference_time.unix();
            let validity = if rng.random_bool(0.8) {
                Validity {
                    not_before: Timestamp::from_unix(t - 86_400),
                    not_after: Timestamp::from_unix(t + 86_400),
                }
            } else {
                Validity {
                    not_before: Timestamp::from_unix(t - 2 * 86_400),
                    not_after: Timestamp::from_unix(t - 86_400),
                }
            };
            let rules = (0..rng.random_range(0..=shape.max_rules))
                .map(|_| random_rule(rng, shape))
                .collect();
            let default = if rng.random_bool(0.25) { Qualifier::Allow } else { Qualifier::Deny };
            Grant {
                name: Some(format!("g{i}")),
                subject_name,
                validity,
                rules,
                default,
            }
        })
        .collect();
    PermissionsFile::new(grants).expect("generated permissions are valid")
}

fn random_rule<R: Rng + ?Sized>(rng: &mut R, shape: &PolicyShape) -> Rule {
    let qualifier = if rng.random_bool(0.6) { Qualifier::Allow } else { Qualifier::Deny };
    let mut rule = Rule::new(qualifier, random_domains(rng, shape.max_domain));
    let verbs = rng.random_range(1u8..8);
    if verbs & 1 != 0 {
        rule = rule.publish(random_criteria(rng, shape));
    }
    if verbs & 2 != 0 {
        rule = rule.subscribe(random_criteria(rng, shape));
    }
    if verbs & 4 != 0 && (verbs & 3 == 0 || rng.random_bool(0.3)) {
        rule = rule.relay(random_criteria(rng, shape));
    }
    rule
}

fn random_domains<R: Rng + ?Sized>(rng: &mut R, max_domain: u32) -> DomainSet {
    let entries = (0..rng.random_range(1..=2))
        .map(|_| {
            let a = rng.random_range(0..=max_domain);
            match rng.random_range(0..3) {
                0 => DomainEntry::Range {
                    min: a,
                    max: Some(rng.random_range(a..=max_domain)),
                },
                1 if rng.random_bool(0.3) => DomainEntry::Range { min: a, max: None },
                _ => DomainEntry::Id(a),
            }
        })
        .collect();
    DomainSet { entries }
}

fn random_expression<R: Rng + ?Sized>(rng: &mut R, shape: &PolicyShape) -> GlobPattern {
    loop {
        let len = rng.random_range(1..=shape.max_expression_len.max(1));
        let text: String = (0..len)
            .map(|_| *shape.expression_alphabet.choose(rng).expect("non-empty alphabet"))
            .collect();
        if let Ok(p) = GlobPattern::parse(&text) {
            return p;
        }
    }
}

fn random_criteria<R: Rng + ?Sized>(rng: &mut R, shape: &PolicyShape) -> Criteria {
    let topics = (0..rng.random_range(1..=2)).map(|_| random_expression(rng, shape)).collect();
    let partitions = if rng.random_bool(shape.partition_probability) {
        (0..rng.random_range(1..=2)).map(|_| random_expression(rng, shape)).collect()
    } else {
        Vec::new()
    };
    let data_tags = if !shape.tag_pool.is_empty() && rng.random_bool(shape.tag_probability) {
        vec![shape.tag_pool.choose(rng).expect("non-empty pool").clone()]
    } else {
        Vec::new()
    };
    Criteria {
        topics,
        partitions,
        data_tags,
    }
}
