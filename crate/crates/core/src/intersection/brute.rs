use std::collections::BTreeSet;

use super::{ActionPair, Direction};
use crate::pdp::{evaluate, match_actions, PdpVariant};
use crate::permissions::{ActionRequest, DataTag, PermissionsFile, Qualifier, Verb};
use crate::time::Timestamp;

/// Exhaustive search for an action pair, for testing [`super::grant_intersection`].
///
/// Topics and partitions range over all strings of `alphabet` up to `max_len`
/// characters (shortest first); tag sets over all subsets of the tags declared
/// in either file; domain ids over one representative of every interval the
/// files' domain bounds carve out.
pub fn brute_force_intersection(
    perm_a: &PermissionsFile,
    perm_b: &PermissionsFile,
    at: Timestamp,
    direction: Direction,
    alphabet: &[char],
    max_len: usize,
) -> Option<ActionPair> {
    let (pub_file, sub_file) = direction.roles(perm_a, perm_b);
    let strings = enumerate_strings(alphabet, max_len);
    let domains = domain_representatives(&[pub_file, sub_file]);
    let tag_sets = tag_subsets(&[pub_file, sub_file]);

    let allowed = |file: &PermissionsFile, action: &ActionRequest| {
        evaluate(file, action, at, PdpVariant::Compliant).0 == Qualifier::Allow
    };
    for &domain_id in &domains {
        for tags in &tag_sets {
            for topic in &strings {
                for partition in &strings {
                    let publisher_action = ActionRequest {
                        subject_name: pub_file.subject_name().to_owned(),
                        domain_id,
                        verb: Verb::Publish,
                        topic: topic.clone(),
                        partition: partition.clone(),
                        data_tags: tags.clone(),
                    };
                    if !allowed(pub_file, &publisher_action) {
                        continue;
                    }
                    let subscriber_action = ActionRequest {
                        subject_name: sub_file.subject_name().to_owned(),
                        verb: Verb::Subscribe,
                        ..publisher_action.clone()
                    };
                    if allowed(sub_file, &subscriber_action)
                        && match_actions(&publisher_action, &subscriber_action)
                    {
                        return Some(ActionPair {
                            publisher_action,
                            subscriber_action,
                        });
                    }
                }
            }
        }
    }
    None
}

fn enumerate_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |c| {
                    let mut t = s.clone();
                    t.push(*c);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn domain_representatives(files: &[&PermissionsFile]) -> Vec<u32> {
    let mut points = BTreeSet::from([0u64]);
    for file in files {
        for grant in &file.grants {
            for rule in &grant.rules {
                for entry in &rule.domains.entries {
                    let (lo, hi) = entry.bounds();
                    points.insert(lo);
                    points.insert(hi);
                }
            }
        }
    }
    points
        .into_iter()
        .filter_map(|p| u32::try_from(p).ok())
        .collect()
}

fn tag_subsets(files: &[&PermissionsFile]) -> Vec<BTreeSet<DataTag>> {
    let declared: Vec<DataTag> = files
        .iter()
        .flat_map(|f| f.grants.iter())
        .flat_map(|g| g.rules.iter())
        .flat_map(|r| r.all_criteria())
        .flat_map(|(_, c)| c.data_tags.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(declared.len() <= 16, "too many declared tags for exhaustive search");
    let mut subsets: Vec<BTreeSet<DataTag>> = (0u32..1 << declared.len())
        .map(|mask| {
            declared
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, t)| t.clone())
                .collect()
        })
        .collect();
    subsets.sort_by_key(|s| s.len());
    subsets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strings_are_shortest_first() {
        let s = enumerate_strings(&['a', 'b'], 2);
        assert_eq!(s, ["", "a", "b", "aa", "ab", "ba", "bb"]);
    }
}
