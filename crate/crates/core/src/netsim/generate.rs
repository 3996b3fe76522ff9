use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{random_permissions, PolicyShape};
use super::{NetsimError, Scenario, ScenarioParticipant};
use crate::capture::Guid;
use crate::permissions::{Criteria, DomainSet, Grant, PermissionsFile, Qualifier, Rule, Validity};
use crate::time::Timestamp;

/// 2025-01-01T00:00:00Z.
pub const REFERENCE_TIME: Timestamp = Timestamp::from_unix(1_735_689_600);

const DAY: i64 = 86_400;

fn guid_prefix(rng: &mut ChaCha8Rng) -> [u8; 12] {
    let mut prefix = [0u8; 12];
    rng.fill_bytes(&mut prefix);
    prefix
}

/// One grant, valid from a year before to ten years after the reference time.
fn minimal_permissions(subject: &str, publish: &str, subscribe: &[String]) -> PermissionsFile {
    let mut rule = Rule::new(Qualifier::Allow, DomainSet::ids([0]))
        .publish(Criteria::topics(&[publish]).expect("literal topic"));
    if !subscribe.is_empty() {
        let topics: Vec<&str> = subscribe.iter().map(String::as_str).collect();
        rule = rule.subscribe(Criteria::topics(&topics).expect("literal topics"));
    }
    PermissionsFile::new(vec![Grant {
        name: Some(subject.trim_start_matches("CN=").replace('\\', "")),
        subject_name: subject.to_owned(),
        validity: Validity {
            not_before: REFERENCE_TIME.plus_seconds(-365 * DAY),
            not_after: REFERENCE_TIME.plus_seconds(3650 * DAY),
        },
        rules: vec![rule],
        default: Qualifier::Deny,
    }])
    .expect("generated permissions are valid")
}

/// Builds a scenario where participant `i` publishes `topics[i]` and
/// subscribes to the topics of its intended in-neighbours.
fn realize(
    kind: &str,
    seed: u64,
    labels: Vec<String>,
    subjects: Vec<String>,
    topics: Vec<String>,
    adjacency: &BTreeSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Scenario {
    let prefix = guid_prefix(rng);
    let ids: Vec<Guid> = (0..labels.len()).map(|i| Guid::from_parts(prefix, i as u32)).collect();
    let participants = (0..labels.len())
        .map(|i| {
            let subscribe: Vec<String> = adjacency
                .iter()
                .filter(|&&(_, v)| v == i)
                .map(|&(u, _)| topics[u].clone())
                .collect();
            ScenarioParticipant {
                id: ids[i],
                label: labels[i].clone(),
                permissions: minimal_permissions(&subjects[i], &topics[i], &subscribe),
            }
        })
        .collect();
    Scenario {
        kind: kind.to_owned(),
        seed,
        reference_time: REFERENCE_TIME,
        participants,
        intended_adjacency: adjacency.iter().map(|&(u, v)| (ids[u], ids[v])).collect(),
    }
}

/// Grid of `rows x cols` participants. Cell `(r, c)` publishes `cell/r/c`.
/// By default every cell subscribes to all four neighbours; with `directional`
/// each neighbouring pair is linked one way or both ways at random.
pub fn generate_grid(rows: usize, cols: usize, seed: u64, directional: bool) -> Result<Scenario, NetsimError> {
    if rows == 0 || cols == 0 {
        return Err(NetsimError::InvalidParameter(format!("grid dimensions must be positive, got {rows}x{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |r: usize, c: usize| r * cols + c;
    let mut adjacency = BTreeSet::new();
    for r in 0..rows {
        for c in 0..cols {
            for (nr, nc) in [(r, c + 1), (r + 1, c)] {
                if nr >= rows || nc >= cols {
                    continue;
                }
                let (a, b) = (idx(r, c), idx(nr, nc));
                let direction = if directional { rng.random_range(0..3) } else { 2 };
                if direction != 1 {
                    adjacency.insert((a, b));
                }
                if direction != 0 {
                    adjacency.insert((b, a));
                }
            }
        }
    }
    let cells: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    Ok(realize(
        if directional { "grid-directional" } else { "grid" },
        seed,
        cells.iter().map(|(r, c)| format!("{r},{c}")).collect(),
        cells.iter().map(|(r, c)| format!("CN={r}\\,{c}")).collect(),
        cells.iter().map(|(r, c)| format!("cell/{r}/{c}")).collect(),
        &adjacency,
        &mut rng,
    ))
}

/// `n` participants; each ordered pair is an intended flow with `edge_probability`.
pub fn generate_random(n: usize, edge_probability: f64, seed: u64) -> Result<Scenario, NetsimError> {
    if !(0.0..=1.0).contains(&edge_probability) {
        return Err(NetsimError::InvalidParameter(format!(
            "edge probability must lie in [0, 1], got {edge_probability}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency = BTreeSet::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(edge_probability) {
                adjacency.insert((u, v));
            }
        }
    }
    Ok(realize(
        "random",
        seed,
        (0..n).map(|i| format!("n{i}")).collect(),
        (0..n).map(|i| format!("CN=n{i}")).collect(),
        (0..n).map(|i| format!("node/{i}")).collect(),
        &adjacency,
        &mut rng,
    ))
}

/// `n` participants with independently drawn wildcard-heavy policies.
/// The intended adjacency is left empty: it is whatever the policies admit.
pub fn generate_policies(n: usize, shape: &PolicyShape, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix = guid_prefix(&mut rng);
    let participants = (0..n)
        .map(|i| ScenarioParticipant {
            id: Guid::from_parts(prefix, i as u32),
            label: format!("p{i}"),
            permissions: random_permissions(&mut rng, &format!("CN=p{i}"), shape),
        })
        .collect();
    Scenario {
        kind: "policy".into(),
        seed,
        reference_time: shape.reference_time,
        participants,
        intended_adjacency: BTreeSet::new(),
    }
}
