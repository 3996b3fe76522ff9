use std::collections::BTreeSet;
use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;

use super::NetsimError;
use crate::capture::{Guid, ParticipantId};
use crate::permissions::{parse_permissions, serialize_permissions, PermissionsFile};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioParticipant {
    pub id: ParticipantId,
    /// Grid coordinate `r,c` or a generated name; never contains whitespace.
    pub label: String,
    pub permissions: PermissionsFile,
}

/// A synthetic deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub kind: String,
    pub seed: u64,
    /// Instant at which every generated grant is valid.
    pub reference_time: Timestamp,
    pub participants: Vec<ScenarioParticipant>,
    /// Directed flows the generator meant to permit; empty when not known by construction.
    pub intended_adjacency: BTreeSet<(ParticipantId, ParticipantId)>,
}

const HEADER: &str = "ddsrecon-scenario 1";

impl Scenario {
    pub fn participant(&self, id: ParticipantId) -> Option<&ScenarioParticipant> {
        self.participants.iter().find(|p| p.id == id)
    }

    pub fn by_label(&self, label: &str) -> Option<&ScenarioParticipant> {
        self.participants.iter().find(|p| p.label == label)
    }

    /// Line-oriented text form; permissions are embedded as base64 canonical XML.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "reference_time {}", self.reference_time);
        for p in &self.participants {
            let doc = STANDARD.encode(serialize_permissions(&p.permissions));
            let _ = writeln!(out, "participant {} {} {doc}", p.id, p.label);
        }
        for (u, v) in &self.intended_adjacency {
            let _ = writeln!(out, "edge {u} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NetsimError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let bad = |line: usize, message: String| NetsimError::Format { line, message };
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(bad(1, format!("expected {HEADER:?}"))),
        }
        let mut kind = None;
        let mut seed = None;
        let mut reference_time = None;
        let mut participants: Vec<ScenarioParticipant> = Vec::new();
        let mut intended_adjacency = BTreeSet::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let guid = |s: &str| s.parse::<Guid>().map_err(|e| bad(n, e.to_string()));
            match fields.as_slice() {
                [] => {}
                ["kind", k] => kind = Some(k.to_string()),
                ["seed", s] => seed = Some(s.parse().map_err(|_| bad(n, format!("bad seed {s:?}")))?),
                ["reference_time", t] => {
                    reference_time = Some(t.parse().map_err(|e: crate::time::TimestampError| bad(n, e.to_string()))?)
                }
                ["participant", id, label, doc] => {
                    let bytes = STANDARD.decode(doc).map_err(|e| bad(n, e.to_string()))?;
                    let permissions = parse_permissions(&bytes).map_err(|e| bad(n, e.to_string()))?;
                    let id = guid(id)?;
                    if participants.iter().any(|p| p.id == id) {
                        return Err(bad(n, format!("duplicate participant {id}")));
                    }
                    participants.push(ScenarioParticipant {
                        id,
                        label: label.to_string(),
                        permissions,
                    });
                }
                ["edge", u, v] => {
                    intended_adjacency.insert((guid(u)?, guid(v)?));
                }
                _ => return Err(bad(n, format!("unrecognized line {line:?}"))),
            }
        }
        let missing = |what: &str| bad(0, format!("missing {what} line"));
        let scenario = Scenario {
            kind: kind.ok_or_else(|| missing("kind"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            reference_time: reference_time.ok_or_else(|| missing("reference_time"))?,
            participants,
            intended_adjacency,
        };
        for (u, v) in &scenario.intended_adjacency {
            if scenario.participant(*u).is_none() || scenario.participant(*v).is_none() {
                return Err(bad(0, format!("edge {u} {v} names an unknown participant")));
            }
        }
        Ok(scenario)
    }
}
