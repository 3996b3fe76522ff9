use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CaptureError, CaptureRecord, Guid};
use crate::permissions::{parse_permissions, serialize_permissions, PermissionsFile};
use crate::time::Timestamp;

pub type ParticipantId = Guid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub guid: Guid,
    pub subject_name: String,
    #[serde(with = "canonical_xml")]
    pub permissions: PermissionsFile,
    pub endpoints: BTreeSet<String>,
    pub first_seen: Timestamp,
    pub last_seen: Timestamp,
    /// Earliest observation of the retained document.
    pub document_seen: Timestamp,
}

impl Participant {
    fn document_key(&self) -> (Timestamp, String, Vec<u8>) {
        (
            self.document_seen,
            self.subject_name.clone(),
            serialize_permissions(&self.permissions),
        )
    }

    /// Common name from the subject, with escapes removed.
    pub fn common_name(&self) -> Option<String> {
        common_name(&self.subject_name)
    }
}

/// A permissions document seen for a guid that already has a different one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anomaly {
    pub guid: Guid,
    pub subject_name: String,
    /// Canonical XML of the document that was not retained.
    pub rejected_document: String,
}

/// Participants keyed by guid, accumulated over any number of captures.
///
/// When one guid presents several documents the earliest observed one is
/// retained (ties broken by subject, then canonical XML) and the others are
/// reported as anomalies, so the result does not depend on load order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParticipantDatabase {
    participants: BTreeMap<Guid, Participant>,
    anomalies: BTreeSet<Anomaly>,
}

#[derive(Serialize, Deserialize)]
struct DatabaseFile {
    participants: Vec<Participant>,
    anomalies: Vec<Anomaly>,
}

impl ParticipantDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn get(&self, id: &ParticipantId) -> Option<&Participant> {
        self.participants.get(id)
    }

    /// Participants in guid order.
    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.participants.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParticipantId> + '_ {
        self.participants.keys().copied()
    }

    pub fn anomalies(&self) -> impl Iterator<Item = &Anomaly> {
        self.anomalies.iter()
    }

    /// Merges `records`; either all are applied or, on error, none.
    /// Returns anomalies not previously reported.
    pub fn load(&mut self, records: &[CaptureRecord]) -> Result<Vec<Anomaly>, CaptureError> {
        let parsed = records
            .iter()
            .enumerate()
            .map(|(index, r)| {
                parse_permissions(&r.permissions_document)
                    .map(|p| (r, p))
                    .map_err(|source| CaptureError::Permissions {
                        index,
                        guid: r.participant_guid,
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut fresh = Vec::new();
        for (record, permissions) in parsed {
            let incoming = Participant {
                guid: record.participant_guid,
                subject_name: record.subject_name.clone(),
                permissions,
                endpoints: BTreeSet::from([record.source_address.clone()]),
                first_seen: record.timestamp,
                last_seen: record.timestamp,
                document_seen: record.timestamp,
            };
            let guid = incoming.guid;
            if let Some(anomaly) = self.merge(incoming) {
                if self.anomalies.insert(anomaly.clone()) {
                    fresh.push(anomaly);
                }
                // The retained document may have been rejected by an earlier load.
                let kept = &self.participants[&guid];
                let kept = Anomaly {
                    guid,
                    subject_name: kept.subject_name.clone(),
                    rejected_document: String::from_utf8(serialize_permissions(&kept.permissions))
                        .expect("serializer emits UTF-8"),
                };
                self.anomalies.remove(&kept);
                fresh.retain(|a| *a != kept);
            }
        }
        Ok(fresh)
    }

    fn merge(&mut self, incoming: Participant) -> Option<Anomaly> {
        let Some(existing) = self.participants.get_mut(&incoming.guid) else {
            self.participants.insert(incoming.guid, incoming);
            return None;
        };
        existing.endpoints.extend(incoming.endpoints.iter().cloned());
        existing.first_seen = existing.first_seen.min(incoming.first_seen);
        existing.last_seen = existing.last_seen.max(incoming.last_seen);
        let same_document =
            existing.subject_name == incoming.subject_name && existing.permissions == incoming.permissions;
        if same_document {
            existing.document_seen = existing.document_seen.min(incoming.document_seen);
            return None;
        }
        let (kept_key, incoming_key) = (existing.document_key(), incoming.document_key());
        let rejected = if incoming_key < kept_key {
            let rejected = Anomaly {
                guid: existing.guid,
                subject_name: std::mem::replace(&mut existing.subject_name, incoming.subject_name),
                rejected_document: String::from_utf8(kept_key.2).expect("serializer emits UTF-8"),
            };
            existing.permissions = incoming.permissions;
            existing.document_seen = incoming.document_seen;
            rejected
        } else {
            Anomaly {
                guid: incoming.guid,
                subject_name: incoming.subject_name,
                rejected_document: String::from_utf8(incoming_key.2).expect("serializer emits UTF-8"),
            }
        };
        Some(rejected)
    }

    /// Resolves a guid, an exact subject name, or an unescaped common name.
    pub fn resolve(&self, identifier: &str) -> Result<ParticipantId, CaptureError> {
        if let Ok(guid) = identifier.parse::<Guid>() {
            if self.participants.contains_key(&guid) {
                return Ok(guid);
            }
        }
        let by_subject: Vec<_> = self
            .participants()
            .filter(|p| p.subject_name == identifier)
            .map(|p| p.guid)
            .collect();
        let candidates = if by_subject.is_empty() {
            self.participants()
                .filter(|p| p.common_name().as_deref() == Some(identifier))
                .map(|p| p.guid)
                .collect()
        } else {
            by_subject
        };
        match candidates.as_slice() {
            [one] => Ok(*one),
            [] => Err(CaptureError::UnknownParticipant(identifier.to_owned())),
            _ => Err(CaptureError::AmbiguousParticipant(identifier.to_owned())),
        }
    }

    pub fn to_json(&self) -> String {
        let file = DatabaseFile {
            participants: self.participants.values().cloned().collect(),
            anomalies: self.anomalies.iter().cloned().collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("database serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, CaptureError> {
        let file: DatabaseFile =
            serde_json::from_str(text).map_err(|e| CaptureError::Database(e.to_string()))?;
        let mut db = ParticipantDatabase::new();
        for p in file.participants {
            if db.participants.insert(p.guid, p).is_some() {
                return Err(CaptureError::Database("duplicate guid".into()));
            }
        }
        db.anomalies = file.anomalies.into_iter().collect();
        Ok(db)
    }
}

/// Loads `records` into a copy of `into`, returning it with the new anomalies.
pub fn load_capture(
    records: &[CaptureRecord],
    into: &ParticipantDatabase,
) -> Result<(ParticipantDatabase, Vec<Anomaly>), CaptureError> {
    let mut db = into.clone();
    let anomalies = db.load(records)?;
    Ok((db, anomalies))
}

/// Value of the first `CN=` attribute of a distinguished name, unescaped.
pub fn common_name(subject: &str) -> Option<String> {
    let mut attributes = Vec::new();
    let mut current = String::new();
    let mut chars = subject.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => current.push(chars.next()?),
            ',' | ';' => attributes.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    attributes.push(current);
    attributes.into_iter().find_map(|a| {
        let (key, value) = a.split_once('=')?;
        key.trim().eq_ignore_ascii_case("cn").then(|| value.trim().to_owned())
    })
}

mod canonical_xml {
    use super::*;

    pub fn serialize<S: Serializer>(p: &PermissionsFile, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(std::str::from_utf8(&serialize_permissions(p)).expect("serializer emits UTF-8"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PermissionsFile, D::Error> {
        let text = String::deserialize(d)?;
        parse_permissions(text.as_bytes()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn common_names() {
        assert_eq!(common_name(r"CN=5\,0").as_deref(), Some("5,0"));
        assert_eq!(common_name("O=Acme, CN=talker").as_deref(), Some("talker"));
        assert_eq!(common_name("O=Acme"), None);
    }
}
