use super::Scenario;
use crate::capture::{CaptureRecord, ParticipantId};
use crate::permissions::serialize_permissions;

const DISCOVERY_GROUP: &str = "239.255.0.1:7400";

/// Unicast endpoint of the participant at `index`.
pub fn endpoint(index: usize) -> String {
    format!("10.{}.{}.{}:7410", index / 62_500 % 256, index / 250 % 250, index % 250 + 1)
}

/// One discovery record per participant, then one handshake record per intended flow.
pub fn emit_capture(s: &Scenario) -> Vec<CaptureRecord> {
    let position = |id: ParticipantId| {
        s.participants
            .iter()
            .position(|p| p.id == id)
            .expect("adjacency names scenario participants")
    };
    let record = |i: usize, destination: String, offset: usize| {
        let p = &s.participants[i];
        CaptureRecord {
            timestamp: s.reference_time.plus_seconds(offset as i64),
            source_address: endpoint(i),
            destination_address: destination,
            participant_guid: p.id,
            subject_name: p.permissions.subject_name().to_owned(),
            permissions_document: serialize_permissions(&p.permissions),
        }
    };
    let mut records: Vec<CaptureRecord> = (0..s.participants.len())
        .map(|i| record(i, DISCOVERY_GROUP.to_owned(), i))
        .collect();
    for (k, (u, v)) in s.intended_adjacency.iter().enumerate() {
        let (u, v) = (position(*u), position(*v));
        records.push(record(u, endpoint(v), s.participants.len() + k));
    }
    records
}
