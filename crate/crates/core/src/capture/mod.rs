//! Ingestion of observed permission tokens into a participant database.

mod codec;
mod database;
mod record;

use thiserror::Error;

use crate::permissions::PermissionsError;

pub use codec::{codec, codecs, decode_adapter, CaptureCodec, JsonLines};
pub use database::{common_name, load_capture, Anomaly, Participant, ParticipantDatabase, ParticipantId};
pub use record::{CaptureRecord, Guid, GuidError};

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("record {index}: {message}")]
    MalformedRecord { index: usize, message: String },
    #[error("record {index} (guid {guid}): embedded permissions: {source}")]
    Permissions {
        index: usize,
        guid: Guid,
        #[source]
        source: PermissionsError,
    },
    #[error("unknown capture codec {0:?}")]
    UnknownCodec(String),
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("identifier {0:?} matches several participants")]
    AmbiguousParticipant(String),
    #[error("database file: {0}")]
    Database(String),
}
