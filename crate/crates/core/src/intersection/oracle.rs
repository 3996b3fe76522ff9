use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use super::{grant_intersection_within, Direction, EdgeStatus, Universe};
use crate::capture::{ParticipantDatabase, ParticipantId};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("participant {0} is not in the database")]
    UnknownParticipant(ParticipantId),
}

/// Decides whether data can flow along a directed participant pair.
pub trait EdgeVerifier: Sync {
    fn verify(&self, from: ParticipantId, to: ParticipantId, at: Timestamp) -> Result<EdgeStatus, OracleError>;

    /// Number of uncached decisions made so far.
    fn solver_calls(&self) -> usize;
}

/// Grant-intersection checks between database participants, memoized per (from, to, at).
pub struct EdgeOracle<'a> {
    db: &'a ParticipantDatabase,
    universe: Universe,
    cache: RwLock<HashMap<(ParticipantId, ParticipantId, Timestamp), EdgeStatus>>,
    calls: AtomicUsize,
}

impl<'a> EdgeOracle<'a> {
    pub fn new(db: &'a ParticipantDatabase) -> Self {
        Self::with_universe(db, Universe::default())
    }

    pub fn with_universe(db: &'a ParticipantDatabase, universe: Universe) -> Self {
        EdgeOracle {
            db,
            universe,
            cache: RwLock::new(HashMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn database(&self) -> &ParticipantDatabase {
        self.db
    }

    pub fn cached(&self, from: ParticipantId, to: ParticipantId, at: Timestamp) -> Option<EdgeStatus> {
        self.cache.read().expect("cache lock").get(&(from, to, at)).cloned()
    }
}

impl EdgeVerifier for EdgeOracle<'_> {
    fn verify(&self, from: ParticipantId, to: ParticipantId, at: Timestamp) -> Result<EdgeStatus, OracleError> {
        let publisher = self.db.get(&from).ok_or(OracleError::UnknownParticipant(from))?;
        let subscriber = self.db.get(&to).ok_or(OracleError::UnknownParticipant(to))?;
        if let Some(hit) = self.cached(from, to, at) {
            return Ok(hit);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let outcome = grant_intersection_within(
            &publisher.permissions,
            &subscriber.permissions,
            at,
            Direction::APublishesToB,
            &self.universe,
        );
        let status = outcome.witness.map_or(EdgeStatus::Refuted, EdgeStatus::Verified);
        // The solver is deterministic, so a racing insert stores the same value.
        let mut cache = self.cache.write().expect("cache lock");
        Ok(cache.entry((from, to, at)).or_insert(status).clone())
    }

    fn solver_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}
