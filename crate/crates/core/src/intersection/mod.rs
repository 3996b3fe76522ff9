//! Deciding whether two permission files admit a matching publish/subscribe pair.

mod brute;
mod domains;
mod oracle;
mod solver;

use serde::{Deserialize, Serialize};

use crate::pdp::{evaluate, match_actions, PdpVariant};
use crate::permissions::{ActionRequest, PermissionsFile, Qualifier};
use crate::time::Timestamp;

pub use brute::brute_force_intersection;
pub use oracle::{EdgeOracle, EdgeVerifier, OracleError};
pub use solver::{grant_intersection, grant_intersection_within, IntersectionOutcome, SolverStats, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    APublishesToB,
    BPublishesToA,
}

impl Direction {
    /// (publisher file, subscriber file).
    pub fn roles<'a>(self, a: &'a PermissionsFile, b: &'a PermissionsFile) -> (&'a PermissionsFile, &'a PermissionsFile) {
        match self {
            Direction::APublishesToB => (a, b),
            Direction::BPublishesToA => (b, a),
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::APublishesToB => Direction::BPublishesToA,
            Direction::BPublishesToA => Direction::APublishesToB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPair {
    pub publisher_action: ActionRequest,
    pub subscriber_action: ActionRequest,
}

impl ActionPair {
    /// Re-checks the pair against both files: matching actions, same domain, both allowed.
    pub fn validates(&self, publisher: &PermissionsFile, subscriber: &PermissionsFile, at: Timestamp) -> bool {
        match_actions(&self.publisher_action, &self.subscriber_action)
            && self.publisher_action.domain_id == self.subscriber_action.domain_id
            && evaluate(publisher, &self.publisher_action, at, PdpVariant::Compliant).0 == Qualifier::Allow
            && evaluate(subscriber, &self.subscriber_action, at, PdpVariant::Compliant).0 == Qualifier::Allow
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "witness", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeStatus {
    Heuristic,
    Verified(ActionPair),
    Refuted,
}

impl EdgeStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, EdgeStatus::Verified(_))
    }
}
