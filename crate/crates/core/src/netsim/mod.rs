//! Synthetic deployments and the KeepAlive propagation simulator.

mod emit;
mod generate;
mod policy;
mod scenario;
mod simulate;

use thiserror::Error;

pub use emit::{emit_capture, endpoint};
pub use generate::{generate_grid, generate_policies, generate_random, REFERENCE_TIME};
pub use policy::{random_permissions, PolicyShape};
pub use scenario::{Scenario, ScenarioParticipant};
pub use simulate::{simulate, Delivery, DeliveryReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetsimError {
    #[error("{0}")]
    InvalidParameter(String),
    #[error("scenario line {line}: {message}")]
    Format { line: usize, message: String },
}
