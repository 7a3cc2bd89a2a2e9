use thiserror::Error;

use crate::model::Violation;
use crate::power::Power;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network specification is invalid ({} violation(s)): {}", .0.len(), summarize(.0))]
    Invalid(Vec<Violation>),

    #[error("configuration references unknown element {0:?}")]
    DanglingElement(String),

    #[error("configuration does not match the network: {0}")]
    ConfigMismatch(String),

    #[error("fault references nonexistent {0}")]
    UnknownFaultSite(String),

    #[error("a post-fault state needs a concrete element or busbar, not zone {0}")]
    ZoneHasNoPostFault(usize),

    #[error("breaker {breaker:?} does not border the faulted zone")]
    BreakerNotAdjacent { breaker: String },

    #[error("scenario {scenario:?} is unbalanced: injections sum to {sum}")]
    Unbalanced { scenario: String, sum: Power },

    #[error("scenario {scenario:?} injects at {node:?}, which is not an AC node of the network")]
    BadInjection { scenario: String, node: String },

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("unknown AC zone {0:?}")]
    UnknownZone(String),

    #[error("cable {0:?} has no length")]
    MissingLength(String),

    #[error("breaker count {requested} exceeds the configured limit of {limit}")]
    BreakerLimit { requested: usize, limit: usize },

    #[error("unpruned enumeration would produce {count} configurations, above the ceiling of {ceiling}")]
    RawCountCeiling { count: u128, ceiling: u128 },

    #[error("enumeration produced no configurations")]
    EmptyEnumeration,

    #[error("numeric range exceeded: {0}")]
    Overflow(String),

    #[error("malformed configuration string {0:?}")]
    ParseConfiguration(String),

    #[error("unknown test case {0:?} (expected small, medium or large)")]
    UnknownCase(String),

    #[error("flow cross-check failed: {0}")]
    OracleMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(violations: &[crate::model::Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
