use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glob::GlobPattern;

/// Pluggable expression-matching behaviour of a decision point.
pub trait DecisionPoint: Send + Sync {
    fn variant(&self) -> PdpVariant;

    /// Whether the rule expression `expression` admits the action's literal `value`.
    fn expression_matches(&self, expression: &GlobPattern, value: &str) -> bool;

    fn checks_partitions(&self) -> bool {
        true
    }
}

/// Follows the default access-control logic exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compliant;

impl DecisionPoint for Compliant {
    fn variant(&self) -> PdpVariant {
        PdpVariant::Compliant
    }

    fn expression_matches(&self, expression: &GlobPattern, value: &str) -> bool {
        expression.matches(value)
    }
}

/// Calls `fnmatch` with the action's value as the pattern and the permission
/// expression as the text.
#[derive(Debug, Clone, Copy, Default)]
pub struct SwappedFnmatchArgs;

impl DecisionPoint for SwappedFnmatchArgs {
    fn variant(&self) -> PdpVariant {
        PdpVariant::SwappedFnmatchArgs
    }

    fn expression_matches(&self, expression: &GlobPattern, value: &str) -> bool {
        // A value that does not parse as a pattern makes fnmatch fail.
        GlobPattern::parse_with(value, expression.dialect())
            .is_ok_and(|as_pattern| as_pattern.matches(expression.source()))
    }
}

/// Never evaluates partition criteria.
#[derive(Debug, Clone, Copy, Default)]
pub struct SkipPartitionCheck;

impl DecisionPoint for SkipPartitionCheck {
    fn variant(&self) -> PdpVariant {
        PdpVariant::SkipPartitionCheck
    }

    fn expression_matches(&self, expression: &GlobPattern, value: &str) -> bool {
        expression.matches(value)
    }

    fn checks_partitions(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdpVariant {
    Compliant,
    SwappedFnmatchArgs,
    SkipPartitionCheck,
}

static REGISTRY: [&dyn DecisionPoint; 3] = [&Compliant, &SwappedFnmatchArgs, &SkipPartitionCheck];

/// Every registered decision point, compliant first.
pub fn registry() -> &'static [&'static dyn DecisionPoint] {
    &REGISTRY
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown PDP variant {0:?} (known: compliant, swapped-fnmatch-args, skip-partition-check)")]
pub struct UnknownVariant(pub String);

impl PdpVariant {
    pub const ALL: [PdpVariant; 3] = [
        PdpVariant::Compliant,
        PdpVariant::SwappedFnmatchArgs,
        PdpVariant::SkipPartitionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PdpVariant::Compliant => "compliant",
            PdpVariant::SwappedFnmatchArgs => "swapped-fnmatch-args",
            PdpVariant::SkipPartitionCheck => "skip-partition-check",
        }
    }

    pub fn decision_point(self) -> &'static dyn DecisionPoint {
        *registry()
            .iter()
            .find(|dp| dp.variant() == self)
            .expect("every variant is registered")
    }
}

impl fmt::Display for PdpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PdpVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.to_ascii_lowercase().replace('_', "-");
        PdpVariant::ALL
            .into_iter()
            .find(|v| v.name() == wanted)
            .ok_or_else(|| UnknownVariant(s.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_through_registry() {
        for v in PdpVariant::ALL {
            assert_eq!(v.name().parse::<PdpVariant>().unwrap(), v);
            assert_eq!(v.decision_point().variant(), v);
        }
        assert_eq!("SWAPPED_FNMATCH_ARGS".parse::<PdpVariant>().unwrap(), PdpVariant::SwappedFnmatchArgs);
        assert!("lenient".parse::<PdpVariant>().is_err());
    }

    #[test]
    fn swapped_arguments() {
        let expr = GlobPattern::parse("data").unwrap();
        assert!(SwappedFnmatchArgs.expression_matches(&expr, "*"));
        assert!(SwappedFnmatchArgs.expression_matches(&expr, "data"));
        assert!(!SwappedFnmatchArgs.expression_matches(&expr, "[unclosed"));
        let wild = GlobPattern::parse("foo/*").unwrap();
        assert!(!SwappedFnmatchArgs.expression_matches(&wild, "foo/bar"));
        assert!(Compliant.expression_matches(&wild, "foo/bar"));
    }
}
