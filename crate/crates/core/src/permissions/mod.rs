//! Permission documents: data model, XML parsing and canonical serialization,
//! and the keyed-digest obfuscation transform.

mod model;
mod obfuscate;
mod xml;

use thiserror::Error;

pub use model::{
    ActionRequest, Criteria, DataTag, DomainEntry, DomainSet, Grant, PermissionsFile, Qualifier,
    Rule, Validity, Verb,
};
pub use obfuscate::{digest_text, obfuscate_action, obfuscate_permissions};
pub use xml::{parse_permissions, serialize_permissions, OBFUSCATION_MARKER};

use crate::glob::PatternError;

#[derive(Debug, Error)]
pub enum PermissionsError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: usize, message: String },
    #[error("{path} (byte {offset}): missing <{element}>")]
    MissingElement {
        path: String,
        element: String,
        offset: usize,
    },
    #[error("{path} (byte {offset}): unexpected element")]
    UnexpectedElement { path: String, offset: usize },
    #[error("{path} (byte {offset}): invalid timestamp {value:?}")]
    InvalidTimestamp {
        path: String,
        offset: usize,
        value: String,
    },
    #[error("{path} (byte {offset}): {message}")]
    InvalidValue {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("{path} (byte {offset}): invalid expression: {source}")]
    InvalidPattern {
        path: String,
        offset: usize,
        #[source]
        source: PatternError,
    },
    #[error("invalid permissions: {0}")]
    Invariant(String),
    #[error("permissions are already obfuscated")]
    AlreadyObfuscated,
    #[error("obfuscation key must not be empty")]
    EmptyKey,
}

/// Hook for verifying the document signature. Documents are treated as trusted input.
pub fn verify_signature(_document: &[u8]) -> Result<(), PermissionsError> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;

    const MINIMAL: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<dds xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">
  <permissions>
    <grant name="TalkerGrant">
      <subject_name>CN=talker</subject_name>
      <validity>
        <not_before>2013-06-01T13:00:00</not_before>
        <not_after>2038-06-01T13:00:00</not_after>
      </validity>
      <allow_rule>
        <domains><id>0</id></domains>
        <publish><topics><topic>t</topic></topics></publish>
      </allow_rule>
      <default>DENY</default>
    </grant>
  </permissions>
</dds>"#;

    #[test]
    fn parses_minimal_document() {
        let file = parse_permissions(MINIMAL.as_bytes()).unwrap();
        assert_eq!(file.grants.len(), 1);
        let grant = &file.grants[0];
        assert_eq!(grant.name.as_deref(), Some("TalkerGrant"));
        assert_eq!(grant.subject_name, "CN=talker");
        assert_eq!(grant.rules.len(), 1);
        assert_eq!(grant.default, Qualifier::Deny);
        assert_eq!(grant.rules[0].publish.as_ref().unwrap().topics[0].source(), "t");
        assert_eq!(file.subject_name(), "CN=talker");
        assert!(!file.obfuscated);
    }

    #[test]
    fn round_trips_minimal_document() {
        let file = parse_permissions(MINIMAL.as_bytes()).unwrap();
        let bytes = serialize_permissions(&file);
        assert_eq!(parse_permissions(&bytes).unwrap(), file);
        // Canonical output is a fixed point.
        assert_eq!(serialize_permissions(&parse_permissions(&bytes).unwrap()), bytes);
    }

    #[test]
    fn missing_validity_names_the_grant() {
        let doc = MINIMAL.replace(
            "<validity>\n        <not_before>2013-06-01T13:00:00</not_before>\n        <not_after>2038-06-01T13:00:00</not_after>\n      </validity>",
            "",
        );
        match parse_permissions(doc.as_bytes()).unwrap_err() {
            PermissionsError::MissingElement { path, element, offset } => {
                assert_eq!(path, "/dds/permissions/grant");
                assert_eq!(element, "validity");
                assert_eq!(&doc[offset..offset + 6], "<grant");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_elements() {
        let doc = MINIMAL.replace("<default>DENY</default>", "<default>DENY</default><governance/>");
        let err = parse_permissions(doc.as_bytes()).unwrap_err();
        assert!(matches!(err, PermissionsError::UnexpectedElement { ref path, .. } if path.ends_with("/governance")));
    }

    #[test]
    fn reports_bad_timestamps_and_patterns() {
        let doc = MINIMAL.replace("2013-06-01T13:00:00", "last tuesday");
        assert!(matches!(
            parse_permissions(doc.as_bytes()).unwrap_err(),
            PermissionsError::InvalidTimestamp { ref path, .. } if path.ends_with("not_before")
        ));
        let doc = MINIMAL.replace("<topic>t</topic>", "<topic>a[b</topic>");
        match parse_permissions(doc.as_bytes()).unwrap_err() {
            PermissionsError::InvalidPattern { path, source, .. } => {
                assert!(path.ends_with("/publish/topics/topic"));
                assert_eq!(source.offset, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reports_malformed_markup() {
        let err = parse_permissions(b"<dds><permissions></dds>").unwrap_err();
        assert!(matches!(err, PermissionsError::Xml { .. }));
    }

    #[test]
    fn rule_with_publish_and_subscribe() {
        let doc = MINIMAL.replace(
            "<publish><topics><topic>t</topic></topics></publish>",
            "<publish><topics><topic>t</topic></topics></publish>\
             <subscribe><topics><topic>u*</topic></topics><partitions><partition>p</partition></partitions>\
             <data_tags><tag><name>level</name><value>high</value></tag></data_tags></subscribe>",
        );
        let file = parse_permissions(doc.as_bytes()).unwrap();
        let rule = &file.grants[0].rules[0];
        assert!(rule.publish.is_some());
        let sub = rule.subscribe.as_ref().unwrap();
        assert_eq!(sub.partitions[0].source(), "p");
        assert_eq!(sub.data_tags, vec![DataTag::new("level", "high")]);
        assert_eq!(parse_permissions(&serialize_permissions(&file)).unwrap(), file);
    }

    #[test]
    fn preserves_rule_order_and_domain_ranges() {
        let validity = Validity {
            not_before: Timestamp::from_unix(0),
            not_after: Timestamp::from_unix(1_000_000),
        };
        let file = PermissionsFile::new(vec![Grant {
            name: None,
            subject_name: "CN=x".into(),
            validity,
            rules: vec![
                Rule::new(Qualifier::Deny, DomainSet::range(0, 5)).publish(Criteria::topics(&["a"]).unwrap()),
                Rule::new(Qualifier::Allow, DomainSet::range(0, 5)).publish(Criteria::topics(&["*"]).unwrap()),
            ],
            default: Qualifier::Deny,
        }])
        .unwrap();
        let text = String::from_utf8(serialize_permissions(&file)).unwrap();
        assert!(text.contains("<id_range>"));
        let back = parse_permissions(text.as_bytes()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.grants[0].rules[0].qualifier, Qualifier::Deny);
    }

    #[test]
    fn validation_catches_broken_invariants() {
        let validity = Validity {
            not_before: Timestamp::from_unix(10),
            not_after: Timestamp::from_unix(10),
        };
        let grant = Grant {
            name: None,
            subject_name: "CN=x".into(),
            validity,
            rules: Vec::new(),
            default: Qualifier::Deny,
        };
        assert!(PermissionsFile::new(vec![grant]).is_err());
        assert!(PermissionsFile::new(Vec::new()).is_err());
    }
}
