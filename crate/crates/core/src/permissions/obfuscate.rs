use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::model::{ActionRequest, DataTag, PermissionsFile};
use super::PermissionsError;
use crate::glob::GlobPattern;

/// Base64 of HMAC-SHA256(key, text). The empty string (the default partition)
/// maps to itself so default-partition rules keep working.
pub fn digest_text(key: &[u8], text: &str) -> String {
    if text.is_empty() {
        return String::new();
    }
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(text.as_bytes());
    STANDARD.encode(mac.finalize().into_bytes())
}

fn digest_pattern(key: &[u8], pattern: &GlobPattern) -> GlobPattern {
    // Base64 output contains no glob metacharacters.
    GlobPattern::parse(&digest_text(key, pattern.source())).expect("digest is a valid literal")
}

/// Replaces every topic and partition expression and every data-tag value
/// with its keyed digest. Matching then only works for exact strings.
pub fn obfuscate_permissions(file: &PermissionsFile, key: &[u8]) -> Result<PermissionsFile, PermissionsError> {
    if key.is_empty() {
        return Err(PermissionsError::EmptyKey);
    }
    if file.obfuscated {
        return Err(PermissionsError::AlreadyObfuscated);
    }
    let mut out = file.clone();
    out.obfuscated = true;
    for rule in out.grants.iter_mut().flat_map(|g| g.rules.iter_mut()) {
        for criteria in rule.criteria_mut() {
            for p in criteria.topics.iter_mut().chain(criteria.partitions.iter_mut()) {
                *p = digest_pattern(key, p);
            }
            for tag in &mut criteria.data_tags {
                tag.value = digest_text(key, &tag.value);
            }
        }
    }
    Ok(out)
}

/// Applies the same digest to an action's literal fields so it can be checked
/// against an obfuscated document.
pub fn obfuscate_action(action: &ActionRequest, key: &[u8]) -> ActionRequest {
    ActionRequest {
        topic: digest_text(key, &action.topic),
        partition: digest_text(key, &action.partition),
        data_tags: action
            .data_tags
            .iter()
            .map(|t| DataTag::new(t.name.clone(), digest_text(key, &t.value)))
            .collect(),
        ..action.clone()
    }
}
