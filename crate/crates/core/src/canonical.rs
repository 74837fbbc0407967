//! Canonical JSON rendering and content hashing.
//!
//! `serde_json::Value` objects keep keys in sorted order, so routing a value
//! through it yields a stable byte sequence for identical content.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("domain types always serialize")
}

/// Compact canonical form with sorted keys.
pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    to_value(value).to_string()
}

/// Pretty canonical form with sorted keys, used for files on disk.
pub fn to_canonical_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(&to_value(value)).expect("json value serializes");
    text.push('\n');
    text
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `prefix-` followed by the first 16 hex digits of the SHA-256 of `bytes`.
pub fn short_id(prefix: &str, bytes: &[u8]) -> String {
    format!("{prefix}-{}", &sha256_hex(bytes)[..16])
}
