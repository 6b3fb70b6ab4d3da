//! Canonical JSON serialization and content hashing.
//!
//! Every file this crate writes and every provenance digest it computes goes
//! through the same canonical form: UTF-8 JSON, lexicographically sorted keys,
//! shortest-round-trip float formatting, no insignificant whitespace. Two
//! logically equal values therefore always serialize to identical bytes.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Convert any serializable value into a `serde_json::Value` tree.
///
/// `serde_json`'s map type is a `BTreeMap`, so object keys come out sorted;
/// struct field order does not leak into the output.
pub fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("canonical serialization should not fail")
}

/// Serialize to the canonical string form (compact, sorted keys).
pub fn to_string<T: Serialize>(value: &T) -> String {
    to_value(value).to_string()
}

/// SHA-256 digest of a byte slice as a 64-char lowercase hex string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Canonical-form digest of a serializable value.
pub fn digest<T: Serialize>(value: &T) -> String {
    sha256_hex(to_string(value).as_bytes())
}
