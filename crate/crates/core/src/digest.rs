//! Stable content digests used as cache keys and provenance markers.

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of the input bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// True if `s` looks like a hex SHA-256 digest (safe to use as a filename).
pub fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}
