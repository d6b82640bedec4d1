use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token is empty after normalization: {raw:?}")]
pub struct EmptyToken {
    pub raw: String,
}

/// Trims surrounding whitespace and lowercases. Multi-word names stay a
/// single token ("tennis racket").
pub fn normalize(raw: &str) -> Result<String, EmptyToken> {
    let t = raw.trim();
    if t.is_empty() {
        return Err(EmptyToken { raw: raw.into() });
    }
    Ok(t.to_lowercase())
}

/// Lenient variant used where an empty token is not an error (answers).
pub fn normalize_lossy(raw: &str) -> String {
    raw.trim().to_lowercase()
}
