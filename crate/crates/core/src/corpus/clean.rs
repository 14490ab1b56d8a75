//! Text cleaning and claim-boundary detection.

use std::sync::LazyLock;

use regex::Regex;

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").unwrap());

/// Claim 2 marker at the start of a line: optional indentation, `2`, then
/// `.` or `)`.
static CLAIM2_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*2[ \t]*[.)]").unwrap());

/// Fallback for claims flattened onto one line: a sentence end followed by
/// ` 2. ` and an uppercase word.
static CLAIM2_INLINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.;]\s+2\s*[.)]\s+\p{Lu}").unwrap());

/// Strips markup tags, decodes the common character entities and collapses
/// whitespace runs to single spaces.
pub fn clean_text(raw: &str) -> String {
    let without_tags = TAG.replace_all(raw, " ");
    let decoded = decode_entities(&without_tags);
    decoded.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    text.replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

/// First claim of a raw (uncleaned) claims block: everything before the
/// claim 2 marker, or the whole block when there is no second claim.
pub fn extract_claim1(raw_claims: &str) -> &str {
    let cut = CLAIM2_LINE
        .find(raw_claims)
        .map(|m| m.start())
        .or_else(|| CLAIM2_INLINE.find(raw_claims).map(|m| m.start() + 1));
    match cut {
        Some(pos) => raw_claims[..pos].trim_end(),
        None => raw_claims.trim_end(),
    }
}
