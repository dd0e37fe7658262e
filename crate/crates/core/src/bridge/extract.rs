//! Pulls a map document out of a free-form model reply.

use serde::{Deserialize, Serialize};

use crate::map::{parse_map, GridMap, MapError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum ExtractionResult {
    Ok { map: GridMap },
    /// No candidate block conforms to the map schema.
    FormatError { detail: String },
    /// A block conforms to the schema but breaks a map invariant
    /// (obstacle off the grid, start or end covered, ...).
    InvalidMap { detail: String },
    ProviderError { detail: String },
}

impl ExtractionResult {
    pub fn map(&self) -> Option<&GridMap> {
        match self {
            ExtractionResult::Ok { map } => Some(map),
            _ => None,
        }
    }
}

fn matching_brace(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Brace-balanced `{...}` blocks (nested ones included) plus fenced code block
/// bodies, in order of appearance. Unbalanced openers are skipped.
pub fn json_candidates(text: &str) -> Vec<&str> {
    let mut found: Vec<(usize, &str)> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    // Every opener is scanned on its own so stray braces or quotes in the
    // surrounding prose cannot swallow a later block.
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = matching_brace(bytes, i) {
                found.push((i, &text[i..=end]));
            }
        }
        i += 1;
    }

    let mut offset = 0;
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(body_start) = after.find('\n') else { break };
        let body = &after[body_start + 1..];
        let Some(close) = body.find("```") else { break };
        let block = body[..close].trim();
        let pos = offset + open + 3 + body_start + 1;
        if !block.is_empty() && !found.iter().any(|(_, s)| *s == block) {
            found.push((pos, block));
        }
        let consumed = open + 3 + body_start + 1 + close + 3;
        offset += consumed;
        rest = &rest[consumed..];
    }
    found.sort_by_key(|(pos, _)| *pos);
    found.into_iter().map(|(_, s)| s).collect()
}

/// Tries candidates from last to first and returns the first valid map.
pub fn extract_map(reply: &str) -> ExtractionResult {
    let candidates = json_candidates(reply);
    let mut format_detail: Option<String> = None;
    let mut invalid_detail: Option<String> = None;
    for candidate in candidates.iter().rev() {
        match parse_map(candidate) {
            Ok(map) => return ExtractionResult::Ok { map },
            Err(MapError::InvalidBounds(d)) => {
                invalid_detail.get_or_insert(d);
            }
            Err(MapError::MalformedDocument(d)) => {
                format_detail.get_or_insert(d);
            }
        }
    }
    if let Some(detail) = invalid_detail {
        return ExtractionResult::InvalidMap { detail };
    }
    ExtractionResult::FormatError {
        detail: format_detail.unwrap_or_else(|| "no JSON object found in reply".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{appendix_map, serialize_map, serialize_map_pretty, Obstacle};

    #[test]
    fn prose_wrapped_map() {
        let map = appendix_map();
        let reply = format!("Here is the updated map:\n{}\nThe birds are now avoided.", serialize_map(&map));
        assert_eq!(extract_map(&reply), ExtractionResult::Ok { map });
    }

    #[test]
    fn fenced_pretty_map() {
        let map = appendix_map();
        let reply = format!("Sure.\n```json\n{}\n```\n", serialize_map_pretty(&map));
        assert_eq!(extract_map(&reply).map(), Some(&map));
    }

    #[test]
    fn truncated_json_is_format_error() {
        let text = serialize_map(&appendix_map());
        let reply = format!("Map: {}", &text[..text.len() - 1]);
        assert!(matches!(extract_map(&reply), ExtractionResult::FormatError { .. }));
    }

    #[test]
    fn falls_back_to_earlier_block() {
        let map = appendix_map();
        let reply = format!(
            "First: {}\nAlso consider {{\"note\": \"birds\", \"size\": 3}} as metadata.",
            serialize_map(&map)
        );
        assert_eq!(extract_map(&reply).map(), Some(&map));
    }

    #[test]
    fn latest_valid_block_wins() {
        let base = appendix_map();
        let modified = base.with_obstacles([Obstacle::new("birds", 12, 14, 14, 16)]).unwrap();
        let reply = format!("Original: {}\nNew: {}", serialize_map(&base), serialize_map(&modified));
        assert_eq!(extract_map(&reply).map(), Some(&modified));
    }

    #[test]
    fn schema_valid_but_covering_start_is_invalid_map() {
        let text = serialize_map(&appendix_map()).replace(
            r#""obstacle_list":["#,
            r#""obstacle_list":[{"label":"birds","x1":0,"y1":0,"x2":2,"y2":2},"#,
        );
        assert!(matches!(extract_map(&text), ExtractionResult::InvalidMap { .. }));
    }

    #[test]
    fn wrong_schema_is_format_error() {
        let reply = r#"{"width":20,"height":20,"start":[0,0],"end":[19,19],"obstacles":[]}"#;
        assert!(matches!(extract_map(reply), ExtractionResult::FormatError { .. }));
        assert!(matches!(extract_map("no json here"), ExtractionResult::FormatError { .. }));
    }

    #[test]
    fn braces_inside_strings_are_ignored() {
        let map = appendix_map()
            .with_obstacles([Obstacle::new("odd } label {", 12, 14, 14, 16)])
            .unwrap();
        let reply = format!("ok {} done", serialize_map(&map));
        assert_eq!(extract_map(&reply).map(), Some(&map));
    }
}
