//! The versioned fragment file format.
//!
//! ```json
//! {
//!   "version": 1,
//!   "n1": 3,
//!   "n2": 2,
//!   "incidence": [[0, 0], [0, 1], [1, 0], [1, 1], [2, 0]],
//!   "labels": {"h1": ["a", "b", "c"], "h2": ["d", "e"]}
//! }
//! ```
//!
//! Indices are 0-based; `labels` is optional. Saving is canonical (pairs in
//! lexicographic order, fixed layout) so `save(load(save(F)))` reproduces
//! the same bytes.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::poset::{Labels, Limits, PosetFragment};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFragment {
    version: u32,
    n1: usize,
    n2: usize,
    incidence: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Labels>,
}

/// Canonical text form.
pub fn fragment_to_string(f: &PosetFragment) -> String {
    let pairs: Vec<String> = f
        .incidence()
        .into_iter()
        .map(|(i, j)| format!("[{i}, {j}]"))
        .collect();
    let mut out = format!(
        "{{\n  \"version\": {FORMAT_VERSION},\n  \"n1\": {},\n  \"n2\": {},\n  \"incidence\": [{}]",
        f.n1(),
        f.n2(),
        pairs.join(", ")
    );
    if let Some(l) = f.labels() {
        let h1 = serde_json::to_string(&l.h1).expect("strings serialize");
        let h2 = serde_json::to_string(&l.h2).expect("strings serialize");
        out.push_str(&format!(",\n  \"labels\": {{\"h1\": {h1}, \"h2\": {h2}}}"));
    }
    out.push_str("\n}\n");
    out
}

pub fn save_fragment(f: &PosetFragment, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, fragment_to_string(f))?;
    Ok(())
}

pub fn load_fragment(path: impl AsRef<Path>, limits: Limits) -> Result<PosetFragment> {
    let text = std::fs::read_to_string(path)?;
    parse_fragment(&text, limits)
}

/// Parse and validate a fragment. Errors carry line and column.
pub fn parse_fragment(text: &str, limits: Limits) -> Result<PosetFragment> {
    let raw: RawFragment = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let at_top = |message: String| Error::Parse {
        line: 1,
        column: 1,
        message,
    };
    if raw.version != FORMAT_VERSION {
        return Err(at_top(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            raw.version
        )));
    }
    for (what, n) in [("n1", raw.n1), ("n2", raw.n2)] {
        if n > limits.max_tier {
            return Err(at_top(format!(
                "{what} = {n} exceeds the tier cap {} (raise it, up to 512)",
                limits.max_tier
            )));
        }
    }
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, &(i, j)) in raw.incidence.iter().enumerate() {
        let (line, column) = locate_pair(text, k).unwrap_or((0, 0));
        if i >= raw.n1 || j >= raw.n2 {
            return Err(Error::Parse {
                line,
                column,
                message: format!(
                    "incidence[{k}] = [{i}, {j}] out of range (n1 = {}, n2 = {})",
                    raw.n1, raw.n2
                ),
            });
        }
        if let Some(first) = seen.insert((i, j), k) {
            return Err(Error::Parse {
                line,
                column,
                message: format!("incidence[{k}] = [{i}, {j}] duplicates incidence[{first}]"),
            });
        }
    }
    let mut f = PosetFragment::new(raw.n1, raw.n2, raw.incidence)?;
    if let Some(labels) = raw.labels {
        f = f.with_labels(labels)?;
    }
    f.validate_with(limits).into_result()?;
    Ok(f)
}

/// Line and column (1-based) of the `k`-th pair in the incidence array.
fn locate_pair(text: &str, k: usize) -> Option<(usize, usize)> {
    let key = text.find("\"incidence\"")?;
    let mut depth = 0usize;
    let mut count = 0usize;
    for (off, ch) in text[key..].char_indices() {
        match ch {
            '[' => {
                depth += 1;
                if depth == 2 {
                    if count == k {
                        return Some(line_col(text, key + off));
                    }
                    count += 1;
                }
            }
            ']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    None
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cusp_fragment, f0};

    #[test]
    fn round_trip_is_exact() {
        for f in [f0(), cusp_fragment(), f0().without_labels()] {
            let text = fragment_to_string(&f);
            let back = parse_fragment(&text, Limits::default()).unwrap();
            assert_eq!(back, f);
            assert_eq!(fragment_to_string(&back), text);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f0.json");
        save_fragment(&f0(), &path).unwrap();
        assert_eq!(load_fragment(&path, Limits::default()).unwrap(), f0());
    }

    #[test]
    fn duplicate_pair_is_named() {
        let text = "{\n  \"version\": 1,\n  \"n1\": 1,\n  \"n2\": 1,\n  \"incidence\": [[0, 0],\n    [0, 0]]\n}";
        match parse_fragment(text, Limits::default()) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (6, 5));
                assert!(message.contains("incidence[1] = [0, 0] duplicates incidence[0]"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_pair() {
        let text = r#"{"version": 1, "n1": 1, "n2": 1, "incidence": [[0, 3]]}"#;
        let err = parse_fragment(text, Limits::default()).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
        assert!(err.to_string().starts_with("parse error at 1:"));
    }

    #[test]
    fn malformed_json_is_positioned() {
        let text = "{\n  \"version\": 1,\n  \"n1\": oops\n}";
        match parse_fragment(text, Limits::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_surface() {
        let text = r#"{"version": 1, "n1": 1, "n2": 2, "incidence": [[0, 0]]}"#;
        assert!(matches!(
            parse_fragment(text, Limits::default()),
            Err(Error::Invalid(_))
        ));
        let text = r#"{"version": 2, "n1": 1, "n2": 1, "incidence": [[0, 0]]}"#;
        assert!(parse_fragment(text, Limits::default()).is_err());
    }
}
