//! Line-delimited impression files: one JSON impression per line.
//!
//! ```json
//! {"id":"imp-1","candidates":[{"id":"n1","label":1,"score":0.83,"pref":1.2}, ...]}
//! ```
//!
//! `label` must be 0 or 1 (graded relevance is rejected), `score` and `pref`
//! are optional. Degenerate impressions (single class, duplicate ids, fewer
//! than two candidates) are skipped with accounting by default; strict mode
//! aborts on the first problem instead.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use rtlrank_core::impression::{validate_candidates, CandidateRecord, Impression};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCandidate {
    pub id: String,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pref: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawImpression {
    pub id: String,
    pub candidates: Vec<RawCandidate>,
}

/// One skipped input line and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: u64,
    pub byte_offset: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

/// Parse outcome: validated impressions plus an account of everything skipped.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub impressions: Vec<Impression>,
    pub skipped: Vec<SkippedLine>,
    pub lines_total: u64,
}

fn raw_to_candidates(raw: RawImpression, line: u64, offset: u64) -> CliResult<(String, Vec<CandidateRecord>)> {
    let mut candidates = Vec::with_capacity(raw.candidates.len());
    for candidate in raw.candidates {
        if candidate.label > 1 {
            return Err(CliError::Parse {
                line: Some(line),
                byte_offset: Some(offset),
                message: format!(
                    "candidate `{}`: label must be 0 or 1, got {} (graded relevance is rejected)",
                    candidate.id, candidate.label
                ),
            });
        }
        for (field, value) in [("score", candidate.score), ("pref", candidate.pref)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(CliError::Parse {
                        line: Some(line),
                        byte_offset: Some(offset),
                        message: format!("candidate `{}`: {field} must be finite", candidate.id),
                    });
                }
            }
        }
        let mut record = CandidateRecord::new(candidate.id, candidate.label == 1);
        record.score = candidate.score;
        record.pref_strength = candidate.pref;
        candidates.push(record);
    }
    Ok((raw.id, candidates))
}

/// Parses a reader of JSON lines. In lenient mode malformed lines and
/// degenerate impressions are recorded in `skipped`; in strict mode the first
/// problem aborts with a parse error carrying line number and byte offset.
pub fn parse_impressions(reader: impl BufRead, strict: bool) -> CliResult<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    let mut offset = 0u64;
    let mut line_no = 0u64;
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::io("reading impressions", e))?;
        line_no += 1;
        let line_offset = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        outcome.lines_total += 1;

        let raw: RawImpression = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                let error = CliError::Parse {
                    line: Some(line_no),
                    byte_offset: Some(line_offset),
                    message: e.to_string(),
                };
                if strict {
                    return Err(error);
                }
                outcome.skipped.push(SkippedLine {
                    line: line_no,
                    byte_offset: line_offset,
                    id: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };

        let id_for_report = raw.id.clone();
        let (id, candidates) = match raw_to_candidates(raw, line_no, line_offset) {
            Ok(parts) => parts,
            Err(error) => {
                if strict {
                    return Err(error);
                }
                outcome.skipped.push(SkippedLine {
                    line: line_no,
                    byte_offset: line_offset,
                    id: Some(id_for_report),
                    reason: error.to_string(),
                });
                continue;
            }
        };

        let violations = validate_candidates(&candidates, false);
        if !violations.is_empty() {
            let reason = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            if strict {
                return Err(CliError::Parse {
                    line: Some(line_no),
                    byte_offset: Some(line_offset),
                    message: format!("impression `{id}`: {reason}"),
                });
            }
            outcome.skipped.push(SkippedLine {
                line: line_no,
                byte_offset: line_offset,
                id: Some(id),
                reason,
            });
            continue;
        }
        outcome
            .impressions
            .push(Impression::new(id, candidates).map_err(CliError::from)?);
    }
    Ok(outcome)
}

pub fn parse_impressions_path(path: &Path, strict: bool) -> CliResult<ParseOutcome> {
    let file = File::open(path).map_err(|e| CliError::Parse {
        line: None,
        byte_offset: None,
        message: format!("opening {}: {e}", path.display()),
    })?;
    parse_impressions(BufReader::new(file), strict)
}

fn impression_to_raw(impression: &Impression) -> RawImpression {
    RawImpression {
        id: impression.id().to_string(),
        candidates: impression
            .candidates()
            .iter()
            .map(|c| RawCandidate {
                id: c.id.clone(),
                label: c.label as u8,
                score: c.score,
                pref: c.pref_strength,
            })
            .collect(),
    }
}

/// Serializes impressions back to the line-delimited format.
pub fn write_impressions(
    mut writer: impl Write,
    impressions: &[Impression],
) -> CliResult<()> {
    for impression in impressions {
        let json = serde_json::to_string(&impression_to_raw(impression))
            .map_err(|e| CliError::config(format!("serializing impression: {e}")))?;
        writeln!(writer, "{json}").map_err(|e| CliError::io("writing impressions", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WELL_FORMED: &str = r#"{"id":"a","candidates":[{"id":"x","label":1,"score":0.8},{"id":"y","label":0,"score":0.2}]}"#;

    #[test]
    fn parses_well_formed_line() {
        let outcome = parse_impressions(WELL_FORMED.as_bytes(), true).unwrap();
        assert_eq!(outcome.impressions.len(), 1);
        assert_eq!(outcome.impressions[0].id(), "a");
        assert_eq!(outcome.impressions[0].len(), 2);
        assert!(outcome.skipped.is_empty());
    }

    #[test]
    fn missing_label_is_a_parse_error_naming_the_field() {
        let input = r#"{"id":"a","candidates":[{"id":"x","score":0.8},{"id":"y","label":0}]}"#;
        match parse_impressions(input.as_bytes(), true) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, Some(1));
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn graded_labels_are_rejected() {
        let input = r#"{"id":"a","candidates":[{"id":"x","label":2},{"id":"y","label":0}]}"#;
        let err = parse_impressions(input.as_bytes(), true).unwrap_err();
        assert!(err.to_string().contains("graded"));
    }

    #[test]
    fn degenerate_impressions_are_skipped_and_counted() {
        let input = format!(
            "{}\n{}\n{}\n",
            r#"{"id":"all0","candidates":[{"id":"x","label":0},{"id":"y","label":0}]}"#,
            WELL_FORMED,
            r#"{"id":"dup","candidates":[{"id":"x","label":1},{"id":"x","label":0}]}"#
        );
        let outcome = parse_impressions(input.as_bytes(), false).unwrap();
        assert_eq!(outcome.impressions.len(), 1);
        assert_eq!(outcome.skipped.len(), 2);
        assert_eq!(outcome.lines_total, 3);
        assert!(outcome.skipped[0].reason.contains("no positive label"));
        assert_eq!(outcome.skipped[0].line, 1);
        assert!(outcome.skipped[1].reason.contains("duplicate"));
    }

    #[test]
    fn strict_mode_aborts_on_degenerate_line() {
        let input = format!(
            "{}\n{}\n",
            WELL_FORMED,
            r#"{"id":"all0","candidates":[{"id":"x","label":0},{"id":"y","label":0}]}"#
        );
        match parse_impressions(input.as_bytes(), true) {
            Err(CliError::Parse { line, byte_offset, .. }) => {
                assert_eq!(line, Some(2));
                assert_eq!(byte_offset, Some(WELL_FORMED.len() as u64 + 1));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line_and_offset() {
        let input = format!("{WELL_FORMED}\nnot json\n");
        match parse_impressions(input.as_bytes(), true) {
            Err(CliError::Parse { line, byte_offset, .. }) => {
                assert_eq!(line, Some(2));
                assert_eq!(byte_offset, Some(WELL_FORMED.len() as u64 + 1));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        // Lenient mode skips it instead.
        let outcome = parse_impressions(input.as_bytes(), false).unwrap();
        assert_eq!(outcome.impressions.len(), 1);
        assert_eq!(outcome.skipped.len(), 1);
    }

    proptest! {
        // parse -> serialize -> parse is the identity on the structured data.
        #[test]
        fn round_trip_preserves_impressions(
            n_candidates in 2usize..8,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let mut candidates: Vec<RawCandidate> = (0..n_candidates)
                .map(|i| RawCandidate {
                    id: format!("c{i}"),
                    label: u8::from(next() < 0.5),
                    score: (next() < 0.8).then(|| next()),
                    pref: (next() < 0.5).then(|| next() * 4.0 - 2.0),
                })
                .collect();
            candidates[0].label = 1;
            candidates[1].label = 0;
            let line = serde_json::to_string(&RawImpression {
                id: format!("imp-{seed}"),
                candidates,
            })
            .unwrap();

            let first = parse_impressions(line.as_bytes(), true).unwrap();
            let mut buffer = Vec::new();
            write_impressions(&mut buffer, &first.impressions).unwrap();
            let second = parse_impressions(buffer.as_slice(), true).unwrap();
            prop_assert_eq!(&first.impressions, &second.impressions);
        }
    }
}
