//! Commit-log ingestion: the canonical NDJSON format, the converter for the
//! documented `git log` recipe, and email classification.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentinel line that opens every record in the extraction recipe output.
pub const RECORD_SENTINEL: &str = "\x01COMMIT\x01";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read commit log: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed raw log at byte {offset}: {reason}")]
    Raw { offset: usize, reason: String },
}

/// Which timestamp of a commit places it in a release window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TimeField {
    #[default]
    Committer,
    Author,
}

/// One atomic change event, after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub sha: String,
    pub author_name: String,
    pub author_email: String,
    pub timestamp: DateTime<Utc>,
    pub files: Vec<String>,
}

/// What the cleaning pass did to (or noticed about) an accepted record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CleaningNote {
    NormalizedEmail,
    MissingEmail,
    InvalidEmail,
    DeduplicatedFiles,
    SortedFiles,
}

impl CleaningNote {
    pub fn as_str(self) -> &'static str {
        match self {
            CleaningNote::NormalizedEmail => "normalized email",
            CleaningNote::MissingEmail => "missing email",
            CleaningNote::InvalidEmail => "invalid email",
            CleaningNote::DeduplicatedFiles => "deduplicated files",
            CleaningNote::SortedFiles => "sorted files",
        }
    }
}

impl fmt::Display for CleaningNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CleaningNote {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cleaning {
    pub sha: String,
    pub fix: CleaningNote,
}

/// Outcome of parsing or validating a commit stream.
///
/// For [`parse_commit_log`], `accepted + rejected.len()` equals the number of
/// non-blank input lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    pub cleaned: Vec<Cleaning>,
}

impl ValidationReport {
    /// Shas flagged with a missing or invalid email.
    pub fn bad_email_shas(&self) -> impl Iterator<Item = &str> {
        self.cleaned
            .iter()
            .filter(|c| {
                matches!(
                    c.fix,
                    CleaningNote::MissingEmail | CleaningNote::InvalidEmail
                )
            })
            .map(|c| c.sha.as_str())
    }
}

/// Classification of a raw author email.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmailStatus {
    Ok,
    /// Casing or surrounding whitespace must change; carries the normalized form.
    Fixable(String),
    Missing,
    /// No `@`, or no dot in the domain part.
    Invalid,
}

pub fn normalize_email(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// True when the (already normalized) email has an `@` and a dotted domain.
pub fn is_well_formed_email(email: &str) -> bool {
    match email.rsplit_once('@') {
        Some((_, domain)) => domain.contains('.'),
        None => false,
    }
}

pub fn classify_email(raw: &str) -> EmailStatus {
    let normalized = normalize_email(raw);
    if normalized.is_empty() {
        EmailStatus::Missing
    } else if !is_well_formed_email(&normalized) {
        EmailStatus::Invalid
    } else if normalized != raw {
        EmailStatus::Fixable(normalized)
    } else {
        EmailStatus::Ok
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    sha: String,
    author_name: String,
    author_email: String,
    timestamp: String,
    #[serde(default)]
    author_timestamp: Option<String>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct CanonicalLine<'a> {
    sha: &'a str,
    author_name: &'a str,
    author_email: &'a str,
    timestamp: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    author_timestamp: Option<&'a str>,
    files: &'a [String],
}

fn is_valid_sha(sha: &str) -> bool {
    sha.len() == 40 && sha.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn parse_instant(text: &str) -> Option<DateTime<Utc>> {
    let parsed = DateTime::parse_from_rfc3339(text).ok()?;
    // Second precision.
    let secs = parsed.timestamp();
    DateTime::from_timestamp(secs, 0)
}

/// Parses one non-blank line. `Err` carries the rejection reason.
fn parse_line(
    line: &str,
    time_field: TimeField,
) -> Result<(CommitRecord, Vec<CleaningNote>), String> {
    let raw: RawLine = serde_json::from_str(line).map_err(|e| format!("schema: {e}"))?;
    if !is_valid_sha(&raw.sha) {
        return Err("invalid sha".to_string());
    }
    let committer = parse_instant(&raw.timestamp).ok_or("invalid timestamp")?;
    let author_time = match &raw.author_timestamp {
        Some(text) => Some(parse_instant(text).ok_or("invalid author_timestamp")?),
        None => None,
    };
    let timestamp = match time_field {
        TimeField::Committer => committer,
        TimeField::Author => author_time.ok_or("missing author_timestamp")?,
    };
    if raw.files.is_empty() {
        return Err("no files".to_string());
    }
    if raw.files.iter().any(String::is_empty) {
        return Err("empty file path".to_string());
    }

    let mut notes = Vec::new();
    let author_email = match classify_email(&raw.author_email) {
        EmailStatus::Ok => raw.author_email,
        EmailStatus::Fixable(normalized) => {
            notes.push(CleaningNote::NormalizedEmail);
            normalized
        }
        EmailStatus::Missing => {
            notes.push(CleaningNote::MissingEmail);
            String::new()
        }
        EmailStatus::Invalid => {
            let normalized = normalize_email(&raw.author_email);
            if normalized != raw.author_email {
                notes.push(CleaningNote::NormalizedEmail);
            }
            notes.push(CleaningNote::InvalidEmail);
            normalized
        }
    };

    let unique: BTreeSet<&String> = raw.files.iter().collect();
    if unique.len() != raw.files.len() {
        notes.push(CleaningNote::DeduplicatedFiles);
    } else if !raw.files.windows(2).all(|w| w[0] < w[1]) {
        notes.push(CleaningNote::SortedFiles);
    }
    let files = unique.into_iter().cloned().collect();

    Ok((
        CommitRecord {
            sha: raw.sha,
            author_name: raw.author_name,
            author_email,
            timestamp,
            files,
        },
        notes,
    ))
}

/// Parses a canonical NDJSON commit log.
///
/// Records come back in input order. Per-line problems land in the report's
/// `rejected` list with a 1-based line number; only a failure of the
/// underlying reader aborts the parse.
pub fn parse_commit_log<R: BufRead>(
    mut input: R,
    time_field: TimeField,
) -> Result<(Vec<CommitRecord>, ValidationReport), IngestError> {
    let mut records = Vec::new();
    let mut report = ValidationReport::default();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let Ok(text) = std::str::from_utf8(&buf) else {
            report.rejected.push(Rejection {
                line: line_no,
                reason: "invalid UTF-8".to_string(),
            });
            continue;
        };
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        match parse_line(text, time_field) {
            Ok((record, notes)) => {
                report.accepted += 1;
                report.cleaned.extend(notes.into_iter().map(|fix| Cleaning {
                    sha: record.sha.clone(),
                    fix,
                }));
                records.push(record);
            }
            Err(reason) => report.rejected.push(Rejection {
                line: line_no,
                reason,
            }),
        }
    }
    Ok((records, report))
}

/// Classifies already-parsed records by email quality.
///
/// Nothing is rejected here: invalid and missing emails are marked in
/// `cleaned` so identity resolution can still apply an explicit override.
pub fn validate_commits(records: &[CommitRecord]) -> ValidationReport {
    let mut report = ValidationReport {
        accepted: records.len(),
        ..Default::default()
    };
    for record in records {
        let note = match classify_email(&record.author_email) {
            EmailStatus::Ok => continue,
            EmailStatus::Fixable(_) => CleaningNote::NormalizedEmail,
            EmailStatus::Missing => CleaningNote::MissingEmail,
            EmailStatus::Invalid => CleaningNote::InvalidEmail,
        };
        report.cleaned.push(Cleaning {
            sha: record.sha.clone(),
            fix: note,
        });
    }
    report
}

/// Result of converting raw recipe output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conversion {
    pub ndjson: String,
    pub records: usize,
    pub merges_dropped: usize,
}

struct RawRecord<'a> {
    offset: usize,
    header: Vec<&'a str>,
    files: Vec<&'a str>,
}

const HEADER_FIELDS: [&str; 5] = [
    "sha",
    "author name",
    "author email",
    "committer date",
    "author date",
];

/// Converts the output of the documented `git log` recipe into canonical NDJSON.
///
/// Each record is the sentinel line followed by five header lines (sha,
/// author name, author email, committer date, author date) and then the
/// name-only file list. Blank lines between header and files are ignored.
/// Records with no files are merges and are dropped and counted.
pub fn convert_vcs_log(raw: &str) -> Result<Conversion, IngestError> {
    let mut records: Vec<RawRecord<'_>> = Vec::new();
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.strip_suffix('\n').unwrap_or(line);
        let content = content.strip_suffix('\r').unwrap_or(content);
        if content == RECORD_SENTINEL {
            records.push(RawRecord {
                offset: start,
                header: Vec::new(),
                files: Vec::new(),
            });
            continue;
        }
        let Some(current) = records.last_mut() else {
            if content.trim().is_empty() {
                continue;
            }
            return Err(IngestError::Raw {
                offset: start,
                reason: "missing record sentinel".to_string(),
            });
        };
        if current.header.len() < HEADER_FIELDS.len() {
            current.header.push(content);
        } else if !content.trim().is_empty() {
            current.files.push(content);
        }
    }

    let mut out = Conversion::default();
    for record in &records {
        if record.header.len() < HEADER_FIELDS.len() {
            return Err(IngestError::Raw {
                offset: record.offset,
                reason: format!(
                    "unterminated record: missing {}",
                    HEADER_FIELDS[record.header.len()]
                ),
            });
        }
        let sha = record.header[0].trim();
        if !is_valid_sha(sha) {
            return Err(IngestError::Raw {
                offset: record.offset,
                reason: format!("invalid sha {sha:?}"),
            });
        }
        let committer = record.header[3].trim();
        let author = record.header[4].trim();
        for (field, value) in [("committer date", committer), ("author date", author)] {
            if parse_instant(value).is_none() {
                return Err(IngestError::Raw {
                    offset: record.offset,
                    reason: format!("missing or invalid {field} {value:?}"),
                });
            }
        }
        if record.files.is_empty() {
            out.merges_dropped += 1;
            continue;
        }
        let files: Vec<String> = record.files.iter().map(|f| f.to_string()).collect();
        let line = CanonicalLine {
            sha,
            author_name: record.header[1],
            author_email: record.header[2],
            timestamp: committer,
            author_timestamp: Some(author),
            files: &files,
        };
        out.ndjson
            .push_str(&serde_json::to_string(&line).expect("string fields serialize"));
        out.ndjson.push('\n');
        out.records += 1;
    }
    Ok(out)
}

/// Serializes records back to canonical NDJSON (timestamps in UTC `Z` form).
pub fn to_ndjson(records: &[CommitRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let ts = r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true);
        let line = CanonicalLine {
            sha: &r.sha,
            author_name: &r.author_name,
            author_email: &r.author_email,
            timestamp: &ts,
            author_timestamp: None,
            files: &r.files,
        };
        out.push_str(&serde_json::to_string(&line).expect("string fields serialize"));
        out.push('\n');
    }
    out
}
