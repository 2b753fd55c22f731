//! Release windows: the time slices each collaboration graph is built over.

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, NaiveTime, Utc};
use thiserror::Error;

/// Label for commits landing after the last configured release.
pub const POST_RELEASE: &str = "post-release";

/// Release names that would collide with output labels.
const RESERVED_NAMES: [&str; 3] = [POST_RELEASE, "all", "merged"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlicingError {
    #[error("releases: {0}")]
    Csv(String),
    #[error("releases line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("releases: no release rows")]
    Empty,
    #[error("releases line {line}: date {date} is not after the previous release")]
    NotAscending { line: u64, date: NaiveDate },
    #[error("releases line {line}: duplicate release name {name:?}")]
    DuplicateName { line: u64, name: String },
}

/// `(start, end]` in UTC. The first window has no lower bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleaseWindow {
    pub name: String,
    pub start: Option<DateTime<Utc>>,
    pub end: DateTime<Utc>,
}

impl ReleaseWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t <= self.end && self.start.is_none_or(|s| t > s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment<'a> {
    Window(&'a ReleaseWindow),
    PostRelease,
}

/// End-of-day instant for a release date.
pub fn release_instant(date: NaiveDate) -> DateTime<Utc> {
    date.and_time(NaiveTime::from_hms_opt(23, 59, 59).expect("valid time"))
        .and_utc()
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\'])
        && !name.chars().any(char::is_control)
        && !RESERVED_NAMES.contains(&name)
}

/// Builds windows from a `name,date` CSV.
pub fn load_releases(config: &str) -> Result<Vec<ReleaseWindow>, SlicingError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(config.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| SlicingError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["name", "date"] {
        return Err(SlicingError::Csv(format!(
            "expected header \"name,date\", found {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut windows: Vec<ReleaseWindow> = Vec::new();
    let mut names = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| SlicingError::Csv(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let (name, date) = (&row[0], &row[1]);
        if !valid_name(name) {
            return Err(SlicingError::Row {
                line,
                reason: format!("unusable release name {name:?}"),
            });
        }
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| SlicingError::Row {
            line,
            reason: format!("invalid date {date:?}"),
        })?;
        let end = release_instant(date);
        let start = windows.last().map(|w| w.end);
        if start.is_some_and(|s| end <= s) {
            return Err(SlicingError::NotAscending { line, date });
        }
        if !names.insert(name.to_string()) {
            return Err(SlicingError::DuplicateName {
                line,
                name: name.to_string(),
            });
        }
        windows.push(ReleaseWindow {
            name: name.to_string(),
            start,
            end,
        });
    }
    if windows.is_empty() {
        return Err(SlicingError::Empty);
    }
    Ok(windows)
}

/// Finds the window whose `(start, end]` contains `t`.
pub fn assign_release(t: DateTime<Utc>, windows: &[ReleaseWindow]) -> Assignment<'_> {
    let idx = windows.partition_point(|w| w.end < t);
    match windows.get(idx) {
        Some(w) => Assignment::Window(w),
        None => Assignment::PostRelease,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    const OPENSTACK: &str = "name,date\n\
        Austin,2010-10-21\nBexar,2011-02-03\nCactus,2011-04-15\nDiablo,2011-09-22\n\
        Essex,2012-04-05\nFolsom,2012-09-27\nGrizzly,2013-04-04\nHavana,2013-10-17\n\
        Icehouse,2014-04-17\n";

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn two_rows_build_adjacent_windows() {
        let w = load_releases("name,date\nAustin,2010-10-21\nBexar,2011-02-03\n").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].start, None);
        assert_eq!(w[0].end, release_instant(day(2010, 10, 21)));
        assert_eq!(w[1].start, Some(w[0].end));
        assert_eq!(
            w[1].end,
            Utc.with_ymd_and_hms(2011, 2, 3, 23, 59, 59).unwrap()
        );
    }

    #[test]
    fn single_release() {
        let w = load_releases("name,date\nAustin,2010-10-21\n").unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].name, "Austin");
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            load_releases("name,date\nBexar,2011-02-03\nAustin,2010-10-21\n"),
            Err(SlicingError::NotAscending { line: 3, .. })
        ));
        assert!(matches!(
            load_releases("name,date\nA,2011-02-03\nA,2011-02-04\n"),
            Err(SlicingError::DuplicateName { .. })
        ));
        assert!(matches!(
            load_releases("name,date\nA,2011-02-03\nB,2011-02-03\n"),
            Err(SlicingError::NotAscending { .. })
        ));
        assert_eq!(load_releases("name,date\n"), Err(SlicingError::Empty));
        assert!(matches!(
            load_releases("release,when\nA,2011-02-03\n"),
            Err(SlicingError::Csv(_))
        ));
        assert!(matches!(
            load_releases("name,date\nA,Feb 3\n"),
            Err(SlicingError::Row { .. })
        ));
        assert!(matches!(
            load_releases("name,date\na/b,2011-02-03\n"),
            Err(SlicingError::Row { .. })
        ));
    }

    #[test]
    fn assigns_openstack_dates() {
        let w = load_releases(OPENSTACK).unwrap();
        let name = |t| match assign_release(t, &w) {
            Assignment::Window(w) => w.name.as_str(),
            Assignment::PostRelease => POST_RELEASE,
        };
        assert_eq!(
            name(Utc.with_ymd_and_hms(2011, 3, 1, 0, 0, 0).unwrap()),
            "Cactus"
        );
        assert_eq!(name(release_instant(day(2011, 2, 3))), "Bexar");
        assert_eq!(
            name(Utc.with_ymd_and_hms(2011, 2, 4, 0, 0, 0).unwrap()),
            "Cactus"
        );
        assert_eq!(
            name(Utc.with_ymd_and_hms(2009, 1, 1, 0, 0, 0).unwrap()),
            "Austin"
        );
        assert_eq!(
            name(Utc.with_ymd_and_hms(2014, 5, 1, 0, 0, 0).unwrap()),
            POST_RELEASE
        );
    }

    #[test]
    fn assignment_agrees_with_contains() {
        let w = load_releases(OPENSTACK).unwrap();
        let first = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
        for hours in (0..40_000).step_by(7) {
            let t = first + chrono::Duration::hours(hours);
            let hits: Vec<_> = w.iter().filter(|win| win.contains(t)).collect();
            match assign_release(t, &w) {
                Assignment::Window(win) => assert_eq!(hits, vec![win]),
                Assignment::PostRelease => assert!(hits.is_empty() && t > w.last().unwrap().end),
            }
        }
    }
}
