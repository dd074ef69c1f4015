//! Score-file and human-rating JSONL, plus id joins between files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ScoreRecord;

/// How many offending ids a join error lists.
pub const MAX_REPORTED_IDS: usize = 10;

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!("duplicate {what} {id:?}")));
        }
    }
    Ok(())
}

/// Parses a score file. Scores must be finite and candidate ids unique.
pub fn parse_scores<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>> {
    let records: Vec<ScoreRecord> = read_jsonl(reader)?;
    if let Some(r) = records.iter().find(|r| !r.score.is_finite()) {
        return Err(Error::Validation(format!("non-finite score for {:?}", r.candidate_id)));
    }
    check_unique(records.iter().map(|r| r.candidate_id.as_str()), "candidate id")?;
    Ok(records)
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    parse_scores(open(path)?)
}

/// Sorts by (context_id, candidate_id) so identical inputs give identical bytes.
pub fn sort_canonical(records: &mut [ScoreRecord]) {
    records.sort_by(|a, b| {
        (a.context_id.as_str(), a.candidate_id.as_str()).cmp(&(b.context_id.as_str(), b.candidate_id.as_str()))
    });
}

/// Serializes records one per line, in the order given.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub context_id: String,
    pub candidate_id: String,
    pub rating: f64,
}

pub fn parse_ratings<R: BufRead>(reader: R) -> Result<Vec<RatingRecord>> {
    let records: Vec<RatingRecord> = read_jsonl(reader)?;
    if let Some(r) = records.iter().find(|r| !r.rating.is_finite()) {
        return Err(Error::Validation(format!("non-finite rating for {:?}", r.candidate_id)));
    }
    check_unique(records.iter().map(|r| r.candidate_id.as_str()), "candidate id")?;
    Ok(records)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    parse_ratings(open(path)?)
}

fn describe(ids: &[&str]) -> String {
    let shown: Vec<String> = ids.iter().take(MAX_REPORTED_IDS).map(|id| format!("{id:?}")).collect();
    let more = ids.len().saturating_sub(MAX_REPORTED_IDS);
    if more > 0 {
        format!("{} (and {more} more)", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

/// Pairs up two id lists exactly. Returns index pairs in `left` order.
///
/// Any id present on one side only is an error listing the first offenders.
pub fn join_ids(left: &[&str], right: &[&str], left_name: &str, right_name: &str) -> Result<Vec<(usize, usize)>> {
    let right_index: HashMap<&str, usize> = right.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let left_set: HashSet<&str> = left.iter().copied().collect();
    let mut only_left: Vec<&str> = left.iter().copied().filter(|id| !right_index.contains_key(id)).collect();
    let mut only_right: Vec<&str> = right.iter().copied().filter(|id| !left_set.contains(id)).collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        only_left.sort_unstable();
        only_right.sort_unstable();
        let mut parts = Vec::new();
        if !only_left.is_empty() {
            parts.push(format!("{} id(s) only in {left_name}: {}", only_left.len(), describe(&only_left)));
        }
        if !only_right.is_empty() {
            parts.push(format!("{} id(s) only in {right_name}: {}", only_right.len(), describe(&only_right)));
        }
        return Err(Error::Validation(format!("join mismatch; {}", parts.join("; "))));
    }
    Ok(left.iter().enumerate().map(|(i, id)| (i, right_index[id])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CandidateType;
    use std::io::Cursor;

    fn rec(ctx: &str, id: &str, score: f64) -> ScoreRecord {
        ScoreRecord {
            context_id: ctx.into(),
            candidate_id: id.into(),
            candidate_type: CandidateType::Positive,
            metric: "bleu1/multi-max".into(),
            score,
        }
    }

    #[test]
    fn score_round_trip_and_sorting() {
        let mut rs = vec![rec("b", "b:pos0", 0.5), rec("a", "a:rand1", 0.25), rec("a", "a:pos0", 1.0)];
        sort_canonical(&mut rs);
        let ids: Vec<&str> = rs.iter().map(|r| r.candidate_id.as_str()).collect();
        assert_eq!(ids, ["a:pos0", "a:rand1", "b:pos0"]);
        let text = to_jsonl(&rs);
        assert!(text.starts_with(r#"{"context_id":"a","candidate_id":"a:pos0","candidate_type":"positive","metric":"bleu1/multi-max","score":1.0}"#));
        assert_eq!(parse_scores(Cursor::new(text)).unwrap(), rs);
    }

    #[test]
    fn score_file_rejects_duplicates_and_garbage() {
        let text = to_jsonl(&[rec("a", "x", 0.1), rec("a", "x", 0.2)]);
        assert!(parse_scores(Cursor::new(text)).is_err());
        let err = parse_scores(Cursor::new("{\"context_id\":\"a\"}\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn ratings_parse() {
        let text = "{\"context_id\":\"a\",\"candidate_id\":\"a:pos0\",\"rating\":2.5}\n\n";
        let rs = parse_ratings(Cursor::new(text)).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].rating, 2.5);
    }

    #[test]
    fn join_reports_offenders() {
        assert_eq!(join_ids(&["a", "b"], &["b", "a"], "l", "r").unwrap(), [(0, 1), (1, 0)]);
        let left: Vec<String> = (0..15).map(|i| format!("id{i:02}")).collect();
        let left: Vec<&str> = left.iter().map(String::as_str).collect();
        let msg = join_ids(&left, &["id00", "zz"], "scores", "ratings").unwrap_err().to_string();
        assert!(msg.contains("14 id(s) only in scores"), "{msg}");
        assert!(msg.contains("(and 4 more)"), "{msg}");
        assert!(msg.contains("\"zz\""), "{msg}");
        assert!(!msg.contains("id11"), "{msg}");
    }
}
