//! Load, filter, split, and persist the method/comment corpus.
//!
//! Corpus files are UTF-8 JSON lines, one object per line with keys
//! `id`, `code`, `comment`, and an optional `split`.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::java;
use crate::textprep::subtoken_split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One Java method paired with its reference comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(rename = "code")]
    pub code_text: String,
    #[serde(rename = "comment")]
    pub comment_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// A malformed input line, reported but skipped.
#[derive(Debug, Clone, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub records: Vec<CorpusRecord>,
    pub errors: Vec<LineError>,
}

/// Per-split retention counts after filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub unsplit: usize,
    pub filtered_out: usize,
    pub filtered_too_long: usize,
    pub filtered_unparseable: usize,
}

impl CorpusStats {
    pub fn retained(&self) -> usize {
        self.train + self.validation + self.test + self.unsplit
    }
}

/// Reads a corpus file in order, collecting malformed lines instead of
/// aborting. A duplicate id or an empty code/comment field counts as
/// malformed.
pub fn load_corpus(path: &Path) -> Result<LoadOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusRecord>(&line) {
            Ok(record) => {
                if record.code_text.trim().is_empty() || record.comment_text.trim().is_empty() {
                    errors.push(LineError {
                        line: line_no,
                        message: format!("record {}: empty code or comment", record.id),
                    });
                } else if !seen_ids.insert(record.id.clone()) {
                    errors.push(LineError {
                        line: line_no,
                        message: format!("duplicate id {}", record.id),
                    });
                } else {
                    records.push(record);
                }
            }
            Err(e) => errors.push(LineError {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok(LoadOutcome { records, errors })
}

/// Writes records as JSON lines; `load_corpus` on the result reproduces
/// them field for field.
pub fn write_corpus(records: &[CorpusRecord], path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for record in records {
        let line = serde_json::to_string(record).expect("corpus record serializes");
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Keeps records whose sub-token lengths fit the caps and, when asked,
/// whose method parses. Length is checked first, so a record can be
/// counted as too long without ever being parsed.
pub fn filter_corpus(
    records: Vec<CorpusRecord>,
    max_code_tokens: usize,
    max_comment_tokens: usize,
    require_parseable: bool,
) -> (Vec<CorpusRecord>, CorpusStats) {
    let mut stats = CorpusStats::default();
    let mut kept = Vec::new();

    for record in records {
        let code_len = subtoken_split(&record.code_text).len();
        let comment_len = subtoken_split(&record.comment_text).len();
        if code_len > max_code_tokens || comment_len > max_comment_tokens {
            stats.filtered_out += 1;
            stats.filtered_too_long += 1;
            continue;
        }
        if require_parseable && java::parse_method_text(&record.code_text).is_err() {
            stats.filtered_out += 1;
            stats.filtered_unparseable += 1;
            continue;
        }
        match record.split {
            Some(Split::Train) => stats.train += 1,
            Some(Split::Validation) => stats.validation += 1,
            Some(Split::Test) => stats.test += 1,
            None => stats.unsplit += 1,
        }
        kept.push(record);
    }
    (kept, stats)
}

/// Assigns train/validation/test 90/5/5 to records without a split,
/// deterministically from a hash of the record id and the seed.
pub fn assign_splits(records: &mut [CorpusRecord], seed: u64) {
    for record in records {
        if record.split.is_none() {
            let bucket = fnv1a(record.id.as_bytes(), seed) % 100;
            record.split = Some(match bucket {
                0..=89 => Split::Train,
                90..=94 => Split::Validation,
                _ => Split::Test,
            });
        }
    }
}

/// FNV-1a, seed-mixed; stable across platforms unlike the std hasher.
fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut hash = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x9e3779b97f4a7c15);
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, code: &str, comment: &str) -> CorpusRecord {
        CorpusRecord {
            id: id.to_string(),
            code_text: code.to_string(),
            comment_text: comment.to_string(),
            split: None,
        }
    }

    fn load_str(contents: &str) -> LoadOutcome {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, contents).unwrap();
        load_corpus(&path).unwrap()
    }

    #[test]
    fn loads_well_formed_lines() {
        let out = load_str(concat!(
            "{\"id\":\"a\",\"code\":\"void f() {}\",\"comment\":\"does a\"}\n",
            "{\"id\":\"b\",\"code\":\"void g() {}\",\"comment\":\"does b\",\"split\":\"train\"}\n",
            "{\"id\":\"c\",\"code\":\"void h() {}\",\"comment\":\"does c\"}\n",
        ));
        assert_eq!(out.records.len(), 3);
        assert!(out.errors.is_empty());
        assert_eq!(out.records[1].split, Some(Split::Train));
    }

    #[test]
    fn reports_malformed_line_with_number() {
        let out = load_str(concat!(
            "{\"id\":\"a\",\"code\":\"void f() {}\",\"comment\":\"does a\"}\n",
            "not json\n",
            "{\"id\":\"c\",\"code\":\"void h() {}\",\"comment\":\"does c\"}\n",
        ));
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 2);
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(load_corpus(Path::new("/nonexistent/corpus.jsonl")).is_err());
    }

    #[test]
    fn duplicate_ids_and_empty_fields_are_reported() {
        let out = load_str(concat!(
            "{\"id\":\"a\",\"code\":\"void f() {}\",\"comment\":\"x\"}\n",
            "{\"id\":\"a\",\"code\":\"void g() {}\",\"comment\":\"y\"}\n",
            "{\"id\":\"b\",\"code\":\"  \",\"comment\":\"y\"}\n",
        ));
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.errors.len(), 2);
    }

    #[test]
    fn write_then_load_round_trips() {
        let records = vec![
            record("a", "void f() {}", "first"),
            record("b", "int g(int x) { return x; }", "second"),
            CorpusRecord {
                split: Some(Split::Test),
                ..record("c", "void h() {}", "third")
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        write_corpus(&records, &path).unwrap();
        let out = load_corpus(&path).unwrap();
        assert!(out.errors.is_empty());
        assert_eq!(out.records, records);
    }

    #[test]
    fn empty_list_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_corpus(&[], &path).unwrap();
        let out = load_corpus(&path).unwrap();
        assert!(out.records.is_empty());
    }

    #[test]
    fn filter_removes_long_code() {
        let long_code: String = (0..300).map(|i| format!("tok{i} ")).collect();
        let records = vec![record("long", &long_code, "short comment"), record("ok", "void f() {}", "fine")];
        let (kept, stats) = filter_corpus(records, 256, 64, false);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "ok");
        assert_eq!(stats.filtered_out, 1);
        assert_eq!(stats.filtered_too_long, 1);
    }

    #[test]
    fn filter_keeps_short_records() {
        let records = vec![record("a", "int add(int x) { return x; }", "adds one")];
        let (kept, stats) = filter_corpus(records, 256, 64, true);
        assert_eq!(kept.len(), 1);
        assert_eq!(stats.filtered_out, 0);
        assert_eq!(stats.retained(), 1);
    }

    #[test]
    fn filter_removes_unparseable_when_required() {
        let records = vec![record("bad", "this is not a java method", "comment")];
        let (kept, stats) = filter_corpus(records, 256, 64, true);
        assert!(kept.is_empty());
        assert_eq!(stats.filtered_unparseable, 1);
    }

    #[test]
    fn filter_is_idempotent() {
        let long_code: String = (0..300).map(|i| format!("tok{i} ")).collect();
        let records = vec![
            record("a", "void f() {}", "fine"),
            record("b", &long_code, "fine"),
            record("c", "not java", "fine"),
        ];
        let (kept, _) = filter_corpus(records, 256, 64, true);
        let again = kept.clone();
        let (kept2, stats2) = filter_corpus(again, 256, 64, true);
        assert_eq!(kept, kept2);
        assert_eq!(stats2.filtered_out, 0);
    }

    #[test]
    fn split_assignment_is_deterministic_and_roughly_90_5_5() {
        let mut records: Vec<CorpusRecord> = (0..2000)
            .map(|i| record(&format!("rec-{i}"), "void f() {}", "c"))
            .collect();
        assign_splits(&mut records, 7);
        let train = records.iter().filter(|r| r.split == Some(Split::Train)).count();
        let val = records
            .iter()
            .filter(|r| r.split == Some(Split::Validation))
            .count();
        let test = records.iter().filter(|r| r.split == Some(Split::Test)).count();
        assert_eq!(train + val + test, 2000);
        assert!((1700..1900).contains(&train), "train {train}");
        assert!((50..160).contains(&val), "val {val}");
        assert!((50..160).contains(&test), "test {test}");

        let mut again: Vec<CorpusRecord> = (0..2000)
            .map(|i| record(&format!("rec-{i}"), "void f() {}", "c"))
            .collect();
        assign_splits(&mut again, 7);
        assert_eq!(records, again);
    }

    #[test]
    fn presplit_records_are_untouched() {
        let mut records = vec![CorpusRecord {
            split: Some(Split::Test),
            ..record("a", "void f() {}", "c")
        }];
        assign_splits(&mut records, 1);
        assert_eq!(records[0].split, Some(Split::Test));
    }
}
