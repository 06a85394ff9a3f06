//! Line-delimited JSON corpus records.
//!
//! `profiles.jsonl`: `{"user_id", "location", "gender"?, "industry"?, "blogs": [..]}`
//! `posts.jsonl`: `{"blog_id", "post_id", "html"}`

use std::io::BufRead;
use std::marker::PhantomData;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

/// Accepts either a JSON string or a JSON integer for opaque identifiers.
fn opaque_id<'de, D: Deserializer<'de>>(deserializer: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Str(String),
        Int(i64),
    }
    Ok(match Id::deserialize(deserializer)? {
        Id::Str(s) => s,
        Id::Int(i) => i.to_string(),
    })
}

fn opaque_ids<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    struct Wrapped(#[serde(deserialize_with = "opaque_id")] String);
    Ok(Vec::<Wrapped>::deserialize(deserializer)?
        .into_iter()
        .map(|w| w.0)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawProfileRecord {
    #[serde(deserialize_with = "opaque_id")]
    pub user_id: String,
    pub location: String,
    #[serde(default)]
    pub gender: Option<String>,
    #[serde(default)]
    pub industry: Option<String>,
    #[serde(default, deserialize_with = "opaque_ids")]
    pub blogs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    #[serde(deserialize_with = "opaque_id")]
    pub blog_id: String,
    #[serde(deserialize_with = "opaque_id")]
    pub post_id: String,
    pub html: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedPost {
    pub blog_id: String,
    pub post_id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Record types that can check their own invariants after parsing.
pub trait Validate {
    fn validate(&self) -> Result<(), String>;
}

impl Validate for RawProfileRecord {
    fn validate(&self) -> Result<(), String> {
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        Ok(())
    }
}

impl Validate for RawPost {
    fn validate(&self) -> Result<(), String> {
        if self.blog_id.is_empty() {
            return Err("empty blog_id".into());
        }
        Ok(())
    }
}

/// Iterator over the records of a JSONL stream. Blank lines are skipped;
/// the line number in errors is 1-based.
pub struct JsonLines<R, T> {
    reader: R,
    line: usize,
    buf: String,
    _marker: PhantomData<T>,
}

impl<R: BufRead, T> JsonLines<R, T> {
    pub fn new(reader: R) -> Self {
        JsonLines {
            reader,
            line: 0,
            buf: String::new(),
            _marker: PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned + Validate> Iterator for JsonLines<R, T> {
    type Item = Result<T, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            let line = self.line;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => return Some(Err(RecordError::Io { line, source })),
            }
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<T>(text)
                .map_err(|source| RecordError::Json { line, source })
                .and_then(|record| {
                    record
                        .validate()
                        .map(|()| record)
                        .map_err(|message| RecordError::Invalid { line, message })
                });
            return Some(parsed);
        }
    }
}

pub fn read_profiles<R: BufRead>(reader: R) -> JsonLines<R, RawProfileRecord> {
    JsonLines::new(reader)
}

pub fn read_posts<R: BufRead>(reader: R) -> JsonLines<R, RawPost> {
    JsonLines::new(reader)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_profiles_with_optional_fields() {
        let input = r#"{"user_id":"u1","location":"TX","blogs":["b1"]}

{"user_id":7,"location":"Chicago, IL","gender":"male","industry":"Arts","blogs":[3,"b4"]}
"#;
        let records: Vec<_> = read_profiles(input.as_bytes())
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].gender, None);
        assert_eq!(records[1].user_id, "7");
        assert_eq!(records[1].blogs, vec!["3", "b4"]);
    }

    #[test]
    fn reports_line_numbers() {
        let input = "{\"blog_id\":\"b\",\"post_id\":\"1\",\"html\":\"x\"}\n{oops}\n";
        let mut it = read_posts(input.as_bytes());
        assert!(it.next().unwrap().is_ok());
        match it.next().unwrap() {
            Err(RecordError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_user_id() {
        let input = r#"{"user_id":"","location":"TX","blogs":[]}"#;
        let err = read_profiles(input.as_bytes()).next().unwrap().unwrap_err();
        assert!(matches!(err, RecordError::Invalid { line: 1, .. }));
    }
}
