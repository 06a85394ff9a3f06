//! Category lexicons and their compiled matcher.
//!
//! Two source formats are supported:
//!
//! * `.dic` files: a `%`-delimited header of `id<TAB>name` lines followed by
//!   `stem<TAB>id[<TAB>id...]` entries. Runs of spaces work as separators too.
//! * theme lists: one entry per line, `#` starts a comment, yielding a single
//!   category.
//!
//! In both, a trailing `*` turns an entry into a prefix pattern and stems are
//! case-folded. Multi-word entries and infix wildcards are rejected.

mod matcher;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::Serialize;

pub use matcher::Matcher;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Exact,
    Prefix,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    stem: String,
    kind: PatternKind,
}

impl Pattern {
    pub fn exact(stem: &str) -> Pattern {
        Pattern {
            stem: stem.to_lowercase(),
            kind: PatternKind::Exact,
        }
    }

    pub fn prefix(stem: &str) -> Pattern {
        Pattern {
            stem: stem.to_lowercase(),
            kind: PatternKind::Prefix,
        }
    }

    /// Parses a single dictionary entry such as `dollar` or `remunerat*`.
    pub fn parse(entry: &str) -> Result<Pattern, PatternError> {
        let entry = entry.trim();
        if entry.chars().any(char::is_whitespace) {
            return Err(PatternError::MultiWord(entry.to_string()));
        }
        let (stem, kind) = match entry.strip_suffix('*') {
            Some(stem) => (stem, PatternKind::Prefix),
            None => (entry, PatternKind::Exact),
        };
        if stem.is_empty() {
            return Err(PatternError::Empty);
        }
        if stem.contains('*') {
            return Err(PatternError::InfixWildcard(entry.to_string()));
        }
        Ok(Pattern {
            stem: stem.to_lowercase(),
            kind,
        })
    }

    pub fn stem(&self) -> &str {
        &self.stem
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn matches(&self, token: &str) -> bool {
        match self.kind {
            PatternKind::Exact => token == self.stem,
            PatternKind::Prefix => token.starts_with(&self.stem),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem)?;
        if self.kind == PatternKind::Prefix {
            f.write_str("*")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("empty entry")]
    Empty,
    #[error("multi-word entry `{0}`")]
    MultiWord(String),
    #[error("only trailing `*` wildcards are supported: `{0}`")]
    InfixWildcard(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: PatternError,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate category id {id}")]
    DuplicateCategoryId { line: usize, id: u32 },
    #[error("duplicate category name `{0}`")]
    DuplicateCategoryName(String),
    #[error("line {line}: unknown category id {id}")]
    UnknownCategory { line: usize, id: u32 },
    #[error("category `{0}` has no entries")]
    EmptyCategory(String),
    #[error("lexicon has no entries")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub id: u32,
    pub name: String,
    pub patterns: BTreeSet<Pattern>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    categories: Vec<Category>,
}

impl Lexicon {
    /// Assembles a lexicon, checking that ids and names are unique and no
    /// category is empty. Categories are kept in id order.
    pub fn new(name: &str, mut categories: Vec<Category>) -> Result<Lexicon, LexiconError> {
        if categories.is_empty() {
            return Err(LexiconError::Empty);
        }
        categories.sort_by_key(|c| c.id);
        let mut names = BTreeSet::new();
        for pair in categories.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(LexiconError::DuplicateCategoryId {
                    line: 0,
                    id: pair[0].id,
                });
            }
        }
        for category in &categories {
            if category.patterns.is_empty() {
                return Err(LexiconError::EmptyCategory(category.name.clone()));
            }
            if !names.insert(category.name.as_str()) {
                return Err(LexiconError::DuplicateCategoryName(category.name.clone()));
            }
        }
        Ok(Lexicon {
            name: name.to_string(),
            categories,
        })
    }

    /// Builds a lexicon from theme-list categories, numbering them from 1 in
    /// the given order.
    pub fn from_themes(name: &str, themes: Vec<Category>) -> Result<Lexicon, LexiconError> {
        let categories = themes
            .into_iter()
            .enumerate()
            .map(|(i, c)| Category {
                id: i as u32 + 1,
                ..c
            })
            .collect();
        Lexicon::new(name, categories)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category(&self, id: u32) -> Option<&Category> {
        self.categories
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.categories[i])
    }

    pub fn category_by_name(&self, name: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Resolves a category by exact name, then case-insensitive name, then
    /// numeric id.
    pub fn resolve(&self, key: &str) -> Option<&Category> {
        self.category_by_name(key)
            .or_else(|| {
                self.categories
                    .iter()
                    .find(|c| c.name.eq_ignore_ascii_case(key))
            })
            .or_else(|| key.parse().ok().and_then(|id| self.category(id)))
    }

    /// Serializes back to `.dic` text. Entries are grouped per pattern and
    /// emitted in pattern order.
    pub fn to_dic(&self) -> String {
        let mut out = String::from("%\n");
        for c in &self.categories {
            out.push_str(&format!("{}\t{}\n", c.id, c.name));
        }
        out.push_str("%\n");
        let mut entries: BTreeMap<&Pattern, Vec<u32>> = BTreeMap::new();
        for c in &self.categories {
            for p in &c.patterns {
                entries.entry(p).or_default().push(c.id);
            }
        }
        for (pattern, ids) in entries {
            out.push_str(&pattern.to_string());
            for id in ids {
                out.push('\t');
                out.push_str(&id.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Stable content hash over the name and every category.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        self.name.hash(&mut hasher);
        for c in &self.categories {
            c.id.hash(&mut hasher);
            c.name.hash(&mut hasher);
            c.patterns.hash(&mut hasher);
        }
        hasher.finish()
    }

    pub fn compile(&self) -> Matcher {
        Matcher::compile(self)
    }
}

fn split_fields(line: &str) -> (Vec<&str>, bool) {
    if line.contains('\t') {
        let fields = line
            .split('\t')
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .collect();
        (fields, true)
    } else {
        (line.split_whitespace().collect(), false)
    }
}

/// Parses LIWC-style `.dic` text.
pub fn parse_dic(name: &str, text: &str) -> Result<Lexicon, LexiconError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut saw_open = false;
    for (line, content) in lines.by_ref() {
        if content.is_empty() {
            continue;
        }
        if content == "%" {
            saw_open = true;
            break;
        }
        return Err(LexiconError::Format {
            line,
            message: "expected `%` opening the category header".into(),
        });
    }
    if !saw_open {
        return Err(LexiconError::Empty);
    }

    let mut header: Vec<(u32, String)> = Vec::new();
    let mut closed = false;
    for (line, content) in lines.by_ref() {
        if content.is_empty() {
            continue;
        }
        if content == "%" {
            closed = true;
            break;
        }
        let (id_text, cat_name) = content
            .split_once(char::is_whitespace)
            .map(|(a, b)| (a, b.trim()))
            .unwrap_or((content, ""));
        let id: u32 = id_text.parse().map_err(|_| LexiconError::Format {
            line,
            message: format!("bad category id `{id_text}`"),
        })?;
        if cat_name.is_empty() {
            return Err(LexiconError::Format {
                line,
                message: format!("category {id} has no name"),
            });
        }
        if header.iter().any(|(existing, _)| *existing == id) {
            return Err(LexiconError::DuplicateCategoryId { line, id });
        }
        header.push((id, cat_name.to_string()));
    }
    if !closed {
        return Err(LexiconError::Format {
            line: text.lines().count(),
            message: "unterminated category header".into(),
        });
    }

    let mut patterns: BTreeMap<u32, BTreeSet<Pattern>> = header
        .iter()
        .map(|(id, _)| (*id, BTreeSet::new()))
        .collect();
    for (line, content) in lines {
        if content.is_empty() {
            continue;
        }
        let (fields, tabbed) = split_fields(content);
        let (entry, ids) = fields.split_first().expect("non-empty line has a field");
        if ids.is_empty() {
            return Err(LexiconError::Format {
                line,
                message: format!("entry `{entry}` lists no categories"),
            });
        }
        let pattern =
            Pattern::parse(entry).map_err(|source| LexiconError::Pattern { line, source })?;
        for id_text in ids {
            let id: u32 = match id_text.parse() {
                Ok(id) => id,
                Err(_) if !tabbed => {
                    return Err(LexiconError::Pattern {
                        line,
                        source: PatternError::MultiWord(content.to_string()),
                    })
                }
                Err(_) => {
                    return Err(LexiconError::Format {
                        line,
                        message: format!("bad category id `{id_text}`"),
                    })
                }
            };
            patterns
                .get_mut(&id)
                .ok_or(LexiconError::UnknownCategory { line, id })?
                .insert(pattern.clone());
        }
    }

    let categories = header
        .into_iter()
        .map(|(id, name)| Category {
            id,
            name,
            patterns: patterns.remove(&id).unwrap_or_default(),
        })
        .collect();
    Lexicon::new(name, categories)
}

/// Parses a one-entry-per-line theme list into a single category (id 0
/// until placed in a lexicon).
pub fn parse_theme_list(text: &str, name: &str) -> Result<Category, LexiconError> {
    let mut patterns = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let pattern = Pattern::parse(content).map_err(|source| LexiconError::Pattern {
            line: i + 1,
            source,
        })?;
        patterns.insert(pattern);
    }
    if patterns.is_empty() {
        return Err(LexiconError::EmptyCategory(name.to_string()));
    }
    Ok(Category {
        id: 0,
        name: name.to_string(),
        patterns,
    })
}
