//! Lexicons loaded from disk, addressed by name.
//!
//! A lexicon directory holds `<name>.dic` files and `<name>/` subdirectories
//! of `<category>.txt` theme lists. Anything else is ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use geolex_core::lexicon::{parse_dic, parse_theme_list, Lexicon, Matcher};

#[derive(Clone)]
pub struct LoadedLexicon {
    pub lexicon: Arc<Lexicon>,
    pub matcher: Arc<Matcher>,
}

impl LoadedLexicon {
    pub fn new(lexicon: Lexicon) -> LoadedLexicon {
        let matcher = Arc::new(lexicon.compile());
        LoadedLexicon {
            lexicon: Arc::new(lexicon),
            matcher,
        }
    }
}

#[derive(Clone, Default)]
pub struct Catalog {
    lexicons: BTreeMap<String, LoadedLexicon>,
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("{}: file name is not UTF-8", path.display()))
}

/// Reads one `.dic` file or one directory of theme lists.
pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let name = stem(path)?;
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
        files.sort();
        let mut themes = Vec::with_capacity(files.len());
        for file in files {
            let text =
                fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let theme = parse_theme_list(&text, &stem(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            themes.push(theme);
        }
        Lexicon::from_themes(&name, themes).with_context(|| format!("loading {}", path.display()))
    } else {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        parse_dic(&name, &text).with_context(|| format!("parsing {}", path.display()))
    }
}

impl Catalog {
    pub fn from_lexicons(lexicons: impl IntoIterator<Item = Lexicon>) -> Result<Catalog> {
        let mut catalog = Catalog::default();
        for lexicon in lexicons {
            let name = lexicon.name().to_string();
            if catalog
                .lexicons
                .insert(name.clone(), LoadedLexicon::new(lexicon))
                .is_some()
            {
                bail!("duplicate lexicon name `{name}`");
            }
        }
        Ok(catalog)
    }

    pub fn load_dir(dir: &Path) -> Result<Catalog> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .with_context(|| format!("reading lexicon directory {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        paths.sort();
        let mut lexicons = Vec::new();
        for path in paths {
            let wanted = path.is_dir() || path.extension().is_some_and(|e| e == "dic");
            if wanted {
                lexicons.push(load_lexicon(&path)?);
            }
        }
        Catalog::from_lexicons(lexicons)
    }

    pub fn get(&self, name: &str) -> Option<&LoadedLexicon> {
        self.lexicons.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lexicons.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LoadedLexicon> {
        self.lexicons.values()
    }

    pub fn len(&self) -> usize {
        self.lexicons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicons.is_empty()
    }
}

/// A `lexicon:category` reference as written on the command line and in
/// query strings. The category part may be a name or a numeric id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryRef {
    pub lexicon: String,
    pub category: String,
}

impl std::str::FromStr for CategoryRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((l, c)) if !l.trim().is_empty() && !c.trim().is_empty() => Ok(CategoryRef {
                lexicon: l.trim().to_string(),
                category: c.trim().to_string(),
            }),
            _ => Err(format!("expected LEXICON:CATEGORY, got `{s}`")),
        }
    }
}

impl std::fmt::Display for CategoryRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.lexicon, self.category)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LookupError {
    #[error("unknown lexicon `{0}`")]
    UnknownLexicon(String),
    #[error("lexicon `{lexicon}` has no category `{category}`")]
    UnknownCategory { lexicon: String, category: String },
}

impl Catalog {
    /// Finds the lexicon and category id named by `r`.
    pub fn resolve(&self, r: &CategoryRef) -> Result<(&LoadedLexicon, u32, String), LookupError> {
        let loaded = self
            .get(&r.lexicon)
            .ok_or_else(|| LookupError::UnknownLexicon(r.lexicon.clone()))?;
        let category =
            loaded
                .lexicon
                .resolve(&r.category)
                .ok_or_else(|| LookupError::UnknownCategory {
                    lexicon: r.lexicon.clone(),
                    category: r.category.clone(),
                })?;
        Ok((loaded, category.id, category.name.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_dic_and_theme_dirs() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("liwc.dic"),
            "%\n1\tmoney\n2\twork\n%\ndollar\t1\nwork*\t2\n",
        )
        .unwrap();
        fs::create_dir(dir.path().join("values")).unwrap();
        fs::write(dir.path().join("values/religion.txt"), "god\nchurch\n").unwrap();
        fs::write(
            dir.path().join("values/hard_work.txt"),
            "# comment\nwork*\n",
        )
        .unwrap();
        fs::write(dir.path().join("README"), "ignored").unwrap();

        let catalog = Catalog::load_dir(dir.path()).unwrap();
        assert_eq!(catalog.names().collect::<Vec<_>>(), ["liwc", "values"]);
        let values = &catalog.get("values").unwrap().lexicon;
        let names: Vec<_> = values
            .categories()
            .iter()
            .map(|c| (c.id, c.name.as_str()))
            .collect();
        assert_eq!(names, [(1, "hard_work"), (2, "religion")]);

        let r: CategoryRef = "liwc:Money".parse().unwrap();
        let (_, id, name) = catalog.resolve(&r).unwrap();
        assert_eq!((id, name.as_str()), (1, "money"));
        assert!(matches!(
            catalog.resolve(&"nope:x".parse().unwrap()),
            Err(LookupError::UnknownLexicon(_))
        ));
        assert!(matches!(
            catalog.resolve(&"liwc:x".parse().unwrap()),
            Err(LookupError::UnknownCategory { .. })
        ));
    }

    #[test]
    fn category_ref_syntax() {
        assert!("liwc".parse::<CategoryRef>().is_err());
        assert!(":x".parse::<CategoryRef>().is_err());
        assert!("a:".parse::<CategoryRef>().is_err());
        let r: CategoryRef = "liwc:12".parse().unwrap();
        assert_eq!(r.to_string(), "liwc:12");
    }

    #[test]
    fn bad_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.dic"), "no header\n").unwrap();
        assert!(Catalog::load_dir(dir.path()).is_err());
        assert!(Catalog::load_dir(&dir.path().join("missing")).is_err());
    }
}
