//! Maps derived from a [`CorpusIndex`].
//!
//! Word and category maps are proportions of *tokens*; facet maps are
//! proportions of *users*. States with a zero denominator carry `None`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::index::{CorpusIndex, Counts};
use crate::ingest::{truncate_token, Gender};
use crate::lexicon::Matcher;
use crate::states::{StateId, StateVector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("unknown category {id} in lexicon `{lexicon}`")]
    UnknownCategory { lexicon: String, id: u32 },
    #[error("unknown industry `{0}`")]
    UnknownIndustry(String),
    #[error("invalid facet `{0}` (expected gender=male|female or industry=<label>)")]
    InvalidFacet(String),
    #[error("minimum city count must be at least 1")]
    InvalidThreshold,
}

/// Per-state `numerator / denominator`, `None` where the denominator is 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProportionVector {
    pub values: StateVector<Option<f64>>,
    pub numerators: Counts,
    pub denominators: Counts,
}

impl ProportionVector {
    pub fn new(numerators: Counts, denominators: Counts) -> ProportionVector {
        let values = StateVector(std::array::from_fn(|i| {
            let d = denominators.0[i];
            (d > 0).then(|| numerators.0[i] as f64 / d as f64)
        }));
        ProportionVector {
            values,
            numerators,
            denominators,
        }
    }

    pub fn get(&self, state: StateId) -> Option<f64> {
        self.values[state]
    }
}

/// Relative frequency of `word` among each state's tokens.
pub fn word_map(index: &CorpusIndex, word: &str) -> ProportionVector {
    let folded = word.trim().to_lowercase();
    let (key, _) = truncate_token(&folded);
    let numerators = index.word_counts(key).copied().unwrap_or_default();
    ProportionVector::new(numerators, *index.token_totals())
}

/// Numerators for every category slot of `matcher`, resolved in one pass
/// over the index vocabulary.
pub fn category_numerators(index: &CorpusIndex, matcher: &Matcher) -> Vec<Counts> {
    let slots = matcher.category_count();
    let words: Vec<(&str, &Counts)> = index.vocabulary().collect();
    words
        .par_iter()
        .fold(
            || (vec![Counts::default(); slots], Vec::new()),
            |(mut acc, mut hits), (word, counts)| {
                matcher.match_slots(word, &mut hits);
                for &slot in &hits {
                    acc[slot as usize].add_assign(counts);
                }
                (acc, hits)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![Counts::default(); slots],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.add_assign(y);
                }
                a
            },
        )
}

fn category_slot(matcher: &Matcher, id: u32) -> Result<usize, AnalyticsError> {
    matcher
        .slot_of(id)
        .ok_or_else(|| AnalyticsError::UnknownCategory {
            lexicon: matcher.lexicon_name().to_string(),
            id,
        })
}

/// Share of each state's tokens that fall in category `id`.
pub fn category_map(
    index: &CorpusIndex,
    matcher: &Matcher,
    id: u32,
) -> Result<ProportionVector, AnalyticsError> {
    let slot = category_slot(matcher, id)?;
    let mut numerators = Counts::default();
    let mut hits = Vec::new();
    for (word, counts) in index.vocabulary() {
        matcher.match_slots(word, &mut hits);
        if hits.binary_search(&(slot as u32)).is_ok() {
            numerators.add_assign(counts);
        }
    }
    Ok(ProportionVector::new(numerators, *index.token_totals()))
}

/// Memoizes [`category_numerators`] per (lexicon, vocabulary) fingerprint
/// pair. Safe to fill from several threads; concurrent fills of the same key
/// compute identical values and the last write wins.
type Fingerprints = (u64, u64);

#[derive(Default, Debug)]
pub struct CategoryCache {
    entries: RwLock<HashMap<Fingerprints, Arc<Vec<Counts>>>>,
}

impl CategoryCache {
    pub fn new() -> CategoryCache {
        CategoryCache::default()
    }

    pub fn numerators(&self, index: &CorpusIndex, matcher: &Matcher) -> Arc<Vec<Counts>> {
        let key = (matcher.fingerprint(), index.vocabulary_fingerprint());
        if let Some(hit) = self.entries.read().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let computed = Arc::new(category_numerators(index, matcher));
        self.entries
            .write()
            .unwrap()
            .insert(key, Arc::clone(&computed));
        computed
    }

    pub fn category_map(
        &self,
        index: &CorpusIndex,
        matcher: &Matcher,
        id: u32,
    ) -> Result<ProportionVector, AnalyticsError> {
        let slot = category_slot(matcher, id)?;
        let numerators = self.numerators(index, matcher);
        Ok(ProportionVector::new(
            numerators[slot],
            *index.token_totals(),
        ))
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A user-attribute selector for facet maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Facet {
    Gender(Gender),
    Industry(String),
}

impl Facet {
    /// Builds a facet from a kind (`gender` or `industry`) and a value.
    pub fn new(kind: &str, value: &str) -> Result<Facet, AnalyticsError> {
        let invalid = || AnalyticsError::InvalidFacet(format!("{kind}={value}"));
        match kind.trim().to_ascii_lowercase().as_str() {
            "gender" => Gender::parse(value).map(Facet::Gender).ok_or_else(invalid),
            "industry" => {
                let label = value.trim().to_lowercase();
                if label.is_empty() {
                    Err(invalid())
                } else {
                    Ok(Facet::Industry(label))
                }
            }
            _ => Err(invalid()),
        }
    }
}

impl FromStr for Facet {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Facet, AnalyticsError> {
        let (kind, value) = s
            .split_once('=')
            .ok_or_else(|| AnalyticsError::InvalidFacet(s.to_string()))?;
        Facet::new(kind, value)
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Facet::Gender(g) => write!(f, "gender={g}"),
            Facet::Industry(label) => write!(f, "industry={label}"),
        }
    }
}

/// Share of users matching `facet`. Gender shares use the users who
/// reported a gender as denominator; industry shares use all users.
pub fn facet_map(index: &CorpusIndex, facet: &Facet) -> Result<ProportionVector, AnalyticsError> {
    match facet {
        Facet::Gender(gender) => {
            let g = index.gender_counts();
            let numerators = g.map(|c| match gender {
                Gender::Male => c.male,
                Gender::Female => c.female,
            });
            Ok(ProportionVector::new(numerators, g.map(|c| c.reported)))
        }
        Facet::Industry(label) => {
            let numerators = index
                .industry_counts(label)
                .ok_or_else(|| AnalyticsError::UnknownIndustry(label.clone()))?;
            Ok(ProportionVector::new(*numerators, *index.user_counts()))
        }
    }
}

/// Users per state.
pub fn density_map(index: &CorpusIndex) -> Counts {
    *index.user_counts()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CityDot {
    pub city: String,
    pub state: StateId,
    pub count: u64,
}

/// Cities with at least `min_count` users, by count descending then city
/// name ascending (then state).
pub fn city_density(index: &CorpusIndex, min_count: u64) -> Result<Vec<CityDot>, AnalyticsError> {
    if min_count == 0 {
        return Err(AnalyticsError::InvalidThreshold);
    }
    let mut dots: Vec<CityDot> = index
        .city_counts()
        .filter(|&(_, _, n)| n >= min_count)
        .map(|(city, state, count)| CityDot {
            city: city.to_string(),
            state,
            count,
        })
        .collect();
    dots.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.city.cmp(&b.city))
            .then_with(|| a.state.cmp(&b.state))
    });
    Ok(dots)
}
