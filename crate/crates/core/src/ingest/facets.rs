use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::location::{extract_city, normalize_state};
use super::records::RawProfileRecord;
use crate::states::StateId;

/// Self-reported gender. The source profile field is binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn parse(text: &str) -> Option<Gender> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("male") {
            Some(Gender::Male)
        } else if text.eq_ignore_ascii_case("female") {
            Some(Gender::Female)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Industry values offered by the blogging platform's profile form.
const DEFAULT_INDUSTRIES: &[&str] = &[
    "accounting",
    "advertising",
    "agriculture",
    "architecture",
    "arts",
    "automotive",
    "banking",
    "biotech",
    "business services",
    "chemicals",
    "communications-media",
    "construction",
    "consulting",
    "education",
    "engineering",
    "environment",
    "fashion",
    "government",
    "human resources",
    "internet",
    "investment banking",
    "law",
    "law enforcement-security",
    "manufacturing",
    "maritime",
    "marketing",
    "military",
    "museums-libraries",
    "non-profit",
    "publishing",
    "real estate",
    "religion",
    "science",
    "sports-recreation",
    "student",
    "technology",
    "telecommunications",
    "tourism",
    "transportation",
];

/// Closed set of recognised industry labels. Labels outside the set are kept
/// under an `other:` prefix rather than dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndustryLabels {
    labels: BTreeSet<String>,
}

impl Default for IndustryLabels {
    fn default() -> Self {
        IndustryLabels {
            labels: DEFAULT_INDUSTRIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl IndustryLabels {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        IndustryLabels {
            labels: labels
                .into_iter()
                .map(|s| s.as_ref().trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    /// One label per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        IndustryLabels::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn normalize(&self, text: &str) -> Option<String> {
        let label = text.trim().to_lowercase();
        if label.is_empty() {
            None
        } else if self.labels.contains(&label) {
            Some(label)
        } else {
            Some(format!("other:{label}"))
        }
    }
}

/// A blogger with a resolved state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub user_id: String,
    pub state: StateId,
    pub city: Option<String>,
    pub gender: Option<Gender>,
    pub industry: Option<String>,
    pub blog_ids: Vec<String>,
}

/// A profile dropped during normalization, kept for audit logs.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("profile `{user_id}`: location `{location_text}` does not resolve to a U.S. state")]
pub struct Rejection {
    pub user_id: String,
    pub location_text: String,
}

pub fn normalize_facets(
    raw: &RawProfileRecord,
    industries: &IndustryLabels,
) -> Result<Profile, Rejection> {
    let state = normalize_state(&raw.location).ok_or_else(|| Rejection {
        user_id: raw.user_id.clone(),
        location_text: raw.location.clone(),
    })?;
    let mut seen = BTreeSet::new();
    let blog_ids = raw
        .blogs
        .iter()
        .filter(|b| seen.insert(b.as_str()))
        .cloned()
        .collect();
    Ok(Profile {
        user_id: raw.user_id.clone(),
        state,
        city: extract_city(&raw.location, state),
        gender: raw.gender.as_deref().and_then(Gender::parse),
        industry: raw
            .industry
            .as_deref()
            .and_then(|i| industries.normalize(i)),
        blog_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(location: &str, gender: Option<&str>, industry: Option<&str>) -> RawProfileRecord {
        RawProfileRecord {
            user_id: "u1".into(),
            location: location.into(),
            gender: gender.map(Into::into),
            industry: industry.map(Into::into),
            blogs: vec!["b1".into(), "b2".into(), "b1".into()],
        }
    }

    #[test]
    fn gender_is_case_folded() {
        let labels = IndustryLabels::default();
        let p = normalize_facets(&raw("TX", Some("FEMALE"), None), &labels).unwrap();
        assert_eq!(p.gender, Some(Gender::Female));
        let p = normalize_facets(&raw("TX", Some(" Male "), None), &labels).unwrap();
        assert_eq!(p.gender, Some(Gender::Male));
    }

    #[test]
    fn unknown_gender_stays_absent() {
        let labels = IndustryLabels::default();
        for g in ["", "unspecified", "m", "F"] {
            let p = normalize_facets(&raw("TX", Some(g), None), &labels).unwrap();
            assert_eq!(p.gender, None, "{g:?}");
        }
        let p = normalize_facets(&raw("TX", None, None), &labels).unwrap();
        assert_eq!(p.gender, None);
        assert_eq!(p.industry, None);
    }

    #[test]
    fn industry_is_trimmed_and_lowered() {
        let labels = IndustryLabels::default();
        let p = normalize_facets(&raw("TX", None, Some("Tourism ")), &labels).unwrap();
        assert_eq!(p.industry.as_deref(), Some("tourism"));
        let p = normalize_facets(&raw("TX", None, Some("Automotive")), &labels).unwrap();
        assert_eq!(p.industry.as_deref(), Some("automotive"));
        let p = normalize_facets(&raw("TX", None, Some(" Llama Farming")), &labels).unwrap();
        assert_eq!(p.industry.as_deref(), Some("other:llama farming"));
        let p = normalize_facets(&raw("TX", None, Some("   ")), &labels).unwrap();
        assert_eq!(p.industry, None);
    }

    #[test]
    fn custom_label_set() {
        let labels = IndustryLabels::parse("# ours\nLlama Farming\n\n");
        assert!(labels.contains("llama farming"));
        assert_eq!(
            labels.normalize("TOURISM").as_deref(),
            Some("other:tourism")
        );
    }

    #[test]
    fn unresolved_state_is_rejected_with_location() {
        let labels = IndustryLabels::default();
        let err = normalize_facets(&raw("Mars", Some("male"), None), &labels).unwrap_err();
        assert_eq!(err.location_text, "Mars");
        assert_eq!(err.user_id, "u1");
    }

    #[test]
    fn city_and_blogs() {
        let labels = IndustryLabels::default();
        let p = normalize_facets(&raw("chicago, il", None, None), &labels).unwrap();
        assert_eq!(p.city.as_deref(), Some("Chicago"));
        assert_eq!(p.state.usps(), "IL");
        assert_eq!(p.blog_ids, vec!["b1".to_string(), "b2".to_string()]);
    }
}
