//! The corpus index: every per-state count the maps are computed from.

mod persist;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{BuildHasher, DefaultHasher, Hash, Hasher};
use std::sync::OnceLock;

use serde::Serialize;

use crate::ingest::{
    truncate_token, Gender, HtmlStripper, Profile, RawPost, TokenizedPost, Tokenizer,
};
use crate::states::{StateId, StateVector};

pub use persist::{load_index, save_index, FORMAT_VERSION, MAGIC};

/// Per-state integer counts.
pub type Counts = StateVector<u64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct GenderCounts {
    pub male: u64,
    pub female: u64,
    /// Users who reported a gender; always `male + female`.
    pub reported: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),
    #[error("blog `{blog_id}` is claimed by more than one profile")]
    DuplicateBlog { blog_id: String },
    #[error("indexes share user id `{0}`")]
    OverlappingUsers(String),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("unsupported index format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-state counts over a corpus. Immutable once built or loaded.
#[derive(Clone, Debug, Default)]
pub struct CorpusIndex {
    pub(crate) token_totals: Counts,
    pub(crate) word_counts: HashMap<String, Counts>,
    pub(crate) user_counts: Counts,
    pub(crate) gender_counts: StateVector<GenderCounts>,
    pub(crate) industry_counts: BTreeMap<String, Counts>,
    pub(crate) city_counts: BTreeMap<(String, StateId), u64>,
    pub(crate) user_ids: HashSet<String>,
    pub(crate) doc_count: u64,
    vocab_fingerprint: OnceLock<u64>,
}

impl PartialEq for CorpusIndex {
    fn eq(&self, other: &Self) -> bool {
        self.token_totals == other.token_totals
            && self.word_counts == other.word_counts
            && self.user_counts == other.user_counts
            && self.gender_counts == other.gender_counts
            && self.industry_counts == other.industry_counts
            && self.city_counts == other.city_counts
            && self.user_ids == other.user_ids
            && self.doc_count == other.doc_count
    }
}

impl Eq for CorpusIndex {}

impl CorpusIndex {
    pub fn empty() -> CorpusIndex {
        CorpusIndex::default()
    }

    pub fn token_totals(&self) -> &Counts {
        &self.token_totals
    }

    pub fn word_counts(&self, word: &str) -> Option<&Counts> {
        self.word_counts.get(word)
    }

    /// Iterates `(word, counts)` in arbitrary order.
    pub fn vocabulary(&self) -> impl Iterator<Item = (&str, &Counts)> {
        self.word_counts.iter().map(|(w, c)| (w.as_str(), c))
    }

    pub fn vocabulary_size(&self) -> usize {
        self.word_counts.len()
    }

    pub fn user_counts(&self) -> &Counts {
        &self.user_counts
    }

    pub fn gender_counts(&self) -> &StateVector<GenderCounts> {
        &self.gender_counts
    }

    pub fn industry_counts(&self, label: &str) -> Option<&Counts> {
        self.industry_counts.get(label)
    }

    pub fn industries(&self) -> impl Iterator<Item = &str> {
        self.industry_counts.keys().map(String::as_str)
    }

    /// `((city, state), users)` in `(city, state)` order.
    pub fn city_counts(&self) -> impl Iterator<Item = (&str, StateId, u64)> {
        self.city_counts
            .iter()
            .map(|((city, state), n)| (city.as_str(), *state, *n))
    }

    pub fn user_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn contains_user(&self, user_id: &str) -> bool {
        self.user_ids.contains(user_id)
    }

    /// Number of posts counted.
    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// Order-independent hash of the vocabulary, computed once.
    pub fn vocabulary_fingerprint(&self) -> u64 {
        *self.vocab_fingerprint.get_or_init(|| {
            let state = std::hash::BuildHasherDefault::<DefaultHasher>::default();
            let sum = self
                .word_counts
                .keys()
                .map(|w| state.hash_one(w))
                .fold(0u64, u64::wrapping_add);
            let mut h = DefaultHasher::new();
            (sum, self.word_counts.len()).hash(&mut h);
            h.finish()
        })
    }

    /// Checks the structural invariants; used after loading and in tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut sums = Counts::default();
        for counts in self.word_counts.values() {
            sums.add_assign(counts);
        }
        if sums != self.token_totals {
            return Err("word counts do not sum to token totals".into());
        }
        for state in StateId::all() {
            let g = self.gender_counts[state];
            if g.male + g.female != g.reported {
                return Err(format!("gender tallies inconsistent in {}", state.usps()));
            }
            if g.reported > self.user_counts[state] {
                return Err(format!(
                    "more gender reports than users in {}",
                    state.usps()
                ));
            }
            for (label, counts) in &self.industry_counts {
                if counts[state] > self.user_counts[state] {
                    return Err(format!(
                        "industry `{label}` exceeds users in {}",
                        state.usps()
                    ));
                }
            }
        }
        let mut city_sums = Counts::default();
        for ((_, state), n) in &self.city_counts {
            city_sums[*state] += n;
        }
        if city_sums
            .iter()
            .zip(self.user_counts.iter())
            .any(|(c, u)| c > u)
        {
            return Err("city counts exceed users".into());
        }
        if self.user_counts.total() != self.user_ids.len() as u64 {
            return Err("user counts disagree with user id set".into());
        }
        Ok(())
    }

    /// Elementwise sum of two indexes built from disjoint profile sets.
    pub fn merge(mut self, other: CorpusIndex) -> Result<CorpusIndex, IndexError> {
        let (small, large) = if self.user_ids.len() <= other.user_ids.len() {
            (&self.user_ids, &other.user_ids)
        } else {
            (&other.user_ids, &self.user_ids)
        };
        if let Some(shared) = small.iter().find(|u| large.contains(*u)) {
            return Err(IndexError::OverlappingUsers(shared.clone()));
        }
        self.token_totals.add_assign(&other.token_totals);
        self.user_counts.add_assign(&other.user_counts);
        for state in StateId::all() {
            let g = &mut self.gender_counts[state];
            let o = other.gender_counts[state];
            g.male += o.male;
            g.female += o.female;
            g.reported += o.reported;
        }
        for (word, counts) in other.word_counts {
            self.word_counts
                .entry(word)
                .or_default()
                .add_assign(&counts);
        }
        for (label, counts) in other.industry_counts {
            self.industry_counts
                .entry(label)
                .or_default()
                .add_assign(&counts);
        }
        for (key, n) in other.city_counts {
            *self.city_counts.entry(key).or_default() += n;
        }
        self.user_ids.extend(other.user_ids);
        self.doc_count += other.doc_count;
        self.vocab_fingerprint = OnceLock::new();
        Ok(self)
    }
}

/// Warnings collected while building. None of these abort a build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    /// Posts whose blog belongs to no profile.
    pub orphan_posts: u64,
    /// Repeated `(blog_id, post_id)` pairs after the first.
    pub duplicate_posts: u64,
    /// Tokens cut to the maximum token length.
    pub truncated_tokens: u64,
}

impl BuildReport {
    pub fn merge(&mut self, other: &BuildReport) {
        self.orphan_posts += other.orphan_posts;
        self.duplicate_posts += other.duplicate_posts;
        self.truncated_tokens += other.truncated_tokens;
    }
}

struct BlogEntry {
    state: StateId,
    posts: HashSet<String>,
}

/// Incremental index construction. Add every profile before the posts that
/// belong to it.
#[derive(Default)]
pub struct IndexBuilder {
    index: CorpusIndex,
    blogs: HashMap<String, BlogEntry>,
    report: BuildReport,
    tokenizer: Tokenizer,
    stripper: HtmlStripper,
}

impl IndexBuilder {
    pub fn new() -> IndexBuilder {
        IndexBuilder::default()
    }

    pub fn with_stripper(stripper: HtmlStripper) -> IndexBuilder {
        IndexBuilder {
            stripper,
            ..IndexBuilder::default()
        }
    }

    pub fn add_profile(&mut self, profile: &Profile) -> Result<(), IndexError> {
        if self.index.user_ids.contains(&profile.user_id) {
            return Err(IndexError::DuplicateUser(profile.user_id.clone()));
        }
        if let Some(blog_id) = profile
            .blog_ids
            .iter()
            .find(|b| self.blogs.contains_key(b.as_str()))
        {
            return Err(IndexError::DuplicateBlog {
                blog_id: blog_id.clone(),
            });
        }
        let state = profile.state;
        for blog_id in &profile.blog_ids {
            self.blogs.insert(
                blog_id.clone(),
                BlogEntry {
                    state,
                    posts: HashSet::new(),
                },
            );
        }
        let index = &mut self.index;
        index.user_ids.insert(profile.user_id.clone());
        index.user_counts[state] += 1;
        if let Some(gender) = profile.gender {
            let g = &mut index.gender_counts[state];
            match gender {
                Gender::Male => g.male += 1,
                Gender::Female => g.female += 1,
            }
            g.reported += 1;
        }
        if let Some(industry) = &profile.industry {
            index.industry_counts.entry(industry.clone()).or_default()[state] += 1;
        }
        if let Some(city) = &profile.city {
            *index.city_counts.entry((city.clone(), state)).or_default() += 1;
        }
        Ok(())
    }

    /// Registers a post; returns its owner's state, or `None` when the post
    /// is an orphan or a duplicate and must be skipped.
    fn admit_post(&mut self, blog_id: &str, post_id: &str) -> Option<StateId> {
        let Some(blog) = self.blogs.get_mut(blog_id) else {
            self.report.orphan_posts += 1;
            return None;
        };
        if !blog.posts.insert(post_id.to_string()) {
            self.report.duplicate_posts += 1;
            return None;
        }
        self.index.doc_count += 1;
        Some(blog.state)
    }

    fn count(index: &mut CorpusIndex, state: StateId, token: &str) {
        match index.word_counts.get_mut(token) {
            Some(counts) => counts[state] += 1,
            None => {
                let mut counts = Counts::default();
                counts[state] = 1;
                index.word_counts.insert(token.to_string(), counts);
            }
        }
        index.token_totals[state] += 1;
    }

    pub fn add_post(&mut self, post: &TokenizedPost) {
        let Some(state) = self.admit_post(&post.blog_id, &post.post_id) else {
            return;
        };
        for token in &post.tokens {
            let (kept, cut) = truncate_token(token);
            if cut {
                self.report.truncated_tokens += 1;
            }
            Self::count(&mut self.index, state, kept);
        }
    }

    /// Tokenizes already-stripped text and counts it.
    pub fn add_post_text(&mut self, blog_id: &str, post_id: &str, text: &str) {
        let Some(state) = self.admit_post(blog_id, post_id) else {
            return;
        };
        let index = &mut self.index;
        let report = &mut self.report;
        self.tokenizer.for_each_token(text, |token, cut| {
            if cut {
                report.truncated_tokens += 1;
            }
            Self::count(index, state, token);
        });
    }

    /// Strips, tokenizes and counts a raw HTML post.
    pub fn add_raw_post(&mut self, post: &RawPost) {
        if !self.blogs.contains_key(&post.blog_id) {
            self.report.orphan_posts += 1;
            return;
        }
        let text = self.stripper.strip(&post.html);
        self.add_post_text(&post.blog_id, &post.post_id, &text);
    }

    /// True when `blog_id` belongs to a profile added to this builder.
    pub fn owns_blog(&self, blog_id: &str) -> bool {
        self.blogs.contains_key(blog_id)
    }

    pub fn report(&self) -> &BuildReport {
        &self.report
    }

    pub fn finish(self) -> (CorpusIndex, BuildReport) {
        (self.index, self.report)
    }
}

/// Builds an index from profiles and their tokenized posts.
pub fn build_index<'a>(
    profiles: impl IntoIterator<Item = &'a Profile>,
    posts: impl IntoIterator<Item = &'a TokenizedPost>,
) -> Result<(CorpusIndex, BuildReport), IndexError> {
    let mut builder = IndexBuilder::new();
    for profile in profiles {
        builder.add_profile(profile)?;
    }
    for post in posts {
        builder.add_post(post);
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(user: &str, state: &str, blogs: &[&str]) -> Profile {
        Profile {
            user_id: user.into(),
            state: StateId::from_usps(state).unwrap(),
            city: None,
            gender: None,
            industry: None,
            blog_ids: blogs.iter().map(|b| b.to_string()).collect(),
        }
    }

    fn post(blog: &str, id: &str, tokens: &[&str]) -> TokenizedPost {
        TokenizedPost {
            blog_id: blog.into(),
            post_id: id.into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn tx() -> StateId {
        StateId::from_usps("TX").unwrap()
    }

    #[test]
    fn empty_streams() {
        let (index, report) = build_index([], []).unwrap();
        assert_eq!(index, CorpusIndex::empty());
        assert_eq!(index.doc_count(), 0);
        assert!(index.token_totals().is_zero());
        assert!(index.user_counts().is_zero());
        assert_eq!(report, BuildReport::default());
        index.check_invariants().unwrap();
    }

    #[test]
    fn users_count_once_across_blogs() {
        let profiles = [profile("u", "TX", &["b1", "b2"])];
        let posts = [
            post("b1", "1", &["a", "b"]),
            post("b1", "2", &["c"]),
            post("b2", "1", &["a"]),
            post("b2", "2", &["d", "e", "f"]),
        ];
        let (index, _) = build_index(&profiles, &posts).unwrap();
        assert_eq!(index.user_counts()[tx()], 1);
        assert_eq!(index.token_totals()[tx()], 7);
        assert_eq!(index.word_counts("a").unwrap()[tx()], 2);
        assert_eq!(index.doc_count(), 4);
    }

    #[test]
    fn orphans_and_duplicates_are_skipped_and_counted() {
        let profiles = [profile("u", "TX", &["b1"])];
        let posts = [
            post("b1", "1", &["a"]),
            post("b1", "1", &["a", "a"]),
            post("nobody", "1", &["z"]),
        ];
        let (index, report) = build_index(&profiles, &posts).unwrap();
        assert_eq!(report.orphan_posts, 1);
        assert_eq!(report.duplicate_posts, 1);
        assert_eq!(index.token_totals()[tx()], 1);
        assert_eq!(index.doc_count(), 1);
        assert!(index.word_counts("z").is_none());
    }

    #[test]
    fn duplicate_user_is_fatal() {
        let profiles = [profile("u", "TX", &["b1"]), profile("u", "CA", &["b2"])];
        assert!(matches!(
            build_index(&profiles, []),
            Err(IndexError::DuplicateUser(u)) if u == "u"
        ));
        let profiles = [profile("u", "TX", &["b1"]), profile("v", "CA", &["b1"])];
        assert!(matches!(
            build_index(&profiles, []),
            Err(IndexError::DuplicateBlog { .. })
        ));
    }

    #[test]
    fn long_tokens_are_truncated() {
        let long = "x".repeat(70);
        let profiles = [profile("u", "TX", &["b"])];
        let posts = [post("b", "1", &[&long])];
        let (index, report) = build_index(&profiles, &posts).unwrap();
        assert_eq!(report.truncated_tokens, 1);
        assert!(index.word_counts(&"x".repeat(64)).is_some());
    }

    #[test]
    fn merge_rejects_shared_users() {
        let (a, _) = build_index(&[profile("u", "TX", &["b"])], []).unwrap();
        let (b, _) = build_index(&[profile("u", "CA", &["c"])], []).unwrap();
        assert!(matches!(a.merge(b), Err(IndexError::OverlappingUsers(_))));
    }

    #[test]
    fn merge_identity() {
        let profiles = [profile("u", "TX", &["b"])];
        let posts = [post("b", "1", &["hello", "world"])];
        let (x, _) = build_index(&profiles, &posts).unwrap();
        assert_eq!(x.clone().merge(CorpusIndex::empty()).unwrap(), x);
        assert_eq!(CorpusIndex::empty().merge(x.clone()).unwrap(), x);
    }

    #[test]
    fn raw_posts_are_stripped() {
        let mut builder = IndexBuilder::new();
        builder.add_profile(&profile("u", "TX", &["b"])).unwrap();
        builder.add_raw_post(&RawPost {
            blog_id: "b".into(),
            post_id: "1".into(),
            html: "<p>Lake <b>days</b> &amp; nights</p>".into(),
        });
        builder.add_raw_post(&RawPost {
            blog_id: "zz".into(),
            post_id: "1".into(),
            html: "<p>orphan</p>".into(),
        });
        let (index, report) = builder.finish();
        assert_eq!(index.token_totals()[tx()], 3);
        assert_eq!(report.orphan_posts, 1);
    }
}
