//! Corpus ingestion: locations, profile facets, HTML cleaning, tokenization.

mod facets;
mod html;
mod location;
mod records;
mod tokenize;

pub use facets::{normalize_facets, Gender, IndustryLabels, Profile, Rejection};
pub use html::{strip_html, HtmlStripper};
pub use location::{extract_city, normalize_state};
pub use records::{
    read_posts, read_profiles, JsonLines, RawPost, RawProfileRecord, RecordError, TokenizedPost,
    Validate,
};
pub use tokenize::{tokenize, truncate_token, Tokenizer, MAX_TOKEN_CHARS};
