//! HTTP API and command-line front end over a `geolex-core` index.

pub mod api;
pub mod catalog;

pub use api::{app, AppState};
pub use catalog::{Catalog, CategoryRef};
