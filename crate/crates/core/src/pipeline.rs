//! JSONL files in, [`CorpusIndex`] out, optionally across worker threads.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::mpsc;
use std::thread;

use serde::Serialize;

use crate::index::{BuildReport, CorpusIndex, IndexBuilder, IndexError};
use crate::ingest::{
    normalize_facets, read_posts, read_profiles, IndustryLabels, Profile, RawPost, RecordError,
};

const BATCH: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{file}: {source}")]
    Record {
        file: &'static str,
        #[source]
        source: RecordError,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("{path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("shard count must be at least 1")]
    NoShards,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub profiles: u64,
    /// Profiles skipped because their location names no U.S. state.
    pub rejected_profiles: u64,
    pub posts: u64,
    pub build: BuildReport,
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub shards: usize,
    pub industries: IndustryLabels,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            shards: 1,
            industries: IndustryLabels::default(),
        }
    }
}

/// Reads and normalizes every profile, skipping those without a state.
pub fn load_profiles(
    reader: impl BufRead,
    industries: &IndustryLabels,
    report: &mut IngestReport,
) -> Result<Vec<Profile>, PipelineError> {
    let mut out = Vec::new();
    for record in read_profiles(reader) {
        let record = record.map_err(|source| PipelineError::Record {
            file: "profiles",
            source,
        })?;
        report.profiles += 1;
        match normalize_facets(&record, industries) {
            Ok(profile) => out.push(profile),
            Err(_) => report.rejected_profiles += 1,
        }
    }
    Ok(out)
}

/// Builds an index from profile and post streams. With more than one shard,
/// profiles are dealt round-robin to worker threads, each post is routed to
/// the worker owning its blog, and the shard indexes are merged.
pub fn ingest(
    profiles: impl BufRead,
    posts: impl BufRead,
    options: &IngestOptions,
) -> Result<(CorpusIndex, IngestReport), PipelineError> {
    if options.shards == 0 {
        return Err(PipelineError::NoShards);
    }
    let mut report = IngestReport::default();
    let profiles = load_profiles(profiles, &options.industries, &mut report)?;
    let post_records = read_posts(posts).map(|r| {
        r.map_err(|source| PipelineError::Record {
            file: "posts",
            source,
        })
    });

    if options.shards == 1 {
        let mut builder = IndexBuilder::new();
        for profile in &profiles {
            builder.add_profile(profile)?;
        }
        for post in post_records {
            report.posts += 1;
            builder.add_raw_post(&post?);
        }
        let (index, build) = builder.finish();
        report.build = build;
        return Ok((index, report));
    }

    let mut shard_profiles: Vec<Vec<Profile>> = (0..options.shards).map(|_| Vec::new()).collect();
    let mut owner: HashMap<String, usize> = HashMap::new();
    for (i, profile) in profiles.into_iter().enumerate() {
        let shard = i % options.shards;
        for blog in &profile.blog_ids {
            if owner.insert(blog.clone(), shard).is_some() {
                return Err(IndexError::DuplicateBlog {
                    blog_id: blog.clone(),
                }
                .into());
            }
        }
        shard_profiles[shard].push(profile);
    }

    let (index, build) = thread::scope(|scope| -> Result<_, PipelineError> {
        let mut senders = Vec::with_capacity(options.shards);
        let mut workers = Vec::with_capacity(options.shards);
        for profiles in shard_profiles {
            let (tx, rx) = mpsc::sync_channel::<Vec<RawPost>>(8);
            senders.push(tx);
            workers.push(scope.spawn(move || -> Result<_, IndexError> {
                let mut builder = IndexBuilder::new();
                for profile in &profiles {
                    builder.add_profile(profile)?;
                }
                for batch in rx {
                    for post in &batch {
                        builder.add_raw_post(post);
                    }
                }
                Ok(builder.finish())
            }));
        }

        let mut orphans = 0;
        let mut batches: Vec<Vec<RawPost>> = (0..options.shards).map(|_| Vec::new()).collect();
        let mut failure = None;
        for post in post_records {
            let post = match post {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            report.posts += 1;
            let Some(&shard) = owner.get(&post.blog_id) else {
                orphans += 1;
                continue;
            };
            batches[shard].push(post);
            if batches[shard].len() == BATCH {
                let full = std::mem::take(&mut batches[shard]);
                // a closed channel means the worker failed; its error surfaces on join
                let _ = senders[shard].send(full);
            }
        }
        for (tx, batch) in senders.into_iter().zip(batches) {
            if !batch.is_empty() {
                let _ = tx.send(batch);
            }
        }

        let mut index = CorpusIndex::empty();
        let mut build = BuildReport {
            orphan_posts: orphans,
            ..BuildReport::default()
        };
        for worker in workers {
            let (shard_index, shard_report) = worker.join().expect("shard worker panicked")?;
            index = index.merge(shard_index)?;
            build.merge(&shard_report);
        }
        match failure {
            Some(e) => Err(e),
            None => Ok((index, build)),
        }
    })?;
    report.build = build;
    Ok((index, report))
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(|source| PipelineError::Open {
            path: path.display().to_string(),
            source,
        })
}

/// [`ingest`] over two JSONL files.
pub fn ingest_files(
    profiles: &Path,
    posts: &Path,
    options: &IngestOptions,
) -> Result<(CorpusIndex, IngestReport), PipelineError> {
    ingest(open(profiles)?, open(posts)?, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StateId;

    const PROFILES: &str = r#"
{"user_id": "u1", "location": "Austin, TX", "gender": "male", "industry": "Tourism", "blogs": ["b1"]}
{"user_id": 2, "location": "Texas", "gender": "female", "blogs": ["b2"]}
{"user_id": "u3", "location": "Paris, France", "blogs": ["b9"]}
{"user_id": "u4", "location": "Los Angeles, California", "blogs": ["b3", "b4"]}
"#;

    const POSTS: &str = r#"
{"blog_id": "b1", "post_id": "p1", "html": "<p>Lake <b>lake</b></p>"}
{"blog_id": "b2", "post_id": "p1", "html": "lake day"}
{"blog_id": "b3", "post_id": "p1", "html": "sun &amp; sea"}
{"blog_id": "b4", "post_id": "p1", "html": "sun"}
{"blog_id": "b4", "post_id": "p1", "html": "sun"}
{"blog_id": "b9", "post_id": "p1", "html": "bonjour"}
"#;

    fn run(shards: usize) -> (CorpusIndex, IngestReport) {
        let options = IngestOptions {
            shards,
            ..IngestOptions::default()
        };
        ingest(PROFILES.as_bytes(), POSTS.as_bytes(), &options).unwrap()
    }

    #[test]
    fn counts_and_report() {
        let (index, report) = run(1);
        let tx = StateId::from_usps("TX").unwrap();
        let ca = StateId::from_usps("CA").unwrap();
        assert_eq!(index.token_totals()[tx], 4);
        assert_eq!(index.token_totals()[ca], 3);
        assert_eq!(index.word_counts("lake").unwrap()[tx], 3);
        assert_eq!(index.user_counts()[tx], 2);
        assert_eq!(index.doc_count(), 4);
        assert_eq!(report.profiles, 4);
        assert_eq!(report.rejected_profiles, 1);
        assert_eq!(report.posts, 6);
        assert_eq!(report.build.orphan_posts, 1);
        assert_eq!(report.build.duplicate_posts, 1);
    }

    #[test]
    fn sharding_is_transparent() {
        let (single, report) = run(1);
        for shards in [2, 3, 8] {
            let (sharded, sharded_report) = run(shards);
            assert_eq!(sharded, single, "{shards} shards");
            assert_eq!(sharded_report, report);
        }
    }

    #[test]
    fn bad_records_are_errors() {
        let err = ingest("{".as_bytes(), "".as_bytes(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::Record {
                file: "profiles",
                ..
            }
        ));
        for shards in [1, 2] {
            let options = IngestOptions {
                shards,
                ..IngestOptions::default()
            };
            let err = ingest(
                PROFILES.as_bytes(),
                "\n{\"blog_id\": 1}".as_bytes(),
                &options,
            )
            .unwrap_err();
            assert!(
                matches!(err, PipelineError::Record { file: "posts", .. }),
                "{err}"
            );
        }
        let options = IngestOptions {
            shards: 0,
            ..IngestOptions::default()
        };
        assert!(matches!(
            ingest("".as_bytes(), "".as_bytes(), &options),
            Err(PipelineError::NoShards)
        ));
    }

    #[test]
    fn duplicate_users_fail_in_every_mode() {
        let dup = "{\"user_id\":\"a\",\"location\":\"TX\",\"blogs\":[\"x\"]}\n{\"user_id\":\"a\",\"location\":\"CA\",\"blogs\":[\"y\"]}\n";
        for shards in [1, 2] {
            let options = IngestOptions {
                shards,
                ..IngestOptions::default()
            };
            assert!(matches!(
                ingest(dup.as_bytes(), "".as_bytes(), &options),
                Err(PipelineError::Index(_))
            ));
        }
    }
}
