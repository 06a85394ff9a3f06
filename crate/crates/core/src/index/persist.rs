//! Binary index container. Layout is documented in `docs/index-format.md`.
//!
//! ```text
//! header   magic[8] version:u32 reserved:u32 payload_len:u64
//! payload  (see docs)
//! trailer  crc32(payload):u32
//! ```
//!
//! Every integer is little-endian. Count arrays start on 8-byte boundaries
//! relative to the payload start. Strings are written in sorted order, so the
//! encoding of a given index is unique.

use std::fs;
use std::path::Path;

use super::{CorpusIndex, Counts, GenderCounts, IndexError};
use crate::states::{StateId, StateVector, STATE_COUNT};

pub const MAGIC: &[u8; 8] = b"GEOLEXIX";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
const TRAILER_LEN: usize = 4;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn align8(&mut self) {
        while !self.buf.len().is_multiple_of(8) {
            self.buf.push(0);
        }
    }

    fn counts(&mut self, counts: &Counts) {
        for &v in counts.iter() {
            self.u64(v);
        }
    }

    fn string_table<'a>(&mut self, strings: impl ExactSizeIterator<Item = &'a str>) {
        self.u64(strings.len() as u64);
        for s in strings {
            self.u32(s.len() as u32);
            self.buf.extend_from_slice(s.as_bytes());
        }
        self.align8();
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> IndexError {
    IndexError::Corrupt(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt("unexpected end of payload"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn align8(&mut self) -> Result<(), IndexError> {
        let pad = (8 - self.pos % 8) % 8;
        if self.take(pad)?.iter().any(|&b| b != 0) {
            return Err(corrupt("non-zero padding"));
        }
        Ok(())
    }

    fn counts(&mut self) -> Result<Counts, IndexError> {
        let bytes = self.take(8 * STATE_COUNT)?;
        Ok(StateVector(std::array::from_fn(|i| {
            u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap())
        })))
    }

    fn len(&mut self) -> Result<usize, IndexError> {
        let n = self.u64()?;
        // every entry takes at least four bytes, which bounds bogus lengths
        if n > (self.data.len() - self.pos) as u64 / 4 + 1 {
            return Err(corrupt("table length exceeds payload"));
        }
        Ok(n as usize)
    }

    fn string_table(&mut self) -> Result<Vec<String>, IndexError> {
        let n = self.len()?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let len = self.u32()? as usize;
            let bytes = self.take(len)?;
            let s = std::str::from_utf8(bytes).map_err(|_| corrupt("invalid UTF-8 string"))?;
            out.push(s.to_string());
        }
        self.align8()?;
        Ok(out)
    }
}

fn sorted<'a, I: Iterator<Item = &'a String>>(it: I) -> Vec<&'a str> {
    let mut v: Vec<&str> = it.map(String::as_str).collect();
    v.sort_unstable();
    v
}

/// Serializes an index into the binary container.
pub fn to_bytes(index: &CorpusIndex) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.u64(index.doc_count);
    w.counts(&index.token_totals);
    w.counts(&index.user_counts);
    for g in index.gender_counts.iter() {
        w.u64(g.male);
        w.u64(g.female);
        w.u64(g.reported);
    }

    let words = sorted(index.word_counts.keys());
    w.string_table(words.iter().copied());
    for word in &words {
        w.counts(&index.word_counts[*word]);
    }

    w.string_table(index.industry_counts.keys().map(String::as_str));
    for counts in index.industry_counts.values() {
        w.counts(counts);
    }

    w.string_table(index.city_counts.keys().map(|(city, _)| city.as_str()));
    for (_, state) in index.city_counts.keys() {
        w.u8(state.index() as u8);
    }
    w.align8();
    for n in index.city_counts.values() {
        w.u64(*n);
    }

    let users = sorted(index.user_ids.iter());
    w.string_table(users.iter().copied());

    let payload = w.buf;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out
}

/// Parses and validates the binary container.
pub fn from_bytes(data: &[u8]) -> Result<CorpusIndex, IndexError> {
    if data.len() < HEADER_LEN + TRAILER_LEN {
        return Err(corrupt("file too short"));
    }
    if &data[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(IndexError::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let payload_len = u64::from_le_bytes(data[16..24].try_into().unwrap());
    if payload_len != (data.len() - HEADER_LEN - TRAILER_LEN) as u64 {
        return Err(corrupt(format!(
            "payload length {payload_len} does not match file size {}",
            data.len()
        )));
    }
    let payload = &data[HEADER_LEN..data.len() - TRAILER_LEN];
    let stored = u32::from_le_bytes(data[data.len() - TRAILER_LEN..].try_into().unwrap());
    if crc32fast::hash(payload) != stored {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader {
        data: payload,
        pos: 0,
    };
    let mut index = CorpusIndex {
        doc_count: r.u64()?,
        token_totals: r.counts()?,
        user_counts: r.counts()?,
        ..CorpusIndex::default()
    };
    for g in index.gender_counts.0.iter_mut() {
        *g = GenderCounts {
            male: r.u64()?,
            female: r.u64()?,
            reported: r.u64()?,
        };
    }

    let words = r.string_table()?;
    index.word_counts.reserve(words.len());
    for word in words {
        let counts = r.counts()?;
        if index.word_counts.insert(word, counts).is_some() {
            return Err(corrupt("duplicate word"));
        }
    }

    for label in r.string_table()? {
        let counts = r.counts()?;
        index.industry_counts.insert(label, counts);
    }

    let cities = r.string_table()?;
    let states = cities
        .iter()
        .map(|_| {
            let i = r.u8()?;
            StateId::from_index(i as usize).ok_or_else(|| corrupt("state index out of range"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    r.align8()?;
    for (city, state) in cities.into_iter().zip(states) {
        let n = r.u64()?;
        index.city_counts.insert((city, state), n);
    }

    index.user_ids = r.string_table()?.into_iter().collect();

    if r.pos != payload.len() {
        return Err(corrupt("trailing bytes in payload"));
    }
    index.check_invariants().map_err(IndexError::Corrupt)?;
    Ok(index)
}

pub fn save_index(index: &CorpusIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    fs::write(path, to_bytes(index))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<CorpusIndex, IndexError> {
    from_bytes(&fs::read(path)?)
}
