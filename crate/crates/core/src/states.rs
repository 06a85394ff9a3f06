//! The fixed 50-state frame every map is expressed in.
//!
//! States are indexed `0..50` in alphabetical order of their USPS code, so
//! `AK` is 0 and `WY` is 49. The District of Columbia and the territories are
//! deliberately absent.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of states in the frame.
pub const STATE_COUNT: usize = 50;

const STATES: [(&str, &str); STATE_COUNT] = [
    ("AK", "Alaska"),
    ("AL", "Alabama"),
    ("AR", "Arkansas"),
    ("AZ", "Arizona"),
    ("CA", "California"),
    ("CO", "Colorado"),
    ("CT", "Connecticut"),
    ("DE", "Delaware"),
    ("FL", "Florida"),
    ("GA", "Georgia"),
    ("HI", "Hawaii"),
    ("IA", "Iowa"),
    ("ID", "Idaho"),
    ("IL", "Illinois"),
    ("IN", "Indiana"),
    ("KS", "Kansas"),
    ("KY", "Kentucky"),
    ("LA", "Louisiana"),
    ("MA", "Massachusetts"),
    ("MD", "Maryland"),
    ("ME", "Maine"),
    ("MI", "Michigan"),
    ("MN", "Minnesota"),
    ("MO", "Missouri"),
    ("MS", "Mississippi"),
    ("MT", "Montana"),
    ("NC", "North Carolina"),
    ("ND", "North Dakota"),
    ("NE", "Nebraska"),
    ("NH", "New Hampshire"),
    ("NJ", "New Jersey"),
    ("NM", "New Mexico"),
    ("NV", "Nevada"),
    ("NY", "New York"),
    ("OH", "Ohio"),
    ("OK", "Oklahoma"),
    ("OR", "Oregon"),
    ("PA", "Pennsylvania"),
    ("RI", "Rhode Island"),
    ("SC", "South Carolina"),
    ("SD", "South Dakota"),
    ("TN", "Tennessee"),
    ("TX", "Texas"),
    ("UT", "Utah"),
    ("VA", "Virginia"),
    ("VT", "Vermont"),
    ("WA", "Washington"),
    ("WI", "Wisconsin"),
    ("WV", "West Virginia"),
    ("WY", "Wyoming"),
];

/// One of the 50 U.S. states.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(u8);

impl StateId {
    pub fn from_index(index: usize) -> Option<StateId> {
        (index < STATE_COUNT).then_some(StateId(index as u8))
    }

    /// Case-insensitive USPS lookup.
    pub fn from_usps(code: &str) -> Option<StateId> {
        if code.len() != 2 {
            return None;
        }
        let upper = code.to_ascii_uppercase();
        STATES
            .binary_search_by(|(usps, _)| (*usps).cmp(upper.as_str()))
            .ok()
            .map(|i| StateId(i as u8))
    }

    /// Case-insensitive full-name lookup; internal whitespace runs are
    /// treated as a single space.
    pub fn from_name(name: &str) -> Option<StateId> {
        let words: Vec<&str> = name.split_whitespace().collect();
        STATES
            .iter()
            .position(|(_, full)| {
                full.split(' ').count() == words.len()
                    && full
                        .split(' ')
                        .zip(&words)
                        .all(|(a, b)| a.eq_ignore_ascii_case(b))
            })
            .map(|i| StateId(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn usps(self) -> &'static str {
        STATES[self.index()].0
    }

    pub fn name(self) -> &'static str {
        STATES[self.index()].1
    }

    pub fn all() -> impl ExactSizeIterator<Item = StateId> + Clone {
        (0..STATE_COUNT as u8).map(StateId)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.usps())
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for StateId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.usps())
    }
}

impl<'de> Deserialize<'de> for StateId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        StateId::from_usps(&code)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown state code `{code}`")))
    }
}

/// Renders the embedded state table as `usps,name` CSV with a header row.
pub fn state_table_csv() -> String {
    let mut out = String::from("usps,name\n");
    for (usps, name) in STATES {
        out.push_str(usps);
        out.push(',');
        out.push_str(name);
        out.push('\n');
    }
    out
}

/// Fixed-length per-state array ordered by [`StateId`] index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct StateVector<T>(pub [T; STATE_COUNT]);

impl<T: Copy + Default> Default for StateVector<T> {
    fn default() -> Self {
        StateVector([T::default(); STATE_COUNT])
    }
}

impl<T> StateVector<T> {
    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> StateVector<U> {
        let mut f = f;
        StateVector(std::array::from_fn(|i| f(&self.0[i])))
    }
}

impl<T> Index<StateId> for StateVector<T> {
    type Output = T;
    fn index(&self, state: StateId) -> &T {
        &self.0[state.index()]
    }
}

impl<T> IndexMut<StateId> for StateVector<T> {
    fn index_mut(&mut self, state: StateId) -> &mut T {
        &mut self.0[state.index()]
    }
}

impl StateVector<u64> {
    pub fn add_assign(&mut self, other: &StateVector<u64>) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }
}

impl<T: Serialize> Serialize for StateVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for StateVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<T>::deserialize(deserializer)?;
        let len = values.len();
        let array: [T; STATE_COUNT] = values.try_into().map_err(|_| {
            serde::de::Error::custom(format!("expected {STATE_COUNT} values, got {len}"))
        })?;
        Ok(StateVector(array))
    }
}
