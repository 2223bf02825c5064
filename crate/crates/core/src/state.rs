//! The fifty U.S. states as a closed label set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::GeolocError;

/// Two-letter codes, alphabetical. The index into this table is the
/// canonical state order used for every tie-break in the crate.
const CODES: [&str; 50] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN", "KS",
    "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM",
    "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI",
    "WV", "WY",
];

const NAMES: [&str; 50] = [
    "Alaska",
    "Alabama",
    "Arkansas",
    "Arizona",
    "California",
    "Colorado",
    "Connecticut",
    "Delaware",
    "Florida",
    "Georgia",
    "Hawaii",
    "Iowa",
    "Idaho",
    "Illinois",
    "Indiana",
    "Kansas",
    "Kentucky",
    "Louisiana",
    "Massachusetts",
    "Maryland",
    "Maine",
    "Michigan",
    "Minnesota",
    "Missouri",
    "Mississippi",
    "Montana",
    "North Carolina",
    "North Dakota",
    "Nebraska",
    "New Hampshire",
    "New Jersey",
    "New Mexico",
    "Nevada",
    "New York",
    "Ohio",
    "Oklahoma",
    "Oregon",
    "Pennsylvania",
    "Rhode Island",
    "South Carolina",
    "South Dakota",
    "Tennessee",
    "Texas",
    "Utah",
    "Virginia",
    "Vermont",
    "Washington",
    "Wisconsin",
    "West Virginia",
    "Wyoming",
];

/// A U.S. state. Ordering follows the alphabetical order of the codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateLabel(u8);

impl StateLabel {
    pub const COUNT: usize = 50;

    pub fn all() -> impl ExactSizeIterator<Item = StateLabel> + Clone {
        (0..Self::COUNT as u8).map(StateLabel)
    }

    pub fn from_index(index: usize) -> Option<StateLabel> {
        (index < Self::COUNT).then_some(StateLabel(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn code(self) -> &'static str {
        CODES[self.0 as usize]
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0 as usize]
    }

    /// Accepts a two-letter code or a full state name, case-insensitively.
    /// Surrounding whitespace is ignored.
    pub fn parse(raw: &str) -> Option<StateLabel> {
        let s = raw.trim();
        if s.len() == 2 {
            let upper = s.to_ascii_uppercase();
            if let Some(i) = CODES.iter().position(|c| *c == upper) {
                return Some(StateLabel(i as u8));
            }
        }
        let folded = s.split_whitespace().collect::<Vec<_>>().join(" ");
        NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(&folded))
            .map(|i| StateLabel(i as u8))
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StateLabel {
    type Err = GeolocError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateLabel::parse(s).ok_or_else(|| GeolocError::UnknownState(s.to_string()))
    }
}

impl Serialize for StateLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        StateLabel::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown state label {raw:?}")))
    }
}
