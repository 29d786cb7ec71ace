//! ISO-3166 alpha-3 country codes and the node universe of the network.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 3-letter uppercase ISO-3166 alpha-3 country code.
///
/// Stored inline as three ASCII bytes so it is `Copy` and orders cheaply;
/// node registries sort by this ordering.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 3]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 {
            return Err(Error::InvalidCountryCode {
                code: code.to_string(),
                reason: "must be exactly 3 characters".into(),
            });
        }
        if !bytes.iter().all(|b| b.is_ascii_uppercase()) {
            return Err(Error::InvalidCountryCode {
                code: code.to_string(),
                reason: "must be uppercase ASCII letters".into(),
            });
        }
        Ok(CountryCode([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // Constructor guarantees ASCII.
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CountryCode::new(s)
    }
}

impl Serialize for CountryCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CountryCode::new(&s).map_err(serde::de::Error::custom)
    }
}

/// The fixed set of countries registered as graph nodes.
///
/// Countries with no trade in a year stay in the registry as isolated nodes,
/// so N is well defined for all normalizations. Codes are kept sorted; the
/// sorted position is the node index used by every matrix in the crate.
#[derive(Debug, Clone)]
pub struct Universe {
    codes: Vec<CountryCode>,
}

impl Universe {
    /// Build from an arbitrary code list. Duplicates are rejected.
    pub fn new(mut codes: Vec<CountryCode>) -> Result<Self> {
        codes.sort();
        for pair in codes.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Validation(format!(
                    "duplicate country code {} in universe",
                    pair[0]
                )));
            }
        }
        if codes.is_empty() {
            return Err(Error::Validation("empty country universe".into()));
        }
        Ok(Universe { codes })
    }

    /// The 54 African Union member states.
    pub fn african_union() -> Self {
        let codes = AFRICAN_UNION_ISO3
            .iter()
            .map(|c| CountryCode::new(c).unwrap())
            .collect();
        Universe::new(codes).unwrap()
    }

    /// Parse a universe file: one code per line, `#` comments allowed.
    pub fn from_lines(text: &str) -> Result<Self> {
        let mut codes = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            codes.push(CountryCode::new(line)?);
        }
        Universe::new(codes)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[CountryCode] {
        &self.codes
    }

    /// Node index of `code` in sorted order, if registered.
    pub fn index_of(&self, code: CountryCode) -> Option<usize> {
        self.codes.binary_search(&code).ok()
    }

    pub fn contains(&self, code: CountryCode) -> bool {
        self.index_of(code).is_some()
    }
}

/// ISO alpha-3 codes of the 54 AU member states.
pub const AFRICAN_UNION_ISO3: [&str; 54] = [
    "AGO", "BDI", "BEN", "BFA", "BWA", "CAF", "CIV", "CMR", "COD", "COG", "COM", "CPV", "DJI",
    "DZA", "EGY", "ERI", "ETH", "GAB", "GHA", "GIN", "GMB", "GNB", "GNQ", "KEN", "LBR", "LBY",
    "LSO", "MAR", "MDG", "MLI", "MOZ", "MRT", "MUS", "MWI", "NAM", "NER", "NGA", "RWA", "SDN",
    "SEN", "SLE", "SOM", "SSD", "STP", "SWZ", "SYC", "TCD", "TGO", "TUN", "TZA", "UGA", "ZAF",
    "ZMB", "ZWE",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_rejects_bad_input() {
        assert!(CountryCode::new("KEN").is_ok());
        assert!(CountryCode::new("ken").is_err());
        assert!(CountryCode::new("KENY").is_err());
        assert!(CountryCode::new("K1N").is_err());
        assert!(CountryCode::new("").is_err());
    }

    #[test]
    fn universe_is_sorted_and_unique() {
        let u = Universe::african_union();
        assert_eq!(u.len(), 54);
        let codes = u.codes();
        assert!(codes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(u.index_of(codes[7]), Some(7));
        assert!(!u.contains(CountryCode::new("FRA").unwrap()));
    }

    #[test]
    fn universe_rejects_duplicates() {
        let codes = vec![
            CountryCode::new("KEN").unwrap(),
            CountryCode::new("KEN").unwrap(),
        ];
        assert!(Universe::new(codes).is_err());
    }

    #[test]
    fn universe_from_lines_skips_comments() {
        let u = Universe::from_lines("# codes\nKEN\nUGA\n\nTZA\n").unwrap();
        assert_eq!(u.len(), 3);
    }
}
