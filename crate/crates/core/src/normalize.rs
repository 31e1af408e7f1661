//! Text canonicalization and enumeration tables.
//!
//! Attribute strings are brought to Unicode composed form (NFC) and optionally
//! upper-cased before they are looked up. An [`EnumTable`] maps a bounded set
//! of canonical strings to dense ordinals assigned in byte order, so ordinal
//! order and string order agree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::ops::Deref;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("input is not valid UTF-8 (byte {valid_up_to})")]
    InvalidEncoding { valid_up_to: usize },
    #[error("enumeration table needs at least one value")]
    EmptyTable,
    #[error("distinct inputs normalize to the same value {canonical:?}: {inputs:?}")]
    Ambiguous {
        canonical: String,
        inputs: Vec<String>,
    },
    #[error("unknown value {0:?}")]
    UnknownValue(String),
    #[error("ordinal {ordinal} out of range for table of size {size}")]
    InvalidOrdinal { ordinal: u64, size: u64 },
    #[error("table entry {ordinal} ({value:?}) is not canonical")]
    NotCanonical { ordinal: u64, value: String },
    #[error("table entry {ordinal} ({value:?}) is out of order or duplicated")]
    Unsorted { ordinal: u64, value: String },
}

/// How strings are canonicalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Policy {
    pub case_fold: bool,
}

impl Policy {
    pub const EXACT: Policy = Policy { case_fold: false };
    pub const FOLD: Policy = Policy { case_fold: true };
}

/// A string already in canonical form under some [`Policy`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalString(String);

impl CanonicalString {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for CanonicalString {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// NFC, then upper-case if requested. Upper-casing can emit decomposed
/// sequences, so the result is recomposed.
pub fn normalize_text(input: &str, policy: Policy) -> CanonicalString {
    let composed: String = input.nfc().collect();
    if policy.case_fold {
        CanonicalString(composed.to_uppercase().nfc().collect())
    } else {
        CanonicalString(composed)
    }
}

pub fn normalize_bytes(input: &[u8], policy: Policy) -> Result<CanonicalString, NormalizeError> {
    let s = std::str::from_utf8(input).map_err(|e| NormalizeError::InvalidEncoding {
        valid_up_to: e.valid_up_to(),
    })?;
    Ok(normalize_text(s, policy))
}

pub fn is_canonical(s: &str, policy: Policy) -> bool {
    normalize_text(s, policy).as_str() == s
}

/// Bidirectional map between canonical strings and ordinals.
#[derive(Debug, Clone)]
pub struct EnumTable {
    entries: Vec<String>,
    reverse: HashMap<String, u64>,
    policy: Policy,
}

impl PartialEq for EnumTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.policy == other.policy
    }
}

impl Eq for EnumTable {}

/// Normalizes, deduplicates and sorts `values`. Two different inputs that
/// land on the same canonical string are rejected.
pub fn build_enum_table<S: AsRef<str>>(
    values: &[S],
    policy: Policy,
) -> Result<EnumTable, NormalizeError> {
    if values.is_empty() {
        return Err(NormalizeError::EmptyTable);
    }
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in values {
        let raw = v.as_ref();
        let canon = normalize_text(raw, policy).into_string();
        let inputs = groups.entry(canon).or_default();
        if !inputs.iter().any(|s| s == raw) {
            inputs.push(raw.to_owned());
        }
    }
    if let Some((canonical, inputs)) = groups.iter().find(|(_, inputs)| inputs.len() > 1) {
        let mut inputs = inputs.clone();
        inputs.sort();
        return Err(NormalizeError::Ambiguous {
            canonical: canonical.clone(),
            inputs,
        });
    }
    // BTreeMap iteration is byte order on the canonical strings.
    Ok(EnumTable::from_sorted_unchecked(
        groups.into_keys().collect(),
        policy,
    ))
}

impl EnumTable {
    fn from_sorted_unchecked(entries: Vec<String>, policy: Policy) -> Self {
        let reverse = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i as u64))
            .collect();
        EnumTable {
            entries,
            reverse,
            policy,
        }
    }

    /// Adopts an already ordered list. Every entry must be canonical under
    /// `policy` and strictly increasing in byte order.
    pub fn from_entries(entries: Vec<String>, policy: Policy) -> Result<Self, NormalizeError> {
        if entries.is_empty() {
            return Err(NormalizeError::EmptyTable);
        }
        for (i, e) in entries.iter().enumerate() {
            if !is_canonical(e, policy) {
                return Err(NormalizeError::NotCanonical {
                    ordinal: i as u64,
                    value: e.clone(),
                });
            }
            if i > 0 && entries[i - 1].as_bytes() >= e.as_bytes() {
                return Err(NormalizeError::Unsorted {
                    ordinal: i as u64,
                    value: e.clone(),
                });
            }
        }
        Ok(Self::from_sorted_unchecked(entries, policy))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn encode(&self, value: &str) -> Result<u64, NormalizeError> {
        let canon = normalize_text(value, self.policy);
        self.reverse
            .get(canon.as_str())
            .copied()
            .ok_or_else(|| NormalizeError::UnknownValue(value.to_owned()))
    }

    pub fn decode(&self, ordinal: u64) -> Result<&str, NormalizeError> {
        usize::try_from(ordinal)
            .ok()
            .and_then(|i| self.entries.get(i))
            .map(String::as_str)
            .ok_or(NormalizeError::InvalidOrdinal {
                ordinal,
                size: self.entries.len() as u64,
            })
    }

    /// One entry per line in ordinal order.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R, policy: Policy) -> io::Result<Self> {
        let entries = r.lines().collect::<io::Result<Vec<_>>>()?;
        Self::from_entries(entries, policy)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn enum_encode(table: &EnumTable, value: &str) -> Result<u64, NormalizeError> {
    table.encode(value)
}

pub fn enum_decode(table: &EnumTable, ordinal: u64) -> Result<&str, NormalizeError> {
    table.decode(ordinal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ascii_folding_and_identity() {
        assert_eq!(normalize_text("chr19", Policy::FOLD).as_str(), "CHR19");
        assert_eq!(normalize_text("TC", Policy::FOLD).as_str(), "TC");
        assert_eq!(normalize_text("TC", Policy::EXACT).as_str(), "TC");
        assert_eq!(normalize_text("chr19", Policy::EXACT).as_str(), "chr19");
    }

    #[test]
    fn composes_decomposed_sequences() {
        // NormalizationTest.txt: 0065 0301 -> NFC 00E9, 0041 030A -> NFC 00C5.
        assert_eq!(
            normalize_text("e\u{0301}", Policy::EXACT).as_str(),
            "\u{00E9}"
        );
        assert_eq!(
            normalize_text("A\u{030A}", Policy::EXACT).as_str(),
            "\u{00C5}"
        );
        assert_eq!(
            normalize_text("e\u{0301}", Policy::FOLD).as_str(),
            "\u{00C9}"
        );
    }

    #[test]
    fn invalid_utf8_rejected() {
        assert_eq!(
            normalize_bytes(b"ab\xFFc", Policy::EXACT),
            Err(NormalizeError::InvalidEncoding { valid_up_to: 2 })
        );
        assert_eq!(normalize_bytes(b"ab", Policy::FOLD).unwrap().as_str(), "AB");
    }

    #[test]
    fn build_dedupes_and_sorts() {
        let t = build_enum_table(&["b", "a", "a"], Policy::FOLD).unwrap();
        assert_eq!(t.entries(), ["A", "B"]);
    }

    #[test]
    fn build_detects_collisions() {
        let err = build_enum_table(&["A", "a"], Policy::FOLD).unwrap_err();
        assert_eq!(
            err,
            NormalizeError::Ambiguous {
                canonical: "A".into(),
                inputs: vec!["A".into(), "a".into()],
            }
        );
        // Composed and decomposed spellings collide too.
        assert!(matches!(
            build_enum_table(&["\u{00E9}", "e\u{0301}"], Policy::EXACT),
            Err(NormalizeError::Ambiguous { .. })
        ));
        assert!(build_enum_table(&["A", "a"], Policy::EXACT).is_ok());
        assert_eq!(
            build_enum_table::<&str>(&[], Policy::EXACT),
            Err(NormalizeError::EmptyTable)
        );
    }

    #[test]
    fn lookup() {
        let t = build_enum_table(&["A", "B", "C"], Policy::FOLD).unwrap();
        assert_eq!(enum_encode(&t, "B"), Ok(1));
        assert_eq!(enum_encode(&t, "b"), Ok(1));
        assert_eq!(
            enum_encode(&t, "D"),
            Err(NormalizeError::UnknownValue("D".into()))
        );
        assert_eq!(enum_decode(&t, 0), Ok("A"));
        assert_eq!(
            enum_decode(&t, 3),
            Err(NormalizeError::InvalidOrdinal {
                ordinal: 3,
                size: 3
            })
        );
    }

    #[test]
    fn hundred_entries_fit_seven_bits() {
        let values: Vec<String> = (0..100).map(|i| format!("v{i:03}")).collect();
        let t = build_enum_table(&values, Policy::EXACT).unwrap();
        assert_eq!(t.len(), 100);
        assert_eq!(crate::schema::compute_width(t.len() as u64), Ok(7));
        for i in 0..100u64 {
            let s = enum_decode(&t, i).unwrap();
            assert_eq!(enum_encode(&t, s), Ok(i));
        }
    }

    #[test]
    fn from_entries_validates() {
        assert!(EnumTable::from_entries(vec!["A".into(), "B".into()], Policy::FOLD).is_ok());
        assert!(matches!(
            EnumTable::from_entries(vec!["B".into(), "A".into()], Policy::FOLD),
            Err(NormalizeError::Unsorted { ordinal: 1, .. })
        ));
        assert!(matches!(
            EnumTable::from_entries(vec!["A".into(), "A".into()], Policy::FOLD),
            Err(NormalizeError::Unsorted { ordinal: 1, .. })
        ));
        assert!(matches!(
            EnumTable::from_entries(vec!["a".into()], Policy::FOLD),
            Err(NormalizeError::NotCanonical { ordinal: 0, .. })
        ));
    }

    #[test]
    fn line_format_roundtrip() {
        let t = build_enum_table(&["X", "MT", "1", "10"], Policy::FOLD).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1\n10\nMT\nX\n");
        let back = EnumTable::read_from(&buf[..], Policy::FOLD).unwrap();
        assert_eq!(back, t);
        assert!(EnumTable::read_from(&b"B\nA\n"[..], Policy::FOLD).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,12}", fold: bool) {
            let p = Policy { case_fold: fold };
            let once = normalize_text(&s, p);
            let twice = normalize_text(&once, p);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn build_is_order_independent(mut vals in prop::collection::vec("[a-z]{1,4}", 1..30)) {
            let a = build_enum_table(&vals, Policy::EXACT).unwrap();
            vals.reverse();
            let b = build_enum_table(&vals, Policy::EXACT).unwrap();
            prop_assert_eq!(&a, &b);
            for (i, e) in a.entries().iter().enumerate() {
                prop_assert_eq!(a.encode(e).unwrap(), i as u64);
            }
        }
    }
}
