//! Reversible numeric composite keys.
//!
//! A composite key made of a few small attributes is packed into a single
//! `u64` whose bit sections are laid out most-significant-first in sort
//! priority order. The packing is bijective on the valid domain, so a key can
//! always be decoded back into its attributes, and numeric order on keys is
//! lexicographic order on the attribute tuples.
//!
//! * [`schema`] compiles declarative key schemas into bit layouts and packs or
//!   unpacks keys against them.
//! * [`normalize`] canonicalizes text attributes and maintains the small
//!   enumeration tables that turn bounded string sets into ordinals.
//! * [`variantkey`] and [`numkey`] are two fixed reference layouts for genetic
//!   variants and short phone numbers.
//! * [`keyindex`] is a sorted key column with binary search, range scans,
//!   merge joins and a small binary file format.
//! * [`hex`] is the fixed-width hexadecimal interchange form.

pub mod cli;
pub mod hex;
pub mod keyindex;
pub mod normalize;
pub mod numkey;
pub mod schema;
pub mod variantkey;

pub use hex::{from_hex, to_hex, HexError};
pub use keyindex::{merge_join, JoinKind, JoinResult, KeyIndex};
pub use normalize::{build_enum_table, normalize_text, CanonicalString, EnumTable, Policy};
pub use schema::{compute_width, FieldKind, FieldSpec, FieldValue, KeySchema, SchemaDecl};

/// A packed 64-bit key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EncodedKey(pub u64);

impl EncodedKey {
    #[inline]
    pub const fn value(self) -> u64 {
        self.0
    }
}

impl From<u64> for EncodedKey {
    fn from(v: u64) -> Self {
        EncodedKey(v)
    }
}

impl From<EncodedKey> for u64 {
    fn from(k: EncodedKey) -> Self {
        k.0
    }
}

impl std::fmt::Display for EncodedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&to_hex(*self))
    }
}

impl std::fmt::UpperHex for EncodedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::UpperHex::fmt(&self.0, f)
    }
}
