//! VariantKey: a 64-bit key for human genetic variants.
//!
//! ```text
//!  63    59 58                          31 30                             0
//! | CHROM  |            POS             |           REF+ALT             |
//! | 5 bits |          28 bits           |           31 bits             |
//! ```
//!
//! The REF+ALT section holds the alleles directly when they are short and
//! made of `ACGT` only:
//!
//! ```text
//! | ref len (4) | alt len (4) | up to 11 bases, 2 bits each (22) | 0 |
//! ```
//!
//! Anything else takes the partially reversible path: a 30-bit hash followed
//! by a set flag bit. Those keys still sort by chromosome and position, and
//! a [`RefAltLookup`] recovers the alleles.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::hex::{from_hex, to_hex};
use crate::normalize::{normalize_text, Policy};
use crate::EncodedKey;

pub const CHROM_SHIFT: u32 = 59;
pub const POS_SHIFT: u32 = 31;
pub const POS_LIMIT: u64 = 1 << 28;
pub const REFALT_MASK: u64 = (1 << 31) - 1;
pub const MAX_REVERSIBLE_BASES: usize = 11;
pub const CHROM_MAX: u8 = 25;
const HASH_BITS: u32 = 30;

#[derive(Debug, Error)]
pub enum VariantError {
    #[error("empty allele")]
    EmptyAllele,
    #[error("position {0} does not fit in 28 bits")]
    PositionOverflow(u64),
    #[error("invalid range: {min} > {max}")]
    InvalidRange { min: u64, max: u64 },
    #[error("chromosome ordinal {0} is not assigned")]
    InvalidChrom(u8),
    #[error("malformed key {key}: {reason}")]
    MalformedKey { key: EncodedKey, reason: String },
    #[error(
        "key {key} already maps to {existing_ref}/{existing_alt}, cannot add {new_ref}/{new_alt}"
    )]
    Collision {
        key: EncodedKey,
        existing_ref: String,
        existing_alt: String,
        new_ref: String,
        new_alt: String,
    },
    #[error("lookup line {line}: {message}")]
    LookupFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A normalized variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variant {
    pub chrom: String,
    pub pos: u64,
    pub reference: String,
    pub alt: String,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.chrom, self.pos, self.reference, self.alt
        )
    }
}

/// Strips a `chr` prefix, upper-cases, then trims the common allele suffix
/// and prefix while both alleles keep at least one base. Each trimmed
/// prefix base advances the position.
pub fn normalize_variant(
    chrom: &str,
    pos: u64,
    reference: &str,
    alt: &str,
) -> Result<Variant, VariantError> {
    if reference.is_empty() || alt.is_empty() {
        return Err(VariantError::EmptyAllele);
    }
    let label = normalize_text(chrom.trim(), Policy::FOLD).into_string();
    let label = label.strip_prefix("CHR").unwrap_or(&label).to_owned();

    let mut r: Vec<char> = normalize_text(reference, Policy::FOLD).chars().collect();
    let mut a: Vec<char> = normalize_text(alt, Policy::FOLD).chars().collect();
    while r.len() > 1 && a.len() > 1 && r.last() == a.last() {
        r.pop();
        a.pop();
    }
    let common = r
        .iter()
        .zip(&a)
        .take(r.len().min(a.len()) - 1)
        .take_while(|(x, y)| x == y)
        .count();
    Ok(Variant {
        chrom: label,
        pos: pos + common as u64,
        reference: r[common..].iter().collect(),
        alt: a[common..].iter().collect(),
    })
}

/// `1`..`22`, `X`=23, `Y`=24, `MT`/`M`=25; anything else is 0 (not available).
pub fn encode_chrom(label: &str) -> u8 {
    match label {
        "X" => 23,
        "Y" => 24,
        "MT" | "M" => 25,
        _ => match label.parse::<u8>() {
            Ok(n @ 1..=22) if !label.starts_with('0') => n,
            _ => 0,
        },
    }
}

pub fn decode_chrom(ordinal: u8) -> Option<String> {
    match ordinal {
        0 => Some("NA".to_owned()),
        1..=22 => Some(ordinal.to_string()),
        23 => Some("X".to_owned()),
        24 => Some("Y".to_owned()),
        25 => Some("MT".to_owned()),
        _ => None,
    }
}

fn base_code(b: char) -> Option<u64> {
    match b {
        'A' => Some(0),
        'C' => Some(1),
        'G' => Some(2),
        'T' => Some(3),
        _ => None,
    }
}

const BASES: [char; 4] = ['A', 'C', 'G', 'T'];

/// Deterministic 30-bit hash of an allele pair: FNV-1a over
/// `ref || 0x00 || alt`, finished with the murmur3 64-bit mixer.
pub fn refalt_hash(reference: &str, alt: &str) -> u32 {
    const OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    let bytes = reference
        .bytes()
        .chain(std::iter::once(0u8))
        .chain(alt.bytes());
    let mut h = bytes.fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME));
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> (64 - HASH_BITS)) as u32
}

pub fn is_reversible(reference: &str, alt: &str) -> bool {
    let (rl, al) = (reference.chars().count(), alt.chars().count());
    rl > 0
        && al > 0
        && rl + al <= MAX_REVERSIBLE_BASES
        && reference
            .chars()
            .chain(alt.chars())
            .all(|c| base_code(c).is_some())
}

/// The 31-bit REF+ALT section for already normalized alleles.
pub fn encode_refalt(reference: &str, alt: &str) -> u32 {
    if !is_reversible(reference, alt) {
        return (refalt_hash(reference, alt) << 1) | 1;
    }
    let rl = reference.len() as u64;
    let al = alt.len() as u64;
    let mut section = (rl << 27) | (al << 23);
    for (i, c) in reference.chars().chain(alt.chars()).enumerate() {
        section |= base_code(c).expect("checked") << (21 - 2 * i);
    }
    section as u32
}

/// Alleles recovered from a REF+ALT section.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Alleles {
    Known {
        reference: String,
        alt: String,
    },
    /// Hashed path with no lookup entry; carries the 30-bit hash.
    Hashed(u32),
}

impl Alleles {
    pub fn known(reference: &str, alt: &str) -> Self {
        Alleles::Known {
            reference: reference.to_owned(),
            alt: alt.to_owned(),
        }
    }
}

fn decode_refalt(key: EncodedKey) -> Result<Alleles, VariantError> {
    let section = key.0 & REFALT_MASK;
    if section & 1 == 1 {
        return Ok(Alleles::Hashed((section >> 1) as u32));
    }
    let malformed = |reason: String| VariantError::MalformedKey { key, reason };
    let rl = ((section >> 27) & 0xF) as usize;
    let al = ((section >> 23) & 0xF) as usize;
    if rl == 0 || al == 0 {
        return Err(malformed(format!("allele lengths {rl}/{al} include zero")));
    }
    if rl + al > MAX_REVERSIBLE_BASES {
        return Err(malformed(format!(
            "allele lengths {rl}+{al} exceed {MAX_REVERSIBLE_BASES} bases"
        )));
    }
    let used = 2 * (rl + al) as u32;
    let unused = (section >> 1) & ((1u64 << (22 - used)) - 1);
    if unused != 0 {
        return Err(malformed("nonzero bits after the last base".into()));
    }
    let mut bases = (0..rl + al).map(|i| BASES[((section >> (21 - 2 * i)) & 3) as usize]);
    let reference: String = bases.by_ref().take(rl).collect();
    let alt: String = bases.collect();
    Ok(Alleles::Known { reference, alt })
}

/// Key of an already normalized variant.
pub fn variant_key_normalized(v: &Variant) -> Result<EncodedKey, VariantError> {
    if v.pos >= POS_LIMIT {
        return Err(VariantError::PositionOverflow(v.pos));
    }
    let chrom = u64::from(encode_chrom(&v.chrom));
    let refalt = u64::from(encode_refalt(&v.reference, &v.alt));
    Ok(EncodedKey(
        (chrom << CHROM_SHIFT) | (v.pos << POS_SHIFT) | refalt,
    ))
}

pub fn variant_key(
    chrom: &str,
    pos: u64,
    reference: &str,
    alt: &str,
) -> Result<EncodedKey, VariantError> {
    variant_key_normalized(&normalize_variant(chrom, pos, reference, alt)?)
}

pub fn key_chrom(key: EncodedKey) -> u8 {
    (key.0 >> CHROM_SHIFT) as u8
}

pub fn key_pos(key: EncodedKey) -> u64 {
    (key.0 >> POS_SHIFT) & (POS_LIMIT - 1)
}

pub fn is_hashed(key: EncodedKey) -> bool {
    key.0 & 1 == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecodedVariant {
    pub chrom: String,
    pub pos: u64,
    pub alleles: Alleles,
}

pub fn decode_variant_key(
    key: EncodedKey,
    lookup: Option<&RefAltLookup>,
) -> Result<DecodedVariant, VariantError> {
    let ordinal = key_chrom(key);
    let chrom = decode_chrom(ordinal).ok_or(VariantError::InvalidChrom(ordinal))?;
    let mut alleles = decode_refalt(key)?;
    if let (Alleles::Hashed(_), Some(table)) = (&alleles, lookup) {
        if let Some((r, a)) = table.get(key) {
            alleles = Alleles::known(r, a);
        }
    }
    Ok(DecodedVariant {
        chrom,
        pos: key_pos(key),
        alleles,
    })
}

/// Key bounds covering every variant on `chrom` with position in
/// `[pos_min, pos_max]`, whatever its alleles.
pub fn variant_range(
    chrom: u8,
    pos_min: u64,
    pos_max: u64,
) -> Result<(EncodedKey, EncodedKey), VariantError> {
    if chrom > 31 {
        return Err(VariantError::InvalidChrom(chrom));
    }
    if pos_min > pos_max {
        return Err(VariantError::InvalidRange {
            min: pos_min,
            max: pos_max,
        });
    }
    if pos_max >= POS_LIMIT {
        return Err(VariantError::PositionOverflow(pos_max));
    }
    let c = u64::from(chrom) << CHROM_SHIFT;
    Ok((
        EncodedKey(c | (pos_min << POS_SHIFT)),
        EncodedKey(c | (pos_max << POS_SHIFT) | REFALT_MASK),
    ))
}

/// Alleles of hashed-path keys, keyed by the full 64-bit key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefAltLookup {
    entries: BTreeMap<u64, (String, String)>,
}

impl RefAltLookup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: EncodedKey) -> Option<(&str, &str)> {
        self.entries
            .get(&key.0)
            .map(|(r, a)| (r.as_str(), a.as_str()))
    }

    /// Records a hashed key. Re-adding the same alleles is a no-op; a
    /// different allele pair under the same key is a collision.
    pub fn insert(
        &mut self,
        key: EncodedKey,
        reference: &str,
        alt: &str,
    ) -> Result<(), VariantError> {
        if !is_hashed(key) {
            return Err(VariantError::MalformedKey {
                key,
                reason: "lookup entries need the hashed flag".into(),
            });
        }
        match self.entries.get(&key.0) {
            Some((r, a)) if r == reference && a == alt => Ok(()),
            Some((r, a)) => Err(VariantError::Collision {
                key,
                existing_ref: r.clone(),
                existing_alt: a.clone(),
                new_ref: reference.to_owned(),
                new_alt: alt.to_owned(),
            }),
            None => {
                self.entries
                    .insert(key.0, (reference.to_owned(), alt.to_owned()));
                Ok(())
            }
        }
    }

    /// Adds `v` if it encodes through the hash path and returns its key.
    pub fn add_variant(&mut self, v: &Variant) -> Result<EncodedKey, VariantError> {
        let key = variant_key_normalized(v)?;
        if is_hashed(key) {
            self.insert(key, &v.reference, &v.alt)?;
        }
        Ok(key)
    }

    pub fn from_variants<'a>(
        variants: impl IntoIterator<Item = &'a Variant>,
    ) -> Result<Self, VariantError> {
        let mut t = Self::new();
        for v in variants {
            t.add_variant(v)?;
        }
        Ok(t)
    }

    /// `HEXKEY<TAB>REF<TAB>ALT` lines in key order.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, (r, a)) in &self.entries {
            writeln!(w, "{}\t{r}\t{a}", to_hex(EncodedKey(*k)))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, VariantError> {
        let mut t = Self::new();
        let mut last: Option<u64> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let err = |message: String| VariantError::LookupFormat {
                line: line_no,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [k, r, a] = cols[..] else {
                return Err(err(format!("expected 3 columns, got {}", cols.len())));
            };
            let key = from_hex(k).map_err(|e| err(e.to_string()))?;
            if last.is_some_and(|prev| prev >= key.0) {
                return Err(err(format!("key {k} out of order")));
            }
            last = Some(key.0);
            t.insert(key, r, a).map_err(|e| err(e.to_string()))?;
        }
        Ok(t)
    }
}
