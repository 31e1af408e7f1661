//! NumKey: a 64-bit key for short codes and E.164 local numbers.
//!
//! ```text
//!  63   59 58   54 53                                  4 3      0
//! | L1   | L2    |              NUMBER                 | LENGTH |
//! | 5    | 5     |              50 bits                | 4 bits |
//! ```
//!
//! `L1`/`L2` are the two country letters as `A`=1 .. `Z`=26. The length
//! section keeps leading zeros significant, so `"0123"` and `"123"` map to
//! different keys.

use thiserror::Error;

use crate::EncodedKey;

pub const MAX_DIGITS: usize = 15;
const LETTER1_SHIFT: u32 = 59;
const LETTER2_SHIFT: u32 = 54;
const NUMBER_SHIFT: u32 = 4;
const NUMBER_MASK: u64 = (1 << 50) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumKeyError {
    #[error("country code {0:?} must be two letters A-Z")]
    Country(String),
    #[error("number {0:?} must be at most {MAX_DIGITS} decimal digits")]
    Number(String),
    #[error("empty number")]
    EmptyNumber,
    #[error("key {key}: letter section {ordinal} is outside A-Z")]
    InvalidKey { key: EncodedKey, ordinal: u64 },
    #[error("key {key}: value {value} does not fit in {length} digits")]
    InconsistentKey {
        key: EncodedKey,
        value: u64,
        length: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhoneNumber {
    pub country: String,
    pub digits: String,
}

fn letter_ordinal(c: u8) -> Option<u64> {
    c.is_ascii_alphabetic()
        .then(|| u64::from(c.to_ascii_uppercase() - b'A' + 1))
}

pub fn num_key(country: &str, digits: &str) -> Result<EncodedKey, NumKeyError> {
    let letters = country.as_bytes();
    let [l1, l2] = letters else {
        return Err(NumKeyError::Country(country.to_owned()));
    };
    let (Some(l1), Some(l2)) = (letter_ordinal(*l1), letter_ordinal(*l2)) else {
        return Err(NumKeyError::Country(country.to_owned()));
    };
    if digits.is_empty() {
        return Err(NumKeyError::EmptyNumber);
    }
    if digits.len() > MAX_DIGITS || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(NumKeyError::Number(digits.to_owned()));
    }
    // 15 digits < 2^50
    let value: u64 = digits.parse().expect("at most 15 ascii digits");
    Ok(EncodedKey(
        (l1 << LETTER1_SHIFT)
            | (l2 << LETTER2_SHIFT)
            | (value << NUMBER_SHIFT)
            | digits.len() as u64,
    ))
}

pub fn decode_num_key(key: EncodedKey) -> Result<PhoneNumber, NumKeyError> {
    let letter = |shift: u32| {
        let ordinal = (key.0 >> shift) & 0x1F;
        match ordinal {
            1..=26 => Ok(char::from(b'A' + ordinal as u8 - 1)),
            _ => Err(NumKeyError::InvalidKey { key, ordinal }),
        }
    };
    let country: String = [letter(LETTER1_SHIFT)?, letter(LETTER2_SHIFT)?]
        .into_iter()
        .collect();
    let value = (key.0 >> NUMBER_SHIFT) & NUMBER_MASK;
    let length = key.0 & 0xF;
    if length == 0 || value >= 10u64.pow(length as u32) {
        return Err(NumKeyError::InconsistentKey { key, value, length });
    }
    Ok(PhoneNumber {
        country,
        digits: format!("{value:0width$}", width = length as usize),
    })
}
