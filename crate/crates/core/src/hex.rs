//! Fixed-width hexadecimal representation of keys.
//!
//! Output is always 16 uppercase digits, zero padded, so byte-wise string
//! order matches numeric order. Parsing accepts either case.

use thiserror::Error;

use crate::EncodedKey;

pub const HEX_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("hex key must be {HEX_LEN} characters, got {0}")]
    Length(usize),
    #[error("invalid hex character {ch:?} at position {pos}")]
    InvalidChar { pos: usize, ch: char },
}

pub fn to_hex(key: EncodedKey) -> String {
    format!("{:016X}", key.0)
}

pub fn from_hex(text: &str) -> Result<EncodedKey, HexError> {
    let n = text.chars().count();
    if n != HEX_LEN {
        return Err(HexError::Length(n));
    }
    let mut v = 0u64;
    for (pos, ch) in text.chars().enumerate() {
        let d = ch.to_digit(16).ok_or(HexError::InvalidChar { pos, ch })?;
        v = (v << 4) | u64::from(d);
    }
    Ok(EncodedKey(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_vectors() {
        assert_eq!(to_hex(EncodedKey(11015544076520914944)), "98DF12F988B00000");
        assert_eq!(to_hex(EncodedKey(5548434740922426374)), "4D000000001E2406");
        assert_eq!(to_hex(EncodedKey(0)), "0000000000000000");
        assert_eq!(
            from_hex("98DF12F988B00000").unwrap().0,
            11015544076520914944
        );
        assert_eq!(from_hex("0000000000000000").unwrap().0, 0);
        assert_eq!(from_hex("98df12f988b00000"), from_hex("98DF12F988B00000"));
    }

    #[test]
    fn parse_errors_carry_position() {
        assert_eq!(from_hex("ZZZZ"), Err(HexError::Length(4)));
        assert_eq!(from_hex("98DF12F988B0000"), Err(HexError::Length(15)));
        assert_eq!(
            from_hex("98DF12F98XB00000"),
            Err(HexError::InvalidChar { pos: 9, ch: 'X' })
        );
        assert!(matches!(
            from_hex("+8DF12F988B00000"),
            Err(HexError::InvalidChar { pos: 0, .. })
        ));
    }

    proptest! {
        #[test]
        fn roundtrip(k: u64) {
            let h = to_hex(EncodedKey(k));
            prop_assert_eq!(h.len(), HEX_LEN);
            prop_assert_eq!(from_hex(&h).unwrap(), EncodedKey(k));
            prop_assert_eq!(from_hex(&h.to_lowercase()).unwrap(), EncodedKey(k));
        }

        #[test]
        fn string_order_matches_numeric_order(a: u64, b: u64) {
            let (ha, hb) = (to_hex(EncodedKey(a)), to_hex(EncodedKey(b)));
            prop_assert_eq!(ha.cmp(&hb), a.cmp(&b));
        }
    }
}
