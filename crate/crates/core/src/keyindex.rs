//! Sorted key column with binary search, range scans and merge joins.
//!
//! On-disk layout (`.rnck`), all integers little-endian:
//!
//! ```text
//! offset 0   "RNCK"
//! offset 4   u32 format version (1)
//! offset 8   u64 key count
//! offset 16  count x u64 keys, ascending
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::EncodedKey;

pub const MAGIC: [u8; 4] = *b"RNCK";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: EncodedKey, hi: EncodedKey },
    #[error("format error at offset {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(offset: u64, message: impl Into<String>) -> IndexError {
    IndexError::Format {
        offset,
        message: message.into(),
    }
}

/// Immutable ascending sequence of keys. Duplicates are allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyIndex {
    keys: Vec<u64>,
}

impl KeyIndex {
    pub fn build(keys: impl IntoIterator<Item = EncodedKey>) -> Self {
        let mut keys: Vec<u64> = keys.into_iter().map(|k| k.0).collect();
        keys.sort_unstable();
        KeyIndex { keys }
    }

    /// Adopts keys that must already be ascending.
    pub fn from_sorted(keys: Vec<u64>) -> Result<Self, IndexError> {
        if let Some(i) = keys.windows(2).position(|w| w[0] > w[1]) {
            return Err(format_err(
                (HEADER_LEN + 8 * (i + 1)) as u64,
                format!("key {} is smaller than its predecessor", i + 1),
            ));
        }
        Ok(KeyIndex { keys })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn get(&self, pos: usize) -> Option<EncodedKey> {
        self.keys.get(pos).copied().map(EncodedKey)
    }

    /// Smallest position holding `key`.
    pub fn find_first(&self, key: EncodedKey) -> Option<usize> {
        let i = self.keys.partition_point(|&k| k < key.0);
        (self.keys.get(i) == Some(&key.0)).then_some(i)
    }

    /// Largest position holding `key`.
    pub fn find_last(&self, key: EncodedKey) -> Option<usize> {
        let i = self.keys.partition_point(|&k| k <= key.0);
        (i > 0 && self.keys[i - 1] == key.0).then(|| i - 1)
    }

    /// `(start, count)` of the run with `lo <= key <= hi`.
    pub fn range_scan(&self, lo: EncodedKey, hi: EncodedKey) -> Result<(usize, usize), IndexError> {
        if lo > hi {
            return Err(IndexError::InvalidRange { lo, hi });
        }
        let start = self.keys.partition_point(|&k| k < lo.0);
        let end = start + self.keys[start..].partition_point(|&k| k <= hi.0);
        Ok((start, end - start))
    }

    pub fn write_to<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.keys.len() as u64).to_le_bytes())?;
        for k in &self.keys {
            w.write_all(&k.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, IndexError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, IndexError> {
        if buf.len() < HEADER_LEN {
            return Err(format_err(
                buf.len() as u64,
                format!("truncated header: {} of {HEADER_LEN} bytes", buf.len()),
            ));
        }
        if buf[..4] != MAGIC {
            return Err(format_err(0, "bad magic"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(format_err(4, format!("unsupported version {version}")));
        }
        let count = u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
        let payload = &buf[HEADER_LEN..];
        let expected = count
            .checked_mul(8)
            .ok_or_else(|| format_err(8, "key count overflows"))?;
        if (payload.len() as u64) < expected {
            return Err(format_err(
                buf.len() as u64,
                format!(
                    "truncated payload: {count} keys need {expected} bytes, found {}",
                    payload.len()
                ),
            ));
        }
        if payload.len() as u64 > expected {
            return Err(format_err(
                HEADER_LEN as u64 + expected,
                "trailing bytes after last key",
            ));
        }
        let keys = payload
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_sorted(keys)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_to(File::create(path)?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

impl FromIterator<EncodedKey> for KeyIndex {
    fn from_iter<I: IntoIterator<Item = EncodedKey>>(iter: I) -> Self {
        KeyIndex::build(iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Full,
}

impl JoinKind {
    pub const ALL: [JoinKind; 4] = [
        JoinKind::Inner,
        JoinKind::Left,
        JoinKind::Right,
        JoinKind::Full,
    ];

    fn keeps_left(self) -> bool {
        matches!(self, JoinKind::Left | JoinKind::Full)
    }

    fn keeps_right(self) -> bool {
        matches!(self, JoinKind::Right | JoinKind::Full)
    }
}

impl std::str::FromStr for JoinKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inner" => Ok(JoinKind::Inner),
            "left" => Ok(JoinKind::Left),
            "right" => Ok(JoinKind::Right),
            "full" => Ok(JoinKind::Full),
            _ => Err(format!("unknown join kind {s:?}")),
        }
    }
}

/// Rows of position pairs; `None` marks the unmatched side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinResult {
    pub rows: Vec<(Option<usize>, Option<usize>)>,
}

impl JoinResult {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn run_end(keys: &[u64], start: usize) -> usize {
    let k = keys[start];
    start + keys[start..].partition_point(|&x| x == k)
}

/// Single pass over both sorted inputs. Equal-key runs produce the cross
/// product of their positions, left-major. Rows come out in key order.
pub fn merge_join(left: &KeyIndex, right: &KeyIndex, kind: JoinKind) -> JoinResult {
    let (l, r) = (left.keys(), right.keys());
    let mut rows = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < l.len() && j < r.len() {
        match l[i].cmp(&r[j]) {
            std::cmp::Ordering::Less => {
                if kind.keeps_left() {
                    rows.push((Some(i), None));
                }
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if kind.keeps_right() {
                    rows.push((None, Some(j)));
                }
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let (li, rj) = (run_end(l, i), run_end(r, j));
                for a in i..li {
                    rows.extend((j..rj).map(|b| (Some(a), Some(b))));
                }
                i = li;
                j = rj;
            }
        }
    }
    if kind.keeps_left() {
        rows.extend((i..l.len()).map(|a| (Some(a), None)));
    }
    if kind.keeps_right() {
        rows.extend((j..r.len()).map(|b| (None, Some(b))));
    }
    JoinResult { rows }
}
