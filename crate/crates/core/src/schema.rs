//! Key schemas and the generic bit-section codec.
//!
//! A [`SchemaDecl`] is the declarative form read from a schema file. Once it
//! validates, [`SchemaDecl::compile`] produces a [`KeySchema`] carrying the
//! derived layout: each field gets `ceil(log2(cardinality))` bits, the first
//! field occupies the most significant bits, and any unused bits are zero
//! padding at the least significant end.
//!
//! Schema file format, one directive per line, `#` starts a comment:
//!
//! ```text
//! schema numkey
//! field letter1 enumeration 27
//!     value -
//!     value A
//!     ...
//! field number unsigned-integer 1125899906842624
//! ```

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::normalize::{is_canonical, EnumTable, Policy};
use crate::EncodedKey;

pub const KEY_BITS: u32 = 64;
pub const MAX_FIELD_BITS: u32 = 63;

/// Policy applied to text looked up in schema enumeration tables.
pub const SCHEMA_POLICY: Policy = Policy::EXACT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("cardinality {0} is degenerate, a field needs at least 2 distinct values")]
    DegenerateField(u64),
    #[error("expected {expected} values, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error("field {field}: value {value} overflows cardinality {cardinality}")]
    FieldOverflow {
        field: String,
        value: u64,
        cardinality: u64,
    },
    #[error("field {field}: unknown value {value:?}")]
    UnknownValue { field: String, value: String },
    #[error("field {field}: {found} value given to a {kind} field")]
    KindMismatch {
        field: String,
        kind: FieldKind,
        found: &'static str,
    },
    #[error("field {field}: cannot parse {text:?} as an unsigned integer")]
    NotANumber { field: String, text: String },
    #[error("field {field}: decoded ordinal {ordinal} is not below cardinality {cardinality}")]
    InvalidKey {
        field: String,
        ordinal: u64,
        cardinality: u64,
    },
    #[error("padding bits are not zero (0x{bits:016X})")]
    MalformedKey { bits: u64 },
    #[error("prefix of {got} values for a schema of {fields} fields")]
    PrefixLength { got: usize, fields: usize },
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid schema:\n{0}")]
    Invalid(ValidationReport),
}

/// Smallest bit count able to represent `cardinality` distinct values.
pub fn compute_width(cardinality: u64) -> Result<u32, CodecError> {
    if cardinality < 2 {
        return Err(CodecError::DegenerateField(cardinality));
    }
    Ok(KEY_BITS - (cardinality - 1).leading_zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Enumeration,
    UnsignedInteger,
    ReservedZero,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Enumeration => "enumeration",
            FieldKind::UnsignedInteger => "unsigned-integer",
            FieldKind::ReservedZero => "reserved-zero",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "enumeration" | "enum" => Some(FieldKind::Enumeration),
            "unsigned-integer" | "uint" => Some(FieldKind::UnsignedInteger),
            "reserved-zero" | "reserved" => Some(FieldKind::ReservedZero),
            _ => None,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declaration of one key attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    /// Distinct values including any null sentinel.
    pub cardinality: u64,
    /// Enumeration table in ordinal order; empty for other kinds.
    pub values: Vec<String>,
}

impl FieldSpec {
    pub fn enumeration<S: Into<String>>(name: &str, values: impl IntoIterator<Item = S>) -> Self {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        FieldSpec {
            name: name.to_owned(),
            kind: FieldKind::Enumeration,
            cardinality: values.len() as u64,
            values,
        }
    }

    pub fn uint(name: &str, cardinality: u64) -> Self {
        FieldSpec {
            name: name.to_owned(),
            kind: FieldKind::UnsignedInteger,
            cardinality,
            values: Vec::new(),
        }
    }

    pub fn reserved(name: &str, cardinality: u64) -> Self {
        FieldSpec {
            name: name.to_owned(),
            kind: FieldKind::ReservedZero,
            cardinality,
            values: Vec::new(),
        }
    }
}

/// A decoded or to-be-encoded attribute value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldValue {
    Ordinal(u64),
    Uint(u64),
    Text(String),
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Ordinal(v) | FieldValue::Uint(v) => write!(f, "{v}"),
            FieldValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    NoFields,
    EmptyName,
    DuplicateName,
    Degenerate,
    TooWide,
    TableSize,
    DuplicateEntry,
    UnsortedEntry,
    NonCanonicalEntry,
    UnexpectedTable,
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `None` for schema-wide rules.
    pub field: Option<String>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(name) => write!(f, "field {name}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A key schema as declared, before layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDecl {
    pub name: String,
    pub fields: Vec<FieldSpec>,
}

impl SchemaDecl {
    pub fn new(name: &str, fields: Vec<FieldSpec>) -> Self {
        SchemaDecl {
            name: name.to_owned(),
            fields,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let mut push = |field: Option<&str>, rule, message: String| {
            out.push(Violation {
                field: field.map(str::to_owned),
                rule,
                message,
            })
        };
        if self.fields.is_empty() {
            push(None, Rule::NoFields, "schema has no fields".into());
        }
        let mut names = HashSet::new();
        let mut total: u64 = 0;
        for f in &self.fields {
            let name = Some(f.name.as_str());
            if f.name.is_empty() {
                push(name, Rule::EmptyName, "empty field name".into());
            } else if !names.insert(f.name.as_str()) {
                push(name, Rule::DuplicateName, "duplicate field name".into());
            }
            match compute_width(f.cardinality) {
                Err(_) => push(
                    name,
                    Rule::Degenerate,
                    format!("cardinality {} < 2", f.cardinality),
                ),
                Ok(w) if w > MAX_FIELD_BITS => {
                    push(name, Rule::TooWide, format!("width {w} > {MAX_FIELD_BITS}"))
                }
                Ok(w) => total += u64::from(w),
            }
            if f.kind == FieldKind::Enumeration {
                if f.values.len() as u64 != f.cardinality {
                    push(
                        name,
                        Rule::TableSize,
                        format!(
                            "table has {} entries, cardinality is {}",
                            f.values.len(),
                            f.cardinality
                        ),
                    );
                }
                let mut seen = HashSet::new();
                for (i, v) in f.values.iter().enumerate() {
                    if !seen.insert(v.as_str()) {
                        push(name, Rule::DuplicateEntry, format!("duplicate entry {v:?}"));
                        continue;
                    }
                    if !is_canonical(v, SCHEMA_POLICY) {
                        push(
                            name,
                            Rule::NonCanonicalEntry,
                            format!("entry {v:?} is not in canonical form"),
                        );
                    }
                    if i > 0 && f.values[i - 1].as_bytes() > v.as_bytes() {
                        push(
                            name,
                            Rule::UnsortedEntry,
                            format!("entry {v:?} sorts before {:?}", f.values[i - 1]),
                        );
                    }
                }
            } else if !f.values.is_empty() {
                push(
                    name,
                    Rule::UnexpectedTable,
                    format!("{} field carries value entries", f.kind),
                );
            }
        }
        if total > u64::from(KEY_BITS) {
            push(
                None,
                Rule::Capacity,
                format!("total_bits {total} > {KEY_BITS}"),
            );
        }
        ValidationReport { violations: out }
    }

    pub fn compile(&self) -> Result<KeySchema, SchemaError> {
        let report = self.validate();
        if !report.is_ok() {
            return Err(SchemaError::Invalid(report));
        }
        let mut used = 0u32;
        let mut fields = Vec::with_capacity(self.fields.len());
        for spec in &self.fields {
            let width = compute_width(spec.cardinality).expect("validated");
            used += width;
            let table = match spec.kind {
                FieldKind::Enumeration => Some(
                    EnumTable::from_entries(spec.values.clone(), SCHEMA_POLICY).expect("validated"),
                ),
                _ => None,
            };
            fields.push(Field {
                spec: spec.clone(),
                width,
                shift: KEY_BITS - used,
                table,
            });
        }
        Ok(KeySchema {
            name: self.name.clone(),
            fields,
            total_bits: used,
        })
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let err = |line: usize, message: String| SchemaError::Parse { line, message };
        let mut name: Option<String> = None;
        let mut fields: Vec<FieldSpec> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (directive, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match directive {
                "schema" => {
                    if name.is_some() {
                        return Err(err(line_no, "duplicate schema directive".into()));
                    }
                    if rest.is_empty() || rest.contains(char::is_whitespace) {
                        return Err(err(line_no, "expected `schema <name>`".into()));
                    }
                    name = Some(rest.to_owned());
                }
                "field" => {
                    if name.is_none() {
                        return Err(err(line_no, "field before schema directive".into()));
                    }
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [fname, kind, card] = parts[..] else {
                        return Err(err(
                            line_no,
                            "expected `field <name> <kind> <cardinality>`".into(),
                        ));
                    };
                    let kind = FieldKind::parse(kind)
                        .ok_or_else(|| err(line_no, format!("unknown field kind {kind:?}")))?;
                    let cardinality = card
                        .parse::<u64>()
                        .map_err(|_| err(line_no, format!("bad cardinality {card:?}")))?;
                    fields.push(FieldSpec {
                        name: fname.to_owned(),
                        kind,
                        cardinality,
                        values: Vec::new(),
                    });
                }
                "value" => {
                    let field = fields
                        .last_mut()
                        .ok_or_else(|| err(line_no, "value outside of a field".into()))?;
                    if rest.is_empty() {
                        return Err(err(line_no, "empty value".into()));
                    }
                    field.values.push(rest.to_owned());
                }
                other => return Err(err(line_no, format!("unknown directive {other:?}"))),
            }
        }
        let name = name.ok_or_else(|| err(0, "missing schema directive".into()))?;
        Ok(SchemaDecl { name, fields })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("schema {}\n", self.name);
        for f in &self.fields {
            out.push_str(&format!("field {} {} {}\n", f.name, f.kind, f.cardinality));
            for v in &f.values {
                out.push_str(&format!("    value {v}\n"));
            }
        }
        out
    }
}

/// A laid-out field of a compiled schema.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    width: u32,
    shift: u32,
    table: Option<EnumTable>,
}

impl Field {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn kind(&self) -> FieldKind {
        self.spec.kind
    }

    pub fn cardinality(&self) -> u64 {
        self.spec.cardinality
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Offset of the section's least significant bit.
    pub fn shift(&self) -> u32 {
        self.shift
    }

    pub fn mask(&self) -> u64 {
        ((1u64 << self.width) - 1) << self.shift
    }

    pub fn table(&self) -> Option<&EnumTable> {
        self.table.as_ref()
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Resolves a value to the ordinal stored in this field's section.
    pub fn ordinal_of(&self, value: &FieldValue) -> Result<u64, CodecError> {
        let ordinal = match (self.spec.kind, value) {
            (_, FieldValue::Ordinal(v)) => *v,
            (FieldKind::UnsignedInteger | FieldKind::ReservedZero, FieldValue::Uint(v)) => *v,
            (FieldKind::Enumeration, FieldValue::Text(s)) => {
                let table = self.table.as_ref().expect("enumeration has table");
                table.encode(s).map_err(|_| CodecError::UnknownValue {
                    field: self.spec.name.clone(),
                    value: s.clone(),
                })?
            }
            (kind, other) => {
                return Err(CodecError::KindMismatch {
                    field: self.spec.name.clone(),
                    kind,
                    found: match other {
                        FieldValue::Text(_) => "text",
                        _ => "uint",
                    },
                })
            }
        };
        self.check_ordinal(ordinal)
            .map_err(|_| CodecError::FieldOverflow {
                field: self.spec.name.clone(),
                value: ordinal,
                cardinality: self.spec.cardinality,
            })
    }

    fn check_ordinal(&self, ordinal: u64) -> Result<u64, ()> {
        let limit = match self.spec.kind {
            FieldKind::ReservedZero => 1,
            _ => self.spec.cardinality,
        };
        if ordinal < limit {
            Ok(ordinal)
        } else {
            Err(())
        }
    }

    /// The natural decoded form: text for enumerations, integers otherwise.
    pub fn value_of(&self, ordinal: u64) -> FieldValue {
        match &self.table {
            Some(t) => FieldValue::Text(t.decode(ordinal).expect("checked ordinal").to_owned()),
            None => FieldValue::Uint(ordinal),
        }
    }

    /// Parses a text cell into this field's value type.
    pub fn parse_value(&self, text: &str) -> Result<FieldValue, CodecError> {
        match self.spec.kind {
            FieldKind::Enumeration => Ok(FieldValue::Text(text.to_owned())),
            _ => text
                .parse::<u64>()
                .map(FieldValue::Uint)
                .map_err(|_| CodecError::NotANumber {
                    field: self.spec.name.clone(),
                    text: text.to_owned(),
                }),
        }
    }
}

/// A validated schema with its derived bit layout.
#[derive(Debug, Clone)]
pub struct KeySchema {
    name: String,
    fields: Vec<Field>,
    total_bits: u32,
}

impl KeySchema {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// Low bits not covered by any field.
    pub fn padding_mask(&self) -> u64 {
        match KEY_BITS - self.total_bits {
            0 => 0,
            n => (1u64 << n) - 1,
        }
    }

    pub fn encode(&self, values: &[FieldValue]) -> Result<EncodedKey, CodecError> {
        self.check_count(values.len())?;
        self.pack(
            values
                .iter()
                .zip(&self.fields)
                .map(|(v, f)| f.ordinal_of(v)),
        )
    }

    pub fn encode_ordinals(&self, ordinals: &[u64]) -> Result<EncodedKey, CodecError> {
        self.check_count(ordinals.len())?;
        self.pack(
            ordinals
                .iter()
                .zip(&self.fields)
                .map(|(&o, f)| f.ordinal_of(&FieldValue::Ordinal(o))),
        )
    }

    fn pack(
        &self,
        ordinals: impl Iterator<Item = Result<u64, CodecError>>,
    ) -> Result<EncodedKey, CodecError> {
        let mut key = 0u64;
        for (ordinal, field) in ordinals.zip(&self.fields) {
            key |= ordinal? << field.shift;
        }
        Ok(EncodedKey(key))
    }

    fn check_count(&self, got: usize) -> Result<(), CodecError> {
        if got != self.fields.len() {
            return Err(CodecError::FieldCount {
                expected: self.fields.len(),
                got,
            });
        }
        Ok(())
    }

    pub fn decode_ordinals(&self, key: EncodedKey) -> Result<Vec<u64>, CodecError> {
        let padding = key.0 & self.padding_mask();
        if padding != 0 {
            return Err(CodecError::MalformedKey { bits: padding });
        }
        self.fields
            .iter()
            .map(|f| {
                let ordinal = (key.0 & f.mask()) >> f.shift;
                f.check_ordinal(ordinal)
                    .map_err(|_| CodecError::InvalidKey {
                        field: f.spec.name.clone(),
                        ordinal,
                        cardinality: f.spec.cardinality,
                    })
            })
            .collect()
    }

    pub fn decode(&self, key: EncodedKey) -> Result<Vec<FieldValue>, CodecError> {
        let ordinals = self.decode_ordinals(key)?;
        Ok(ordinals
            .into_iter()
            .zip(&self.fields)
            .map(|(o, f)| f.value_of(o))
            .collect())
    }

    /// Bounds of every key whose leading sections equal `leading`. All bits
    /// below the last given section, padding included, are set in `hi`.
    pub fn prefix_range(
        &self,
        leading: &[FieldValue],
    ) -> Result<(EncodedKey, EncodedKey), CodecError> {
        let k = leading.len();
        if k == 0 || k > self.fields.len() {
            return Err(CodecError::PrefixLength {
                got: k,
                fields: self.fields.len(),
            });
        }
        let lo = self.pack(
            leading
                .iter()
                .zip(&self.fields)
                .map(|(v, f)| f.ordinal_of(v)),
        )?;
        let shift = self.fields[k - 1].shift;
        let low = if shift == 0 { 0 } else { (1u64 << shift) - 1 };
        Ok((lo, EncodedKey(lo.0 | low)))
    }

    /// Parses one text row into field values.
    pub fn parse_row<S: AsRef<str>>(&self, cells: &[S]) -> Result<Vec<FieldValue>, CodecError> {
        self.check_count(cells.len())?;
        cells
            .iter()
            .zip(&self.fields)
            .map(|(c, f)| f.parse_value(c.as_ref()))
            .collect()
    }
}
