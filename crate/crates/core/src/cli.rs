//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage or I/O
//! failure. Diagnostics go to the error stream only.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::hex::{from_hex, to_hex, HEX_LEN};
use crate::keyindex::{merge_join, JoinKind, KeyIndex};
use crate::numkey::{decode_num_key, num_key};
use crate::schema::{KeySchema, SchemaDecl, SchemaError};
use crate::variantkey::{
    decode_variant_key, normalize_variant, Alleles, RefAltLookup, VariantError,
};
use crate::EncodedKey;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rnck", version, about = "Reversible numeric composite keys")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schema file utilities
    Schema {
        #[command(subcommand)]
        command: SchemaCommand,
    },
    /// Encode delimited rows into keys using a schema file
    Encode {
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Decode keys into delimited rows using a schema file
    Decode {
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Genetic variant keys (CHROM POS REF ALT)
    Variantkey {
        #[command(subcommand)]
        command: CodecCommand,
    },
    /// Phone number keys (COUNTRY DIGITS)
    Numkey {
        #[command(subcommand)]
        command: CodecCommand,
    },
    /// Sorted key index files
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum SchemaCommand {
    /// Check a schema file and report its bit layout
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum CodecCommand {
    Encode {
        #[command(flatten)]
        io: IoArgs,
        /// Write the hashed-allele lookup table here (variantkey only)
        #[arg(long)]
        lookup: Option<PathBuf>,
    },
    Decode {
        #[command(flatten)]
        io: IoArgs,
        /// Lookup table for hashed alleles (variantkey only)
        #[arg(long)]
        lookup: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Build an index file from a stream of keys, one per line
    Build {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Print the first and last position of a key
    Search {
        index: PathBuf,
        key: String,
        #[arg(long)]
        decimal: bool,
    },
    /// Print start position and count of keys in [LO, HI]
    Range {
        index: PathBuf,
        lo: String,
        hi: String,
        #[arg(long)]
        decimal: bool,
    },
    /// Merge-join two indexes and print position pairs
    Join {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value = "inner")]
        kind: JoinKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file; stdin when absent
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Field delimiter (a single character, or `\t`)
    #[arg(long, default_value = "\t", value_parser = parse_delimiter)]
    pub delimiter: char,
    /// Render (or parse) keys as decimal instead of hex
    #[arg(long)]
    pub decimal: bool,
    /// Abort on the first malformed row instead of skipping it
    #[arg(long)]
    pub strict: bool,
}

fn parse_delimiter(s: &str) -> Result<char, String> {
    match s {
        "\\t" | "tab" => Ok('\t'),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(format!("delimiter must be a single character, got {s:?}")),
            }
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m,
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

/// Parses a key as hex when it is exactly 16 characters, otherwise as
/// decimal. `decimal` forces decimal.
pub fn parse_key(text: &str, decimal: bool) -> Result<EncodedKey, String> {
    let text = text.trim();
    if !decimal && text.len() == HEX_LEN {
        return from_hex(text).map_err(|e| format!("malformed key {text:?}: {e}"));
    }
    text.parse::<u64>()
        .map(EncodedKey)
        .map_err(|_| format!("malformed key {text:?}"))
}

fn render_key(key: EncodedKey, decimal: bool) -> String {
    if decimal {
        key.0.to_string()
    } else {
        to_hex(key)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(
    command: Command,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        Command::Schema {
            command: SchemaCommand::Validate { file },
        } => schema_validate(&file, stdout),
        Command::Encode { schema, io } => {
            let schema = load_schema(&schema)?;
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let values = schema.parse_row(cells).map_err(|e| e.to_string())?;
                let key = schema.encode(&values).map_err(|e| e.to_string())?;
                Ok(render_key(key, io.decimal))
            })
        }
        Command::Decode { schema, io } => {
            let schema = load_schema(&schema)?;
            let delim = io.delimiter.to_string();
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let key = parse_key(cells[0], io.decimal)?;
                let values = schema.decode(key).map_err(|e| e.to_string())?;
                Ok(values
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(&delim))
            })
        }
        Command::Variantkey { command } => variantkey(command, stdin, stdout, stderr),
        Command::Numkey { command } => numkey(command, stdin, stdout, stderr),
        Command::Index { command } => index(command, stdin, stdout, stderr),
    }
}

fn load_schema(path: &Path) -> Result<KeySchema, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let decl =
        SchemaDecl::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    decl.compile().map_err(|e| match e {
        SchemaError::Invalid(report) => {
            Failure::Data(format!("{}: invalid schema\n{report}", path.display()))
        }
        other => Failure::Usage(other.to_string()),
    })
}

fn schema_validate(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let decl =
        SchemaDecl::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report = decl.validate();
    if !report.is_ok() {
        let mut msg = format!(
            "schema {}: {} violation(s)",
            decl.name,
            report.violations.len()
        );
        for v in &report.violations {
            msg.push_str(&format!("\n  {v}"));
        }
        return Err(Failure::Data(msg));
    }
    let schema = decl.compile().expect("validated");
    let w = |e: io::Error| Failure::Usage(e.to_string());
    writeln!(out, "schema {}: ok", schema.name()).map_err(w)?;
    for f in schema.fields() {
        writeln!(
            out,
            "  {}\t{}\tcardinality={}\twidth={}\tshift={}",
            f.name(),
            f.kind(),
            f.cardinality(),
            f.width(),
            f.shift()
        )
        .map_err(w)?;
    }
    writeln!(out, "total_bits {} of 64", schema.total_bits()).map_err(w)?;
    Ok(())
}

fn open_input<'a>(
    path: &Option<PathBuf>,
    stdin: &'a mut dyn BufRead,
) -> Result<Box<dyn BufRead + 'a>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufReader::new(
            File::open(p).map_err(|e| io_failure(p, e))?,
        ))),
        None => Ok(Box::new(stdin)),
    }
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        ))),
        None => Ok(Box::new(stdout)),
    }
}

/// Streams rows through `f`, one output line per accepted row. Bad rows are
/// reported with their line number and skipped unless `--strict`.
fn process_rows<F>(
    io_args: &IoArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
    mut f: F,
) -> Result<(), Failure>
where
    F: FnMut(&[&str]) -> Result<String, String>,
{
    let input = open_input(&io_args.input, stdin)?;
    let mut out = open_output(&io_args.output, stdout)?;
    let w = |e: io::Error| Failure::Usage(e.to_string());
    let mut skipped = 0usize;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(w)?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(io_args.delimiter).collect();
        match f(&cells) {
            Ok(rendered) => writeln!(out, "{rendered}").map_err(w)?,
            Err(msg) => {
                let msg = format!("line {}: {msg}", i + 1);
                if io_args.strict {
                    return Err(Failure::Data(msg));
                }
                writeln!(stderr, "{msg}").map_err(w)?;
                skipped += 1;
            }
        }
    }
    out.flush().map_err(w)?;
    if skipped > 0 {
        writeln!(stderr, "skipped {skipped} malformed row(s)").map_err(w)?;
    }
    Ok(())
}

fn expect_cols<'a, const N: usize>(cells: &[&'a str]) -> Result<[&'a str; N], String> {
    <[&str; N]>::try_from(cells).map_err(|_| format!("expected {N} columns, got {}", cells.len()))
}

fn variantkey(
    command: CodecCommand,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        CodecCommand::Encode { io, lookup } => {
            let mut table = RefAltLookup::new();
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let [chrom, pos, r, a] = expect_cols(cells)?;
                let pos: u64 = pos
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad position {pos:?}"))?;
                let v = normalize_variant(chrom, pos, r, a).map_err(|e| e.to_string())?;
                let key = table.add_variant(&v).map_err(|e| e.to_string())?;
                Ok(render_key(key, io.decimal))
            })?;
            if let Some(path) = lookup {
                let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
                table
                    .write_to(BufWriter::new(file))
                    .map_err(|e| io_failure(&path, e))?;
            }
            Ok(())
        }
        CodecCommand::Decode { io, lookup } => {
            let table = match lookup {
                Some(path) => {
                    let file = File::open(&path).map_err(|e| io_failure(&path, e))?;
                    Some(
                        RefAltLookup::read_from(BufReader::new(file)).map_err(|e| match e {
                            VariantError::Io(e) => io_failure(&path, e),
                            other => Failure::Data(format!("{}: {other}", path.display())),
                        })?,
                    )
                }
                None => None,
            };
            let d = io.delimiter;
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let key = parse_key(cells[0], io.decimal)?;
                let v = decode_variant_key(key, table.as_ref()).map_err(|e| e.to_string())?;
                let (r, a) = match v.alleles {
                    Alleles::Known { reference, alt } => (reference, alt),
                    Alleles::Hashed(h) => (format!("HASH:{h:08X}"), ".".to_owned()),
                };
                Ok(format!("{}{d}{}{d}{r}{d}{a}", v.chrom, v.pos))
            })
        }
    }
}

fn numkey(
    command: CodecCommand,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        CodecCommand::Encode { io, lookup } => {
            if lookup.is_some() {
                return Err(Failure::Usage("--lookup applies to variantkey only".into()));
            }
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let [country, digits] = expect_cols(cells)?;
                let key = num_key(country.trim(), digits.trim()).map_err(|e| e.to_string())?;
                Ok(render_key(key, io.decimal))
            })
        }
        CodecCommand::Decode { io, lookup } => {
            if lookup.is_some() {
                return Err(Failure::Usage("--lookup applies to variantkey only".into()));
            }
            let d = io.delimiter;
            process_rows(&io, stdin, stdout, stderr, |cells| {
                let key = parse_key(cells[0], io.decimal)?;
                let p = decode_num_key(key).map_err(|e| e.to_string())?;
                Ok(format!("{}{d}{}", p.country, p.digits))
            })
        }
    }
}

fn read_index(path: &Path) -> Result<KeyIndex, Failure> {
    KeyIndex::read_file(path).map_err(|e| match e {
        crate::keyindex::IndexError::Io(e) => io_failure(path, e),
        other => Failure::Data(format!("{}: {other}", path.display())),
    })
}

fn index(
    command: IndexCommand,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let w = |e: io::Error| Failure::Usage(e.to_string());
    match command {
        IndexCommand::Build { io } => {
            let Some(dest) = io.output.clone() else {
                return Err(Failure::Usage("index build needs --output PATH".into()));
            };
            let mut keys = Vec::new();
            let mut sink = io::sink();
            let args = IoArgs { output: None, ..io };
            process_rows(&args, stdin, &mut sink, stderr, |cells| {
                keys.push(parse_key(cells[0], args.decimal)?);
                Ok(String::new())
            })?;
            let index = KeyIndex::build(keys);
            index.write_file(&dest).map_err(|e| io_failure(&dest, e))?;
            writeln!(stderr, "wrote {} keys to {}", index.len(), dest.display()).map_err(w)?;
            Ok(())
        }
        IndexCommand::Search {
            index,
            key,
            decimal,
        } => {
            let key = parse_key(&key, decimal).map_err(Failure::Usage)?;
            let idx = read_index(&index)?;
            match (idx.find_first(key), idx.find_last(key)) {
                (Some(first), Some(last)) => {
                    writeln!(stdout, "{first}\t{last}").map_err(w)?;
                    Ok(())
                }
                _ => Err(Failure::Data(format!("key {} not found", to_hex(key)))),
            }
        }
        IndexCommand::Range {
            index,
            lo,
            hi,
            decimal,
        } => {
            let lo = parse_key(&lo, decimal).map_err(Failure::Usage)?;
            let hi = parse_key(&hi, decimal).map_err(Failure::Usage)?;
            if lo > hi {
                return Err(Failure::Usage(format!(
                    "range lower bound {} exceeds upper bound {}",
                    to_hex(lo),
                    to_hex(hi)
                )));
            }
            let idx = read_index(&index)?;
            let (start, count) = idx.range_scan(lo, hi).expect("lo <= hi");
            writeln!(stdout, "{start}\t{count}").map_err(w)?;
            Ok(())
        }
        IndexCommand::Join {
            left,
            right,
            kind,
            output,
        } => {
            let (l, r) = (read_index(&left)?, read_index(&right)?);
            let result = merge_join(&l, &r, kind);
            let mut out = open_output(&output, stdout)?;
            let cell = |p: Option<usize>| p.map_or_else(|| "-".to_owned(), |p| p.to_string());
            for (a, b) in result.rows {
                writeln!(out, "{}\t{}", cell(a), cell(b)).map_err(w)?;
            }
            out.flush().map_err(w)
        }
    }
}
