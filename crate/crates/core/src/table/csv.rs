//! RFC 4180 reading and writing.
//!
//! The reader is strict: a record with the wrong number of fields or a
//! quote that never closes is an error carrying the 1-based line number
//! where the offending record starts.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::value::{parse_bool, parse_number};
use super::{ColumnSpec, ColumnType, Provenance, Row, Table, TableError, TableId, Value};

/// How nulls are spelled in a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullPolicy {
    /// Empty cells and `NULL` (any case) are null.
    #[default]
    Standard,
    /// Only `\N` is null; empty cells are empty text. Used for ground-truth
    /// files where the two must stay distinct.
    Explicit,
}

impl NullPolicy {
    fn is_null(self, raw: &str) -> bool {
        match self {
            NullPolicy::Standard => raw.is_empty() || raw.eq_ignore_ascii_case("null"),
            NullPolicy::Explicit => raw == "\\N",
        }
    }

    fn null_token(self) -> &'static str {
        match self {
            NullPolicy::Standard => "",
            NullPolicy::Explicit => "\\N",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub header: bool,
    pub type_inference: bool,
    pub nulls: NullPolicy,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            header: true,
            type_inference: true,
            nulls: NullPolicy::Standard,
        }
    }
}

/// Loads a CSV file. The table id is the file stem.
pub fn load_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Table, TableError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => TableError::FileNotFound(display.clone()),
        _ => TableError::Io {
            path: display.clone(),
            source: e,
        },
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let table = read_csv(file, &name, opts)?;
    Ok(table.relabel(name, Provenance::SourcePath(display)))
}

/// Loads every `*.csv` file directly inside `dir`, keyed by file stem.
/// A directory without CSV files yields an empty map.
pub fn load_csv_dir(dir: impl AsRef<Path>, opts: CsvOptions) -> Result<BTreeMap<String, Table>, TableError> {
    let dir = dir.as_ref();
    let display = dir.display().to_string();
    let entries = std::fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => TableError::FileNotFound(display.clone()),
        _ => TableError::Io {
            path: display.clone(),
            source: e,
        },
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| TableError::Io {
                path: display.clone(),
                source: e,
            })?
            .path();
        let is_csv = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("csv"));
        if is_csv && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    let mut out = BTreeMap::new();
    for p in paths {
        let t = load_csv(&p, opts)?;
        out.insert(t.id().0.clone(), t);
    }
    Ok(out)
}

pub fn read_csv(mut reader: impl Read, name: &str, opts: CsvOptions) -> Result<Table, TableError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| TableError::Io {
        path: name.to_string(),
        source: e,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| TableError::MalformedCsv {
        line: line_of_offset(e.as_bytes(), e.utf8_error().valid_up_to()),
        reason: "invalid UTF-8".to_string(),
    })?;
    read_csv_str(&text, name, opts)
}

fn line_of_offset(bytes: &[u8], offset: usize) -> usize {
    1 + bytes[..offset].iter().filter(|&&b| b == b'\n').count()
}

pub fn read_csv_str(text: &str, name: &str, opts: CsvOptions) -> Result<Table, TableError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records = parse_records(text)?.into_iter();

    let (names, width) = if opts.header {
        match records.next() {
            Some((_, fields)) => {
                let width = fields.len();
                (dedupe_names(fields), width)
            }
            None => (Vec::new(), 0),
        }
    } else {
        let mut peek = records.clone();
        let width = peek.next().map_or(0, |(_, f)| f.len());
        ((1..=width).map(|i| format!("column_{i}")).collect(), width)
    };

    let mut raw_rows: Vec<Vec<Option<String>>> = Vec::new();
    for (line, fields) in records {
        if fields.len() != width {
            return Err(TableError::MalformedCsv {
                line,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        raw_rows.push(
            fields
                .into_iter()
                .map(|f| if opts.nulls.is_null(&f) { None } else { Some(f) })
                .collect(),
        );
    }

    let types: Vec<ColumnType> = (0..width)
        .map(|c| {
            if opts.type_inference {
                infer_type(raw_rows.iter().filter_map(|r| r[c].as_deref()))
            } else {
                ColumnType::Text
            }
        })
        .collect();

    let rows: Vec<Row> = raw_rows
        .into_iter()
        .map(|raw| {
            raw.into_iter()
                .zip(&types)
                .map(|(cell, ty)| convert(cell, *ty))
                .collect()
        })
        .collect();
    let schema = names
        .into_iter()
        .zip(&types)
        .map(|(n, ty)| ColumnSpec::new(n, *ty))
        .collect();
    Table::new(TableId(name.to_string()), schema, rows, Provenance::Derived)
}

fn infer_type<'a>(cells: impl Iterator<Item = &'a str>) -> ColumnType {
    let mut any = false;
    let mut all_num = true;
    let mut all_bool = true;
    for c in cells {
        any = true;
        all_num &= parse_number(c).is_some();
        all_bool &= parse_bool(c).is_some();
        if !all_num && !all_bool {
            return ColumnType::Text;
        }
    }
    match (any, all_num, all_bool) {
        (false, _, _) => ColumnType::Text,
        (true, true, _) => ColumnType::Number,
        (true, false, true) => ColumnType::Boolean,
        _ => ColumnType::Text,
    }
}

fn convert(cell: Option<String>, ty: ColumnType) -> Value {
    let Some(cell) = cell else {
        return Value::Null;
    };
    match ty {
        ColumnType::Number => parse_number(&cell).map_or(Value::Text(cell), Value::Number),
        ColumnType::Boolean => parse_bool(&cell).map_or(Value::Text(cell), Value::Bool),
        ColumnType::Text | ColumnType::Mixed => Value::Text(cell),
    }
}

fn dedupe_names(fields: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(fields.len());
    let mut taken = std::collections::HashSet::new();
    for (i, f) in fields.into_iter().enumerate() {
        let base = if f.is_empty() {
            format!("column_{}", i + 1)
        } else {
            f
        };
        let mut name = base.clone();
        let mut k = 2;
        while taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        out.push(name);
    }
    out
}

/// Splits text into records of fields, each tagged with the line it
/// starts on. Blank lines between records are skipped.
fn parse_records(text: &str) -> Result<Vec<(usize, Vec<String>)>, TableError> {
    let mut records = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;

    while chars.peek().is_some() {
        // skip blank lines
        match chars.peek() {
            Some('\n') => {
                chars.next();
                line += 1;
                continue;
            }
            Some('\r') => {
                chars.next();
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                line += 1;
                continue;
            }
            _ => {}
        }

        let start_line = line;
        let mut fields = Vec::new();
        let mut field = String::new();
        loop {
            // at the start of a field
            if chars.peek() == Some(&'"') {
                chars.next();
                let quote_line = line;
                loop {
                    match chars.next() {
                        None => {
                            return Err(TableError::MalformedCsv {
                                line: quote_line,
                                reason: "unclosed quote".to_string(),
                            })
                        }
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                field.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            field.push(c);
                        }
                    }
                }
                match chars.peek() {
                    None | Some(',') | Some('\n') | Some('\r') => {}
                    Some(c) => {
                        return Err(TableError::MalformedCsv {
                            line,
                            reason: format!("unexpected {c:?} after closing quote"),
                        })
                    }
                }
            } else {
                while let Some(&c) = chars.peek() {
                    if c == ',' || c == '\n' || c == '\r' {
                        break;
                    }
                    if c == '"' {
                        return Err(TableError::MalformedCsv {
                            line,
                            reason: "quote inside unquoted field".to_string(),
                        });
                    }
                    field.push(c);
                    chars.next();
                }
            }
            fields.push(std::mem::take(&mut field));
            match chars.next() {
                Some(',') => continue,
                Some('\r') => {
                    if chars.peek() == Some(&'\n') {
                        chars.next();
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("field scanning stops only at delimiters"),
            }
        }
        records.push((start_line, fields));
    }
    Ok(records)
}

pub fn write_csv(t: &Table, writer: impl Write, nulls: NullPolicy) -> std::io::Result<()> {
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    if t.num_columns() > 0 {
        w.write_record(t.column_names())?;
        for row in t.rows() {
            w.write_record(row.iter().map(|v| match v {
                Value::Null => nulls.null_token().to_string(),
                other => other.render(),
            }))?;
        }
    }
    w.flush()
}

pub fn write_csv_string(t: &Table, nulls: NullPolicy) -> String {
    let mut buf = Vec::new();
    write_csv(t, &mut buf, nulls).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv output is built from UTF-8 strings")
}
