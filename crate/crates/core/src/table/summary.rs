//! Bounded, human-readable table summaries.

use super::Table;

#[derive(Debug, Clone, Copy)]
pub struct SummaryOptions {
    /// Sample rows to show.
    pub max_sample: usize,
    /// Longer cells are cut and end with `…`.
    pub max_cell_chars: usize,
    /// Hard cap on the rendered size in bytes, including the truncation
    /// marker.
    pub max_bytes: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            max_sample: 5,
            max_cell_chars: 120,
            max_bytes: 16 * 1024,
        }
    }
}

pub fn describe_table(t: &Table, opts: &SummaryOptions) -> String {
    describe_table_columns(t, None, opts)
}

/// Like [`describe_table`], restricted to the named columns (in table
/// order). Unknown names are ignored; the header notes how many columns are
/// hidden.
pub fn describe_table_columns(t: &Table, only: Option<&[String]>, opts: &SummaryOptions) -> String {
    let shown: Vec<usize> = match only {
        Some(names) => (0..t.num_columns())
            .filter(|&i| names.iter().any(|n| *n == t.schema()[i].name))
            .collect(),
        None => (0..t.num_columns()).collect(),
    };

    let mut out = BoundedText::new(opts.max_bytes);
    let label = if t.id().0.is_empty() { "(unnamed)" } else { &t.id().0 };
    out.push_line(&format!(
        "table {label}: {} rows, {} columns",
        t.num_rows(),
        t.num_columns()
    ));
    if shown.len() < t.num_columns() {
        out.push_line(&format!(
            "showing {} of {} columns selected as relevant",
            shown.len(),
            t.num_columns()
        ));
    }
    out.push_line("columns:");
    for &i in &shown {
        let col = &t.schema()[i];
        let mut line = format!("  [{i}] {} ({})", col.name, col.inferred_type);
        if let Some(desc) = &col.description {
            line.push_str(" - ");
            line.push_str(&truncate_cell(desc, opts.max_cell_chars));
        }
        out.push_line(&line);
    }

    let n = opts.max_sample.min(t.num_rows());
    if n > 0 && !shown.is_empty() {
        out.push_line(&format!("sample rows ({n} of {}):", t.num_rows()));
        let header: Vec<&str> = shown.iter().map(|&i| t.schema()[i].name.as_str()).collect();
        out.push_line(&format!("  {}", header.join(" | ")));
        for row in &t.rows()[..n] {
            let cells: Vec<String> = shown
                .iter()
                .map(|&i| {
                    if row[i].is_null() {
                        "NULL".to_string()
                    } else {
                        truncate_cell(&row[i].render(), opts.max_cell_chars)
                    }
                })
                .collect();
            out.push_line(&format!("  {}", cells.join(" | ")));
        }
    }
    out.finish()
}

pub(crate) fn truncate_cell(s: &str, max_chars: usize) -> String {
    let flat = s.replace('\r', "\\r").replace('\n', "\\n");
    if flat.chars().count() <= max_chars {
        flat
    } else {
        let mut cut: String = flat.chars().take(max_chars).collect();
        cut.push('…');
        cut
    }
}

const MARKER_RESERVE: usize = 48;

/// Line accumulator that never exceeds its byte cap. Lines that do not fit
/// are dropped and counted; `finish` appends a marker naming how many.
pub(crate) struct BoundedText {
    buf: String,
    cap: usize,
    omitted: usize,
}

impl BoundedText {
    pub(crate) fn new(cap: usize) -> Self {
        BoundedText {
            buf: String::new(),
            cap,
            omitted: 0,
        }
    }

    /// Appends a line if it fits while leaving room for the marker.
    /// Returns whether it was kept.
    pub(crate) fn push_line(&mut self, line: &str) -> bool {
        if self.omitted == 0 && self.buf.len() + line.len() + 1 + MARKER_RESERVE <= self.cap {
            self.buf.push_str(line);
            self.buf.push('\n');
            true
        } else {
            self.omitted += 1;
            false
        }
    }

    #[cfg(test)]
    pub(crate) fn truncated(&self) -> bool {
        self.omitted > 0
    }

    pub(crate) fn finish(mut self) -> String {
        if self.omitted > 0 {
            let marker = format!("... [truncated: {} more lines]\n", self.omitted);
            self.buf.push_str(&marker);
        }
        if self.buf.len() > self.cap {
            let mut end = self.cap;
            while !self.buf.is_char_boundary(end) {
                end -= 1;
            }
            self.buf.truncate(end);
        }
        self.buf
    }
}
