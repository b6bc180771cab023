//! Line-splitting CSV reader for the committed fixtures, which contain no
//! quoted fields. Empty cells come back as `None`.

use std::path::Path;

pub struct Raw {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl Raw {
    pub fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn get<'a>(&self, row: &'a [Option<String>], name: &str) -> Option<&'a str> {
        row[self.col(name)].as_deref()
    }
}

pub fn read(path: impl AsRef<Path>) -> Raw {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text)
}

pub fn parse(text: &str) -> Raw {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            let cells: Vec<Option<String>> = l
                .split(',')
                .map(|c| if c.is_empty() { None } else { Some(c.to_string()) })
                .collect();
            assert_eq!(cells.len(), header.len(), "ragged line {l:?}");
            cells
        })
        .collect();
    Raw { header, rows }
}

/// Writes rows with `\N` for nulls.
pub fn render(header: &[&str], rows: &[Vec<Option<String>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<&str> = r.iter().map(|c| c.as_deref().unwrap_or("\\N")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
