//! Synthetic wide schema for the three-level retrieval walk, with the
//! expected result traced by hand from bag-of-words cosines.
//!
//! `field_trials` has 8,058 columns. With cluster similarity 0.80 the
//! leader pass yields five clusters:
//!
//! | cluster | members                 | leader description                          |
//! |---------|-------------------------|---------------------------------------------|
//! | #0      | plot_id                 | plot identifier key                         |
//! | #1      | yield_grain/straw/total | crop yield harvest                          |
//! | #2      | harv_0..1, moist_0..3   | plot plot plot plot crop yield harvest      |
//! | #3      | band_0000..band_8045    | satellite band reflectance                  |
//! | #4      | soil_ph, soil_n         | soil crop yield harvest plot                |
//!
//! moist joins #2 at cos 16/√(18·19) ≈ 0.865; soil_ph stays out of #1 at
//! 3/√15 ≈ 0.775. Against the question "crop yield harvest plot": table
//! 0.894, #1 0.866, #2 0.803, #4 0.894, harv columns 0.803, moist 0.471.
//! The validator accepts #1 whole, #2 partially (harv_0 only) and rejects
//! #4, so the answer is the three yield columns plus harv_0.

use std::collections::{BTreeMap, BTreeSet};

use planql::index::{ClusterVerdict, Describer, IndexError, ScriptedValidator};
use planql::table::{ColumnSpec, ColumnType, Provenance, Table, TableId, Value};

pub const QUESTION: &str = "crop yield harvest plot";
pub const CLUSTER_SIM: f64 = 0.80;
pub const BANDS: usize = 8046;
pub const WIDE_COLUMNS: usize = 8058;

pub const GOLDEN: [&str; 4] = [
    "field_trials.harv_0",
    "field_trials.yield_grain",
    "field_trials.yield_straw",
    "field_trials.yield_total",
];

const PLOT_KEY: &str = "plot identifier key";
const YIELD: &str = "crop yield harvest";
const HARV: &str = "plot plot plot plot crop yield harvest";
const MOIST: &str = "plot plot plot plot soil moisture";
const BAND: &str = "satellite band reflectance";
const SOIL: &str = "soil crop yield harvest plot";

pub fn golden() -> BTreeSet<String> {
    GOLDEN.iter().map(|s| s.to_string()).collect()
}

/// Column names and descriptions of `field_trials`, in order.
pub fn wide_columns() -> Vec<(String, &'static str)> {
    let mut cols = vec![("plot_id".to_string(), PLOT_KEY)];
    for n in ["yield_grain", "yield_straw", "yield_total"] {
        cols.push((n.to_string(), YIELD));
    }
    for i in 0..2 {
        cols.push((format!("harv_{i}"), HARV));
    }
    for i in 0..4 {
        cols.push((format!("moist_{i}"), MOIST));
    }
    for i in 0..BANDS {
        cols.push((format!("band_{i:04}"), BAND));
    }
    cols.push(("soil_ph".to_string(), SOIL));
    cols.push(("soil_n".to_string(), SOIL));
    cols
}

fn described(id: &str, cols: &[(String, &str)], rows: usize) -> Table {
    let schema = cols
        .iter()
        .map(|(n, d)| ColumnSpec::new(n.clone(), ColumnType::Number).with_description(*d))
        .collect();
    let data = (0..rows)
        .map(|r| (0..cols.len()).map(|c| Value::Number((r * 7 + c) as f64)).collect())
        .collect();
    Table::new(TableId(id.to_string()), schema, data, Provenance::Derived).expect("fixture table")
}

/// The wide table and a small decoy that the validator rejects.
pub fn tables() -> Vec<Table> {
    let wide = described("field_trials", &wide_columns(), 3);
    let small = described(
        "station_log",
        &[
            ("station".to_string(), "station name"),
            ("rain_mm".to_string(), "daily rainfall"),
        ],
        3,
    );
    vec![wide, small]
}

pub fn table_descriptions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("field_trials", "crop yield harvest plot trials"),
        ("station_log", "crop yield harvest plot weather"),
    ])
}

/// Columns: their attached description. Clusters: the leader's
/// description. Tables: the fixed text above.
pub struct FixtureDescriber;

impl Describer for FixtureDescriber {
    fn describe_column(&self, table: &Table, column: usize) -> Result<String, IndexError> {
        Ok(table.schema()[column].description.clone().unwrap_or_default())
    }

    fn describe_cluster(&self, _table: &Table, members: &[&str]) -> Result<String, IndexError> {
        Ok(members[0].to_string())
    }

    fn describe_table(&self, table: &Table, _clusters: &[&str]) -> Result<String, IndexError> {
        Ok(table_descriptions()[table.id().0.as_str()].to_string())
    }
}

pub fn validator() -> ScriptedValidator {
    ScriptedValidator {
        tables: BTreeSet::from(["field_trials".to_string()]),
        clusters: BTreeMap::from([
            ("field_trials#1".to_string(), ClusterVerdict::Whole),
            ("field_trials#2".to_string(), ClusterVerdict::Partial),
            ("field_trials#4".to_string(), ClusterVerdict::Irrelevant),
        ]),
        columns: BTreeSet::from(["field_trials.harv_0".to_string()]),
    }
}

/// Every token appearing in the fixture's descriptions and question.
pub fn vocabulary() -> BTreeSet<String> {
    let mut texts = vec![QUESTION, PLOT_KEY, YIELD, HARV, MOIST, BAND, SOIL, "station name", "daily rainfall"];
    texts.extend(table_descriptions().values());
    texts
        .iter()
        .flat_map(|t| t.split_whitespace().map(str::to_lowercase))
        .collect()
}

/// Cosine of word-count vectors, assuming no two words share a bucket.
pub fn bag_cosine(a: &str, b: &str) -> f64 {
    fn count(s: &str) -> BTreeMap<&str, f64> {
        let mut m = BTreeMap::new();
        for w in s.split_whitespace() {
            *m.entry(w).or_default() += 1.0;
        }
        m
    }
    let (x, y) = (count(a), count(b));
    let dot: f64 = x.iter().map(|(w, v)| v * y.get(w).unwrap_or(&0.0)).sum();
    let norm = |m: &BTreeMap<&str, f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
    dot / (norm(&x) * norm(&y))
}

/// The similarities quoted in the module docs, recomputed.
pub fn traced() -> Vec<(&'static str, f64, f64)> {
    vec![
        ("moist joins harv leader", bag_cosine(MOIST, HARV), 0.865),
        ("soil vs yield leader", bag_cosine(SOIL, YIELD), 0.775),
        ("question vs field_trials", bag_cosine(QUESTION, "crop yield harvest plot trials"), 0.894),
        ("question vs #1", bag_cosine(QUESTION, YIELD), 0.866),
        ("question vs #2", bag_cosine(QUESTION, HARV), 0.803),
        ("question vs #4", bag_cosine(QUESTION, SOIL), 0.894),
        ("question vs moist", bag_cosine(QUESTION, MOIST), 0.471),
    ]
}
