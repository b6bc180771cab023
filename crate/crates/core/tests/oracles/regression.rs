//! Hand-computed answers for the ground-truth pitfall cases, straight from
//! the raw CSV lines. Each case also has a plan under
//! `fixtures/regression/<case>/plan.json` and a frozen `expected.csv`
//! written from these answers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use super::csvlite::{self, Raw};
use super::fixtures;

/// Set to `1` to rewrite the frozen `expected.csv` files.
pub const REGEN_ENV: &str = "PLANQL_REGEN_ORACLES";

pub struct Case {
    pub name: &'static str,
    /// Fixture directory the plan's leaves come from.
    pub tables: &'static str,
    /// Load every column as text (no type inference).
    pub text_only: bool,
    pub oracle: fn() -> Answer,
}

pub struct Answer {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

pub const CASES: [Case; 6] = [
    Case {
        name: "distinct_pets",
        tables: "pets",
        text_only: false,
        oracle: distinct_pets,
    },
    Case {
        name: "null_mean",
        tables: "weather",
        text_only: false,
        oracle: null_mean,
    },
    Case {
        name: "set_difference",
        tables: "medicine",
        text_only: false,
        oracle: set_difference,
    },
    Case {
        name: "text_horsepower",
        tables: "cars",
        text_only: true,
        oracle: text_horsepower,
    },
    Case {
        name: "maker_model",
        tables: "cars",
        text_only: false,
        oracle: maker_model,
    },
    Case {
        name: "tied_top_year",
        tables: "concert",
        text_only: false,
        oracle: tied_top_year,
    },
];

pub fn case_dir(name: &str) -> PathBuf {
    fixtures().join("regression").join(name)
}

fn load(dir: &str, table: &str) -> Raw {
    csvlite::read(fixtures().join(dir).join(format!("{table}.csv")))
}

fn num(s: &str) -> f64 {
    s.trim().parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

fn show(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn hdr(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn some(s: &str) -> Option<String> {
    Some(s.to_string())
}

/// First name and age of students with a pet, without duplicates.
fn distinct_pets() -> Answer {
    let student = load("pets", "student");
    let has_pet = load("pets", "has_pet");
    let mut rows: Vec<Vec<Option<String>>> = Vec::new();
    for s in &student.rows {
        for p in &has_pet.rows {
            if student.get(s, "StuID").is_some() && student.get(s, "StuID") == has_pet.get(p, "StuID") {
                let r = vec![some(student.get(s, "Fname").unwrap()), some(student.get(s, "Age").unwrap())];
                if !rows.contains(&r) {
                    rows.push(r);
                }
            }
        }
    }
    Answer {
        header: hdr(&["Fname", "Age"]),
        rows,
    }
}

/// Mean temperature per zip code over dates starting with "8/", nulls
/// excluded from both the sum and the count.
fn null_mean() -> Answer {
    let w = load("weather", "weather");
    let mut acc: Vec<(String, f64, usize)> = Vec::new();
    for r in &w.rows {
        if !w.get(r, "date").is_some_and(|d| d.starts_with("8/")) {
            continue;
        }
        let zip = w.get(r, "zip_code").unwrap().to_string();
        let i = match acc.iter().position(|(z, _, _)| *z == zip) {
            Some(i) => i,
            None => {
                acc.push((zip, 0.0, 0));
                acc.len() - 1
            }
        };
        if let Some(t) = w.get(r, "mean_temperature_f") {
            acc[i].1 += num(t);
            acc[i].2 += 1;
        }
    }
    Answer {
        header: hdr(&["zip_code", "mean(mean_temperature_f)"]),
        rows: acc
            .into_iter()
            .map(|(z, s, n)| vec![Some(z), (n > 0).then(|| show(s / n as f64))])
            .collect(),
    }
}

/// Medicines with no interaction with the enzyme whose product is "Heme".
fn set_difference() -> Answer {
    let enzyme = load("medicine", "enzyme");
    let medicine = load("medicine", "medicine");
    let inter = load("medicine", "medicine_interaction");
    let heme: Vec<&str> = enzyme
        .rows
        .iter()
        .filter(|e| enzyme.get(e, "product") == Some("Heme"))
        .map(|e| enzyme.get(e, "id").unwrap())
        .collect();
    let touched: Vec<&str> = inter
        .rows
        .iter()
        .filter(|i| heme.contains(&inter.get(i, "enzyme_id").unwrap()))
        .map(|i| inter.get(i, "medicine_id").unwrap())
        .collect();
    let blocked: Vec<(&str, &str)> = medicine
        .rows
        .iter()
        .filter(|m| touched.contains(&medicine.get(m, "id").unwrap()))
        .map(|m| (medicine.get(m, "name").unwrap(), medicine.get(m, "trade_name").unwrap()))
        .collect();
    let mut rows: Vec<Vec<Option<String>>> = Vec::new();
    for m in &medicine.rows {
        let pair = (medicine.get(m, "name").unwrap(), medicine.get(m, "trade_name").unwrap());
        let r = vec![some(pair.0), some(pair.1)];
        if !blocked.contains(&pair) && !rows.contains(&r) {
            rows.push(r);
        }
    }
    Answer {
        header: hdr(&["name", "trade_name"]),
        rows,
    }
}

/// Number of cars whose horsepower, read as a number, exceeds 150.
fn text_horsepower() -> Answer {
    let cars = load("cars", "cars_data");
    let n = cars
        .rows
        .iter()
        .filter_map(|r| cars.get(r, "Horsepower"))
        .filter(|h| num(h) > 150.0)
        .count();
    Answer {
        header: hdr(&["count(*)"]),
        rows: vec![vec![some(&n.to_string())]],
    }
}

/// What the same filter yields if the text is compared byte by byte.
pub fn text_horsepower_lexicographic() -> usize {
    let cars = load("cars", "cars_data");
    cars.rows
        .iter()
        .filter_map(|r| cars.get(r, "Horsepower"))
        .filter(|h| h.as_bytes() > "150".as_bytes())
        .count()
}

/// Maker names next to model names.
fn maker_model() -> Answer {
    let makers = load("cars", "car_makers");
    let models = load("cars", "model_list");
    let mut rows = Vec::new();
    for mk in &makers.rows {
        for md in &models.rows {
            let (Some(a), Some(b)) = (makers.get(mk, "Id"), models.get(md, "Maker")) else {
                continue;
            };
            if num(a) == num(b) {
                rows.push(vec![
                    makers.get(mk, "Maker").map(String::from),
                    models.get(md, "Model").map(String::from),
                ]);
            }
        }
    }
    Answer {
        header: hdr(&["Maker", "Model"]),
        rows,
    }
}

/// Every year tied for the most concerts, with its count.
fn tied_top_year() -> Answer {
    let c = load("concert", "concert");
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for r in &c.rows {
        *tally.entry(c.get(r, "Year").unwrap().to_string()).or_default() += 1;
    }
    let best = tally.values().copied().max().unwrap_or(0);
    Answer {
        header: hdr(&["Year", "count(*)"]),
        rows: tally
            .into_iter()
            .filter(|(_, n)| *n == best)
            .map(|(y, n)| vec![Some(y), Some(n.to_string())])
            .collect(),
    }
}

/// Reads a frozen CSV; `\N` and empty cells are null.
pub fn read_frozen(text: &str) -> Answer {
    let raw = csvlite::parse(text);
    Answer {
        header: raw.header,
        rows: raw
            .rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.filter(|s| s != "\\N")).collect())
            .collect(),
    }
}

impl Answer {
    pub fn render(&self) -> String {
        let h: Vec<&str> = self.header.iter().map(String::as_str).collect();
        csvlite::render(&h, &self.rows)
    }
}

fn cell_eq(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => match (x.trim().parse::<f64>(), y.trim().parse::<f64>()) {
            (Ok(p), Ok(q)) => (p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1.0),
            _ => x == y,
        },
        _ => false,
    }
}

/// Same header and the same rows as a multiset; numbers compared to 1e-9.
pub fn same_answer(got: &Answer, want: &Answer) -> bool {
    if got.header != want.header || got.rows.len() != want.rows.len() {
        return false;
    }
    let mut used = vec![false; want.rows.len()];
    got.rows.iter().all(|g| {
        let hit = want
            .rows
            .iter()
            .enumerate()
            .find(|(i, w)| !used[*i] && g.len() == w.len() && g.iter().zip(w.iter()).all(|(a, b)| cell_eq(a, b)));
        match hit {
            Some((i, _)) => {
                used[i] = true;
                true
            }
            None => false,
        }
    })
}
