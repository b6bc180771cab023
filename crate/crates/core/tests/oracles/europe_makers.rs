//! Brute-force answer to "Which countries in Europe have at least 3 car
//! manufacturers?": nested loops over the raw CSV lines and a tally.

use std::collections::BTreeMap;

use super::{csvlite, fixtures};

pub const QUESTION: &str = "Which countries in Europe have at least 3 car manufacturers?";

/// Country names, in no particular order, with their maker counts.
pub fn european_countries_with_3_makers() -> Vec<(String, usize)> {
    let dir = fixtures().join("cars");
    let continents = csvlite::read(dir.join("continents.csv"));
    let countries = csvlite::read(dir.join("countries.csv"));
    let makers = csvlite::read(dir.join("car_makers.csv"));

    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for cont in &continents.rows {
        if continents.get(cont, "Continent") != Some("Europe") {
            continue;
        }
        for country in &countries.rows {
            if countries.get(country, "Continent") != continents.get(cont, "ContId") {
                continue;
            }
            for maker in &makers.rows {
                let (Some(a), Some(b)) = (makers.get(maker, "Country"), countries.get(country, "CountryId")) else {
                    continue;
                };
                if a == b {
                    *tally
                        .entry(countries.get(country, "CountryName").unwrap().to_string())
                        .or_default() += 1;
                }
            }
        }
    }
    tally.into_iter().filter(|(_, n)| *n >= 3).collect()
}
