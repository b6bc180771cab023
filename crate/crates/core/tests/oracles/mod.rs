//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the operators under test.
#![allow(dead_code)]

pub mod csvlite;
pub mod eigen;
pub mod europe_makers;
pub mod gauss;
pub mod naive;
pub mod regression;
pub mod suites;
pub mod wide;

use std::path::PathBuf;

/// Workspace `fixtures/` directory.
pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
