//! Shared inputs for the benchmarks.

use std::path::PathBuf;

/// Path of a file in the repository's `fixtures/` directory.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}
