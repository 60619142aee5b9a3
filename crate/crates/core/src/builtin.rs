//! Character table bundles shipped with the crate.

use crate::chartab::{parse_bundle_str, CharacterTable, TableError};

pub const SUZ_BUNDLE: &str = include_str!("../fixtures/suz.bundle.json");
pub const A5_BUNDLE: &str = include_str!("../fixtures/a5.bundle.json");

/// Bundle text for a shipped table name (`suz`, `a5`), case-insensitive.
pub fn bundle_text(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "suz" => Some(SUZ_BUNDLE),
        "a5" => Some(A5_BUNDLE),
        _ => None,
    }
}

pub fn table(name: &str) -> Option<Result<CharacterTable, TableError>> {
    bundle_text(name).map(parse_bundle_str)
}

pub fn suz() -> CharacterTable {
    parse_bundle_str(SUZ_BUNDLE).expect("shipped Suz bundle is valid")
}

pub fn a5() -> CharacterTable {
    parse_bundle_str(A5_BUNDLE).expect("shipped A5 bundle is valid")
}
