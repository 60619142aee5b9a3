//! Acceptance checks against the Suzuki group table live in
//! `tests/acceptance.rs`; this library is empty.
