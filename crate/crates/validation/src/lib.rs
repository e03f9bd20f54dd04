//! Acceptance suite for the workspace. The checks themselves live in
//! `stark_core::verify`; `tests/acceptance.rs` runs them one criterion per test.

pub use stark_core::verify::{run_checks, CheckResult};
