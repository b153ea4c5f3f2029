//! Acceptance checks for `activesub`, run as the `acceptance` test target.
//!
//! `cargo test -p activesub-validation --test acceptance` runs every criterion;
//! pass criterion numbers (`-- 1 4`) to run a subset.
