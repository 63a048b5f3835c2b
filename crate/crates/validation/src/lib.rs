//! End-to-end acceptance checks for `cf-certify` live in `tests/acceptance.rs`;
//! this crate has no library API.
