//! Command line and HTTP front ends for `headforge-core`.
//!
//! Both front ends go through [`ops`], so a CLI invocation and the matching
//! HTTP request produce the same bytes.

pub mod cli;
pub mod error;
pub mod ops;
pub mod service;
pub mod store;

pub use error::{ApiError, ErrorCode};
