//! Library half of the experiment CLI: file formats and the numbered
//! reproduction checks, shared by the binary and the integration tests.

pub mod io;
pub mod suite;
