//! File-based frontend for the copula discriminant library: dataset CSVs,
//! model documents, run manifests and the benchmark runner.

pub mod bench;
pub mod io;
pub mod manifest;
