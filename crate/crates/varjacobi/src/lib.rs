//! Command-line front end for `varjacobi-core`: problem files, the analysis
//! pipelines, JSON reports and CSV tables.

pub mod battery;
pub mod pipeline;
pub mod problem_file;
pub mod report;
pub mod tables;
