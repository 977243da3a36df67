//! Driver for the msqed toolkit: configuration, experiment runs with their
//! artifacts, and the acceptance suites.

pub mod config;
pub mod records;
pub mod run;
pub mod suites;
