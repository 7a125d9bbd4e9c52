//! Experiment orchestration: replication engine, error estimates, configs,
//! suites and the acceptance manifest.

pub mod acceptance;
pub mod config;
pub mod estimate;
pub mod mc;
pub mod runner;
pub mod suite;
pub mod tasks;
