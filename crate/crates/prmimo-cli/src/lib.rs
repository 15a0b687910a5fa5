//! Experiment harness for the prmimo library: declarative configs, the
//! brute-force polarization grid search, Monte Carlo experiment runners,
//! and CSV emission.

pub mod config;
pub mod experiments;
pub mod gridsearch;
