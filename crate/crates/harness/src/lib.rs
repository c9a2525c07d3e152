//! Experiment harness: JSON-configured recipes that emit CSV tables,
//! gnuplot scripts and a run manifest.

pub mod commands;
pub mod config;
pub mod mne;
pub mod output;
pub mod recipes;
pub mod rmt;
pub mod sim;
