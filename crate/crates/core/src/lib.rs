//! Discourse probing toolkit: synthesizes discourse-oriented probing
//! datasets, trains a multitask BiGRU sentence encoder, and evaluates frozen
//! encoders with per-task probe classifiers.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod fixture;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod synth;
pub mod train;
