//! Generates hint-texts for text inputs in Android GUI dumps, validates them
//! against a device and measures their quality.

pub mod audit;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod entity;
pub mod exec;
pub mod gateway;
pub mod hierarchy;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod sim;
pub mod store;
