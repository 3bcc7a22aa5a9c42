//! Multi-population congestion games with incomplete route information:
//! equilibrium computation, paradox detection and topology classifiers.

pub mod equilibrium;
pub mod export;
pub mod format;
pub mod game;
pub mod paradox;
pub mod pathsets;
pub mod scenarios;
pub mod search;
pub mod topology;
