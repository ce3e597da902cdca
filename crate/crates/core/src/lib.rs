//! Benchmark harness and retrieval-augmented agent pipeline for molecular
//! flavor-science tasks: predicting a food category from its flavor
//! molecules, and completing a food's partial molecule profile.

pub mod agent;
pub mod analysis;
pub mod category;
pub mod chem;
pub mod dataset;
pub mod eval;
pub mod evidence;
pub mod fsutil;
pub mod llm;
pub mod net;
pub mod retrieval;
pub mod rng;
pub mod task;
