//! Intent mining for DeFi transactions: a planner, perspective experts,
//! tool-using question solvers and an evaluator over a fixed intent taxonomy.

pub mod agents;
pub mod chaindata;
pub mod evaluation;
pub mod llm;
pub mod taxonomy;
pub mod tokens;
pub mod toolbox;
pub mod transcript;
pub mod workflow;
