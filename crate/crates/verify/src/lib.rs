//! Independent oracles and the acceptance checks built on them.

pub mod criteria;
pub mod oracles;

pub use criteria::{run_all, run_all_seeded, Check, Outcome, DEFAULT_SEED};
