//! Hybrid steepest descent for variational inequalities over fixed-point sets,
//! with exact evaluation and empirical validation of metastability rates.

pub mod hilbert;
pub mod iterates;
pub mod schedules;
pub mod engine;
pub mod gfun;
pub mod rates;
pub mod verify;
pub mod spec;
pub mod cli;
