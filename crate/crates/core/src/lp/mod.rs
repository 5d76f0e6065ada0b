//! Exact LP formulations for optimal single-buyer private-signal mechanisms
//! and multi-bidder BIC/DSIC auctions under configurable constraint modes.
//!
//! Incentive rows are written in mass form (multiplied through by the type's
//! marginal) so zero-marginal types contribute no rows and no divisions by
//! small marginals occur. Utility variables are scaled per cell by
//! max(value, 1) and every row is equilibrated by its max-abs coefficient;
//! without this, instances spanning many orders of magnitude (equal-revenue
//! grids truncated at 1e12) lose their rebate variables to the solver's
//! small-coefficient filter.

mod backend;
mod multi;
mod single;

pub use multi::{solve_multi_bidder, solve_multi_bidder_opts};
pub use single::{solve_single_buyer, solve_single_buyer_opts};

use crate::auction::MultiMechanism;
use crate::mechanism::Mechanism;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("problem has {cells} mass-positive cells, cap is {cap}")]
    SizeCapExceeded { cells: usize, cap: usize },
    #[error("at most 3 bidders supported, got {0}")]
    TooManyBidders(usize),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Mechanism(#[from] crate::mechanism::MechanismError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IrMode {
    /// Utility nonnegative at every mass-positive cell / profile.
    ExPost,
    /// Utility nonnegative only in expectation over the signal (or the
    /// opponents' types), per type.
    Interim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaymentMode {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcMode {
    /// Deviations compared in expectation over the signal / opponents.
    Bayesian,
    /// Deviations compared per signal / per profile.
    DominantStrategy,
}

/// Which IR, payment-sign and IC constraints the LP enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintMode {
    pub ir: IrMode,
    pub payments: PaymentMode,
    pub ic: IcMode,
}

impl ConstraintMode {
    pub const fn new(ir: IrMode, payments: PaymentMode, ic: IcMode) -> Self {
        ConstraintMode { ir, payments, ic }
    }

    /// The paper's baseline: ex post IR, nonnegative payments, Bayesian IC.
    pub const fn expost_nonneg_bic() -> Self {
        ConstraintMode::new(IrMode::ExPost, PaymentMode::NonNegative, IcMode::Bayesian)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Cap on mass-positive cells (variables per matrix).
    pub cell_cap: usize,
    /// Enumerate all IC rows up front when their count stays below this;
    /// otherwise generate violated rows lazily.
    pub lazy_row_threshold: usize,
    /// Maximum lazy generation rounds before returning IterationLimit.
    pub max_rounds: usize,
    /// Mass-form violation cutoff for lazy row generation. The final
    /// objective overshoots the true optimum by at most (#types) times this.
    pub violation_tol: f64,
    /// New rows admitted per lazy round.
    pub rows_per_round: usize,
    /// Multi-bidder only: force x_i = 0 on profiles where bidder i is not
    /// the (lowest-index) highest bidder.
    pub restrict_to_highest: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cell_cap: 5000,
            lazy_row_threshold: 50_000,
            max_rounds: 60,
            violation_tol: 1e-9,
            rows_per_round: 3000,
            restrict_to_highest: false,
        }
    }
}

/// Solved single-buyer LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub mechanism: Mechanism,
    pub objective: f64,
    pub status: LpStatus,
    /// Dual values of the rows in the final solved model, when available.
    pub certificate: Option<Vec<f64>>,
}

/// Solved multi-bidder LP.
#[derive(Debug, Clone)]
pub struct MultiLpSolution {
    pub mechanism: MultiMechanism,
    pub objective: f64,
    pub status: LpStatus,
    pub certificate: Option<Vec<f64>>,
}
