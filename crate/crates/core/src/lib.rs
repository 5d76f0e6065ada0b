//! Revenue analysis for single-item sales where the seller holds a private
//! signal about the buyer's value, and for single-item auctions with
//! correlated bidders.
//!
//! The crate works on discretized instances throughout: joint (value,
//! signal) mass functions on finite grids, or joint type-profile masses for
//! several bidders. On top of those it provides
//!
//! - posted-price benchmarks (the public-signal revenue `drev`),
//! - LP-optimal mechanisms under configurable IC / IR / payment-sign
//!   constraints ([`lp::solve_single_buyer`], [`lp::solve_multi_bidder`]),
//! - the closed-form gap mechanisms on equal-revenue and interleaved-support
//!   instances, with exact incentive audits,
//! - dual-field revenue bounds certifying the 3x (single buyer) and 5x
//!   (lookahead auction) comparisons on jointly regular instances,
//! - the dominant-strategy lookahead auction itself.

pub mod auction;
pub mod duality;
pub mod gen;
pub mod io;
pub mod lp;
pub mod mechanism;
pub mod model;
pub mod pricing;

pub use auction::{
    audit_multi_mechanism, lift_two_bidders, lookahead_auction, second_price_revenue,
    AuctionError, LookaheadResult, MultiAuditReport, MultiBidderInstance, MultiMechanism,
};
pub use duality::{
    claim_dual_bound_check, evaluate_lagrangian, gh_fields, lagrangian_bound,
    lookahead_bound_terms, multibidder_gh, per_signal_bounds, psi_diagnostic, BoundReport,
    DualFields, DualWeights, DualityError, LookaheadBound, MultiDualFields, PerSignalBound,
    PsiReport,
};
pub use lp::{
    solve_multi_bidder, solve_multi_bidder_opts, solve_single_buyer, solve_single_buyer_opts,
    ConstraintMode, IcMode, IrMode, LpError, LpSolution, LpStatus, MultiLpSolution, PaymentMode,
    SolveOptions,
};
pub use mechanism::{
    audit_mechanism, example1_mechanism, example1_revenue_bound, example2_enumeration_audit,
    example2_mechanism, example2_symmetry_audit, g_example, AuditReport, Example2Audit,
    Mechanism, MechanismError,
};
pub use model::{
    build_instance, conditional, erd_grid, example1_instance, example2_instance,
    joint_regularity_audit, jointly_regular, marginal_signal, mixture_instance, regularity_audit,
    tail_revenue, value_marginal_dist, virtual_values, DiscreteDist, Mode, ModelError,
    RegularityReport, SignalPricingInstance, ValueGrid, UNINFORMATIVE,
};
pub use pricing::{drev, global_posted_price_revenue, optimal_posted_price, DRevReport};
