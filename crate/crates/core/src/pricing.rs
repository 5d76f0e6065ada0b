//! Optimal posted prices per signal and the public-signal revenue benchmark.

use crate::model::{conditional, DiscreteDist, ModelError, SignalPricingInstance};
use serde::{Deserialize, Serialize};

/// Revenue-optimal take-it-or-leave-it price for a single distribution.
///
/// The price is restricted to support points (any off-support price is weakly
/// dominated by the next support point above it); ties break toward the
/// lowest price for reproducible output.
pub fn optimal_posted_price(dist: &DiscreteDist) -> (f64, f64) {
    let mut best_price = 0.0;
    let mut best_rev = f64::NEG_INFINITY;
    let mut tail: f64 = dist.pmf().iter().sum();
    for (i, m) in dist.support() {
        let price = dist.grid().point(i);
        let rev = price * tail;
        if rev > best_rev + 1e-15 * rev.abs().max(1.0) {
            best_rev = rev;
            best_price = price;
        }
        tail -= m;
    }
    if best_rev == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    (best_price, best_rev)
}

/// Public-signal benchmark: the seller posts the optimal price for each
/// signal's conditional distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DRevReport {
    /// (signal label, optimal price, revenue contribution f(s) * rev(s)).
    pub per_signal: Vec<(String, f64, f64)>,
    pub total: f64,
}

pub fn drev(inst: &SignalPricingInstance) -> Result<DRevReport, ModelError> {
    let mut per_signal = Vec::with_capacity(inst.n_signals());
    let mut total = 0.0;
    for (j, label) in inst.signals().iter().enumerate() {
        let fs = inst.signal_marginal()[j];
        if fs <= 0.0 {
            continue;
        }
        let cond = conditional(inst, j)?;
        let (price, rev) = optimal_posted_price(&cond);
        let contribution = fs * rev;
        total += contribution;
        per_signal.push((label.clone(), price, contribution));
    }
    Ok(DRevReport { per_signal, total })
}

/// Revenue of a single posted price applied across all signals (used as a
/// lower-bound cross-check: drev dominates any global price).
pub fn global_posted_price_revenue(inst: &SignalPricingInstance, price: f64) -> f64 {
    let mut rev = 0.0;
    for (i, &t) in inst.grid().points().iter().enumerate() {
        if t >= price {
            rev += price * inst.value_marginal()[i];
        }
    }
    rev
}

/// Tail mass above the current support point; keeps the posted-price scan in
/// one pass during tests that enumerate prices by brute force.
pub fn posted_price_revenue(dist: &DiscreteDist, price_index: usize) -> f64 {
    crate::model::tail_revenue(dist, price_index)
}
