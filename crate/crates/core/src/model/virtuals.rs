//! Discrete virtual values and regularity audits.

use super::{conditional, DiscreteDist, ModelError, SignalPricingInstance};
use serde::{Deserialize, Serialize};

/// Forward-gap discrete virtual values on the support of `dist`.
///
/// phi(t_i) = t_i - (1 - F(t_i)) * (t_{i+1} - t_i) / pmf(t_i), with F the
/// inclusive cdf and t_{i+1} the next support point; phi(t_max) = t_max.
/// This convention makes the discrete revenue identity
/// sum_{t_i >= r} pmf(t_i) phi(t_i) = r * Pr[v >= r] exact on the grid.
///
/// Returns (support index, phi) pairs; zero-mass grid points are skipped.
pub fn virtual_values(dist: &DiscreteDist) -> Vec<(usize, f64)> {
    let support: Vec<(usize, f64)> = dist.support().collect();
    let n = support.len();
    let mut out = Vec::with_capacity(n);
    let mut tail = 0.0; // mass strictly above the current support point
    let mut phis = vec![0.0; n];
    for k in (0..n).rev() {
        let (i, m) = support[k];
        let t = dist.grid().point(i);
        if k + 1 == n {
            phis[k] = t;
        } else {
            let t_next = dist.grid().point(support[k + 1].0);
            phis[k] = t - tail * (t_next - t) / m;
        }
        tail += m;
    }
    for k in 0..n {
        out.push((support[k].0, phis[k]));
    }
    out
}

/// Revenue of posting price `r` (a grid index): r' * Pr[v >= r'] where r' is
/// the smallest support point at or above r.
pub fn tail_revenue(dist: &DiscreteDist, r: usize) -> f64 {
    let mut price = None;
    let mut tail = 0.0;
    for (i, m) in dist.support() {
        if i >= r {
            if price.is_none() {
                price = Some(dist.grid().point(i));
            }
            tail += m;
        }
    }
    price.map_or(0.0, |p| p * tail)
}

/// Monotonicity and support-contiguity report for one distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    /// (support index, phi) pairs in increasing value order.
    pub virtuals: Vec<(usize, f64)>,
    pub is_monotone: bool,
    /// Position within `virtuals` of the first monotonicity violation.
    pub first_violation_index: Option<usize>,
    /// Whether the support occupies a contiguous index range of the grid.
    pub support_contiguous: bool,
}

const MONOTONE_TOLERANCE: f64 = 1e-12;

pub fn regularity_audit(dist: &DiscreteDist) -> RegularityReport {
    let virtuals = virtual_values(dist);
    let mut is_monotone = true;
    let mut first_violation_index = None;
    for k in 1..virtuals.len() {
        if virtuals[k].1 < virtuals[k - 1].1 - MONOTONE_TOLERANCE {
            is_monotone = false;
            first_violation_index = Some(k);
            break;
        }
    }
    let support_contiguous = virtuals
        .windows(2)
        .all(|w| w[1].0 == w[0].0 + 1);
    RegularityReport { virtuals, is_monotone, first_violation_index, support_contiguous }
}

/// Per-signal regularity reports for every positive-mass signal.
pub fn joint_regularity_audit(
    inst: &SignalPricingInstance,
) -> Result<Vec<(String, RegularityReport)>, ModelError> {
    let mut out = Vec::with_capacity(inst.n_signals());
    for (j, label) in inst.signals().iter().enumerate() {
        if inst.signal_marginal()[j] > 0.0 {
            let report = regularity_audit(&conditional(inst, j)?);
            out.push((label.clone(), report));
        }
    }
    Ok(out)
}

/// True when every signal-conditional is monotone in discrete phi.
pub fn jointly_regular(inst: &SignalPricingInstance) -> Result<bool, ModelError> {
    Ok(joint_regularity_audit(inst)?.iter().all(|(_, r)| r.is_monotone))
}
