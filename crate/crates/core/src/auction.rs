//! Multi-bidder instances, second-price revenue, the dominant-strategy
//! lookahead auction, and the single-buyer-to-two-bidder lift.

use crate::model::{DiscreteDist, Mode, ModelError, SignalPricingInstance, ValueGrid};
use crate::pricing::optimal_posted_price;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error("lift needs eps > 0, got {0}")]
    InvalidEps(f64),
    #[error("mechanism shape does not match instance")]
    ShapeMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Joint type distribution over bidder profiles. The pmf is dense,
/// flattened bidder-1-major: index = ((i_1 * n_2) + i_2) * n_3 + i_3 ...
#[derive(Debug, Clone)]
pub struct MultiBidderInstance {
    grids: Vec<ValueGrid>,
    pmf: Vec<f64>,
    mode: Mode,
}

impl MultiBidderInstance {
    pub fn new(grids: Vec<ValueGrid>, pmf: Vec<f64>, mode: Mode) -> Result<Self, ModelError> {
        if grids.is_empty() {
            return Err(ModelError::DimensionMismatch("no bidders".into()));
        }
        let total: usize = grids.iter().map(|g| g.len()).product();
        if pmf.len() != total {
            return Err(ModelError::DimensionMismatch(format!(
                "pmf has {} entries, expected {}",
                pmf.len(),
                total
            )));
        }
        let mut sum = 0.0;
        for (p, &m) in pmf.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(ModelError::NegativeMass { value: p, signal: 0, mass: m });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > crate::model::SUM_TOLERANCE {
            return Err(ModelError::SumNotOne { sum });
        }
        Ok(MultiBidderInstance { grids, pmf, mode })
    }

    pub fn n_bidders(&self) -> usize {
        self.grids.len()
    }

    pub fn grids(&self) -> &[ValueGrid] {
        &self.grids
    }

    pub fn grid(&self, bidder: usize) -> &ValueGrid {
        &self.grids[bidder]
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n_profiles(&self) -> usize {
        self.pmf.len()
    }

    pub fn stride(&self, bidder: usize) -> usize {
        self.grids[bidder + 1..].iter().map(|g| g.len()).product()
    }

    pub fn coords(&self, mut profile: usize) -> Vec<usize> {
        let n = self.n_bidders();
        let mut out = vec![0; n];
        for i in (0..n).rev() {
            let d = self.grids[i].len();
            out[i] = profile % d;
            profile /= d;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (i, &c) in coords.iter().enumerate() {
            idx = idx * self.grids[i].len() + c;
        }
        idx
    }

    pub fn mass(&self, profile: usize) -> f64 {
        self.pmf[profile]
    }

    /// Values of a profile.
    pub fn values(&self, profile: usize) -> Vec<f64> {
        self.coords(profile)
            .iter()
            .enumerate()
            .map(|(i, &c)| self.grids[i].point(c))
            .collect()
    }

    pub fn bidder_marginal(&self, bidder: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grids[bidder].len()];
        for (p, &m) in self.pmf.iter().enumerate() {
            if m > 0.0 {
                out[self.coords(p)[bidder]] += m;
            }
        }
        out
    }

    /// Cell volume (product of widths) used by quadrature-mode densities.
    pub fn volume(&self, profile: usize) -> f64 {
        self.coords(profile)
            .iter()
            .enumerate()
            .map(|(i, &c)| self.grids[i].width(c))
            .product()
    }
}

/// Per-bidder allocation and payment maps over profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiMechanism {
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

impl MultiMechanism {
    pub fn zero(minst: &MultiBidderInstance) -> Self {
        let n = minst.n_bidders();
        MultiMechanism {
            x: vec![vec![0.0; minst.n_profiles()]; n],
            p: vec![vec![0.0; minst.n_profiles()]; n],
        }
    }

    pub fn revenue(&self, minst: &MultiBidderInstance) -> f64 {
        let mut rev = 0.0;
        for (p, &m) in minst.pmf().iter().enumerate() {
            if m > 0.0 {
                for i in 0..minst.n_bidders() {
                    rev += m * self.p[i][p];
                }
            }
        }
        rev
    }
}

/// E[second-highest type], by exact enumeration; 0 for a single bidder.
pub fn second_price_revenue(minst: &MultiBidderInstance) -> f64 {
    let n = minst.n_bidders();
    if n == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for (p, &m) in minst.pmf().iter().enumerate() {
        if m > 0.0 {
            let mut vals = minst.values(p);
            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            total += m * vals[1];
        }
    }
    total
}

/// Lookahead outcome: winner partition, posted prices, revenue and the
/// realized mechanism.
#[derive(Debug, Clone)]
pub struct LookaheadResult {
    /// Winner (lowest-index highest bidder) per positive-mass profile.
    pub winner: Vec<Option<usize>>,
    /// Price offered to the winner at each positive-mass profile.
    pub price: Vec<f64>,
    pub revenue: f64,
    pub per_bidder_revenue: Vec<f64>,
    pub mechanism: MultiMechanism,
}

/// Dominant-strategy lookahead auction: sell only to the highest bidder, at
/// the optimal posted price for her type distribution conditioned on the
/// opponents' types and on holding the highest type. Ties pick the lowest
/// bidder index; a conditional with no mass at or above the opponents' max
/// never sells.
pub fn lookahead_auction(minst: &MultiBidderInstance) -> LookaheadResult {
    let n = minst.n_bidders();
    let np = minst.n_profiles();
    let mut winner = vec![None; np];
    let mut price = vec![0.0; np];
    let mut mech = MultiMechanism::zero(minst);
    let mut revenue = 0.0;
    let mut per_bidder = vec![0.0; n];
    // price cache keyed by (winner, profile with winner coordinate zeroed)
    let mut cache: HashMap<(usize, usize), Option<(f64, f64)>> = HashMap::new();
    for p in 0..np {
        let m = minst.mass(p);
        if m <= 0.0 {
            continue;
        }
        let coords = minst.coords(p);
        let vals = minst.values(p);
        let mut w = 0;
        for i in 1..n {
            if vals[i] > vals[w] {
                w = i;
            }
        }
        winner[p] = Some(w);
        let opp_max = vals
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != w)
            .map(|(_, &v)| v)
            .fold(0.0f64, f64::max);
        let stride = minst.stride(w);
        let base = p - coords[w] * stride;
        let entry = cache.entry((w, base)).or_insert_with(|| {
            // conditional of the winner's type given opponents, restricted
            // to types at or above their maximum, renormalized
            let grid = minst.grid(w);
            let mut weights = vec![0.0; grid.len()];
            let mut total = 0.0;
            for k in 0..grid.len() {
                if grid.point(k) >= opp_max {
                    let q = minst.mass(base + k * stride);
                    weights[k] = q;
                    total += q;
                }
            }
            if total <= 0.0 {
                return None;
            }
            let dist = DiscreteDist::from_weights(grid.clone(), weights).ok()?;
            Some(optimal_posted_price(&dist))
        });
        if let Some((rho, _)) = *entry {
            price[p] = rho;
            if vals[w] >= rho {
                mech.x[w][p] = 1.0;
                mech.p[w][p] = rho;
                revenue += m * rho;
                per_bidder[w] += m * rho;
            }
        }
    }
    LookaheadResult { winner, price, revenue, per_bidder_revenue: per_bidder, mechanism: mech }
}

/// Embeds a single-buyer signal instance into a two-bidder auction: bidder 1
/// holds the value, bidder 2's value encodes the signal as s_index * eps / |S|
/// (signals numbered from 1 in instance order).
pub fn lift_two_bidders(
    inst: &SignalPricingInstance,
    eps: f64,
) -> Result<MultiBidderInstance, AuctionError> {
    if !(eps > 0.0) {
        return Err(AuctionError::InvalidEps(eps));
    }
    let ns = inst.n_signals();
    let b2_points: Vec<f64> = (1..=ns).map(|s| s as f64 * eps / ns as f64).collect();
    let b2_grid = ValueGrid::from_points(b2_points)?;
    let mut pmf = vec![0.0; inst.n_values() * ns];
    for j in 0..ns {
        for &(i, m) in inst.column(j) {
            pmf[i as usize * ns + j] = m;
        }
    }
    Ok(MultiBidderInstance::new(
        vec![inst.grid().clone(), b2_grid],
        pmf,
        Mode::Mass,
    )?)
}

/// Worst-case incentive and rationality slacks of a multi-bidder mechanism.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiAuditReport {
    pub revenue: f64,
    /// Bayesian violation: per unit of the deviating bidder's type mass.
    pub max_bic_violation: f64,
    /// Dominant-strategy violation: worst per-profile utility gain.
    pub max_dsic_violation: f64,
    pub max_expost_ir_violation: f64,
    pub min_payment: f64,
    /// Worst feasibility excess of sum_i x_i over 1.
    pub max_feasibility_violation: f64,
}

/// Audits BIC, DSIC, ex post IR and allocation feasibility by enumerating
/// all single-bidder on-grid deviations.
pub fn audit_multi_mechanism(
    minst: &MultiBidderInstance,
    mech: &MultiMechanism,
) -> Result<MultiAuditReport, AuctionError> {
    let n = minst.n_bidders();
    if mech.x.len() != n || mech.p.len() != n {
        return Err(AuctionError::ShapeMismatch);
    }
    for i in 0..n {
        if mech.x[i].len() != minst.n_profiles() || mech.p[i].len() != minst.n_profiles() {
            return Err(AuctionError::ShapeMismatch);
        }
    }
    let mut revenue = 0.0;
    let mut max_ir = 0.0f64;
    let mut min_payment = f64::INFINITY;
    let mut max_feas = 0.0f64;
    for (p, &m) in minst.pmf().iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let vals = minst.values(p);
        let mut xsum = 0.0;
        for i in 0..n {
            revenue += m * mech.p[i][p];
            min_payment = min_payment.min(mech.p[i][p]);
            max_ir = max_ir.max(mech.p[i][p] - vals[i] * mech.x[i][p]);
            xsum += mech.x[i][p];
        }
        max_feas = max_feas.max(xsum - 1.0);
    }
    if !min_payment.is_finite() {
        min_payment = 0.0;
    }

    let mut max_dsic = 0.0f64;
    let mut max_bic = 0.0f64;
    for i in 0..n {
        let ni = minst.grid(i).len();
        let stride = minst.stride(i);
        let marginal = minst.bidder_marginal(i);
        // interim utilities per (true type, report) in mass form
        let mut truth_mass = vec![0.0; ni];
        let mut dev_mass = vec![vec![0.0; ni]; ni];
        for (p, &m) in minst.pmf().iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let k = minst.coords(p)[i];
            let t = minst.grid(i).point(k);
            let base = p - k * stride;
            let truth = t * mech.x[i][p] - mech.p[i][p];
            truth_mass[k] += m * truth;
            for k2 in 0..ni {
                if k2 == k {
                    continue;
                }
                let p2 = base + k2 * stride;
                let dev = t * mech.x[i][p2] - mech.p[i][p2];
                dev_mass[k][k2] += m * dev;
                max_dsic = max_dsic.max(dev - truth);
            }
        }
        for k in 0..ni {
            if marginal[k] <= 0.0 {
                continue;
            }
            for k2 in 0..ni {
                if k2 != k {
                    max_bic = max_bic.max((dev_mass[k][k2] - truth_mass[k]) / marginal[k]);
                }
            }
        }
    }
    Ok(MultiAuditReport {
        revenue,
        max_bic_violation: max_bic.max(0.0),
        max_dsic_violation: max_dsic.max(0.0),
        max_expost_ir_violation: max_ir.max(0.0),
        min_payment,
        max_feasibility_violation: max_feas,
    })
}
