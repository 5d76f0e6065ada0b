//! Dual fields and revenue benchmarks: the signal-independent multiplier
//! construction, the two-bracket upper bound on private-signal revenue, its
//! per-signal decomposition, and the multi-bidder lookahead decomposition.
//!
//! All field computations require quadrature mode: mass(t, s) is read as the
//! integral of a piecewise-constant density over the cell [t, t + width).
//! Tail sums run over t' > t strictly, fixing the measure-zero boundary
//! convention once, globally.

use crate::auction::{lookahead_auction, MultiBidderInstance, MultiMechanism};
use crate::mechanism::Mechanism;
use crate::model::{
    conditional, virtual_values, Mode, ModelError, SignalPricingInstance,
};
use crate::pricing::drev;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DualityError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dual weights must be nonnegative, found {0}")]
    NegativeWeights(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// The dual field pair in density units over (value, signal) cells:
/// g(t,s) = -f(t,s) + 2 sum_{t'>t} mass(t',s)/t', and h(t,s) = 2 f(t,s)
/// phi(t|s) with phi the forward-gap discrete virtual value of the
/// conditional (so the positive part of h integrates to exactly twice a
/// posted-price revenue on the grid).
#[derive(Debug, Clone)]
pub struct DualFields {
    n_signals: usize,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl DualFields {
    pub fn g_at(&self, value: usize, signal: usize) -> f64 {
        self.g[value * self.n_signals + signal]
    }

    pub fn h_at(&self, value: usize, signal: usize) -> f64 {
        self.h[value * self.n_signals + signal]
    }
}

pub fn gh_fields(inst: &SignalPricingInstance) -> Result<DualFields, DualityError> {
    inst.require_mode(Mode::Quadrature)?;
    let (nv, ns) = (inst.n_values(), inst.n_signals());
    let pts = inst.grid().points();
    let widths = inst.grid().widths();
    let mut g = vec![0.0; nv * ns];
    let mut h = vec![0.0; nv * ns];
    for j in 0..ns {
        if inst.signal_marginal()[j] <= 0.0 {
            continue;
        }
        // suffix sums of mass/t' over the signal's support
        let col = inst.column(j);
        let mut tail_over_t = vec![0.0; nv + 1];
        let mut dense_mass = vec![0.0; nv];
        for &(i, m) in col {
            dense_mass[i as usize] = m;
        }
        for i in (0..nv).rev() {
            tail_over_t[i] = tail_over_t[i + 1] + dense_mass[i] / pts[i];
        }
        for i in 0..nv {
            g[i * ns + j] = -dense_mass[i] / widths[i] + 2.0 * tail_over_t[i + 1];
        }
        let cond = conditional(inst, j)?;
        for (i, phi) in virtual_values(&cond) {
            h[i * ns + j] = 2.0 * (dense_mass[i] / widths[i]) * phi;
        }
    }
    Ok(DualFields { n_signals: ns, g, h })
}

/// One signal's share of the two-bracket bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerSignalBound {
    pub signal: String,
    /// integral of [h]_+ over the signal's cells.
    pub h_plus: f64,
    /// integral of [t g + h/2]_+.
    pub tg_h_plus: f64,
    /// f(s)-weighted optimal posted revenue.
    pub drev: f64,
    /// h_plus / (2 drev); at most 1 + delta under regularity.
    pub h_ratio: f64,
    /// tg_h_plus / drev; at most 1 + delta under regularity.
    pub tg_ratio: f64,
    pub regular: bool,
}

/// The two-bracket revenue benchmark and its per-signal split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub lag2_total: f64,
    pub per_signal: Vec<PerSignalBound>,
    pub drev_total: f64,
    /// lag2_total / drev_total; at most 3 k (1 + delta) for mixtures of k
    /// jointly regular components.
    pub factor: f64,
    pub mixture_k: usize,
    pub all_regular: bool,
}

/// Upper bound on the revenue of any private-signal mechanism with
/// nonnegative payments: sum of width * ([t g + h/2]_+ + [h]_+) over cells.
pub fn lagrangian_bound(inst: &SignalPricingInstance) -> Result<BoundReport, DualityError> {
    let fields = gh_fields(inst)?;
    let report = drev(inst)?;
    let (nv, ns) = (inst.n_values(), inst.n_signals());
    let pts = inst.grid().points();
    let widths = inst.grid().widths();
    let mut per_signal = Vec::new();
    let mut lag2_total = 0.0;
    let mut all_regular = true;
    let mut drev_by_label: std::collections::HashMap<&str, f64> = Default::default();
    for (label, _, contribution) in &report.per_signal {
        drev_by_label.insert(label.as_str(), *contribution);
    }
    let regs = crate::model::joint_regularity_audit(inst)?;
    let mut reg_by_label: std::collections::HashMap<&str, bool> = Default::default();
    for (label, r) in &regs {
        reg_by_label.insert(label.as_str(), r.is_monotone);
    }
    for j in 0..ns {
        if inst.signal_marginal()[j] <= 0.0 {
            continue;
        }
        let label = &inst.signals()[j];
        let mut h_plus = 0.0;
        let mut tg_h_plus = 0.0;
        for i in 0..nv {
            let g = fields.g_at(i, j);
            let h = fields.h_at(i, j);
            h_plus += widths[i] * h.max(0.0);
            tg_h_plus += widths[i] * (pts[i] * g + 0.5 * h).max(0.0);
        }
        lag2_total += h_plus + tg_h_plus;
        let ds = drev_by_label.get(label.as_str()).copied().unwrap_or(0.0);
        let regular = reg_by_label.get(label.as_str()).copied().unwrap_or(false);
        all_regular &= regular;
        per_signal.push(PerSignalBound {
            signal: label.clone(),
            h_plus,
            tg_h_plus,
            drev: ds,
            h_ratio: if ds > 0.0 { h_plus / (2.0 * ds) } else { f64::INFINITY },
            tg_ratio: if ds > 0.0 { tg_h_plus / ds } else { f64::INFINITY },
            regular,
        });
    }
    let factor = if report.total > 0.0 { lag2_total / report.total } else { f64::INFINITY };
    Ok(BoundReport {
        lag2_total,
        per_signal,
        drev_total: report.total,
        factor,
        mixture_k: inst.mixture_k(),
        all_regular,
    })
}

/// Checks the per-signal inequalities h_plus <= 2 DRev(s) (1 + delta) and
/// tg_h_plus <= DRev(s) (1 + delta) at grid slack `delta`. Irregular signals
/// are reported (regular = false), never fatal; their numbers are returned
/// raw for inspection.
pub fn per_signal_bounds(
    inst: &SignalPricingInstance,
    delta: f64,
) -> Result<(BoundReport, bool), DualityError> {
    let report = lagrangian_bound(inst)?;
    let k = report.mixture_k as f64;
    let within = report
        .per_signal
        .iter()
        .filter(|b| b.regular || report.mixture_k > 1)
        .all(|b| {
            b.h_plus <= 2.0 * k * b.drev * (1.0 + delta) + 1e-12
                && b.tg_h_plus <= k * b.drev * (1.0 + delta) + 1e-12
        });
    Ok((report, within))
}

/// Sign-pattern report for the tail functional
/// psi_s(t) = 2 sum_{t'>t} mass(t',s)/t' - (1/t) sum_{t'>t} mass(t',s).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiReport {
    pub psi: Vec<f64>,
    pub positive_indices: Vec<usize>,
    pub contiguous: bool,
}

pub fn psi_diagnostic(
    inst: &SignalPricingInstance,
    signal: usize,
) -> Result<PsiReport, DualityError> {
    inst.require_mode(Mode::Quadrature)?;
    let nv = inst.n_values();
    let pts = inst.grid().points();
    let mut dense = vec![0.0; nv];
    for &(i, m) in inst.column(signal) {
        dense[i as usize] = m;
    }
    let mut tail_over_t = 0.0;
    let mut tail = 0.0;
    let mut psi = vec![0.0; nv];
    for i in (0..nv).rev() {
        psi[i] = 2.0 * tail_over_t - tail / pts[i];
        tail_over_t += dense[i] / pts[i];
        tail += dense[i];
    }
    let scale = psi.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let positive_indices: Vec<usize> =
        (0..nv).filter(|&i| psi[i] > 1e-12 * scale).collect();
    let contiguous = positive_indices.windows(2).all(|w| w[1] == w[0] + 1);
    Ok(PsiReport { psi, positive_indices, contiguous })
}

/// Multiplier tables for the partial Lagrangian: lambda over ordered type
/// pairs and mu over cells, both nonnegative.
#[derive(Debug, Clone)]
pub struct DualWeights {
    n_values: usize,
    n_signals: usize,
    /// row-major over (t, t').
    pub lambda: Vec<f64>,
    /// row-major over (t, s).
    pub mu: Vec<f64>,
}

impl DualWeights {
    pub fn zeros(inst: &SignalPricingInstance) -> Self {
        let nv = inst.n_values();
        let ns = inst.n_signals();
        DualWeights { n_values: nv, n_signals: ns, lambda: vec![0.0; nv * nv], mu: vec![0.0; nv * ns] }
    }

    /// The flow construction lambda(t,t') = (2/t) width(t') for t' <= t,
    /// with mu sized cellwise so the payment coefficients of the Lagrangian
    /// are never positive; with widths equal to forward gaps and
    /// full-support signals this makes L(x,p,lambda,mu) <= lag2_total exact
    /// for every feasible mechanism.
    pub fn canonical(inst: &SignalPricingInstance) -> Result<Self, DualityError> {
        let nv = inst.n_values();
        let ns = inst.n_signals();
        let pts = inst.grid().points();
        let widths = inst.grid().widths();
        let mut lambda = vec![0.0; nv * nv];
        let mut wsum = 0.0;
        let mut lambda_out = vec![0.0; nv];
        for i in 0..nv {
            wsum += widths[i];
            for i2 in 0..=i {
                lambda[i * nv + i2] = 2.0 * widths[i2] / pts[i].max(1e-300);
            }
            lambda_out[i] = 2.0 * wsum / pts[i].max(1e-300);
        }
        let mut mu = vec![0.0; nv * ns];
        for j in 0..ns {
            let mut dense = vec![0.0; nv];
            for &(i, m) in inst.column(j) {
                dense[i as usize] = m;
            }
            let mut tail_over_t = 0.0;
            for i in (0..nv).rev() {
                tail_over_t += dense[i] / pts[i];
                if dense[i] > 0.0 {
                    let p_tilde = dense[i] * (1.0 - lambda_out[i]) + 2.0 * widths[i] * tail_over_t;
                    mu[i * ns + j] = p_tilde.max(0.0) / dense[i];
                }
            }
        }
        Ok(DualWeights { n_values: nv, n_signals: ns, lambda, mu })
    }

    /// Same lambda with the density-ratio multiplier mu = [g]_+ / f,
    /// set to 0 on zero-mass cells.
    pub fn canonical_paper(inst: &SignalPricingInstance) -> Result<Self, DualityError> {
        let fields = gh_fields(inst)?;
        let mut w = DualWeights::canonical(inst)?;
        let ns = inst.n_signals();
        let widths = inst.grid().widths();
        for j in 0..ns {
            for i in 0..inst.n_values() {
                w.mu[i * ns + j] = 0.0;
            }
            for &(i, m) in inst.column(j) {
                let i = i as usize;
                let f = m / widths[i];
                w.mu[i * ns + j] = fields.g_at(i, j).max(0.0) / f;
            }
        }
        Ok(w)
    }

    /// Independent nonnegative weights for weak-duality property checks.
    pub fn random(inst: &SignalPricingInstance, seed: u64, scale: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nv = inst.n_values();
        let ns = inst.n_signals();
        let lambda = (0..nv * nv).map(|_| rng.gen::<f64>() * scale).collect();
        let mu = (0..nv * ns).map(|_| rng.gen::<f64>() * scale).collect();
        DualWeights { n_values: nv, n_signals: ns, lambda, mu }
    }
}

/// Exact mass-form value of the partial Lagrangian
/// L(x, p, lambda, mu) = Rev + sum lambda * (IC slack) + sum mu * mass * (IR slack).
/// At any feasible mechanism and nonnegative weights this dominates revenue.
pub fn evaluate_lagrangian(
    inst: &SignalPricingInstance,
    mech: &Mechanism,
    weights: &DualWeights,
) -> Result<f64, DualityError> {
    let (nv, ns) = (inst.n_values(), inst.n_signals());
    if weights.n_values != nv || weights.n_signals != ns {
        return Err(DualityError::ShapeMismatch(format!(
            "weights for {}x{}, instance {}x{}",
            weights.n_values, weights.n_signals, nv, ns
        )));
    }
    if mech.n_values() != nv || mech.n_signals() != ns {
        return Err(DualityError::ShapeMismatch("mechanism shape".into()));
    }
    if let Some(&w) = weights
        .lambda
        .iter()
        .chain(weights.mu.iter())
        .find(|&&w| !(w >= 0.0))
    {
        return Err(DualityError::NegativeWeights(w));
    }
    let pts = inst.grid().points();
    let mut total = mech.revenue(inst);
    // IC slack per ordered pair, mass form
    for i in 0..nv {
        if inst.row(i).is_empty() {
            continue;
        }
        let t = pts[i];
        let mut truthful = 0.0;
        for &(j, m) in inst.row(i) {
            truthful += m * (t * mech.x(i, j as usize) - mech.p(i, j as usize));
        }
        for i2 in 0..nv {
            if i2 == i {
                continue;
            }
            let lam = weights.lambda[i * nv + i2];
            if lam == 0.0 {
                continue;
            }
            let mut dev = 0.0;
            for &(j, m) in inst.row(i) {
                dev += m * (t * mech.x(i2, j as usize) - mech.p(i2, j as usize));
            }
            total += lam * (truthful - dev);
        }
    }
    // IR slack per cell, mass form
    for i in 0..nv {
        for &(j, m) in inst.row(i) {
            let mu = weights.mu[i * ns + j as usize];
            if mu > 0.0 {
                total += mu * m * (pts[i] * mech.x(i, j as usize) - mech.p(i, j as usize));
            }
        }
    }
    Ok(total)
}

/// Per-bidder dual fields over profiles, density units.
#[derive(Debug, Clone)]
pub struct MultiDualFields {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// g_i(t) = -f(t) + 2 sum_{t_i' > t_i} f(t_i', t_-i)/t_i' and
/// h_i(t) = 2 f(t) phi_i(t_i | t_-i), with phi the forward-gap virtual value
/// of bidder i's conditional given the opponents.
pub fn multibidder_gh(minst: &MultiBidderInstance) -> Result<MultiDualFields, DualityError> {
    if minst.mode() != Mode::Quadrature {
        return Err(DualityError::Model(ModelError::WrongMode {
            expected: Mode::Quadrature,
            actual: minst.mode(),
        }));
    }
    let n = minst.n_bidders();
    let np = minst.n_profiles();
    let mut g = vec![vec![0.0; np]; n];
    let mut h = vec![vec![0.0; np]; n];
    for i in 0..n {
        let ni = minst.grid(i).len();
        let stride = minst.stride(i);
        let pts = minst.grid(i).points();
        let widths = minst.grid(i).widths();
        // enumerate opponent sub-profiles: all p with coordinate i = 0
        for p in 0..np {
            if minst.coords(p)[i] != 0 {
                continue;
            }
            // masses along bidder i's axis
            let axis: Vec<f64> = (0..ni).map(|k| minst.mass(p + k * stride)).collect();
            let axis_total: f64 = axis.iter().sum();
            // volume of a cell on this line with bidder i's width divided out
            let vol0 = minst.volume(p) / widths[0];
            let mut tail_over_t = 0.0;
            let mut phis = vec![0.0; ni];
            if axis_total > 0.0 {
                // forward-gap virtual values of the conditional along axis i
                let support: Vec<usize> = (0..ni).filter(|&k| axis[k] > 0.0).collect();
                let mut tail = 0.0;
                for r in (0..support.len()).rev() {
                    let k = support[r];
                    phis[k] = if r + 1 == support.len() {
                        pts[k]
                    } else {
                        pts[k] - tail * (pts[support[r + 1]] - pts[k]) / axis[k]
                    };
                    tail += axis[k];
                }
            }
            for k in (0..ni).rev() {
                let q = p + k * stride;
                let vol = vol0 * widths[k];
                let f = axis[k] / vol;
                g[i][q] = -f + 2.0 * tail_over_t / vol0;
                h[i][q] = 2.0 * f * phis[k];
                tail_over_t += axis[k] / pts[k];
            }
        }
    }
    Ok(MultiDualFields { g, h })
}

/// Max over bidders and mass-positive profiles of
/// [g_i t_i]_+ + h_i - 2 t_i f(t); pointwise algebra keeps this at or below
/// zero for any instance whose widths are forward gaps.
pub fn claim_dual_bound_check(minst: &MultiBidderInstance) -> Result<f64, DualityError> {
    let fields = multibidder_gh(minst)?;
    let mut worst = f64::NEG_INFINITY;
    for (p, &m) in minst.pmf().iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let vals = minst.values(p);
        let f = m / minst.volume(p);
        for i in 0..minst.n_bidders() {
            let lhs = (fields.g[i][p] * vals[i]).max(0.0) + fields.h[i][p];
            worst = worst.max(lhs - 2.0 * vals[i] * f);
        }
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

/// The two-term decomposition of the optimal BIC revenue bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LookaheadBound {
    /// 2 E[second-highest type].
    pub second_price_term: f64,
    /// Winner-bracket integral under the supplied mechanism's allocation.
    pub winner_term: f64,
    /// Winner-bracket integral at the maximizing allocation.
    pub winner_term_sup: f64,
    /// Per-bidder winner-bracket integrals at the maximizing allocation.
    pub winner_term_sup_per_bidder: Vec<f64>,
    /// second_price_term + winner_term_sup: upper bound on optimal BIC
    /// revenue with nonnegative payments.
    pub total: f64,
}

pub fn lookahead_bound_terms(
    minst: &MultiBidderInstance,
    mech: &MultiMechanism,
) -> Result<LookaheadBound, DualityError> {
    let fields = multibidder_gh(minst)?;
    let la = lookahead_auction(minst);
    let n = minst.n_bidders();
    let second_price_term = 2.0 * crate::auction::second_price_revenue(minst);
    let mut winner_term = 0.0;
    let mut winner_term_sup = 0.0;
    let mut per_bidder = vec![0.0; n];
    for (p, &m) in minst.pmf().iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let Some(i) = la.winner[p] else { continue };
        let vals = minst.values(p);
        let vol = minst.volume(p);
        let bracket = (fields.g[i][p] * vals[i]).max(0.0) + fields.h[i][p];
        winner_term += mech.x[i][p] * bracket * vol;
        let sup = bracket.max(0.0) * vol;
        winner_term_sup += sup;
        per_bidder[i] += sup;
    }
    Ok(LookaheadBound {
        second_price_term,
        winner_term,
        winner_term_sup,
        winner_term_sup_per_bidder: per_bidder,
        total: second_price_term + winner_term_sup,
    })
}
