//! Canonical distribution and instance builders.

use super::{build_instance, DiscreteDist, Mode, ModelError, SignalPricingInstance, ValueGrid};

/// Equal revenue distribution truncated at `h`, discretized on an `n_points`
/// geometric grid over [1, h]: interior mass F(t_{i+1}) - F(t_i) with
/// F(v) = 1 - 1/v, and the atom 1/h at the top point. Every posted price on
/// the grid extracts revenue exactly 1.
pub fn erd_grid(h: f64, n_points: usize) -> Result<DiscreteDist, ModelError> {
    if !(h > 1.0) {
        return Err(ModelError::InvalidH(h));
    }
    if n_points < 2 {
        return Err(ModelError::InvalidParams(format!(
            "equal revenue grid needs at least 2 points, got {n_points}"
        )));
    }
    let grid = ValueGrid::geometric(1.0, h, n_points)?;
    let pts = grid.points();
    let mut pmf = Vec::with_capacity(n_points);
    for i in 0..n_points - 1 {
        // F(t_{i+1}) - F(t_i) written as a difference of reciprocals
        pmf.push(1.0 / pts[i] - 1.0 / pts[i + 1]);
    }
    pmf.push(1.0 / h);
    DiscreteDist::new(grid, pmf)
}

/// Label used for the uninformative signal of the rebate-gap instance.
pub const UNINFORMATIVE: &str = "*";

/// Rebate-gap instance: value from the equal revenue distribution truncated
/// at `h`; the signal equals the value with probability `eps` and is `*`
/// otherwise. Signals are `*` followed by one label per grid value.
pub fn example1_instance(
    h: f64,
    eps: f64,
    n_points: usize,
) -> Result<SignalPricingInstance, ModelError> {
    if !(h > std::f64::consts::E) {
        return Err(ModelError::InvalidParams(format!(
            "needs h > e for the incentive function, got {h}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ModelError::InvalidParams(format!(
            "signal accuracy must lie strictly inside (0, 1), got {eps}"
        )));
    }
    let marginal = erd_grid(h, n_points)?;
    let nv = marginal.grid().len();
    let mut signals = Vec::with_capacity(nv + 1);
    signals.push(UNINFORMATIVE.to_string());
    for &v in marginal.grid().points() {
        signals.push(format!("{v}"));
    }
    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv + 1];
    for (i, m) in marginal.support() {
        cols[0].push((i as u32, (1.0 - eps) * m));
        cols[i + 1].push((i as u32, eps * m));
    }
    SignalPricingInstance::from_columns(marginal.grid().clone(), signals, cols, Mode::Mass, 1)
}

/// Interleaved-support instance: the signal is a bit vector s in {0,1}^m,
/// the conditional support is {3k + s_k : k = 1..m}, and the conditional pmf
/// given any signal is the discrete equal-revenue weighting on that support,
/// normalized to sum 1 (the raw weights sum to 1/t_1; normalizing multiplies
/// by t_1).
///
/// The joint is proportional to raw-weight(v | s) over a uniform draw of s
/// and is normalized globally, so the posterior over signals given a value
/// keeps every unpinned coordinate except the next level exactly uniform;
/// the signal marginal comes out proportional to 1/(3 + s_1).
pub fn example2_instance(m_levels: usize) -> Result<SignalPricingInstance, ModelError> {
    if m_levels < 2 {
        return Err(ModelError::InvalidParams(format!(
            "needs at least 2 signal levels, got {m_levels}"
        )));
    }
    if m_levels > 16 {
        return Err(ModelError::TooManyLevels(m_levels));
    }
    let m = m_levels;
    // global grid: {3k, 3k+1} for k = 1..m
    let mut points = Vec::with_capacity(2 * m);
    for k in 1..=m {
        points.push((3 * k) as f64);
        points.push((3 * k + 1) as f64);
    }
    let grid = ValueGrid::from_points(points)?;
    let n_sig = 1usize << m;
    // sum over s of 2^-m * (raw weight total 1/t_1(s)) = (1/3 + 1/4)/2 = 7/24
    let scale = (24.0 / 7.0) / n_sig as f64;
    let mut signals = Vec::with_capacity(n_sig);
    let mut cols = Vec::with_capacity(n_sig);
    for s in 0..n_sig {
        let bits: Vec<u32> = (0..m).map(|k| ((s >> k) & 1) as u32).collect();
        let label: String = bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
        signals.push(label);
        let support: Vec<f64> = (1..=m).map(|k| (3 * k) as f64 + bits[k - 1] as f64).collect();
        let mut col = Vec::with_capacity(m);
        for k in 0..m {
            let w = if k + 1 < m {
                1.0 / support[k] - 1.0 / support[k + 1]
            } else {
                1.0 / support[k]
            };
            let idx = 2 * k + bits[k] as usize;
            col.push((idx as u32, scale * w));
        }
        cols.push(col);
    }
    SignalPricingInstance::from_columns(grid, signals, cols, Mode::Mass, 1)
}

/// Pointwise convex combination of instances sharing a grid and signal set.
/// The mixture tag k (sum of component tags) is recorded for bound scaling.
pub fn mixture_instance(
    instances: &[&SignalPricingInstance],
    weights: &[f64],
) -> Result<SignalPricingInstance, ModelError> {
    if instances.is_empty() || instances.len() != weights.len() {
        return Err(ModelError::IncompatibleShapes(format!(
            "{} instances vs {} weights",
            instances.len(),
            weights.len()
        )));
    }
    let wsum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || (wsum - 1.0).abs() > super::SUM_TOLERANCE {
        return Err(ModelError::InvalidParams(format!(
            "weights must be nonnegative and sum to 1, got sum {wsum}"
        )));
    }
    let first = instances[0];
    for inst in &instances[1..] {
        if inst.grid() != first.grid() {
            return Err(ModelError::IncompatibleShapes("grids differ".into()));
        }
        if inst.signals() != first.signals() {
            return Err(ModelError::IncompatibleShapes("signal sets differ".into()));
        }
        if inst.mode() != first.mode() {
            return Err(ModelError::IncompatibleShapes("modes differ".into()));
        }
    }
    let ns = first.n_signals();
    let nv = first.n_values();
    let mut dense = vec![0.0; nv * ns];
    for (inst, &w) in instances.iter().zip(weights) {
        for j in 0..ns {
            for &(i, m) in inst.column(j) {
                dense[i as usize * ns + j] += w * m;
            }
        }
    }
    let mixed = build_instance(first.grid().clone(), first.signals().to_vec(), &dense, first.mode())?;
    let k: usize = instances.iter().map(|i| i.mixture_k()).sum();
    SignalPricingInstance::from_columns(
        mixed.grid().clone(),
        mixed.signals().to_vec(),
        mixed.cols.clone(),
        mixed.mode(),
        k,
    )
}
