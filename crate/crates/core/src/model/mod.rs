//! Discrete instance representation: value grids, joint (value, signal) mass
//! functions, conditional distributions, virtual values and regularity audits.
//!
//! Instances are immutable after construction and safe to share across
//! threads; every operation here is a pure function of its inputs.

mod builders;
mod virtuals;

pub use builders::{
    erd_grid, example1_instance, example2_instance, mixture_instance, UNINFORMATIVE,
};
pub use virtuals::{
    joint_regularity_audit, jointly_regular, regularity_audit, tail_revenue, virtual_values,
    RegularityReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Build-time tolerance on |total mass - 1|.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("negative or non-finite mass at (value {value}, signal {signal}): {mass}")]
    NegativeMass { value: usize, signal: usize, mass: f64 },
    #[error("masses sum to {sum}, expected 1")]
    SumNotOne { sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("equal revenue distribution needs H > 1, got {0}")]
    InvalidH(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("signal levels must be between 2 and 16, got {0}")]
    TooManyLevels(usize),
    #[error("signal {0} has zero marginal mass")]
    ZeroMassSignal(usize),
    #[error("incompatible shapes: {0}")]
    IncompatibleShapes(String),
    #[error("operation requires {expected:?} mode, instance is {actual:?}")]
    WrongMode { expected: Mode, actual: Mode },
}

/// How the pmf entries should be read.
///
/// `Mass` treats each entry as an atom. `Quadrature` treats `mass(t, s)` as
/// the integral of a piecewise-constant density over the cell
/// `[point, point + width)`, so `f(t, s) = mass(t, s) / width(t)`; the dual
/// integrals operate on that density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mass,
    Quadrature,
}

/// Strictly increasing grid of nonnegative values with positive cell widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    points: Vec<f64>,
    widths: Vec<f64>,
}

impl ValueGrid {
    pub fn new(points: Vec<f64>, widths: Vec<f64>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::InvalidParams("empty grid".into()));
        }
        if points.len() != widths.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} points vs {} widths",
                points.len(),
                widths.len()
            )));
        }
        if points[0] < 0.0 || !points[0].is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "grid points must be nonnegative, got {}",
                points[0]
            )));
        }
        for i in 1..points.len() {
            if !(points[i] > points[i - 1]) || !points[i].is_finite() {
                return Err(ModelError::InvalidParams(format!(
                    "grid points must be strictly increasing at index {i}"
                )));
            }
        }
        for (i, &w) in widths.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(ModelError::InvalidParams(format!(
                    "width {w} at index {i} must be positive"
                )));
            }
        }
        Ok(ValueGrid { points, widths })
    }

    /// Grid with widths set to the forward gaps; the top point repeats the
    /// last gap (it usually carries an atom, whose width is never integrated
    /// against in the bound formulas).
    pub fn from_points(points: Vec<f64>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            let widths = vec![1.0; points.len()];
            return ValueGrid::new(points, widths);
        }
        let mut widths: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
        let last = *widths.last().unwrap();
        widths.push(last);
        ValueGrid::new(points, widths)
    }

    pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Self, ModelError> {
        if n < 2 || !(hi > lo) || !(lo > 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "geometric grid needs n >= 2 and 0 < lo < hi, got n={n}, lo={lo}, hi={hi}"
            )));
        }
        let ratio = hi / lo;
        let points: Vec<f64> = (0..n)
            .map(|i| lo * ratio.powf(i as f64 / (n - 1) as f64))
            .collect();
        ValueGrid::from_points(points)
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self, ModelError> {
        if n < 2 || !(hi > lo) || lo < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "uniform grid needs n >= 2 and 0 <= lo < hi, got n={n}, lo={lo}, hi={hi}"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        ValueGrid::from_points(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn width(&self, i: usize) -> f64 {
        self.widths[i]
    }
}

/// A single discrete distribution over a value grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteDist {
    grid: ValueGrid,
    pmf: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(grid: ValueGrid, pmf: Vec<f64>) -> Result<Self, ModelError> {
        if pmf.len() != grid.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} masses vs {} grid points",
                pmf.len(),
                grid.len()
            )));
        }
        for (i, &m) in pmf.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(ModelError::NegativeMass { value: i, signal: 0, mass: m });
            }
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::SumNotOne { sum });
        }
        Ok(DiscreteDist { grid, pmf })
    }

    /// Normalizes a nonnegative weight vector into a distribution.
    pub fn from_weights(grid: ValueGrid, weights: Vec<f64>) -> Result<Self, ModelError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(ModelError::InvalidParams("weights sum to zero".into()));
        }
        let pmf = weights.into_iter().map(|w| w / sum).collect();
        DiscreteDist::new(grid, pmf)
    }

    pub fn grid(&self) -> &ValueGrid {
        &self.grid
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.pmf[i]
    }

    /// Support as grid indices with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().copied().enumerate().filter(|&(_, m)| m > 0.0)
    }

    pub fn expected_value(&self) -> f64 {
        self.support().map(|(i, m)| m * self.grid.point(i)).sum()
    }

    /// Pr[v >= r] with r given as a grid index.
    pub fn tail_mass(&self, i: usize) -> f64 {
        self.pmf[i..].iter().sum()
    }
}

/// Joint distribution of (value, private signal) on a discrete grid.
///
/// Storage is sparse by signal: each signal holds its sorted list of
/// (value index, mass) pairs with strictly positive mass. A transposed view
/// by value is kept alongside for deviation scans.
#[derive(Debug, Clone)]
pub struct SignalPricingInstance {
    grid: ValueGrid,
    signals: Vec<String>,
    cols: Vec<Vec<(u32, f64)>>,
    rows: Vec<Vec<(u32, f64)>>,
    signal_marginal: Vec<f64>,
    value_marginal: Vec<f64>,
    mode: Mode,
    mixture_k: usize,
}

/// Validates dimensions, nonnegativity and total mass, then freezes the
/// instance. `pmf` is row-major over (value, signal).
pub fn build_instance(
    grid: ValueGrid,
    signals: Vec<String>,
    pmf: &[f64],
    mode: Mode,
) -> Result<SignalPricingInstance, ModelError> {
    let nv = grid.len();
    let ns = signals.len();
    if ns == 0 {
        return Err(ModelError::DimensionMismatch("no signals".into()));
    }
    if pmf.len() != nv * ns {
        return Err(ModelError::DimensionMismatch(format!(
            "pmf has {} entries, expected {} x {}",
            pmf.len(),
            nv,
            ns
        )));
    }
    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ns];
    for i in 0..nv {
        for j in 0..ns {
            let m = pmf[i * ns + j];
            if !(m >= 0.0) || !m.is_finite() {
                return Err(ModelError::NegativeMass { value: i, signal: j, mass: m });
            }
            if m > 0.0 {
                cols[j].push((i as u32, m));
            }
        }
    }
    SignalPricingInstance::from_columns(grid, signals, cols, mode, 1)
}

impl SignalPricingInstance {
    /// Sparse constructor: per-signal sorted (value index, mass) lists.
    pub fn from_columns(
        grid: ValueGrid,
        signals: Vec<String>,
        cols: Vec<Vec<(u32, f64)>>,
        mode: Mode,
        mixture_k: usize,
    ) -> Result<Self, ModelError> {
        let nv = grid.len();
        if cols.len() != signals.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} columns vs {} signals",
                cols.len(),
                signals.len()
            )));
        }
        let mut total = 0.0;
        let mut signal_marginal = vec![0.0; signals.len()];
        let mut value_marginal = vec![0.0; nv];
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv];
        for (j, col) in cols.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for &(i, m) in col {
                if i as usize >= nv {
                    return Err(ModelError::DimensionMismatch(format!(
                        "value index {i} out of range for grid of {nv}"
                    )));
                }
                if let Some(p) = prev {
                    if i <= p {
                        return Err(ModelError::DimensionMismatch(format!(
                            "column {j} not sorted by value index"
                        )));
                    }
                }
                prev = Some(i);
                if !(m >= 0.0) || !m.is_finite() {
                    return Err(ModelError::NegativeMass { value: i as usize, signal: j, mass: m });
                }
                if m > 0.0 {
                    total += m;
                    signal_marginal[j] += m;
                    value_marginal[i as usize] += m;
                    rows[i as usize].push((j as u32, m));
                }
            }
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::SumNotOne { sum: total });
        }
        let cols = cols
            .into_iter()
            .map(|c| c.into_iter().filter(|&(_, m)| m > 0.0).collect())
            .collect();
        Ok(SignalPricingInstance {
            grid,
            signals,
            cols,
            rows,
            signal_marginal,
            value_marginal,
            mode,
            mixture_k,
        })
    }

    pub fn grid(&self) -> &ValueGrid {
        &self.grid
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn n_values(&self) -> usize {
        self.grid.len()
    }

    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of jointly regular components this pmf is a mixture of
    /// (1 unless built by `mixture_instance`). Scales the dual bounds.
    pub fn mixture_k(&self) -> usize {
        self.mixture_k
    }

    /// Support cells of one signal, sorted by value index.
    pub fn column(&self, signal: usize) -> &[(u32, f64)] {
        &self.cols[signal]
    }

    /// Support cells of one value, sorted by signal index.
    pub fn row(&self, value: usize) -> &[(u32, f64)] {
        &self.rows[value]
    }

    pub fn mass(&self, value: usize, signal: usize) -> f64 {
        match self.cols[signal].binary_search_by_key(&(value as u32), |&(i, _)| i) {
            Ok(k) => self.cols[signal][k].1,
            Err(_) => 0.0,
        }
    }

    /// Marginal mass of each signal, f(s).
    pub fn signal_marginal(&self) -> &[f64] {
        &self.signal_marginal
    }

    /// Marginal mass of each value, f(t).
    pub fn value_marginal(&self) -> &[f64] {
        &self.value_marginal
    }

    pub fn support_cell_count(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn signal_index(&self, label: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == label)
    }

    pub fn to_dense_pmf(&self) -> Vec<f64> {
        let ns = self.n_signals();
        let mut out = vec![0.0; self.n_values() * ns];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, m) in col {
                out[i as usize * ns + j] = m;
            }
        }
        out
    }

    pub fn require_mode(&self, expected: Mode) -> Result<(), ModelError> {
        if self.mode != expected {
            return Err(ModelError::WrongMode { expected, actual: self.mode });
        }
        Ok(())
    }
}

/// Value distribution conditioned on a signal: pmf(t) = mass(t, s) / f(s).
pub fn conditional(inst: &SignalPricingInstance, signal: usize) -> Result<DiscreteDist, ModelError> {
    let fs = inst.signal_marginal[signal];
    if !(fs > 0.0) {
        return Err(ModelError::ZeroMassSignal(signal));
    }
    let mut pmf = vec![0.0; inst.n_values()];
    for &(i, m) in &inst.cols[signal] {
        pmf[i as usize] = m / fs;
    }
    // renormalization below float tolerance keeps the sum-to-one invariant
    let sum: f64 = pmf.iter().sum();
    for p in pmf.iter_mut() {
        *p /= sum;
    }
    DiscreteDist::new(inst.grid.clone(), pmf)
}

/// Marginal signal distribution f(s).
pub fn marginal_signal(inst: &SignalPricingInstance) -> Vec<f64> {
    inst.signal_marginal.clone()
}

/// Marginal value distribution as a DiscreteDist.
pub fn value_marginal_dist(inst: &SignalPricingInstance) -> Result<DiscreteDist, ModelError> {
    DiscreteDist::from_weights(inst.grid.clone(), inst.value_marginal.clone())
}
