//! Seeded instance generators for experiments and property tests.
//!
//! Every conditional family here has provably monotone forward-gap virtual
//! values on a uniform grid:
//! - uniform masses;
//! - cell integrals of exp(-lambda t) with the remaining tail as a top atom
//!   (lambda > 0): phi_i = t_i - w / (e^{lambda w} - 1) is increasing;
//! - cell integrals of a linear-hazard survival exp(-(a t + b t^2 / 2)) with
//!   a top atom (a > 0, b >= 0): the per-cell hazard integral grows with t;
//! - point-sampled geometric masses ratio^i, any ratio > 0.
//! The generators still assert the regularity audit on every draw.

use crate::auction::MultiBidderInstance;
use crate::model::{
    jointly_regular, Mode, SignalPricingInstance, ValueGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
enum Family {
    Uniform,
    TruncExp { lambda: f64 },
    LinearHazard { a: f64, b: f64 },
    Geometric { ratio: f64 },
}

fn draw_family(rng: &mut ChaCha8Rng) -> Family {
    match rng.gen_range(0..4u8) {
        0 => Family::Uniform,
        1 => Family::TruncExp { lambda: rng.gen_range(0.08..0.9) },
        2 => Family::LinearHazard { a: rng.gen_range(0.05..0.4), b: rng.gen_range(0.0..0.12) },
        _ => Family::Geometric { ratio: rng.gen_range(0.82..1.22) },
    }
}

fn family_weights(family: Family, pts: &[f64], width: f64) -> Vec<f64> {
    let n = pts.len();
    let mut w = vec![0.0; n];
    match family {
        Family::Uniform => {
            for x in w.iter_mut() {
                *x = 1.0;
            }
        }
        Family::TruncExp { lambda } => {
            let survival = |t: f64| (-lambda * t).exp();
            for i in 0..n - 1 {
                w[i] = survival(pts[i]) - survival(pts[i + 1]);
            }
            w[n - 1] = survival(pts[n - 1]);
        }
        Family::LinearHazard { a, b } => {
            let survival = |t: f64| (-(a * t + 0.5 * b * t * t)).exp();
            for i in 0..n - 1 {
                w[i] = survival(pts[i]) - survival(pts[i + 1]);
            }
            w[n - 1] = survival(pts[n - 1]);
        }
        Family::Geometric { ratio } => {
            let mut cur = 1.0;
            for x in w.iter_mut() {
                *x = cur;
                cur *= ratio.powf(width);
            }
        }
    }
    w
}

/// Jointly regular quadrature instance on a uniform grid: each conditional
/// drawn from a provably regular family, signal weights random. Grid
/// parameters depend only on the seed, so refining `n_values` keeps the
/// underlying continuous instance fixed.
pub fn random_regular_instance(
    seed: u64,
    n_values: usize,
    n_signals: usize,
) -> SignalPricingInstance {
    random_regular_mixture(seed, n_values, n_signals, 1).0
}

/// Mixture of k jointly regular components sharing one grid and signal set.
/// Returns the mixture (tagged with k) and the components.
pub fn random_regular_mixture(
    seed: u64,
    n_values: usize,
    n_signals: usize,
    k: usize,
) -> (SignalPricingInstance, Vec<SignalPricingInstance>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = rng.gen_range(0.6..2.0);
    let hi = lo + rng.gen_range(4.0..10.0);
    let grid = ValueGrid::uniform(lo, hi, n_values).expect("valid grid");
    let width = (hi - lo) / (n_values - 1) as f64;
    let signals: Vec<String> = (0..n_signals).map(|j| format!("s{j}")).collect();
    let mut components = Vec::with_capacity(k);
    for _ in 0..k {
        let mut sig_w: Vec<f64> = (0..n_signals).map(|_| rng.gen_range(0.4..1.6)).collect();
        let total: f64 = sig_w.iter().sum();
        for x in sig_w.iter_mut() {
            *x /= total;
        }
        let mut cols = Vec::with_capacity(n_signals);
        for j in 0..n_signals {
            let fam = draw_family(&mut rng);
            let mut wts = family_weights(fam, grid.points(), width);
            let s: f64 = wts.iter().sum();
            for x in wts.iter_mut() {
                *x *= sig_w[j] / s;
            }
            cols.push(
                wts.iter()
                    .enumerate()
                    .map(|(i, &m)| (i as u32, m))
                    .collect::<Vec<_>>(),
            );
        }
        let inst = SignalPricingInstance::from_columns(
            grid.clone(),
            signals.clone(),
            cols,
            Mode::Quadrature,
            1,
        )
        .expect("generated instance is valid");
        debug_assert!(jointly_regular(&inst).unwrap());
        components.push(inst);
    }
    if k == 1 {
        let inst = components[0].clone();
        return (inst, components);
    }
    let mut mix_w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.3..1.0)).collect();
    let total: f64 = mix_w.iter().sum();
    for x in mix_w.iter_mut() {
        *x /= total;
    }
    let refs: Vec<&SignalPricingInstance> = components.iter().collect();
    let mixture = crate::model::mixture_instance(&refs, &mix_w).expect("mixture of shared-grid components");
    (mixture, components)
}

/// Correlated two-bidder quadrature instance with jointly regular
/// conditionals: point masses proportional to
/// exp(-l1 t1 - l2 t2 - gamma t1 t2), whose one-dimensional conditionals are
/// point-sampled exponentials.
pub fn random_regular_two_bidder(seed: u64, n1: usize, n2: usize) -> MultiBidderInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo1 = rng.gen_range(0.5..1.5);
    let g1 = ValueGrid::uniform(lo1, lo1 + rng.gen_range(3.0..8.0), n1).unwrap();
    let lo2 = rng.gen_range(0.5..1.5);
    let g2 = ValueGrid::uniform(lo2, lo2 + rng.gen_range(3.0..8.0), n2).unwrap();
    let l1 = rng.gen_range(-0.25..0.45);
    let l2 = rng.gen_range(-0.25..0.45);
    let hi = g1.points()[n1 - 1].max(g2.points()[n2 - 1]);
    // keep the conditional rates l + gamma * t bounded away from blowup
    let gmax = 0.35 / hi;
    let gamma = rng.gen_range(-gmax..gmax);
    let mut pmf = vec![0.0; n1 * n2];
    let mut total = 0.0;
    for (k1, &t1) in g1.points().iter().enumerate() {
        for (k2, &t2) in g2.points().iter().enumerate() {
            let m = (-(l1 * t1 + l2 * t2 + gamma * t1 * t2)).exp();
            pmf[k1 * n2 + k2] = m;
            total += m;
        }
    }
    for m in pmf.iter_mut() {
        *m /= total;
    }
    MultiBidderInstance::new(vec![g1, g2], pmf, Mode::Quadrature).expect("valid 2-bidder instance")
}

/// Generic correlated 3-value x 3-signal instance whose signal-conditional
/// matrix is provably full rank (checked via the determinant of the
/// row-normalized conditional matrix; degenerate draws are reseeded).
/// Returns the instance and |det| of [Pr(s | t)].
pub fn random_full_rank_3x3(seed: u64) -> (SignalPricingInstance, f64) {
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt * 0x9e3779b97f4a7c15));
        let grid = ValueGrid::from_points(vec![
            rng.gen_range(0.5..1.5),
            rng.gen_range(2.0..3.5),
            rng.gen_range(4.0..6.5),
        ])
        .unwrap();
        let mut pmf: Vec<f64> = (0..9).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = pmf.iter().sum();
        for m in pmf.iter_mut() {
            *m /= total;
        }
        let signals = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let inst = crate::model::build_instance(grid, signals, &pmf, Mode::Mass).unwrap();
        // rows of [Pr(s|t)]
        let mut cond = [[0.0f64; 3]; 3];
        for i in 0..3 {
            let ft = inst.value_marginal()[i];
            for j in 0..3 {
                cond[i][j] = inst.mass(i, j) / ft;
            }
        }
        let det = cond[0][0] * (cond[1][1] * cond[2][2] - cond[1][2] * cond[2][1])
            - cond[0][1] * (cond[1][0] * cond[2][2] - cond[1][2] * cond[2][0])
            + cond[0][2] * (cond[1][0] * cond[2][1] - cond[1][1] * cond[2][0]);
        if det.abs() > 5e-3 {
            return (inst, det.abs());
        }
        attempt += 1;
    }
}
