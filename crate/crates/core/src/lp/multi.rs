//! Multi-bidder BIC/DSIC auction LP.

use super::backend::{LpBuilder, LpOutcome};
use super::{ConstraintMode, IcMode, IrMode, LpError, LpStatus, MultiLpSolution, PaymentMode, SolveOptions};
use crate::auction::{lookahead_auction, MultiBidderInstance, MultiMechanism};

/// Maximizes expected total payment over feasible auctions under `mode`.
/// Allocation feasibility (sum_i x_i <= 1) is always enforced; IC rows are
/// generated lazily past the row threshold.
pub fn solve_multi_bidder(
    minst: &MultiBidderInstance,
    mode: ConstraintMode,
) -> Result<MultiLpSolution, LpError> {
    solve_multi_bidder_opts(minst, mode, &SolveOptions::default())
}

pub fn solve_multi_bidder_opts(
    minst: &MultiBidderInstance,
    mode: ConstraintMode,
    opts: &SolveOptions,
) -> Result<MultiLpSolution, LpError> {
    let n = minst.n_bidders();
    if n > 3 {
        return Err(LpError::TooManyBidders(n));
    }
    // positive-mass profiles carry the variables
    let profiles: Vec<usize> = (0..minst.n_profiles())
        .filter(|&p| minst.mass(p) > 0.0)
        .collect();
    let n_vars_matrix = profiles.len() * n;
    if n_vars_matrix > opts.cell_cap {
        return Err(LpError::SizeCapExceeded { cells: n_vars_matrix, cap: opts.cell_cap });
    }
    let mut pos_of = vec![usize::MAX; minst.n_profiles()];
    for (q, &p) in profiles.iter().enumerate() {
        pos_of[p] = q;
    }
    let coords: Vec<Vec<usize>> = profiles.iter().map(|&p| minst.coords(p)).collect();
    let marginals: Vec<Vec<f64>> = (0..n).map(|i| minst.bidder_marginal(i)).collect();
    let scales: Vec<Vec<f64>> = (0..n)
        .map(|i| minst.grid(i).points().iter().map(|&t| t.max(1.0)).collect())
        .collect();
    // per (bidder, value): positions q of profiles holding that value
    let by_coord: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|i| {
            let mut lists = vec![Vec::new(); minst.grid(i).len()];
            for (q, c) in coords.iter().enumerate() {
                lists[c[i]].push(q);
            }
            lists
        })
        .collect();
    // winner restriction for the highest-bidder-only exploration flag
    let winner: Option<Vec<Option<usize>>> = if opts.restrict_to_highest {
        Some(lookahead_auction(minst).winner)
    } else {
        None
    };

    let mut base = LpBuilder::new();
    // xid[i][q], vid[i][q]
    let mut xid = vec![vec![0usize; profiles.len()]; n];
    let mut vid = vec![vec![0usize; profiles.len()]; n];
    for i in 0..n {
        for q in 0..profiles.len() {
            let m = minst.mass(profiles[q]);
            let k = coords[q][i];
            let t = minst.grid(i).point(k);
            let restricted = winner
                .as_ref()
                .map(|w| w[profiles[q]] != Some(i))
                .unwrap_or(false);
            let x_upper = if restricted { 0.0 } else { 1.0 };
            xid[i][q] = base.add_var(m * t, 0.0, x_upper);
            let v_lower = match mode.ir {
                IrMode::ExPost => 0.0,
                IrMode::Interim => f64::NEG_INFINITY,
            };
            vid[i][q] = base.add_var(-m * scales[i][k], v_lower, f64::INFINITY);
        }
    }
    for q in 0..profiles.len() {
        let row: Vec<_> = (0..n).map(|i| (xid[i][q], 1.0)).collect();
        base.add_le(row, 1.0);
    }
    if mode.payments == PaymentMode::NonNegative {
        for i in 0..n {
            for q in 0..profiles.len() {
                let k = coords[q][i];
                base.add_ge(
                    vec![(xid[i][q], minst.grid(i).point(k)), (vid[i][q], -scales[i][k])],
                    0.0,
                );
            }
        }
    }
    if mode.ir == IrMode::Interim {
        for i in 0..n {
            for k in 0..minst.grid(i).len() {
                if marginals[i][k] <= 0.0 {
                    continue;
                }
                let row: Vec<_> = by_coord[i][k]
                    .iter()
                    .map(|&q| (vid[i][q], minst.mass(profiles[q]) * scales[i][k]))
                    .collect();
                base.add_ge(row, 0.0);
            }
        }
    }

    // deviation target: profile q with bidder i's coordinate replaced by k2
    let target = |q: usize, i: usize, k2: usize| -> Option<usize> {
        let p = profiles[q];
        let stride = minst.stride(i);
        let p2 = (p as isize + (k2 as isize - coords[q][i] as isize) * stride as isize) as usize;
        let q2 = pos_of[p2];
        if q2 == usize::MAX {
            None
        } else {
            Some(q2)
        }
    };

    let bic_row = |i: usize, k: usize, k2: usize| -> Vec<(usize, f64)> {
        let t = minst.grid(i).point(k);
        let t2 = minst.grid(i).point(k2);
        let mut row = Vec::with_capacity(3 * by_coord[i][k].len());
        for &q in &by_coord[i][k] {
            let m = minst.mass(profiles[q]);
            row.push((vid[i][q], m * scales[i][k]));
            if let Some(q2) = target(q, i, k2) {
                row.push((xid[i][q2], -m * (t - t2)));
                row.push((vid[i][q2], -m * scales[i][k2]));
            }
        }
        row
    };
    let dsic_row = |i: usize, q: usize, k2: usize| -> Vec<(usize, f64)> {
        let k = coords[q][i];
        let t = minst.grid(i).point(k);
        let t2 = minst.grid(i).point(k2);
        let mut row = vec![(vid[i][q], scales[i][k])];
        if let Some(q2) = target(q, i, k2) {
            row.push((xid[i][q2], -(t - t2)));
            row.push((vid[i][q2], -scales[i][k2]));
        }
        row
    };

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    struct RowKey {
        bidder: usize,
        a: usize,
        b: usize,
    }
    let materialize = |key: RowKey| match mode.ic {
        IcMode::Bayesian => bic_row(key.bidder, key.a, key.b),
        IcMode::DominantStrategy => dsic_row(key.bidder, key.a, key.b),
    };

    let full_count: usize = match mode.ic {
        IcMode::Bayesian => (0..n)
            .map(|i| {
                let pos = marginals[i].iter().filter(|&&m| m > 0.0).count();
                pos * pos.saturating_sub(1)
            })
            .sum(),
        IcMode::DominantStrategy => (0..n)
            .map(|i| profiles.len() * (minst.grid(i).len() - 1))
            .sum(),
    };

    let mut active: Vec<RowKey> = Vec::new();
    let mut added = std::collections::HashSet::new();
    let lazy = full_count > opts.lazy_row_threshold;
    if !lazy {
        for i in 0..n {
            match mode.ic {
                IcMode::Bayesian => {
                    for k in 0..minst.grid(i).len() {
                        if marginals[i][k] <= 0.0 {
                            continue;
                        }
                        for k2 in 0..minst.grid(i).len() {
                            if k2 != k && marginals[i][k2] > 0.0 {
                                active.push(RowKey { bidder: i, a: k, b: k2 });
                            }
                        }
                    }
                }
                IcMode::DominantStrategy => {
                    for q in 0..profiles.len() {
                        for k2 in 0..minst.grid(i).len() {
                            if k2 != coords[q][i] {
                                active.push(RowKey { bidder: i, a: q, b: k2 });
                            }
                        }
                    }
                }
            }
        }
    } else {
        for i in 0..n {
            let pos: Vec<usize> = (0..minst.grid(i).len())
                .filter(|&k| marginals[i][k] > 0.0)
                .collect();
            for (r, &k) in pos.iter().enumerate() {
                let mut off = 1usize;
                while off < pos.len() {
                    for k2 in [
                        (r + off < pos.len()).then(|| pos[r + off]),
                        (r >= off).then(|| pos[r - off]),
                    ]
                    .into_iter()
                    .flatten()
                    {
                        match mode.ic {
                            IcMode::Bayesian => {
                                let key = RowKey { bidder: i, a: k, b: k2 };
                                if added.insert(key) {
                                    active.push(key);
                                }
                            }
                            IcMode::DominantStrategy => {
                                for &q in &by_coord[i][k] {
                                    let key = RowKey { bidder: i, a: q, b: k2 };
                                    if added.insert(key) {
                                        active.push(key);
                                    }
                                }
                            }
                        }
                    }
                    off *= 2;
                }
            }
        }
    }

    let mut rounds = 0;
    let outcome: LpOutcome = loop {
        rounds += 1;
        let mut lp = base.clone();
        for &key in &active {
            lp.add_ge(materialize(key), 0.0);
        }
        let out = lp.solve()?;
        if out.status != LpStatus::Optimal || !lazy {
            break out;
        }
        let mut viols: Vec<(f64, RowKey)> = Vec::new();
        match mode.ic {
            IcMode::Bayesian => {
                for i in 0..n {
                    let ni = minst.grid(i).len();
                    let mut truth = vec![0.0; ni];
                    for (q, c) in coords.iter().enumerate() {
                        truth[c[i]] += minst.mass(profiles[q])
                            * scales[i][c[i]]
                            * out.primal[vid[i][q]];
                    }
                    for k in 0..ni {
                        if marginals[i][k] <= 0.0 {
                            continue;
                        }
                        let t = minst.grid(i).point(k);
                        for k2 in 0..ni {
                            if k2 == k || marginals[i][k2] <= 0.0 {
                                continue;
                            }
                            let key = RowKey { bidder: i, a: k, b: k2 };
                            if added.contains(&key) {
                                continue;
                            }
                            let t2 = minst.grid(i).point(k2);
                            let mut dev = 0.0;
                            for &q in &by_coord[i][k] {
                                if let Some(q2) = target(q, i, k2) {
                                    dev += minst.mass(profiles[q])
                                        * ((t - t2) * out.primal[xid[i][q2]]
                                            + scales[i][k2] * out.primal[vid[i][q2]]);
                                }
                            }
                            if dev > truth[k] + opts.violation_tol {
                                viols.push((dev - truth[k], key));
                            }
                        }
                    }
                }
            }
            IcMode::DominantStrategy => {
                for i in 0..n {
                    let ni = minst.grid(i).len();
                    for q in 0..profiles.len() {
                        let k = coords[q][i];
                        let t = minst.grid(i).point(k);
                        let m = minst.mass(profiles[q]);
                        let truth = scales[i][k] * out.primal[vid[i][q]];
                        for k2 in 0..ni {
                            if k2 == k {
                                continue;
                            }
                            let key = RowKey { bidder: i, a: q, b: k2 };
                            if added.contains(&key) {
                                continue;
                            }
                            let dev = match target(q, i, k2) {
                                Some(q2) => {
                                    (t - minst.grid(i).point(k2)) * out.primal[xid[i][q2]]
                                        + scales[i][k2] * out.primal[vid[i][q2]]
                                }
                                None => 0.0,
                            };
                            if m * (dev - truth) > opts.violation_tol {
                                viols.push((m * (dev - truth), key));
                            }
                        }
                    }
                }
            }
        }
        if viols.is_empty() {
            break out;
        }
        if rounds >= opts.max_rounds {
            break LpOutcome { status: LpStatus::IterationLimit, ..out };
        }
        viols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        for &(_, key) in viols.iter().take(opts.rows_per_round) {
            added.insert(key);
            active.push(key);
        }
    };

    let mut mech = MultiMechanism::zero(minst);
    for i in 0..n {
        for q in 0..profiles.len() {
            let p = profiles[q];
            let k = coords[q][i];
            let t = minst.grid(i).point(k);
            let xv = outcome.primal[xid[i][q]].clamp(0.0, 1.0);
            let uv = scales[i][k] * outcome.primal[vid[i][q]];
            mech.x[i][p] = xv;
            mech.p[i][p] = t * xv - uv;
        }
    }
    Ok(MultiLpSolution {
        mechanism: mech,
        objective: outcome.objective,
        status: outcome.status,
        certificate: outcome.row_duals,
    })
}
