//! Single-buyer private-signal LP.

use super::backend::{LpBuilder, LpOutcome};
use super::{ConstraintMode, IcMode, IrMode, LpError, LpSolution, LpStatus, PaymentMode, SolveOptions};
use crate::mechanism::Mechanism;
use crate::model::SignalPricingInstance;

struct Cells {
    /// (value index, signal index, mass) per variable cell.
    list: Vec<(usize, usize, f64)>,
    /// per value: sorted (signal index, cell id).
    by_value: Vec<Vec<(usize, usize)>>,
    /// value indices with positive marginal.
    tpos: Vec<usize>,
}

fn collect_cells(inst: &SignalPricingInstance) -> Cells {
    let nv = inst.n_values();
    let mut list = Vec::new();
    let mut by_value: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for i in 0..nv {
        for &(j, m) in inst.row(i) {
            let id = list.len();
            list.push((i, j as usize, m));
            by_value[i].push((j as usize, id));
        }
    }
    let tpos = (0..nv).filter(|&i| !by_value[i].is_empty()).collect();
    Cells { list, by_value, tpos }
}

fn cell_at(cells: &Cells, value: usize, signal: usize) -> Option<usize> {
    cells.by_value[value]
        .binary_search_by_key(&signal, |&(j, _)| j)
        .ok()
        .map(|k| cells.by_value[value][k].1)
}

/// Maximizes expected payment subject to the IC, IR and payment-sign rows
/// selected by `mode`. IC rows beyond `lazy_row_threshold` are generated
/// lazily from violated deviations.
pub fn solve_single_buyer(
    inst: &SignalPricingInstance,
    mode: ConstraintMode,
) -> Result<LpSolution, LpError> {
    solve_single_buyer_opts(inst, mode, &SolveOptions::default())
}

pub fn solve_single_buyer_opts(
    inst: &SignalPricingInstance,
    mode: ConstraintMode,
    opts: &SolveOptions,
) -> Result<LpSolution, LpError> {
    let cells = collect_cells(inst);
    if cells.list.len() > opts.cell_cap {
        return Err(LpError::SizeCapExceeded { cells: cells.list.len(), cap: opts.cell_cap });
    }
    let pts = inst.grid().points();
    let scale: Vec<f64> = pts.iter().map(|&t| t.max(1.0)).collect();

    // variables: x_c in [0,1]; v_c = utility / scale, nonnegative under
    // ex post IR and free under interim IR
    let n_cells = cells.list.len();
    let mut base = LpBuilder::new();
    let mut xid = Vec::with_capacity(n_cells);
    let mut vid = Vec::with_capacity(n_cells);
    for &(i, _, m) in &cells.list {
        let t = pts[i];
        xid.push(base.add_var(m * t, 0.0, 1.0));
        let v_lower = match mode.ir {
            IrMode::ExPost => 0.0,
            IrMode::Interim => f64::NEG_INFINITY,
        };
        vid.push(base.add_var(-m * scale[i], v_lower, f64::INFINITY));
    }
    if mode.payments == PaymentMode::NonNegative {
        for (c, &(i, _, _)) in cells.list.iter().enumerate() {
            base.add_ge(vec![(xid[c], pts[i]), (vid[c], -scale[i])], 0.0);
        }
    }
    if mode.ir == IrMode::Interim {
        for &i in &cells.tpos {
            let row: Vec<_> = cells.by_value[i]
                .iter()
                .map(|&(_, c)| (vid[c], cells.list[c].2 * scale[i]))
                .collect();
            base.add_ge(row, 0.0);
        }
    }

    // mass-form IC row for truthful type i against report i2
    let bic_row = |i: usize, i2: usize| -> Vec<(usize, f64)> {
        let mut row = Vec::with_capacity(3 * cells.by_value[i].len());
        for &(j, c) in &cells.by_value[i] {
            let m = cells.list[c].2;
            row.push((vid[c], m * scale[i]));
            if let Some(c2) = cell_at(&cells, i2, j) {
                row.push((xid[c2], -m * (pts[i] - pts[i2])));
                row.push((vid[c2], -m * scale[i2]));
            }
        }
        row
    };
    let dsic_row = |c: usize, i2: usize| -> Vec<(usize, f64)> {
        let (i, j, _) = cells.list[c];
        let mut row = vec![(vid[c], scale[i])];
        if let Some(c2) = cell_at(&cells, i2, j) {
            row.push((xid[c2], -(pts[i] - pts[i2])));
            row.push((vid[c2], -scale[i2]));
        }
        row
    };

    // under interim IR a report outside the marginal support yields zero in
    // every signal, so per-signal IC against it pins each cell utility at 0
    if mode.ic == IcMode::DominantStrategy
        && mode.ir == IrMode::Interim
        && cells.tpos.len() < inst.n_values()
    {
        for c in 0..n_cells {
            let (i, _, _) = cells.list[c];
            base.add_ge(vec![(vid[c], scale[i])], 0.0);
        }
    }

    enum RowId {
        Bic(usize, usize),
        Dsic(usize, usize),
    }
    let materialize = |id: &RowId| match *id {
        RowId::Bic(i, i2) => bic_row(i, i2),
        RowId::Dsic(c, i2) => dsic_row(c, i2),
    };

    let full_count = match mode.ic {
        IcMode::Bayesian => cells.tpos.len().saturating_mul(cells.tpos.len().saturating_sub(1)),
        IcMode::DominantStrategy => n_cells.saturating_mul(cells.tpos.len().saturating_sub(1)),
    };

    let mut active: Vec<RowId> = Vec::new();
    let mut added = std::collections::HashSet::new();
    if full_count <= opts.lazy_row_threshold {
        match mode.ic {
            IcMode::Bayesian => {
                for &i in &cells.tpos {
                    for &i2 in &cells.tpos {
                        if i != i2 {
                            active.push(RowId::Bic(i, i2));
                        }
                    }
                }
            }
            IcMode::DominantStrategy => {
                for c in 0..n_cells {
                    for &i2 in &cells.tpos {
                        if i2 != cells.list[c].0 {
                            active.push(RowId::Dsic(c, i2));
                        }
                    }
                }
            }
        }
    } else {
        // seed with doubling offsets along the positive-marginal list
        let tp = &cells.tpos;
        let mut seed_pairs: Vec<(usize, usize)> = Vec::new();
        for (r, &i) in tp.iter().enumerate() {
            let mut off = 1usize;
            while off < tp.len() {
                if r + off < tp.len() {
                    seed_pairs.push((i, tp[r + off]));
                }
                if r >= off {
                    seed_pairs.push((i, tp[r - off]));
                }
                off *= 2;
            }
        }
        for (i, i2) in seed_pairs {
            match mode.ic {
                IcMode::Bayesian => {
                    if added.insert((i, i2)) {
                        active.push(RowId::Bic(i, i2));
                    }
                }
                IcMode::DominantStrategy => {
                    for &(_, c) in &cells.by_value[i] {
                        if added.insert((c, i2)) {
                            active.push(RowId::Dsic(c, i2));
                        }
                    }
                }
            }
        }
    }

    let lazy = full_count > opts.lazy_row_threshold;
    let mut rounds = 0;
    let outcome: LpOutcome = loop {
        rounds += 1;
        let mut lp = base.clone();
        for id in &active {
            lp.add_ge(materialize(id), 0.0);
        }
        let out = lp.solve()?;
        if out.status != LpStatus::Optimal || !lazy {
            break out;
        }
        // violation scan in mass units
        let x = |c: usize| out.primal[xid[c]];
        let mut viols: Vec<(f64, usize, usize)> = Vec::new();
        match mode.ic {
            IcMode::Bayesian => {
                let mut truthful = vec![0.0; inst.n_values()];
                for &i in &cells.tpos {
                    for &(_, c) in &cells.by_value[i] {
                        truthful[i] += cells.list[c].2 * scale[i] * out.primal[vid[c]];
                    }
                }
                for &i in &cells.tpos {
                    for &i2 in &cells.tpos {
                        if i == i2 || added.contains(&(i, i2)) {
                            continue;
                        }
                        let mut dev = 0.0;
                        for &(j, c) in &cells.by_value[i] {
                            let m = cells.list[c].2;
                            if let Some(c2) = cell_at(&cells, i2, j) {
                                dev += m
                                    * ((pts[i] - pts[i2]) * x(c2)
                                        + scale[i2] * out.primal[vid[c2]]);
                            }
                        }
                        if dev > truthful[i] + opts.violation_tol {
                            viols.push((dev - truthful[i], i, i2));
                        }
                    }
                }
            }
            IcMode::DominantStrategy => {
                for c in 0..n_cells {
                    let (i, j, m) = cells.list[c];
                    let truth = scale[i] * out.primal[vid[c]];
                    for &i2 in &cells.tpos {
                        if i2 == i || added.contains(&(c, i2)) {
                            continue;
                        }
                        let dev = match cell_at(&cells, i2, j) {
                            Some(c2) => {
                                (pts[i] - pts[i2]) * x(c2) + scale[i2] * out.primal[vid[c2]]
                            }
                            None => 0.0,
                        };
                        if m * (dev - truth) > opts.violation_tol {
                            viols.push((m * (dev - truth), c, i2));
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
        for &(_, a, b) in viols.iter().take(opts.rows_per_round) {
            added.insert((a, b));
            active.push(match mode.ic {
                IcMode::Bayesian => RowId::Bic(a, b),
                IcMode::DominantStrategy => RowId::Dsic(a, b),
            });
        }
    };

    let ns = inst.n_signals();
    let mut xm = vec![0.0; inst.n_values() * ns];
    let mut pm = vec![0.0; inst.n_values() * ns];
    for (c, &(i, j, _)) in cells.list.iter().enumerate() {
        let xv = outcome.primal[xid[c]].clamp(0.0, 1.0);
        let uv = scale[i] * outcome.primal[vid[c]];
        xm[i * ns + j] = xv;
        pm[i * ns + j] = pts[i] * xv - uv;
    }
    let mechanism = Mechanism::new(inst, xm, pm)?;
    Ok(LpSolution {
        mechanism,
        objective: outcome.objective,
        status: outcome.status,
        certificate: outcome.row_duals,
    })
}
