use sigrev_core::gen::random_regular_instance;
use sigrev_core::model::*;
use sigrev_core::pricing::*;

#[test]
fn point_mass_price_is_the_value() {
    let grid = ValueGrid::from_points(vec![5.0]).unwrap();
    let d = DiscreteDist::new(grid, vec![1.0]).unwrap();
    assert_eq!(optimal_posted_price(&d), (5.0, 5.0));
}

#[test]
fn er_ties_break_to_lowest_price() {
    let d = erd_grid(4.0, 3).unwrap();
    let (price, rev) = optimal_posted_price(&d);
    assert_eq!(price, 1.0);
    assert!((rev - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_two_point_tie() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let d = DiscreteDist::new(grid, vec![0.5, 0.5]).unwrap();
    // both prices give 1; lowest wins
    assert_eq!(optimal_posted_price(&d), (1.0, 1.0));
}

#[test]
fn support_prices_dominate_off_support() {
    // enumerating a fine sweep of off-support prices never beats the best
    // support price
    let inst = random_regular_instance(5, 20, 1);
    let d = conditional(&inst, 0).unwrap();
    let (_, best) = optimal_posted_price(&d);
    let lo = d.grid().point(0);
    let hi = d.grid().point(d.grid().len() - 1);
    for k in 0..400 {
        let price = lo + (hi - lo) * (k as f64) / 399.0 + 1e-6;
        let rev: f64 = d
            .support()
            .filter(|&(i, _)| d.grid().point(i) >= price)
            .map(|(_, m)| m * price)
            .sum();
        assert!(rev <= best + 1e-9);
    }
}

#[test]
fn drev_single_signal_equals_posted() {
    let d = erd_grid(8.0, 5).unwrap();
    let inst = build_instance(d.grid().clone(), vec!["s".into()], d.pmf(), Mode::Mass).unwrap();
    let report = drev(&inst).unwrap();
    let (_, rev) = optimal_posted_price(&d);
    assert!((report.total - rev).abs() < 1e-12);
}

#[test]
fn drev_fully_informative_extracts_surplus() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let inst = build_instance(
        grid,
        vec!["lo".into(), "hi".into()],
        &[0.5, 0.0, 0.0, 0.5],
        Mode::Mass,
    )
    .unwrap();
    let report = drev(&inst).unwrap();
    assert!((report.total - 1.5).abs() < 1e-12);
}

#[test]
fn drev_example1_close_to_one() {
    let h = 1e6;
    let eps = 1e-4;
    let inst = example1_instance(h, eps, 300).unwrap();
    let report = drev(&inst).unwrap();
    assert!(report.total <= 1.0 + eps * h.ln() + 0.05);
    assert!(report.total >= 1.0 - 1e-9);
}

#[test]
fn drev_dominates_global_posted_price() {
    for seed in 0..10u64 {
        let inst = random_regular_instance(seed, 30, 4);
        let report = drev(&inst).unwrap();
        for &price in inst.grid().points() {
            assert!(global_posted_price_revenue(&inst, price) <= report.total + 1e-12);
        }
    }
}

#[test]
fn drev_invariant_under_relabel_and_split() {
    let inst = random_regular_instance(9, 25, 3);
    let base = drev(&inst).unwrap().total;

    // relabeling: permute signal columns
    let ns = inst.n_signals();
    let dense = inst.to_dense_pmf();
    let perm = [2usize, 0, 1];
    let mut permuted = vec![0.0; dense.len()];
    for i in 0..inst.n_values() {
        for j in 0..ns {
            permuted[i * ns + perm[j]] = dense[i * ns + j];
        }
    }
    let relabeled = build_instance(
        inst.grid().clone(),
        vec!["x".into(), "y".into(), "z".into()],
        &permuted,
        Mode::Mass,
    )
    .unwrap();
    assert!((drev(&relabeled).unwrap().total - base).abs() < 1e-12);

    // splitting signal 0 into two proportional halves
    let mut split = vec![0.0; inst.n_values() * (ns + 1)];
    for i in 0..inst.n_values() {
        for j in 0..ns {
            let m = dense[i * ns + j];
            if j == 0 {
                split[i * (ns + 1)] = 0.3 * m;
                split[i * (ns + 1) + 1] = 0.7 * m;
            } else {
                split[i * (ns + 1) + j + 1] = m;
            }
        }
    }
    let split_inst = build_instance(
        inst.grid().clone(),
        vec!["a0".into(), "a1".into(), "b".into(), "c".into()],
        &split,
        Mode::Mass,
    )
    .unwrap();
    assert!((drev(&split_inst).unwrap().total - base).abs() < 1e-12);
}

#[test]
fn regular_optimal_price_at_first_nonnegative_virtual() {
    for seed in 20..30u64 {
        let inst = random_regular_instance(seed, 40, 2);
        for j in 0..inst.n_signals() {
            let cond = conditional(&inst, j).unwrap();
            let report = regularity_audit(&cond);
            assert!(report.is_monotone);
            let crossing = report
                .virtuals
                .iter()
                .find(|&&(_, phi)| phi >= 0.0)
                .map(|&(i, _)| cond.grid().point(i))
                .unwrap();
            let (price, _) = optimal_posted_price(&cond);
            assert!(
                (price - crossing).abs() < 1e-12,
                "seed {seed} signal {j}: price {price} vs crossing {crossing}"
            );
        }
    }
}
