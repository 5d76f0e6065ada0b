use sigrev_core::duality::*;
use sigrev_core::gen::*;
use sigrev_core::lp::*;
use sigrev_core::model::*;
use sigrev_core::pricing::drev;
use sigrev_core::{lookahead_auction, MultiBidderInstance};

const EXPOST_NONNEG_BIC: ConstraintMode = ConstraintMode::expost_nonneg_bic();

fn er_quadrature(h: f64, n: usize) -> SignalPricingInstance {
    let d = erd_grid(h, n).unwrap();
    let cols = vec![d.support().map(|(i, m)| (i as u32, m)).collect()];
    SignalPricingInstance::from_columns(
        d.grid().clone(),
        vec!["s".into()],
        cols,
        Mode::Quadrature,
        1,
    )
    .unwrap()
}

#[test]
fn gh_fields_reject_mass_mode() {
    let inst = example2_instance(2).unwrap();
    assert!(gh_fields(&inst).is_err());
}

#[test]
fn canonical_lambda_matches_flow_rule() {
    // lambda density is 2/t for t' <= t and 0 otherwise; the table carries
    // the t'-cell width, so lambda(4, 2) = 0.5 * w and lambda(2, 4) = 0
    let grid = ValueGrid::from_points(vec![1.0, 2.0, 4.0]).unwrap();
    let inst = build_instance(
        grid,
        vec!["s".into()],
        &[0.5, 0.25, 0.25],
        Mode::Quadrature,
    )
    .unwrap();
    let w = DualWeights::canonical(&inst).unwrap();
    let nv = 3;
    let widths = inst.grid().widths();
    // (t=4, t'=2): indexes (2, 1)
    assert!((w.lambda[2 * nv + 1] - 0.5 * widths[1]).abs() < 1e-15);
    // (t=2, t'=4): 0
    assert_eq!(w.lambda[1 * nv + 2], 0.0);
    // diagonal exists with the paper's t' <= t convention
    assert!(w.lambda[2 * nv + 2] > 0.0);
}

#[test]
fn top_cell_g_is_minus_density() {
    let inst = random_regular_instance(8, 30, 3);
    let f = gh_fields(&inst).unwrap();
    let top = inst.n_values() - 1;
    for j in 0..inst.n_signals() {
        let density = inst.mass(top, j) / inst.grid().width(top);
        assert!((f.g_at(top, j) + density).abs() < 1e-12);
    }
}

#[test]
fn er_conditional_h_vanishes_in_the_interior() {
    let inst = er_quadrature(64.0, 12);
    let f = gh_fields(&inst).unwrap();
    for i in 0..inst.n_values() - 1 {
        assert!(
            f.h_at(i, 0).abs() < 1e-12,
            "interior h({i}) = {}",
            f.h_at(i, 0)
        );
    }
    assert!(f.h_at(inst.n_values() - 1, 0) > 0.0);
}

#[test]
fn point_mass_bound_is_twice_the_value() {
    let grid = ValueGrid::from_points(vec![5.0]).unwrap();
    let inst = build_instance(grid, vec!["s".into()], &[1.0], Mode::Quadrature).unwrap();
    let report = lagrangian_bound(&inst).unwrap();
    assert!((report.lag2_total - 10.0).abs() < 1e-12);
    // sanity: the bound dominates the LP value (= 5)
    let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
    assert!(report.lag2_total >= sol.objective - 1e-9);
}

#[test]
fn sandwich_on_regular_instances() {
    for seed in [1u64, 12, 33] {
        let inst = random_regular_instance(seed, 60, 3);
        let report = lagrangian_bound(&inst).unwrap();
        let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
        assert!(
            sol.objective <= report.lag2_total + 1e-6,
            "seed {seed}: LP {} vs lag2 {}",
            sol.objective,
            report.lag2_total
        );
        assert!(
            report.lag2_total <= 3.0 * report.drev_total * 1.05,
            "seed {seed}: factor {}",
            report.factor
        );
        let (_, within) = per_signal_bounds(&inst, 0.05).unwrap();
        assert!(within, "seed {seed}");
    }
}

#[test]
fn per_signal_slack_shrinks_under_refinement() {
    let mut prev = f64::INFINITY;
    for n in [50usize, 100, 200] {
        let mut worst: f64 = 0.0;
        for seed in [7u64, 19] {
            let inst = random_regular_instance(seed, n, 3);
            let report = lagrangian_bound(&inst).unwrap();
            for b in &report.per_signal {
                worst = worst.max(b.tg_ratio - 1.0).max(b.h_ratio - 1.0);
            }
        }
        assert!(worst < prev, "slack grew at n={n}: {worst} vs {prev}");
        prev = worst;
    }
}

#[test]
fn mixture_bound_scales_with_k() {
    for seed in [3u64, 14] {
        let (mix, _) = random_regular_mixture(seed, 80, 3, 2);
        let report = lagrangian_bound(&mix).unwrap();
        assert_eq!(report.mixture_k, 2);
        assert!(
            report.lag2_total <= 3.0 * 2.0 * report.drev_total * 1.05,
            "seed {seed}: factor {}",
            report.factor
        );
    }
}

#[test]
fn psi_contiguous_iff_regular() {
    for seed in 0..8u64 {
        let inst = random_regular_instance(seed, 40, 2);
        for j in 0..inst.n_signals() {
            let report = psi_diagnostic(&inst, j).unwrap();
            assert!(report.contiguous, "seed {seed} signal {j}");
        }
    }
}

#[test]
fn psi_point_mass_degenerate() {
    let grid = ValueGrid::from_points(vec![2.0, 4.0]).unwrap();
    let inst = build_instance(grid, vec!["s".into()], &[0.0, 1.0], Mode::Quadrature).unwrap();
    let report = psi_diagnostic(&inst, 0).unwrap();
    // below the atom psi = 2m/t' > 0, at the atom the tail is empty
    assert!(report.positive_indices == vec![0]);
    assert!(report.contiguous);
}

#[test]
fn crafted_bimodal_flags_noncontiguous_psi() {
    let pts: Vec<f64> = (1..=20).map(|k| k as f64).collect();
    let grid = ValueGrid::from_points(pts).unwrap();
    let mut weights = vec![1e-6; 20];
    weights[1] = 0.30;
    weights[2] = 0.35;
    weights[3] = 0.20;
    weights[15] = 0.05;
    weights[16] = 0.05;
    let total: f64 = weights.iter().sum();
    let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let inst = build_instance(grid, vec!["s".into()], &pmf, Mode::Quadrature).unwrap();
    let psi = psi_diagnostic(&inst, 0).unwrap();
    assert!(!psi.contiguous, "positive set {:?}", psi.positive_indices);
    // and the conditional is indeed irregular
    let audit = regularity_audit(&conditional(&inst, 0).unwrap());
    assert!(!audit.is_monotone);
}

#[test]
fn lagrangian_zero_weights_is_revenue() {
    let inst = random_regular_instance(21, 20, 3);
    let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
    let zero = DualWeights::zeros(&inst);
    let val = evaluate_lagrangian(&inst, &sol.mechanism, &zero).unwrap();
    assert!((val - sol.mechanism.revenue(&inst)).abs() < 1e-12);
}

#[test]
fn lagrangian_rejects_negative_weights() {
    let inst = random_regular_instance(21, 10, 2);
    let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
    let mut w = DualWeights::zeros(&inst);
    w.mu[0] = -0.5;
    assert!(matches!(
        evaluate_lagrangian(&inst, &sol.mechanism, &w),
        Err(DualityError::NegativeWeights(_))
    ));
}

#[test]
fn canonical_weights_chain_between_lp_and_lag2() {
    for seed in [2u64, 27, 40] {
        let inst = random_regular_instance(seed, 50, 3);
        let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
        let report = lagrangian_bound(&inst).unwrap();
        let canon = DualWeights::canonical(&inst).unwrap();
        let val = evaluate_lagrangian(&inst, &sol.mechanism, &canon).unwrap();
        assert!(val >= sol.objective - 1e-7, "seed {seed}: {val} < {}", sol.objective);
        assert!(
            val <= report.lag2_total + 1e-7,
            "seed {seed}: {val} > lag2 {}",
            report.lag2_total
        );
        // the density-ratio mu variant still dominates revenue
        let paper = DualWeights::canonical_paper(&inst).unwrap();
        let val2 = evaluate_lagrangian(&inst, &sol.mechanism, &paper).unwrap();
        assert!(val2 >= sol.objective - 1e-7);
    }
}

#[test]
fn one_bidder_fields_match_single_buyer() {
    let inst = er_quadrature(32.0, 10);
    let single = gh_fields(&inst).unwrap();
    let minst = MultiBidderInstance::new(
        vec![inst.grid().clone()],
        inst.column(0).iter().map(|&(_, m)| m).collect(),
        Mode::Quadrature,
    )
    .unwrap();
    let multi = multibidder_gh(&minst).unwrap();
    for i in 0..inst.n_values() {
        assert!((single.g_at(i, 0) - multi.g[0][i]).abs() < 1e-12);
        assert!((single.h_at(i, 0) - multi.h[0][i]).abs() < 1e-12);
    }
}

#[test]
fn claim_dual_bound_holds_pointwise() {
    for seed in 0..20u64 {
        let minst = random_regular_two_bidder(seed, 10, 9);
        let worst = claim_dual_bound_check(&minst).unwrap();
        assert!(worst <= 1e-9, "seed {seed}: violation {worst}");
    }
    // irregular joints satisfy the claim too: mix two tilted instances
    let a = random_regular_two_bidder(100, 8, 8);
    let b = random_regular_two_bidder(101, 8, 8);
    // reuse a's grids so the mixture is well-formed
    let mixed: Vec<f64> = a
        .pmf()
        .iter()
        .zip(b.pmf())
        .map(|(x, y)| 0.5 * x + 0.5 * y)
        .collect();
    let minst = MultiBidderInstance::new(a.grids().to_vec(), mixed, Mode::Quadrature).unwrap();
    assert!(claim_dual_bound_check(&minst).unwrap() <= 1e-9);
}

#[test]
fn uniform_two_bidder_hand_values() {
    let g = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let minst = MultiBidderInstance::new(
        vec![g.clone(), g],
        vec![0.25, 0.25, 0.25, 0.25],
        Mode::Quadrature,
    )
    .unwrap();
    let fields = multibidder_gh(&minst).unwrap();
    // at the top type the tail is empty: g_i = -f
    for p in [2usize, 3] {
        // profiles (2,*) have bidder 1 at its top
        let f = minst.mass(p) / minst.volume(p);
        assert!((fields.g[0][p] + f).abs() < 1e-12);
    }
    let la = lookahead_auction(&minst);
    let bound = lookahead_bound_terms(&minst, &la.mechanism).unwrap();
    assert!((bound.second_price_term - 2.5).abs() < 1e-12);
}

#[test]
fn single_bidder_bound_terms_degenerate() {
    let inst = er_quadrature(16.0, 8);
    let minst = MultiBidderInstance::new(
        vec![inst.grid().clone()],
        inst.column(0).iter().map(|&(_, m)| m).collect(),
        Mode::Quadrature,
    )
    .unwrap();
    let la = lookahead_auction(&minst);
    let bound = lookahead_bound_terms(&minst, &la.mechanism).unwrap();
    assert_eq!(bound.second_price_term, 0.0);
    // the winner bracket dominates the LP value and stays under the
    // two-bracket single-buyer bound
    let report = lagrangian_bound(&inst).unwrap();
    let sol = solve_single_buyer(&inst, EXPOST_NONNEG_BIC).unwrap();
    assert!(bound.total >= sol.objective - 1e-9);
    assert!(bound.winner_term_sup <= report.lag2_total + 1e-9);
}

#[test]
fn winner_term_bounded_by_lookahead_revenue() {
    for seed in [4u64, 9, 16] {
        let minst = random_regular_two_bidder(seed, 60, 60);
        let la = lookahead_auction(&minst);
        let bound = lookahead_bound_terms(&minst, &la.mechanism).unwrap();
        for i in 0..2 {
            assert!(
                bound.winner_term_sup_per_bidder[i]
                    <= 3.0 * la.per_bidder_revenue[i] * 1.05 + 1e-9,
                "seed {seed} bidder {i}: {} vs 3x{}",
                bound.winner_term_sup_per_bidder[i],
                la.per_bidder_revenue[i]
            );
        }
        assert!(bound.winner_term <= bound.winner_term_sup + 1e-12);
    }
}

#[test]
fn bic_lp_below_two_term_bound() {
    for seed in [6u64, 11] {
        let minst = random_regular_two_bidder(seed, 9, 9);
        let la = lookahead_auction(&minst);
        let bound = lookahead_bound_terms(&minst, &la.mechanism).unwrap();
        let bic = solve_multi_bidder(&minst, EXPOST_NONNEG_BIC).unwrap();
        assert!(
            bic.objective <= bound.total + 1e-6,
            "seed {seed}: {} vs {}",
            bic.objective,
            bound.total
        );
    }
}
