use proptest::prelude::*;
use sigrev_core::model::*;

fn erd124() -> DiscreteDist {
    erd_grid(4.0, 3).unwrap()
}

#[test]
fn point_mass_instance_builds() {
    let grid = ValueGrid::from_points(vec![1.0]).unwrap();
    let inst = build_instance(grid, vec!["s".into()], &[1.0], Mode::Mass).unwrap();
    assert_eq!(inst.support_cell_count(), 1);
    assert_eq!(inst.signal_marginal(), &[1.0]);
}

#[test]
fn sum_not_one_rejected() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let err = build_instance(grid, vec!["s".into()], &[0.6, 0.5], Mode::Mass).unwrap_err();
    assert!(matches!(err, ModelError::SumNotOne { .. }));
}

#[test]
fn negative_mass_rejected() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let err = build_instance(grid, vec!["s".into()], &[1.2, -0.2], Mode::Mass).unwrap_err();
    assert!(matches!(err, ModelError::NegativeMass { .. }));
}

#[test]
fn symmetric_two_by_two_conditionals_are_uniform() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let inst = build_instance(
        grid,
        vec!["a".into(), "b".into()],
        &[0.25, 0.25, 0.25, 0.25],
        Mode::Mass,
    )
    .unwrap();
    let cond = conditional(&inst, 0).unwrap();
    assert_eq!(cond.pmf(), &[0.5, 0.5]);
}

#[test]
fn erd_masses_match_cdf_differences() {
    // H=2 on {1,2}: interior F(2)-F(1) = 1/2, atom 1/2
    let d = erd_grid(2.0, 2).unwrap();
    assert_eq!(d.pmf(), &[0.5, 0.5]);
    // H=4 on {1,2,4}
    let d = erd124();
    assert_eq!(d.grid().points(), &[1.0, 2.0, 4.0]);
    assert!((d.pmf()[0] - 0.5).abs() < 1e-15);
    assert!((d.pmf()[1] - 0.25).abs() < 1e-15);
    assert!((d.pmf()[2] - 0.25).abs() < 1e-15);
}

#[test]
fn erd_top_atom_at_least_one_over_h() {
    for &(h, n) in &[(2.0, 2usize), (10.0, 7), (1e6, 300), (37.5, 13)] {
        let d = erd_grid(h, n).unwrap();
        assert!(d.pmf().last().unwrap() >= &(1.0 / h - 1e-15), "h={h}");
    }
}

#[test]
fn erd_rejects_h_at_most_one() {
    assert!(matches!(erd_grid(1.0, 4), Err(ModelError::InvalidH(_))));
    assert!(matches!(erd_grid(0.5, 4), Err(ModelError::InvalidH(_))));
}

#[test]
fn erd_every_grid_price_earns_one() {
    let d = erd_grid(1e6, 300).unwrap();
    for (i, _) in d.support() {
        let rev = tail_revenue(&d, i);
        if d.grid().point(i) < 1e6 {
            assert!((rev - 1.0).abs() <= 1e-9, "price {} rev {rev}", d.grid().point(i));
        }
    }
}

#[test]
fn example1_masses_split_by_eps() {
    let inst = example1_instance(4.0, 0.5, 3).unwrap();
    // mass(2,2): informative cell of value 2 (index 1), signal "2" (index 2)
    assert!((inst.mass(1, 2) - 0.125).abs() < 1e-15);
    assert!((inst.mass(1, 0) - 0.125).abs() < 1e-15);
    // conditional on the uninformative signal is the ER marginal
    let cond = conditional(&inst, 0).unwrap();
    assert!((cond.pmf()[0] - 0.5).abs() < 1e-12);
    assert!((cond.pmf()[1] - 0.25).abs() < 1e-12);
    assert!((cond.pmf()[2] - 0.25).abs() < 1e-12);
    // conditional on an informative signal is a point mass
    let cond2 = conditional(&inst, 2).unwrap();
    assert_eq!(cond2.pmf(), &[0.0, 1.0, 0.0]);
}

#[test]
fn example1_rejects_degenerate_eps() {
    assert!(example1_instance(10.0, 0.0, 4).is_err());
    assert!(example1_instance(10.0, 1.0, 4).is_err());
}

#[test]
fn example2_supports_interleave() {
    let inst = example2_instance(2).unwrap();
    assert_eq!(inst.grid().points(), &[3.0, 4.0, 6.0, 7.0]);
    // signal (0,0) -> support {3,6}; labels are little-endian bit strings
    let s00 = inst.signal_index("00").unwrap();
    let sup: Vec<usize> = inst.column(s00).iter().map(|&(i, _)| i as usize).collect();
    assert_eq!(sup, vec![0, 2]);
    let s10 = inst.signal_index("10").unwrap();
    let sup: Vec<usize> = inst.column(s10).iter().map(|&(i, _)| i as usize).collect();
    assert_eq!(sup, vec![1, 2], "support {{4,6}}");
    // conditional masses on {3,6}: raw {1/3-1/6, 1/6} normalize to {1/2,1/2}
    let cond = conditional(&inst, s00).unwrap();
    assert!((cond.pmf()[0] - 0.5).abs() < 1e-12);
    assert!((cond.pmf()[2] - 0.5).abs() < 1e-12);
}

#[test]
fn example2_level_cap() {
    assert!(matches!(example2_instance(17), Err(ModelError::TooManyLevels(17))));
    assert!(example2_instance(1).is_err());
}

#[test]
fn single_signal_conditional_is_marginal() {
    let d = erd124();
    let inst = build_instance(
        d.grid().clone(),
        vec!["only".into()],
        d.pmf(),
        Mode::Mass,
    )
    .unwrap();
    let cond = conditional(&inst, 0).unwrap();
    assert_eq!(cond.pmf(), d.pmf());
}

#[test]
fn zero_mass_signal_errors() {
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let inst = build_instance(
        grid,
        vec!["a".into(), "dead".into()],
        &[0.5, 0.0, 0.5, 0.0],
        Mode::Mass,
    )
    .unwrap();
    assert!(matches!(conditional(&inst, 1), Err(ModelError::ZeroMassSignal(1))));
}

// Independent oracle for virtual values: the discrete revenue identity
// sum_{t_i >= r} pmf_i phi_i = r * Pr[v >= r] determines phi from tail
// revenues; solving it gives phi_i = (R(t_i) - R(t_next)) / pmf_i.
fn phi_oracle(d: &DiscreteDist) -> Vec<(usize, f64)> {
    let sup: Vec<(usize, f64)> = d.support().collect();
    let mut out = Vec::new();
    for (k, &(i, m)) in sup.iter().enumerate() {
        let r_here = tail_revenue(d, i);
        let r_next = if k + 1 < sup.len() { tail_revenue(d, sup[k + 1].0) } else { 0.0 };
        out.push((i, (r_here - r_next) / m));
    }
    out
}

#[test]
fn virtuals_match_identity_oracle_on_examples() {
    // point mass
    let grid = ValueGrid::from_points(vec![5.0]).unwrap();
    let d = DiscreteDist::new(grid, vec![1.0]).unwrap();
    assert_eq!(virtual_values(&d), vec![(0, 5.0)]);

    // ER {1,2,4}: phi = (0, 0, 4)
    let phis = virtual_values(&erd124());
    assert!((phis[0].1 - 0.0).abs() < 1e-12);
    assert!((phis[1].1 - 0.0).abs() < 1e-12);
    assert!((phis[2].1 - 4.0).abs() < 1e-12);

    // uniform {1,2}: phi = (0, 2)
    let grid = ValueGrid::from_points(vec![1.0, 2.0]).unwrap();
    let d = DiscreteDist::new(grid, vec![0.5, 0.5]).unwrap();
    let phis = virtual_values(&d);
    assert!((phis[0].1 - 0.0).abs() < 1e-12);
    assert!((phis[1].1 - 2.0).abs() < 1e-12);

    // masses {.1, .8, .1} on {1,2,3}: phi = (-8, 1.875, 3), monotone; the
    // identity oracle pins the middle value
    let grid = ValueGrid::from_points(vec![1.0, 2.0, 3.0]).unwrap();
    let d = DiscreteDist::new(grid, vec![0.1, 0.8, 0.1]).unwrap();
    let phis = virtual_values(&d);
    let oracle = phi_oracle(&d);
    for (a, b) in phis.iter().zip(&oracle) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-12);
    }
    assert!((phis[0].1 + 8.0).abs() < 1e-12);
    assert!((phis[1].1 - 1.875).abs() < 1e-12);
    assert!((phis[2].1 - 3.0).abs() < 1e-12);
    assert!(regularity_audit(&d).is_monotone);
}

#[test]
fn regularity_er_monotone_and_example2_noncontiguous() {
    assert!(regularity_audit(&erd124()).is_monotone);
    let inst = example2_instance(3).unwrap();
    let reports = joint_regularity_audit(&inst).unwrap();
    assert!(reports.iter().all(|(_, r)| !r.support_contiguous));
}

#[test]
fn mixture_identity_and_average() {
    let a = sigrev_core::gen::random_regular_instance(7, 40, 3);
    let id = mixture_instance(&[&a], &[1.0]).unwrap();
    assert_eq!(id.to_dense_pmf(), a.to_dense_pmf());
    assert_eq!(id.mixture_k(), 1);

    let same = mixture_instance(&[&a, &a], &[0.5, 0.5]).unwrap();
    let (p, q) = (same.to_dense_pmf(), a.to_dense_pmf());
    for (x, y) in p.iter().zip(&q) {
        assert!((x - y).abs() < 1e-15);
    }
    assert_eq!(same.mixture_k(), 2);

    let (mix, comps) = sigrev_core::gen::random_regular_mixture(11, 40, 3, 2);
    assert_eq!(mix.mixture_k(), 2);
    assert_eq!(comps.len(), 2);
}

#[test]
fn mixture_rejects_mismatched_shapes() {
    let a = sigrev_core::gen::random_regular_instance(1, 20, 2);
    let b = sigrev_core::gen::random_regular_instance(2, 20, 2); // different grid
    assert!(mixture_instance(&[&a, &b], &[0.5, 0.5]).is_err());
}

#[test]
fn conditional_rebuild_round_trips() {
    let inst = sigrev_core::gen::random_regular_instance(3, 25, 4);
    let fs = marginal_signal(&inst);
    let ns = inst.n_signals();
    let mut rebuilt = vec![0.0; inst.n_values() * ns];
    for j in 0..ns {
        let cond = conditional(&inst, j).unwrap();
        for (i, m) in cond.support() {
            rebuilt[i * ns + j] = m * fs[j];
        }
    }
    let orig = inst.to_dense_pmf();
    for (a, b) in rebuilt.iter().zip(&orig) {
        assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // discrete Myerson identity, enumerated at every support threshold
    #[test]
    fn myerson_identity_exact(weights in prop::collection::vec(0.0f64..1.0, 2..24), seedgap in 1u64..5) {
        prop_assume!(weights.iter().sum::<f64>() > 0.1);
        let n = weights.len();
        let pts: Vec<f64> = (0..n).map(|i| 0.5 + (i as f64) * 0.5 * seedgap as f64).collect();
        let grid = ValueGrid::from_points(pts).unwrap();
        let d = DiscreteDist::from_weights(grid, weights).unwrap();
        let phis = virtual_values(&d);
        for &(r, _) in &phis {
            let lhs: f64 = phis
                .iter()
                .filter(|&&(i, _)| i >= r)
                .map(|&(i, phi)| d.mass(i) * phi)
                .sum();
            let rhs = tail_revenue(&d, r);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn generated_instances_mass_one(seed in 0u64..500) {
        let inst = sigrev_core::gen::random_regular_instance(seed, 30, 4);
        let total: f64 = inst.to_dense_pmf().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(jointly_regular(&inst).unwrap());
    }

    #[test]
    fn instance_json_round_trip(seed in 0u64..100) {
        let inst = sigrev_core::gen::random_regular_instance(seed, 12, 3);
        let file = sigrev_core::io::InstanceFile::from_instance(&inst);
        let text = serde_json::to_string(&file).unwrap();
        let back: sigrev_core::io::InstanceFile = serde_json::from_str(&text).unwrap();
        let inst2 = back.into_instance().unwrap();
        prop_assert_eq!(inst.to_dense_pmf(), inst2.to_dense_pmf());
        prop_assert_eq!(inst.grid().points(), inst2.grid().points());
    }
}
