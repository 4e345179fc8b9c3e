//! End-to-end flow accounting: extensions produced by the parametrized
//! ansatz feed the merging scenario machinery, and every route prices the
//! same conserved net flow.

use cemi::conditioning::{cemi_objective, Party};
use cemi::layout::SubsystemLayout;
use cemi::merging::{
    multiparty_route_cost, net_flow, redistribution_cost, route_cost, scenario_from_extension,
    MergeScenario, RoutePlan,
};
use cemi::optimize::{extension_from_params, AnsatzDims, AnsatzParams, Cut};
use cemi::random::{random_density, random_pure, rng_for, split_seed};

#[test]
fn ansatz_extensions_route_their_own_objective() {
    // Build genuine optimizer-shaped extensions and verify the transfer
    // accounting reproduces the conditional-correlation objective exactly.
    use rand::Rng;
    use rand_distr::StandardNormal;
    let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
    let cut = Cut::new(vec!["A".into()], vec!["B".into()]);
    let dims = AnsatzDims::new(2, 2, 2).unwrap();
    let n = dims.generator_dim() * dims.generator_dim();
    for seed in 0..4u64 {
        let rho = random_density(&layout, 2, split_seed(seed, 0)).unwrap();
        let mut rng = rng_for(split_seed(seed, 1));
        let theta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let params = AnsatzParams::new(theta, dims.generator_dim()).unwrap();
        let ext = extension_from_params(&rho, &cut, dims, &params).unwrap();

        let objective = cemi_objective(&ext).unwrap();
        assert!((net_flow(&ext).unwrap() - objective).abs() < 1e-12);

        let scn = scenario_from_extension(&ext).unwrap();
        let (_, direct) = route_cost(&scn, &RoutePlan::direct(&scn, &[0, 1]).unwrap()).unwrap();
        let (_, escorted) = route_cost(&scn, &RoutePlan::escorted(&scn).unwrap()).unwrap();
        assert!(
            (direct - objective).abs() < 1e-9,
            "direct {direct} vs {objective}"
        );
        assert!(
            (escorted - objective).abs() < 1e-9,
            "escorted {escorted} vs {objective}"
        );
    }
}

#[test]
fn redistribution_cost_is_monogamous_on_ghz() {
    // On |000⟩+|111⟩ the middle system is worth half an ebit to either side.
    let layout = SubsystemLayout::new(vec![("R", 2), ("Y", 2), ("Z", 2)]).unwrap();
    let mut v = cemi::linalg::CVec::zeros(8);
    let amp = 1.0 / 2.0f64.sqrt();
    v[0] = cemi::linalg::C64::new(amp, 0.0);
    v[7] = cemi::linalg::C64::new(amp, 0.0);
    let ghz = cemi::state::PureStateVector::new(layout, v).unwrap();
    let q = redistribution_cost(&ghz, &["R".into()], &[], &["Y".into()], &["Z".into()]).unwrap();
    assert!((q - 0.5).abs() < 1e-12, "{q}");
}

#[test]
fn three_party_totals_are_order_independent_and_match_objective() {
    let layout = SubsystemLayout::new(vec![
        ("A", 2),
        ("Pa", 2),
        ("B", 2),
        ("Pb", 2),
        ("C", 2),
        ("Pc", 2),
        ("E", 2),
    ])
    .unwrap();
    let phi = random_pure(&layout, 77).unwrap();
    let scn = MergeScenario::new(
        phi,
        vec![
            Party::new(vec!["A".into()], vec!["Pa".into()]),
            Party::new(vec!["B".into()], vec!["Pb".into()]),
            Party::new(vec!["C".into()], vec!["Pc".into()]),
        ],
        vec!["E".into()],
    )
    .unwrap();
    let mut totals = Vec::new();
    for order in [
        [0usize, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ] {
        let (steps, total) = multiparty_route_cost(&scn, &order).unwrap();
        assert_eq!(steps.len(), 3);
        totals.push(total);
    }
    let spread = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - totals.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-9, "totals spread {spread}: {totals:?}");
}

#[test]
fn escorted_middle_step_is_free_for_two_parties() {
    // Once one party has sent everything, the global state determines the
    // other party's systems relative to the center: the second merge costs
    // nothing, and the returning distribution refunds half the prime
    // correlations.
    let layout =
        SubsystemLayout::new(vec![("A", 2), ("Ap", 2), ("B", 2), ("Bp", 2), ("E", 2)]).unwrap();
    let phi = random_pure(&layout, 55).unwrap();
    let scn = MergeScenario::new(
        phi,
        vec![
            Party::new(vec!["A".into()], vec!["Ap".into()]),
            Party::new(vec!["B".into()], vec!["Bp".into()]),
        ],
        vec!["E".into()],
    )
    .unwrap();
    let (steps, _) = route_cost(&scn, &RoutePlan::escorted(&scn).unwrap()).unwrap();
    assert_eq!(steps.len(), 3);
    assert!(
        steps[1].cost.abs() < 1e-9,
        "middle step {:.3e}",
        steps[1].cost
    );
    assert!(
        steps[2].cost <= 1e-12,
        "return step should not cost: {}",
        steps[2].cost
    );
}
