//! Property tests over randomly drawn agent sets, weights, and trees.

use proptest::prelude::*;
use saddlefields_core::field::{InternalSpec, LeafSpec};
use saddlefields_core::*;

fn utility_strategy() -> impl Strategy<Value = UtilitySpec> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|rate| UtilitySpec::exponential(rate).unwrap()),
        (
            proptest::collection::vec(0.2f64..2.0, 1..4),
            proptest::collection::vec(0.5f64..2.0, 1..4)
        )
            .prop_map(|(mut weights, mut rates)| {
                let n = weights.len().min(rates.len());
                weights.truncate(n);
                rates.truncate(n);
                UtilitySpec::mixture(weights, rates).unwrap()
            }),
    ]
}

fn agents_strategy() -> impl Strategy<Value = AgentSet> {
    proptest::collection::vec(utility_strategy(), 1..5)
        .prop_map(|specs| AgentSet::new(specs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_is_feasible_and_equalizes_marginals(
        agents in agents_strategy(),
        weights in proptest::collection::vec(0.1f64..10.0, 4),
        x in -5.0f64..5.0,
    ) {
        let v = WeightVector::new(weights[0..agents.len()].to_vec()).unwrap();
        let alloc = solve_allocation(&agents, &v, x).unwrap();
        let total: f64 = alloc.x_hat.iter().sum();
        prop_assert!((total - x).abs() <= 1e-10 * x.abs().max(1.0));
        let c = agents.c_global();
        for m in 0..agents.len() {
            let marginal = v.components()[m] * agents.agent(m).eval(alloc.x_hat[m], 1).unwrap();
            prop_assert!((marginal - alloc.lambda).abs() <= 1e-9 * alloc.lambda);
            prop_assert!(alloc.tolerances[m] >= 1.0 / c - 1e-12);
            prop_assert!(alloc.tolerances[m] <= c + 1e-12);
        }
    }

    #[test]
    fn aggregate_is_negative_monotone_homogeneous(
        agents in agents_strategy(),
        weights in proptest::collection::vec(0.1f64..10.0, 4),
        x in -5.0f64..5.0,
        z in 0.1f64..10.0,
    ) {
        let v = WeightVector::new(weights[0..agents.len()].to_vec()).unwrap();
        let g = r_and_gradient(&agents, &v, x).unwrap();
        prop_assert!(g.value < 0.0);
        prop_assert!(g.grad_x > 0.0);
        prop_assert!(g.grad_v.iter().all(|u| *u < 0.0));
        let scaled = r_and_gradient(&agents, &v.scaled(z).unwrap(), x).unwrap();
        prop_assert!((scaled.value - z * g.value).abs() <= 1e-10 * g.value.abs() * z.max(1.0));
    }

    #[test]
    fn conjugate_maps_invert_each_other(
        agents in agents_strategy(),
        weights in proptest::collection::vec(0.1f64..10.0, 4),
        x in -5.0f64..5.0,
    ) {
        let f = AggregateEvaluator::new(&agents);
        let a = PrimalPoint::new(weights[0..agents.len()].to_vec(), x, vec![]).unwrap();
        let pair = conjugate_point_from_primal(&f, &a).unwrap();
        let back = conjugate_point_from_dual(&f, &pair.dual, None).unwrap();
        for m in 0..agents.len() {
            prop_assert!((back.primal.v()[m] - a.v()[m]).abs() <= 1e-8 * a.v()[m].max(1.0));
        }
        prop_assert!((back.primal.x() - x).abs() <= 1e-8 * x.abs().max(1.0));
    }

    #[test]
    fn field_value_respects_tower_property(
        agents in agents_strategy(),
        weights in proptest::collection::vec(0.1f64..10.0, 4),
        x in -3.0f64..3.0,
        raw_p in proptest::collection::vec(0.05f64..1.0, 3),
        sigmas in proptest::collection::vec(-0.5f64..0.5, 3),
        psis in proptest::collection::vec(-1.0f64..1.0, 3),
    ) {
        let total: f64 = raw_p.iter().sum();
        let p: Vec<f64> = raw_p.iter().map(|w| w / total).collect();
        let tree = ScenarioTree::from_spec(&TreeSpec::Internal(InternalSpec {
            p,
            children: (0..3)
                .map(|i| TreeSpec::Leaf(LeafSpec { sigma0: sigmas[i], psi: vec![psis[i]] }))
                .collect(),
        }))
        .unwrap();
        let a = PrimalPoint::new(weights[0..agents.len()].to_vec(), x, vec![0.3]).unwrap();
        let root = field_at(&tree, &agents, &a, NodeRef::root()).unwrap();
        let mut avg = 0.0;
        for (prob, child) in tree.children(NodeRef::root()) {
            avg += prob * field_at(&tree, &agents, &a, child).unwrap().value;
        }
        prop_assert!((root.value - avg).abs() <= 1e-10 * root.value.abs());
        prop_assert!(root.value < 0.0);
    }
}
