#![allow(clippy::needless_range_loop)]

//! Acceptance suite. One test per criterion; each prints a PASS/FAIL line
//! (visible with --nocapture) and asserts at the stated tolerance.

use saddlefields_core::*;

// ---------------------------------------------------------------------
// support
// ---------------------------------------------------------------------

/// SplitMix64, local to the acceptance suite so the draws are pinned here.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed)
    }
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }
    fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Relative error with an absolute fallback below 1e-8.
fn rel(got: f64, want: f64) -> f64 {
    let abs = (got - want).abs();
    if want.abs() < 1e-8 {
        abs
    } else {
        abs / want.abs()
    }
}

fn exp_agents(rates: &[f64]) -> AgentSet {
    AgentSet::new(
        rates
            .iter()
            .map(|r| UtilitySpec::exponential(*r).unwrap())
            .collect(),
    )
    .unwrap()
}

fn mixture_agents() -> AgentSet {
    AgentSet::new(vec![
        UtilitySpec::mixture(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap(),
        UtilitySpec::exponential(0.8).unwrap(),
        UtilitySpec::mixture(vec![0.5, 0.5], vec![0.7, 1.6]).unwrap(),
    ])
    .unwrap()
}

fn leaf(sigma0: f64, psi: Vec<f64>) -> TreeSpec {
    TreeSpec::Leaf(saddlefields_core::field::LeafSpec { sigma0, psi })
}

fn internal(p: Vec<f64>, children: Vec<TreeSpec>) -> TreeSpec {
    TreeSpec::Internal(saddlefields_core::field::InternalSpec { p, children })
}

/// Two leaves, one dividend each (+1 / -1).
fn two_leaf_tree() -> ScenarioTree {
    ScenarioTree::from_spec(&internal(
        vec![0.5, 0.5],
        vec![leaf(0.0, vec![1.0]), leaf(0.0, vec![-1.0])],
    ))
    .unwrap()
}

/// Two levels, four leaves, two dividends.
fn quad_tree() -> ScenarioTree {
    ScenarioTree::from_spec(&internal(
        vec![0.4, 0.6],
        vec![
            internal(
                vec![0.5, 0.5],
                vec![leaf(0.2, vec![1.0, 0.5]), leaf(-0.1, vec![-1.0, 0.3])],
            ),
            internal(
                vec![0.3, 0.7],
                vec![leaf(0.0, vec![0.5, -0.4]), leaf(0.1, vec![-0.5, 1.2])],
            ),
        ],
    ))
    .unwrap()
}

/// Three branching levels, ternary at each step: 27 leaves, two dividends.
/// Dividends are kept positive so probability-weighted sums never cancel.
fn ternary_tree() -> ScenarioTree {
    let mut counter = 0usize;
    let mut make_leaf = || {
        counter += 1;
        let a = ((counter * 37) % 13) as f64 / 13.0;
        let b = ((counter * 59) % 17) as f64 / 17.0;
        leaf(a - 0.5, vec![0.2 + 0.9 * a, 0.3 + 1.1 * b])
    };
    let probs = [
        vec![0.2, 0.3, 0.5],
        vec![0.3, 0.3, 0.4],
        vec![0.25, 0.5, 0.25],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    ];
    let mut mids = Vec::new();
    for i in 0..3 {
        let mut bottoms = Vec::new();
        for j in 0..3 {
            bottoms.push(internal(
                probs[1 + (i + j) % 3].clone(),
                vec![make_leaf(), make_leaf(), make_leaf()],
            ));
        }
        mids.push(internal(probs[1 + i % 3].clone(), bottoms));
    }
    ScenarioTree::from_spec(&internal(probs[0].clone(), mids)).unwrap()
}

fn verdict(n: usize, label: &str, ok: bool, detail: &str) -> bool {
    println!(
        "criterion {n} ({label}): {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

// ---------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------

#[test]
fn criterion_01_exponential_closed_forms() {
    const TOL: f64 = 1e-10;
    let sets = [
        exp_agents(&[1.0, 2.0]),
        exp_agents(&[0.5, 1.0, 2.0]),
        exp_agents(&[1.3]),
    ];
    let mut rng = Rng::new(101);
    let mut worst = 0.0f64;
    let mut points = 0;
    for agents in &sets {
        let trivial = ScenarioTree::single_leaf(0.0, vec![]).unwrap();
        let f = NodeFieldEvaluator::new(&trivial, agents, NodeRef::root()).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..agents.len())
                .map(|_| rng.log_uniform(0.1, 10.0))
                .collect();
            let x = rng.uniform(-5.0, 5.0);
            let oracle = exponential_aggregate_oracle(agents, &v, x).unwrap();
            let d = r_and_gradient(agents, &WeightVector::new(v.clone()).unwrap(), x).unwrap();
            worst = worst.max(rel(d.value, oracle.value));
            worst = worst.max(rel(d.allocation.lambda, oracle.lambda));
            for m in 0..agents.len() {
                worst = worst.max(rel(d.allocation.x_hat[m], oracle.x_hat[m]));
            }

            let u: Vec<f64> = (0..agents.len())
                .map(|_| -rng.log_uniform(0.1, 10.0))
                .collect();
            let b = DualPoint::new(u.clone(), 1.0, vec![]).unwrap();
            let pair = conjugate_point_from_dual(&f, &b, None).unwrap();
            let g_oracle = exponential_conjugate_value(agents, &u).unwrap();
            worst = worst.max(rel(pair.g_value, g_oracle));
            points += 1;
        }
    }
    let ok = worst <= TOL;
    assert!(
        verdict(
            1,
            "exponential closed forms for r, lambda, allocation, g",
            ok,
            &format!("max rel {worst:.2e} <= {TOL:.0e} at {points} points")
        ),
        "worst relative error {worst:e}"
    );
}

#[test]
fn criterion_02_derivative_suite() {
    const GRAD_TOL: f64 = 1e-6;
    const HESS_TOL: f64 = 1e-4;
    let agents = mixture_agents();
    let m_count = agents.len();
    let mut rng = Rng::new(202);
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    let mut diag_exact = true;
    let mut worst_assembly = 0.0f64;

    let value_at = |v: &[f64], x: f64| -> f64 {
        r_and_gradient(&agents, &WeightVector::new(v.to_vec()).unwrap(), x)
            .unwrap()
            .value
    };
    let grad_at = |v: &[f64], x: f64| -> (f64, Vec<f64>) {
        let g = r_and_gradient(&agents, &WeightVector::new(v.to_vec()).unwrap(), x).unwrap();
        (g.grad_x, g.grad_v)
    };

    for _ in 0..100 {
        let v: Vec<f64> = (0..m_count).map(|_| rng.log_uniform(0.1, 10.0)).collect();
        let x = rng.uniform(-5.0, 5.0);
        let d = r_hessian(&agents, &WeightVector::new(v.clone()).unwrap(), x).unwrap();

        // gradient vs value differences
        let h = 1e-5 * x.abs().max(1.0);
        worst_grad = worst_grad.max(rel(
            (value_at(&v, x + h) - value_at(&v, x - h)) / (2.0 * h),
            d.grad_x,
        ));
        for m in 0..m_count {
            let h = 1e-5 * v[m].max(1.0);
            let mut vp = v.clone();
            vp[m] += h;
            let mut vm = v.clone();
            vm[m] -= h;
            worst_grad = worst_grad.max(rel(
                (value_at(&vp, x) - value_at(&vm, x)) / (2.0 * h),
                d.grad_v[m],
            ));
        }

        // Hessian vs gradient differences
        let h2 = 1e-4 * x.abs().max(1.0);
        let (gxp, _) = grad_at(&v, x + h2);
        let (gxm, _) = grad_at(&v, x - h2);
        worst_hess = worst_hess.max(rel((gxp - gxm) / (2.0 * h2), d.hess_xx));
        for m in 0..m_count {
            let h2 = 1e-4 * v[m].max(1.0);
            let mut vp = v.clone();
            vp[m] += h2;
            let mut vm = v.clone();
            vm[m] -= h2;
            let (gxp, gvp) = grad_at(&vp, x);
            let (gxm, gvm) = grad_at(&vm, x);
            worst_hess = worst_hess.max(rel((gxp - gxm) / (2.0 * h2), d.hess_vx[m]));
            for l in 0..m_count {
                worst_hess =
                    worst_hess.max(rel((gvp[l] - gvm[l]) / (2.0 * h2), d.hess_vv.get(l, m)));
            }
        }

        // diagonal structure: exactly diagonal with the risk tolerances,
        // and the normalized curvature assembly collapses to the same matrix
        let evaluator = AggregateEvaluator::new(&agents);
        let bundle = bundle_from_evaluation(&v, &evaluator.evaluate(&v, x, &[]).unwrap()).unwrap();
        for l in 0..m_count {
            for m in 0..m_count {
                if l != m {
                    diag_exact &= d.weight_curvature.get(l, m) == 0.0;
                    worst_assembly = worst_assembly.max(bundle.primal_vv.get(l, m).abs());
                } else {
                    diag_exact &= d.weight_curvature.get(l, l) == d.allocation.tolerances[l];
                    worst_assembly = worst_assembly
                        .max(rel(bundle.primal_vv.get(l, l), d.allocation.tolerances[l]));
                }
            }
        }
    }
    let ok =
        worst_grad <= GRAD_TOL && worst_hess <= HESS_TOL && diag_exact && worst_assembly <= 1e-12;
    assert!(
        verdict(2, "gradient/Hessian formulas vs differences, diagonal curvature", ok,
            &format!("grad {worst_grad:.2e} <= {GRAD_TOL:.0e}, hess {worst_hess:.2e} <= {HESS_TOL:.0e}, diagonality exact: {diag_exact}, assembly {worst_assembly:.2e}")),
        "grad {worst_grad:e}, hess {worst_hess:e}, diag {diag_exact}, assembly {worst_assembly:e}"
    );
}

#[test]
fn criterion_03_saddle_conjugacy() {
    const ROUND_TOL: f64 = 1e-8;
    const CLOSE_TOL: f64 = 1e-9;
    const MINIMAX_TOL: f64 = 1e-6;
    let agents = mixture_agents();
    let tree = two_leaf_tree();
    let f = NodeFieldEvaluator::new(&tree, &agents, NodeRef::root()).unwrap();
    let mut rng = Rng::new(303);
    let mut worst_round = 0.0f64;
    let mut worst_close = 0.0f64;
    let mut worst_minimax = 0.0f64;

    for i in 0..100 {
        let v: Vec<f64> = (0..agents.len())
            .map(|_| rng.log_uniform(0.1, 10.0))
            .collect();
        let x = rng.uniform(-5.0, 5.0);
        let q = vec![rng.uniform(-2.0, 2.0)];
        let a = PrimalPoint::new(v.clone(), x, q.clone()).unwrap();
        let pair = conjugate_point_from_primal(&f, &a).unwrap();
        let back = conjugate_point_from_dual(&f, &pair.dual, None).unwrap();
        for m in 0..agents.len() {
            worst_round = worst_round.max(rel(back.primal.v()[m], v[m]));
        }
        worst_round = worst_round.max(rel(back.primal.x(), x));

        let inner: f64 = pair.dual.u().iter().zip(&v).map(|(um, vm)| um * vm).sum();
        worst_close = worst_close.max(rel(pair.f_value, inner));
        worst_close = worst_close.max(rel(back.g_value, x * pair.dual.y()));

        if i < 20 {
            let (sup_inf, inf_sup) = minimax_grid(&f, &pair).unwrap();
            let scale = pair.g_value.abs().max(1.0);
            worst_minimax = worst_minimax.max((sup_inf - pair.g_value).abs() / scale);
            worst_minimax = worst_minimax.max((inf_sup - pair.g_value).abs() / scale);
        }
    }
    let ok = worst_round <= ROUND_TOL && worst_close <= CLOSE_TOL && worst_minimax <= MINIMAX_TOL;
    assert!(
        verdict(3, "saddle round trip, closing identities, grid minimax", ok,
            &format!("round {worst_round:.2e} <= {ROUND_TOL:.0e}, closing {worst_close:.2e} <= {CLOSE_TOL:.0e}, minimax {worst_minimax:.2e} <= {MINIMAX_TOL:.0e}")),
        "round {worst_round:e}, closing {worst_close:e}, minimax {worst_minimax:e}"
    );
}

#[test]
fn criterion_04_second_order_identities() {
    let agents = mixture_agents();
    let mut all_ok = true;
    let mut detail = String::new();
    for (tag, tree) in [("J=1", two_leaf_tree()), ("J=2", quad_tree())] {
        let cfg = SweepConfig {
            n_points: 15,
            seed: 404,
            ..SweepConfig::default()
        };
        let reports = run_suite(Suite::Identities, &cfg, &agents, &tree).unwrap();
        let inverse = reports
            .iter()
            .find(|r| r.name == "identities/weight-block-inverse")
            .unwrap();
        let cross = reports
            .iter()
            .find(|r| r.name == "identities/cross-block-vs-differences")
            .unwrap();
        let quantity = reports
            .iter()
            .find(|r| r.name == "identities/quantity-block-vs-differences")
            .unwrap();
        assert_eq!(
            inverse.tolerance, 1e-7,
            "inverse identity tolerance is pinned"
        );
        assert_eq!(cross.tolerance, 1e-4, "cross-block tolerance is pinned");
        assert_eq!(
            quantity.tolerance, 1e-4,
            "quantity-block tolerance is pinned"
        );
        let ok = reports.iter().all(|r| r.passed)
            && inverse.points_tested > 0
            && cross.points_tested > 0
            && quantity.points_tested > 0;
        all_ok &= ok;
        detail.push_str(&format!(
            "{tag}: inverse {:.2e}, cross {:.2e}, quantity {:.2e}; ",
            inverse.max_rel_error, cross.max_rel_error, quantity.max_rel_error
        ));
    }
    assert!(
        verdict(
            4,
            "block inverse 1e-7, cross/quantity blocks vs differences 1e-4",
            all_ok,
            &detail
        ),
        "{detail}"
    );
}

#[test]
fn criterion_05_envelope() {
    const TOL: f64 = 1e-5;
    const STEP: f64 = 1e-4;
    let agents = mixture_agents();
    let tree = quad_tree();
    let f = NodeFieldEvaluator::new(&tree, &agents, NodeRef::root()).unwrap();
    let mut rng = Rng::new(505);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let u: Vec<f64> = (0..agents.len())
            .map(|_| -rng.log_uniform(0.1, 10.0))
            .collect();
        let q: Vec<f64> = (0..2).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let b = DualPoint::new(u, 1.0, q).unwrap();
        let pair = conjugate_point_from_dual(&f, &b, None).unwrap();
        for dev in envelope_check(&f, &pair, STEP).unwrap() {
            worst = worst.max(dev);
        }
    }
    let ok = worst <= TOL;
    assert!(
        verdict(
            5,
            "envelope |dg/dq + df/dq| with step 1e-4",
            ok,
            &format!("max deviation {worst:.2e} <= {TOL:.0e} at 50 points")
        ),
        "worst deviation {worst:e}"
    );
}

#[test]
fn criterion_06_field_propagation() {
    const TOL: f64 = 1e-10;
    let agents = mixture_agents();
    let tree = ternary_tree();
    assert_eq!(tree.level_count(), 4);
    assert_eq!(tree.nodes_at(tree.leaf_level()), 27);
    let mut rng = Rng::new(606);
    let mut worst = 0.0f64;
    let dim = agents.len() + 1 + 2;

    for _ in 0..5 {
        let v: Vec<f64> = (0..agents.len())
            .map(|_| rng.log_uniform(0.1, 10.0))
            .collect();
        let x = rng.uniform(-5.0, 5.0);
        let q: Vec<f64> = (0..2).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let a = PrimalPoint::new(v.clone(), x, q.clone()).unwrap();

        let evals: Vec<FieldEvaluation> = tree
            .all_nodes()
            .iter()
            .map(|n| field_at(&tree, &agents, &a, *n).unwrap())
            .collect();
        let eval_of = |node: NodeRef| evals.iter().find(|e| e.node == node).unwrap();

        // tower property at every internal node, all derivatives
        for node in tree.all_nodes() {
            if tree.is_leaf(node) {
                continue;
            }
            let here = eval_of(node);
            let mut value = 0.0;
            let mut gradient = vec![0.0; dim];
            let mut hessian = Matrix::zeros(dim, dim);
            for (p, child) in tree.children(node) {
                let ce = eval_of(child);
                value += p * ce.value;
                for i in 0..dim {
                    gradient[i] += p * ce.gradient[i];
                    for k in 0..dim {
                        hessian.add_to(i, k, p * ce.hessian.get(i, k));
                    }
                }
            }
            worst = worst.max(rel(value, here.value));
            for i in 0..dim {
                worst = worst.max(rel(gradient[i], here.gradient[i]));
                for k in 0..dim {
                    worst = worst.max(rel(hessian.get(i, k), here.hessian.get(i, k)));
                }
            }
        }

        // node quantities are conditional expectations of terminal ones:
        // independent reversed-order sums over the descendant leaves
        for node in tree.all_nodes() {
            let here = eval_of(node);
            let mut leaves = tree.descendant_leaves(node);
            leaves.reverse();
            let mut value = 0.0;
            let mut gradient = vec![0.0; dim];
            let mut hessian = Matrix::zeros(dim, dim);
            for (p, idx) in leaves {
                let te = terminal_field(
                    &tree,
                    &agents,
                    &a,
                    NodeRef {
                        level: tree.leaf_level(),
                        index: idx,
                    },
                )
                .unwrap();
                value += p * te.value;
                for i in 0..dim {
                    gradient[i] += p * te.gradient[i];
                    for k in 0..dim {
                        hessian.add_to(i, k, p * te.hessian.get(i, k));
                    }
                }
            }
            worst = worst.max(rel(value, here.value));
            for i in 0..dim {
                worst = worst.max(rel(gradient[i], here.gradient[i]));
                for k in 0..dim {
                    worst = worst.max(rel(hessian.get(i, k), here.hessian.get(i, k)));
                }
            }
        }
    }
    let ok = worst <= TOL;
    assert!(
        verdict(
            6,
            "conditional-expectation propagation and tower property",
            ok,
            &format!("max rel {worst:.2e} <= {TOL:.0e} on the 27-leaf ternary tree")
        ),
        "worst relative error {worst:e}"
    );
}

#[test]
fn criterion_07_inverse_fields() {
    const TOL: f64 = 1e-8;
    let agents = mixture_agents();
    let tree = ternary_tree();
    let nodes = tree.all_nodes();
    let mut rng = Rng::new(707);
    let mut worst = 0.0f64;
    let mut simplex_ok = true;

    for _ in 0..50 {
        let node = nodes[rng.index(nodes.len())];
        let v = WeightVector::new(
            (0..agents.len())
                .map(|_| rng.log_uniform(0.1, 10.0))
                .collect(),
        )
        .unwrap()
        .normalized();
        let x = rng.uniform(-5.0, 5.0);
        let q: Vec<f64> = (0..2).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let a = PrimalPoint::new(v.components().to_vec(), x, q.clone()).unwrap();
        let eval = field_at(&tree, &agents, &a, node).unwrap();
        let u = &eval.gradient[0..agents.len()];

        let (x_rec, v_rec) = invert_field(&tree, &agents, u, &q, node).unwrap();
        worst = worst.max(rel(x_rec, x));
        for m in 0..agents.len() {
            worst = worst.max(rel(v_rec[m], v.components()[m]));
        }
        simplex_ok &= v_rec.iter().all(|w| *w > 0.0 && *w < 1.0)
            && (v_rec.iter().sum::<f64>() - 1.0).abs() < 1e-12;

        // and the recovered point reproduces the utility levels
        let back = PrimalPoint::new(v_rec, x_rec, q).unwrap();
        let again = field_at(&tree, &agents, &back, node).unwrap();
        for m in 0..agents.len() {
            worst = worst.max(rel(again.gradient[m], u[m]));
        }
    }
    let ok = worst <= TOL && simplex_ok;
    assert!(
        verdict(
            7,
            "utility/cash/weight field inversion round trips",
            ok,
            &format!("max rel {worst:.2e} <= {TOL:.0e}, weights on the open simplex: {simplex_ok}")
        ),
        "worst {worst:e}, simplex {simplex_ok}"
    );
}

#[test]
fn criterion_08_tolerance_matrix() {
    let agents = mixture_agents();
    let tree = quad_tree();
    let cfg = SweepConfig {
        n_points: 100,
        seed: 808,
        ..SweepConfig::default()
    };
    let reports = run_suite(Suite::ToleranceMatrix, &cfg, &agents, &tree).unwrap();
    let assembly = reports
        .iter()
        .find(|r| r.name == "lemma19/assembly-agreement")
        .unwrap();
    let spectral = reports
        .iter()
        .find(|r| r.name == "lemma19/spectral-band")
        .unwrap();
    assert_eq!(assembly.tolerance, 1e-8, "assembly tolerance is pinned");
    assert_eq!(spectral.tolerance, 1e-9, "spectral slack is pinned");
    let ok = reports.iter().all(|r| r.passed) && assembly.points_tested >= 100;
    assert!(
        verdict(
            8,
            "reweighted tolerance assembly and spectral band",
            ok,
            &format!(
                "assembly {:.2e} <= 1e-8, spectral violation {:.2e} <= 1e-9, {} draws",
                assembly.max_rel_error, spectral.max_rel_error, cfg.n_points
            )
        ),
        "{reports:#?}"
    );
}

#[test]
fn criterion_09_curvature_bounds_and_divergence() {
    let agents = mixture_agents();
    let tree = quad_tree();
    let cfg = SweepConfig {
        n_points: 200,
        seed: 909,
        ..SweepConfig::default()
    };
    let bounds = run_suite(Suite::Bounds, &cfg, &agents, &tree).unwrap();
    for r in &bounds {
        assert_eq!(r.tolerance, 1e-9, "band slack is pinned for {}", r.name);
    }
    let boundary = run_suite(Suite::Boundary, &cfg, &agents, &tree).unwrap();
    let ok = bounds.iter().all(|r| r.passed)
        && bounds.iter().all(|r| r.points_tested > 0)
        && boundary.iter().all(|r| r.passed);
    assert!(
        verdict(
            9,
            "curvature bands at 200 draws and boundary divergence probe",
            ok,
            &format!(
                "bands max violation {:.2e}, probe passed: {}",
                bounds.iter().map(|r| r.max_rel_error).fold(0.0, f64::max),
                boundary[0].passed
            )
        ),
        "bounds {bounds:#?}, boundary {boundary:#?}"
    );
}

#[test]
fn criterion_10_determinism() {
    let agents = mixture_agents();
    let tree = quad_tree();
    let cfg = SweepConfig {
        n_points: 10,
        seed: 7,
        ..SweepConfig::default()
    };
    let once = serde_json::to_vec(&run_suite(Suite::All, &cfg, &agents, &tree).unwrap()).unwrap();
    let twice = serde_json::to_vec(&run_suite(Suite::All, &cfg, &agents, &tree).unwrap()).unwrap();
    let ok = once == twice;
    assert!(
        verdict(
            10,
            "byte-identical reports for identical seeds",
            ok,
            &format!("{} bytes compared", once.len())
        ),
        "reports differ between runs"
    );
}
