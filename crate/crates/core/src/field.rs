//! Finite filtered scenario trees and the stochastic fields they induce.
//!
//! A tree node at level t is an atom of the time-t information set. Leaves
//! carry the endowment constant sigma0 and the dividend vector psi, so the
//! terminal endowment at a leaf is sigma0 + x + <q, psi>. The field value
//! at a node is the exact probability-weighted sum of terminal aggregate
//! utilities over the descendant leaves, and every derivative propagates
//! the same way: differentiation commutes with the (finite) conditional
//! expectation.

use serde::{Deserialize, Serialize};

use crate::aggregate::{r_hessian, solve_allocation, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::saddle::{
    conjugate_point_from_dual, exponential_start, DualPoint, Evaluation, PrimalEvaluator,
    PrimalPoint,
};
use crate::utility::AgentSet;

/// Terminal data carried by each leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafData {
    pub sigma0: f64,
    pub psi: Vec<f64>,
}

#[derive(Clone, Debug)]
struct TreeNode {
    #[allow(dead_code)]
    parent: Option<usize>,
    /// Indices into the next level, empty for leaves.
    children: Vec<usize>,
    /// Transition probabilities, aligned with `children`.
    probs: Vec<f64>,
    /// Present exactly on final-level nodes.
    leaf: Option<LeafData>,
}

/// Nested JSON form: internal nodes are {"p": [...], "children": [...]},
/// leaves are {"sigma0": ..., "psi": [...]}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TreeSpec {
    Internal(InternalSpec),
    Leaf(LeafSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InternalSpec {
    pub p: Vec<f64>,
    pub children: Vec<TreeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LeafSpec {
    pub sigma0: f64,
    pub psi: Vec<f64>,
}

/// A coordinate into the tree: a time level and an atom index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub level: usize,
    pub index: usize,
}

impl NodeRef {
    pub fn root() -> Self {
        NodeRef { level: 0, index: 0 }
    }
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

impl std::str::FromStr for NodeRef {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (level, index) = s.split_once(':').ok_or_else(|| {
            Error::parse(format!("node reference must be level:index, got {s:?}"))
        })?;
        let level = level
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("bad node level in {s:?}: {e}")))?;
        let index = index
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("bad node index in {s:?}: {e}")))?;
        Ok(NodeRef { level, index })
    }
}

/// A validated finite filtration: strictly positive transition
/// probabilities summing to one, all leaves on the final level, and a
/// common dividend dimension.
#[derive(Clone, Debug)]
pub struct ScenarioTree {
    levels: Vec<Vec<TreeNode>>,
    j_dim: usize,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl ScenarioTree {
    pub fn from_spec(spec: &TreeSpec) -> Result<Self> {
        let depth = Self::check_depth(spec, 0)?;
        let mut levels: Vec<Vec<TreeNode>> = (0..=depth).map(|_| Vec::new()).collect();
        let mut j_dim: Option<usize> = None;
        Self::build(spec, 0, None, &mut levels, &mut j_dim)?;
        Ok(ScenarioTree {
            levels,
            j_dim: j_dim.unwrap_or(0),
        })
    }

    /// A single deterministic leaf (the trivial filtration).
    pub fn single_leaf(sigma0: f64, psi: Vec<f64>) -> Result<Self> {
        Self::from_spec(&TreeSpec::Leaf(LeafSpec { sigma0, psi }))
    }

    /// Depth of the leaf level, checking that all leaves agree.
    fn check_depth(spec: &TreeSpec, level: usize) -> Result<usize> {
        match spec {
            TreeSpec::Leaf(_) => Ok(level),
            TreeSpec::Internal(node) => {
                if node.children.is_empty() {
                    return Err(Error::parse(format!(
                        "internal node at level {level} has no children"
                    )));
                }
                if node.p.len() != node.children.len() {
                    return Err(Error::parse(format!(
                        "node at level {level} has {} probabilities for {} children",
                        node.p.len(),
                        node.children.len()
                    )));
                }
                let mut depth = None;
                for child in &node.children {
                    let d = Self::check_depth(child, level + 1)?;
                    match depth {
                        None => depth = Some(d),
                        Some(prev) if prev != d => {
                            return Err(Error::parse(format!(
                                "leaves at different depths ({prev} vs {d}); every leaf must sit on the final level"
                            )))
                        }
                        _ => {}
                    }
                }
                Ok(depth.expect("non-empty children"))
            }
        }
    }

    fn build(
        spec: &TreeSpec,
        level: usize,
        parent: Option<usize>,
        levels: &mut Vec<Vec<TreeNode>>,
        j_dim: &mut Option<usize>,
    ) -> Result<usize> {
        match spec {
            TreeSpec::Leaf(leaf) => {
                if leaf.psi.iter().any(|p| !p.is_finite()) || !leaf.sigma0.is_finite() {
                    return Err(Error::parse("leaf data must be finite"));
                }
                match j_dim {
                    None => *j_dim = Some(leaf.psi.len()),
                    Some(j) if *j != leaf.psi.len() => {
                        return Err(Error::parse(format!(
                            "leaf psi dimension {} disagrees with {}",
                            leaf.psi.len(),
                            j
                        )))
                    }
                    _ => {}
                }
                let idx = levels[level].len();
                levels[level].push(TreeNode {
                    parent,
                    children: Vec::new(),
                    probs: Vec::new(),
                    leaf: Some(leaf.clone().into()),
                });
                Ok(idx)
            }
            TreeSpec::Internal(node) => {
                let sum: f64 = node.p.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::parse(format!(
                        "transition probabilities at level {level} sum to {sum}, expected 1"
                    )));
                }
                for (i, p) in node.p.iter().enumerate() {
                    if !p.is_finite() || *p <= 0.0 {
                        return Err(Error::parse(format!(
                            "transition probability {i} at level {level} must be strictly positive, got {p}"
                        )));
                    }
                }
                let idx = levels[level].len();
                levels[level].push(TreeNode {
                    parent,
                    children: Vec::new(),
                    probs: node.p.clone(),
                    leaf: None,
                });
                let mut children = Vec::with_capacity(node.children.len());
                for child in &node.children {
                    children.push(Self::build(child, level + 1, Some(idx), levels, j_dim)?);
                }
                levels[level][idx].children = children;
                Ok(idx)
            }
        }
    }

    /// Nested serialization form (inverse of `from_spec`).
    pub fn to_spec(&self) -> TreeSpec {
        self.spec_of(NodeRef::root())
    }

    fn spec_of(&self, node: NodeRef) -> TreeSpec {
        let n = &self.levels[node.level][node.index];
        match &n.leaf {
            Some(leaf) => TreeSpec::Leaf(LeafSpec {
                sigma0: leaf.sigma0,
                psi: leaf.psi.clone(),
            }),
            None => TreeSpec::Internal(InternalSpec {
                p: n.probs.clone(),
                children: n
                    .children
                    .iter()
                    .map(|&c| {
                        self.spec_of(NodeRef {
                            level: node.level + 1,
                            index: c,
                        })
                    })
                    .collect(),
            }),
        }
    }

    /// Number of node levels; a tree with L levels has L - 1 time steps.
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn leaf_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn nodes_at(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, Vec::len)
    }

    pub fn quantity_count(&self) -> usize {
        self.j_dim
    }

    pub fn check_node(&self, node: NodeRef) -> Result<()> {
        if node.level >= self.levels.len() || node.index >= self.levels[node.level].len() {
            return Err(Error::domain(format!(
                "node {node} outside tree ({} levels)",
                self.levels.len()
            )));
        }
        Ok(())
    }

    pub fn is_leaf(&self, node: NodeRef) -> bool {
        node.level == self.leaf_level()
    }

    pub fn leaf_data(&self, index: usize) -> &LeafData {
        self.levels[self.leaf_level()][index]
            .leaf
            .as_ref()
            .expect("final-level nodes carry leaf data")
    }

    /// Children of a node with their transition probabilities.
    pub fn children(&self, node: NodeRef) -> Vec<(f64, NodeRef)> {
        let n = &self.levels[node.level][node.index];
        n.probs
            .iter()
            .zip(&n.children)
            .map(|(p, c)| {
                (
                    *p,
                    NodeRef {
                        level: node.level + 1,
                        index: *c,
                    },
                )
            })
            .collect()
    }

    /// Descendant leaves of a node with conditional probabilities
    /// (products of transition probabilities along each path).
    pub fn descendant_leaves(&self, node: NodeRef) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(node, 1.0, &mut out);
        out
    }

    fn collect_leaves(&self, node: NodeRef, prob: f64, out: &mut Vec<(f64, usize)>) {
        if self.is_leaf(node) {
            out.push((prob, node.index));
            return;
        }
        for (p, child) in self.children(node) {
            self.collect_leaves(child, prob * p, out);
        }
    }

    /// All node references, level by level.
    pub fn all_nodes(&self) -> Vec<NodeRef> {
        let mut out = Vec::new();
        for (level, nodes) in self.levels.iter().enumerate() {
            for index in 0..nodes.len() {
                out.push(NodeRef { level, index });
            }
        }
        out
    }
}

impl From<LeafSpec> for LeafData {
    fn from(spec: LeafSpec) -> Self {
        LeafData {
            sigma0: spec.sigma0,
            psi: spec.psi,
        }
    }
}

/// Chain rule mapping the aggregate-utility jet at (v, sigma0 + x + <q,psi>)
/// to derivatives in (v, x, q).
fn leaf_jet(
    agents: &AgentSet,
    leaf: &LeafData,
    v: &[f64],
    x: f64,
    q: &[f64],
) -> Result<Evaluation> {
    if q.len() != leaf.psi.len() {
        return Err(Error::contract(format!(
            "point has {} quantities, leaf carries {} dividends",
            q.len(),
            leaf.psi.len()
        )));
    }
    // grouping keeps the q-translation identity exact in floating point
    let s = leaf.sigma0 + (x + dot(q, &leaf.psi));
    let weights = WeightVector::new(v.to_vec())?;
    let d = r_hessian(agents, &weights, s)?;
    let m = v.len();
    let j = q.len();
    let mut hess_vq = Matrix::zeros(m, j);
    for mm in 0..m {
        for jj in 0..j {
            hess_vq.set(mm, jj, d.hess_vx[mm] * leaf.psi[jj]);
        }
    }
    let mut hess_qq = Matrix::zeros(j, j);
    let mut hess_xq = Vec::with_capacity(j);
    let mut grad_q = Vec::with_capacity(j);
    for jj in 0..j {
        grad_q.push(d.grad_x * leaf.psi[jj]);
        hess_xq.push(d.hess_xx * leaf.psi[jj]);
        for ii in 0..j {
            hess_qq.set(ii, jj, d.hess_xx * leaf.psi[ii] * leaf.psi[jj]);
        }
    }
    Ok(Evaluation {
        value: d.value,
        grad_v: d.grad_v,
        grad_x: d.grad_x,
        grad_q,
        hess_vv: d.hess_vv,
        hess_vx: d.hess_vx,
        hess_xx: d.hess_xx,
        hess_vq,
        hess_xq,
        hess_qq,
    })
}

/// Probability-weighted sum of leaf jets below a node: the exact
/// conditional expectation of the terminal field and all its derivatives.
pub(crate) fn node_jet(
    tree: &ScenarioTree,
    agents: &AgentSet,
    node: NodeRef,
    v: &[f64],
    x: f64,
    q: &[f64],
) -> Result<Evaluation> {
    tree.check_node(node)?;
    let m = v.len();
    let j = q.len();
    let mut acc = Evaluation {
        value: 0.0,
        grad_v: vec![0.0; m],
        grad_x: 0.0,
        grad_q: vec![0.0; j],
        hess_vv: Matrix::zeros(m, m),
        hess_vx: vec![0.0; m],
        hess_xx: 0.0,
        hess_vq: Matrix::zeros(m, j),
        hess_xq: vec![0.0; j],
        hess_qq: Matrix::zeros(j, j),
    };
    for (p, leaf_index) in tree.descendant_leaves(node) {
        let jet = leaf_jet(agents, tree.leaf_data(leaf_index), v, x, q)?;
        acc.value += p * jet.value;
        acc.grad_x += p * jet.grad_x;
        acc.hess_xx += p * jet.hess_xx;
        for mm in 0..m {
            acc.grad_v[mm] += p * jet.grad_v[mm];
            acc.hess_vx[mm] += p * jet.hess_vx[mm];
            for kk in 0..m {
                acc.hess_vv.add_to(mm, kk, p * jet.hess_vv.get(mm, kk));
            }
            for jj in 0..j {
                acc.hess_vq.add_to(mm, jj, p * jet.hess_vq.get(mm, jj));
            }
        }
        for jj in 0..j {
            acc.grad_q[jj] += p * jet.grad_q[jj];
            acc.hess_xq[jj] += p * jet.hess_xq[jj];
            for ii in 0..j {
                acc.hess_qq.add_to(ii, jj, p * jet.hess_qq.get(ii, jj));
            }
        }
    }
    Ok(acc)
}

/// A field evaluation at one node: value, flat gradient (v..., x, q...),
/// and the full symmetric Hessian in the same ordering.
#[derive(Clone, Debug)]
pub struct FieldEvaluation {
    pub node: NodeRef,
    pub point: PrimalPoint,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

fn field_evaluation(node: NodeRef, point: &PrimalPoint, jet: Evaluation) -> FieldEvaluation {
    FieldEvaluation {
        node,
        point: point.clone(),
        value: jet.value,
        gradient: jet.gradient_flat(),
        hessian: jet.hessian_flat(),
    }
}

/// Terminal field at a leaf: r evaluated at the leaf endowment with the
/// chain rule in (x, q).
pub fn terminal_field(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
    leaf: NodeRef,
) -> Result<FieldEvaluation> {
    tree.check_node(leaf)?;
    if !tree.is_leaf(leaf) {
        return Err(Error::domain(format!("node {leaf} is not terminal")));
    }
    let jet = leaf_jet(agents, tree.leaf_data(leaf.index), a.v(), a.x(), a.q())?;
    Ok(field_evaluation(leaf, a, jet))
}

/// Conditional-expectation field at any node.
pub fn field_at(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
    node: NodeRef,
) -> Result<FieldEvaluation> {
    let jet = node_jet(tree, agents, node, a.v(), a.x(), a.q())?;
    Ok(field_evaluation(node, a, jet))
}

/// The Pareto allocation at a leaf: the maximizing split of the terminal
/// endowment sigma0 + x + <q, psi>.
pub fn pareto_allocation_field(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
    leaf: NodeRef,
) -> Result<Vec<f64>> {
    tree.check_node(leaf)?;
    if !tree.is_leaf(leaf) {
        return Err(Error::domain(format!("node {leaf} is not terminal")));
    }
    let data = tree.leaf_data(leaf.index);
    let s = data.sigma0 + (a.x() + dot(a.q(), &data.psi));
    let weights = WeightVector::new(a.v().to_vec())?;
    Ok(solve_allocation(agents, &weights, s)?.x_hat)
}

/// The field at one node seen as a primal saddle function of (v, x, q).
pub struct NodeFieldEvaluator<'a> {
    tree: &'a ScenarioTree,
    agents: &'a AgentSet,
    node: NodeRef,
}

impl<'a> NodeFieldEvaluator<'a> {
    pub fn new(tree: &'a ScenarioTree, agents: &'a AgentSet, node: NodeRef) -> Result<Self> {
        tree.check_node(node)?;
        Ok(NodeFieldEvaluator { tree, agents, node })
    }

    pub fn node(&self) -> NodeRef {
        self.node
    }
}

impl PrimalEvaluator for NodeFieldEvaluator<'_> {
    fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn quantity_count(&self) -> usize {
        self.tree.quantity_count()
    }

    fn evaluate(&self, v: &[f64], x: f64, q: &[f64]) -> Result<Evaluation> {
        node_jet(self.tree, self.agents, self.node, v, x, q)
    }

    fn start_point(&self, u: &[f64], y: f64, q: &[f64]) -> (Vec<f64>, f64) {
        // log of the conditional expectation of exp(-(sigma0 + <q,psi>)/T0),
        // which makes the start exact for pure exponential agent sets
        let total_t: f64 = (0..self.agents.len())
            .map(|m| self.agents.agent(m).risk_tolerance(0.0))
            .sum();
        let leaves = self.tree.descendant_leaves(self.node);
        let shift = leaves
            .iter()
            .map(|(p, idx)| {
                let leaf = self.tree.leaf_data(*idx);
                p.ln() - (leaf.sigma0 + dot(q, &leaf.psi)) / total_t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let log_k = if shift.is_finite() {
            let sum: f64 = leaves
                .iter()
                .map(|(p, idx)| {
                    let leaf = self.tree.leaf_data(*idx);
                    (p.ln() - (leaf.sigma0 + dot(q, &leaf.psi)) / total_t - shift).exp()
                })
                .sum();
            shift + sum.ln()
        } else {
            0.0
        };
        exponential_start(self.agents, u, y, log_k)
    }
}

/// Invert the expected-utility field at a node: given target utility
/// levels u, find the cash amount X and simplex weights V with
/// dF/dv(V, X, q) = u. Uses the saddle solve at marginal y = 1 and
/// normalizes the recovered weights onto the open simplex.
pub fn invert_field(
    tree: &ScenarioTree,
    agents: &AgentSet,
    u: &[f64],
    q: &[f64],
    node: NodeRef,
) -> Result<(f64, Vec<f64>)> {
    let evaluator = NodeFieldEvaluator::new(tree, agents, node)?;
    let b = DualPoint::new(u.to_vec(), 1.0, q.to_vec())?;
    let pair = conjugate_point_from_dual(&evaluator, &b, None)?;
    let total: f64 = pair.primal.v().iter().sum();
    let v_simplex: Vec<f64> = pair.primal.v().iter().map(|w| w / total).collect();
    Ok((pair.primal.x(), v_simplex))
}

/// Per-leaf and per-node data of the curvature-reweighted representation
/// of the weight-curvature matrix.
#[derive(Clone, Debug)]
pub struct ToleranceRepresentation {
    /// Density of the reweighted measure against the tree measure, per leaf:
    /// terminal x-curvature over its root expectation.
    pub leaf_density: Vec<f64>,
    /// Aggregate risk tolerance -F_x/F_xx per node, indexed by level then
    /// atom; a martingale under the reweighted measure.
    pub tolerance_process: Vec<Vec<f64>>,
    /// Per-agent risk tolerances at the Pareto allocation, per leaf.
    pub leaf_tolerances: Vec<Vec<f64>>,
}

/// Build the reweighted-representation data at the point a.
pub fn tolerance_representation(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
) -> Result<ToleranceRepresentation> {
    let leaf_level = tree.leaf_level();
    let n_leaves = tree.nodes_at(leaf_level);
    let weights = WeightVector::new(a.v().to_vec())?;

    let mut leaf_hess_xx = Vec::with_capacity(n_leaves);
    let mut leaf_tolerances = Vec::with_capacity(n_leaves);
    for index in 0..n_leaves {
        let data = tree.leaf_data(index);
        let s = data.sigma0 + (a.x() + dot(a.q(), &data.psi));
        let d = r_hessian(agents, &weights, s)?;
        leaf_hess_xx.push(d.hess_xx);
        leaf_tolerances.push(d.allocation.tolerances);
    }

    // root x-curvature = expectation of the terminal x-curvatures
    let root_probs = tree.descendant_leaves(NodeRef::root());
    let mut root_hess_xx = 0.0;
    for (p, idx) in &root_probs {
        root_hess_xx += p * leaf_hess_xx[*idx];
    }
    let leaf_density: Vec<f64> = leaf_hess_xx.iter().map(|h| h / root_hess_xx).collect();

    let mut tolerance_process = Vec::with_capacity(tree.level_count());
    for level in 0..tree.level_count() {
        let mut row = Vec::with_capacity(tree.nodes_at(level));
        for index in 0..tree.nodes_at(level) {
            let node = NodeRef { level, index };
            let mut fx = 0.0;
            let mut fxx = 0.0;
            for (p, idx) in tree.descendant_leaves(node) {
                let data = tree.leaf_data(idx);
                let s = data.sigma0 + (a.x() + dot(a.q(), &data.psi));
                let d = r_hessian(agents, &weights, s)?;
                fx += p * d.grad_x;
                fxx += p * d.hess_xx;
            }
            row.push(-fx / fxx);
        }
        tolerance_process.push(row);
    }

    Ok(ToleranceRepresentation {
        leaf_density,
        tolerance_process,
        leaf_tolerances,
    })
}

/// Conditional expectation under the reweighted measure at a node.
fn reweighted_expectation(
    tree: &ScenarioTree,
    rep: &ToleranceRepresentation,
    node: NodeRef,
    value: impl Fn(usize) -> f64,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, idx) in tree.descendant_leaves(node) {
        let w = p * rep.leaf_density[idx];
        num += w * value(idx);
        den += w;
    }
    num / den
}

/// Assemble the weight-curvature matrix of the node field from the
/// reweighted risk-tolerance representation:
///
///   A(l,m) = E*( tau_l (delta_lm sum_k tau_k - tau_m) | node ) / Rt
///          + E*(tau_l | node) E*(tau_m | node) / Rt,
///
/// where E* conditions under the reweighted measure and Rt is the node's
/// aggregate tolerance.
pub fn tolerance_matrix(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
    node: NodeRef,
) -> Result<Matrix> {
    tree.check_node(node)?;
    let rep = tolerance_representation(tree, agents, a)?;
    tolerance_matrix_from(tree, &rep, node, agents.len())
}

pub fn tolerance_matrix_from(
    tree: &ScenarioTree,
    rep: &ToleranceRepresentation,
    node: NodeRef,
    m_count: usize,
) -> Result<Matrix> {
    tree.check_node(node)?;
    let r_t = rep.tolerance_process[node.level][node.index];
    let mut out = Matrix::zeros(m_count, m_count);
    for l in 0..m_count {
        let mean_l = reweighted_expectation(tree, rep, node, |idx| rep.leaf_tolerances[idx][l]);
        for m in 0..m_count {
            let delta = if l == m { 1.0 } else { 0.0 };
            let cross = reweighted_expectation(tree, rep, node, |idx| {
                let taus = &rep.leaf_tolerances[idx];
                let total: f64 = taus.iter().sum();
                taus[l] * (delta * total - taus[m])
            });
            let mean_m = reweighted_expectation(tree, rep, node, |idx| rep.leaf_tolerances[idx][m]);
            out.set(l, m, (cross + mean_l * mean_m) / r_t);
        }
    }
    Ok(out)
}

/// Direct assembly of the same matrix from the node field's second
/// derivatives (the cross-check path).
pub fn curvature_matrix_direct(
    tree: &ScenarioTree,
    agents: &AgentSet,
    a: &PrimalPoint,
    node: NodeRef,
) -> Result<Matrix> {
    let jet = node_jet(tree, agents, node, a.v(), a.x(), a.q())?;
    let bundle = crate::saddle::bundle_from_evaluation(a.v(), &jet)?;
    Ok(bundle.primal_vv)
}

/// Extreme eigenvalues of a symmetric matrix against the band [1/c, c].
#[derive(Clone, Debug, Serialize)]
pub struct SpectralCheck {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub within: bool,
}

const SPECTRAL_SLACK: f64 = 1e-9;

pub fn spectral_bound_check(matrix: &Matrix, c: f64) -> Result<SpectralCheck> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::domain(format!(
            "curvature bound must be positive, got {c}"
        )));
    }
    if !matrix.is_symmetric(1e-9) {
        return Err(Error::contract(
            "spectral bound check requires a symmetric matrix",
        ));
    }
    let eigs = matrix.symmetric_eigenvalues()?;
    let min_eigenvalue = *eigs.first().expect("nonempty matrix");
    let max_eigenvalue = *eigs.last().expect("nonempty matrix");
    let lower = 1.0 / c;
    let within = min_eigenvalue >= lower - SPECTRAL_SLACK && max_eigenvalue <= c + SPECTRAL_SLACK;
    Ok(SpectralCheck {
        min_eigenvalue,
        max_eigenvalue,
        lower_bound: lower,
        upper_bound: c,
        within,
    })
}
