//! Saddle conjugation. A primal function f(v, x, q) that is negative,
//! decreasing and convex in the weights v, increasing and concave in the
//! cash amount x, has a conjugate
//!
//!   g(u, y, q) = sup_v inf_x [ <v,u> + x y - f(v, x, q) ],
//!
//! and the unique saddle point links the coordinates through the gradient
//! maps u = df/dv, y = df/dx (one direction) and v = dg/du, x = g(u,1,q)
//! (the other). This module computes both point maps, the normalized
//! second-derivative blocks on each side, and the identities tying them
//! together: the dual weight block is the inverse of the primal one, the
//! dual cross block is minus that inverse times the primal cross block, and
//! the dual quantity block stacks the Schur-type correction on top of the
//! primal quantity block. An envelope check verifies dg/dq = -df/dq by
//! re-solving the saddle point at perturbed quantities.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, Matrix};
use crate::utility::AgentSet;

/// A point of the primal parameter set: weights in (0,inf)^M, cash in R,
/// quantities in R^J.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalPoint {
    v: Vec<f64>,
    x: f64,
    q: Vec<f64>,
}

impl PrimalPoint {
    pub fn new(v: Vec<f64>, x: f64, q: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::domain("primal point needs at least one weight"));
        }
        for (m, w) in v.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::domain(format!(
                    "weight {m} must be positive, got {w}"
                )));
            }
        }
        if !x.is_finite() {
            return Err(Error::domain(format!("x must be finite, got {x}")));
        }
        if q.iter().any(|qi| !qi.is_finite()) {
            return Err(Error::domain("quantities must be finite"));
        }
        Ok(PrimalPoint { v, x, q })
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

/// A point of the dual parameter set: utilities in (-inf,0)^M, marginal
/// y in (0,inf), quantities in R^J.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    u: Vec<f64>,
    y: f64,
    q: Vec<f64>,
}

impl DualPoint {
    pub fn new(u: Vec<f64>, y: f64, q: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::domain("dual point needs at least one utility level"));
        }
        for (m, um) in u.iter().enumerate() {
            if !um.is_finite() || *um >= 0.0 {
                return Err(Error::domain(format!(
                    "utility level {m} must be negative, got {um}"
                )));
            }
        }
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::domain(format!("y must be positive, got {y}")));
        }
        if q.iter().any(|qi| !qi.is_finite()) {
            return Err(Error::domain("quantities must be finite"));
        }
        Ok(DualPoint { u, y, q })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

/// Value, gradient, and all second-derivative blocks of a primal function
/// at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub grad_v: Vec<f64>,
    pub grad_x: f64,
    pub grad_q: Vec<f64>,
    pub hess_vv: Matrix,
    pub hess_vx: Vec<f64>,
    pub hess_xx: f64,
    pub hess_vq: Matrix,
    pub hess_xq: Vec<f64>,
    pub hess_qq: Matrix,
}

impl Evaluation {
    /// Gradient packed as (v..., x, q...).
    pub fn gradient_flat(&self) -> Vec<f64> {
        let mut g = self.grad_v.clone();
        g.push(self.grad_x);
        g.extend_from_slice(&self.grad_q);
        g
    }

    /// Full symmetric Hessian packed in (v..., x, q...) order.
    pub fn hessian_flat(&self) -> Matrix {
        let m = self.grad_v.len();
        let j = self.grad_q.len();
        let n = m + 1 + j;
        let mut h = Matrix::zeros(n, n);
        for l in 0..m {
            for k in 0..m {
                h.set(l, k, self.hess_vv.get(l, k));
            }
            h.set(l, m, self.hess_vx[l]);
            h.set(m, l, self.hess_vx[l]);
            for jj in 0..j {
                h.set(l, m + 1 + jj, self.hess_vq.get(l, jj));
                h.set(m + 1 + jj, l, self.hess_vq.get(l, jj));
            }
        }
        h.set(m, m, self.hess_xx);
        for jj in 0..j {
            h.set(m, m + 1 + jj, self.hess_xq[jj]);
            h.set(m + 1 + jj, m, self.hess_xq[jj]);
            for ii in 0..j {
                h.set(m + 1 + ii, m + 1 + jj, self.hess_qq.get(ii, jj));
            }
        }
        h
    }
}

/// Evaluation surface for a primal saddle function: value, gradient, and
/// second-derivative blocks at any admissible point. Implementations must
/// be reentrant.
pub trait PrimalEvaluator {
    fn agent_count(&self) -> usize;
    fn quantity_count(&self) -> usize;
    fn evaluate(&self, v: &[f64], x: f64, q: &[f64]) -> Result<Evaluation>;

    /// Starting point for the dual-to-primal Newton solve. The default is
    /// the unit-tolerance proxy; evaluators with known agents override it
    /// with the exponential closed form, which is exact for pure
    /// exponential families.
    fn start_point(&self, u: &[f64], y: f64, _q: &[f64]) -> (Vec<f64>, f64) {
        let v0: Vec<f64> = u.iter().map(|um| y / (-um)).collect();
        let x0 = v0.iter().map(|vm| (vm / y).ln()).sum();
        (v0, x0)
    }
}

/// Exponential-proxy start shared by the agent-backed evaluators:
/// v0^m = t_m(0) y / (-u^m) and x0 = sum_m t_m(0) ln(v0^m / y) + shift,
/// where `log_shift` absorbs any additive endowment structure.
pub(crate) fn exponential_start(
    agents: &AgentSet,
    u: &[f64],
    y: f64,
    log_shift: f64,
) -> (Vec<f64>, f64) {
    let mut v0 = Vec::with_capacity(u.len());
    let mut x0 = 0.0;
    let mut total_t = 0.0;
    for (m, um) in u.iter().enumerate() {
        let t = agents.agent(m).risk_tolerance(0.0);
        let vm = t * y / (-um);
        x0 += t * (vm / y).ln();
        total_t += t;
        v0.push(vm);
    }
    (v0, x0 + total_t * log_shift)
}

/// A conjugate pair of points with the function values on both sides.
#[derive(Clone, Debug)]
pub struct SaddlePair {
    pub primal: PrimalPoint,
    pub dual: DualPoint,
    /// f at the primal point; equals <u, v> at a true pair.
    pub f_value: f64,
    /// g at the dual point; equals x * y at a true pair.
    pub g_value: f64,
}

/// Dual point from a primal point: one gradient evaluation, no iteration.
pub fn conjugate_point_from_primal(f: &dyn PrimalEvaluator, a: &PrimalPoint) -> Result<SaddlePair> {
    let eval = f.evaluate(a.v(), a.x(), a.q())?;
    let dual = DualPoint::new(eval.grad_v.clone(), eval.grad_x, a.q().to_vec())?;
    Ok(SaddlePair {
        g_value: a.x() * eval.grad_x,
        f_value: eval.value,
        primal: a.clone(),
        dual,
    })
}

const MAX_NEWTON_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

/// Primal point from a dual point: damped Newton in (ln v, x) on the
/// gradient equations df/dv = u, df/dx = y, using the analytic
/// second-derivative blocks as the Jacobian.
pub fn conjugate_point_from_dual(
    f: &dyn PrimalEvaluator,
    b: &DualPoint,
    guess: Option<&PrimalPoint>,
) -> Result<SaddlePair> {
    let m_count = f.agent_count();
    if b.u().len() != m_count {
        return Err(Error::contract(format!(
            "dual point has {} utility levels for {} agents",
            b.u().len(),
            m_count
        )));
    }
    if b.q().len() != f.quantity_count() {
        return Err(Error::contract(format!(
            "dual point has {} quantities, evaluator expects {}",
            b.q().len(),
            f.quantity_count()
        )));
    }

    let (mut v, mut x) = match guess {
        Some(a) => (a.v().to_vec(), a.x()),
        None => f.start_point(b.u(), b.y(), b.q()),
    };
    let mut xi: Vec<f64> = v.iter().map(|w| w.ln()).collect();

    // scaled residual: per-component relative to |u^m| and y
    let residual = |eval: &Evaluation| -> Vec<f64> {
        let mut rho: Vec<f64> = eval
            .grad_v
            .iter()
            .zip(b.u())
            .map(|(gm, um)| (gm - um) / um.abs())
            .collect();
        rho.push((eval.grad_x - b.y()) / b.y());
        rho
    };
    let sup = |rho: &[f64]| rho.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));

    let mut eval = match f.evaluate(&v, x, b.q()) {
        Ok(e) => e,
        Err(_) => {
            // retreat to a neutral start if the proxy lands out of range
            v = vec![1.0; m_count];
            x = 0.0;
            xi = vec![0.0; m_count];
            f.evaluate(&v, x, b.q())?
        }
    };
    let mut rho = residual(&eval);
    let mut norm = sup(&rho);

    for _ in 0..MAX_NEWTON_ITER {
        if norm <= NEWTON_TOL {
            let primal = PrimalPoint::new(v, x, b.q().to_vec())?;
            return Ok(SaddlePair {
                f_value: eval.value,
                g_value: x * b.y(),
                primal,
                dual: b.clone(),
            });
        }
        // Jacobian of the scaled residual w.r.t. (ln v, x)
        let n = m_count + 1;
        let mut jac = Matrix::zeros(n, n);
        for r in 0..m_count {
            let scale = b.u()[r].abs();
            for c in 0..m_count {
                jac.set(r, c, eval.hess_vv.get(r, c) * v[c] / scale);
            }
            jac.set(r, m_count, eval.hess_vx[r] / scale);
        }
        for c in 0..m_count {
            jac.set(m_count, c, eval.hess_vx[c] * v[c] / b.y());
        }
        jac.set(m_count, m_count, eval.hess_xx / b.y());

        let neg_rho: Vec<f64> = rho.iter().map(|r| -r).collect();
        let delta = lu_solve(&jac, &neg_rho)?;

        // damping: halve until the residual norm decreases
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xi_try: Vec<f64> = xi.iter().zip(&delta).map(|(z, d)| z + alpha * d).collect();
            // keep the weights representable
            if xi_try.iter().any(|z| z.abs() > 700.0) {
                alpha *= 0.5;
                continue;
            }
            let v_try: Vec<f64> = xi_try.iter().map(|z| z.exp()).collect();
            let x_try = x + alpha * delta[m_count];
            if let Ok(e) = f.evaluate(&v_try, x_try, b.q()) {
                let rho_try = residual(&e);
                let norm_try = sup(&rho_try);
                if norm_try < norm {
                    xi = xi_try;
                    v = v_try;
                    x = x_try;
                    eval = e;
                    rho = rho_try;
                    norm = norm_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::solver(format!(
                "saddle Newton stalled at residual {norm:e}"
            )));
        }
    }
    Err(Error::solver(format!(
        "saddle Newton did not converge after {MAX_NEWTON_ITER} iterations (residual {norm:e})"
    )))
}

/// The six normalized second-derivative blocks at a conjugate pair.
///
/// Primal side (computed from the second derivatives of f):
///   primal_vv(l,m) = v^l v^m / f_x * (f_vv - f_vx f_vx^T / f_xx)(l,m)
///   primal_vq(m,j) = v^m / f_x * (f_vq - f_vx f_xq^T / f_xx)(m,j)
///   primal_qq(i,j) = 1 / f_x * (-f_qq + f_xq f_xq^T / f_xx)(i,j)
///
/// Dual side (from the conjugacy identities, not from differencing g):
///   dual_uu = primal_vv^{-1}
///   dual_uq = -primal_vv^{-1} primal_vq
///   dual_qq = primal_vq^T primal_vv^{-1} primal_vq + primal_qq
#[derive(Clone, Debug)]
pub struct SecondOrderBundle {
    pub primal_vv: Matrix,
    pub primal_vq: Matrix,
    pub primal_qq: Matrix,
    pub dual_uu: Matrix,
    pub dual_uq: Matrix,
    pub dual_qq: Matrix,
}

pub fn second_order_bundle(
    f: &dyn PrimalEvaluator,
    pair: &SaddlePair,
) -> Result<SecondOrderBundle> {
    let eval = f.evaluate(pair.primal.v(), pair.primal.x(), pair.primal.q())?;
    bundle_from_evaluation(pair.primal.v(), &eval)
}

/// Assemble the bundle directly from an evaluation at the primal point.
pub fn bundle_from_evaluation(v: &[f64], eval: &Evaluation) -> Result<SecondOrderBundle> {
    let m_count = v.len();
    let j_count = eval.grad_q.len();
    let fx = eval.grad_x;
    let fxx = eval.hess_xx;
    let signs_ok = fx > 0.0 && fxx < 0.0;
    if !signs_ok {
        return Err(Error::contract(format!(
            "evaluation violates the sign conditions: f_x = {fx:e}, f_xx = {fxx:e}"
        )));
    }

    let mut primal_vv = Matrix::zeros(m_count, m_count);
    for l in 0..m_count {
        for m in 0..m_count {
            let val = v[l] * v[m] / fx
                * (eval.hess_vv.get(l, m) - eval.hess_vx[l] * eval.hess_vx[m] / fxx);
            primal_vv.set(l, m, val);
        }
    }
    let mut primal_vq = Matrix::zeros(m_count, j_count);
    for m in 0..m_count {
        for j in 0..j_count {
            let val =
                v[m] / fx * (eval.hess_vq.get(m, j) - eval.hess_vx[m] * eval.hess_xq[j] / fxx);
            primal_vq.set(m, j, val);
        }
    }
    let mut primal_qq = Matrix::zeros(j_count, j_count);
    for i in 0..j_count {
        for j in 0..j_count {
            let val = (-eval.hess_qq.get(i, j) + eval.hess_xq[i] * eval.hess_xq[j] / fxx) / fx;
            primal_qq.set(i, j, val);
        }
    }

    let dual_uu = primal_vv.spd_inverse().map_err(|e| {
        Error::solver(format!(
            "weight-curvature block is not positive definite: {e}"
        ))
    })?;
    let (dual_uq, dual_qq) = if j_count == 0 {
        (Matrix::zeros(m_count, 0), Matrix::zeros(0, 0))
    } else {
        let solved = primal_vv.solve_spd(&primal_vq)?;
        let dual_uq = solved.scaled(-1.0);
        let dual_qq = primal_vq.transpose().mul(&solved).add(&primal_qq);
        (dual_uq, dual_qq)
    };
    Ok(SecondOrderBundle {
        primal_vv,
        primal_vq,
        primal_qq,
        dual_uu,
        dual_uq,
        dual_qq,
    })
}

/// Central-difference check of the envelope relation dg/dq = -df/dq.
/// Re-solves the saddle point at q +/- step e_j and returns the absolute
/// deviation |dg/dq^j + df/dq^j| per quantity coordinate.
pub fn envelope_check(f: &dyn PrimalEvaluator, pair: &SaddlePair, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    let j_count = f.quantity_count();
    let eval = f.evaluate(pair.primal.v(), pair.primal.x(), pair.primal.q())?;
    let mut deviations = Vec::with_capacity(j_count);
    for j in 0..j_count {
        let shifted = |sign: f64| -> Result<f64> {
            let mut q = pair.primal.q().to_vec();
            q[j] += sign * step;
            let b = DualPoint::new(pair.dual.u().to_vec(), pair.dual.y(), q)?;
            let moved = conjugate_point_from_dual(f, &b, Some(&pair.primal))?;
            Ok(moved.g_value)
        };
        let g_plus = shifted(1.0)?;
        let g_minus = shifted(-1.0)?;
        let dg_dq = (g_plus - g_minus) / (2.0 * step);
        deviations.push((dg_dq + eval.grad_q[j]).abs());
    }
    Ok(deviations)
}

/// The aggregate utility r(v, x) seen as a primal function with no
/// quantity dependence.
pub struct AggregateEvaluator<'a> {
    agents: &'a AgentSet,
}

impl<'a> AggregateEvaluator<'a> {
    pub fn new(agents: &'a AgentSet) -> Self {
        AggregateEvaluator { agents }
    }
}

impl PrimalEvaluator for AggregateEvaluator<'_> {
    fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn quantity_count(&self) -> usize {
        0
    }

    fn evaluate(&self, v: &[f64], x: f64, q: &[f64]) -> Result<Evaluation> {
        if !q.is_empty() {
            return Err(Error::contract("aggregate evaluator takes no quantities"));
        }
        let weights = crate::aggregate::WeightVector::new(v.to_vec())?;
        let d = crate::aggregate::r_hessian(self.agents, &weights, x)?;
        let m = v.len();
        Ok(Evaluation {
            value: d.value,
            grad_v: d.grad_v,
            grad_x: d.grad_x,
            grad_q: Vec::new(),
            hess_vv: d.hess_vv,
            hess_vx: d.hess_vx,
            hess_xx: d.hess_xx,
            hess_vq: Matrix::zeros(m, 0),
            hess_xq: Vec::new(),
            hess_qq: Matrix::zeros(0, 0),
        })
    }

    fn start_point(&self, u: &[f64], y: f64, _q: &[f64]) -> (Vec<f64>, f64) {
        exponential_start(self.agents, u, y, 0.0)
    }
}

/// Closed-form conjugate value for pure exponential agent sets:
/// g(u, 1) = sum_m t_m ln(t_m / (-u^m)). Used as an independent oracle.
pub fn exponential_conjugate_value(agents: &AgentSet, u: &[f64]) -> Option<f64> {
    if !agents.all_exponential() || u.len() != agents.len() {
        return None;
    }
    let mut g = 0.0;
    for (m, um) in u.iter().enumerate() {
        let t = agents.agent(m).risk_tolerance(0.0);
        g += t * (t / (-um)).ln();
    }
    Some(g)
}
