//! The weighted sup-convolution aggregate utility
//!
//!   r(v, x) = max { sum_m v^m u_m(x^m) : x^1 + ... + x^M = x }
//!
//! together with the maximizing allocation and every first and second
//! derivative in closed form through the agents' risk tolerances.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::utility::AgentSet;

/// Strictly positive Pareto weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::domain("weight vector must be nonempty"));
        }
        for (m, w) in v.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::domain(format!(
                    "weight {m} must be positive, got {w}"
                )));
            }
        }
        Ok(WeightVector(v))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, z: f64) -> Result<Self> {
        WeightVector::new(self.0.iter().map(|w| w * z).collect())
    }

    /// Normalize onto the open simplex.
    pub fn normalized(&self) -> WeightVector {
        let total: f64 = self.0.iter().sum();
        WeightVector(self.0.iter().map(|w| w / total).collect())
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The maximizing allocation and its marginal data.
#[derive(Clone, Debug)]
pub struct AllocationResult {
    /// Per-agent cash amounts summing to x.
    pub x_hat: Vec<f64>,
    /// Common weighted marginal utility, equal to dr/dx.
    pub lambda: f64,
    /// Per-agent risk tolerances t_m(x_hat^m).
    pub tolerances: Vec<f64>,
    /// Sum of the tolerances.
    pub total_tolerance: f64,
}

/// Value, gradient, and second-order data of r at one point.
#[derive(Clone, Debug)]
pub struct AggregateDerivatives {
    pub value: f64,
    /// dr/dx = lambda.
    pub grad_x: f64,
    /// dr/dv^m = u_m(x_hat^m).
    pub grad_v: Vec<f64>,
    /// d2r/dx2 = -grad_x / total tolerance.
    pub hess_xx: f64,
    /// d2r/dv^m dx.
    pub hess_vx: Vec<f64>,
    /// d2r/dv^l dv^m.
    pub hess_vv: Matrix,
    /// The normalized weight-curvature matrix: diagonal with the per-agent
    /// risk tolerances on the diagonal.
    pub weight_curvature: Matrix,
    /// d x_hat^m / dx.
    pub alloc_sens_x: Vec<f64>,
    /// Entry (l, m) holds v^l * d x_hat^m / d v^l.
    pub alloc_sens_v: Matrix,
    pub allocation: AllocationResult,
}

const MAX_LAMBDA_ITER: usize = 200;

/// Solve the first-order conditions v^m u'_m(x_hat^m) = lambda,
/// sum_m x_hat^m = x. The residual sum is strictly decreasing in lambda, so
/// a geometric bracket plus Newton in log lambda converges unconditionally.
pub fn solve_allocation(agents: &AgentSet, v: &WeightVector, x: f64) -> Result<AllocationResult> {
    let m_count = agents.len();
    if v.len() != m_count {
        return Err(Error::contract(format!(
            "weight vector has {} components for {} agents",
            v.len(),
            m_count
        )));
    }
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")));
    }
    if m_count == 1 {
        let lambda = v[0] * agents.agent(0).eval(x, 1)?;
        let t = agents.agent(0).risk_tolerance(x);
        return Ok(AllocationResult {
            x_hat: vec![x],
            lambda,
            tolerances: vec![t],
            total_tolerance: t,
        });
    }

    // scale-free initial guess, exact for symmetric exponentials
    let mut log_lambda = {
        let mut acc = 0.0;
        for (m, w) in v.components().iter().enumerate() {
            acc += w.ln() + agents.agent(m).log_marginal(x / m_count as f64);
        }
        acc / m_count as f64
    };

    let log_v: Vec<f64> = v.components().iter().map(|w| w.ln()).collect();
    let mut warm: Vec<Option<f64>> = vec![None; m_count];
    let residual = |log_l: f64, warm: &mut Vec<Option<f64>>| -> Result<(Vec<f64>, f64, f64)> {
        let mut x_hat = Vec::with_capacity(m_count);
        let mut total_t = 0.0;
        for m in 0..m_count {
            // v^m u'_m(x_hat^m) = lambda  <=>  u'_m(x_hat^m) = exp(log_l - ln v^m)
            let y = (log_l - log_v[m]).exp();
            let xm = agents.agent(m).inverse_marginal_guided(y, warm[m])?;
            warm[m] = Some(xm);
            total_t += agents.agent(m).risk_tolerance(xm);
            x_hat.push(xm);
        }
        let r: f64 = x_hat.iter().sum::<f64>() - x;
        Ok((x_hat, r, total_t))
    };

    let tol = 1e-13 * x.abs().max(1.0);
    let (mut x_hat, mut r, mut total_t) = residual(log_lambda, &mut warm)?;

    // bracket the root: the residual decreases in log lambda
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    if r > 0.0 {
        lo = log_lambda;
    } else {
        hi = log_lambda;
    }
    let mut step = 1.0;
    while !(lo.is_finite() && hi.is_finite()) && r.abs() > tol {
        let next = if r > 0.0 {
            log_lambda + step
        } else {
            log_lambda - step
        };
        step *= 2.0;
        let (xh, rn, tt) = residual(next, &mut warm)?;
        log_lambda = next;
        x_hat = xh;
        r = rn;
        total_t = tt;
        if r > 0.0 {
            lo = log_lambda;
        } else {
            hi = log_lambda;
        }
        if step > 1e8 {
            return Err(Error::solver("allocation bracket expansion diverged"));
        }
    }

    let mut iter = 0;
    while r.abs() > tol {
        iter += 1;
        if iter > MAX_LAMBDA_ITER {
            return Err(Error::solver(format!(
                "allocation solve did not converge after {MAX_LAMBDA_ITER} iterations (residual {r:e})"
            )));
        }
        // dr/d(log lambda) = -total_t
        let mut next = log_lambda + r / total_t;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let (xh, rn, tt) = residual(next, &mut warm)?;
        log_lambda = next;
        x_hat = xh;
        r = rn;
        total_t = tt;
        if r > 0.0 {
            lo = log_lambda;
        } else {
            hi = log_lambda;
        }
    }

    let tolerances: Vec<f64> = x_hat
        .iter()
        .enumerate()
        .map(|(m, xm)| agents.agent(m).risk_tolerance(*xm))
        .collect();
    let total_tolerance: f64 = tolerances.iter().sum();
    Ok(AllocationResult {
        x_hat,
        lambda: log_lambda.exp(),
        tolerances,
        total_tolerance,
    })
}

/// First-order data of r at (v, x).
#[derive(Clone, Debug)]
pub struct AggregateGradient {
    pub value: f64,
    /// dr/dx = lambda.
    pub grad_x: f64,
    /// dr/dv^m = u_m(x_hat^m).
    pub grad_v: Vec<f64>,
    pub allocation: AllocationResult,
}

/// r, dr/dx, and dr/dv at (v, x).
pub fn r_and_gradient(agents: &AgentSet, v: &WeightVector, x: f64) -> Result<AggregateGradient> {
    let alloc = solve_allocation(agents, v, x)?;
    let mut value = 0.0;
    let mut grad_v = Vec::with_capacity(agents.len());
    for m in 0..agents.len() {
        let um = agents.agent(m).eval(alloc.x_hat[m], 0)?;
        grad_v.push(um);
        value += v[m] * um;
    }
    Ok(AggregateGradient {
        value,
        grad_x: alloc.lambda,
        grad_v,
        allocation: alloc,
    })
}

/// Full first- and second-order data of r at (v, x).
pub fn r_hessian(agents: &AgentSet, v: &WeightVector, x: f64) -> Result<AggregateDerivatives> {
    let alloc = solve_allocation(agents, v, x)?;
    let m_count = agents.len();
    let lambda = alloc.lambda;
    let total_t = alloc.total_tolerance;

    let mut value = 0.0;
    let mut grad_v = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let um = agents.agent(m).eval(alloc.x_hat[m], 0)?;
        grad_v.push(um);
        value += v[m] * um;
    }

    let hess_xx = -lambda / total_t;
    let mut hess_vx = Vec::with_capacity(m_count);
    let mut alloc_sens_x = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let tm = alloc.tolerances[m];
        alloc_sens_x.push(tm / total_t);
        hess_vx.push(lambda * tm / (total_t * v[m]));
    }
    let mut hess_vv = Matrix::zeros(m_count, m_count);
    let mut alloc_sens_v = Matrix::zeros(m_count, m_count);
    for l in 0..m_count {
        for m in 0..m_count {
            let tl = alloc.tolerances[l];
            let tm = alloc.tolerances[m];
            let delta = if l == m { 1.0 } else { 0.0 };
            alloc_sens_v.set(l, m, tm * (delta - tl / total_t));
            hess_vv.set(l, m, lambda * tl * (delta - tm / total_t) / (v[l] * v[m]));
        }
    }
    let weight_curvature = Matrix::from_diag(&alloc.tolerances);

    Ok(AggregateDerivatives {
        value,
        grad_x: lambda,
        grad_v,
        hess_xx,
        hess_vx,
        hess_vv,
        weight_curvature,
        alloc_sens_x,
        alloc_sens_v,
        allocation: alloc,
    })
}

/// Grid maximization of sum_m v^m u_m(x^m) over allocations summing to x,
/// centered at the equal split. A lower-bound oracle, independent of the
/// first-order-condition solver.
pub fn brute_force_r(
    agents: &AgentSet,
    v: &WeightVector,
    x: f64,
    grid_half_width: f64,
    grid_points: usize,
) -> Result<f64> {
    let m_count = agents.len();
    if v.len() != m_count {
        return Err(Error::contract("weight/agent count mismatch"));
    }
    if grid_points < 3 {
        return Err(Error::domain(format!(
            "grid needs at least 3 points, got {grid_points}"
        )));
    }
    if m_count == 1 {
        return Ok(v[0] * agents.agent(0).eval(x, 0)?);
    }
    let center = x / m_count as f64;
    let step = 2.0 * grid_half_width / (grid_points - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut alloc = vec![0.0; m_count];
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        agents: &AgentSet,
        v: &WeightVector,
        x: f64,
        center: f64,
        step: f64,
        grid_points: usize,
        depth: usize,
        partial: f64,
        partial_sum: f64,
        alloc: &mut Vec<f64>,
        best: &mut f64,
    ) {
        let m_count = agents.len();
        if depth == m_count - 1 {
            let last = x - partial_sum;
            if let Ok(u) = agents.agent(depth).eval(last, 0) {
                let total = partial + v[depth] * u;
                if total > *best {
                    *best = total;
                }
            }
            return;
        }
        for i in 0..grid_points {
            let xi = center - (grid_points - 1) as f64 * 0.5 * step + i as f64 * step;
            if let Ok(u) = agents.agent(depth).eval(xi, 0) {
                alloc[depth] = xi;
                recurse(
                    agents,
                    v,
                    x,
                    center,
                    step,
                    grid_points,
                    depth + 1,
                    partial + v[depth] * u,
                    partial_sum + xi,
                    alloc,
                    best,
                );
            }
        }
    }
    recurse(
        agents,
        v,
        x,
        center,
        step,
        grid_points,
        0,
        0.0,
        0.0,
        &mut alloc,
        &mut best,
    );
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::UtilitySpec;

    fn exp_agents(rates: &[f64]) -> AgentSet {
        AgentSet::new(
            rates
                .iter()
                .map(|r| UtilitySpec::exponential(*r).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn weights(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn allocation_symmetric_exponentials() {
        let agents = exp_agents(&[1.0, 2.0]);
        let alloc = solve_allocation(&agents, &weights(&[1.0, 1.0]), 0.0).unwrap();
        assert!(alloc.x_hat[0].abs() < 1e-12);
        assert!(alloc.x_hat[1].abs() < 1e-12);
        assert!((alloc.lambda - 1.0).abs() < 1e-12);
        assert!((alloc.total_tolerance - 1.5).abs() < 1e-12);
    }

    #[test]
    fn allocation_single_agent() {
        let agents = exp_agents(&[1.0]);
        let alloc = solve_allocation(&agents, &weights(&[3.0]), 5.0).unwrap();
        assert_eq!(alloc.x_hat, vec![5.0]);
        let expect = 3.0 * agents.agent(0).eval(5.0, 1).unwrap();
        assert!((alloc.lambda - expect).abs() < 1e-15 * expect);
    }

    #[test]
    fn allocation_tilted_weights() {
        // closed form: T = 1.5, sum t ln v = 0.5, lambda = e^{1/3}
        let agents = exp_agents(&[1.0, 2.0]);
        let e = std::f64::consts::E;
        let alloc = solve_allocation(&agents, &weights(&[1.0, e]), 0.0).unwrap();
        assert!((alloc.x_hat[0] + 1.0 / 3.0).abs() < 1e-12);
        assert!((alloc.x_hat[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((alloc.lambda - (1.0f64 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn gradient_hand_values() {
        let agents = exp_agents(&[1.0, 2.0]);
        let d = r_and_gradient(&agents, &weights(&[1.0, 1.0]), 0.0).unwrap();
        assert!((d.value + 1.5).abs() < 1e-12);
        assert!((d.grad_x - 1.0).abs() < 1e-12);
        assert!((d.grad_v[0] + 1.0).abs() < 1e-12);
        assert!((d.grad_v[1] + 0.5).abs() < 1e-12);

        let single = exp_agents(&[1.0]);
        let d1 = r_and_gradient(&single, &weights(&[1.0]), 0.0).unwrap();
        assert!((d1.value + 1.0).abs() < 1e-15);
        assert!((d1.grad_x - 1.0).abs() < 1e-15);
        assert!((d1.grad_v[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_positive_homogeneity() {
        let agents = exp_agents(&[1.0, 2.0]);
        let d = r_and_gradient(&agents, &weights(&[2.0, 2.0]), 0.0).unwrap();
        assert!((d.value + 3.0).abs() < 1e-12);
        assert!((d.grad_x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_hand_values() {
        let agents = exp_agents(&[1.0, 2.0]);
        let d = r_hessian(&agents, &weights(&[1.0, 1.0]), 0.0).unwrap();
        assert_eq!(d.weight_curvature.get(0, 1), 0.0);
        assert_eq!(d.weight_curvature.get(1, 0), 0.0);
        assert!((d.weight_curvature.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((d.weight_curvature.get(1, 1) - 0.5).abs() < 1e-12);
        assert!((d.hess_xx + 2.0 / 3.0).abs() < 1e-12);

        let single = exp_agents(&[1.0]);
        let d1 = r_hessian(&single, &weights(&[1.0]), 0.0).unwrap();
        assert_eq!(d1.alloc_sens_x, vec![1.0]);
    }

    #[test]
    fn brute_force_examples() {
        let agents = exp_agents(&[1.0, 1.0]);
        let v = weights(&[1.0, 1.0]);
        let grid = brute_force_r(&agents, &v, 0.0, 4.0, 401).unwrap();
        assert!(
            (grid + 2.0).abs() < 1e-12,
            "grid includes the exact optimum"
        );

        let single = exp_agents(&[2.0]);
        let exact = brute_force_r(&single, &weights(&[1.5]), 0.7, 1.0, 11).unwrap();
        assert_eq!(exact, 1.5 * single.agent(0).eval(0.7, 0).unwrap());
    }

    #[test]
    fn brute_force_is_lower_bound() {
        let agents = exp_agents(&[1.0, 2.0]);
        let v = weights(&[1.3, 0.4]);
        for x in [-2.0, 0.0, 3.0] {
            let d = r_and_gradient(&agents, &v, x).unwrap();
            let grid = brute_force_r(&agents, &v, x, 3.0, 151).unwrap();
            assert!(
                grid <= d.value + 1e-9,
                "grid max cannot exceed the supremum"
            );
            assert!(grid >= d.value - 1e-2, "fine grid should come close");
        }
    }

    #[test]
    fn weight_vector_rejects_nonpositive() {
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
    }
}
