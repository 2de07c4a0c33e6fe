//! Verification suites: every identity, derivative formula, and curvature
//! bound in the library checked against an independent path -- central
//! finite differences, grid brute force, closed exponential forms, or a
//! second assembly route. No check compares a formula against itself.

use serde::{Deserialize, Serialize};

use crate::aggregate::{brute_force_r, r_and_gradient, r_hessian, solve_allocation, WeightVector};
use crate::error::{Error, Result};
use crate::field::{
    curvature_matrix_direct, field_at, invert_field, pareto_allocation_field, spectral_bound_check,
    tolerance_matrix_from, tolerance_representation, NodeFieldEvaluator, NodeRef, ScenarioTree,
};
use crate::linalg::{dot, Matrix};
use crate::saddle::{
    bundle_from_evaluation, conjugate_point_from_dual, conjugate_point_from_primal, envelope_check,
    exponential_conjugate_value, second_order_bundle, DualPoint, PrimalEvaluator, PrimalPoint,
    SaddlePair,
};
use crate::utility::AgentSet;

/// Relative error is meaningless near zero; below this magnitude the
/// comparison switches to absolute error.
const NEAR_ZERO: f64 = 1e-8;

/// Per-check tolerances. Defaults follow the standard central-difference
/// error balance in double precision; the comparison tolerances (not the
/// steps) scale uniformly under `scaled`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// analytic gradient vs central differences of the value
    pub gradient: f64,
    /// analytic second derivatives vs central differences of the gradient
    pub hessian: f64,
    /// off-diagonal remainder of the weight-curvature assembly
    pub diagonality: f64,
    /// positive homogeneity of the aggregate in the weights
    pub homogeneity: f64,
    /// value against the weighted gradient sum
    pub euler: f64,
    /// closed exponential forms for r, lambda, the allocation, and g
    pub closed_form: f64,
    /// primal -> dual -> primal reconstruction
    pub round_trip: f64,
    /// f = <u,v> and g = x y at conjugate pairs
    pub closing: f64,
    /// grid minimax against the conjugate value
    pub minimax: f64,
    /// sup-norm of dual-weight times primal-weight block minus identity
    pub inverse_identity: f64,
    /// dual cross/quantity blocks vs finite differences of the numeric conjugate
    pub block_identity: f64,
    /// row/column sum identities of the normalized blocks
    pub sum_identity: f64,
    /// |dg/dq + df/dq| in the envelope check
    pub envelope: f64,
    /// step used by the envelope finite difference
    pub envelope_step: f64,
    /// tower property of node evaluations
    pub tower: f64,
    /// expected utility of the allocation vs differenced node value
    pub consistency: f64,
    /// reweighted tolerance assembly vs direct curvature assembly
    pub tolerance_assembly: f64,
    /// martingale property of the aggregate-tolerance process
    pub martingale: f64,
    /// slack on the [1/c, c] band checks
    pub bound_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gradient: 1e-6,
            hessian: 1e-4,
            diagonality: 1e-12,
            homogeneity: 1e-10,
            euler: 1e-10,
            closed_form: 1e-10,
            round_trip: 1e-8,
            closing: 1e-9,
            minimax: 1e-6,
            inverse_identity: 1e-7,
            block_identity: 1e-4,
            sum_identity: 1e-8,
            envelope: 1e-5,
            envelope_step: 1e-4,
            tower: 1e-10,
            consistency: 1e-9,
            tolerance_assembly: 1e-8,
            martingale: 1e-10,
            bound_slack: 1e-9,
        }
    }
}

impl Tolerances {
    /// Multiply every comparison tolerance by `factor` (steps unchanged).
    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            gradient: self.gradient * factor,
            hessian: self.hessian * factor,
            diagonality: self.diagonality * factor,
            homogeneity: self.homogeneity * factor,
            euler: self.euler * factor,
            closed_form: self.closed_form * factor,
            round_trip: self.round_trip * factor,
            closing: self.closing * factor,
            minimax: self.minimax * factor,
            inverse_identity: self.inverse_identity * factor,
            block_identity: self.block_identity * factor,
            sum_identity: self.sum_identity * factor,
            envelope: self.envelope * factor,
            envelope_step: self.envelope_step,
            tower: self.tower * factor,
            consistency: self.consistency * factor,
            tolerance_assembly: self.tolerance_assembly * factor,
            martingale: self.martingale * factor,
            bound_slack: self.bound_slack * factor,
        }
    }
}

/// Seeded sweep configuration; identical seeds give bit-identical reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub n_points: usize,
    /// weights drawn log-uniformly from this range
    pub v_log_range: (f64, f64),
    pub x_range: (f64, f64),
    pub q_range: (f64, f64),
    /// relative step for first-derivative differences
    pub fd_step: f64,
    /// relative step for second-derivative differences
    pub hess_fd_step: f64,
    /// replaces the agent set's curvature constant in the band checks
    pub c_override: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 42,
            n_points: 100,
            v_log_range: (0.1, 10.0),
            x_range: (-5.0, 5.0),
            q_range: (-2.0, 2.0),
            fd_step: 1e-5,
            hess_fd_step: 1e-4,
            c_override: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::domain("sweep needs at least one point"));
        }
        if !(self.v_log_range.0 > 0.0 && self.v_log_range.1 >= self.v_log_range.0) {
            return Err(Error::domain("weight range must be positive and ordered"));
        }
        if self.x_range.1 < self.x_range.0 || self.q_range.1 < self.q_range.0 {
            return Err(Error::domain("sweep ranges must be ordered"));
        }
        if !(self.fd_step > 0.0 && self.hess_fd_step > 0.0) {
            return Err(Error::domain("finite-difference steps must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one named check over a sweep.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub points_tested: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<String>,
}

/// Accumulator behind a CheckReport. `compare` uses relative error except
/// for targets below NEAR_ZERO; band and boolean checks record violations
/// as absolute errors.
struct Check {
    name: String,
    tolerance: f64,
    points: usize,
    max_abs: f64,
    max_eff: f64,
    worst: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            tolerance,
            points: 0,
            max_abs: 0.0,
            max_eff: 0.0,
            worst: None,
        }
    }

    fn record(&mut self, abs: f64, eff: f64, ctx: impl FnOnce() -> String) {
        self.points += 1;
        if abs > self.max_abs {
            self.max_abs = abs;
        }
        if eff > self.max_eff {
            self.max_eff = eff;
            self.worst = Some(ctx());
        }
    }

    fn compare(&mut self, got: f64, want: f64, ctx: impl FnOnce() -> String) {
        let abs = (got - want).abs();
        let eff = if want.abs() < NEAR_ZERO {
            abs
        } else {
            abs / want.abs()
        };
        self.record(abs, eff, || {
            format!("got {got:e}, want {want:e} at {}", ctx())
        });
    }

    fn within(&mut self, value: f64, lo: f64, hi: f64, ctx: impl FnOnce() -> String) {
        let viol = (lo - value).max(value - hi).max(0.0);
        self.record(viol, viol, || {
            format!("{value:e} outside [{lo:e}, {hi:e}] at {}", ctx())
        });
    }

    fn check_true(&mut self, ok: bool, ctx: impl FnOnce() -> String) {
        let viol = if ok { 0.0 } else { f64::MAX };
        self.record(viol, viol, ctx);
    }

    fn fail(&mut self, msg: String) {
        self.record(f64::MAX, f64::MAX, || msg);
    }

    fn report(self) -> CheckReport {
        let passed = self.max_eff <= self.tolerance;
        CheckReport {
            name: self.name,
            points_tested: self.points,
            max_abs_error: self.max_abs,
            max_rel_error: self.max_eff,
            tolerance: self.tolerance,
            passed,
            worst_case: if passed { None } else { self.worst },
        }
    }
}

/// SplitMix64: tiny, seedable, and identical on every platform.
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

/// Central finite differences of a scalar function, one coordinate at a
/// time, with per-coordinate step `step * max(1, |x_i|)`.
pub fn finite_difference_gradient<F>(f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    let mut grad = Vec::with_capacity(point.len());
    let mut work = point.to_vec();
    for i in 0..point.len() {
        let h = step * point[i].abs().max(1.0);
        work[i] = point[i] + h;
        let plus = f(&work)?;
        work[i] = point[i] - h;
        let minus = f(&work)?;
        work[i] = point[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Closed-form aggregate data for pure exponential agent sets:
/// with tolerances t_m = 1/rate_m and T = sum t_m,
///   lambda = exp((sum t_m ln v^m - x) / T),
///   x_hat^m = t_m ln(v^m / lambda),
///   r = -T exp(-x/T) prod (v^m)^{t_m/T}.
pub struct ExponentialOracle {
    pub value: f64,
    pub lambda: f64,
    pub x_hat: Vec<f64>,
}

pub fn exponential_aggregate_oracle(
    agents: &AgentSet,
    v: &[f64],
    x: f64,
) -> Option<ExponentialOracle> {
    if !agents.all_exponential() || v.len() != agents.len() {
        return None;
    }
    let t: Vec<f64> = (0..agents.len())
        .map(|m| agents.agent(m).risk_tolerance(0.0))
        .collect();
    let total: f64 = t.iter().sum();
    let log_lambda = (t.iter().zip(v).map(|(tm, vm)| tm * vm.ln()).sum::<f64>() - x) / total;
    let lambda = log_lambda.exp();
    let x_hat: Vec<f64> = t
        .iter()
        .zip(v)
        .map(|(tm, vm)| tm * (vm.ln() - log_lambda))
        .collect();
    let value = -total
        * (-x / total
            + t.iter()
                .zip(v)
                .map(|(tm, vm)| tm / total * vm.ln())
                .sum::<f64>())
        .exp();
    Some(ExponentialOracle {
        value,
        lambda,
        x_hat,
    })
}

/// Named verification suites. The tokens are the CLI surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Assumptions,
    Aggregate,
    Conjugacy,
    Identities,
    Field,
    Bounds,
    ToleranceMatrix,
    Envelope,
    Boundary,
    All,
}

impl Suite {
    pub const ALL_NAMES: [&'static str; 10] = [
        "assumptions",
        "aggregate",
        "conjugacy",
        "identities",
        "field",
        "bounds",
        "lemma19",
        "envelope",
        "boundary",
        "all",
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Assumptions => "assumptions",
            Suite::Aggregate => "aggregate",
            Suite::Conjugacy => "conjugacy",
            Suite::Identities => "identities",
            Suite::Field => "field",
            Suite::Bounds => "bounds",
            Suite::ToleranceMatrix => "lemma19",
            Suite::Envelope => "envelope",
            Suite::Boundary => "boundary",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "assumptions" => Ok(Suite::Assumptions),
            "aggregate" => Ok(Suite::Aggregate),
            "conjugacy" => Ok(Suite::Conjugacy),
            "identities" => Ok(Suite::Identities),
            "field" => Ok(Suite::Field),
            "bounds" => Ok(Suite::Bounds),
            "lemma19" => Ok(Suite::ToleranceMatrix),
            "envelope" => Ok(Suite::Envelope),
            "boundary" => Ok(Suite::Boundary),
            "all" => Ok(Suite::All),
            other => Err(Error::parse(format!(
                "unknown suite {other:?}; expected one of {}",
                Suite::ALL_NAMES.join(", ")
            ))),
        }
    }
}

/// Run one suite (or all of them) against the given problem. Deterministic
/// in the seed: each suite derives its own stream, so a suite's report is
/// identical whether run alone or as part of `all`.
pub fn run_suite(
    suite: Suite,
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    cfg.validate()?;
    match suite {
        Suite::Assumptions => suite_assumptions(cfg, agents),
        Suite::Aggregate => suite_aggregate(cfg, agents),
        Suite::Conjugacy => suite_conjugacy(cfg, agents, tree),
        Suite::Identities => suite_identities(cfg, agents, tree),
        Suite::Field => suite_field(cfg, agents, tree),
        Suite::Bounds => suite_bounds(cfg, agents, tree),
        Suite::ToleranceMatrix => suite_tolerance_matrix(cfg, agents, tree),
        Suite::Envelope => suite_envelope(cfg, agents, tree),
        Suite::Boundary => suite_boundary(cfg, agents),
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Assumptions,
                Suite::Aggregate,
                Suite::Conjugacy,
                Suite::Identities,
                Suite::Envelope,
                Suite::Field,
                Suite::Bounds,
                Suite::ToleranceMatrix,
                Suite::Boundary,
            ] {
                out.extend(run_suite(s, cfg, agents, tree)?);
            }
            Ok(out)
        }
    }
}

fn seed_for(cfg: &SweepConfig, salt: u64) -> Rng {
    Rng::new(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(salt))
}

fn draw_weights(rng: &mut Rng, cfg: &SweepConfig, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| rng.log_uniform(cfg.v_log_range.0, cfg.v_log_range.1))
        .collect()
}

fn draw_q(rng: &mut Rng, cfg: &SweepConfig, j: usize) -> Vec<f64> {
    (0..j)
        .map(|_| rng.uniform(cfg.q_range.0, cfg.q_range.1))
        .collect()
}

fn fmt_point(v: &[f64], x: f64, q: &[f64]) -> String {
    format!("v={v:?}, x={x:?}, q={q:?}")
}

// +/- log-spaced points spanning [-50, 50], zero included
fn sign_grid() -> Vec<f64> {
    let mut xs = vec![0.0];
    let mut v = 0.01;
    while v <= 50.0 {
        xs.push(v);
        xs.push(-v);
        v *= 10.0f64.sqrt();
    }
    xs
}

fn suite_assumptions(cfg: &SweepConfig, agents: &AgentSet) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let mut signs = Check::new("assumptions/signs", 0.0);
    let mut aversion = Check::new("assumptions/risk-aversion-band", 1e-12);
    let mut ratio = Check::new("assumptions/utility-ratio-band", 1e-12);
    let mut vanish = Check::new("assumptions/vanishes-at-infinity", 1e-10);
    let mut inverse = Check::new("assumptions/inverse-marginal-round-trip", 1e-10);
    let mut fd1 = Check::new("assumptions/finite-difference-order-1", tol.gradient);
    let mut fd2 = Check::new("assumptions/finite-difference-order-2", tol.gradient);

    for (idx, spec) in agents.agents().iter().enumerate() {
        let c = spec.c_bound();
        for x in sign_grid() {
            let ctx = || format!("agent {idx}, x={x:e}");
            let (u, du, ddu) = match (spec.eval(x, 0), spec.eval(x, 1), spec.eval(x, 2)) {
                (Ok(a), Ok(b), Ok(cc)) => (a, b, cc),
                _ => {
                    signs.fail(format!("evaluation failed at agent {idx}, x={x:e}"));
                    continue;
                }
            };
            signs.check_true(u < 0.0 && du > 0.0 && ddu < 0.0, ctx);
            aversion.within(-ddu / du, 1.0 / c, c, ctx);
            ratio.within(-du / u, 1.0 / c, c, ctx);

            match spec.inverse_marginal(du) {
                Ok(back) => inverse.compare(back, x, ctx),
                Err(e) => inverse.fail(format!("{e} at agent {idx}, x={x:e}")),
            }
            match spec.eval(spec.inverse_marginal(du).unwrap_or(x), 1) {
                Ok(forward) => inverse.compare(forward, du, ctx),
                Err(e) => inverse.fail(format!("{e} at agent {idx}, x={x:e}")),
            }

            let h = cfg.fd_step * x.abs().max(1.0);
            match (spec.eval(x + h, 0), spec.eval(x - h, 0)) {
                (Ok(p), Ok(m)) => fd1.compare((p - m) / (2.0 * h), du, ctx),
                _ => fd1.fail(format!("evaluation failed near agent {idx}, x={x:e}")),
            }
            match (spec.eval(x + h, 1), spec.eval(x - h, 1)) {
                (Ok(p), Ok(m)) => fd2.compare((p - m) / (2.0 * h), ddu, ctx),
                _ => fd2.fail(format!("evaluation failed near agent {idx}, x={x:e}")),
            }
        }
        let far = 45.0 / spec.min_rate();
        match spec.eval(far, 0) {
            Ok(u) => vanish.compare(u, 0.0, || format!("agent {idx}, x={far:e}")),
            Err(e) => vanish.fail(format!("{e} at agent {idx}")),
        }
    }
    Ok(vec![
        signs.report(),
        aversion.report(),
        ratio.report(),
        vanish.report(),
        inverse.report(),
        fd1.report(),
        fd2.report(),
    ])
}

fn suite_aggregate(cfg: &SweepConfig, agents: &AgentSet) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let c = cfg.c_override.unwrap_or_else(|| agents.c_global());
    let mut rng = seed_for(cfg, 1);

    let mut grad_fd = Check::new("aggregate/gradient-vs-differences", tol.gradient);
    let mut hess_fd = Check::new("aggregate/hessian-vs-differences", tol.hessian);
    let mut diag = Check::new("aggregate/weight-curvature-diagonal", tol.diagonality);
    let mut homog = Check::new("aggregate/positive-homogeneity", tol.homogeneity);
    let mut euler = Check::new("aggregate/euler-identity", tol.euler);
    let mut f7 = Check::new("aggregate/weighted-marginal-band", tol.bound_slack);
    let mut f9 = Check::new("aggregate/cross-curvature-band", tol.bound_slack);
    let mut f8 = Check::new("aggregate/tolerance-diagonal-band", tol.bound_slack);
    let mut closed = Check::new("aggregate/exponential-closed-form", tol.closed_form);
    let mut brute = Check::new("aggregate/grid-lower-bound", 0.0);
    let mut sens = Check::new("aggregate/allocation-sensitivities", tol.hessian);

    let value_at = |v: &[f64], x: f64| -> Result<f64> {
        let w = WeightVector::new(v.to_vec())?;
        Ok(r_and_gradient(agents, &w, x)?.value)
    };

    for i in 0..cfg.n_points {
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let ctx = || fmt_point(&v, x, &[]);
        let w = WeightVector::new(v.clone())?;
        let d = match r_hessian(agents, &w, x) {
            Ok(d) => d,
            Err(e) => {
                grad_fd.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };

        // first order vs differences of the value
        let hx = cfg.fd_step * x.abs().max(1.0);
        match (value_at(&v, x + hx), value_at(&v, x - hx)) {
            (Ok(p), Ok(m)) => grad_fd.compare((p - m) / (2.0 * hx), d.grad_x, ctx),
            _ => grad_fd.fail(format!("value evaluation failed at {}", ctx())),
        }
        for m in 0..m_count {
            let h = cfg.fd_step * v[m].abs().max(1.0);
            let mut vp = v.clone();
            vp[m] += h;
            let mut vm = v.clone();
            vm[m] -= h;
            match (value_at(&vp, x), value_at(&vm, x)) {
                (Ok(p), Ok(q)) => grad_fd.compare((p - q) / (2.0 * h), d.grad_v[m], ctx),
                _ => grad_fd.fail(format!("value evaluation failed at {}", ctx())),
            }
        }

        // second order vs differences of the analytic gradient
        let grad_at = |vv: &[f64], xx: f64| -> Result<(f64, Vec<f64>)> {
            let w = WeightVector::new(vv.to_vec())?;
            let g = r_and_gradient(agents, &w, xx)?;
            Ok((g.grad_x, g.grad_v))
        };
        let hx2 = cfg.hess_fd_step * x.abs().max(1.0);
        match (grad_at(&v, x + hx2), grad_at(&v, x - hx2)) {
            (Ok((gxp, _)), Ok((gxm, _))) => {
                hess_fd.compare((gxp - gxm) / (2.0 * hx2), d.hess_xx, ctx)
            }
            _ => hess_fd.fail(format!("gradient evaluation failed at {}", ctx())),
        }
        for m in 0..m_count {
            let h = cfg.hess_fd_step * v[m].abs().max(1.0);
            let mut vp = v.clone();
            vp[m] += h;
            let mut vm = v.clone();
            vm[m] -= h;
            match (grad_at(&vp, x), grad_at(&vm, x)) {
                (Ok((gxp, gvp)), Ok((gxm, gvm))) => {
                    hess_fd.compare((gxp - gxm) / (2.0 * h), d.hess_vx[m], ctx);
                    for l in 0..m_count {
                        hess_fd.compare((gvp[l] - gvm[l]) / (2.0 * h), d.hess_vv.get(l, m), ctx);
                    }
                }
                _ => hess_fd.fail(format!("gradient evaluation failed at {}", ctx())),
            }
        }

        // the production matrix is diagonal by construction; the content is
        // that the normalized curvature assembly collapses to the same diagonal
        let evaluator = crate::saddle::AggregateEvaluator::new(agents);
        match evaluator
            .evaluate(&v, x, &[])
            .and_then(|eval| bundle_from_evaluation(&v, &eval))
        {
            Ok(bundle) => {
                for l in 0..m_count {
                    for m in 0..m_count {
                        diag.check_true(l == m || d.weight_curvature.get(l, m) == 0.0, ctx);
                        diag.compare(
                            bundle.primal_vv.get(l, m),
                            d.weight_curvature.get(l, m),
                            ctx,
                        );
                    }
                }
            }
            Err(e) => diag.fail(format!("{e} at {}", ctx())),
        }

        for z in [0.5, 2.0, 10.0] {
            let vz: Vec<f64> = v.iter().map(|w| w * z).collect();
            match value_at(&vz, x) {
                Ok(rz) => homog.compare(rz, z * d.value, ctx),
                Err(e) => homog.fail(format!("{e} at {}", ctx())),
            }
        }

        // Euler identity via ray differencing: z -> r(z v, x) is linear in
        // z, so its central difference is exact up to rounding and gives
        // sum_m v^m dr/dv^m through an independent pair of solves
        {
            let h = 1e-4;
            let up: Vec<f64> = v.iter().map(|w| w * (1.0 + h)).collect();
            let down: Vec<f64> = v.iter().map(|w| w * (1.0 - h)).collect();
            match (value_at(&up, x), value_at(&down, x)) {
                (Ok(p), Ok(m)) => euler.compare((p - m) / (2.0 * h), dot(&v, &d.grad_v), ctx),
                _ => euler.fail(format!("value evaluation failed at {}", ctx())),
            }
        }

        for m in 0..m_count {
            f7.within(-v[m] * d.grad_v[m] / d.grad_x, 1.0 / c, c, ctx);
            f9.within(v[m] * d.hess_vx[m] / (-d.hess_xx), 1.0 / c, c, ctx);
            f8.within(d.weight_curvature.get(m, m), 1.0 / c, c, ctx);
        }

        // allocation sensitivities vs differences of the allocation itself
        if i < 25 {
            let alloc_at = |vv: &[f64], xx: f64| -> Result<Vec<f64>> {
                let w = WeightVector::new(vv.to_vec())?;
                Ok(solve_allocation(agents, &w, xx)?.x_hat)
            };
            let hx2 = cfg.hess_fd_step * x.abs().max(1.0);
            match (alloc_at(&v, x + hx2), alloc_at(&v, x - hx2)) {
                (Ok(ap), Ok(am)) => {
                    for m in 0..m_count {
                        sens.compare((ap[m] - am[m]) / (2.0 * hx2), d.alloc_sens_x[m], ctx);
                    }
                }
                _ => sens.fail(format!("allocation failed at {}", ctx())),
            }
            for l in 0..m_count {
                let h = cfg.hess_fd_step * v[l].abs().max(1.0);
                let mut vp = v.clone();
                vp[l] += h;
                let mut vm = v.clone();
                vm[l] -= h;
                match (alloc_at(&vp, x), alloc_at(&vm, x)) {
                    (Ok(ap), Ok(am)) => {
                        for m in 0..m_count {
                            sens.compare(
                                v[l] * (ap[m] - am[m]) / (2.0 * h),
                                d.alloc_sens_v.get(l, m),
                                ctx,
                            );
                        }
                    }
                    _ => sens.fail(format!("allocation failed at {}", ctx())),
                }
            }
        }

        if let Some(oracle) = exponential_aggregate_oracle(agents, &v, x) {
            closed.compare(d.value, oracle.value, ctx);
            closed.compare(d.grad_x, oracle.lambda, ctx);
            for m in 0..m_count {
                closed.compare(d.allocation.x_hat[m], oracle.x_hat[m], ctx);
            }
        }

        if i < 8 && m_count <= 3 {
            match brute_force_r(agents, &w, x, 3.0, 41) {
                Ok(grid) => brute.check_true(grid <= d.value + 1e-9, || {
                    format!("grid {grid:e} above value {:e} at {}", d.value, ctx())
                }),
                Err(e) => brute.fail(format!("{e} at {}", ctx())),
            }
        }
    }

    let mut out = vec![
        grad_fd.report(),
        hess_fd.report(),
        sens.report(),
        diag.report(),
        homog.report(),
        euler.report(),
        f7.report(),
        f9.report(),
        f8.report(),
    ];
    if agents.all_exponential() {
        out.push(closed.report());
    }
    out.push(brute.report());
    Ok(out)
}

/// 21 x 21 grid values of <v,u> + x y - f around the saddle point, varied
/// along the first weight coordinate and x, with the spacing chosen from
/// the local curvature so the grid approximation error stays below the
/// minimax tolerance. Returns (sup-inf, inf-sup); both sit at the conjugate
/// value when the minimax is attained.
pub fn minimax_grid(f: &dyn PrimalEvaluator, pair: &SaddlePair) -> Result<(f64, f64)> {
    let v_hat = pair.primal.v();
    let x_hat = pair.primal.x();
    let q = pair.primal.q();
    let u = pair.dual.u();
    let y = pair.dual.y();
    let g = pair.g_value;

    let eval = f.evaluate(v_hat, x_hat, q)?;
    let budget = 0.4e-6 * g.abs().max(1.0);
    let h_x = (budget / eval.hess_xx.abs())
        .sqrt()
        .min(0.05 * x_hat.abs().max(1.0));
    let curv_s = eval.hess_vv.get(0, 0).abs();
    let h_s = if curv_s > 1e-300 {
        (budget / curv_s).sqrt().min(0.05 * v_hat[0])
    } else {
        1e-3 * v_hat[0]
    };

    const HALF: i64 = 10;
    let mut values = [[0.0f64; 21]; 21];
    // rows: weight offset; cols: x offset
    for (si, soff) in (-HALF..=HALF).enumerate() {
        let mut v = v_hat.to_vec();
        v[0] += soff as f64 * h_s;
        for (xi, xoff) in (-HALF..=HALF).enumerate() {
            let x = x_hat + xoff as f64 * h_x;
            let fv = f.evaluate(&v, x, q)?.value;
            values[si][xi] = dot(&v, u) + x * y - fv;
        }
    }
    let sup_inf = values
        .iter()
        .map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let inf_sup = (0..21)
        .map(|xi| {
            (0..21)
                .map(|si| values[si][xi])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok((sup_inf, inf_sup))
}

fn suite_conjugacy(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let c = cfg.c_override.unwrap_or_else(|| agents.c_global());
    let mut rng = seed_for(cfg, 2);
    let f = NodeFieldEvaluator::new(tree, agents, NodeRef::root())?;

    let mut round = Check::new("conjugacy/round-trip", tol.round_trip);
    let mut closing = Check::new("conjugacy/closing-identities", tol.closing);
    let mut minimax = Check::new("conjugacy/grid-minimax", tol.minimax);
    let mut scale = Check::new("conjugacy/marginal-scaling", tol.round_trip);
    let mut g7 = Check::new("conjugacy/dual-weight-band", tol.bound_slack);
    let mut exp_g = Check::new("conjugacy/exponential-conjugate-value", tol.closed_form);

    for i in 0..cfg.n_points {
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || fmt_point(&v, x, &q);
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let pair = match conjugate_point_from_primal(&f, &a) {
            Ok(p) => p,
            Err(e) => {
                round.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        let back = match conjugate_point_from_dual(&f, &pair.dual, None) {
            Ok(p) => p,
            Err(e) => {
                round.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        for m in 0..m_count {
            round.compare(back.primal.v()[m], v[m], ctx);
        }
        round.compare(back.primal.x(), x, ctx);

        closing.compare(pair.f_value, dot(pair.dual.u(), &v), ctx);
        closing.compare(back.g_value, x * pair.dual.y(), ctx);

        for m in 0..m_count {
            g7.within(-pair.dual.u()[m] * v[m] / pair.dual.y(), 1.0 / c, c, ctx);
        }

        // marginal homogeneity: (u, z y) keeps x, scales v and g by z
        for z in [0.5, 2.0] {
            let b = DualPoint::new(pair.dual.u().to_vec(), z * pair.dual.y(), q.clone())?;
            match conjugate_point_from_dual(&f, &b, None) {
                Ok(p) => {
                    scale.compare(p.primal.x(), back.primal.x(), ctx);
                    scale.compare(p.g_value, z * back.g_value, ctx);
                    for m in 0..m_count {
                        scale.compare(p.primal.v()[m], z * back.primal.v()[m], ctx);
                    }
                }
                Err(e) => scale.fail(format!("{e} at {}", ctx())),
            }
        }

        if i < 20 {
            match minimax_grid(&f, &pair) {
                Ok((sup_inf, inf_sup)) => {
                    minimax.compare(sup_inf, pair.g_value, ctx);
                    minimax.compare(inf_sup, pair.g_value, ctx);
                }
                Err(e) => minimax.fail(format!("{e} at {}", ctx())),
            }
        }
    }

    // closed conjugate values for exponential families, solved against an
    // internally built trivial tree where g(u, 1) has the exact formula
    if agents.all_exponential() {
        let trivial = ScenarioTree::single_leaf(0.0, Vec::new())?;
        let plain = NodeFieldEvaluator::new(&trivial, agents, NodeRef::root())?;
        let mut rng_g = seed_for(cfg, 3);
        for _ in 0..cfg.n_points {
            let u: Vec<f64> = (0..m_count)
                .map(|_| -rng_g.log_uniform(cfg.v_log_range.0, cfg.v_log_range.1))
                .collect();
            let ctx = || format!("u={u:?}, y=1");
            let b = DualPoint::new(u.clone(), 1.0, Vec::new())?;
            match conjugate_point_from_dual(&plain, &b, None) {
                Ok(p) => {
                    let oracle = exponential_conjugate_value(agents, &u).expect("exponential");
                    exp_g.compare(p.g_value, oracle, ctx);
                }
                Err(e) => exp_g.fail(format!("{e} at {}", ctx())),
            }
        }
    }

    let mut out = vec![
        round.report(),
        closing.report(),
        minimax.report(),
        scale.report(),
        g7.report(),
    ];
    if agents.all_exponential() {
        out.push(exp_g.report());
    }
    Ok(out)
}

fn suite_identities(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let mut rng = seed_for(cfg, 4);
    let f = NodeFieldEvaluator::new(tree, agents, NodeRef::root())?;

    let mut inverse = Check::new("identities/weight-block-inverse", tol.inverse_identity);
    let mut cross = Check::new("identities/cross-block-vs-differences", tol.block_identity);
    let mut quantity = Check::new(
        "identities/quantity-block-vs-differences",
        tol.block_identity,
    );
    let mut rows = Check::new("identities/weight-block-row-sums", tol.sum_identity);
    let mut cols = Check::new("identities/cross-block-column-sums", tol.sum_identity);
    let mut shape = Check::new("identities/block-symmetry", 0.0);
    let mut dual_weight = Check::new(
        "identities/dual-weight-block-vs-differences",
        tol.block_identity,
    );

    let n = cfg.n_points.min(25);
    for _ in 0..n {
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || fmt_point(&v, x, &q);
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let (pair, eval) = match conjugate_point_from_primal(&f, &a)
            .and_then(|p| f.evaluate(&v, x, &q).map(|e| (p, e)))
        {
            Ok(pe) => pe,
            Err(e) => {
                inverse.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        let bundle = match second_order_bundle(&f, &pair) {
            Ok(b) => b,
            Err(e) => {
                inverse.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };

        let residual = bundle
            .dual_uu
            .mul(&bundle.primal_vv)
            .sub(&Matrix::identity(m_count))
            .sup_norm();
        inverse.compare(residual, 0.0, ctx);

        // weight blocks symmetric positive definite, quantity blocks symmetric
        shape.check_true(
            bundle.primal_vv.is_symmetric(1e-12)
                && bundle.dual_uu.is_symmetric(1e-10)
                && bundle.primal_vv.cholesky().is_ok()
                && bundle.dual_uu.cholesky().is_ok()
                && (j_count == 0
                    || (bundle.primal_qq.is_symmetric(1e-10)
                        && bundle.dual_qq.is_symmetric(1e-10))),
            ctx,
        );

        // Lemma-style sum identities for the normalized blocks
        let mut grand_total = 0.0;
        for l in 0..m_count {
            let mut row_sum = 0.0;
            for m in 0..m_count {
                row_sum += bundle.primal_vv.get(l, m);
            }
            grand_total += row_sum;
            rows.compare(row_sum, -v[l] * eval.hess_vx[l] / eval.hess_xx, ctx);
        }
        rows.compare(grand_total, -eval.grad_x / eval.hess_xx, ctx);
        for j in 0..j_count {
            let mut col_sum = 0.0;
            for m in 0..m_count {
                col_sum += bundle.primal_vq.get(m, j);
            }
            cols.compare(
                col_sum,
                eval.grad_q[j] / eval.grad_x - eval.hess_xq[j] / eval.hess_xx,
                ctx,
            );
        }

        // the dual weight block's defining formula: y d2g/du^l du^m over
        // the product of the conjugate weights, via differencing the
        // recovered weights in the utility levels
        for l in 0..m_count {
            let h = cfg.hess_fd_step * pair.dual.u()[l].abs();
            let perturbed = |sign: f64| -> Result<SaddlePair> {
                let mut u = pair.dual.u().to_vec();
                u[l] += sign * h;
                let b = DualPoint::new(u, pair.dual.y(), q.clone())?;
                conjugate_point_from_dual(&f, &b, Some(&pair.primal))
            };
            match (perturbed(1.0), perturbed(-1.0)) {
                (Ok(pp), Ok(pm)) => {
                    for m in 0..m_count {
                        let fd = pair.dual.y() * (pp.primal.v()[m] - pm.primal.v()[m])
                            / (2.0 * h * v[l] * v[m]);
                        dual_weight.compare(fd, bundle.dual_uu.get(l, m), ctx);
                    }
                }
                _ => dual_weight.fail(format!("saddle solve failed at {}", ctx())),
            }
        }

        // dual blocks against central differences of the numeric conjugate
        let solve_at = |qq: Vec<f64>| -> Result<SaddlePair> {
            let b = DualPoint::new(pair.dual.u().to_vec(), pair.dual.y(), qq)?;
            conjugate_point_from_dual(&f, &b, Some(&pair.primal))
        };
        for j in 0..j_count {
            let h = cfg.hess_fd_step * q[j].abs().max(1.0);
            let mut qp = q.clone();
            qp[j] += h;
            let mut qm = q.clone();
            qm[j] -= h;
            match (solve_at(qp.clone()), solve_at(qm.clone())) {
                (Ok(pp), Ok(pm)) => {
                    for m in 0..m_count {
                        let fd =
                            (pp.primal.v()[m] - pm.primal.v()[m]) / (2.0 * h * pair.primal.v()[m]);
                        cross.compare(fd, bundle.dual_uq.get(m, j), ctx);
                    }
                    // d g/d q = -d f/d q at the moved saddle points
                    let gq = |p: &SaddlePair| -> Result<Vec<f64>> {
                        Ok(f.evaluate(p.primal.v(), p.primal.x(), p.primal.q())?.grad_q)
                    };
                    match (gq(&pp), gq(&pm)) {
                        (Ok(gp), Ok(gm)) => {
                            for i in 0..j_count {
                                let fd = -(gp[i] - gm[i]) / (2.0 * h * pair.dual.y());
                                quantity.compare(fd, bundle.dual_qq.get(i, j), ctx);
                            }
                        }
                        _ => quantity.fail(format!("gradient evaluation failed at {}", ctx())),
                    }
                }
                _ => cross.fail(format!("saddle solve failed at {}", ctx())),
            }
        }
    }

    let mut out = vec![
        inverse.report(),
        shape.report(),
        dual_weight.report(),
        rows.report(),
    ];
    if j_count > 0 {
        out.push(cols.report());
        out.push(cross.report());
        out.push(quantity.report());
    }
    Ok(out)
}

fn suite_envelope(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let mut rng = seed_for(cfg, 5);
    let f = NodeFieldEvaluator::new(tree, agents, NodeRef::root())?;
    let mut env = Check::new("envelope/quantity-gradient", tol.envelope);

    let n = cfg.n_points.min(50);
    for _ in 0..n {
        if j_count == 0 {
            break;
        }
        let u: Vec<f64> = (0..m_count)
            .map(|_| -rng.log_uniform(cfg.v_log_range.0, cfg.v_log_range.1))
            .collect();
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || format!("u={u:?}, y=1, q={q:?}");
        let b = DualPoint::new(u.clone(), 1.0, q.clone())?;
        match conjugate_point_from_dual(&f, &b, None)
            .and_then(|pair| envelope_check(&f, &pair, tol.envelope_step))
        {
            Ok(devs) => {
                for dev in devs {
                    env.compare(dev, 0.0, ctx);
                }
            }
            Err(e) => env.fail(format!("{e} at {}", ctx())),
        }
    }
    Ok(vec![env.report()])
}

fn suite_field(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let c = cfg.c_override.unwrap_or_else(|| agents.c_global());
    let mut rng = seed_for(cfg, 6);
    let nodes = tree.all_nodes();

    let mut tower = Check::new("field/tower-property", tol.tower);
    let mut terminal = Check::new("field/terminal-expectation", tol.tower);
    let mut grad_fd = Check::new("field/gradient-vs-differences", tol.gradient);
    let mut hess_fd = Check::new("field/hessian-vs-differences", tol.hessian);
    let mut member = Check::new("field/per-node-membership", tol.bound_slack);
    let mut consist = Check::new("field/allocation-consistency", tol.consistency);
    let mut corollary = Check::new("field/invert-round-trip", tol.round_trip);
    let mut simplex = Check::new("field/invert-simplex", 0.0);
    let mut shift = Check::new("field/q-translation", 0.0);

    // tower property and terminal expectations over the whole tree
    for _ in 0..cfg.n_points.min(10) {
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let ctx = || fmt_point(&v, x, &q);

        let mut evals = Vec::new();
        let mut failed = false;
        for node in &nodes {
            match field_at(tree, agents, &a, *node) {
                Ok(e) => evals.push(e),
                Err(e) => {
                    tower.fail(format!("{e} at node {node}, {}", ctx()));
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            continue;
        }
        let eval_of = |node: NodeRef| {
            evals
                .iter()
                .find(|e| e.node == node)
                .expect("all nodes evaluated")
        };
        for node in &nodes {
            if tree.is_leaf(*node) {
                continue;
            }
            let here = eval_of(*node);
            let dim = m_count + 1 + j_count;
            let mut value = 0.0;
            let mut gradient = vec![0.0; dim];
            let mut hessian = Matrix::zeros(dim, dim);
            for (p, child) in tree.children(*node) {
                let ce = eval_of(child);
                value += p * ce.value;
                for i in 0..dim {
                    gradient[i] += p * ce.gradient[i];
                    for k in 0..dim {
                        hessian.add_to(i, k, p * ce.hessian.get(i, k));
                    }
                }
            }
            let node_ctx = || format!("node {node}, {}", ctx());
            tower.compare(value, here.value, node_ctx);
            for i in 0..dim {
                tower.compare(gradient[i], here.gradient[i], node_ctx);
                for k in 0..dim {
                    tower.compare(hessian.get(i, k), here.hessian.get(i, k), node_ctx);
                }
            }
        }
        // root value/gradient/hessian vs a reversed-order independent sum
        // over terminal evaluations
        let root = eval_of(NodeRef::root());
        let mut leaves = tree.descendant_leaves(NodeRef::root());
        leaves.reverse();
        let dim = m_count + 1 + j_count;
        let mut value = 0.0;
        let mut gradient = vec![0.0; dim];
        let mut hessian = Matrix::zeros(dim, dim);
        let leaf_level = tree.leaf_level();
        for (p, idx) in leaves {
            let te = crate::field::terminal_field(
                tree,
                agents,
                &a,
                NodeRef {
                    level: leaf_level,
                    index: idx,
                },
            )?;
            value += p * te.value;
            for i in 0..dim {
                gradient[i] += p * te.gradient[i];
                for k in 0..dim {
                    hessian.add_to(i, k, p * te.hessian.get(i, k));
                }
            }
        }
        terminal.compare(value, root.value, ctx);
        for i in 0..dim {
            terminal.compare(gradient[i], root.gradient[i], ctx);
            for k in 0..dim {
                terminal.compare(hessian.get(i, k), root.hessian.get(i, k), ctx);
            }
        }
    }

    // differentiation commutes with conditional expectation: gradient and
    // Hessian vs differences of the node value/gradient
    for _ in 0..cfg.n_points.min(10) {
        let node = nodes[rng.index(nodes.len())];
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let ctx = || format!("node {node}, {}", fmt_point(&v, x, &q));
        let here = match field_at(tree, agents, &a, node) {
            Ok(e) => e,
            Err(e) => {
                grad_fd.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        let dim = m_count + 1 + j_count;
        let flat: Vec<f64> = {
            let mut p = v.clone();
            p.push(x);
            p.extend_from_slice(&q);
            p
        };
        let value_at = |p: &[f64]| -> Result<f64> {
            let a = PrimalPoint::new(
                p[0..m_count].to_vec(),
                p[m_count],
                p[m_count + 1..].to_vec(),
            )?;
            Ok(field_at(tree, agents, &a, node)?.value)
        };
        match finite_difference_gradient(value_at, &flat, cfg.fd_step) {
            Ok(fd) => {
                for i in 0..dim {
                    grad_fd.compare(fd[i], here.gradient[i], ctx);
                }
            }
            Err(e) => grad_fd.fail(format!("{e} at {}", ctx())),
        }
        for i in 0..dim {
            let h = cfg.hess_fd_step * flat[i].abs().max(1.0);
            let mut fp = flat.clone();
            fp[i] += h;
            let mut fm = flat.clone();
            fm[i] -= h;
            let grad_of = |p: &[f64]| -> Result<Vec<f64>> {
                let a = PrimalPoint::new(
                    p[0..m_count].to_vec(),
                    p[m_count],
                    p[m_count + 1..].to_vec(),
                )?;
                Ok(field_at(tree, agents, &a, node)?.gradient)
            };
            match (grad_of(&fp), grad_of(&fm)) {
                (Ok(gp), Ok(gm)) => {
                    for k in 0..dim {
                        hess_fd.compare((gp[k] - gm[k]) / (2.0 * h), here.hessian.get(i, k), ctx);
                    }
                }
                _ => hess_fd.fail(format!("gradient evaluation failed at {}", ctx())),
            }
        }
    }

    // sampled membership of the per-node field in the curvature-bounded class
    for _ in 0..cfg.n_points.min(50) {
        let node = nodes[rng.index(nodes.len())];
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || format!("node {node}, {}", fmt_point(&v, x, &q));
        let jet = match crate::field::node_jet(tree, agents, node, &v, x, &q) {
            Ok(j) => j,
            Err(e) => {
                member.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        member.check_true(
            jet.value < 0.0 && jet.grad_x > 0.0 && jet.hess_xx < 0.0,
            ctx,
        );
        for m in 0..m_count {
            member.check_true(jet.grad_v[m] < 0.0, ctx);
            member.within(-v[m] * jet.grad_v[m] / jet.grad_x, 1.0 / c, c, ctx);
            member.within(v[m] * jet.hess_vx[m] / (-jet.hess_xx), 1.0 / c, c, ctx);
        }
        match bundle_from_evaluation(&v, &jet) {
            Ok(bundle) => match bundle.primal_vv.symmetric_eigenvalues() {
                Ok(eigs) => {
                    member.within(eigs[0], 1.0 / c, c, ctx);
                    member.within(eigs[eigs.len() - 1], 1.0 / c, c, ctx);
                }
                Err(e) => member.fail(format!("{e} at {}", ctx())),
            },
            Err(e) => member.fail(format!("{e} at {}", ctx())),
        }
    }

    // expected utility of the allocation vs differenced node value
    for _ in 0..cfg.n_points.min(10) {
        let v: Vec<f64> = (0..m_count).map(|_| rng.log_uniform(0.2, 5.0)).collect();
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let leaf_level = tree.leaf_level();
        for node in &nodes {
            let ctx = || format!("node {node}, {}", fmt_point(&v, x, &q));
            let mut expected = vec![0.0; m_count];
            let mut ok = true;
            for (p, idx) in tree.descendant_leaves(*node) {
                let leaf = NodeRef {
                    level: leaf_level,
                    index: idx,
                };
                match pareto_allocation_field(tree, agents, &a, leaf) {
                    Ok(pi) => {
                        for m in 0..m_count {
                            match agents.agent(m).eval(pi[m], 0) {
                                Ok(um) => expected[m] += p * um,
                                Err(e) => {
                                    consist.fail(format!("{e} at {}", ctx()));
                                    ok = false;
                                }
                            }
                        }
                    }
                    Err(e) => {
                        consist.fail(format!("{e} at {}", ctx()));
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            for m in 0..m_count {
                let h = 2e-5 * v[m];
                let mut vp = v.clone();
                vp[m] += h;
                let mut vm = v.clone();
                vm[m] -= h;
                let val = |vv: Vec<f64>| -> Result<f64> {
                    let a = PrimalPoint::new(vv, x, q.clone())?;
                    Ok(field_at(tree, agents, &a, *node)?.value)
                };
                match (val(vp), val(vm)) {
                    (Ok(p), Ok(mm)) => consist.compare(expected[m], (p - mm) / (2.0 * h), ctx),
                    _ => consist.fail(format!("value evaluation failed at {}", ctx())),
                }
            }
        }
    }

    // invertibility: forward from a simplex point, and backward from
    // drawn utility levels
    for _ in 0..cfg.n_points.min(50) {
        let node = nodes[rng.index(nodes.len())];
        let v = WeightVector::new(draw_weights(&mut rng, cfg, m_count))?.normalized();
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || format!("node {node}, {}", fmt_point(v.components(), x, &q));
        let a = PrimalPoint::new(v.components().to_vec(), x, q.clone())?;
        let here = match field_at(tree, agents, &a, node) {
            Ok(e) => e,
            Err(e) => {
                corollary.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        let u = &here.gradient[0..m_count];
        match invert_field(tree, agents, u, &q, node) {
            Ok((x_rec, v_rec)) => {
                corollary.compare(x_rec, x, ctx);
                for m in 0..m_count {
                    corollary.compare(v_rec[m], v.components()[m], ctx);
                }
                // a one-agent economy degenerates to the single weight 1
                simplex.check_true(
                    v_rec.iter().all(|w| *w > 0.0 && (m_count == 1 || *w < 1.0))
                        && (v_rec.iter().sum::<f64>() - 1.0).abs() < 1e-12,
                    ctx,
                );
                // the recovered pair reproduces the utility levels
                let back = PrimalPoint::new(v_rec, x_rec, q.clone())?;
                match field_at(tree, agents, &back, node) {
                    Ok(again) => {
                        for m in 0..m_count {
                            corollary.compare(again.gradient[m], u[m], ctx);
                        }
                    }
                    Err(e) => corollary.fail(format!("{e} at {}", ctx())),
                }
            }
            Err(e) => corollary.fail(format!("{e} at {}", ctx())),
        }
    }

    // exact q-translation on an internally built deterministic tree
    {
        let one = ScenarioTree::single_leaf(0.2, vec![1.0])?;
        let flat = ScenarioTree::single_leaf(0.2, vec![])?;
        for _ in 0..cfg.n_points.min(10) {
            let v = draw_weights(&mut rng, cfg, m_count);
            let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
            let qv = rng.uniform(cfg.q_range.0, cfg.q_range.1);
            let ctx = || fmt_point(&v, x, &[qv]);
            let a = PrimalPoint::new(v.clone(), x, vec![qv])?;
            let b = PrimalPoint::new(v.clone(), x + qv, vec![])?;
            match (
                field_at(&one, agents, &a, NodeRef::root()),
                field_at(&flat, agents, &b, NodeRef::root()),
            ) {
                (Ok(lhs), Ok(rhs)) => shift.check_true(lhs.value == rhs.value, ctx),
                _ => shift.fail(format!("evaluation failed at {}", ctx())),
            }
        }
    }

    Ok(vec![
        tower.report(),
        terminal.report(),
        grad_fd.report(),
        hess_fd.report(),
        member.report(),
        consist.report(),
        corollary.report(),
        simplex.report(),
        shift.report(),
    ])
}

fn suite_bounds(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let c = cfg.c_override.unwrap_or_else(|| agents.c_global());
    let mut rng = seed_for(cfg, 7);
    let nodes = tree.all_nodes();

    let mut f7 = Check::new("bounds/weighted-marginal-band", tol.bound_slack);
    let mut f9 = Check::new("bounds/cross-curvature-band", tol.bound_slack);
    let mut f8 = Check::new("bounds/weight-block-spectrum", tol.bound_slack);
    let mut g7 = Check::new("bounds/dual-weight-band", tol.bound_slack);
    let mut g8 = Check::new("bounds/dual-weight-block-spectrum", tol.bound_slack);
    let mut g9 = Check::new("bounds/unit-solve-band", tol.bound_slack);

    for _ in 0..cfg.n_points {
        let node = nodes[rng.index(nodes.len())];
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || format!("node {node}, {}", fmt_point(&v, x, &q));
        let jet = match crate::field::node_jet(tree, agents, node, &v, x, &q) {
            Ok(j) => j,
            Err(e) => {
                f7.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        for m in 0..m_count {
            f7.within(-v[m] * jet.grad_v[m] / jet.grad_x, 1.0 / c, c, ctx);
            f9.within(v[m] * jet.hess_vx[m] / (-jet.hess_xx), 1.0 / c, c, ctx);
            // dual-side band at the conjugate point: u = df/dv, y = df/dx
            g7.within(-jet.grad_v[m] * v[m] / jet.grad_x, 1.0 / c, c, ctx);
        }
        match bundle_from_evaluation(&v, &jet) {
            Ok(bundle) => {
                match bundle.primal_vv.symmetric_eigenvalues() {
                    Ok(eigs) => {
                        f8.within(eigs[0], 1.0 / c, c, ctx);
                        f8.within(eigs[eigs.len() - 1], 1.0 / c, c, ctx);
                    }
                    Err(e) => f8.fail(format!("{e} at {}", ctx())),
                }
                match bundle.dual_uu.symmetric_eigenvalues() {
                    Ok(eigs) => {
                        g8.within(eigs[0], 1.0 / c, c, ctx);
                        g8.within(eigs[eigs.len() - 1], 1.0 / c, c, ctx);
                    }
                    Err(e) => g8.fail(format!("{e} at {}", ctx())),
                }
                // the solution of (dual weight block) z = 1 is the primal
                // block applied to the all-ones vector
                let z = bundle.primal_vv.mul_vec(&vec![1.0; m_count]);
                for zm in z {
                    g9.within(zm, 1.0 / c, c, ctx);
                }
            }
            Err(e) => f8.fail(format!("{e} at {}", ctx())),
        }
    }
    Ok(vec![
        f7.report(),
        f9.report(),
        f8.report(),
        g7.report(),
        g8.report(),
        g9.report(),
    ])
}

fn suite_tolerance_matrix(
    cfg: &SweepConfig,
    agents: &AgentSet,
    tree: &ScenarioTree,
) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tolerances;
    let m_count = agents.len();
    let j_count = tree.quantity_count();
    let c = cfg.c_override.unwrap_or_else(|| agents.c_global());
    let mut rng = seed_for(cfg, 8);
    let nodes = tree.all_nodes();

    let mut assembly = Check::new("lemma19/assembly-agreement", tol.tolerance_assembly);
    let mut spectrum = Check::new("lemma19/spectral-band", tol.bound_slack);
    let mut density = Check::new("lemma19/density-normalization", 1e-12);
    let mut martingale = Check::new("lemma19/tolerance-martingale", tol.martingale);
    let mut terminal_sum = Check::new("lemma19/terminal-tolerance-sum", 1e-10);
    let mut tau_band = Check::new("lemma19/tolerance-band", tol.bound_slack);

    for _ in 0..cfg.n_points.min(100) {
        let node = nodes[rng.index(nodes.len())];
        let v = draw_weights(&mut rng, cfg, m_count);
        let x = rng.uniform(cfg.x_range.0, cfg.x_range.1);
        let q = draw_q(&mut rng, cfg, j_count);
        let ctx = || format!("node {node}, {}", fmt_point(&v, x, &q));
        let a = PrimalPoint::new(v.clone(), x, q.clone())?;
        let rep = match tolerance_representation(tree, agents, &a) {
            Ok(r) => r,
            Err(e) => {
                assembly.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };

        let via_tolerances = match tolerance_matrix_from(tree, &rep, node, m_count) {
            Ok(m) => m,
            Err(e) => {
                assembly.fail(format!("{e} at {}", ctx()));
                continue;
            }
        };
        match curvature_matrix_direct(tree, agents, &a, node) {
            Ok(direct) => {
                for l in 0..m_count {
                    for m in 0..m_count {
                        assembly.compare(via_tolerances.get(l, m), direct.get(l, m), ctx);
                    }
                }
            }
            Err(e) => assembly.fail(format!("{e} at {}", ctx())),
        }

        match spectral_bound_check(&via_tolerances, c) {
            Ok(check) => {
                spectrum.within(check.min_eigenvalue, 1.0 / c, c, ctx);
                spectrum.within(check.max_eigenvalue, 1.0 / c, c, ctx);
            }
            Err(e) => spectrum.fail(format!("{e} at {}", ctx())),
        }

        let mass: f64 = tree
            .descendant_leaves(NodeRef::root())
            .iter()
            .map(|(p, idx)| p * rep.leaf_density[*idx])
            .sum();
        density.compare(mass, 1.0, ctx);

        // martingale of the aggregate-tolerance process under the
        // reweighted measure, in leaf form at every node
        for check_node in &nodes {
            let mut num = 0.0;
            let mut den = 0.0;
            let leaf_level = tree.leaf_level();
            for (p, idx) in tree.descendant_leaves(*check_node) {
                let w = p * rep.leaf_density[idx];
                num += w * rep.tolerance_process[leaf_level][idx];
                den += w;
            }
            martingale.compare(
                num / den,
                rep.tolerance_process[check_node.level][check_node.index],
                || format!("node {check_node}, {}", ctx()),
            );
        }

        let leaf_level = tree.leaf_level();
        for (idx, taus) in rep.leaf_tolerances.iter().enumerate() {
            terminal_sum.compare(
                taus.iter().sum::<f64>(),
                rep.tolerance_process[leaf_level][idx],
                ctx,
            );
            for t in taus {
                tau_band.within(*t, 1.0 / c, c, ctx);
            }
        }
    }
    Ok(vec![
        assembly.report(),
        spectrum.report(),
        density.report(),
        martingale.report(),
        terminal_sum.report(),
        tau_band.report(),
    ])
}

/// Divergence threshold of the boundary probe.
const PROBE_THRESHOLD: f64 = -1e6;
/// Gap between the probe's starting magnitude and the threshold, so the
/// crossing is driven by the walk toward the simplex boundary and not by
/// the choice of abscissa.
const PROBE_HEADROOM: f64 = 100.0;

/// Divergence probe toward the boundary of the weight simplex: along
/// w_n = (1/n, 1 - 1/n) the weight-gradient sum must fall below -1e6 for
/// some n <= 1e6. The vanishing weight goes to the lower-tolerance agent
/// (the sum then grows at least like sqrt(n)), and the probe abscissa is
/// chosen so the walk starts about two orders of magnitude above the
/// threshold.
fn suite_boundary(cfg: &SweepConfig, agents: &AgentSet) -> Result<Vec<CheckReport>> {
    let mut probe = Check::new("boundary/divergence-probe", 0.0);
    if agents.len() < 2 {
        // a one-agent economy has no simplex boundary to approach
        return Ok(vec![probe.report()]);
    }
    let _ = cfg; // the probe is deterministic; no draws needed
    let mut picked: Vec<&crate::utility::UtilitySpec> = agents.agents().iter().collect();
    picked.sort_by(|a, b| {
        a.risk_tolerance(0.0)
            .partial_cmp(&b.risk_tolerance(0.0))
            .expect("finite tolerances")
    });
    let pair = AgentSet::new(vec![picked[0].clone(), (*picked.last().unwrap()).clone()])?;
    let total_t: f64 = (0..2).map(|m| pair.agent(m).risk_tolerance(0.0)).sum();

    let start = WeightVector::new(vec![0.5, 0.5])?;
    let s0: f64 = match r_and_gradient(&pair, &start, 0.0) {
        Ok(g) => g.grad_v.iter().sum(),
        Err(e) => {
            probe.fail(format!("{e} at the probe start"));
            return Ok(vec![probe.report()]);
        }
    };
    let target = PROBE_THRESHOLD.abs() / PROBE_HEADROOM;
    let probe_x = -(total_t * (target / s0.abs()).ln()).max(0.0);

    let mut min_sum = f64::INFINITY;
    let mut at_n = 0u64;
    let mut n = 2u64;
    while n <= 1_000_000 {
        let w = WeightVector::new(vec![1.0 / n as f64, 1.0 - 1.0 / n as f64])?;
        match r_and_gradient(&pair, &w, probe_x) {
            Ok(g) => {
                let s: f64 = g.grad_v.iter().sum();
                if s < min_sum {
                    min_sum = s;
                    at_n = n;
                }
                if min_sum < PROBE_THRESHOLD {
                    break;
                }
            }
            Err(e) => {
                probe.fail(format!("{e} at n={n}, x={probe_x:e}"));
                return Ok(vec![probe.report()]);
            }
        }
        n *= 2;
    }
    probe.check_true(min_sum < PROBE_THRESHOLD, || {
        format!("weight-gradient sum only reached {min_sum:e} (at n={at_n}, x={probe_x:e})")
    });
    Ok(vec![probe.report()])
}
