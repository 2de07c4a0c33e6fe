//! Utility functions on the whole real line: exponentials and finite
//! exponential mixtures. Both families are strictly increasing, strictly
//! concave, negative, vanish at +infinity, and have absolute risk aversion
//! pinched between the smallest and largest mixture rate, so the curvature
//! constant `c` is computable exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluations past this many log-units would overflow a double.
const EXP_OVERFLOW: f64 = 700.0;

/// One agent's utility function.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UtilityKind {
    /// u(x) = -exp(-rate * x) / rate, constant absolute risk aversion.
    Exponential { rate: f64 },
    /// u(x) = -sum_i (weights_i / rates_i) * exp(-rates_i * x).
    Mixture { weights: Vec<f64>, rates: Vec<f64> },
}

/// A validated utility with its curvature bound.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilitySpec {
    kind: UtilityKind,
    c_bound: f64,
    max_rate: f64,
    min_rate: f64,
    /// (weight, rate) pairs; a plain exponential is the single pair (1, rate).
    terms: Vec<(f64, f64)>,
    log_weights: Vec<f64>,
}

impl UtilitySpec {
    pub fn new(kind: UtilityKind) -> Result<Self> {
        match &kind {
            UtilityKind::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::domain(format!("rate must be positive, got {rate}")));
                }
            }
            UtilityKind::Mixture { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::domain(format!(
                        "mixture needs matching nonempty weights/rates, got {}/{}",
                        weights.len(),
                        rates.len()
                    )));
                }
                for (i, (w, r)) in weights.iter().zip(rates).enumerate() {
                    if !w.is_finite() || *w <= 0.0 {
                        return Err(Error::domain(format!(
                            "weight {i} must be positive, got {w}"
                        )));
                    }
                    if !r.is_finite() || *r <= 0.0 {
                        return Err(Error::domain(format!("rate {i} must be positive, got {r}")));
                    }
                }
            }
        }
        let (min_rate, max_rate) = match &kind {
            UtilityKind::Exponential { rate } => (*rate, *rate),
            UtilityKind::Mixture { rates, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for r in rates {
                    lo = lo.min(*r);
                    hi = hi.max(*r);
                }
                (lo, hi)
            }
        };
        // a(x) is a convex combination of the rates, so the curvature bound
        // is max(max rate, 1/min rate).
        let c_bound = max_rate.max(1.0 / min_rate);
        let terms: Vec<(f64, f64)> = match &kind {
            UtilityKind::Exponential { rate } => vec![(1.0, *rate)],
            UtilityKind::Mixture { weights, rates } => {
                weights.iter().copied().zip(rates.iter().copied()).collect()
            }
        };
        let log_weights = terms.iter().map(|(w, _)| w.ln()).collect();
        Ok(UtilitySpec {
            kind,
            c_bound,
            max_rate,
            min_rate,
            terms,
            log_weights,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(UtilityKind::Exponential { rate })
    }

    pub fn mixture(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::new(UtilityKind::Mixture { weights, rates })
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    /// The constant c with 1/c <= -u''/u' <= c and 1/c <= -u'/u <= c.
    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    pub fn min_rate(&self) -> f64 {
        self.min_rate
    }

    /// True when the utility is a single exponential (closed forms apply).
    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, UtilityKind::Exponential { .. })
    }

    fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// u, u', or u'' at x.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::domain(format!(
                "derivative order must be 0, 1, or 2, got {order}"
            )));
        }
        if !x.is_finite() {
            return Err(Error::domain(format!("x must be finite, got {x}")));
        }
        if self.max_rate * x < -EXP_OVERFLOW {
            return Err(Error::range(format!(
                "utility evaluation overflows below x = {:e} (got x = {x:e})",
                -EXP_OVERFLOW / self.max_rate
            )));
        }
        let mut acc = 0.0;
        for (w, r) in self.terms() {
            let e = (-r * x).exp();
            acc += match order {
                0 => -(w / r) * e,
                1 => w * e,
                _ => -w * r * e,
            };
        }
        Ok(acc)
    }

    /// ln u'(x), stable for any finite x (no overflow).
    pub fn log_marginal(&self, x: f64) -> f64 {
        let mut shift = f64::NEG_INFINITY;
        for (lw, (_, r)) in self.log_weights.iter().zip(&self.terms) {
            shift = shift.max(lw - r * x);
        }
        let mut sum = 0.0;
        for (lw, (_, r)) in self.log_weights.iter().zip(&self.terms) {
            sum += (lw - r * x - shift).exp();
        }
        shift + sum.ln()
    }

    /// Absolute risk aversion a(x) = -u''(x)/u'(x), stable for any finite x.
    pub fn risk_aversion(&self, x: f64) -> f64 {
        let terms = self.terms();
        let shift = terms
            .iter()
            .map(|(_, r)| -r * x)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, r) in terms {
            let e = (-r * x - shift).exp();
            num += w * r * e;
            den += w * e;
        }
        num / den
    }

    /// Risk tolerance t(x) = -u'(x)/u''(x) = 1/a(x), always in [1/c, c].
    pub fn risk_tolerance(&self, x: f64) -> f64 {
        1.0 / self.risk_aversion(x)
    }

    /// Solve u'(x) = y for x.
    pub fn inverse_marginal(&self, y: f64) -> Result<f64> {
        self.inverse_marginal_guided(y, None)
    }

    /// Same solve with an optional starting point; the allocation solver
    /// feeds back the previous iterate, which usually lands the Newton step
    /// inside tolerance after one or two evaluations.
    pub(crate) fn inverse_marginal_guided(&self, y: f64, guess: Option<f64>) -> Result<f64> {
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::domain(format!(
                "inverse marginal requires y > 0, got {y}"
            )));
        }
        let target = y.ln();
        if let UtilityKind::Exponential { rate } = self.kind {
            return Ok(-target / rate + 0.0);
        }
        // h(x) = ln u'(x) - ln y is strictly decreasing with slope -a(x)
        // in [-max_rate, -min_rate]; bracket then Newton.
        let h = |x: f64| self.log_marginal(x) - target;
        let mut x = match guess {
            Some(g) if g.is_finite() => g,
            _ => (self.log_marginal(0.0) - target) / self.risk_aversion(0.0),
        };
        let mut hx = h(x);
        let mut step = 1.0;
        let (mut lo, mut hi) = (x, x);
        if hx > 0.0 {
            // marginal too high: move right
            while hx > 0.0 {
                lo = x;
                x += step;
                step *= 2.0;
                hx = h(x);
            }
            hi = x;
        } else if hx < 0.0 {
            while hx < 0.0 {
                hi = x;
                x -= step;
                step *= 2.0;
                hx = h(x);
            }
            lo = x;
        }
        for _ in 0..200 {
            if hx.abs() <= 1e-14 {
                return Ok(x);
            }
            if hx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x + hx / self.risk_aversion(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            x = next;
            hx = h(x);
        }
        Err(Error::solver(format!(
            "inverse marginal did not converge for y = {y:e}"
        )))
    }
}

/// The ordered collection of agents sharing one economy.
#[derive(Clone, Debug)]
pub struct AgentSet {
    agents: Vec<UtilitySpec>,
    c_global: f64,
}

impl AgentSet {
    pub fn new(agents: Vec<UtilitySpec>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::domain("agent set must contain at least one agent"));
        }
        let c_global = agents
            .iter()
            .map(UtilitySpec::c_bound)
            .fold(1.0f64, f64::max);
        Ok(AgentSet { agents, c_global })
    }

    pub fn from_kinds(kinds: Vec<UtilityKind>) -> Result<Self> {
        let agents = kinds
            .into_iter()
            .map(UtilitySpec::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(agents)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[UtilitySpec] {
        &self.agents
    }

    pub fn agent(&self, m: usize) -> &UtilitySpec {
        &self.agents[m]
    }

    /// max over agents of the per-agent curvature bound; always >= 1.
    pub fn c_global(&self) -> f64 {
        self.c_global
    }

    pub fn all_exponential(&self) -> bool {
        self.agents.iter().all(UtilitySpec::is_exponential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mix_12() -> UtilitySpec {
        UtilitySpec::mixture(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn eval_matches_hand_values() {
        let exp1 = UtilitySpec::exponential(1.0).unwrap();
        assert_eq!(exp1.eval(0.0, 0).unwrap(), -1.0);
        let exp2 = UtilitySpec::exponential(2.0).unwrap();
        assert_eq!(exp2.eval(0.0, 1).unwrap(), 1.0);
        assert_eq!(mix_12().eval(0.0, 2).unwrap(), -3.0);
    }

    #[test]
    fn risk_tolerance_closed_forms() {
        let exp1 = UtilitySpec::exponential(1.0).unwrap();
        assert!((exp1.risk_tolerance(7.0) - 1.0).abs() < 1e-15);
        let exp2 = UtilitySpec::exponential(2.0).unwrap();
        assert!((exp2.risk_tolerance(-3.0) - 0.5).abs() < 1e-15);
        assert!((mix_12().risk_tolerance(0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_marginal_examples() {
        let exp1 = UtilitySpec::exponential(1.0).unwrap();
        assert_eq!(exp1.inverse_marginal(1.0).unwrap(), 0.0);
        let exp2 = UtilitySpec::exponential(2.0).unwrap();
        assert!((exp2.inverse_marginal((-2.0f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        let x = mix_12().inverse_marginal(2.0).unwrap();
        assert!(
            x.abs() < 1e-13,
            "u'(0) = 2 so the inverse at 2 is 0, got {x}"
        );
    }

    #[test]
    fn inverse_marginal_rejects_nonpositive() {
        let exp1 = UtilitySpec::exponential(1.0).unwrap();
        assert!(matches!(exp1.inverse_marginal(0.0), Err(Error::Domain(_))));
        assert!(matches!(exp1.inverse_marginal(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn range_guard_triggers() {
        let exp2 = UtilitySpec::exponential(2.0).unwrap();
        assert!(matches!(exp2.eval(-400.0, 0), Err(Error::Range(_))));
        assert!(exp2.eval(-349.0, 0).is_ok());
    }

    #[test]
    fn signs_and_curvature_bounds_on_grid() {
        let specs = [
            UtilitySpec::exponential(1.0).unwrap(),
            UtilitySpec::exponential(0.5).unwrap(),
            mix_12(),
            UtilitySpec::mixture(vec![0.3, 0.5, 0.2], vec![0.5, 1.0, 2.0]).unwrap(),
        ];
        for spec in &specs {
            let c = spec.c_bound();
            assert!(c >= 1.0);
            for x in log_grid() {
                let u = spec.eval(x, 0).unwrap();
                let du = spec.eval(x, 1).unwrap();
                let ddu = spec.eval(x, 2).unwrap();
                assert!(u < 0.0 && du > 0.0 && ddu < 0.0, "signs at x={x}");
                let a = -ddu / du;
                assert!(
                    a >= 1.0 / c - 1e-12 && a <= c + 1e-12,
                    "risk aversion at x={x}"
                );
                let ratio = -du / u;
                assert!(
                    ratio >= 1.0 / c - 1e-12 && ratio <= c + 1e-12,
                    "-u'/u at x={x}"
                );
            }
        }
    }

    #[test]
    fn vanishes_at_plus_infinity() {
        for spec in [UtilitySpec::exponential(1.0).unwrap(), mix_12()] {
            assert!(spec.eval(80.0, 0).unwrap().abs() < 1e-30);
        }
    }

    #[test]
    fn inverse_marginal_round_trip_on_grid() {
        let specs = [
            UtilitySpec::exponential(2.0).unwrap(),
            mix_12(),
            UtilitySpec::mixture(vec![2.0, 1.0], vec![0.5, 1.5]).unwrap(),
        ];
        for spec in &specs {
            for x in log_grid() {
                let y = spec.eval(x, 1).unwrap();
                let back = spec.inverse_marginal(y).unwrap();
                assert!(
                    (back - x).abs() <= 1e-10 * x.abs().max(1.0),
                    "round trip at x={x}: got {back}"
                );
                let forward = spec.eval(back, 1).unwrap();
                assert!((forward - y).abs() <= 1e-10 * y.abs());
            }
        }
    }

    #[test]
    fn finite_differences_match_derivatives() {
        for spec in [UtilitySpec::exponential(1.5).unwrap(), mix_12()] {
            for x in log_grid() {
                let h = 1e-5 * x.abs().max(1.0);
                let d1 = (spec.eval(x + h, 0).unwrap() - spec.eval(x - h, 0).unwrap()) / (2.0 * h);
                let du = spec.eval(x, 1).unwrap();
                assert!((d1 - du).abs() <= 1e-6 * du.abs(), "u' at x={x}");
                let d2 = (spec.eval(x + h, 1).unwrap() - spec.eval(x - h, 1).unwrap()) / (2.0 * h);
                let ddu = spec.eval(x, 2).unwrap();
                assert!((d2 - ddu).abs() <= 1e-6 * ddu.abs(), "u'' at x={x}");
            }
        }
    }

    // +/- log-spaced points spanning [-50, 50] plus zero
    fn log_grid() -> Vec<f64> {
        let mut xs = vec![0.0];
        let mut v = 0.01;
        while v <= 50.0 {
            xs.push(v);
            xs.push(-v);
            v *= 10.0f64.sqrt();
        }
        xs
    }

    #[test]
    fn specs_are_shareable_across_threads() {
        fn check<T: Send + Sync>() {}
        check::<UtilitySpec>();
        check::<AgentSet>();
    }

    #[test]
    fn agent_set_c_global() {
        let set = AgentSet::new(vec![
            UtilitySpec::exponential(1.0).unwrap(),
            UtilitySpec::exponential(2.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(set.c_global(), 2.0);
        assert!(AgentSet::new(vec![]).is_err());
    }
}
