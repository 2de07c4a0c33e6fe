//! Browser bindings for the interactive demo. Three operations, each taking
//! and returning JSON strings so the page needs no generated glue types:
//! curves of the aggregate utility in x, the saddle conjugate point map,
//! and per-node field curves on the scenario tree.
//!
//! Errors come back as a JSON object with an "error" field rather than a
//! thrown exception; the page decides how to display them.

use wasm_bindgen::prelude::*;

use saddlefields_core::{
    conjugate_point_from_dual, field_at, r_hessian, DualPoint, NodeFieldEvaluator, NodeRef,
    PrimalPoint, ProblemConfig, Result, WeightVector,
};

fn render(result: Result<serde_json::Value>) -> String {
    match result {
        Ok(value) => value.to_string(),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| saddlefields_core::Error::parse(format!("bad number {tok:?}: {e}")))
        })
        .collect()
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Curves of r(v, .), its marginal, and its curvature over an x-grid,
/// together with the per-agent allocation at every grid point.
#[wasm_bindgen]
pub fn aggregate_curve(config: &str, v: &str, x_min: f64, x_max: f64, points: usize) -> String {
    render((|| {
        let cfg = ProblemConfig::from_json(config)?;
        let v = WeightVector::new(parse_numbers(v)?)?;
        let xs = grid(x_min, x_max, points.min(2048));
        let mut value = Vec::with_capacity(xs.len());
        let mut marginal = Vec::with_capacity(xs.len());
        let mut curvature = Vec::with_capacity(xs.len());
        let mut allocation: Vec<Vec<f64>> = vec![Vec::new(); cfg.agents.len()];
        for &x in &xs {
            let d = r_hessian(&cfg.agents, &v, x)?;
            value.push(d.value);
            marginal.push(d.grad_x);
            curvature.push(d.hess_xx);
            for (m, row) in allocation.iter_mut().enumerate() {
                row.push(d.allocation.x_hat[m]);
            }
        }
        Ok(serde_json::json!({
            "x": xs,
            "value": value,
            "marginal": marginal,
            "curvature": curvature,
            "allocation": allocation,
        }))
    })())
}

/// The conjugate point map at a tree node: utilities u and marginal y in,
/// weights v, cash x, and both function values out.
#[wasm_bindgen]
pub fn conjugate_point(config: &str, u: &str, y: f64, q: &str, node: &str) -> String {
    render((|| {
        let cfg = ProblemConfig::from_json(config)?;
        let node: NodeRef = if node.trim().is_empty() {
            NodeRef::root()
        } else {
            node.parse()?
        };
        let mut q = parse_numbers(q)?;
        if q.is_empty() {
            q = vec![0.0; cfg.tree.quantity_count()];
        }
        let b = DualPoint::new(parse_numbers(u)?, y, q)?;
        let evaluator = NodeFieldEvaluator::new(&cfg.tree, &cfg.agents, node)?;
        let pair = conjugate_point_from_dual(&evaluator, &b, None)?;
        Ok(serde_json::json!({
            "v": pair.primal.v(),
            "x": pair.primal.x(),
            "g": pair.g_value,
            "f": pair.f_value,
            "node": node.to_string(),
        }))
    })())
}

/// Field value and marginal curves in x at every node of the tree, one
/// series per node, for a fixed weight vector and quantity vector.
#[wasm_bindgen]
pub fn field_curves(
    config: &str,
    v: &str,
    q: &str,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> String {
    render((|| {
        let cfg = ProblemConfig::from_json(config)?;
        let v = parse_numbers(v)?;
        let mut q = parse_numbers(q)?;
        if q.is_empty() {
            q = vec![0.0; cfg.tree.quantity_count()];
        }
        let xs = grid(x_min, x_max, points.min(1024));
        let mut series = Vec::new();
        for node in cfg.tree.all_nodes() {
            let mut value = Vec::with_capacity(xs.len());
            let mut marginal = Vec::with_capacity(xs.len());
            for &x in &xs {
                let a = PrimalPoint::new(v.clone(), x, q.clone())?;
                let eval = field_at(&cfg.tree, &cfg.agents, &a, node)?;
                value.push(eval.value);
                marginal.push(eval.gradient[v.len()]);
            }
            series.push(serde_json::json!({
                "node": node.to_string(),
                "level": node.level,
                "value": value,
                "marginal": marginal,
            }));
        }
        Ok(serde_json::json!({ "x": xs, "series": series }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "agents": [
            {"kind": "exponential", "rate": 1.0},
            {"kind": "exponential", "rate": 2.0}
        ],
        "tree": {
            "p": [0.5, 0.5],
            "children": [
                {"sigma0": 0.0, "psi": [1.0]},
                {"sigma0": 0.0, "psi": [-1.0]}
            ]
        }
    }"#;

    #[test]
    fn aggregate_curve_produces_series() {
        let out = aggregate_curve(CONFIG, "1, 1", -2.0, 2.0, 41);
        let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(parsed.get("error").is_none(), "{out}");
        assert_eq!(parsed["x"].as_array().unwrap().len(), 41);
        // r(1,1; 0) = -1.5 sits at the middle of the grid
        let mid = parsed["value"][20].as_f64().unwrap();
        assert!((mid + 1.5).abs() < 1e-10);
    }

    #[test]
    fn conjugate_point_round_trips() {
        let out = conjugate_point(CONFIG, "-1, -0.5", 1.0, "", "0:0");
        let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(parsed.get("error").is_none(), "{out}");
        assert!(parsed["x"].as_f64().unwrap().is_finite());
    }

    #[test]
    fn field_curves_cover_all_nodes() {
        let out = field_curves(CONFIG, "1,1", "0", -1.0, 1.0, 11);
        let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(parsed.get("error").is_none(), "{out}");
        assert_eq!(parsed["series"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn errors_come_back_as_json() {
        let out = aggregate_curve("{not json", "1", 0.0, 1.0, 3);
        let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(parsed.get("error").is_some());
    }
}
