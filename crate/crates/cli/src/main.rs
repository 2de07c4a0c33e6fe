//! Command-line front end: evaluate aggregate-utility quantities, saddle
//! conjugates, and scenario-tree fields from a JSON problem config, and run
//! the verification suites.
//!
//! Exit codes: 0 success, 1 parse error, 2 domain error, 3 solver error,
//! 4 verification checks failed. (Invalid command-line syntax follows the
//! usual clap convention.)

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use saddlefields_core::{
    conjugate_point_from_dual, field_at, invert_field, r_and_gradient, r_hessian, run_suite,
    spectral_bound_check, tolerance_matrix, tolerance_representation, DualPoint, Error,
    NodeFieldEvaluator, NodeRef, PrimalPoint, ProblemConfig, Result, Suite, WeightVector,
};

#[derive(Parser)]
#[command(
    name = "saddlefields",
    version,
    about = "Aggregate utilities, saddle conjugates, and scenario-tree fields",
    after_help = "POINT GRAMMAR:\n  \
      --at \"v=1,1;x=0;q=0.5,-0.5\"   primal point (weights, cash, quantities)\n  \
      --at \"u=-1,-0.5;y=1;q=0\"      dual point (utilities, marginal, quantities)\n  \
      --node \"level:index\"           tree node, default 0:0 (the root)\n\n\
      Omitted q defaults to zeros; omitted y defaults to 1.\n\n\
      EXIT CODES: 0 success, 1 parse error, 2 domain error, 3 solver error,\n\
      4 verification checks failed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one quantity at a point (or run the config's stored queries)
    Eval {
        /// What to evaluate: r | grad | hess | conjugate | field | invert | lemma19
        what: Option<String>,
        /// Problem config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Point, e.g. "v=1,1;x=0;q=0" or "u=-1,-0.5;y=1"
        #[arg(long)]
        at: Option<String>,
        /// Tree node as "level:index"; default is the root
        #[arg(long)]
        node: Option<String>,
    },
    /// Run a verification suite and print the JSON report
    Verify {
        /// Problem config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Suite: assumptions | aggregate | conjugacy | identities | field |
        /// bounds | lemma19 | envelope | boundary | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Seed override for the sweep
        #[arg(long)]
        seed: Option<u64>,
        /// Number of sweep points
        #[arg(long)]
        points: Option<usize>,
        /// Multiply every check tolerance by this factor
        #[arg(long)]
        tol: Option<f64>,
        /// Override the curvature constant used by the band checks
        #[arg(long)]
        c: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parse(_) => 1u8,
                Error::Domain(_) | Error::Range(_) | Error::Contract(_) => 2u8,
                Error::Solver(_) => 3u8,
            })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Eval {
            what,
            config,
            at,
            node,
        } => {
            let cfg = load_config(&config)?;
            let node = parse_node(&cfg, node.as_deref())?;
            match (what, at) {
                (Some(what), Some(at)) => {
                    let spec = AtSpec::parse(&at)?;
                    let out = evaluate(&cfg, &what, &spec, node)?;
                    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
                    Ok(ExitCode::SUCCESS)
                }
                (None, Some(_)) => {
                    Err(Error::parse("--at was given but no request kind; add r, grad, hess, conjugate, field, invert, or lemma19"))
                }
                (what, None) => {
                    if cfg.queries.is_empty() {
                        return Err(Error::parse(
                            "no --at given and the config has no stored queries",
                        ));
                    }
                    let mut results = Vec::new();
                    for q in &cfg.queries {
                        if let Some(w) = &what {
                            if *w != q.what {
                                continue;
                            }
                        }
                        let spec = AtSpec {
                            v: q.v.clone(),
                            x: q.x,
                            u: q.u.clone(),
                            y: q.y,
                            q: q.q.clone(),
                        };
                        let node = parse_node(&cfg, q.node.as_deref())?;
                        let out = evaluate(&cfg, &q.what, &spec, node)?;
                        results.push(json!({"what": q.what, "result": out}));
                    }
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&serde_json::Value::Array(results))
                            .expect("json")
                    );
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Verify {
            config,
            suite,
            seed,
            points,
            tol,
            c,
        } => {
            let cfg = load_config(&config)?;
            let suite: Suite = suite.parse()?;
            let mut sweep = cfg.sweep.clone();
            if let Some(s) = seed {
                sweep.seed = s;
            }
            if let Some(n) = points {
                sweep.n_points = n;
            }
            if let Some(factor) = tol {
                if !factor.is_finite() || factor <= 0.0 {
                    return Err(Error::domain(format!(
                        "tolerance factor must be positive, got {factor}"
                    )));
                }
                sweep.tolerances = sweep.tolerances.scaled(factor);
            }
            if let Some(c) = c {
                if !c.is_finite() || c <= 0.0 {
                    return Err(Error::domain(format!(
                        "curvature override must be positive, got {c}"
                    )));
                }
                sweep.c_override = Some(c);
            }
            let reports = run_suite(suite, &sweep, &cfg.agents, &cfg.tree)?;
            println!("{}", serde_json::to_string_pretty(&reports).expect("json"));
            let all_passed = reports.iter().all(|r| r.passed);
            if all_passed {
                Ok(ExitCode::SUCCESS)
            } else {
                for r in reports.iter().filter(|r| !r.passed) {
                    eprintln!(
                        "FAILED {} (error {:e} > tolerance {:e})",
                        r.name, r.max_rel_error, r.tolerance
                    );
                }
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(format!("cannot read {}: {e}", path.display())))?;
    ProblemConfig::from_json(&text)
}

fn parse_node(cfg: &ProblemConfig, node: Option<&str>) -> Result<NodeRef> {
    let node = match node {
        Some(s) => s.parse()?,
        None => NodeRef::root(),
    };
    cfg.tree.check_node(node)?;
    Ok(node)
}

/// Parsed form of the --at argument.
struct AtSpec {
    v: Option<Vec<f64>>,
    x: Option<f64>,
    u: Option<Vec<f64>>,
    y: Option<f64>,
    q: Option<Vec<f64>>,
}

impl AtSpec {
    fn parse(text: &str) -> Result<AtSpec> {
        let mut spec = AtSpec {
            v: None,
            x: None,
            u: None,
            y: None,
            q: None,
        };
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("expected key=value, got {part:?}")))?;
            let numbers: Vec<f64> = value
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::parse(format!("bad number {tok:?} in {part:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let scalar = |nums: &[f64]| -> Result<f64> {
                if nums.len() != 1 {
                    return Err(Error::parse(format!("{key} takes a single number")));
                }
                Ok(nums[0])
            };
            match key.trim() {
                "v" => spec.v = Some(numbers),
                "u" => spec.u = Some(numbers),
                "q" => spec.q = Some(numbers),
                "x" => spec.x = Some(scalar(&numbers)?),
                "y" => spec.y = Some(scalar(&numbers)?),
                other => {
                    return Err(Error::parse(format!(
                        "unknown point field {other:?} (expected v, x, u, y, or q)"
                    )))
                }
            }
        }
        Ok(spec)
    }

    fn primal(&self, m: usize, j: usize) -> Result<PrimalPoint> {
        let v = self
            .v
            .clone()
            .ok_or_else(|| Error::parse("primal point needs v=..."))?;
        if v.len() != m {
            return Err(Error::domain(format!(
                "expected {m} weights, got {}",
                v.len()
            )));
        }
        let x = self
            .x
            .ok_or_else(|| Error::parse("primal point needs x=..."))?;
        let q = self.q.clone().unwrap_or_else(|| vec![0.0; j]);
        if q.len() != j {
            return Err(Error::domain(format!(
                "expected {j} quantities, got {}",
                q.len()
            )));
        }
        PrimalPoint::new(v, x, q)
    }

    fn dual(&self, m: usize, j: usize) -> Result<DualPoint> {
        let u = self
            .u
            .clone()
            .ok_or_else(|| Error::parse("dual point needs u=..."))?;
        if u.len() != m {
            return Err(Error::domain(format!(
                "expected {m} utility levels, got {}",
                u.len()
            )));
        }
        let y = self.y.unwrap_or(1.0);
        let q = self.q.clone().unwrap_or_else(|| vec![0.0; j]);
        if q.len() != j {
            return Err(Error::domain(format!(
                "expected {j} quantities, got {}",
                q.len()
            )));
        }
        DualPoint::new(u, y, q)
    }
}

fn matrix_json(m: &saddlefields_core::Matrix) -> serde_json::Value {
    json!(m.to_rows())
}

fn evaluate(
    cfg: &ProblemConfig,
    what: &str,
    at: &AtSpec,
    node: NodeRef,
) -> Result<serde_json::Value> {
    let m = cfg.agents.len();
    let j = cfg.tree.quantity_count();
    match what {
        "r" | "grad" | "hess" => {
            if at.q.as_ref().is_some_and(|q| !q.is_empty()) {
                return Err(Error::domain(
                    "r/grad/hess evaluate the aggregate r(v, x); drop q or use `field`",
                ));
            }
            let point = at.primal(m, 0)?;
            let v = WeightVector::new(point.v().to_vec())?;
            match what {
                "r" => {
                    let g = r_and_gradient(&cfg.agents, &v, point.x())?;
                    Ok(json!({
                        "value": g.value,
                        "lambda": g.allocation.lambda,
                        "allocation": g.allocation.x_hat,
                    }))
                }
                "grad" => {
                    let g = r_and_gradient(&cfg.agents, &v, point.x())?;
                    Ok(json!({
                        "value": g.value,
                        "grad_x": g.grad_x,
                        "grad_v": g.grad_v,
                        "allocation": g.allocation.x_hat,
                        "tolerances": g.allocation.tolerances,
                    }))
                }
                _ => {
                    let d = r_hessian(&cfg.agents, &v, point.x())?;
                    Ok(json!({
                        "value": d.value,
                        "grad_x": d.grad_x,
                        "grad_v": d.grad_v,
                        "hess_xx": d.hess_xx,
                        "hess_vx": d.hess_vx,
                        "hess_vv": matrix_json(&d.hess_vv),
                        "weight_curvature": matrix_json(&d.weight_curvature),
                        "alloc_sens_x": d.alloc_sens_x,
                        "alloc_sens_v": matrix_json(&d.alloc_sens_v),
                        "allocation": d.allocation.x_hat,
                        "tolerances": d.allocation.tolerances,
                    }))
                }
            }
        }
        "conjugate" => {
            let b = at.dual(m, j)?;
            let evaluator = NodeFieldEvaluator::new(&cfg.tree, &cfg.agents, node)?;
            let pair = conjugate_point_from_dual(&evaluator, &b, None)?;
            Ok(json!({
                "g": pair.g_value,
                "f": pair.f_value,
                "v": pair.primal.v(),
                "x": pair.primal.x(),
                "node": node.to_string(),
            }))
        }
        "field" => {
            let a = at.primal(m, j)?;
            let eval = field_at(&cfg.tree, &cfg.agents, &a, node)?;
            Ok(json!({
                "value": eval.value,
                "gradient": eval.gradient,
                "hessian": matrix_json(&eval.hessian),
                "node": node.to_string(),
            }))
        }
        "invert" => {
            let b = at.dual(m, j)?;
            let (x, v) = invert_field(&cfg.tree, &cfg.agents, b.u(), b.q(), node)?;
            Ok(json!({
                "x": x,
                "v": v,
                "node": node.to_string(),
            }))
        }
        "lemma19" => {
            let a = at.primal(m, j)?;
            let matrix = tolerance_matrix(&cfg.tree, &cfg.agents, &a, node)?;
            let rep = tolerance_representation(&cfg.tree, &cfg.agents, &a)?;
            let c = cfg.sweep.c_override.unwrap_or_else(|| cfg.agents.c_global());
            let spectral = spectral_bound_check(&matrix, c)?;
            Ok(json!({
                "matrix": matrix_json(&matrix),
                "spectral": spectral,
                "c": c,
                "leaf_density": rep.leaf_density,
                "tolerance_process": rep.tolerance_process,
                "leaf_tolerances": rep.leaf_tolerances,
                "node": node.to_string(),
            }))
        }
        other => Err(Error::parse(format!(
            "unknown request kind {other:?}; expected r, grad, hess, conjugate, field, invert, or lemma19"
        ))),
    }
}
