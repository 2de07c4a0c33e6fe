//! Problem configuration: agents, scenario tree, optional evaluation
//! queries, and sweep overrides, all in one JSON document.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScenarioTree, TreeSpec};
use crate::utility::{AgentSet, UtilityKind};
use crate::verify::SweepConfig;

/// One stored evaluation request. `what` uses the same tokens as the CLI
/// (r, grad, hess, conjugate, field, invert, lemma19); the point fields are
/// whichever the request kind needs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub what: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    agents: Vec<UtilityKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tree: Option<TreeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    queries: Option<Vec<QuerySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepConfig>,
}

/// A parsed and validated problem description.
#[derive(Clone, Debug)]
pub struct ProblemConfig {
    pub agents: AgentSet,
    pub tree: ScenarioTree,
    pub queries: Vec<QuerySpec>,
    pub sweep: SweepConfig,
    /// Whether the source document carried an explicit tree.
    had_tree: bool,
    had_sweep: bool,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!(
                "config line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })?;
        let agents = AgentSet::from_kinds(raw.agents)?;
        let had_tree = raw.tree.is_some();
        let tree = match &raw.tree {
            Some(spec) => ScenarioTree::from_spec(spec)?,
            // no tree means the trivial deterministic filtration
            None => ScenarioTree::single_leaf(0.0, Vec::new())?,
        };
        let had_sweep = raw.sweep.is_some();
        let sweep = raw.sweep.unwrap_or_default();
        let queries = raw.queries.unwrap_or_default();
        for (i, q) in queries.iter().enumerate() {
            if !matches!(
                q.what.as_str(),
                "r" | "grad" | "hess" | "conjugate" | "field" | "invert" | "lemma19"
            ) {
                return Err(Error::parse(format!(
                    "query {i}: unknown request kind {:?}",
                    q.what
                )));
            }
        }
        Ok(ProblemConfig {
            agents,
            tree,
            queries,
            sweep,
            had_tree,
            had_sweep,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            agents: self
                .agents
                .agents()
                .iter()
                .map(|a| a.kind().clone())
                .collect(),
            tree: self.had_tree.then(|| self.tree.to_spec()),
            queries: (!self.queries.is_empty()).then(|| self.queries.clone()),
            sweep: self.had_sweep.then(|| self.sweep.clone()),
        };
        serde_json::to_string_pretty(&raw).expect("config serialization cannot fail")
    }
}
