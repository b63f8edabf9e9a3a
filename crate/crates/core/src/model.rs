//! On-disk description of a game and of a solved game.
//!
//! A model file is a flat node list: the tree shape, the transition
//! weights, and both payoff processes in one record per node.  [`Model`]
//! round-trips through JSON and builds into the typed pieces the solver
//! consumes.  [`SolutionReport`] is the inverse direction, a solved game
//! flattened back to plain JSON keyed by the ids the file came in with.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::family::Family;
use crate::game::{DynkinSolution, MokobodskiVerdict};
use crate::tree::{EventTree, NodeSpec};

/// One node of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelNode {
    pub id: i64,
    pub time: usize,
    /// Absent exactly at the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<i64>,
    /// Transition weight from the parent; the root carries 1.
    pub cond_prob: f64,
    /// Collector reward when settlement happens here.
    pub xi: f64,
    /// Payer cost when settlement happens here.
    pub zeta: f64,
}

/// A complete game description as found in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub horizon: usize,
    pub nodes: Vec<ModelNode>,
}

impl Model {
    /// Parses a JSON document, reporting the offending line and column on
    /// malformed input.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidModel(format!("line {}, column {}: {}", e.line(), e.column(), e))
        })
    }

    /// Serializes to pretty-printed JSON.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    /// Reassembles a model from solver-side pieces, preserving external ids.
    pub fn from_parts(tree: &EventTree, xi: &Family, zeta: &Family) -> Self {
        let nodes = tree
            .node_ids()
            .map(|id| {
                let node = tree.node(id);
                ModelNode {
                    id: node.external_id,
                    time: node.time,
                    parent: node.parent.map(|p| tree.external_id(p)),
                    cond_prob: node.cond_prob,
                    xi: xi[id],
                    zeta: zeta[id],
                }
            })
            .collect();
        Model { horizon: tree.horizon(), nodes }
    }

    /// Validates the tree shape and splits the record into the typed
    /// pieces the solver consumes.  Payoffs are returned as given; callers
    /// decide whether to normalize the terminal values away.
    pub fn build(&self) -> Result<(EventTree, Family, Family), Error> {
        let specs: Vec<NodeSpec> = self
            .nodes
            .iter()
            .map(|n| NodeSpec { id: n.id, time: n.time, parent: n.parent, cond_prob: n.cond_prob })
            .collect();
        let tree = EventTree::build(self.horizon, &specs)?;
        let mut xi = vec![0.0; tree.len()];
        let mut zeta = vec![0.0; tree.len()];
        for n in &self.nodes {
            let id = tree.node_by_external(n.id).expect("tree was built from these ids");
            xi[id.index()] = n.xi;
            zeta[id.index()] = n.zeta;
        }
        let xi = Family::new(&tree, xi)?;
        let zeta = Family::new(&tree, zeta)?;
        Ok((tree, xi, zeta))
    }
}

/// A solved game flattened to JSON, keyed by the ids of the input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    /// Root settlement when the game is solvable, absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Either `"holds"` or `"fails"`.
    pub mokobodski: String,
    /// External ids where the payoff order is violated; empty when it holds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fails_at: Vec<i64>,
    #[serde(rename = "J")]
    pub j: BTreeMap<String, f64>,
    #[serde(rename = "Jp")]
    pub jp: BTreeMap<String, f64>,
    #[serde(rename = "Y")]
    pub y: BTreeMap<String, f64>,
    /// Collector stop region by external id, when the game is solvable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_star: Vec<i64>,
    /// Payer stop region by external id, when the game is solvable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma_star: Vec<i64>,
}

impl SolutionReport {
    pub fn from_solution(tree: &EventTree, sol: &DynkinSolution) -> Self {
        let flatten = |f: &Family| {
            tree.node_ids()
                .map(|id| (tree.external_id(id).to_string(), f[id]))
                .collect::<BTreeMap<_, _>>()
        };
        let region_ids = |r: &crate::family::StoppingTime| {
            let mut ids: Vec<i64> = r.region().iter().map(|&id| tree.external_id(id)).collect();
            ids.sort_unstable();
            ids
        };
        let (mokobodski, fails_at) = match &sol.mokobodski {
            MokobodskiVerdict::Holds => ("holds".to_string(), Vec::new()),
            MokobodskiVerdict::FailsAt(nodes) => {
                let mut ids: Vec<i64> = nodes.iter().map(|&id| tree.external_id(id)).collect();
                ids.sort_unstable();
                ("fails".to_string(), ids)
            }
        };
        SolutionReport {
            value: sol.value(tree.root()).ok(),
            converged: sol.converged,
            iterations: sol.iterations,
            mokobodski,
            fails_at,
            j: flatten(&sol.j),
            jp: flatten(&sol.jp),
            y: flatten(&sol.y),
            tau_star: sol.tau_star.as_ref().map(&region_ids).unwrap_or_default(),
            sigma_star: sol.sigma_star.as_ref().map(&region_ids).unwrap_or_default(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{iterate, normalize_terminal, GameSpec, SolverConfig};
    use crate::tree::NodeId;

    fn chain_model() -> Model {
        Model {
            horizon: 2,
            nodes: vec![
                ModelNode { id: 10, time: 0, parent: None, cond_prob: 1.0, xi: 0.0, zeta: 2.0 },
                ModelNode { id: 20, time: 1, parent: Some(10), cond_prob: 1.0, xi: 1.0, zeta: 2.0 },
                ModelNode { id: 30, time: 2, parent: Some(20), cond_prob: 1.0, xi: 0.0, zeta: 0.0 },
            ],
        }
    }

    #[test]
    fn json_round_trip_preserves_the_model() {
        let model = chain_model();
        let text = model.to_json_pretty();
        let back = Model::from_json(&text).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let err = Model::from_json("{\"horizon\": 2,\n  \"nodes\": [,]}").unwrap_err();
        match err {
            Error::InvalidModel(msg) => assert!(msg.starts_with("line 2"), "got {msg}"),
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = Model::from_json(
            "{\"horizon\": 0, \"nodes\": [{\"id\": 0, \"time\": 0, \"cond_prob\": 1.0, \
             \"xi\": 0.0, \"zeta\": 0.0, \"flavor\": 3}]}",
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)), "got {err:?}");
    }

    #[test]
    fn build_produces_the_typed_pieces() {
        let (tree, xi, zeta) = chain_model().build().unwrap();
        assert_eq!(tree.horizon(), 2);
        assert_eq!(xi.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(zeta.values(), &[2.0, 2.0, 0.0]);
        assert_eq!(tree.external_id(NodeId(1)), 20);
    }

    #[test]
    fn from_parts_round_trips_through_build() {
        let model = chain_model();
        let (tree, xi, zeta) = model.build().unwrap();
        let back = Model::from_parts(&tree, &xi, &zeta);
        assert_eq!(model, back);
    }

    #[test]
    fn solution_report_uses_external_ids_everywhere() {
        let (tree, xi, zeta) = chain_model().build().unwrap();
        let (xi, zeta) = normalize_terminal(&tree, &xi, &zeta).unwrap();
        let spec = GameSpec::new(tree, xi, zeta).unwrap();
        let sol = iterate(&spec, &SolverConfig::for_horizon(2)).unwrap();
        let report = SolutionReport::from_solution(&spec.tree, &sol);

        assert_eq!(report.value, Some(1.0));
        assert!(report.converged);
        assert_eq!(report.mokobodski, "holds");
        assert!(report.fails_at.is_empty());
        assert_eq!(report.tau_star, vec![20]);
        assert_eq!(report.sigma_star, vec![30]);
        assert_eq!(report.j.get("10"), Some(&1.0));
        assert_eq!(report.y.get("20"), Some(&1.0));

        let text = report.to_json_pretty();
        let back: SolutionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }
}
