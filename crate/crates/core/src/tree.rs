//! Finite event trees.
//!
//! A tree with horizon `T` models a filtration on a finite probability
//! space: the nodes at depth `t` are the atoms of the time-`t` sigma-field,
//! and the branch weights are conditional probabilities of moving from an
//! atom to one of its refinements.  Trees are complete: every path from the
//! root reaches depth exactly `T`.  Zero-probability branches are rejected
//! up front so that conditioning on any node is well defined.

use std::collections::HashMap;

use crate::error::Error;

/// Dense index of a node inside an [`EventTree`].
///
/// Indices are assigned in breadth-first order during construction, so
/// `a.0 < b.0` whenever `a` sits strictly closer to the root than `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One atom of the filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Identifier the node carried in its source description.
    pub external_id: i64,
    /// Depth of the node; 0 for the root, `horizon` for leaves.
    pub time: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Probability of reaching this node from its parent (1 for the root).
    pub cond_prob: f64,
    /// Unconditional probability of the node, the product of branch
    /// weights along the path from the root.
    prob: f64,
}

impl Node {
    /// Unconditional probability of reaching this node from the root.
    pub fn prob(&self) -> f64 {
        self.prob
    }
}

/// Raw description of a node before validation, as it appears in input data.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub id: i64,
    pub time: usize,
    pub parent: Option<i64>,
    pub cond_prob: f64,
}

/// A validated event tree.  Immutable after construction, so shared
/// references can be used freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTree {
    horizon: usize,
    nodes: Vec<Node>,
    levels: Vec<Vec<NodeId>>,
    by_external: HashMap<i64, NodeId>,
}

/// Tolerance for validating that sibling branch weights sum to one.
pub const PROB_TOL: f64 = 1e-9;

impl EventTree {
    /// Validates a raw node list and builds the tree.
    ///
    /// Checks performed: exactly one root at time 0 with weight 1, unique
    /// ids, every child one step below its parent, every leaf at the
    /// horizon, every interior node with at least one child, branch weights
    /// in (0, 1], and sibling weights summing to 1 within [`PROB_TOL`].
    /// Node indices are reassigned densely in breadth-first order.
    pub fn build(horizon: usize, specs: &[NodeSpec]) -> Result<EventTree, Error> {
        if specs.is_empty() {
            return Err(Error::MalformedTree("no nodes".into()));
        }

        let mut by_id: HashMap<i64, usize> = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if by_id.insert(s.id, i).is_some() {
                return Err(Error::MalformedTree(format!("duplicate node id {}", s.id)));
            }
        }

        let mut roots = specs.iter().filter(|s| s.parent.is_none());
        let root = match (roots.next(), roots.next()) {
            (Some(r), None) => r,
            (None, _) => return Err(Error::MalformedTree("no root node".into())),
            (Some(_), Some(_)) => return Err(Error::MalformedTree("more than one root".into())),
        };
        if root.time != 0 {
            return Err(Error::MalformedTree(format!(
                "root node {} must sit at time 0, found time {}",
                root.id, root.time
            )));
        }
        if (root.cond_prob - 1.0).abs() > PROB_TOL {
            return Err(Error::BadProbabilities(format!(
                "root weight must be 1, got {}",
                root.cond_prob
            )));
        }

        let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        for (i, s) in specs.iter().enumerate() {
            let Some(pid) = s.parent else { continue };
            let Some(&p) = by_id.get(&pid) else {
                return Err(Error::MalformedTree(format!(
                    "node {} names unknown parent {}",
                    s.id, pid
                )));
            };
            if s.time != specs[p].time + 1 {
                return Err(Error::MalformedTree(format!(
                    "node {} at time {} must sit one step below its parent at time {}",
                    s.id, s.time, specs[p].time
                )));
            }
            if s.time > horizon {
                return Err(Error::MalformedTree(format!(
                    "node {} at time {} lies beyond the horizon {}",
                    s.id, s.time, horizon
                )));
            }
            if s.cond_prob.is_nan() || s.cond_prob <= 0.0 {
                return Err(Error::BadProbabilities(format!(
                    "branch weight {} of node {} is not positive",
                    s.cond_prob, s.id
                )));
            }
            if s.cond_prob > 1.0 + PROB_TOL {
                return Err(Error::BadProbabilities(format!(
                    "branch weight {} of node {} exceeds 1",
                    s.cond_prob, s.id
                )));
            }
            children_of[p].push(i);
        }

        for (i, s) in specs.iter().enumerate() {
            if s.time < horizon && children_of[i].is_empty() {
                return Err(Error::MalformedTree(format!(
                    "node {} at time {} has no children before the horizon {}",
                    s.id, s.time, horizon
                )));
            }
            if s.time == horizon && !children_of[i].is_empty() {
                return Err(Error::MalformedTree(format!(
                    "node {} at the horizon has children",
                    s.id
                )));
            }
            if !children_of[i].is_empty() {
                let sum: f64 = children_of[i].iter().map(|&c| specs[c].cond_prob).sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(Error::BadProbabilities(format!(
                        "branch weights below node {} sum to {sum}, expected 1",
                        s.id
                    )));
                }
            }
        }

        // Breadth-first renumbering.  Reachability from the root doubles as
        // the cycle check: parent links are acyclic by the time ordering, so
        // any unreachable node signals a disconnected description.
        let root_raw = by_id[&root.id];
        let mut order = Vec::with_capacity(specs.len());
        let mut queue = std::collections::VecDeque::from([root_raw]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            queue.extend(children_of[i].iter().copied());
        }
        if order.len() != specs.len() {
            return Err(Error::MalformedTree(
                "some nodes are not reachable from the root".into(),
            ));
        }

        let mut new_id = vec![usize::MAX; specs.len()];
        for (new, &raw) in order.iter().enumerate() {
            new_id[raw] = new;
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        let mut levels = vec![Vec::new(); horizon + 1];
        let mut by_external = HashMap::with_capacity(specs.len());
        for (new, &raw) in order.iter().enumerate() {
            let s = &specs[raw];
            let parent = s.parent.map(|pid| NodeId(new_id[by_id[&pid]]));
            let cond_prob = if s.parent.is_none() { 1.0 } else { s.cond_prob };
            let prob = match parent {
                None => 1.0,
                Some(p) => nodes[p.0].prob * cond_prob,
            };
            nodes.push(Node {
                external_id: s.id,
                time: s.time,
                parent,
                children: children_of[raw].iter().map(|&c| NodeId(new_id[c])).collect(),
                cond_prob,
                prob,
            });
            levels[s.time].push(NodeId(new));
            by_external.insert(s.id, NodeId(new));
        }

        Ok(EventTree { horizon, nodes, levels, by_external })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of nodes in the tree.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    /// Panics if `id` is out of range; use [`EventTree::try_node`] for
    /// untrusted indices.
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn try_node(&self, id: NodeId) -> Result<&Node, Error> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    /// Unconditional probability of reaching `id` from the root.
    pub fn probability(&self, id: NodeId) -> Result<f64, Error> {
        Ok(self.try_node(id)?.prob)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Nodes at a given depth, in breadth-first order.
    pub fn nodes_at(&self, time: usize) -> &[NodeId] {
        &self.levels[time]
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.levels[self.horizon]
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].time == self.horizon
    }

    /// Looks a node up by the identifier it carried in the source data.
    pub fn node_by_external(&self, external_id: i64) -> Option<NodeId> {
        self.by_external.get(&external_id).copied()
    }

    pub fn external_id(&self, id: NodeId) -> i64 {
        self.nodes[id.0].external_id
    }

    /// True when `a` lies on the path from the root to `b`, inclusive.
    pub fn is_weak_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        let ta = self.nodes[a.0].time;
        let mut cur = b;
        while self.nodes[cur.0].time > ta {
            cur = self.nodes[cur.0].parent.expect("non-root node has a parent");
        }
        cur == a
    }
}
