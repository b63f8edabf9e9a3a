//! Payoff families and stopping times over an event tree.
//!
//! A family assigns one real value to every node, which is the tree version
//! of an adapted process: the value at a node is what the process pays on
//! that atom at that date.  A stopping time is stored as the set of nodes
//! where it stops.  Such a region must meet every root-to-leaf path exactly
//! once, which makes it an antichain that covers the tree.  First-hitting
//! constructions and pointwise minima of stopping rules stay inside this
//! representation, so no richer encoding is needed.

use std::ops::Index;

use crate::error::Error;
use crate::tree::{EventTree, NodeId};
use crate::VALUE_TOL;

/// One real value per node of a fixed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    values: Vec<f64>,
}

impl Family {
    /// Wraps raw values after checking the length and that every entry is
    /// finite.  Values are indexed by the tree's breadth-first node order.
    pub fn new(tree: &EventTree, values: Vec<f64>) -> Result<Family, Error> {
        if values.len() != tree.len() {
            return Err(Error::InvalidModel(format!(
                "family carries {} values for a tree with {} nodes",
                values.len(),
                tree.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "family value at node index {i} is not finite"
            )));
        }
        Ok(Family { values })
    }

    pub fn constant(tree: &EventTree, value: f64) -> Family {
        Family { values: vec![value; tree.len()] }
    }

    pub fn from_fn(tree: &EventTree, mut f: impl FnMut(NodeId) -> f64) -> Family {
        Family { values: tree.node_ids().map(&mut f).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn plus(&self, other: &Family) -> Family {
        assert_eq!(self.len(), other.len(), "families live on different trees");
        Family {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn minus(&self, other: &Family) -> Family {
        assert_eq!(self.len(), other.len(), "families live on different trees");
        Family {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Largest absolute nodewise gap between two families.
    pub fn sup_distance(&self, other: &Family) -> f64 {
        assert_eq!(self.len(), other.len(), "families live on different trees");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<NodeId> for Family {
    type Output = f64;

    fn index(&self, id: NodeId) -> &f64 {
        &self.values[id.index()]
    }
}

/// Where a node sits relative to a stop region, along its own path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    /// The path has not met the region yet.
    Before,
    /// The node itself belongs to the region.
    At,
    /// The path met the region strictly above this node.
    After,
}

/// Classifies every node against a stop region and validates the region on
/// the way: a region node below an earlier stop breaks the antichain rule,
/// and a leaf still in phase `Before` means some path never stops.
pub(crate) fn region_phases(tree: &EventTree, region: &[NodeId]) -> Result<Vec<Phase>, Error> {
    let mut member = vec![false; tree.len()];
    for &id in region {
        if !tree.contains(id) {
            return Err(Error::UnknownNode(id.index()));
        }
        member[id.index()] = true;
    }

    let mut phases = vec![Phase::Before; tree.len()];
    for id in tree.node_ids() {
        let inherited = match tree.node(id).parent {
            None => Phase::Before,
            Some(p) => phases[p.index()],
        };
        phases[id.index()] = match inherited {
            Phase::Before => {
                if member[id.index()] {
                    Phase::At
                } else {
                    Phase::Before
                }
            }
            Phase::At | Phase::After => {
                if member[id.index()] {
                    return Err(Error::RegionMismatch(format!(
                        "region stops twice on one path, second stop at node index {}",
                        id.index()
                    )));
                }
                Phase::After
            }
        };
        if tree.is_leaf(id) && phases[id.index()] == Phase::Before {
            return Err(Error::RegionMismatch(format!(
                "region never stops on the path through leaf index {}",
                id.index()
            )));
        }
    }
    Ok(phases)
}

/// A stopping rule, stored as the antichain of nodes where it stops.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingTime {
    region: Vec<NodeId>,
}

impl StoppingTime {
    /// Validates that `region` meets every root-to-leaf path exactly once.
    pub fn new(tree: &EventTree, mut region: Vec<NodeId>) -> Result<StoppingTime, Error> {
        region.sort_unstable();
        region.dedup();
        region_phases(tree, &region)?;
        Ok(StoppingTime { region })
    }

    /// The deterministic rule "stop at time `time` no matter what".
    pub fn at_time(tree: &EventTree, time: usize) -> Result<StoppingTime, Error> {
        if time > tree.horizon() {
            return Err(Error::RegionMismatch(format!(
                "time {time} lies beyond the horizon {}",
                tree.horizon()
            )));
        }
        Ok(StoppingTime { region: tree.nodes_at(time).to_vec() })
    }

    /// The rule that never stops early.
    pub fn horizon(tree: &EventTree) -> StoppingTime {
        StoppingTime { region: tree.leaves().to_vec() }
    }

    pub(crate) fn from_sorted_region(region: Vec<NodeId>) -> StoppingTime {
        debug_assert!(region.windows(2).all(|w| w[0] < w[1]));
        StoppingTime { region }
    }

    /// Stop nodes in breadth-first order.
    pub fn region(&self) -> &[NodeId] {
        &self.region
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.region.binary_search(&id).is_ok()
    }

    /// The node where this rule stops along the path to `leaf`.
    pub fn stop_node_on_path(&self, tree: &EventTree, leaf: NodeId) -> NodeId {
        let mut cur = leaf;
        loop {
            if self.contains(cur) {
                return cur;
            }
            cur = tree
                .node(cur)
                .parent
                .expect("a covering region meets every root-to-leaf path");
        }
    }

    /// True when this rule stops no later than `later` along every path.
    pub fn le_pathwise(&self, tree: &EventTree, later: &StoppingTime) -> bool {
        later
            .region()
            .iter()
            .all(|&b| self.region.iter().any(|&a| tree.is_weak_ancestor(a, b)))
    }
}

/// Conditional expectation `E[X at the stop of `at` | node `from`]`.
///
/// Sums `X` over the stop nodes reachable below (or at) `from`, weighted by
/// the conditional probability of reaching them from `from`.  Fails with
/// [`Error::RegionMismatch`] when `at` stops strictly above `from`, because
/// the stopped value is then already settled and not a function of `from`'s
/// subtree.
pub fn conditional_expectation(
    tree: &EventTree,
    x: &Family,
    from: NodeId,
    at: &StoppingTime,
) -> Result<f64, Error> {
    tree.try_node(from)?;
    assert_eq!(x.len(), tree.len(), "family lives on a different tree");
    let phases = region_phases(tree, at.region())?;
    match phases[from.index()] {
        Phase::After => Err(Error::RegionMismatch(format!(
            "region stops strictly above node index {}",
            from.index()
        ))),
        Phase::At => Ok(x[from]),
        Phase::Before => {
            let base = tree.node(from).prob();
            let mut total = 0.0;
            let mut stack = vec![from];
            while let Some(n) = stack.pop() {
                if phases[n.index()] == Phase::At {
                    total += x[n] * tree.node(n).prob() / base;
                } else {
                    stack.extend(tree.node(n).children.iter().copied());
                }
            }
            Ok(total)
        }
    }
}

/// One-step supermartingale test: at every interior node the weighted mean
/// of the children must not exceed the node's own value, within
/// [`VALUE_TOL`].  On a finite tree this is equivalent to the usual
/// definition through stopping times.
pub fn is_supermartingale(tree: &EventTree, f: &Family) -> bool {
    assert_eq!(f.len(), tree.len(), "family lives on a different tree");
    tree.node_ids().all(|id| {
        let node = tree.node(id);
        if node.children.is_empty() {
            return true;
        }
        let mean: f64 = node
            .children
            .iter()
            .map(|&c| tree.node(c).cond_prob * f[c])
            .sum();
        mean <= f[id] + VALUE_TOL
    })
}

/// Checks that `f` takes martingale steps on the stochastic interval from
/// `start` to `end`: at every node at or after `start` and strictly before
/// `end`, the value equals the weighted mean of the children within
/// [`VALUE_TOL`].  Fails with [`Error::RegionMismatch`] unless `start` stops
/// no later than `end` along every path.
pub fn is_martingale_on(
    tree: &EventTree,
    f: &Family,
    start: &StoppingTime,
    end: &StoppingTime,
) -> Result<bool, Error> {
    assert_eq!(f.len(), tree.len(), "family lives on a different tree");
    if !start.le_pathwise(tree, end) {
        return Err(Error::RegionMismatch(
            "interval start stops after its end on some path".into(),
        ));
    }
    let started = region_phases(tree, start.region())?;
    let ended = region_phases(tree, end.region())?;
    Ok(tree.node_ids().all(|id| {
        if started[id.index()] == Phase::Before || ended[id.index()] != Phase::Before {
            return true;
        }
        let node = tree.node(id);
        let mean: f64 = node
            .children
            .iter()
            .map(|&c| tree.node(c).cond_prob * f[c])
            .sum();
        (mean - f[id]).abs() <= VALUE_TOL
    }))
}

/// Stops at the first node, at or after the stop of `base`, where `target`
/// holds.  Stops at the horizon on paths where `target` never fires; with
/// payoff data whose terminal values vanish this fallback never changes the
/// stop region.
pub(crate) fn first_hitting(
    tree: &EventTree,
    base: &[Phase],
    target: impl Fn(NodeId) -> bool,
) -> StoppingTime {
    let mut region = Vec::new();
    let mut settled = vec![false; tree.len()];
    for id in tree.node_ids() {
        if let Some(p) = tree.node(id).parent {
            if settled[p.index()] {
                settled[id.index()] = true;
                continue;
            }
        }
        let eligible = base[id.index()] != Phase::Before;
        if eligible && (target(id) || tree.is_leaf(id)) {
            region.push(id);
            settled[id.index()] = true;
        }
    }
    StoppingTime::from_sorted_region(region)
}

/// Phase vector for hitting problems that start at a single node: the whole
/// subtree of `from` is searchable, and paths that branch away from `from`
/// become searchable as soon as they diverge, which keeps the resulting
/// regions covering.
pub(crate) fn phases_from_node(tree: &EventTree, from: NodeId) -> Vec<Phase> {
    tree.node_ids()
        .map(|id| {
            if id == from {
                Phase::At
            } else if tree.is_weak_ancestor(id, from) {
                Phase::Before
            } else {
                Phase::After
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::NodeSpec;
    use crate::EXACT_TOL;

    fn chain() -> EventTree {
        EventTree::build(
            2,
            &[
                NodeSpec { id: 0, time: 0, parent: None, cond_prob: 1.0 },
                NodeSpec { id: 1, time: 1, parent: Some(0), cond_prob: 1.0 },
                NodeSpec { id: 2, time: 2, parent: Some(1), cond_prob: 1.0 },
            ],
        )
        .unwrap()
    }

    fn binomial() -> EventTree {
        let mut specs = vec![NodeSpec { id: 0, time: 0, parent: None, cond_prob: 1.0 }];
        specs.push(NodeSpec { id: 1, time: 1, parent: Some(0), cond_prob: 0.5 });
        specs.push(NodeSpec { id: 2, time: 1, parent: Some(0), cond_prob: 0.5 });
        for (id, parent) in [(3, 1), (4, 1), (5, 2), (6, 2)] {
            specs.push(NodeSpec { id, time: 2, parent: Some(parent), cond_prob: 0.5 });
        }
        EventTree::build(2, &specs).unwrap()
    }

    #[test]
    fn family_checks_length_and_finiteness() {
        let tree = chain();
        assert!(Family::new(&tree, vec![0.0, 1.0]).is_err());
        assert!(Family::new(&tree, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(Family::new(&tree, vec![0.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn stopping_time_must_cover_every_path_once() {
        let tree = binomial();
        assert!(StoppingTime::new(&tree, vec![NodeId(0)]).is_ok());
        assert!(StoppingTime::new(&tree, vec![NodeId(1), NodeId(2)]).is_ok());
        // Mixed depths are fine as long as each path is met once.
        assert!(StoppingTime::new(&tree, vec![NodeId(1), NodeId(5), NodeId(6)]).is_ok());
        // Leaf 6 is never met.
        assert!(StoppingTime::new(&tree, vec![NodeId(1), NodeId(5)]).is_err());
        // Path through node 1 is met twice.
        assert!(StoppingTime::new(&tree, vec![NodeId(1), NodeId(2), NodeId(3)]).is_err());
        // Unknown index.
        assert!(StoppingTime::new(&tree, vec![NodeId(11)]).is_err());
    }

    #[test]
    fn pathwise_order_of_stopping_times() {
        let tree = binomial();
        let t0 = StoppingTime::at_time(&tree, 0).unwrap();
        let t1 = StoppingTime::at_time(&tree, 1).unwrap();
        let horizon = StoppingTime::horizon(&tree);
        let mixed = StoppingTime::new(&tree, vec![NodeId(1), NodeId(5), NodeId(6)]).unwrap();
        assert!(t0.le_pathwise(&tree, &t1));
        assert!(t1.le_pathwise(&tree, &mixed));
        assert!(mixed.le_pathwise(&tree, &horizon));
        assert!(!mixed.le_pathwise(&tree, &t1));
        assert!(t1.le_pathwise(&tree, &t1));
    }

    #[test]
    fn conditional_expectation_matches_hand_sums() {
        let tree = binomial();
        let ones = Family::constant(&tree, 1.0);
        let horizon = StoppingTime::horizon(&tree);
        let root = tree.root();
        assert_eq!(conditional_expectation(&tree, &ones, root, &horizon).unwrap(), 1.0);

        // Indicator of leaf 3 has conditional mass 0.25 from the root and
        // 0.5 from its parent.
        let indicator = Family::from_fn(&tree, |id| if id == NodeId(3) { 1.0 } else { 0.0 });
        assert!((conditional_expectation(&tree, &indicator, root, &horizon).unwrap() - 0.25).abs() < 1e-15);
        assert!((conditional_expectation(&tree, &indicator, NodeId(1), &horizon).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conditional_expectation_at_a_stop_node_reads_the_value_off() {
        let tree = chain();
        let f = Family::new(&tree, vec![0.0, 1.0, 0.0]).unwrap();
        let at_t1 = StoppingTime::at_time(&tree, 1).unwrap();
        assert_eq!(conditional_expectation(&tree, &f, tree.root(), &at_t1).unwrap(), 1.0);
        assert_eq!(conditional_expectation(&tree, &f, NodeId(1), &at_t1).unwrap(), 1.0);
    }

    #[test]
    fn conditional_expectation_rejects_regions_that_stopped_earlier() {
        let tree = chain();
        let f = Family::constant(&tree, 1.0);
        let at_root = StoppingTime::at_time(&tree, 0).unwrap();
        let err = conditional_expectation(&tree, &f, NodeId(1), &at_root).unwrap_err();
        assert!(matches!(err, Error::RegionMismatch(_)), "got {err:?}");
    }

    #[test]
    fn tower_property_through_an_intermediate_time() {
        let tree = binomial();
        let x = Family::new(&tree, vec![0.3, -1.0, 2.0, 4.0, -0.5, 1.25, 0.0]).unwrap();
        let horizon = StoppingTime::horizon(&tree);
        let direct = conditional_expectation(&tree, &x, tree.root(), &horizon).unwrap();
        let staged: f64 = tree
            .nodes_at(1)
            .iter()
            .map(|&mid| {
                tree.node(mid).cond_prob
                    * conditional_expectation(&tree, &x, mid, &horizon).unwrap()
            })
            .sum();
        assert!((direct - staged).abs() <= EXACT_TOL);
    }

    #[test]
    fn supermartingale_test_is_one_step() {
        let tree = chain();
        let flat = Family::constant(&tree, 0.0);
        let drop = Family::new(&tree, vec![1.0, 1.0, 0.0]).unwrap();
        let bump = Family::new(&tree, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(is_supermartingale(&tree, &flat));
        assert!(is_supermartingale(&tree, &drop));
        assert!(!is_supermartingale(&tree, &bump));
    }

    #[test]
    fn martingale_on_an_interval() {
        let tree = chain();
        let f = Family::new(&tree, vec![1.0, 1.0, 0.0]).unwrap();
        let t0 = StoppingTime::at_time(&tree, 0).unwrap();
        let t1 = StoppingTime::at_time(&tree, 1).unwrap();
        let t2 = StoppingTime::horizon(&tree);
        assert!(is_martingale_on(&tree, &f, &t0, &t1).unwrap());
        assert!(!is_martingale_on(&tree, &f, &t0, &t2).unwrap());
        // Empty interval holds vacuously.
        assert!(is_martingale_on(&tree, &f, &t1, &t1).unwrap());
        // Reversed interval is a contract violation, not `false`.
        assert!(is_martingale_on(&tree, &f, &t1, &t0).is_err());
    }

    #[test]
    fn first_hitting_respects_the_base_and_falls_back_to_leaves() {
        let tree = binomial();
        let from_root = region_phases(&tree, StoppingTime::at_time(&tree, 0).unwrap().region()).unwrap();
        let hit = first_hitting(&tree, &from_root, |id| id.index() >= 1);
        assert_eq!(hit.region(), &[NodeId(1), NodeId(2)]);

        let never = first_hitting(&tree, &from_root, |_| false);
        assert_eq!(never.region(), tree.leaves());

        let from_t1 = region_phases(&tree, StoppingTime::at_time(&tree, 1).unwrap().region()).unwrap();
        let hit_after = first_hitting(&tree, &from_t1, |_| true);
        assert_eq!(hit_after.region(), &[NodeId(1), NodeId(2)]);
    }
}
