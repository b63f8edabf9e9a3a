//! Smallest supermartingale above a payoff family, and the stopping rules
//! read off from it.
//!
//! On a finite tree the envelope is computed by backward induction: at a
//! leaf it equals the payoff, and at an interior node it is the larger of
//! the payoff and the weighted mean of the children.  The result dominates
//! the payoff, takes a supermartingale step everywhere, and is the smallest
//! family doing both, which makes it the value of the one-player stopping
//! problem at every node.
//!
//! Two stop rules matter downstream.  For a level `lambda` strictly inside
//! (0, 1), the first node where `lambda * envelope <= payoff` is an almost
//! optimal stop whose loss is controlled by `1 - lambda`.  Letting `lambda`
//! grow to 1 these rules increase to the first node where the envelope
//! touches the payoff, the minimal optimal stop.

use crate::error::Error;
use crate::family::{
    first_hitting, is_martingale_on, region_phases, Family, StoppingTime,
};
use crate::tree::EventTree;
use crate::{EXACT_TOL, VALUE_TOL};

/// Envelope together with the payoff it dominates.
#[derive(Debug, Clone, PartialEq)]
pub struct SnellResult {
    /// Smallest supermartingale dominating the reward.
    pub envelope: Family,
    /// The reward family the envelope was computed from.
    pub reward: Family,
}

/// Backward induction pass over the tree.
pub fn snell_envelope(tree: &EventTree, reward: &Family) -> SnellResult {
    assert_eq!(reward.len(), tree.len(), "family lives on a different tree");
    let mut v = reward.values().to_vec();
    for t in (0..tree.horizon()).rev() {
        for &id in tree.nodes_at(t) {
            let node = tree.node(id);
            let cont: f64 = node
                .children
                .iter()
                .map(|&c| tree.node(c).cond_prob * v[c.index()])
                .sum();
            v[id.index()] = reward[id].max(cont);
        }
    }
    SnellResult {
        envelope: Family::new(tree, v).expect("envelope of finite rewards is finite"),
        reward: reward.clone(),
    }
}

/// First node at or after `from` where `lambda * envelope <= reward`, within
/// [`EXACT_TOL`].  `lambda` must lie strictly between 0 and 1.  When the
/// reward vanishes at the horizon the threshold set always contains the
/// leaves, so the rule is a genuine member of the set it hits.
pub fn lambda_hitting(
    tree: &EventTree,
    envelope: &Family,
    reward: &Family,
    lambda: f64,
    from: &StoppingTime,
) -> Result<StoppingTime, Error> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadLambda(lambda));
    }
    let base = region_phases(tree, from.region())?;
    Ok(first_hitting(tree, &base, |id| {
        lambda * envelope[id] <= reward[id] + EXACT_TOL
    }))
}

/// First node at or after `from` where the envelope touches the reward,
/// within [`VALUE_TOL`].  Leaves always qualify, so the rule is total.
pub fn minimal_optimal(
    tree: &EventTree,
    envelope: &Family,
    reward: &Family,
    from: &StoppingTime,
) -> StoppingTime {
    let base = region_phases(tree, from.region())
        .expect("stop regions are validated when they are built");
    first_hitting(tree, &base, |id| {
        (envelope[id] - reward[id]).abs() <= VALUE_TOL
    })
}

/// A stop `theta` at or after `from` is optimal for the problem started at
/// `from` exactly when the envelope touches the reward on `theta`'s region
/// and takes martingale steps from `from` up to `theta`.  Both parts are
/// checked within [`VALUE_TOL`].
pub fn check_optimality_criterion(
    tree: &EventTree,
    envelope: &Family,
    reward: &Family,
    from: &StoppingTime,
    theta: &StoppingTime,
) -> Result<bool, Error> {
    if !from.le_pathwise(tree, theta) {
        return Err(Error::RegionMismatch(
            "candidate stop fires before the problem starts on some path".into(),
        ));
    }
    let touches = theta
        .region()
        .iter()
        .all(|&id| (envelope[id] - reward[id]).abs() <= VALUE_TOL);
    Ok(touches && is_martingale_on(tree, envelope, from, theta)?)
}
