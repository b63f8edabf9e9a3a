//! Exhaustive cross-checks for the solver.
//!
//! Nothing here touches the envelope iteration.  Strategies are enumerated
//! outright and the settlement of every pair is tabulated, which gives the
//! best guaranteed outcome for each player by direct minimax over the
//! table.  A separate one-pass recursion computes the value a third way.
//! All three routes must agree on solvable instances; the whole point of
//! this module is that they get there by different code.

use serde::Serialize;

use crate::error::Error;
use crate::family::{Family, StoppingTime};
use crate::game::{criterion, GameSpec};
use crate::tree::{EventTree, NodeId};
use crate::VALUE_TOL;

/// Default ceiling on how many stop regions a subtree may admit before
/// enumeration refuses to run.
pub const DEFAULT_STRATEGY_CAP: u128 = 100_000;

/// Per-side ceiling for the settlement table, which holds the square of
/// the strategy count: 2000 rules per side fills four million entries.
const PAIR_SIDE_CAP: u128 = 2_000;

/// Number of stop regions on the subtree of `from`: a leaf admits exactly
/// one, and an interior node admits one more than the product over its
/// children.  Saturates at `u128::MAX` instead of overflowing.
pub fn count_stopping_times(tree: &EventTree, from: NodeId) -> u128 {
    fn count(tree: &EventTree, id: NodeId) -> u128 {
        let node = tree.node(id);
        if node.children.is_empty() {
            return 1;
        }
        let mut product: u128 = 1;
        for &c in &node.children {
            product = product.saturating_mul(count(tree, c));
        }
        product.saturating_add(1)
    }
    count(tree, from)
}

/// All stop rules that wait for `from` before acting, as full stopping
/// times: on paths that miss `from` they stop at the first node off the
/// path to `from`, which never matters to settlements referenced at `from`.
/// Refuses with [`Error::TooManyStrategies`] when the subtree admits more
/// than `cap` regions.
pub fn enumerate_stopping_times(
    tree: &EventTree,
    from: NodeId,
    cap: u128,
) -> Result<Vec<StoppingTime>, Error> {
    tree.try_node(from)?;
    let count = count_stopping_times(tree, from);
    if count > cap {
        return Err(Error::TooManyStrategies { count, cap });
    }

    fn regions(tree: &EventTree, id: NodeId) -> Vec<Vec<NodeId>> {
        let node = tree.node(id);
        let mut out = vec![vec![id]];
        if node.children.is_empty() {
            return out;
        }
        let mut products: Vec<Vec<NodeId>> = vec![Vec::new()];
        for &c in &node.children {
            let below = regions(tree, c);
            let mut next = Vec::with_capacity(products.len() * below.len());
            for prefix in &products {
                for option in &below {
                    let mut merged = prefix.clone();
                    merged.extend_from_slice(option);
                    next.push(merged);
                }
            }
            products = next;
        }
        out.extend(products);
        out
    }

    // Paths that never pass through `from` are settled at the point where
    // they branch away, the same decoration for every enumerated region.
    let mut decoration = Vec::new();
    let mut cur = from;
    while let Some(p) = tree.node(cur).parent {
        for &sibling in &tree.node(p).children {
            if sibling != cur {
                decoration.push(sibling);
            }
        }
        cur = p;
    }

    let mut out = Vec::with_capacity(count as usize);
    for mut region in regions(tree, from) {
        region.extend_from_slice(&decoration);
        out.push(StoppingTime::new(tree, region).expect("enumerated regions cover by construction"));
    }
    Ok(out)
}

/// Settlement table and guaranteed outcomes at `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Best settlement the collector can force: `max_tau min_sigma`.
    pub lower: f64,
    /// Worst settlement the payer must concede: `min_sigma max_tau`.
    pub upper: f64,
    /// Number of strategies enumerated per side.
    #[serde(rename = "count")]
    pub strategy_count: usize,
    /// `table[i][j]` is the settlement of collector rule `i` against payer
    /// rule `j`.
    #[serde(rename = "table")]
    pub pair_table: Vec<Vec<f64>>,
}

/// Tabulates every strategy pair at `theta` and reads the two guaranteed
/// outcomes off the table.  The lower outcome never exceeds the upper one;
/// that inequality needs no assumption on the payoffs at all.
pub fn brute_force_values(
    spec: &GameSpec,
    theta: NodeId,
    cap: u128,
) -> Result<OracleReport, Error> {
    let count = count_stopping_times(&spec.tree, theta);
    if count > cap.min(PAIR_SIDE_CAP) {
        return Err(Error::TooManyStrategies { count, cap: cap.min(PAIR_SIDE_CAP) });
    }
    let strategies = enumerate_stopping_times(&spec.tree, theta, cap)?;
    let n = strategies.len();
    let mut table = vec![vec![0.0; n]; n];
    for (i, tau) in strategies.iter().enumerate() {
        for (j, sigma) in strategies.iter().enumerate() {
            table[i][j] = criterion(spec, tau, sigma, theta)?;
        }
    }

    let lower = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = (0..n)
        .map(|j| table.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);

    Ok(OracleReport { lower, upper, strategy_count: n, pair_table: table })
}

/// One-pass value recursion: zero at the horizon, and at an interior node
/// the continuation mean clipped from below by `xi` and from above by
/// `zeta`.  Only defined when `xi <= zeta` everywhere; refuses otherwise.
/// Shares no code with the envelope iteration on purpose.
pub fn backward_induction_value(spec: &GameSpec) -> Result<Family, Error> {
    let tree = &spec.tree;
    for id in tree.node_ids() {
        if spec.xi[id] > spec.zeta[id] + VALUE_TOL {
            return Err(Error::NotSandwiched {
                node: tree.external_id(id),
                xi: spec.xi[id],
                zeta: spec.zeta[id],
            });
        }
    }
    let mut v = vec![0.0; tree.len()];
    for &leaf in tree.leaves() {
        v[leaf.index()] = 0.0;
    }
    for t in (0..tree.horizon()).rev() {
        for &id in tree.nodes_at(t) {
            let cont: f64 = tree
                .node(id)
                .children
                .iter()
                .map(|&c| tree.node(c).cond_prob * v[c.index()])
                .sum();
            v[id.index()] = cont.max(spec.xi[id]).min(spec.zeta[id]);
        }
    }
    Family::new(tree, v)
}

/// Confirms a claimed saddle at `theta` against every unilateral deviation:
/// no collector rule beats `tau_hat` against `sigma_hat`, and no payer rule
/// beats `sigma_hat` against `tau_hat`, within [`VALUE_TOL`].
pub fn verify_saddle(
    spec: &GameSpec,
    theta: NodeId,
    tau_hat: &StoppingTime,
    sigma_hat: &StoppingTime,
    cap: u128,
) -> Result<bool, Error> {
    let strategies = enumerate_stopping_times(&spec.tree, theta, cap)?;
    let pivot = criterion(spec, tau_hat, sigma_hat, theta)?;
    for other in &strategies {
        if criterion(spec, other, sigma_hat, theta)? > pivot + VALUE_TOL {
            return Ok(false);
        }
        if criterion(spec, tau_hat, other, theta)? < pivot - VALUE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
