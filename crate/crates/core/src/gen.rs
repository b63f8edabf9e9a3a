//! Seeded random instance generator.
//!
//! Instances come out as [`Model`] records so they can be written straight
//! to disk or built into solver input.  The same seed and configuration
//! always produce the same instance, byte for byte, on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Model, ModelNode};

/// How payoffs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Both payoffs drawn independently and uniformly; no order imposed.
    Free,
    /// The payer cost is drawn at or above the collector reward everywhere.
    ForceSandwich,
    /// Sandwiched first, then the collector reward is pushed strictly above
    /// the payer cost at one interior node.
    InjectViolations,
    /// The collector reward is built backward so that each node dominates
    /// the expected reward one step ahead; the cost is drawn above it.
    SupermartingaleXi,
}

/// Shape and payoff ranges for generated instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub horizon: usize,
    /// Children per interior node are drawn uniformly from `1..=max_branching`.
    pub max_branching: usize,
    /// Payoffs are drawn uniformly from this closed interval.
    pub value_range: (f64, f64),
    pub mode: GenMode,
    /// When set, trees whose root admits more stop rules than this are
    /// redrawn; after many failed draws the branching degenerates to 1.
    pub max_strategies: Option<u128>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            horizon: 3,
            max_branching: 3,
            value_range: (0.0, 10.0),
            mode: GenMode::ForceSandwich,
            max_strategies: Some(200),
        }
    }
}

/// Draws one instance.  Terminal payoffs are always zero, so generated
/// models pass terminal validation without a normalization step.
pub fn generate(seed: u64, cfg: &GenConfig) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = cfg.value_range;
    assert!(lo <= hi, "empty value range");
    assert!(cfg.max_branching >= 1, "interior nodes need at least one child");

    // Shape first: redraw until the strategy count fits.  After many
    // failed draws the branching degenerates to a single path, which is
    // accepted unconditionally because no tree admits fewer stop rules.
    let mut attempts = 0;
    let mut nodes = loop {
        let branching = if attempts < 500 { cfg.max_branching } else { 1 };
        let shape = draw_shape(&mut rng, cfg.horizon, branching);
        let Some(cap) = cfg.max_strategies else { break shape };
        if attempts >= 500 || shape_strategy_count(&shape) <= cap {
            break shape;
        }
        attempts += 1;
    };

    draw_payoffs(&mut rng, &mut nodes, cfg.horizon, (lo, hi), cfg.mode);
    Model { horizon: cfg.horizon, nodes }
}

/// Stop-rule count of a freshly drawn shape, saturating like the tree
/// version.  Shapes come out of [`draw_shape`] with parents before
/// children, so one reverse pass suffices.
fn shape_strategy_count(shape: &[ModelNode]) -> u128 {
    let index_of: std::collections::HashMap<i64, usize> =
        shape.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut counts: Vec<u128> = vec![0; shape.len()];
    let mut has_children = vec![false; shape.len()];
    for i in (0..shape.len()).rev() {
        let count = if has_children[i] { counts[i].saturating_add(1) } else { 1 };
        counts[i] = count;
        if let Some(p) = shape[i].parent {
            let pi = index_of[&p];
            if has_children[pi] {
                counts[pi] = counts[pi].saturating_mul(count);
            } else {
                counts[pi] = count;
                has_children[pi] = true;
            }
        }
    }
    counts[0]
}

/// Draws the tree shape with unit-sum transition weights and no payoffs.
fn draw_shape(rng: &mut ChaCha8Rng, horizon: usize, max_branching: usize) -> Vec<ModelNode> {
    let mut nodes = vec![ModelNode {
        id: 0,
        time: 0,
        parent: None,
        cond_prob: 1.0,
        xi: 0.0,
        zeta: 0.0,
    }];
    let mut frontier = vec![0i64];
    let mut next_id = 1i64;
    for t in 1..=horizon {
        let mut new_frontier = Vec::new();
        for &parent in &frontier {
            let kids = rng.gen_range(1..=max_branching);
            let mut weights: Vec<f64> = (0..kids).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            for w in weights {
                nodes.push(ModelNode {
                    id: next_id,
                    time: t,
                    parent: Some(parent),
                    cond_prob: w,
                    xi: 0.0,
                    zeta: 0.0,
                });
                new_frontier.push(next_id);
                next_id += 1;
            }
        }
        frontier = new_frontier;
    }
    nodes
}

/// Fills payoffs in place according to the mode.  Terminal nodes stay zero.
fn draw_payoffs(
    rng: &mut ChaCha8Rng,
    nodes: &mut [ModelNode],
    horizon: usize,
    (lo, hi): (f64, f64),
    mode: GenMode,
) {
    match mode {
        GenMode::Free => {
            for n in nodes.iter_mut().filter(|n| n.time < horizon) {
                n.xi = rng.gen_range(lo..=hi);
                n.zeta = rng.gen_range(lo..=hi);
            }
        }
        GenMode::ForceSandwich | GenMode::InjectViolations => {
            for n in nodes.iter_mut().filter(|n| n.time < horizon) {
                let a = rng.gen_range(lo..=hi);
                let b = rng.gen_range(lo..=hi);
                n.xi = a.min(b);
                n.zeta = a.max(b);
            }
            if mode == GenMode::InjectViolations {
                // Violations live strictly inside the horizon so terminal
                // values stay zero; a one-step game only has the root.
                let eligible: Vec<usize> = nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| {
                        if horizon == 1 {
                            n.time == 0
                        } else {
                            n.time >= 1 && n.time < horizon
                        }
                    })
                    .map(|(i, _)| i)
                    .collect();
                let pick = eligible[rng.gen_range(0..eligible.len())];
                let bump = rng.gen_range(0.5..2.5);
                nodes[pick].xi = nodes[pick].zeta + bump;
            }
        }
        GenMode::SupermartingaleXi => {
            // Backward over levels: each interior reward sits a drawn slack
            // above the expected reward one step ahead, so stopping now is
            // never worse in expectation than waiting one step.
            for t in (0..horizon).rev() {
                for i in 0..nodes.len() {
                    if nodes[i].time != t {
                        continue;
                    }
                    let id = nodes[i].id;
                    let mean: f64 = nodes
                        .iter()
                        .filter(|c| c.parent == Some(id))
                        .map(|c| c.cond_prob * c.xi)
                        .sum();
                    nodes[i].xi = mean + rng.gen_range(0.0..2.0);
                    nodes[i].zeta = nodes[i].xi + rng.gen_range(0.0..2.0);
                }
            }
        }
    }
}
