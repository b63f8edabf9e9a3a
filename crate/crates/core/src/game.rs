//! The two-player stopping game and its value construction.
//!
//! One player picks a stop rule `tau` and collects, the other picks `sigma`
//! and pays.  The game settles at whichever rule fires first: the payoff is
//! `xi(tau)` when `tau <= sigma` (ties settle on `xi`) and `zeta(sigma)`
//! otherwise, both viewed from a reference node.  The collector maximizes,
//! the payer minimizes.
//!
//! Both payoff families are required to vanish at the horizon.  An instance
//! whose families merely agree there is reduced by
//! [`normalize_terminal`], which subtracts the conditional expectation of
//! the terminal payoff from both families and shifts every value of the
//! game by that amount without moving any optimal rule.
//!
//! The solver runs a coupled envelope iteration.  Starting from zero, each
//! round applies the envelope operator to `jp + xi` and to `j - zeta`
//! simultaneously.  Both sequences climb nodewise, and when `xi <= zeta`
//! everywhere they stall at the smallest pair of nonnegative
//! supermartingales whose difference is wedged between the payoffs.  The
//! difference `y = j - jp` is then the common value of the game seen from
//! every node, and the first nodes where `y` touches `xi`, respectively
//! `zeta`, form a saddle pair.  When some node has `xi > zeta` no finite
//! pair exists, the iterates grow without bound, and the run reports
//! exactly which nodes break the condition instead of an answer.

use crate::error::Error;
use crate::family::{
    first_hitting, is_supermartingale, phases_from_node, region_phases, Family, Phase,
    StoppingTime,
};
use crate::snell::snell_envelope;
use crate::tree::{EventTree, NodeId};
use crate::{EXACT_TOL, VALUE_TOL};

/// A game instance: the tree plus the two payoff families, with terminal
/// values pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub tree: EventTree,
    /// Payoff collected when the maximizing player stops first or ties.
    pub xi: Family,
    /// Payoff charged when the minimizing player stops strictly first.
    pub zeta: Family,
}

impl GameSpec {
    /// Builds an instance, rejecting families whose terminal values are not
    /// zero within [`VALUE_TOL`].  Use [`normalize_terminal`] first when the
    /// families only agree at the horizon.
    pub fn new(tree: EventTree, xi: Family, zeta: Family) -> Result<GameSpec, Error> {
        assert_eq!(xi.len(), tree.len(), "family lives on a different tree");
        assert_eq!(zeta.len(), tree.len(), "family lives on a different tree");
        for &leaf in tree.leaves() {
            for f in [&xi, &zeta] {
                if f[leaf].abs() > VALUE_TOL {
                    return Err(Error::NotNormalized {
                        node: tree.external_id(leaf),
                        value: f[leaf],
                    });
                }
            }
        }
        Ok(GameSpec { tree, xi, zeta })
    }
}

/// Subtracts the conditional expectation of the terminal payoff from both
/// families, so the returned pair vanishes at the horizon exactly.  The two
/// inputs must agree at the horizon within [`VALUE_TOL`]; every value of
/// the game shifts by the subtracted family and nothing else changes.
pub fn normalize_terminal(
    tree: &EventTree,
    xi: &Family,
    zeta: &Family,
) -> Result<(Family, Family), Error> {
    assert_eq!(xi.len(), tree.len(), "family lives on a different tree");
    assert_eq!(zeta.len(), tree.len(), "family lives on a different tree");
    for &leaf in tree.leaves() {
        if (xi[leaf] - zeta[leaf]).abs() > VALUE_TOL {
            return Err(Error::TerminalMismatch {
                node: tree.external_id(leaf),
                xi: xi[leaf],
                zeta: zeta[leaf],
            });
        }
    }

    let mut carried = vec![0.0; tree.len()];
    for &leaf in tree.leaves() {
        carried[leaf.index()] = xi[leaf];
    }
    for t in (0..tree.horizon()).rev() {
        for &id in tree.nodes_at(t) {
            carried[id.index()] = tree
                .node(id)
                .children
                .iter()
                .map(|&c| tree.node(c).cond_prob * carried[c.index()])
                .sum();
        }
    }

    let xi_out = Family::from_fn(tree, |id| {
        if tree.is_leaf(id) { 0.0 } else { xi[id] - carried[id.index()] }
    });
    let zeta_out = Family::from_fn(tree, |id| {
        if tree.is_leaf(id) { 0.0 } else { zeta[id] - carried[id.index()] }
    });
    Ok((xi_out, zeta_out))
}

/// Expected settlement of the game under a fixed pair of stop rules, seen
/// from `theta`.  Both rules must stop at or after `theta` on every path
/// through it.
pub fn criterion(
    spec: &GameSpec,
    tau: &StoppingTime,
    sigma: &StoppingTime,
    theta: NodeId,
) -> Result<f64, Error> {
    let tree = &spec.tree;
    tree.try_node(theta)?;
    let tau_phases = region_phases(tree, tau.region())?;
    let sigma_phases = region_phases(tree, sigma.region())?;
    for (name, phases) in [("tau", &tau_phases), ("sigma", &sigma_phases)] {
        if phases[theta.index()] == Phase::After {
            return Err(Error::RegionMismatch(format!(
                "{name} stops strictly above the reference node index {}",
                theta.index()
            )));
        }
    }

    let base = tree.node(theta).prob();
    let mut total = 0.0;
    let mut stack = vec![theta];
    while let Some(n) = stack.pop() {
        let weight = tree.node(n).prob() / base;
        if tau_phases[n.index()] == Phase::At {
            total += weight * spec.xi[n];
        } else if sigma_phases[n.index()] == Phase::At {
            total += weight * spec.zeta[n];
        } else {
            debug_assert!(!tree.is_leaf(n), "covering rules settle every path");
            stack.extend(tree.node(n).children.iter().copied());
        }
    }
    Ok(total)
}

/// Outcome of the nodewise payoff comparison.  `FailsAt` lists every node
/// where `xi` exceeds `zeta` beyond [`VALUE_TOL`], in breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub enum MokobodskiVerdict {
    Holds,
    FailsAt(Vec<NodeId>),
}

impl MokobodskiVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, MokobodskiVerdict::Holds)
    }
}

/// Iteration budget and stall tolerance for [`iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Sup-norm stall threshold between consecutive rounds.
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    /// Default budget for a given horizon: stall at [`EXACT_TOL`] within
    /// `10 * horizon + 10` rounds.  On a finite tree the iteration reaches
    /// its limit after finitely many rounds, so the generous budget only
    /// matters for instances that genuinely diverge.
    pub fn for_horizon(horizon: usize) -> SolverConfig {
        SolverConfig { tol: EXACT_TOL, max_iter: 10 * horizon + 10 }
    }
}

/// Everything [`iterate`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DynkinSolution {
    /// Limit of the first envelope sequence.
    pub j: Family,
    /// Limit of the second envelope sequence.
    pub jp: Family,
    /// `j - jp`, the value of the game at every node once converged.
    pub y: Family,
    /// Rounds performed before stalling or hitting the budget.
    pub iterations: usize,
    pub converged: bool,
    pub mokobodski: MokobodskiVerdict,
    /// Saddle rules from the root, present exactly when the nodewise payoff
    /// test holds and the iteration converged.
    pub tau_star: Option<StoppingTime>,
    pub sigma_star: Option<StoppingTime>,
    /// Every recorded pair of iterates, starting with the zero pair.
    pub history: Vec<(Family, Family)>,
}

impl DynkinSolution {
    /// Game value seen from `theta`.
    pub fn value(&self, theta: NodeId) -> Result<f64, Error> {
        if !(self.converged && self.mokobodski.holds()) {
            return Err(Error::NotSolved);
        }
        if theta.index() >= self.y.len() {
            return Err(Error::UnknownNode(theta.index()));
        }
        Ok(self.y[theta])
    }
}

/// Runs the coupled envelope iteration from the zero pair.
///
/// Returns a solution when the iterates stall within the budget, and also
/// when the nodewise payoff test fails: the latter is a verdict, not an
/// error, and the attached history shows the unbounded climb.  An instance
/// that passes the nodewise test but fails to stall signals a defect
/// somewhere, so it comes back as [`Error::Diverged`] carrying the partial
/// run.
pub fn iterate(spec: &GameSpec, config: &SolverConfig) -> Result<DynkinSolution, Error> {
    let tree = &spec.tree;
    let violations: Vec<NodeId> = tree
        .node_ids()
        .filter(|&id| spec.xi[id] > spec.zeta[id] + VALUE_TOL)
        .collect();
    let mokobodski = if violations.is_empty() {
        MokobodskiVerdict::Holds
    } else {
        MokobodskiVerdict::FailsAt(violations)
    };

    let mut j = Family::constant(tree, 0.0);
    let mut jp = Family::constant(tree, 0.0);
    let mut history = vec![(j.clone(), jp.clone())];
    let mut converged = false;
    let mut iterations = 0;

    for round in 1..=config.max_iter {
        let next_j = snell_envelope(tree, &jp.plus(&spec.xi)).envelope;
        let next_jp = snell_envelope(tree, &j.minus(&spec.zeta)).envelope;
        let step = next_j.sup_distance(&j).max(next_jp.sup_distance(&jp));
        j = next_j;
        jp = next_jp;
        iterations = round;
        history.push((j.clone(), jp.clone()));
        if step <= config.tol {
            converged = true;
            break;
        }
    }

    let y = j.minus(&jp);
    let (tau_star, sigma_star) = if converged && mokobodski.holds() {
        let (tau, sigma) = saddle_regions(spec, &y, tree.root());
        (Some(tau), Some(sigma))
    } else {
        (None, None)
    };

    let solution = DynkinSolution {
        j,
        jp,
        y,
        iterations,
        converged,
        mokobodski,
        tau_star,
        sigma_star,
        history,
    };
    if !solution.converged && solution.mokobodski.holds() {
        return Err(Error::Diverged(Box::new(solution)));
    }
    Ok(solution)
}

fn saddle_regions(spec: &GameSpec, y: &Family, theta: NodeId) -> (StoppingTime, StoppingTime) {
    let tree = &spec.tree;
    let base = phases_from_node(tree, theta);
    let tau = first_hitting(tree, &base, |id| (y[id] - spec.xi[id]).abs() <= VALUE_TOL);
    let sigma = first_hitting(tree, &base, |id| (y[id] - spec.zeta[id]).abs() <= VALUE_TOL);
    (tau, sigma)
}

/// Saddle rules seen from `theta`: the collector first stops where the
/// value touches `xi`, the payer where it touches `zeta`.  At the horizon
/// everything is zero, so both rules are total.
pub fn saddle(
    spec: &GameSpec,
    sol: &DynkinSolution,
    theta: NodeId,
) -> Result<(StoppingTime, StoppingTime), Error> {
    if !(sol.converged && sol.mokobodski.holds()) {
        return Err(Error::NotSolved);
    }
    spec.tree.try_node(theta)?;
    Ok(saddle_regions(spec, &sol.y, theta))
}

/// An almost-saddle at level `lambda`, together with the slack each side
/// concedes.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSaddle {
    pub lambda: f64,
    pub tau_lambda: StoppingTime,
    pub sigma_lambda: StoppingTime,
    /// What the collector may lose: `(1 - lambda) * j(theta)`.
    pub lower_slack: f64,
    /// What the payer may concede: `(1 - lambda) * jp(theta)`.
    pub upper_slack: f64,
}

/// Level-`lambda` rules seen from `theta`.  The collector stops at the
/// first node where `lambda * j <= jp + xi`, the payer at the first node
/// where `lambda * jp <= j - zeta`.  Against any opposing rule the
/// settlement misses the value by at most the reported slacks.
pub fn epsilon_saddle(
    spec: &GameSpec,
    sol: &DynkinSolution,
    lambda: f64,
    theta: NodeId,
) -> Result<EpsilonSaddle, Error> {
    if !(sol.converged && sol.mokobodski.holds()) {
        return Err(Error::NotSolved);
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadLambda(lambda));
    }
    spec.tree.try_node(theta)?;
    let tree = &spec.tree;
    let base = phases_from_node(tree, theta);
    let tau_lambda = first_hitting(tree, &base, |id| {
        lambda * sol.j[id] <= sol.jp[id] + spec.xi[id] + EXACT_TOL
    });
    let sigma_lambda = first_hitting(tree, &base, |id| {
        lambda * sol.jp[id] <= sol.j[id] - spec.zeta[id] + EXACT_TOL
    });
    Ok(EpsilonSaddle {
        lambda,
        tau_lambda,
        sigma_lambda,
        lower_slack: (1.0 - lambda) * sol.j[theta],
        upper_slack: (1.0 - lambda) * sol.jp[theta],
    })
}

/// Tests whether `(h, hp)` witnesses the Mokobodski condition: both
/// families nonnegative supermartingales whose difference is wedged between
/// `xi` and `zeta`, all within [`VALUE_TOL`].  Any such pair dominates the
/// converged iterates nodewise.
pub fn check_mokobodski_witness(spec: &GameSpec, h: &Family, hp: &Family) -> bool {
    let tree = &spec.tree;
    assert_eq!(h.len(), tree.len(), "family lives on a different tree");
    assert_eq!(hp.len(), tree.len(), "family lives on a different tree");
    let nonnegative = tree
        .node_ids()
        .all(|id| h[id] >= -VALUE_TOL && hp[id] >= -VALUE_TOL);
    let wedged = tree.node_ids().all(|id| {
        let diff = h[id] - hp[id];
        spec.xi[id] - VALUE_TOL <= diff && diff <= spec.zeta[id] + VALUE_TOL
    });
    nonnegative
        && wedged
        && is_supermartingale(tree, h)
        && is_supermartingale(tree, hp)
}

/// When `xi` is a supermartingale, stopping immediately is optimal for the
/// collector no matter what the payer does, because settling at `theta`
/// pays `xi(theta)` while any later settlement under the payer's horizon
/// rule averages a family that only drifts down.  Returns the pair
/// (stop at `theta`'s date, never stop early) and the value `xi(theta)`.
/// This holds even when the nodewise payoff comparison fails.
pub fn supermartingale_shortcut(
    spec: &GameSpec,
    theta: NodeId,
) -> Result<Option<(StoppingTime, StoppingTime, f64)>, Error> {
    let tree = &spec.tree;
    tree.try_node(theta)?;
    if !is_supermartingale(tree, &spec.xi) {
        return Ok(None);
    }
    let tau = StoppingTime::at_time(tree, tree.node(theta).time)?;
    let sigma = StoppingTime::horizon(tree);
    Ok(Some((tau, sigma, spec.xi[theta])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::NodeSpec;

    fn chain_tree() -> EventTree {
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

    fn chain_game(xi: [f64; 3], zeta: [f64; 3]) -> GameSpec {
        let tree = chain_tree();
        let xi = Family::new(&tree, xi.to_vec()).unwrap();
        let zeta = Family::new(&tree, zeta.to_vec()).unwrap();
        GameSpec::new(tree, xi, zeta).unwrap()
    }

    fn binomial_game() -> GameSpec {
        let mut specs = vec![NodeSpec { id: 0, time: 0, parent: None, cond_prob: 1.0 }];
        specs.push(NodeSpec { id: 1, time: 1, parent: Some(0), cond_prob: 0.5 });
        specs.push(NodeSpec { id: 2, time: 1, parent: Some(0), cond_prob: 0.5 });
        for (id, parent) in [(3, 1), (4, 1), (5, 2), (6, 2)] {
            specs.push(NodeSpec { id, time: 2, parent: Some(parent), cond_prob: 0.5 });
        }
        let tree = EventTree::build(2, &specs).unwrap();
        let xi = Family::new(&tree, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let zeta = Family::new(&tree, vec![3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        GameSpec::new(tree, xi, zeta).unwrap()
    }

    fn solve(spec: &GameSpec) -> DynkinSolution {
        iterate(spec, &SolverConfig::for_horizon(spec.tree.horizon())).unwrap()
    }

    #[test]
    fn criterion_pays_xi_on_ties() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let tree = &spec.tree;
        let at_t1 = StoppingTime::at_time(tree, 1).unwrap();
        let same = criterion(&spec, &at_t1, &at_t1, tree.root()).unwrap();
        assert_eq!(same, 1.0);
    }

    #[test]
    fn criterion_pays_zeta_when_the_payer_is_strictly_first() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let tree = &spec.tree;
        let horizon = StoppingTime::horizon(tree);
        let at_t1 = StoppingTime::at_time(tree, 1).unwrap();
        let paid = criterion(&spec, &horizon, &at_t1, tree.root()).unwrap();
        assert_eq!(paid, 2.0);
    }

    #[test]
    fn criterion_rejects_rules_that_settled_above_the_reference_node() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let tree = &spec.tree;
        let at_root = StoppingTime::at_time(tree, 0).unwrap();
        let horizon = StoppingTime::horizon(tree);
        let err = criterion(&spec, &at_root, &horizon, NodeId(1)).unwrap_err();
        assert!(matches!(err, Error::RegionMismatch(_)), "got {err:?}");
    }

    #[test]
    fn wedge_with_zero_inside_converges_immediately_to_zero() {
        let spec = chain_game([-1.0, -0.5, 0.0], [2.0, 0.5, 0.0]);
        let sol = solve(&spec);
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.j, Family::constant(&spec.tree, 0.0));
        assert_eq!(sol.jp, Family::constant(&spec.tree, 0.0));
        assert!(check_mokobodski_witness(
            &spec,
            &Family::constant(&spec.tree, 0.0),
            &Family::constant(&spec.tree, 0.0)
        ));
        // Both players coast to the horizon.
        assert_eq!(sol.tau_star.as_ref().unwrap().region(), spec.tree.leaves());
        assert_eq!(sol.sigma_star.as_ref().unwrap().region(), spec.tree.leaves());
    }

    #[test]
    fn chain_game_solves_to_the_recorded_numbers() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let sol = solve(&spec);
        assert!(sol.converged);
        assert_eq!(sol.iterations, 2);
        assert!(sol.mokobodski.holds());
        assert_eq!(sol.j.values(), &[1.0, 1.0, 0.0]);
        assert_eq!(sol.jp.values(), &[0.0, 0.0, 0.0]);
        assert_eq!(sol.y.values(), &[1.0, 1.0, 0.0]);
        assert_eq!(sol.value(spec.tree.root()).unwrap(), 1.0);
        assert_eq!(sol.tau_star.as_ref().unwrap().region(), &[NodeId(1)]);
        assert_eq!(sol.sigma_star.as_ref().unwrap().region(), &[NodeId(2)]);
        let settled = criterion(
            &spec,
            sol.tau_star.as_ref().unwrap(),
            sol.sigma_star.as_ref().unwrap(),
            spec.tree.root(),
        )
        .unwrap();
        assert_eq!(settled, 1.0);
    }

    #[test]
    fn binomial_game_value_splits_the_upper_branch() {
        let spec = binomial_game();
        let sol = solve(&spec);
        assert!(sol.converged);
        assert!((sol.value(spec.tree.root()).unwrap() - 0.5).abs() <= EXACT_TOL);
        assert_eq!(sol.tau_star.as_ref().unwrap().region(), &[NodeId(1), NodeId(2)]);
        assert_eq!(sol.sigma_star.as_ref().unwrap().region(), spec.tree.leaves());
    }

    #[test]
    fn value_requires_a_solved_run() {
        let spec = chain_game([3.0, 2.0, 0.0], [1.0, 1.0, 0.0]);
        let sol = solve(&spec);
        assert_eq!(sol.value(spec.tree.root()), Err(Error::NotSolved));
    }

    #[test]
    fn nodewise_failure_is_a_verdict_with_the_exact_set() {
        let spec = chain_game([3.0, 2.0, 0.0], [1.0, 1.0, 0.0]);
        let sol = solve(&spec);
        assert!(!sol.converged);
        assert_eq!(
            sol.mokobodski,
            MokobodskiVerdict::FailsAt(vec![NodeId(0), NodeId(1)])
        );
        assert!(sol.tau_star.is_none());
        assert!(sol.sigma_star.is_none());

        // The iterates climb without stalling.
        let at_root: Vec<f64> = sol.history.iter().map(|(j, _)| j.values()[0]).collect();
        assert!(at_root.windows(2).all(|w| w[0] <= w[1] + EXACT_TOL));
        assert!(at_root.last().unwrap() > &10.0);
    }

    #[test]
    fn divergence_without_a_nodewise_violation_is_an_error() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let err = iterate(&spec, &SolverConfig { tol: EXACT_TOL, max_iter: 1 }).unwrap_err();
        match err {
            Error::Diverged(partial) => {
                assert_eq!(partial.iterations, 1);
                assert!(!partial.converged);
            }
            other => panic!("expected a divergence report, got {other:?}"),
        }
    }

    #[test]
    fn normalization_shifts_both_families_by_the_terminal_expectation() {
        let tree = chain_tree();
        let xi = Family::new(&tree, vec![0.0, 1.0, 2.0]).unwrap();
        let zeta = Family::new(&tree, vec![3.0, 3.0, 2.0]).unwrap();
        let (nx, nz) = normalize_terminal(&tree, &xi, &zeta).unwrap();
        assert_eq!(nx.values(), &[-2.0, -1.0, 0.0]);
        assert_eq!(nz.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn normalization_is_the_identity_on_already_flat_terminals() {
        let spec = binomial_game();
        let (nx, nz) = normalize_terminal(&spec.tree, &spec.xi, &spec.zeta).unwrap();
        assert_eq!(nx, spec.xi);
        assert_eq!(nz, spec.zeta);
    }

    #[test]
    fn normalization_rejects_disagreeing_terminals() {
        let tree = chain_tree();
        let xi = Family::new(&tree, vec![0.0, 1.0, 2.0]).unwrap();
        let zeta = Family::new(&tree, vec![3.0, 3.0, 1.0]).unwrap();
        let err = normalize_terminal(&tree, &xi, &zeta).unwrap_err();
        assert!(matches!(err, Error::TerminalMismatch { .. }), "got {err:?}");
    }

    #[test]
    fn constant_families_normalize_to_zero() {
        let tree = chain_tree();
        let c = Family::constant(&tree, 4.25);
        let (nx, nz) = normalize_terminal(&tree, &c, &c).unwrap();
        assert_eq!(nx, Family::constant(&tree, 0.0));
        assert_eq!(nz, Family::constant(&tree, 0.0));
    }

    #[test]
    fn game_spec_rejects_unnormalized_terminals() {
        let tree = chain_tree();
        let xi = Family::new(&tree, vec![0.0, 1.0, 2.0]).unwrap();
        let zeta = Family::new(&tree, vec![3.0, 3.0, 2.0]).unwrap();
        let err = GameSpec::new(tree, xi, zeta).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }), "got {err:?}");
    }

    #[test]
    fn epsilon_rules_on_the_chain() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let sol = solve(&spec);
        let eps = epsilon_saddle(&spec, &sol, 0.5, spec.tree.root()).unwrap();
        assert_eq!(eps.tau_lambda.region(), &[NodeId(1)]);
        // With jp identically zero the payer's rule coincides with the
        // saddle rule at every level.
        assert_eq!(eps.sigma_lambda.region(), &[NodeId(2)]);
        assert_eq!(eps.lower_slack, 0.5);
        assert_eq!(eps.upper_slack, 0.0);

        let tight = epsilon_saddle(&spec, &sol, 0.99, spec.tree.root()).unwrap();
        assert!((tight.lower_slack - 0.01).abs() <= EXACT_TOL);

        let err = epsilon_saddle(&spec, &sol, 1.5, spec.tree.root()).unwrap_err();
        assert!(matches!(err, Error::BadLambda(_)), "got {err:?}");
    }

    #[test]
    fn witness_check_accepts_the_converged_pair_and_rejects_cheats() {
        let spec = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        let sol = solve(&spec);
        assert!(check_mokobodski_witness(&spec, &sol.j, &sol.jp));

        // A wedge that dips below xi somewhere.
        let too_low = Family::constant(&spec.tree, 0.0);
        assert!(!check_mokobodski_witness(&spec, &too_low, &too_low));

        // Negative families are out even when the wedge is right.
        let h = Family::new(&spec.tree, vec![0.0, 0.0, -1.0]).unwrap();
        let hp = Family::new(&spec.tree, vec![-1.0, -1.0, -1.0]).unwrap();
        assert!(!check_mokobodski_witness(&spec, &h, &hp));
    }

    #[test]
    fn no_witness_exists_when_the_nodewise_test_fails() {
        let spec = chain_game([3.0, 2.0, 0.0], [1.0, 1.0, 0.0]);
        // The wedge condition is unsatisfiable at a violating node, so any
        // candidate pair must fail.
        for (h, hp) in [
            (Family::constant(&spec.tree, 0.0), Family::constant(&spec.tree, 0.0)),
            (Family::constant(&spec.tree, 5.0), Family::constant(&spec.tree, 1.0)),
        ] {
            assert!(!check_mokobodski_witness(&spec, &h, &hp));
        }
    }

    #[test]
    fn shortcut_applies_exactly_when_xi_drifts_down() {
        let spec = chain_game([3.0, 2.0, 0.0], [1.0, 1.0, 0.0]);
        let (tau, sigma, value) =
            supermartingale_shortcut(&spec, spec.tree.root()).unwrap().unwrap();
        assert_eq!(tau.region(), &[NodeId(0)]);
        assert_eq!(sigma.region(), &[NodeId(2)]);
        assert_eq!(value, 3.0);
        let settled = criterion(&spec, &tau, &sigma, spec.tree.root()).unwrap();
        assert!((settled - 3.0).abs() <= EXACT_TOL);

        // At the middle node the shortcut stops at that date instead.
        let (tau1, _, v1) = supermartingale_shortcut(&spec, NodeId(1)).unwrap().unwrap();
        assert_eq!(tau1.region(), &[NodeId(1)]);
        assert_eq!(v1, 2.0);

        let rising = chain_game([0.0, 1.0, 0.0], [2.0, 2.0, 0.0]);
        assert!(supermartingale_shortcut(&rising, rising.tree.root()).unwrap().is_none());
    }

    #[test]
    fn saddle_from_interior_nodes() {
        let spec = binomial_game();
        let sol = solve(&spec);
        let (tau, sigma) = saddle(&spec, &sol, NodeId(1)).unwrap();
        // Seen from the upper branch the collector stops right away, and
        // the payer still coasts to the horizon.
        assert_eq!(tau.region(), &[NodeId(1), NodeId(2)]);
        assert_eq!(sigma.region(), spec.tree.leaves());
    }
}
