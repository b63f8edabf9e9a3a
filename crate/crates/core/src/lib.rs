//! Zero-sum stopping games on finite event trees.
//!
//! Two players watch the same tree-valued process.  The collector picks a
//! stopping time `tau` and receives `xi(tau)`; the payer picks `sigma` and
//! owes `zeta(sigma)`; whoever stops first settles the game, with ties
//! settled on the collector's reward.  The collector wants the settlement
//! high, the payer wants it low.
//!
//! The solver runs a coupled pair of smallest-supermartingale recursions
//! whose difference is the game value at every node, provided the payer
//! cost dominates the collector reward.  Where that order fails the solver
//! says so instead of guessing, and a one-sided shortcut still produces
//! optimal rules when the reward already shrinks in expectation over time.
//!
//! ```
//! use dynkin::{EventTree, Family, GameSpec, NodeSpec, SolverConfig, iterate};
//!
//! // A two-step path: stop now for nothing, at the middle for 1, or let
//! // the clock run out.  The payer can cut losses at 2 any time.
//! let tree = EventTree::build(2, &[
//!     NodeSpec { id: 0, time: 0, parent: None, cond_prob: 1.0 },
//!     NodeSpec { id: 1, time: 1, parent: Some(0), cond_prob: 1.0 },
//!     NodeSpec { id: 2, time: 2, parent: Some(1), cond_prob: 1.0 },
//! ]).unwrap();
//! let xi = Family::new(&tree, vec![0.0, 1.0, 0.0]).unwrap();
//! let zeta = Family::new(&tree, vec![2.0, 2.0, 0.0]).unwrap();
//! let spec = GameSpec::new(tree, xi, zeta).unwrap();
//!
//! let sol = iterate(&spec, &SolverConfig::for_horizon(2)).unwrap();
//! assert_eq!(sol.value(spec.tree.root()).unwrap(), 1.0);
//! ```

pub mod error;
pub mod family;
pub mod game;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod snell;
pub mod tree;

pub use error::Error;
pub use family::{
    conditional_expectation, is_martingale_on, is_supermartingale, Family, StoppingTime,
};
pub use game::{
    check_mokobodski_witness, criterion, epsilon_saddle, iterate, normalize_terminal, saddle,
    supermartingale_shortcut, DynkinSolution, EpsilonSaddle, GameSpec, MokobodskiVerdict,
    SolverConfig,
};
pub use gen::{generate, GenConfig, GenMode};
pub use model::{Model, ModelNode, SolutionReport};
pub use oracle::{
    backward_induction_value, brute_force_values, count_stopping_times, enumerate_stopping_times,
    verify_saddle, OracleReport, DEFAULT_STRATEGY_CAP,
};
pub use snell::{check_optimality_criterion, lambda_hitting, minimal_optimal, snell_envelope, SnellResult};
pub use tree::{EventTree, Node, NodeId, NodeSpec};

/// Comparison tolerance for values that have been through expectation
/// arithmetic: payoff order checks, martingale tests, stop-region
/// membership by value.
pub const VALUE_TOL: f64 = 1e-9;

/// Tolerance for identities that hold exactly up to rounding: fixed-point
/// residuals, iteration stalling, discounted hitting targets.
pub const EXACT_TOL: f64 = 1e-12;
