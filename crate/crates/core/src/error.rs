use std::fmt;

use crate::game::DynkinSolution;

/// Everything that can go wrong across tree construction, stopping time
/// manipulation, solving, and the exhaustive cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The node list does not describe a single rooted tree levelled by time.
    MalformedTree(String),
    /// A branch probability is outside (0, 1] or a sibling group does not sum to one.
    BadProbabilities(String),
    /// A node index that does not belong to the tree.
    UnknownNode(usize),
    /// A stop region does not cover the part of the tree the operation needs.
    RegionMismatch(String),
    /// The discount factor must lie strictly between 0 and 1.
    BadLambda(f64),
    /// The two payoff families disagree at the horizon, so the game has no
    /// well-defined terminal settlement.
    TerminalMismatch { node: i64, xi: f64, zeta: f64 },
    /// A payoff family carries a nonzero terminal value; normalize first.
    NotNormalized { node: i64, value: f64 },
    /// Saddle data was requested from a run that is not converged with the
    /// Mokobodski condition holding.
    NotSolved,
    /// The coupled iteration did not stall within its iteration budget even
    /// though the nodewise Mokobodski test passed.  The partial run is
    /// attached so the iterates can be inspected.
    Diverged(Box<DynkinSolution>),
    /// The subtree admits more stop regions than the enumeration cap allows.
    TooManyStrategies { count: u128, cap: u128 },
    /// Backward induction needs the lower payoff at or below the upper payoff
    /// at every node.
    NotSandwiched { node: i64, xi: f64, zeta: f64 },
    /// The model text could not be parsed or carries ill-formed values.
    InvalidModel(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MalformedTree(why) => write!(f, "malformed tree: {why}"),
            Error::BadProbabilities(why) => write!(f, "bad probabilities: {why}"),
            Error::UnknownNode(index) => write!(f, "node index {index} is not part of the tree"),
            Error::RegionMismatch(why) => write!(f, "stop region mismatch: {why}"),
            Error::BadLambda(lambda) => {
                write!(f, "lambda must lie strictly between 0 and 1, got {lambda}")
            }
            Error::TerminalMismatch { node, xi, zeta } => write!(
                f,
                "terminal payoffs at node {node} disagree: xi = {xi}, zeta = {zeta}"
            ),
            Error::NotNormalized { node, value } => write!(
                f,
                "terminal payoff at node {node} is {value}, expected 0 after normalization"
            ),
            Error::NotSolved => {
                write!(f, "no converged solution with the Mokobodski condition holding")
            }
            Error::Diverged(sol) => write!(
                f,
                "iteration did not stall after {} rounds despite the nodewise payoff test passing",
                sol.iterations
            ),
            Error::TooManyStrategies { count, cap } => {
                write!(f, "{count} stop regions exceed the enumeration cap of {cap}")
            }
            Error::NotSandwiched { node, xi, zeta } => write!(
                f,
                "payoffs at node {node} are not sandwiched: xi = {xi} exceeds zeta = {zeta}"
            ),
            Error::InvalidModel(why) => write!(f, "invalid model: {why}"),
        }
    }
}

impl std::error::Error for Error {}
