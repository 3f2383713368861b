//! Finite N-player games: shapes, payoff tensors, mixed strategies.
//!
//! Payoffs are stored densely in the canonical vectorised order used by every
//! other module: the player index is outermost (slowest varying), followed by
//! the joint action `(j_1, ..., j_N)` in row-major order with `j_N` fastest.
//! For a 2x2 game this is
//!
//! ```text
//! (P1[1,1], P1[1,2], P1[2,1], P1[2,2], P2[1,1], P2[1,2], P2[2,1], P2[2,2])
//! ```

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Soft cap on the number of joint actions `prod a_i`.
pub const MAX_JOINT_ACTIONS: usize = 10_000;

/// Sums within this distance of one are renormalised; anything further off is rejected.
const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameShape {
    action_counts: Vec<usize>,
    joint: usize,
}

impl GameShape {
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.len() < 2 {
            return Err(Error::InvalidShape(format!(
                "need at least 2 players, got {}",
                action_counts.len()
            )));
        }
        if let Some((i, &a)) = action_counts.iter().enumerate().find(|(_, &a)| a < 2) {
            return Err(Error::InvalidShape(format!(
                "player {} has {} actions; every player needs at least 2",
                i + 1,
                a
            )));
        }
        let mut joint: usize = 1;
        for &a in &action_counts {
            joint = joint
                .checked_mul(a)
                .filter(|&j| j <= MAX_JOINT_ACTIONS)
                .ok_or_else(|| {
                    Error::TooLarge(format!(
                        "joint action count exceeds the limit of {}",
                        MAX_JOINT_ACTIONS
                    ))
                })?;
        }
        Ok(Self {
            action_counts,
            joint,
        })
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    /// Number of pure joint actions, `prod a_i`.
    pub fn num_joint_actions(&self) -> usize {
        self.joint
    }

    /// Length of `vec(P)`, `N * prod a_i`.
    pub fn payoff_len(&self) -> usize {
        self.joint * self.num_players()
    }

    pub fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::PlayerOutOfRange {
                index: player,
                players: self.num_players(),
            });
        }
        Ok(())
    }

    /// Row-major index of a joint action (`j_N` fastest).
    pub fn joint_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_players());
        actions
            .iter()
            .zip(&self.action_counts)
            .fold(0, |acc, (&j, &a)| {
                debug_assert!(j < a);
                acc * a + j
            })
    }

    /// Inverse of [`GameShape::joint_index`].
    pub fn joint_actions(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_players()];
        for (slot, &a) in out.iter_mut().zip(&self.action_counts).rev() {
            *slot = index % a;
            index /= a;
        }
        out
    }

    /// Position of `P^player_(actions)` inside `vec(P)`.
    pub fn vec_index(&self, player: usize, actions: &[usize]) -> usize {
        player * self.joint + self.joint_index(actions)
    }
}

/// Payoff tensor `P` with entries `P^i_(j_1..j_N)`, stored as `vec(P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    shape: GameShape,
    entries: Vec<f64>,
}

impl PayoffTensor {
    /// Builds a tensor from its canonical vectorisation (the `unvec` map).
    pub fn from_vec(shape: GameShape, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != shape.payoff_len() {
            return Err(Error::DimensionMismatch(format!(
                "payoff vector has {} entries, shape requires {}",
                entries.len(),
                shape.payoff_len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff tensor".into()));
        }
        Ok(Self { shape, entries })
    }

    pub fn zeros(shape: GameShape) -> Self {
        let entries = vec![0.0; shape.payoff_len()];
        Self { shape, entries }
    }

    /// Builds a tensor from `f(player, joint_actions)`.
    pub fn from_fn(shape: GameShape, mut f: impl FnMut(usize, &[usize]) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(shape.payoff_len());
        for player in 0..shape.num_players() {
            for joint in 0..shape.num_joint_actions() {
                entries.push(f(player, &shape.joint_actions(joint)));
            }
        }
        Self::from_vec(shape, entries)
    }

    /// Two-player tensor from row-player and column-player matrices.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let rows = row.len();
        let cols = row.first().map_or(0, Vec::len);
        let rect = |m: &[Vec<f64>]| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !rect(row) || !rect(col) {
            return Err(Error::DimensionMismatch(
                "bimatrix payoffs must be two matrices of equal shape".into(),
            ));
        }
        let shape = GameShape::new(vec![rows, cols])?;
        let entries = row.iter().chain(col).flatten().copied().collect();
        Self::from_vec(shape, entries)
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn get(&self, player: usize, actions: &[usize]) -> f64 {
        self.entries[self.shape.vec_index(player, actions)]
    }

    /// Canonical vectorisation `vec(P)`.
    pub fn vec(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    /// The block of `vec(P)` holding player `i`'s payoffs, indexed by joint action.
    pub fn player_block(&self, player: usize) -> &[f64] {
        let n = self.shape.num_joint_actions();
        &self.entries[player * n..(player + 1) * n]
    }
}

/// A point of the probability simplex `S_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    /// Validates and normalises a probability vector.
    ///
    /// Tiny negative entries (above `-1e-12`) are clamped to zero. A sum within
    /// `1e-9` of one is renormalised; larger deviations are rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty probability vector".into()));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidStrategy("non-finite probability".into()));
            }
            if *p < -1e-12 {
                return Err(Error::InvalidStrategy(format!("negative probability {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidStrategy(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        if sum != 1.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Self { probs })
    }

    /// Projects an arbitrary nonnegative-ish vector onto the simplex by
    /// clamping and rescaling. Used for numerically produced strategies.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let clamped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::InvalidStrategy(
                "weights have no positive mass".into(),
            ));
        }
        Ok(Self {
            probs: clamped.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn pure(actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; actions];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn uniform(actions: usize) -> Self {
        Self {
            probs: vec![1.0 / actions as f64; actions],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<MixedStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Self { strategies }
    }

    /// Every player mixes uniformly.
    pub fn uniform(shape: &GameShape) -> Self {
        Self::new(
            shape
                .action_counts()
                .iter()
                .map(|&a| MixedStrategy::uniform(a))
                .collect(),
        )
    }

    /// Parses the concatenation of all players' probability vectors.
    pub fn from_stacked(shape: &GameShape, stacked: &[f64]) -> Result<Self> {
        let total: usize = shape.action_counts().iter().sum();
        if stacked.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "stacked profile has {} entries, expected {}",
                stacked.len(),
                total
            )));
        }
        let mut offset = 0;
        let mut strategies = Vec::with_capacity(shape.num_players());
        for &a in shape.action_counts() {
            strategies.push(MixedStrategy::new(stacked[offset..offset + a].to_vec())?);
            offset += a;
        }
        Ok(Self::new(strategies))
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.strategies
            .iter()
            .flat_map(|s| s.probs().iter().copied())
            .collect()
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    /// `(x^{-i}, u^i)`.
    pub fn with_strategy(&self, player: usize, strategy: MixedStrategy) -> Self {
        let mut strategies = self.strategies.clone();
        strategies[player] = strategy;
        Self { strategies }
    }

    /// Checks that the profile matches `shape`, optionally skipping one player.
    pub fn check_against(&self, shape: &GameShape, skip: Option<usize>) -> Result<()> {
        if self.strategies.len() != shape.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} strategies for a {}-player game",
                self.strategies.len(),
                shape.num_players()
            )));
        }
        for (k, (s, &a)) in self
            .strategies
            .iter()
            .zip(shape.action_counts())
            .enumerate()
        {
            if Some(k) != skip && s.len() != a {
                return Err(Error::InvalidStrategy(format!(
                    "player {} strategy has {} entries, expected {}",
                    k + 1,
                    s.len(),
                    a
                )));
            }
        }
        Ok(())
    }

    /// Infinity-norm distance between stacked profiles.
    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.stacked()
            .iter()
            .zip(other.stacked())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `pi_i(P; x) = sum_j P^i_j prod_k x^k_{j_k}`.
pub fn expected_payoff(
    payoffs: &PayoffTensor,
    profile: &StrategyProfile,
    player: usize,
) -> Result<f64> {
    let shape = payoffs.shape();
    shape.check_player(player)?;
    profile.check_against(shape, None)?;
    let block = payoffs.player_block(player);
    Ok(joint_weights(shape, profile, None)
        .zip(block)
        .map(|(w, p)| w * p)
        .sum())
}

/// Iterates `prod_{k != skip} x^k_{j_k}` over joint actions in row-major order.
pub(crate) fn joint_weights<'a>(
    shape: &'a GameShape,
    profile: &'a StrategyProfile,
    skip: Option<usize>,
) -> impl Iterator<Item = f64> + 'a {
    (0..shape.num_joint_actions()).map(move |joint| {
        let actions = shape.joint_actions(joint);
        actions
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(k, &j)| profile.strategy(k).probs()[j])
            .product()
    })
}

/// The matrix `Y^i(x^{-i})` of size `(N prod a_k) x a_i` with
/// `vec(P)^T Y u = pi_i(P; x^{-i}, u)` for every `u`.
///
/// Row `(k, j_1..j_N)`, column `j` holds `[k = i][j_i = j] prod_{l != i} x^l_{j_l}`.
/// The strategy of `player` inside `profile` is ignored.
pub fn payoff_operator(
    profile: &StrategyProfile,
    player: usize,
    shape: &GameShape,
) -> Result<DMatrix<f64>> {
    shape.check_player(player)?;
    profile.check_against(shape, Some(player))?;
    let joint = shape.num_joint_actions();
    let mut y = DMatrix::zeros(shape.payoff_len(), shape.actions(player));
    for (idx, w) in joint_weights(shape, profile, Some(player)).enumerate() {
        let own = shape.joint_actions(idx)[player];
        y[(player * joint + idx, own)] = w;
    }
    Ok(y)
}
