//! Best responses, equilibrium gaps, certificates, search and reductions.
//!
//! A profile `x` is an equilibrium when every player's strategy minimises
//! their worst-case CVaR given the others. The gap of player `i` is the
//! worst-case CVaR at `x^i` minus the best-response value `rho_i`; the
//! profile is an equilibrium exactly when all gaps vanish.

pub mod certificate;
pub mod nash;
pub mod reduction;
pub mod search;

pub use certificate::{
    build_certificate, EquilibriumCertificate, PlayerCertificate, ResidualRow, RowKind,
};
pub use nash::{nash_support_enumeration, NashResult};
pub use reduction::{special_case_reduction, Reduction, ReductionKind};
pub use search::{find_equilibria, FoundEquilibrium, SearchConfig};

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::game::{payoff_operator, MixedStrategy, StrategyProfile};
use crate::risk::{
    solve_robust_cvar, BestResponseDuals, RiskProfile, StrategyMode, WorstCaseCvarResult,
};

/// Gaps down to this value are treated as LP round-off.
pub const GAP_ROUNDOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseResult {
    pub player: usize,
    pub strategy: MixedStrategy,
    /// `rho_i`, the minimal worst-case CVaR.
    pub value: f64,
    pub program: WorstCaseCvarResult,
    pub duals: BestResponseDuals,
}

/// Minimises player `i`'s worst-case CVaR over their simplex, holding the
/// other strategies of `profile` fixed. Player `i`'s own entry is ignored.
pub fn best_response(
    f: &AmbiguitySet,
    eps: f64,
    profile: &StrategyProfile,
    player: usize,
) -> Result<BestResponseResult> {
    f.shape().check_player(player)?;
    profile.check_against(f.shape(), Some(player))?;
    let y = payoff_operator(profile, player, f.shape())?;
    let sol = solve_robust_cvar(f, eps, &y, StrategyMode::Free).map_err(|e| annotate(e, player))?;
    let u = sol.strategy.expect("free mode returns a strategy");
    Ok(BestResponseResult {
        player,
        strategy: MixedStrategy::new(u)?,
        value: sol.inner.value,
        program: sol.inner,
        duals: sol.duals.expect("free mode returns duals"),
    })
}

pub(crate) fn fixed_strategy_cvar(
    f: &AmbiguitySet,
    eps: f64,
    profile: &StrategyProfile,
    player: usize,
) -> Result<WorstCaseCvarResult> {
    let y = payoff_operator(profile, player, f.shape())?;
    let u = profile.strategy(player).probs();
    Ok(solve_robust_cvar(f, eps, &y, StrategyMode::Fixed(u))
        .map_err(|e| annotate(e, player))?
        .inner)
}

fn annotate(e: Error, player: usize) -> Error {
    match e {
        Error::LpFailure { status, detail } => Error::LpFailure {
            status,
            detail: format!("player {}: {}", player + 1, detail),
        },
        Error::AmbiguityInconsistent { status, detail } => Error::AmbiguityInconsistent {
            status,
            detail: format!("player {}: {}", player + 1, detail),
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGap {
    /// Worst-case CVaR of the player's current strategy.
    pub current: f64,
    pub best: BestResponseResult,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub players: Vec<PlayerGap>,
    pub total: f64,
}

fn check_inputs(f: &AmbiguitySet, risk: &RiskProfile, profile: &StrategyProfile) -> Result<()> {
    profile.check_against(f.shape(), None)?;
    if risk.len() != f.shape().num_players() {
        return Err(Error::DimensionMismatch(format!(
            "{} risk levels for a {}-player game",
            risk.len(),
            f.shape().num_players()
        )));
    }
    Ok(())
}

pub fn player_gap(
    f: &AmbiguitySet,
    eps: f64,
    profile: &StrategyProfile,
    player: usize,
) -> Result<PlayerGap> {
    let current = fixed_strategy_cvar(f, eps, profile, player)?.value;
    let best = best_response(f, eps, profile, player)?;
    Ok(PlayerGap {
        current,
        gap: current - best.value,
        best,
    })
}

/// Per-player gaps `V_i(x) - rho_i(x^{-i})` and their sum.
pub fn equilibrium_gap(
    f: &AmbiguitySet,
    risk: &RiskProfile,
    profile: &StrategyProfile,
) -> Result<GapReport> {
    check_inputs(f, risk, profile)?;
    let players = (0..f.shape().num_players())
        .map(|i| player_gap(f, risk.eps(i), profile, i))
        .collect::<Result<Vec<_>>>()?;
    let total = players.iter().map(|p| p.gap).sum();
    Ok(GapReport { players, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub is_equilibrium: bool,
    pub tol: f64,
    pub report: GapReport,
}

pub fn verify_equilibrium(
    f: &AmbiguitySet,
    risk: &RiskProfile,
    profile: &StrategyProfile,
    tol: f64,
) -> Result<Verification> {
    let report = equilibrium_gap(f, risk, profile)?;
    Ok(Verification {
        is_equilibrium: report.total <= tol,
        tol,
        report,
    })
}
