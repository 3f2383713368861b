//! Cases where the robust game collapses to an ordinary Nash game.
//!
//! With every player risk neutral, or with a zero deviation cap, each
//! worst-case CVaR equals the expected loss under the mean payoffs. With a
//! single-point support the only distribution is the point mass. In each
//! case the equilibria are the Nash equilibria of a fixed payoff tensor.

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::game::PayoffTensor;
use crate::risk::RiskProfile;

/// Coordinate ranges at most this wide count as a single point.
pub const SINGLETON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    RiskNeutral,
    ZeroDeviation,
    SingletonSupport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub kind: ReductionKind,
    pub payoffs: PayoffTensor,
}

pub fn special_case_reduction(f: &AmbiguitySet, risk: &RiskProfile) -> Result<Option<Reduction>> {
    if risk.len() != f.shape().num_players() {
        return Err(Error::DimensionMismatch(format!(
            "{} risk levels for a {}-player game",
            risk.len(),
            f.shape().num_players()
        )));
    }
    if risk.all_risk_neutral() {
        return Ok(Some(Reduction {
            kind: ReductionKind::RiskNeutral,
            payoffs: f.mean_tensor(),
        }));
    }
    if f.mad_cap == 0.0 {
        return Ok(Some(Reduction {
            kind: ReductionKind::ZeroDeviation,
            payoffs: f.mean_tensor(),
        }));
    }
    let ranges = match f.support.coordinate_ranges()? {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    if ranges.iter().all(|(lo, hi)| hi - lo <= SINGLETON_TOL) {
        let point = ranges.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        return Ok(Some(Reduction {
            kind: ReductionKind::SingletonSupport,
            payoffs: PayoffTensor::from_vec(f.shape().clone(), point)?,
        }));
    }
    Ok(None)
}
