//! Multistart equilibrium search by gap minimisation.
//!
//! Starts are every pure profile, the Nash equilibria of the mean game (two
//! players only) and `restarts` profiles drawn uniformly from the product of
//! simplices. From each start, damped best-response dynamics run first; the
//! best profile they visit is then refined by coordinate descent on the total
//! gap, moving mass between pairs of actions of one player at a time. Profiles
//! whose recomputed gap meets the tolerance are deduplicated and certified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certificate::{build_certificate, EquilibriumCertificate};
use super::nash::{nash_support_enumeration, MAX_ENUMERATION_ACTIONS};
use super::{best_response, check_inputs, equilibrium_gap, fixed_strategy_cvar};
use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::game::{MixedStrategy, StrategyProfile};
use crate::risk::RiskProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Number of random starting profiles.
    pub restarts: usize,
    pub seed: u64,
    /// Largest total gap accepted as an equilibrium.
    pub tol: f64,
    /// Infinity-norm radius within which profiles count as the same.
    pub dedupe_radius: f64,
    /// Cap on best-response steps and on coordinate-descent sweeps per start.
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 42,
            tol: 1e-6,
            dedupe_radius: 1e-3,
            max_iterations: 50,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gap tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.dedupe_radius > 0.0 && self.dedupe_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dedupe radius must be positive, got {}",
                self.dedupe_radius
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoundEquilibrium {
    pub profile: StrategyProfile,
    pub gap: f64,
    pub certificate: EquilibriumCertificate,
}

/// Equilibria found from all starts, deduplicated and sorted
/// lexicographically by stacked strategy. The list may be empty.
pub fn find_equilibria(
    f: &AmbiguitySet,
    risk: &RiskProfile,
    config: &SearchConfig,
) -> Result<Vec<FoundEquilibrium>> {
    config.validate()?;
    check_inputs(f, risk, &StrategyProfile::uniform(f.shape()))?;
    let eval = Evaluator { f, risk };
    let mut candidates = Vec::new();
    for start in starting_profiles(f, config)? {
        let refined = eval.refine(start, config)?;
        let report = equilibrium_gap(f, risk, &refined)?;
        if report.total <= config.tol {
            candidates.push((report.total, refined));
        }
    }

    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| lex_cmp(&a.1.stacked(), &b.1.stacked()))
    });
    let mut kept: Vec<(f64, StrategyProfile)> = Vec::new();
    for (gap, profile) in candidates {
        if kept
            .iter()
            .all(|(_, k)| k.distance(&profile) > config.dedupe_radius)
        {
            kept.push((gap, profile));
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.1.stacked(), &b.1.stacked()));
    kept.into_iter()
        .map(|(gap, profile)| {
            let certificate = build_certificate(f, risk, &profile)?;
            Ok(FoundEquilibrium {
                profile,
                gap,
                certificate,
            })
        })
        .collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Pure profiles, mean-game Nash points, then seeded uniform samples.
pub fn starting_profiles(f: &AmbiguitySet, config: &SearchConfig) -> Result<Vec<StrategyProfile>> {
    let shape = f.shape();
    let mut starts = Vec::new();
    for joint in 0..shape.num_joint_actions() {
        let actions = shape.joint_actions(joint);
        starts.push(StrategyProfile::new(
            actions
                .iter()
                .enumerate()
                .map(|(i, &a)| MixedStrategy::pure(shape.actions(i), a))
                .collect(),
        ));
    }
    if shape.num_players() == 2
        && shape
            .action_counts()
            .iter()
            .all(|&a| a <= MAX_ENUMERATION_ACTIONS)
    {
        starts.extend(nash_support_enumeration(&f.mean_tensor())?.equilibria);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        let strategies = shape
            .action_counts()
            .iter()
            .map(|&a| {
                let weights: Vec<f64> = (0..a).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                MixedStrategy::from_weights(&weights)
            })
            .collect::<Result<Vec<_>>>()?;
        starts.push(StrategyProfile::new(strategies));
    }
    Ok(starts)
}

struct Evaluator<'a> {
    f: &'a AmbiguitySet,
    risk: &'a RiskProfile,
}

const GRID_INTERVALS: usize = 8;
const LINE_TOL: f64 = 1e-11;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl Evaluator<'_> {
    fn players(&self) -> usize {
        self.f.shape().num_players()
    }

    fn value(&self, x: &StrategyProfile, i: usize) -> Result<f64> {
        Ok(fixed_strategy_cvar(self.f, self.risk.eps(i), x, i)?.value)
    }

    fn best(&self, x: &StrategyProfile, i: usize) -> Result<f64> {
        Ok(best_response(self.f, self.risk.eps(i), x, i)?.value)
    }

    /// Total gap, with `rho` of player `varied` supplied by the caller
    /// (it depends only on the other players).
    fn total_with(&self, x: &StrategyProfile, varied: usize, rho_varied: f64) -> Result<f64> {
        let mut total = 0.0;
        for l in 0..self.players() {
            let rho = if l == varied {
                rho_varied
            } else {
                self.best(x, l)?
            };
            total += self.value(x, l)? - rho;
        }
        Ok(total)
    }

    fn refine(&self, start: StrategyProfile, config: &SearchConfig) -> Result<StrategyProfile> {
        let (mut x, mut gap) = self.best_response_dynamics(start, config)?;
        for _ in 0..config.max_iterations {
            if gap <= config.tol {
                break;
            }
            let before = gap;
            for i in 0..self.players() {
                let rho = self.best(&x, i)?;
                let a = x.strategy(i).len();
                for j in 0..a {
                    for k in j + 1..a {
                        if let Some((next, g)) = self.line_search(&x, i, j, k, rho, gap)? {
                            x = next;
                            gap = g;
                        }
                    }
                }
            }
            if gap >= before - 1e-14 {
                break;
            }
        }
        Ok(x)
    }

    /// Fictitious-play style dynamics; returns the lowest-gap iterate.
    fn best_response_dynamics(
        &self,
        start: StrategyProfile,
        config: &SearchConfig,
    ) -> Result<(StrategyProfile, f64)> {
        let mut x = start;
        let mut best: Option<(StrategyProfile, f64)> = None;
        for t in 0..config.max_iterations {
            let mut total = 0.0;
            let mut responses = Vec::with_capacity(self.players());
            for i in 0..self.players() {
                let br = best_response(self.f, self.risk.eps(i), &x, i)?;
                total += self.value(&x, i)? - br.value;
                responses.push(br.strategy);
            }
            if best.as_ref().is_none_or(|(_, g)| total < *g) {
                best = Some((x.clone(), total));
            }
            if total <= config.tol {
                break;
            }
            let step = 1.0 / (t as f64 + 2.0);
            let strategies = x
                .strategies()
                .iter()
                .zip(&responses)
                .map(|(s, r)| {
                    let mixed: Vec<f64> = s
                        .probs()
                        .iter()
                        .zip(r.probs())
                        .map(|(p, q)| p + step * (q - p))
                        .collect();
                    MixedStrategy::new(mixed)
                })
                .collect::<Result<Vec<_>>>()?;
            x = StrategyProfile::new(strategies);
        }
        Ok(best.expect("at least one iteration"))
    }

    /// Minimises the total gap along `e_j - e_k` in player `i`'s simplex.
    /// Returns the new profile when it strictly improves on `current`.
    fn line_search(
        &self,
        x: &StrategyProfile,
        i: usize,
        j: usize,
        k: usize,
        rho: f64,
        current: f64,
    ) -> Result<Option<(StrategyProfile, f64)>> {
        let base = x.strategy(i).probs().to_vec();
        let (lo, hi) = (-base[j], base[k]);
        if hi - lo < LINE_TOL {
            return Ok(None);
        }
        let at = |t: f64| -> Result<StrategyProfile> {
            let mut p = base.clone();
            p[j] = (p[j] + t).max(0.0);
            p[k] = (p[k] - t).max(0.0);
            Ok(x.with_strategy(i, MixedStrategy::new(p)?))
        };
        let phi = |t: f64| -> Result<f64> { self.total_with(&at(t)?, i, rho) };

        let mut best_t = 0.0;
        let mut best_v = current;
        let grid: Vec<f64> = (0..=GRID_INTERVALS)
            .map(|s| lo + (hi - lo) * s as f64 / GRID_INTERVALS as f64)
            .collect();
        let mut values = Vec::with_capacity(grid.len());
        for &t in &grid {
            let v = phi(t)?;
            values.push(v);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
        // Golden section around the best grid point (or around zero).
        let centre = grid
            .iter()
            .enumerate()
            .min_by(|a, b| values[a.0].total_cmp(&values[b.0]))
            .map(|(s, _)| s)
            .expect("grid nonempty");
        let brackets = [
            (
                grid[centre.saturating_sub(1)],
                grid[(centre + 1).min(GRID_INTERVALS)],
            ),
            {
                let step = (hi - lo) / GRID_INTERVALS as f64;
                ((-step).max(lo), step.min(hi))
            },
        ];
        for (mut a, mut b) in brackets {
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = phi(c)?;
            let mut fd = phi(d)?;
            while b - a > LINE_TOL {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = phi(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = phi(d)?;
                }
            }
            for (t, v) in [(c, fc), (d, fd)] {
                if v < best_v {
                    best_v = v;
                    best_t = t;
                }
            }
            if best_v <= 0.0 {
                break;
            }
        }
        if best_v < current - 1e-15 && best_t != 0.0 {
            Ok(Some((at(best_t)?, best_v)))
        } else {
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            restarts: 0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            tol: 0.0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
