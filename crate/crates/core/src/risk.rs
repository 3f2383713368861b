//! CVaR of discrete losses and worst-case CVaR over a moment ambiguity set.
//!
//! Losses are negated payoffs throughout. The worst case over `F` is never
//! searched over distributions; it is the optimum of the finite LP obtained
//! by exchanging `sup_Q` with the CVaR minimisation over `zeta`, dualising the
//! moment problem, and dualising the two robust constraints over the support:
//!
//! ```text
//! min  zeta + (alpha + m'beta + s gamma) / eps
//! s.t. alpha - m'lambda + m'kappa + h'xi >= 0
//!      -lambda + kappa + W'xi - beta = 0
//!      lambda + kappa - gamma e <= 0
//!      alpha - m'delta + m'nu + h'theta + zeta >= 0
//!      -delta + nu + W'theta - beta - Y u = 0
//!      delta + nu - gamma e <= 0
//!      gamma >= 0, lambda, kappa, delta, nu >= 0, xi, theta <= 0
//! ```
//!
//! With `u` fixed this is the worst-case CVaR of the strategy; with
//! `u` free on the simplex it is the best-response program.

use nalgebra::DMatrix;

use crate::ambiguity::{is_member, AmbiguitySet, DiscreteDistribution, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::game::{expected_payoff, payoff_operator, StrategyProfile};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};

/// Per-player CVaR levels `eps_i` in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    eps: Vec<f64>,
}

impl RiskProfile {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        for (player, &value) in eps.iter().enumerate() {
            check_level(player, value)?;
        }
        Ok(Self { eps })
    }

    pub fn risk_neutral(players: usize) -> Self {
        Self {
            eps: vec![1.0; players],
        }
    }

    pub fn eps(&self, player: usize) -> f64 {
        self.eps[player]
    }

    pub fn levels(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// `sigma_i = (1 - eps_i) / eps_i`.
    pub fn sigma(&self, player: usize) -> f64 {
        sigma(self.eps[player])
    }

    /// Strictly below one.
    pub fn is_risk_averse(&self, player: usize) -> bool {
        self.eps[player] < 1.0
    }

    pub fn all_risk_neutral(&self) -> bool {
        self.eps.iter().all(|&e| e == 1.0)
    }
}

pub fn sigma(eps: f64) -> f64 {
    (1.0 - eps) / eps
}

fn check_level(player: usize, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRiskLevel { player, value })
    }
}

/// `min_zeta zeta + E[(L - zeta)^+] / eps` for a discrete loss distribution,
/// evaluated exactly as the mean of the worst `eps` probability tail.
pub fn cvar_discrete(losses: &[f64], probs: &[f64], eps: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::InvalidDistribution("empty loss distribution".into()));
    }
    if losses.len() != probs.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} losses but {} probabilities",
            losses.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) || losses.iter().any(|l| !l.is_finite())
    {
        return Err(Error::InvalidDistribution(
            "invalid loss or probability".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    check_level(0, eps)?;

    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]));
    let mut remaining = eps;
    let mut acc = 0.0;
    for &k in &order {
        if remaining <= 0.0 {
            break;
        }
        let take = probs[k].min(remaining);
        acc += take * losses[k];
        remaining -= take;
    }
    // Rounding in the probabilities can leave a sliver of tail mass; it
    // belongs to the smallest loss.
    if remaining > 0.0 {
        acc += remaining * losses[*order.last().expect("nonempty")];
    }
    Ok(acc / eps)
}

/// Optimal variables of the worst-case CVaR program.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseCvarResult {
    pub value: f64,
    pub zeta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub kappa: Vec<f64>,
    pub delta: Vec<f64>,
    pub nu: Vec<f64>,
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Multipliers of the best-response program, named after the variables of
/// its LP dual: `max rho` subject to the `tau, f, phi, g` constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseDuals {
    pub rho: f64,
    pub tau: Vec<f64>,
    pub f: Vec<f64>,
    pub phi: Vec<f64>,
    pub g: Vec<f64>,
    /// Multiplier of the nonnegative-part constraint; equals `sigma_i` at optimum.
    pub tail_weight: f64,
    /// Multiplier of the loss constraint; equals one at optimum.
    pub loss_weight: f64,
}

pub(crate) enum StrategyMode<'a> {
    Fixed(&'a [f64]),
    Free,
}

/// Variable offsets inside the robust CVaR program.
struct Layout {
    n: usize,
    rows: usize,
    actions: usize,
    zeta: usize,
    alpha: usize,
    gamma: usize,
    beta: usize,
    lambda: usize,
    kappa: usize,
    delta: usize,
    nu: usize,
    xi: usize,
    theta: usize,
    u: usize,
    total: usize,
}

impl Layout {
    fn new(n: usize, rows: usize, actions: usize) -> Self {
        let zeta = 0;
        let alpha = 1;
        let gamma = 2;
        let beta = 3;
        let lambda = beta + n;
        let kappa = lambda + n;
        let delta = kappa + n;
        let nu = delta + n;
        let xi = nu + n;
        let theta = xi + rows;
        let u = theta + rows;
        Self {
            n,
            rows,
            actions,
            zeta,
            alpha,
            gamma,
            beta,
            lambda,
            kappa,
            delta,
            nu,
            xi,
            theta,
            u,
            total: u + actions,
        }
    }
}

// Row indices. Inequalities: [c_tail, c_loss, tail caps (n), loss caps (n)];
// equalities: [tail balance (n), loss balance (n), simplex (free mode only)].
const UB_TAIL: usize = 0;
const UB_LOSS: usize = 1;
const UB_TAIL_CAP: usize = 2;

pub(crate) struct RobustCvarSolution {
    pub inner: WorstCaseCvarResult,
    pub strategy: Option<Vec<f64>>,
    pub duals: Option<BestResponseDuals>,
}

/// Builds and solves the robust CVaR program for player payoff operator `y`.
pub(crate) fn solve_robust_cvar(
    f: &AmbiguitySet,
    eps: f64,
    y: &DMatrix<f64>,
    mode: StrategyMode<'_>,
) -> Result<RobustCvarSolution> {
    let program = robust_cvar_program(f, eps, y, &mode)?;
    let (lp, layout) = program;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        let detail = format!(
            "{} ({} variables, {} inequality rows, {} equality rows)",
            sol.diagnostics.message,
            lp.num_vars(),
            lp.b_ub.len(),
            lp.b_eq.len()
        );
        return Err(match sol.status {
            LpStatus::NumericalFailure => Error::LpFailure {
                status: sol.status,
                detail,
            },
            status => Error::AmbiguityInconsistent { status, detail },
        });
    }
    let x = &sol.x;
    let slice = |start: usize, len: usize| x[start..start + len].to_vec();
    let l = &layout;
    let inner = WorstCaseCvarResult {
        value: sol.objective,
        zeta: x[l.zeta],
        alpha: x[l.alpha],
        gamma: x[l.gamma],
        beta: slice(l.beta, l.n),
        lambda: slice(l.lambda, l.n),
        kappa: slice(l.kappa, l.n),
        delta: slice(l.delta, l.n),
        nu: slice(l.nu, l.n),
        xi: slice(l.xi, l.rows),
        theta: slice(l.theta, l.rows),
    };
    let (strategy, duals) = match mode {
        StrategyMode::Fixed(_) => (None, None),
        StrategyMode::Free => {
            let n = l.n;
            let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<f64>>();
            let duals = BestResponseDuals {
                rho: -sol.dual_eq[2 * n],
                tau: neg(&sol.dual_eq[0..n]),
                f: neg(&sol.dual_eq[n..2 * n]),
                phi: neg(&sol.dual_ub[UB_TAIL_CAP..UB_TAIL_CAP + n]),
                g: neg(&sol.dual_ub[UB_TAIL_CAP + n..UB_TAIL_CAP + 2 * n]),
                tail_weight: sol.dual_ub[UB_TAIL],
                loss_weight: sol.dual_ub[UB_LOSS],
            };
            (Some(slice(l.u, l.actions)), Some(duals))
        }
    };
    Ok(RobustCvarSolution {
        inner,
        strategy,
        duals,
    })
}

fn robust_cvar_program(
    f: &AmbiguitySet,
    eps: f64,
    y: &DMatrix<f64>,
    mode: &StrategyMode<'_>,
) -> Result<(LinearProgram, Layout)> {
    check_level(0, eps)?;
    let n = f.shape().payoff_len();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "payoff operator has {} rows, expected {}",
            y.nrows(),
            n
        )));
    }
    let actions = match mode {
        StrategyMode::Fixed(u) => {
            if u.len() != y.ncols() {
                return Err(Error::DimensionMismatch(
                    "strategy length differs from operator width".into(),
                ));
            }
            0
        }
        StrategyMode::Free => y.ncols(),
    };
    let w = &f.support.w;
    let h = &f.support.h;
    let m = &f.mean;
    let r = w.nrows();
    let l = Layout::new(n, r, actions);

    let mut c = vec![0.0; l.total];
    c[l.zeta] = 1.0;
    c[l.alpha] = 1.0 / eps;
    c[l.gamma] = f.mad_cap / eps;
    for j in 0..n {
        c[l.beta + j] = m[j] / eps;
    }

    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let nonneg = (0.0, f64::INFINITY);
    let nonpos = (f64::NEG_INFINITY, 0.0);
    let mut bounds = vec![nonneg; l.total];
    bounds[l.zeta] = free;
    bounds[l.alpha] = free;
    for b in &mut bounds[l.beta..l.beta + n] {
        *b = free;
    }
    for b in &mut bounds[l.xi..l.xi + 2 * r] {
        *b = nonpos;
    }

    let mut a_ub = DMatrix::zeros(2 + 2 * n, l.total);
    let b_ub = vec![0.0; 2 + 2 * n];
    // -(alpha - m'lambda + m'kappa + h'xi) <= 0
    a_ub[(UB_TAIL, l.alpha)] = -1.0;
    // -(alpha - m'delta + m'nu + h'theta + zeta) <= 0
    a_ub[(UB_LOSS, l.alpha)] = -1.0;
    a_ub[(UB_LOSS, l.zeta)] = -1.0;
    for j in 0..n {
        a_ub[(UB_TAIL, l.lambda + j)] = m[j];
        a_ub[(UB_TAIL, l.kappa + j)] = -m[j];
        a_ub[(UB_LOSS, l.delta + j)] = m[j];
        a_ub[(UB_LOSS, l.nu + j)] = -m[j];
        // lambda + kappa - gamma <= 0
        let row = UB_TAIL_CAP + j;
        a_ub[(row, l.lambda + j)] = 1.0;
        a_ub[(row, l.kappa + j)] = 1.0;
        a_ub[(row, l.gamma)] = -1.0;
        // delta + nu - gamma <= 0
        let row = UB_TAIL_CAP + n + j;
        a_ub[(row, l.delta + j)] = 1.0;
        a_ub[(row, l.nu + j)] = 1.0;
        a_ub[(row, l.gamma)] = -1.0;
    }
    for k in 0..r {
        a_ub[(UB_TAIL, l.xi + k)] = -h[k];
        a_ub[(UB_LOSS, l.theta + k)] = -h[k];
    }

    let eq_rows = 2 * n + usize::from(matches!(mode, StrategyMode::Free));
    let mut a_eq = DMatrix::zeros(eq_rows, l.total);
    let mut b_eq = vec![0.0; eq_rows];
    for j in 0..n {
        // -lambda + kappa + W'xi - beta = 0
        a_eq[(j, l.lambda + j)] = -1.0;
        a_eq[(j, l.kappa + j)] = 1.0;
        a_eq[(j, l.beta + j)] = -1.0;
        // -delta + nu + W'theta - beta - Y u = 0
        let row = n + j;
        a_eq[(row, l.delta + j)] = -1.0;
        a_eq[(row, l.nu + j)] = 1.0;
        a_eq[(row, l.beta + j)] = -1.0;
        for k in 0..r {
            let wkj = w[(k, j)];
            if wkj != 0.0 {
                a_eq[(j, l.xi + k)] = wkj;
                a_eq[(row, l.theta + k)] = wkj;
            }
        }
        match mode {
            StrategyMode::Fixed(u) => {
                b_eq[row] = (0..y.ncols()).map(|a| y[(j, a)] * u[a]).sum();
            }
            StrategyMode::Free => {
                for a in 0..actions {
                    a_eq[(row, l.u + a)] = -y[(j, a)];
                }
            }
        }
    }
    if let StrategyMode::Free = mode {
        for a in 0..actions {
            a_eq[(2 * n, l.u + a)] = 1.0;
        }
        b_eq[2 * n] = 1.0;
    }

    let lp = LinearProgram::new(Sense::Minimize, c)
        .with_bounds(bounds)
        .with_ub(a_ub, b_ub)
        .with_eq(a_eq, b_eq);
    Ok((lp, l))
}

/// `sup_{Q in F} Q-CVaR_eps[-pi_i(P; x)]` and the optimal program variables.
pub fn worst_case_cvar(
    f: &AmbiguitySet,
    eps: f64,
    profile: &StrategyProfile,
    player: usize,
) -> Result<WorstCaseCvarResult> {
    let y = payoff_operator(profile, player, f.shape())?;
    profile.check_against(f.shape(), None)?;
    let u = profile.strategy(player).probs();
    Ok(solve_robust_cvar(f, eps, &y, StrategyMode::Fixed(u))?.inner)
}

/// Largest discrete CVaR over a list of member distributions; a lower bound
/// on [`worst_case_cvar`]. Returns `-inf` for an empty list.
pub fn worst_case_cvar_lower_bound(
    f: &AmbiguitySet,
    eps: f64,
    profile: &StrategyProfile,
    player: usize,
    candidates: &[DiscreteDistribution],
) -> Result<f64> {
    check_level(player, eps)?;
    let mut best = f64::NEG_INFINITY;
    for (index, q) in candidates.iter().enumerate() {
        if !is_member(q, f, DEFAULT_TOL)? {
            return Err(Error::NonMemberCandidate { index });
        }
        let losses = q
            .atoms()
            .iter()
            .map(|atom| expected_payoff(atom, profile, player).map(|p| -p))
            .collect::<Result<Vec<f64>>>()?;
        best = best.max(cvar_discrete(&losses, q.probs(), eps)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Grid minimisation of `zeta + E[(L - zeta)^+] / eps`, independent of the sort-based path.
    fn cvar_grid(losses: &[f64], probs: &[f64], eps: f64) -> f64 {
        let lo = losses.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        (0..=20_000)
            .map(|k| lo + (hi - lo) * k as f64 / 20_000.0)
            .map(|z| {
                z + losses
                    .iter()
                    .zip(probs)
                    .map(|(l, p)| p * (l - z).max(0.0))
                    .sum::<f64>()
                    / eps
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cvar_examples() {
        assert!((cvar_discrete(&[7.0], &[1.0], 0.3).unwrap() - 7.0).abs() < 1e-12);
        assert!((cvar_discrete(&[7.0, 7.0], &[0.4, 0.6], 0.05).unwrap() - 7.0).abs() < 1e-12);
        let oracle = cvar_grid(&[0.0, 10.0], &[0.5, 0.5], 0.5);
        assert!((oracle - 10.0).abs() < 1e-9);
        assert!((cvar_discrete(&[0.0, 10.0], &[0.5, 0.5], 0.5).unwrap() - 10.0).abs() < 1e-12);
        assert!((cvar_discrete(&[0.0, 10.0], &[0.5, 0.5], 1.0).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cvar_matches_grid_oracle() {
        let losses = [3.0, -1.0, 4.0, 1.5, -2.0];
        let probs = [0.1, 0.25, 0.05, 0.3, 0.3];
        for &eps in &[1.0, 0.8, 0.5, 0.33, 0.1, 0.05, 0.01] {
            let got = cvar_discrete(&losses, &probs, eps).unwrap();
            let want = cvar_grid(&losses, &probs, eps);
            assert!((got - want).abs() < 1e-3, "eps {eps}: {got} vs {want}");
            assert!(got <= want + 1e-12);
        }
    }

    #[test]
    fn cvar_errors() {
        assert!(cvar_discrete(&[], &[], 0.5).is_err());
        assert!(cvar_discrete(&[1.0], &[1.0], 0.0).is_err());
        assert!(cvar_discrete(&[1.0], &[1.0], 1.5).is_err());
        assert!(cvar_discrete(&[1.0, 2.0], &[0.5, 0.6], 0.5).is_err());
    }

    #[test]
    fn risk_profile() {
        let r = RiskProfile::new(vec![1.0, 0.25]).unwrap();
        assert_eq!(r.sigma(0), 0.0);
        assert_eq!(r.sigma(1), 3.0);
        assert!(!r.is_risk_averse(0));
        assert!(r.is_risk_averse(1));
        assert!(RiskProfile::new(vec![0.0, 1.0]).is_err());
        assert!(RiskProfile::new(vec![1.0, 1.01]).is_err());
    }
}
