//! Certificates for the multilinear optimality system.
//!
//! A profile is an equilibrium exactly when, for every player, the primal
//! variables of the worst-case CVaR program at `x^i` and the dual variables
//! of the best-response program satisfy one joint system: primal
//! feasibility, dual feasibility, and equality of the primal objective with
//! the dual value `rho_i`. The certificate evaluates every row of that system
//! and reports residuals. Primal variables come from the fixed-strategy
//! program so that the objective row carries exactly the player's gap.

use nalgebra::DMatrix;

use super::{best_response, check_inputs, fixed_strategy_cvar};
use crate::ambiguity::AmbiguitySet;
use crate::error::Result;
use crate::game::{payoff_operator, StrategyProfile};
use crate::risk::{sigma, BestResponseDuals, RiskProfile, WorstCaseCvarResult};

/// Residual threshold for a valid certificate.
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `residual = lhs - rhs`, should vanish.
    Equality,
    /// Written as `lhs <= rhs`; `residual = lhs - rhs`, should be nonpositive.
    Inequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub player: usize,
    pub name: String,
    pub kind: RowKind,
    pub residual: f64,
}

impl ResidualRow {
    /// Absolute residual for equalities, positive part for inequalities.
    pub fn violation(&self) -> f64 {
        match self.kind {
            RowKind::Equality => self.residual.abs(),
            RowKind::Inequality => self.residual.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerCertificate {
    pub player: usize,
    pub rho: f64,
    pub primal: WorstCaseCvarResult,
    pub duals: BestResponseDuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub profile: StrategyProfile,
    pub players: Vec<PlayerCertificate>,
    pub rows: Vec<ResidualRow>,
    pub max_equality_residual: f64,
    pub max_inequality_violation: f64,
}

impl EquilibriumCertificate {
    pub fn is_valid(&self) -> bool {
        self.max_equality_residual <= CERTIFICATE_TOL
            && self.max_inequality_violation <= CERTIFICATE_TOL
    }

    /// The row with the largest violation, if any row is violated at all.
    pub fn worst_row(&self) -> Option<&ResidualRow> {
        self.rows
            .iter()
            .filter(|r| r.violation() > 0.0)
            .max_by(|a, b| a.violation().total_cmp(&b.violation()))
    }
}

/// Assembles the certificate for `profile`. Construction always succeeds
/// when the LPs solve; a non-equilibrium yields an invalid certificate.
pub fn build_certificate(
    f: &AmbiguitySet,
    risk: &RiskProfile,
    profile: &StrategyProfile,
) -> Result<EquilibriumCertificate> {
    check_inputs(f, risk, profile)?;
    let mut players = Vec::new();
    let mut rows = Vec::new();
    for i in 0..f.shape().num_players() {
        let eps = risk.eps(i);
        let primal = fixed_strategy_cvar(f, eps, profile, i)?;
        let br = best_response(f, eps, profile, i)?;
        let y = payoff_operator(profile, i, f.shape())?;
        let cert = PlayerCertificate {
            player: i,
            rho: br.duals.rho,
            primal,
            duals: br.duals,
        };
        player_rows(f, eps, &y, profile.strategy(i).probs(), &cert, &mut rows);
        players.push(cert);
    }
    let max_eq = rows
        .iter()
        .filter(|r| r.kind == RowKind::Equality)
        .map(ResidualRow::violation)
        .fold(0.0, f64::max);
    let max_ineq = rows
        .iter()
        .filter(|r| r.kind == RowKind::Inequality)
        .map(ResidualRow::violation)
        .fold(0.0, f64::max);
    Ok(EquilibriumCertificate {
        profile: profile.clone(),
        players,
        rows,
        max_equality_residual: max_eq,
        max_inequality_violation: max_ineq,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn player_rows(
    f: &AmbiguitySet,
    eps: f64,
    y: &DMatrix<f64>,
    x: &[f64],
    cert: &PlayerCertificate,
    out: &mut Vec<ResidualRow>,
) {
    let player = cert.player;
    let m: Vec<f64> = f.mean.iter().copied().collect();
    let h: Vec<f64> = f.support.h.iter().copied().collect();
    let w = &f.support.w;
    let s = f.mad_cap;
    let sig = sigma(eps);
    let n = m.len();
    let r = h.len();
    let p = &cert.primal;
    let d = &cert.duals;
    let rho = cert.rho;

    let mut push = |name: String, kind: RowKind, residual: f64| {
        out.push(ResidualRow {
            player,
            name,
            kind,
            residual,
        })
    };
    let eq = RowKind::Equality;
    let le = RowKind::Inequality;
    // W' v as a vector of length n.
    let wt = |v: &[f64], j: usize| (0..r).map(|k| w[(k, j)] * v[k]).sum::<f64>();
    // W v as a vector of length r.
    let wv = |v: &[f64], k: usize| (0..n).map(|j| w[(k, j)] * v[j]).sum::<f64>();

    // Strong duality.
    push(
        "objective".into(),
        eq,
        p.zeta + (p.alpha + dot(&m, &p.beta) + s * p.gamma) / eps - rho,
    );
    // Primal feasibility of the strategy.
    push("simplex".into(), eq, x.iter().sum::<f64>() - 1.0);
    for (a, &xa) in x.iter().enumerate() {
        push(format!("x[{a}]>=0"), le, -xa);
    }
    // Primal feasibility of the robust CVaR program.
    push(
        "tail_support".into(),
        le,
        -(p.alpha - dot(&m, &p.lambda) + dot(&m, &p.kappa) + dot(&h, &p.xi)),
    );
    push(
        "loss_support".into(),
        le,
        -(p.alpha - dot(&m, &p.delta) + dot(&m, &p.nu) + dot(&h, &p.theta) + p.zeta),
    );
    let yx: Vec<f64> = (0..n)
        .map(|j| (0..x.len()).map(|a| y[(j, a)] * x[a]).sum())
        .collect();
    for j in 0..n {
        push(
            format!("tail_balance[{j}]"),
            eq,
            -p.lambda[j] + p.kappa[j] + wt(&p.xi, j) - p.beta[j],
        );
        push(
            format!("loss_balance[{j}]"),
            eq,
            -p.delta[j] + p.nu[j] + wt(&p.theta, j) - p.beta[j] - yx[j],
        );
        push(
            format!("tail_cap[{j}]"),
            le,
            p.lambda[j] + p.kappa[j] - p.gamma,
        );
        push(format!("loss_cap[{j}]"), le, p.delta[j] + p.nu[j] - p.gamma);
    }
    // Dual feasibility of the best-response program.
    for a in 0..y.ncols() {
        let fy: f64 = (0..n).map(|j| d.f[j] * y[(j, a)]).sum();
        push(format!("rho<=f'Y[{a}]"), le, rho - fy);
    }
    push(
        "deviation_budget".into(),
        le,
        -d.g.iter().sum::<f64>() - d.phi.iter().sum::<f64>() - s / eps,
    );
    for j in 0..n {
        push(
            format!("mean_balance[{j}]"),
            eq,
            -d.tau[j] - d.f[j] - m[j] / eps,
        );
        push(
            format!("tail_lower[{j}]"),
            le,
            -d.tau[j] + d.phi[j] - sig * m[j],
        );
        push(
            format!("tail_upper[{j}]"),
            le,
            d.tau[j] + d.phi[j] + sig * m[j],
        );
        push(format!("loss_lower[{j}]"), le, -d.f[j] + d.g[j] - m[j]);
        push(format!("loss_upper[{j}]"), le, d.f[j] + d.g[j] + m[j]);
    }
    for k in 0..r {
        push(
            format!("tail_support_dual[{k}]"),
            le,
            -sig * h[k] - wv(&d.tau, k),
        );
        push(format!("loss_support_dual[{k}]"), le, -h[k] - wv(&d.f, k));
    }
    // Sign constraints.
    push("gamma>=0".into(), le, -p.gamma);
    let signs: [(&str, &[f64], f64); 8] = [
        ("lambda>=0", &p.lambda, -1.0),
        ("kappa>=0", &p.kappa, -1.0),
        ("delta>=0", &p.delta, -1.0),
        ("nu>=0", &p.nu, -1.0),
        ("xi<=0", &p.xi, 1.0),
        ("theta<=0", &p.theta, 1.0),
        ("phi<=0", &d.phi, 1.0),
        ("g<=0", &d.g, 1.0),
    ];
    for (name, values, sign) in signs {
        for (k, v) in values.iter().enumerate() {
            push(format!("{name}[{k}]"), le, sign * v);
        }
    }
}
