//! Support enumeration for two-player games with fixed payoffs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{MixedStrategy, PayoffTensor, StrategyProfile};

/// Largest action count accepted for either player.
pub const MAX_ENUMERATION_ACTIONS: usize = 6;

const FEAS_TOL: f64 = 1e-9;
const DEDUPE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct NashResult {
    pub equilibria: Vec<StrategyProfile>,
    /// Set when some indifference system was singular or some equilibrium
    /// has more best responses than support actions. The list may then be
    /// incomplete (degenerate games can have continua of equilibria).
    pub degenerate: bool,
}

/// All Nash equilibria of a nondegenerate bimatrix game, by enumerating
/// pairs of equal-size supports.
pub fn nash_support_enumeration(game: &PayoffTensor) -> Result<NashResult> {
    let shape = game.shape();
    if shape.num_players() != 2 {
        return Err(Error::InvalidShape(format!(
            "support enumeration needs 2 players, got {}",
            shape.num_players()
        )));
    }
    let (r, c) = (shape.actions(0), shape.actions(1));
    if r > MAX_ENUMERATION_ACTIONS || c > MAX_ENUMERATION_ACTIONS {
        return Err(Error::TooLarge(format!(
            "support enumeration is limited to {MAX_ENUMERATION_ACTIONS} actions per player, got {r}x{c}"
        )));
    }
    let a = DMatrix::from_fn(r, c, |i, j| game.get(0, &[i, j]));
    let b = DMatrix::from_fn(r, c, |i, j| game.get(1, &[i, j]));
    let bt = b.transpose();

    let mut degenerate = false;
    let mut found: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for k in 1..=r.min(c) {
        for rows in subsets(r, k) {
            for cols in subsets(c, k) {
                // Column strategy makes the row player indifferent on `rows`.
                let Some(y) = indifferent_mix(&a, &rows, &cols, c) else {
                    degenerate = true;
                    continue;
                };
                let Some(x) = indifferent_mix(&bt, &cols, &rows, r) else {
                    degenerate = true;
                    continue;
                };
                if x.iter().chain(&y).any(|&p| p < -FEAS_TOL) {
                    continue;
                }
                let ay = &a * DVector::from_column_slice(&y);
                let xb = bt.clone() * DVector::from_column_slice(&x);
                let u = ay.max();
                let v = xb.max();
                let row_best = rows.iter().all(|&i| ay[i] >= u - FEAS_TOL);
                let col_best = cols.iter().all(|&j| xb[j] >= v - FEAS_TOL);
                if !(row_best && col_best) {
                    continue;
                }
                let row_ties = ay.iter().filter(|&&p| p >= u - FEAS_TOL).count();
                let col_ties = xb.iter().filter(|&&p| p >= v - FEAS_TOL).count();
                let x = clean(x);
                let y = clean(y);
                let x_support = x.iter().filter(|&&p| p > FEAS_TOL).count();
                let y_support = y.iter().filter(|&&p| p > FEAS_TOL).count();
                if row_ties > y_support || col_ties > x_support {
                    degenerate = true;
                }
                let duplicate = found.iter().any(|(fx, fy)| {
                    fx.iter()
                        .zip(&x)
                        .chain(fy.iter().zip(&y))
                        .all(|(p, q)| (p - q).abs() <= DEDUPE_TOL)
                });
                if !duplicate {
                    found.push((x, y));
                }
            }
        }
    }
    found.sort_by(|p, q| {
        p.0.iter()
            .chain(&p.1)
            .zip(q.0.iter().chain(&q.1))
            .map(|(a, b)| b.total_cmp(a))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let equilibria = found
        .into_iter()
        .map(|(x, y)| {
            Ok(StrategyProfile::new(vec![
                MixedStrategy::new(x)?,
                MixedStrategy::new(y)?,
            ]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NashResult {
        equilibria,
        degenerate,
    })
}

/// Mixed strategy over `support` (within `len` actions) that equalises the
/// rows `targets` of `m`, or `None` if the system is singular.
fn indifferent_mix(
    m: &DMatrix<f64>,
    targets: &[usize],
    support: &[usize],
    len: usize,
) -> Option<Vec<f64>> {
    let k = support.len();
    // Unknowns: weights on `support`, then the common value.
    let mut sys = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (row, &t) in targets.iter().enumerate() {
        for (col, &s) in support.iter().enumerate() {
            sys[(row, col)] = m[(t, s)];
        }
        sys[(row, k)] = -1.0;
    }
    for col in 0..k {
        sys[(k, col)] = 1.0;
    }
    rhs[k] = 1.0;
    let scale = sys.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let lu = sys.lu();
    if lu.determinant().abs() <= 1e-12 * scale.powi(k as i32 + 1) {
        return None;
    }
    let sol = lu.solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut out = vec![0.0; len];
    for (col, &s) in support.iter().enumerate() {
        out[s] = sol[col];
    }
    Some(out)
}

fn clean(mut p: Vec<f64>) -> Vec<f64> {
    for v in &mut p {
        if v.abs() <= FEAS_TOL {
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}
