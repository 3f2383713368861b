//! Random instances shared by the integration tests.

#![allow(dead_code)]

use drgame::ambiguity::{AmbiguitySet, DiscreteDistribution, PolyhedralSupport};
use drgame::game::{GameShape, MixedStrategy, PayoffTensor, StrategyProfile};
use drgame::risk::RiskProfile;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shape of a random 2-player game with 2 or 3 actions each.
pub fn random_shape(rng: &mut ChaCha8Rng, max_actions: usize) -> GameShape {
    let a = rng.gen_range(2..=max_actions);
    let b = rng.gen_range(2..=max_actions);
    GameShape::new(vec![a, b]).unwrap()
}

/// Ambiguity set with a box support `m +- r` intersected with a few random
/// half-spaces that keep `m` strictly inside.
pub fn random_set(
    rng: &mut ChaCha8Rng,
    shape: &GameShape,
    max_radius: f64,
    mad_cap: f64,
) -> AmbiguitySet {
    let n = shape.payoff_len();
    let m: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=max_radius)).collect();
    let extra = if max_radius > 0.0 {
        rng.gen_range(0..=2)
    } else {
        0
    };
    let rows = 2 * n + extra;
    let mut w = DMatrix::zeros(rows, n);
    let mut h = DVector::zeros(rows);
    for k in 0..n {
        w[(k, k)] = 1.0;
        h[k] = m[k] + r[k];
        w[(n + k, k)] = -1.0;
        h[n + k] = -(m[k] - r[k]);
    }
    for row in 2 * n..rows {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let am: f64 = a.iter().zip(&m).map(|(x, y)| x * y).sum();
        for (k, v) in a.iter().enumerate() {
            w[(row, k)] = *v;
        }
        h[row] = am + rng.gen_range(0.1..2.0);
    }
    let support = PolyhedralSupport::new(w, h).unwrap();
    AmbiguitySet::new(shape.clone(), support, DVector::from_vec(m), mad_cap).unwrap()
}

pub fn random_strategy(rng: &mut ChaCha8Rng, actions: usize) -> MixedStrategy {
    let weights: Vec<f64> = (0..actions)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    MixedStrategy::from_weights(&weights).unwrap()
}

pub fn random_profile(rng: &mut ChaCha8Rng, shape: &GameShape) -> StrategyProfile {
    StrategyProfile::new(
        shape
            .action_counts()
            .iter()
            .map(|&a| random_strategy(rng, a))
            .collect(),
    )
}

/// Risk levels drawn from `(0, 1]`.
pub fn random_risk(rng: &mut ChaCha8Rng, players: usize) -> RiskProfile {
    RiskProfile::new(
        (0..players)
            .map(|_| 1.0 - rng.gen::<f64>() * 0.99)
            .collect(),
    )
    .unwrap()
}

/// Two-atom distribution with mean `m`: atoms `m + (1 - p) t d` and
/// `m - p t d` with probabilities `p` and `1 - p`. The step `t` is scaled
/// to stay inside the support and below the deviation cap.
pub fn two_atom_member(rng: &mut ChaCha8Rng, f: &AmbiguitySet) -> DiscreteDistribution {
    let n = f.mean.len();
    let m: Vec<f64> = f.mean.iter().copied().collect();
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p: f64 = rng.gen_range(0.05..0.95);
    let w = &f.support.w;
    let h = &f.support.h;
    let mut t_max = f64::INFINITY;
    for row in 0..w.nrows() {
        let slack = h[row] - (0..n).map(|k| w[(row, k)] * m[k]).sum::<f64>();
        let wd: f64 = (0..n).map(|k| w[(row, k)] * d[k]).sum();
        for c in [1.0 - p, -p] {
            if c * wd > 1e-12 {
                t_max = t_max.min(slack.max(0.0) / (c * wd));
            }
        }
    }
    let l1: f64 = d.iter().map(|x| x.abs()).sum();
    let mad_per_t = 2.0 * p * (1.0 - p) * l1;
    if mad_per_t > 0.0 {
        t_max = t_max.min(f.mad_cap / mad_per_t);
    }
    let t = 0.999 * rng.gen_range(0.0..=1.0) * t_max;
    let atom = |c: f64| {
        PayoffTensor::from_vec(
            f.shape().clone(),
            m.iter().zip(&d).map(|(mk, dk)| mk + c * t * dk).collect(),
        )
        .unwrap()
    };
    DiscreteDistribution::new(vec![atom(1.0 - p), atom(-p)], vec![p, 1.0 - p]).unwrap()
}

/// Largest componentwise distance between profiles of the same shape.
pub fn distance(a: &StrategyProfile, b: &StrategyProfile) -> f64 {
    a.distance(b)
}

/// Whether two profile lists match one-to-one within `tol`.
pub fn same_set(a: &[StrategyProfile], b: &[StrategyProfile], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| distance(x, y) <= tol))
        && b.iter().all(|y| a.iter().any(|x| distance(x, y) <= tol))
}
