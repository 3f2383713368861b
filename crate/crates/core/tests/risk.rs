mod common;

use drgame::ambiguity::{AmbiguitySet, DiscreteDistribution, PolyhedralSupport};
use drgame::game::{expected_payoff, payoff_operator, GameShape, PayoffTensor};
use drgame::lp::{solve_lp, LinearProgram, Sense};
use drgame::risk::{cvar_discrete, worst_case_cvar, worst_case_cvar_lower_bound};
use drgame::Error;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_profile, random_set, random_shape, two_atom_member};

/// Random instance `(F, eps, x, i)` from a seed.
fn instance(
    seed: u64,
    cap: Option<f64>,
) -> (AmbiguitySet, f64, drgame::game::StrategyProfile, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = random_shape(&mut rng, 3);
    let cap = cap.unwrap_or_else(|| rng.gen_range(0.0..3.0));
    let f = random_set(&mut rng, &shape, 3.0, cap);
    let eps = 1.0 - rng.gen::<f64>() * 0.99;
    let x = random_profile(&mut rng, &shape);
    let i = rng.gen_range(0..2);
    (f, eps, x, i)
}

/// Largest loss `-pi_i(P; x)` over the support.
fn max_loss(f: &AmbiguitySet, x: &drgame::game::StrategyProfile, i: usize) -> f64 {
    let y = payoff_operator(x, i, f.shape()).unwrap();
    let u = DVector::from_column_slice(x.strategy(i).probs());
    let c: Vec<f64> = (&y * u).iter().map(|v| -v).collect();
    let n = c.len();
    let p = LinearProgram::new(Sense::Maximize, c)
        .with_bounds(vec![(f64::NEG_INFINITY, f64::INFINITY); n])
        .with_ub(f.support.w.clone(), f.support.h.iter().copied().collect());
    solve_lp(&p).unwrap().objective
}

/// `F` with player `i`'s payoffs shifted by `c` everywhere.
fn shifted(f: &AmbiguitySet, i: usize, c: f64) -> AmbiguitySet {
    let joint = f.shape().num_joint_actions();
    let mut shift = DVector::zeros(f.mean.len());
    shift.rows_mut(i * joint, joint).fill(c);
    let h = &f.support.h + &f.support.w * &shift;
    let support = PolyhedralSupport::new(f.support.w.clone(), h).unwrap();
    AmbiguitySet::new(f.shape().clone(), support, &f.mean + shift, f.mad_cap).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn risk_neutral_level_gives_mean_loss(seed in any::<u64>()) {
        let (f, _, x, i) = instance(seed, None);
        let v = worst_case_cvar(&f, 1.0, &x, i).unwrap().value;
        prop_assert!((v + expected_payoff(&f.mean_tensor(), &x, i).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn zero_deviation_gives_mean_loss(seed in any::<u64>()) {
        let (f, eps, x, i) = instance(seed, Some(0.0));
        let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
        prop_assert!((v + expected_payoff(&f.mean_tensor(), &x, i).unwrap()).abs() <= 1e-6);
    }

    #[test]
    fn value_lies_between_mean_loss_and_largest_loss(seed in any::<u64>()) {
        let (f, eps, x, i) = instance(seed, None);
        let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
        let mean_loss = -expected_payoff(&f.mean_tensor(), &x, i).unwrap();
        prop_assert!(v >= mean_loss - 1e-7);
        prop_assert!(v <= max_loss(&f, &x, i) + 1e-7);
    }

    #[test]
    fn nonincreasing_in_level(seed in any::<u64>()) {
        let (f, _, x, i) = instance(seed, None);
        let mut previous = f64::NEG_INFINITY;
        for eps in [1.0, 0.75, 0.5, 0.25, 0.05] {
            let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
            prop_assert!(v >= previous - 1e-8);
            previous = v;
        }
    }

    #[test]
    fn payoff_shift_moves_value(seed in any::<u64>(), c in -5.0f64..5.0) {
        let (f, eps, x, i) = instance(seed, None);
        let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
        let w = worst_case_cvar(&shifted(&f, i, c), eps, &x, i).unwrap().value;
        prop_assert!((w - (v - c)).abs() <= 1e-6);
    }

    #[test]
    fn member_distributions_bound_value_from_below(seed in any::<u64>()) {
        let (f, eps, x, i) = instance(seed, None);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let members: Vec<_> = (0..8).map(|_| two_atom_member(&mut rng, &f)).collect();
        let lower = worst_case_cvar_lower_bound(&f, eps, &x, i, &members).unwrap();
        let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
        prop_assert!(lower <= v + 1e-6);
    }
}

#[test]
fn singleton_support_value_equals_point_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let shape = random_shape(&mut rng, 3);
        let f = random_set(&mut rng, &shape, 0.0, 2.0);
        let x = random_profile(&mut rng, &shape);
        let eps = 1.0 - rng.gen::<f64>() * 0.99;
        let point = DiscreteDistribution::point_mass(f.mean_tensor());
        for i in 0..2 {
            let lower =
                worst_case_cvar_lower_bound(&f, eps, &x, i, std::slice::from_ref(&point)).unwrap();
            let v = worst_case_cvar(&f, eps, &x, i).unwrap().value;
            assert!((lower - v).abs() <= 1e-6, "{lower} vs {v}");
        }
    }
}

#[test]
fn discrete_cvar_examples() {
    let losses = [1.0, 2.0, 3.0, 4.0];
    let probs = [0.25; 4];
    assert!((cvar_discrete(&losses, &probs, 1.0).unwrap() - 2.5).abs() < 1e-12);
    assert!((cvar_discrete(&losses, &probs, 0.25).unwrap() - 4.0).abs() < 1e-12);
    assert!((cvar_discrete(&losses, &probs, 0.5).unwrap() - 3.5).abs() < 1e-12);
    assert!((cvar_discrete(&losses, &probs, 0.1).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn input_errors() {
    let (f, _, x, _) = instance(1, None);
    assert!(matches!(
        worst_case_cvar(&f, 0.0, &x, 0),
        Err(Error::InvalidRiskLevel { .. })
    ));
    assert!(matches!(
        worst_case_cvar(&f, 1.5, &x, 0),
        Err(Error::InvalidRiskLevel { .. })
    ));
    assert!(matches!(
        worst_case_cvar(&f, 0.5, &x, 2),
        Err(Error::PlayerOutOfRange { .. })
    ));
    assert_eq!(
        worst_case_cvar_lower_bound(&f, 0.5, &x, 0, &[]).unwrap(),
        f64::NEG_INFINITY
    );

    let far = PayoffTensor::from_vec(
        f.shape().clone(),
        f.mean.iter().map(|v| v + 100.0).collect(),
    )
    .unwrap();
    let outside = DiscreteDistribution::point_mass(far);
    assert!(matches!(
        worst_case_cvar_lower_bound(&f, 0.5, &x, 0, &[outside]),
        Err(Error::NonMemberCandidate { index: 0 })
    ));

    let other = GameShape::new(vec![2, 2, 2]).unwrap();
    let wrong = drgame::game::StrategyProfile::uniform(&other);
    assert!(worst_case_cvar(&f, 0.5, &wrong, 0).is_err());
}
