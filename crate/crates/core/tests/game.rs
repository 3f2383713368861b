use drgame::game::{
    expected_payoff, payoff_operator, GameShape, MixedStrategy, PayoffTensor, StrategyProfile,
};
use drgame::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn shape_strategy() -> impl Strategy<Value = GameShape> {
    prop::collection::vec(2usize..4, 2..4).prop_map(|a| GameShape::new(a).unwrap())
}

fn simplex(n: usize) -> impl Strategy<Value = MixedStrategy> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| MixedStrategy::from_weights(&w).unwrap())
}

fn game_and_profile() -> impl Strategy<Value = (PayoffTensor, StrategyProfile)> {
    shape_strategy().prop_flat_map(|shape| {
        let entries = prop::collection::vec(-10.0f64..10.0, shape.payoff_len());
        let strategies: Vec<_> = shape.action_counts().iter().map(|&a| simplex(a)).collect();
        (entries, strategies).prop_map(move |(e, s)| {
            (
                PayoffTensor::from_vec(shape.clone(), e).unwrap(),
                StrategyProfile::new(s),
            )
        })
    })
}

proptest! {
    #[test]
    fn joint_index_round_trips(shape in shape_strategy()) {
        for j in 0..shape.num_joint_actions() {
            prop_assert_eq!(shape.joint_index(&shape.joint_actions(j)), j);
        }
    }

    #[test]
    fn payoff_operator_reproduces_expected_payoff((p, x) in game_and_profile()) {
        let shape = p.shape().clone();
        for i in 0..shape.num_players() {
            let y = payoff_operator(&x, i, &shape).unwrap();
            let u = DVector::from_column_slice(x.strategy(i).probs());
            let via_operator = (DVector::from_column_slice(p.vec()).transpose() * &y * u)[(0, 0)];
            let direct = expected_payoff(&p, &x, i).unwrap();
            prop_assert!((via_operator - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn pure_profiles_pick_single_entries((p, _x) in game_and_profile(), seed in 0usize..1000) {
        let shape = p.shape().clone();
        let joint = seed % shape.num_joint_actions();
        let actions = shape.joint_actions(joint);
        let profile = StrategyProfile::new(
            actions.iter().enumerate().map(|(i, &a)| MixedStrategy::pure(shape.actions(i), a)).collect(),
        );
        for i in 0..shape.num_players() {
            prop_assert_eq!(expected_payoff(&p, &profile, i).unwrap(), p.get(i, &actions));
        }
    }

    #[test]
    fn stacked_profile_round_trips((p, x) in game_and_profile()) {
        let back = StrategyProfile::from_stacked(p.shape(), &x.stacked()).unwrap();
        prop_assert!(back.distance(&x) <= 1e-12);
    }
}

#[test]
fn rejects_bad_shapes_and_strategies() {
    assert!(matches!(
        GameShape::new(vec![3]),
        Err(Error::InvalidShape(_))
    ));
    assert!(matches!(
        GameShape::new(vec![2, 1]),
        Err(Error::InvalidShape(_))
    ));
    assert!(matches!(
        GameShape::new(vec![100, 100, 100]),
        Err(Error::TooLarge(_))
    ));
    assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
    assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
    assert!(MixedStrategy::new(vec![f64::NAN, 1.0]).is_err());
    let shape = GameShape::new(vec![2, 2]).unwrap();
    assert!(PayoffTensor::from_vec(shape.clone(), vec![0.0; 7]).is_err());
    assert!(StrategyProfile::from_stacked(&shape, &[1.0, 0.0, 1.0]).is_err());
}
