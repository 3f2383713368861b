mod common;

use drgame::equilibrium::{best_response, nash_support_enumeration};
use drgame::game::{MixedStrategy, StrategyProfile};
use drgame::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use drgame::risk::worst_case_cvar;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_profile, random_set, random_shape};

/// A feasible program built around a known point `x0`, bounded by a box.
fn feasible_program(seed: u64, degenerate: bool) -> (LinearProgram, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..8);
    let mu = rng.gen_range(1..8);
    let me = rng.gen_range(0..n.min(3));
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let a_ub = DMatrix::from_fn(mu, n, |_, _| rng.gen_range(-3.0..3.0));
    let b_ub: Vec<f64> = (0..mu)
        .map(|i| {
            let ax: f64 = (0..n).map(|j| a_ub[(i, j)] * x0[j]).sum();
            // Degenerate programs have constraints tight at x0.
            if degenerate && i % 2 == 0 {
                ax
            } else {
                ax + rng.gen_range(0.0..2.0)
            }
        })
        .collect();
    let a_eq = DMatrix::from_fn(me, n, |_, _| rng.gen_range(-3.0..3.0));
    let b_eq: Vec<f64> = (0..me)
        .map(|i| (0..n).map(|j| a_eq[(i, j)] * x0[j]).sum())
        .collect();
    let sense = if rng.gen() {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let p = LinearProgram::new(sense, c)
        .with_bounds(vec![(0.0, 10.0); n])
        .with_ub(a_ub, b_ub)
        .with_eq(a_eq, b_eq);
    (p, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strong_duality_on_random_programs(seed in 0u64..1_000_000, degenerate in any::<bool>()) {
        let (p, x0) = feasible_program(seed, degenerate);
        let primal = solve_lp(&p).unwrap();
        prop_assert_eq!(primal.status, LpStatus::Optimal);
        let dual = solve_lp(&p.dual()).unwrap();
        prop_assert_eq!(dual.status, LpStatus::Optimal);
        prop_assert!((primal.objective - dual.objective).abs() <= 1e-7 * (1.0 + primal.objective.abs()));

        let value_at = |x: &[f64]| p.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
        match p.sense {
            Sense::Minimize => prop_assert!(primal.objective <= value_at(&x0) + 1e-9),
            Sense::Maximize => prop_assert!(primal.objective >= value_at(&x0) - 1e-9),
        }
        for i in 0..p.b_ub.len() {
            let ax: f64 = (0..p.num_vars()).map(|j| p.a_ub[(i, j)] * primal.x[j]).sum();
            prop_assert!(ax <= p.b_ub[i] + 1e-8);
        }
        for &v in &primal.x {
            prop_assert!((-1e-9..=10.0 + 1e-9).contains(&v));
        }
    }
}

#[test]
fn infeasible_and_unbounded_programs() {
    let p = LinearProgram::new(Sense::Minimize, vec![1.0])
        .with_ub(DMatrix::from_row_slice(1, 1, &[1.0]), vec![-1.0]);
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    let p = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0])
        .with_ub(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), vec![1.0]);
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
}

/// The worst-case and best-response programs must solve to certified
/// optimality on random sets, including zero deviation caps, point supports,
/// pure profiles and mean-game equilibria, where these programs are most
/// degenerate.
#[test]
fn robust_programs_solve_on_random_instances() {
    let mut failures = Vec::new();
    for seed in 0..400u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = random_shape(&mut rng, 3);
        let f = match seed % 3 {
            0 => random_set(&mut rng, &shape, 3.0, 0.0),
            1 => random_set(&mut rng, &shape, 0.0, 2.0),
            _ => {
                let cap = rng.gen_range(0.0..3.0);
                random_set(&mut rng, &shape, 3.0, cap)
            }
        };
        let eps = 1.0 - rng.gen::<f64>() * 0.99;
        let mut profiles = vec![
            random_profile(&mut rng, &shape),
            StrategyProfile::uniform(&shape),
            StrategyProfile::new(vec![
                MixedStrategy::pure(shape.actions(0), 0),
                MixedStrategy::pure(shape.actions(1), 1),
            ]),
        ];
        profiles.extend(
            nash_support_enumeration(&f.mean_tensor())
                .unwrap()
                .equilibria,
        );
        for x in &profiles {
            for i in 0..2 {
                if let Err(e) = best_response(&f, eps, x, i) {
                    failures.push(format!("seed {seed} best response: {e}"));
                }
                if let Err(e) = worst_case_cvar(&f, eps, x, i) {
                    failures.push(format!("seed {seed} worst case: {e}"));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
