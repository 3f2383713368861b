mod common;

use drgame::ambiguity::{
    build_support_from_box, is_member, validate, AffineBoxUncertainty, AmbiguitySet,
    DiscreteDistribution, PolyhedralSupport, CHECK_BOUNDED, CHECK_MAD, CHECK_MEAN, CHECK_NONEMPTY,
};
use drgame::game::{GameShape, PayoffTensor};
use drgame::inspection::{affine_map, build_inspection_game, InspectionParams};
use drgame::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_set, random_shape, two_atom_member};

#[test]
fn random_sets_validate_and_contain_their_two_atom_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let shape = random_shape(&mut rng, 3);
        let cap = rng.gen_range(0.0..3.0);
        let f = random_set(&mut rng, &shape, 3.0, cap);
        assert!(validate(&f).unwrap().passed());
        for _ in 0..5 {
            let q = two_atom_member(&mut rng, &f);
            assert!(is_member(&q, &f, 1e-9).unwrap());
        }
    }
}

#[test]
fn box_support_matches_corners_and_rejects_outside_points() {
    let g = build_inspection_game(&InspectionParams::default()).unwrap();
    let u = &g.uncertainty;
    let support = build_support_from_box(u).unwrap();
    for corner in u.corners() {
        assert!(support.contains(&u.image(&corner), 1e-9));
    }
    // Push the work cost g beyond its upper end.
    let mut t = u.midpoint();
    t[0] = 12.5;
    assert!(!support.contains(&u.image(&t), 1e-9));
}

#[test]
fn validation_reports_failing_checks() {
    let shape = GameShape::new(vec![2, 2]).unwrap();
    let n = shape.payoff_len();
    let mut w = DMatrix::zeros(2 * n, n);
    let mut h = DVector::zeros(2 * n);
    for k in 0..n {
        w[(k, k)] = 1.0;
        h[k] = 1.0;
        w[(n + k, k)] = -1.0;
        h[n + k] = 1.0;
    }
    // Mean outside the box.
    let support = PolyhedralSupport::new(w.clone(), h.clone()).unwrap();
    let f = AmbiguitySet::new(shape.clone(), support, DVector::from_element(n, 2.0), 1.0).unwrap();
    let report = validate(&f).unwrap();
    assert!(!report.passed());
    assert!(!report.check(CHECK_MEAN).unwrap().passed);

    // Empty support: x_0 <= -1 and x_0 >= 1.
    let mut h_empty = h.clone();
    h_empty[0] = -1.0;
    h_empty[n] = -1.0;
    let support = PolyhedralSupport::new(w.clone(), h_empty).unwrap();
    let f = AmbiguitySet::new(shape.clone(), support, DVector::zeros(n), 1.0).unwrap();
    assert!(!validate(&f).unwrap().check(CHECK_NONEMPTY).unwrap().passed);

    // Unbounded support: drop the upper bound rows.
    let w_half = w.rows(n, n).into_owned();
    let h_half = h.rows(n, n).into_owned();
    let support = PolyhedralSupport::new(w_half, h_half).unwrap();
    let f = AmbiguitySet::new(shape.clone(), support, DVector::zeros(n), 1.0).unwrap();
    assert!(!validate(&f).unwrap().check(CHECK_BOUNDED).unwrap().passed);

    // Negative deviation cap.
    let support = PolyhedralSupport::new(w, h).unwrap();
    let f = AmbiguitySet::new(shape, support, DVector::zeros(n), -1.0).unwrap();
    assert!(!validate(&f).unwrap().check(CHECK_MAD).unwrap().passed);
}

#[test]
fn construction_errors() {
    let shape = GameShape::new(vec![2, 2]).unwrap();
    let w = DMatrix::zeros(1, 8);
    assert!(PolyhedralSupport::new(w.clone(), DVector::zeros(2)).is_err());
    let support = PolyhedralSupport::new(w, DVector::zeros(1)).unwrap();
    assert!(AmbiguitySet::new(shape.clone(), support.clone(), DVector::zeros(7), 1.0).is_err());
    assert!(AmbiguitySet::new(shape.clone(), support, DVector::zeros(8), f64::NAN).is_err());

    let (map, offset) = affine_map(15.0);
    let bad = AffineBoxUncertainty::new(
        vec!["g".into(), "v".into(), "h".into()],
        vec![12.0, 16.0, 4.0],
        vec![8.0, 24.0, 6.0],
        map,
        offset,
    );
    assert!(matches!(bad, Err(Error::InvalidInterval { .. })));
}

#[test]
fn membership_checks_mean_and_deviation() {
    let g = build_inspection_game(&InspectionParams::default()).unwrap();
    let f = &g.ambiguity;
    let shape = f.shape().clone();
    let m: Vec<f64> = f.mean.iter().copied().collect();
    let point =
        DiscreteDistribution::point_mass(PayoffTensor::from_vec(shape.clone(), m.clone()).unwrap());
    assert!(is_member(&point, f, 1e-9).unwrap());

    // Corners of the parameter box spread far from the mean: deviation above s = 4.
    let corners = g.uncertainty.corners();
    let lo = PayoffTensor::from_vec(shape.clone(), g.uncertainty.image(&corners[0])).unwrap();
    let hi = PayoffTensor::from_vec(shape.clone(), g.uncertainty.image(corners.last().unwrap()))
        .unwrap();
    let wide = DiscreteDistribution::new(vec![lo.clone(), hi.clone()], vec![0.5, 0.5]).unwrap();
    assert!(wide.mean_abs_deviation(&m) > f.mad_cap);
    assert!(!is_member(&wide, f, 1e-9).unwrap());
    let tight = f.with_mad_cap(wide.mean_abs_deviation(&m));
    assert!(is_member(&wide, &tight, 1e-9).unwrap());

    // Wrong mean.
    let skewed = DiscreteDistribution::new(vec![lo, hi], vec![0.25, 0.75]).unwrap();
    assert!(!is_member(&skewed, &tight, 1e-9).unwrap());
}
