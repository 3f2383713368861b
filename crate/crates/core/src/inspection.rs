//! The two-player inspection game with interval-uncertain parameters.
//!
//! Player 1 (worker) chooses Shirk or Work, player 2 (inspector) chooses
//! Inspect or Not inspect. The wage `w` is known; the penalty `g`, the value
//! of work `v` and the inspection cost `h` lie in intervals. Payoffs:
//!
//! ```text
//!               Inspect        Not inspect
//! Shirk    (0, -h)        (w, -w)
//! Work     (w - g, v - w - h)  (w - g, v - w)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::ambiguity::{build_support_from_box, AffineBoxUncertainty, AmbiguitySet};
use crate::error::{Error, Result};
use crate::game::{GameShape, PayoffTensor};
use crate::risk::RiskProfile;

pub const SHIRK: usize = 0;
pub const WORK: usize = 1;
pub const INSPECT: usize = 0;
pub const NOT_INSPECT: usize = 1;

pub const PARAMETER_NAMES: [&str; 3] = ["g", "v", "h"];

#[derive(Debug, Clone, PartialEq)]
pub struct InspectionParams {
    pub wage: f64,
    pub g: (f64, f64),
    pub v: (f64, f64),
    pub h: (f64, f64),
    /// Cap `s` on the mean absolute deviation.
    pub mad_cap: f64,
    /// Mean of `(g, v, h)`; the interval midpoints when absent.
    pub mean: Option<[f64; 3]>,
    pub eps: [f64; 2],
}

impl Default for InspectionParams {
    fn default() -> Self {
        Self {
            wage: 15.0,
            g: (8.0, 12.0),
            v: (16.0, 24.0),
            h: (4.0, 6.0),
            mad_cap: 4.0,
            mean: None,
            eps: [1.0, 1.0],
        }
    }
}

impl InspectionParams {
    pub fn with_eps(&self, eps1: f64, eps2: f64) -> Self {
        Self {
            eps: [eps1, eps2],
            ..self.clone()
        }
    }

    pub fn parameter_mean(&self) -> [f64; 3] {
        self.mean.unwrap_or([
            0.5 * (self.g.0 + self.g.1),
            0.5 * (self.v.0 + self.v.1),
            0.5 * (self.h.0 + self.h.1),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct InspectionGame {
    pub uncertainty: AffineBoxUncertainty,
    pub ambiguity: AmbiguitySet,
    pub risk: RiskProfile,
    /// Payoffs at the parameter mean.
    pub nominal: PayoffTensor,
}

pub fn shape() -> GameShape {
    GameShape::new(vec![2, 2]).expect("2x2 shape")
}

/// `vec(P) = A (g, v, h) + b`, player-major, joint actions row-major.
pub fn affine_map(wage: f64) -> (DMatrix<f64>, DVector<f64>) {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(8, 3, &[
        // worker: (S,I), (S,N), (W,I), (W,N)
         0.0, 0.0,  0.0,
         0.0, 0.0,  0.0,
        -1.0, 0.0,  0.0,
        -1.0, 0.0,  0.0,
        // inspector
         0.0, 0.0, -1.0,
         0.0, 0.0,  0.0,
         0.0, 1.0, -1.0,
         0.0, 1.0,  0.0,
    ]);
    let b = DVector::from_column_slice(&[0.0, wage, wage, wage, 0.0, -wage, -wage, -wage]);
    (a, b)
}

pub fn build_inspection_game(params: &InspectionParams) -> Result<InspectionGame> {
    if !params.wage.is_finite() {
        return Err(Error::NonFinite("wage".into()));
    }
    let (map, offset) = affine_map(params.wage);
    let uncertainty = AffineBoxUncertainty::new(
        PARAMETER_NAMES.iter().map(|s| s.to_string()).collect(),
        vec![params.g.0, params.v.0, params.h.0],
        vec![params.g.1, params.v.1, params.h.1],
        map,
        offset,
    )?;
    let support = build_support_from_box(&uncertainty)?;
    let mean = uncertainty.image(&params.parameter_mean());
    let shape = shape();
    let nominal = PayoffTensor::from_vec(shape.clone(), mean.clone())?;
    let ambiguity = AmbiguitySet::new(shape, support, DVector::from_vec(mean), params.mad_cap)?;
    let risk = RiskProfile::new(params.eps.to_vec())?;
    Ok(InspectionGame {
        uncertainty,
        ambiguity,
        risk,
        nominal,
    })
}
