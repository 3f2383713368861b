//! Moment ambiguity sets
//!
//! ```text
//! F = { Q : Q[W vec(P) <= h] = 1,  E_Q[vec P] = m,  E_Q ||vec P - m||_1 <= s }
//! ```
//!
//! plus a builder that turns interval-uncertain game parameters mapped
//! affinely into payoff space into the `(W, h)` description of the support.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{GameShape, PayoffTensor};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};

/// Per-coordinate `(min, max)` over a support, or the first coordinate
/// whose range is not finite together with the LP status that showed it.
pub type CoordinateRanges = std::result::Result<Vec<(f64, f64)>, (usize, LpStatus)>;

/// Default feasibility tolerance for membership and validation checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `U = { P : W vec(P) <= h }`. Equalities are stored as `<=`/`>=` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSupport {
    pub w: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl PolyhedralSupport {
    pub fn new(w: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if w.nrows() != h.len() {
            return Err(Error::DimensionMismatch(format!(
                "support has {} rows in W but {} entries in h",
                w.nrows(),
                h.len()
            )));
        }
        if w.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("support (W, h)".into()));
        }
        Ok(Self { w, h })
    }

    pub fn num_rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Largest `(W p - h)_k` over rows, with its row index.
    pub fn max_violation(&self, p: &[f64]) -> (f64, Option<usize>) {
        let wp = &self.w * DVector::from_column_slice(p);
        (0..self.num_rows())
            .map(|k| (wp[k] - self.h[k], Some(k)))
            .fold(
                (f64::NEG_INFINITY, None),
                |acc, v| if v.0 > acc.0 { v } else { acc },
            )
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.max_violation(p).0 <= tol
    }

    /// Minimum and maximum of every coordinate over `U`, or the first
    /// coordinate (with its LP status) for which one of them is not finite.
    pub fn coordinate_ranges(&self) -> Result<CoordinateRanges> {
        let n = self.dim();
        let mut ranges = Vec::with_capacity(n);
        for j in 0..n {
            let mut bounds = [0.0; 2];
            for (slot, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
                let mut c = vec![0.0; n];
                c[j] = 1.0;
                let lp = self.lp_over_support(sense, c);
                let sol = solve_lp(&lp)?;
                if !sol.is_optimal() {
                    return Ok(Err((j, sol.status)));
                }
                bounds[slot] = sol.objective;
            }
            ranges.push((bounds[0], bounds[1]));
        }
        Ok(Ok(ranges))
    }

    fn lp_over_support(&self, sense: Sense, objective: Vec<f64>) -> LinearProgram {
        let n = self.dim();
        LinearProgram::new(sense, objective)
            .with_bounds(vec![(f64::NEG_INFINITY, f64::INFINITY); n])
            .with_ub(self.w.clone(), self.h.iter().copied().collect())
    }

    /// A point of `U`, if there is one.
    pub fn feasible_point(&self) -> Result<Option<Vec<f64>>> {
        let lp = self.lp_over_support(Sense::Minimize, vec![0.0; self.dim()]);
        let sol = solve_lp(&lp)?;
        Ok(sol.is_optimal().then_some(sol.x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    shape: GameShape,
    pub support: PolyhedralSupport,
    pub mean: DVector<f64>,
    pub mad_cap: f64,
}

impl AmbiguitySet {
    /// Checks dimensions only; use [`validate`] for the semantic checks.
    pub fn new(
        shape: GameShape,
        support: PolyhedralSupport,
        mean: DVector<f64>,
        mad_cap: f64,
    ) -> Result<Self> {
        let n = shape.payoff_len();
        if support.dim() != n || mean.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "game needs vectors of length {}, got W with {} columns and m of length {}",
                n,
                support.dim(),
                mean.len()
            )));
        }
        if !mad_cap.is_finite() || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(
                "ambiguity set mean or deviation cap".into(),
            ));
        }
        Ok(Self {
            shape,
            support,
            mean,
            mad_cap,
        })
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    /// The payoff tensor whose vectorisation is the mean `m`.
    pub fn mean_tensor(&self) -> PayoffTensor {
        PayoffTensor::from_vec(self.shape.clone(), self.mean.iter().copied().collect())
            .expect("mean checked at construction")
    }

    pub fn with_mad_cap(&self, mad_cap: f64) -> Self {
        Self {
            mad_cap,
            ..self.clone()
        }
    }
}

/// Interval-uncertain parameters `t` in a box, mapped to payoffs by `vec(P) = A t + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBoxUncertainty {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub map: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineBoxUncertainty {
    pub fn new(
        names: Vec<String>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        map: DMatrix<f64>,
        offset: DVector<f64>,
    ) -> Result<Self> {
        let k = names.len();
        if lo.len() != k || hi.len() != k || map.ncols() != k || map.nrows() != offset.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters but {} lower bounds, {} upper bounds, map {}x{}, offset {}",
                k,
                lo.len(),
                hi.len(),
                map.nrows(),
                map.ncols(),
                offset.len()
            )));
        }
        for i in 0..k {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(Error::NonFinite(format!("interval for {}", names[i])));
            }
            if lo[i] > hi[i] {
                return Err(Error::InvalidInterval {
                    name: names[i].clone(),
                    lo: lo[i],
                    hi: hi[i],
                });
            }
        }
        Ok(Self {
            names,
            lo,
            hi,
            map,
            offset,
        })
    }

    pub fn num_params(&self) -> usize {
        self.names.len()
    }

    /// `A t + b`.
    pub fn image(&self, t: &[f64]) -> Vec<f64> {
        (&self.map * DVector::from_column_slice(t) + &self.offset)
            .iter()
            .copied()
            .collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// All `2^k` corners of the parameter box.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let k = self.num_params();
        (0..1usize << k)
            .map(|mask| {
                (0..k)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            self.hi[i]
                        } else {
                            self.lo[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `(W, h)` for the affine image `{ A t + b : lo <= t <= hi }`.
///
/// Gauss-Jordan elimination on `[A | I]` yields an invertible `E` with
/// `E A = [R; 0]`. The zero block gives equality pairs `E_0 (p - b) = 0`;
/// each pivot row gives `t_pivot = E_r (p - b)` and so the box bounds. When `A`
/// has full column rank the description is exact. Otherwise the free
/// parameters are absorbed into the pivot-row bounds by interval arithmetic,
/// which yields an outer approximation of the image.
pub fn build_support_from_box(u: &AffineBoxUncertainty) -> Result<PolyhedralSupport> {
    let n = u.map.nrows();
    let k = u.num_params();
    let scale = u
        .map
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let tol = 1e-12 * scale;

    // Augmented [A | I], row-major.
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = Vec::with_capacity(k + n);
            r.extend(u.map.row(i).iter().copied());
            r.extend((0..n).map(|c| if c == i { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..k {
        if rank == n {
            break;
        }
        let (best, mag) = (rank..n)
            .map(|r| (r, rows[r][col].abs()))
            .fold((rank, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if mag <= tol {
            continue;
        }
        rows.swap(rank, best);
        let inv = 1.0 / rows[rank][col];
        rows[rank].iter_mut().for_each(|v| *v *= inv);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank {
                let f = row[col];
                if f != 0.0 {
                    row.iter_mut()
                        .zip(&pivot_row)
                        .for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let clean = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };

    let mut w_rows: Vec<Vec<f64>> = Vec::new();
    let mut h: Vec<f64> = Vec::new();
    let eb = |e: &[f64]| -> f64 { e.iter().zip(u.offset.iter()).map(|(a, b)| a * b).sum() };
    for row in rows.iter().skip(rank) {
        let e: Vec<f64> = row[k..].iter().map(|&v| clean(v)).collect();
        let rhs = eb(&e);
        w_rows.push(e.clone());
        h.push(rhs);
        w_rows.push(e.iter().map(|v| -v).collect());
        h.push(-rhs);
    }
    for (r, &pc) in pivots.iter().enumerate() {
        let e: Vec<f64> = rows[r][k..].iter().map(|&v| clean(v)).collect();
        let (mut lo, mut hi) = (u.lo[pc], u.hi[pc]);
        for f in (0..k).filter(|c| !pivots.contains(c)) {
            let coef = rows[r][f];
            if coef != 0.0 {
                let (a, b) = (coef * u.lo[f], coef * u.hi[f]);
                lo += a.min(b);
                hi += a.max(b);
            }
        }
        let base = eb(&e);
        w_rows.push(e.clone());
        h.push(hi + base);
        w_rows.push(e.iter().map(|v| -v).collect());
        h.push(-(lo + base));
    }
    let w = DMatrix::from_fn(w_rows.len(), n, |i, j| w_rows[i][j]);
    PolyhedralSupport::new(w, DVector::from_vec(h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// A point of the support (check a).
    pub support_witness: Option<Vec<f64>>,
    /// Coordinate-wise range of the support (check b).
    pub coordinate_ranges: Option<Vec<(f64, f64)>>,
    /// Rows of `W m <= h` that fail (check c).
    pub violated_rows: Vec<usize>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NONEMPTY: &str = "support_nonempty";
pub const CHECK_BOUNDED: &str = "support_bounded";
pub const CHECK_MEAN: &str = "mean_in_support";
pub const CHECK_MAD: &str = "deviation_cap_nonnegative";

/// Runs the four well-posedness checks on `F`. Failing checks are reported,
/// not raised; only LP input errors propagate.
pub fn validate(f: &AmbiguitySet) -> Result<ValidationReport> {
    validate_with_tol(f, DEFAULT_TOL)
}

pub fn validate_with_tol(f: &AmbiguitySet, tol: f64) -> Result<ValidationReport> {
    let mut checks = Vec::with_capacity(4);

    let witness = f.support.feasible_point()?;
    checks.push(CheckResult {
        name: CHECK_NONEMPTY,
        passed: witness.is_some(),
        detail: match &witness {
            Some(_) => "support polytope has a feasible point".into(),
            None => "W p <= h has no solution".into(),
        },
    });

    let mut coordinate_ranges = None;
    if witness.is_some() {
        match f.support.coordinate_ranges()? {
            Ok(r) => {
                checks.push(CheckResult {
                    name: CHECK_BOUNDED,
                    passed: true,
                    detail: "every coordinate has finite range over the support".into(),
                });
                coordinate_ranges = Some(r);
            }
            Err((j, status)) => checks.push(CheckResult {
                name: CHECK_BOUNDED,
                passed: false,
                detail: format!(
                    "coordinate {j} of vec(P) is not bounded over the support ({status:?})"
                ),
            }),
        }
    } else {
        checks.push(CheckResult {
            name: CHECK_BOUNDED,
            passed: false,
            detail: "not checked: support is empty".into(),
        });
    }

    let wm = &f.support.w * &f.mean;
    let violated_rows: Vec<usize> = (0..f.support.num_rows())
        .filter(|&k| wm[k] > f.support.h[k] + tol)
        .collect();
    checks.push(CheckResult {
        name: CHECK_MEAN,
        passed: violated_rows.is_empty(),
        detail: if violated_rows.is_empty() {
            "mean vector m lies in the support".into()
        } else {
            let k = violated_rows[0];
            format!(
                "mean vector m lies outside the support: row {k} has W m = {} > h = {} ({} rows violated)",
                wm[k],
                f.support.h[k],
                violated_rows.len()
            )
        },
    });

    checks.push(CheckResult {
        name: CHECK_MAD,
        passed: f.mad_cap >= 0.0,
        detail: format!("deviation cap s = {}", f.mad_cap),
    });

    Ok(ValidationReport {
        checks,
        support_witness: witness,
        coordinate_ranges,
        violated_rows,
    })
}

/// A finitely supported distribution over payoff tensors.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    atoms: Vec<PayoffTensor>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<PayoffTensor>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if atoms.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        let shape = atoms[0].shape();
        if atoms.iter().any(|a| a.shape() != shape) {
            return Err(Error::InvalidDistribution(
                "atoms have different shapes".into(),
            ));
        }
        Ok(Self { atoms, probs })
    }

    pub fn point_mass(atom: PayoffTensor) -> Self {
        Self {
            atoms: vec![atom],
            probs: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[PayoffTensor] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `E_Q[vec P]`.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.atoms[0].vec().len();
        let mut out = vec![0.0; n];
        for (a, &p) in self.atoms.iter().zip(&self.probs) {
            for (o, v) in out.iter_mut().zip(a.vec()) {
                *o += p * v;
            }
        }
        out
    }

    /// `E_Q ||vec P - m||_1`.
    pub fn mean_abs_deviation(&self, m: &[f64]) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .map(|(a, p)| {
                p * a
                    .vec()
                    .iter()
                    .zip(m)
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Whether `q` belongs to `F` up to `tol` on the support, mean and deviation constraints.
pub fn is_member(q: &DiscreteDistribution, f: &AmbiguitySet, tol: f64) -> Result<bool> {
    if q.atoms[0].shape() != f.shape() {
        return Err(Error::DimensionMismatch(
            "distribution atoms do not match the ambiguity set's game shape".into(),
        ));
    }
    if q.atoms.iter().any(|a| !f.support.contains(a.vec(), tol)) {
        return Ok(false);
    }
    let m: Vec<f64> = f.mean.iter().copied().collect();
    let mean_err = q
        .mean()
        .iter()
        .zip(&m)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if mean_err > tol {
        return Ok(false);
    }
    Ok(q.mean_abs_deviation(&m) <= f.mad_cap + tol)
}
