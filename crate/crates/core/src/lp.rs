//! Dense linear programming with primal and dual solutions.
//!
//! Programs have the form
//!
//! ```text
//! min / max  c^T z
//! s.t.       A_ub z <= b_ub
//!            A_eq z  = b_eq
//!            l <= z <= u        (entries of l, u may be infinite)
//! ```
//!
//! and are solved by a two-phase tableau simplex. Pricing uses the most
//! negative reduced cost and falls back to Bland's rule after a run of
//! degenerate pivots. The final basis is refactorised with an LU decomposition
//! so primal and dual values are recomputed from the original data, then every
//! optimal answer is checked against the KKT conditions before it is returned.
//!
//! Dual sign convention: multipliers are reported for the minimisation form
//! (`max c^T z` is treated as `min -c^T z`) so that
//! `c_min + A_ub^T y + A_eq^T w = r`, with `y >= 0` on inequality rows and `r`
//! the reduced costs attributed to active bounds. For a minimisation `y_k` is
//! the rate at which the optimum falls as `b_ub[k]` grows; for a maximisation it
//! is the rate at which the optimum rises.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-7;
/// Pivots below this trigger an immediate reinversion.
const SMALL_PIVOT: f64 = 1e-4;
const HARRIS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// An entering column with no positive entry is a ray only if its reduced
/// cost is clearly negative; smaller values are round-off on columns that are
/// exact negatives of basic ones (split free variables).
const RAY_COST_TOL: f64 = 1e-7;
/// Pivots between reinversions of the basis.
const REINVERT_EVERY: usize = 50;
/// Basic values below `-CLEANUP_TOL` at the optimum trigger dual simplex pivots.
const CLEANUP_TOL: f64 = 1e-11;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 30;

pub const PRIMAL_FEAS_TOL: f64 = 1e-8;
pub const DUAL_FEAS_TOL: f64 = 1e-8;
pub const COMPLEMENTARITY_TOL: f64 = 1e-7;
pub const DUALITY_GAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub a_ub: DMatrix<f64>,
    pub b_ub: Vec<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program with no constraints and every variable nonnegative.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            a_ub: DMatrix::zeros(0, n),
            b_ub: Vec::new(),
            a_eq: DMatrix::zeros(0, n),
            b_eq: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_ub(mut self, a: DMatrix<f64>, b: Vec<f64>) -> Self {
        self.a_ub = a;
        self.b_ub = b;
        self
    }

    pub fn with_eq(mut self, a: DMatrix<f64>, b: Vec<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    /// Appends `row . z <= rhs`.
    pub fn push_ub(&mut self, row: &[f64], rhs: f64) {
        self.a_ub = append_row(&self.a_ub, row);
        self.b_ub.push(rhs);
    }

    /// Appends `row . z = rhs`.
    pub fn push_eq(&mut self, row: &[f64], rhs: f64) {
        self.a_eq = append_row(&self.a_eq, row);
        self.b_eq.push(rhs);
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        let dims_ok = self.a_ub.ncols() == n
            && self.a_eq.ncols() == n
            && self.a_ub.nrows() == self.b_ub.len()
            && self.a_eq.nrows() == self.b_eq.len()
            && self.bounds.len() == n;
        if !dims_ok {
            return Err(Error::DimensionMismatch(format!(
                "LP with {} variables: A_ub {}x{}, b_ub {}, A_eq {}x{}, b_eq {}, bounds {}",
                n,
                self.a_ub.nrows(),
                self.a_ub.ncols(),
                self.b_ub.len(),
                self.a_eq.nrows(),
                self.a_eq.ncols(),
                self.b_eq.len(),
                self.bounds.len()
            )));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.a_ub.iter().all(|v| v.is_finite())
            && self.a_eq.iter().all(|v| v.is_finite())
            && self.b_ub.iter().all(|v| v.is_finite())
            && self.b_eq.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("linear program coefficients".into()));
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::DimensionMismatch(format!(
                    "variable {j} has invalid bounds [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    /// The explicit LP dual. Its optimal value equals the optimum of `self`
    /// whenever the primal has one.
    ///
    /// Dual variables are laid out as `[y (ub rows), w (eq rows), mu_l, mu_u]`
    /// where `mu_l` / `mu_u` exist only for finite lower / upper bounds.
    pub fn dual(&self) -> LinearProgram {
        let n = self.num_vars();
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let lower: Vec<usize> = (0..n).filter(|&j| self.bounds[j].0.is_finite()).collect();
        let upper: Vec<usize> = (0..n).filter(|&j| self.bounds[j].1.is_finite()).collect();
        let (mu, me) = (self.b_ub.len(), self.b_eq.len());
        let nd = mu + me + lower.len() + upper.len();

        // Dual of `min c z`: max -b_ub.y - b_eq.w + l.mu_l - u.mu_u
        // s.t. A_ub^T y + A_eq^T w - mu_l + mu_u = -c.
        let mut obj = Vec::with_capacity(nd);
        obj.extend(self.b_ub.iter().map(|b| -b));
        obj.extend(self.b_eq.iter().map(|b| -b));
        obj.extend(lower.iter().map(|&j| self.bounds[j].0));
        obj.extend(upper.iter().map(|&j| -self.bounds[j].1));

        let mut a = DMatrix::zeros(n, nd);
        for j in 0..n {
            for k in 0..mu {
                a[(j, k)] = self.a_ub[(k, j)];
            }
            for k in 0..me {
                a[(j, mu + k)] = self.a_eq[(k, j)];
            }
        }
        for (t, &j) in lower.iter().enumerate() {
            a[(j, mu + me + t)] = -1.0;
        }
        for (t, &j) in upper.iter().enumerate() {
            a[(j, mu + me + lower.len() + t)] = 1.0;
        }
        let rhs: Vec<f64> = self.objective.iter().map(|c| -sign * c).collect();

        let mut bounds = vec![(0.0, f64::INFINITY); nd];
        for b in bounds.iter_mut().skip(mu).take(me) {
            *b = (f64::NEG_INFINITY, f64::INFINITY);
        }
        match self.sense {
            Sense::Minimize => LinearProgram::new(Sense::Maximize, obj)
                .with_eq(a, rhs)
                .with_bounds(bounds),
            Sense::Maximize => {
                LinearProgram::new(Sense::Minimize, obj.iter().map(|v| -v).collect())
                    .with_eq(a, rhs)
                    .with_bounds(bounds)
            }
        }
    }
}

fn append_row(a: &DMatrix<f64>, row: &[f64]) -> DMatrix<f64> {
    let n = a.ncols().max(row.len());
    let mut out = DMatrix::zeros(a.nrows() + 1, n);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    for (j, &v) in row.iter().enumerate() {
        out[(a.nrows(), j)] = v;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The simplex hit its iteration cap or the final point failed the KKT check.
    NumericalFailure,
}

/// Post-solve KKT measurements (all scaled; see module docs).
#[derive(Debug, Clone, Default)]
pub struct LpDiagnostics {
    pub iterations: usize,
    pub used_bland: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
    pub dual_objective: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_ub: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub diagnostics: LpDiagnostics,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, objective: f64, diagnostics: LpDiagnostics) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective,
            dual_ub: Vec::new(),
            dual_eq: Vec::new(),
            reduced_costs: Vec::new(),
            diagnostics,
        }
    }
}

/// Solves `p`. Fails only on malformed input; solver outcomes (including
/// numerical trouble) are reported through [`LpSolution::status`].
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution> {
    p.check()?;
    let first = Simplex::run(p, false);
    if first.status != LpStatus::NumericalFailure || first.diagnostics.used_bland {
        return Ok(first);
    }
    Ok(Simplex::run(p, true))
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `z = offset + x[col]`
    Shift { col: usize, offset: f64 },
    /// `z = offset - x[col]`
    Mirror { col: usize, offset: f64 },
    /// `z = x[pos] - x[neg]`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowOrigin {
    Ub(usize),
    Eq(usize),
    Bound,
}

/// `min c^T x, A x = b, x >= 0, b >= 0` with bookkeeping back to the original program.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Basic column for the initial basis, if a slack can serve.
    slack: Vec<Option<usize>>,
    origin: Vec<RowOrigin>,
    sign: Vec<f64>,
    vars: Vec<VarMap>,
}

impl StandardForm {
    fn build(p: &LinearProgram) -> std::result::Result<Self, &'static str> {
        let n = p.num_vars();
        let cmin: Vec<f64> = match p.sense {
            Sense::Minimize => p.objective.clone(),
            Sense::Maximize => p.objective.iter().map(|c| -c).collect(),
        };
        let mut vars = Vec::with_capacity(n);
        let mut c = Vec::new();
        // (column, upper) for shifted variables with a finite upper bound.
        let mut bound_rows = Vec::new();
        for (j, &(l, u)) in p.bounds.iter().enumerate() {
            let col = c.len();
            if l.is_finite() {
                vars.push(VarMap::Shift { col, offset: l });
                c.push(cmin[j]);
                if u.is_finite() {
                    bound_rows.push((col, u - l));
                }
            } else if u.is_finite() {
                vars.push(VarMap::Mirror { col, offset: u });
                c.push(-cmin[j]);
            } else {
                vars.push(VarMap::Split {
                    pos: col,
                    neg: col + 1,
                });
                c.push(cmin[j]);
                c.push(-cmin[j]);
            }
        }
        let ncore = c.len();

        let substitute = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
            let mut out = vec![0.0; ncore];
            let mut rhs = rhs;
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match vars[j] {
                    VarMap::Shift { col, offset } => {
                        out[col] += a;
                        rhs -= a * offset;
                    }
                    VarMap::Mirror { col, offset } => {
                        out[col] -= a;
                        rhs -= a * offset;
                    }
                    VarMap::Split { pos, neg } => {
                        out[pos] += a;
                        out[neg] -= a;
                    }
                }
            }
            (out, rhs)
        };

        let mut rows: Vec<(Vec<f64>, f64, RowOrigin, bool)> = Vec::new();
        for k in 0..p.b_ub.len() {
            let row: Vec<f64> = p.a_ub.row(k).iter().copied().collect();
            let (r, rhs) = substitute(&row, p.b_ub[k]);
            rows.push((r, rhs, RowOrigin::Ub(k), true));
        }
        for k in 0..p.b_eq.len() {
            let row: Vec<f64> = p.a_eq.row(k).iter().copied().collect();
            let (r, rhs) = substitute(&row, p.b_eq[k]);
            rows.push((r, rhs, RowOrigin::Eq(k), false));
        }
        for &(col, width) in &bound_rows {
            let mut r = vec![0.0; ncore];
            r[col] = 1.0;
            rows.push((r, width, RowOrigin::Bound, true));
        }

        // Drop empty rows, checking they are satisfiable.
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        let mut kept = Vec::with_capacity(rows.len());
        for (r, rhs, origin, is_ub) in rows {
            if r.iter().all(|&v| v == 0.0) {
                let ok = if is_ub {
                    rhs >= -PRIMAL_FEAS_TOL * scale
                } else {
                    rhs.abs() <= PRIMAL_FEAS_TOL * scale
                };
                if !ok {
                    return Err("empty constraint row is violated");
                }
                continue;
            }
            kept.push((r, rhs, origin, is_ub));
        }

        let num_slacks = kept.iter().filter(|r| r.3).count();
        let width = ncore + num_slacks;
        c.resize(width, 0.0);
        let mut a = Vec::with_capacity(kept.len());
        let mut b = Vec::with_capacity(kept.len());
        let mut slack = Vec::with_capacity(kept.len());
        let mut origin = Vec::with_capacity(kept.len());
        let mut sign = Vec::with_capacity(kept.len());
        let mut next_slack = ncore;
        for (mut r, rhs, o, is_ub) in kept {
            r.resize(width, 0.0);
            let mut s_col = None;
            if is_ub {
                r[next_slack] = 1.0;
                s_col = Some(next_slack);
                next_slack += 1;
            }
            let s = if rhs < 0.0 { -1.0 } else { 1.0 };
            if s < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
                s_col = None;
            }
            a.push(r);
            b.push(s * rhs);
            slack.push(s_col);
            origin.push(o);
            sign.push(s);
        }
        Ok(Self {
            a,
            b,
            c,
            slack,
            origin,
            sign,
            vars,
        })
    }
}

struct Tableau {
    m: usize,
    /// Total columns, artificials included (rhs stored separately).
    n: usize,
    /// Columns `>= n_real` are artificial.
    n_real: usize,
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of the current phase.
    d: Vec<f64>,
    /// Cost vector of the current phase.
    cost: Vec<f64>,
    /// Initial tableau, kept for reinversion.
    orig: Vec<Vec<f64>>,
    orig_rhs: Vec<f64>,
    iterations: usize,
    bland: bool,
    force_bland: bool,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn new(sf: &StandardForm, force_bland: bool) -> Self {
        let m = sf.a.len();
        let n_real = sf.c.len();
        let n_art = sf.slack.iter().filter(|s| s.is_none()).count();
        let n = n_real + n_art;
        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n_real;
        for i in 0..m {
            let mut row = sf.a[i].clone();
            row.resize(n, 0.0);
            match sf.slack[i] {
                Some(s) => basis.push(s),
                None => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            t.push(row);
        }
        Self {
            m,
            n,
            n_real,
            orig: t.clone(),
            orig_rhs: sf.b.clone(),
            t,
            rhs: sf.b.clone(),
            basis,
            d: vec![0.0; n],
            cost: vec![0.0; n],
            iterations: 0,
            bland: force_bland,
            force_bland,
        }
    }

    fn price(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        self.d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in self.d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = 1.0 / self.t[r][q];
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r][q] = 1.0;
        let pivot_row = std::mem::take(&mut self.t[r]);
        let pivot_rhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][q];
            if f != 0.0 {
                for (v, p) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                self.t[i][q] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.d[q] = 0.0;
        }
        self.t[r] = pivot_row;
        self.basis[r] = q;
    }

    /// Rebuilds the tableau as `B^{-1} [A | b]` from the initial data and
    /// reprices, discarding accumulated round-off. Returns false if the basis
    /// matrix is numerically singular.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.orig[i][self.basis[k]]);
        let lu = bmat.lu();
        if !lu.is_invertible() {
            return false;
        }
        let full = DMatrix::from_fn(m, self.n + 1, |i, j| {
            if j < self.n {
                self.orig[i][j]
            } else {
                self.orig_rhs[i]
            }
        });
        let Some(solved) = lu.solve(&full) else {
            return false;
        };
        if solved.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..self.n {
                self.t[i][j] = solved[(i, j)];
            }
            self.rhs[i] = solved[(i, self.n)];
        }
        // Basic columns are unit vectors exactly.
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i][j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let cost = std::mem::take(&mut self.cost);
        self.price(&cost);
        true
    }

    /// Leaving row for entering column `q`, or `None` if no entry is positive.
    ///
    /// Harris two-pass test: the first pass bounds the step with rhs relaxed
    /// by `HARRIS_TOL`; the second picks, among rows whose exact ratio is
    /// within that bound, the largest pivot. Under Bland's rule ties go to
    /// the smallest basic index instead.
    fn ratio_test(&self, q: usize) -> Option<(usize, f64)> {
        let rows = (0..self.m).filter(|&i| self.t[i][q] > PIVOT_TOL);
        if self.bland {
            let mut best: Option<(usize, f64)> = None;
            for i in rows {
                let ratio = self.rhs[i].max(0.0) / self.t[i][q];
                best = match best {
                    Some((bi, br)) if ratio > br + 1e-12 * (1.0 + br.abs()) => Some((bi, br)),
                    Some((bi, br))
                        if ratio >= br - 1e-12 * (1.0 + br.abs())
                            && self.basis[bi] < self.basis[i] =>
                    {
                        Some((bi, br))
                    }
                    _ => Some((i, ratio)),
                };
            }
            return best;
        }
        let bound = rows
            .clone()
            .map(|i| (self.rhs[i].max(0.0) + HARRIS_TOL) / self.t[i][q])
            .fold(f64::INFINITY, f64::min);
        if !bound.is_finite() {
            return None;
        }
        rows.filter(|&i| self.rhs[i].max(0.0) / self.t[i][q] <= bound)
            .max_by(|&a, &b| self.t[a][q].total_cmp(&self.t[b][q]))
            .map(|i| (i, self.rhs[i].max(0.0) / self.t[i][q]))
    }

    fn run_phase(&mut self, allowed: usize, max_iter: usize) -> PhaseOutcome {
        let mut degenerate_run = 0;
        self.bland = self.force_bland;
        // `skip`: no usable pivot in the column. `reject`: only a small pivot,
        // postponed until no other improving column remains.
        let mut skip = vec![false; allowed];
        let mut reject = vec![false; allowed];
        let mut allow_small = false;
        let mut since_reinvert = 0;
        loop {
            if self.iterations >= max_iter {
                return PhaseOutcome::IterationLimit;
            }
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                since_reinvert = 0;
            }
            let eligible = |j: usize| !skip[j] && !reject[j] && self.d[j] < -COST_TOL;
            let entering = if self.bland {
                (0..allowed).find(|&j| eligible(j))
            } else {
                (0..allowed)
                    .filter(|&j| eligible(j))
                    .min_by(|&a, &b| self.d[a].total_cmp(&self.d[b]))
            };
            let Some(q) = entering else {
                if reject.iter().any(|&r| r) {
                    reject.iter_mut().for_each(|r| *r = false);
                    allow_small = true;
                    continue;
                }
                return PhaseOutcome::Optimal;
            };

            let best = self.ratio_test(q);
            let Some((r, ratio)) = best else {
                if self.d[q] < -RAY_COST_TOL {
                    // Confirm the ray on a freshly inverted basis.
                    if since_reinvert > 0 && self.reinvert() {
                        since_reinvert = 0;
                        continue;
                    }
                    return PhaseOutcome::Unbounded;
                }
                skip[q] = true;
                continue;
            };
            let small_pivot = self.t[r][q] < SMALL_PIVOT;
            if small_pivot && !allow_small {
                // Recheck on fresh data, then prefer other columns.
                if since_reinvert > 0 && self.reinvert() {
                    since_reinvert = 0;
                    continue;
                }
                reject[q] = true;
                continue;
            }
            allow_small = false;
            skip.iter_mut().for_each(|s| *s = false);
            reject.iter_mut().for_each(|r| *r = false);
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    self.bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            let saved = small_pivot.then(|| self.basis.clone());
            self.pivot(r, q);
            self.iterations += 1;
            since_reinvert += 1;
            if let Some(saved) = saved {
                if self.reinvert() {
                    since_reinvert = 0;
                } else {
                    // The pivot made the basis singular: undo it.
                    self.basis = saved;
                    if self.reinvert() {
                        since_reinvert = 0;
                    }
                    skip[q] = true;
                }
            }
        }
    }

    /// Dual simplex pivots that remove small negative basic values left by
    /// round-off at an optimal basis. Reduced costs stay nonnegative.
    fn dual_cleanup(&mut self, allowed: usize) {
        if self.rhs.iter().all(|&v| v >= -CLEANUP_TOL) {
            return;
        }
        self.reinvert();
        for _ in 0..2 * self.m + 10 {
            let Some(r) = (0..self.m)
                .filter(|&i| self.rhs[i] < -CLEANUP_TOL)
                .min_by(|&a, &b| self.rhs[a].total_cmp(&self.rhs[b]))
            else {
                return;
            };
            let ratio = |j: usize| self.d[j].max(0.0) / -self.t[r][j];
            let Some(q) = (0..allowed)
                .filter(|&j| self.t[r][j] < -PIVOT_TOL)
                .min_by(|&a, &b| ratio(a).total_cmp(&ratio(b)))
            else {
                return;
            };
            self.pivot(r, q);
            self.iterations += 1;
            self.reinvert();
        }
    }

    fn drop_rows(&mut self, rows: &[usize]) {
        let mut keep = vec![true; self.m];
        for &r in rows {
            keep[r] = false;
        }
        let mut idx = 0;
        self.t.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        idx = 0;
        self.rhs.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        idx = 0;
        self.orig.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        idx = 0;
        self.orig_rhs.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        idx = 0;
        self.basis.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        self.m = self.t.len();
    }
}

struct Simplex;

impl Simplex {
    fn run(p: &LinearProgram, force_bland: bool) -> LpSolution {
        let mut diag = LpDiagnostics {
            used_bland: force_bland,
            ..Default::default()
        };
        let sf = match StandardForm::build(p) {
            Ok(sf) => sf,
            Err(msg) => {
                diag.message = msg.into();
                return LpSolution::without_point(LpStatus::Infeasible, f64::NAN, diag);
            }
        };
        let mut tab = Tableau::new(&sf, force_bland);
        let max_iter = 50 * (tab.m + tab.n) + 1000;
        let b_scale = 1.0 + sf.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));

        // Phase 1: minimise the sum of artificials.
        let mut rows_alive: Vec<usize> = (0..tab.m).collect();
        if tab.n > tab.n_real {
            let mut cost = vec![0.0; tab.n];
            cost[tab.n_real..].iter_mut().for_each(|c| *c = 1.0);
            tab.price(&cost);
            let outcome = tab.run_phase(tab.n, max_iter);
            diag.iterations = tab.iterations;
            diag.used_bland |= tab.bland;
            match outcome {
                PhaseOutcome::Optimal => {}
                // Phase 1 is bounded below by zero, so a ray means lost accuracy.
                PhaseOutcome::Unbounded => {
                    diag.message = "phase 1 reported a ray".into();
                    return LpSolution::without_point(LpStatus::NumericalFailure, f64::NAN, diag);
                }
                PhaseOutcome::IterationLimit => {
                    diag.message = "iteration limit in phase 1".into();
                    return LpSolution::without_point(LpStatus::NumericalFailure, f64::NAN, diag);
                }
            }
            let infeasibility: f64 = (0..tab.m)
                .filter(|&i| tab.basis[i] >= tab.n_real)
                .map(|i| tab.rhs[i])
                .sum();
            if infeasibility > PRIMAL_FEAS_TOL * b_scale {
                diag.message = format!("phase 1 ended with infeasibility {infeasibility:e}");
                return LpSolution::without_point(LpStatus::Infeasible, f64::NAN, diag);
            }
            // Drive remaining artificials out of the basis; rows where that is
            // impossible are linearly dependent and get removed.
            let mut redundant = Vec::new();
            for i in 0..tab.m {
                if tab.basis[i] < tab.n_real {
                    continue;
                }
                let candidate = (0..tab.n_real)
                    .filter(|&j| tab.t[i][j].abs() > 1e-7)
                    .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()));
                match candidate {
                    Some(j) => tab.pivot(i, j),
                    None => redundant.push(i),
                }
            }
            if !redundant.is_empty() {
                tab.drop_rows(&redundant);
                rows_alive.retain(|r| !redundant.contains(r));
            }
        }

        // Phase 2.
        let mut cost = sf.c.clone();
        cost.resize(tab.n, 0.0);
        tab.price(&cost);
        let outcome = tab.run_phase(tab.n_real, max_iter);
        diag.iterations = tab.iterations;
        diag.used_bland |= tab.bland;
        match outcome {
            PhaseOutcome::Optimal => {
                tab.dual_cleanup(tab.n_real);
                diag.iterations = tab.iterations;
            }
            PhaseOutcome::Unbounded => {
                diag.message = "objective unbounded along an improving ray".into();
                let obj = match p.sense {
                    Sense::Minimize => f64::NEG_INFINITY,
                    Sense::Maximize => f64::INFINITY,
                };
                return LpSolution::without_point(LpStatus::Unbounded, obj, diag);
            }
            PhaseOutcome::IterationLimit => {
                diag.message = "iteration limit in phase 2".into();
                return LpSolution::without_point(LpStatus::NumericalFailure, f64::NAN, diag);
            }
        }

        let (x_std, pi) = refine(&sf, &tab, &rows_alive, &cost);
        Self::recover(p, &sf, &rows_alive, &x_std, &pi, diag)
    }

    fn recover(
        p: &LinearProgram,
        sf: &StandardForm,
        rows_alive: &[usize],
        x_std: &[f64],
        pi: &[f64],
        mut diag: LpDiagnostics,
    ) -> LpSolution {
        let n = p.num_vars();
        let x: Vec<f64> = sf
            .vars
            .iter()
            .map(|v| match *v {
                VarMap::Shift { col, offset } => offset + x_std[col],
                VarMap::Mirror { col, offset } => offset - x_std[col],
                VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
            })
            .collect();
        let mut y = vec![0.0; p.b_ub.len()];
        let mut w = vec![0.0; p.b_eq.len()];
        for (t, &row) in rows_alive.iter().enumerate() {
            match sf.origin[row] {
                RowOrigin::Ub(k) => y[k] = -sf.sign[row] * pi[t],
                RowOrigin::Eq(k) => w[k] = -sf.sign[row] * pi[t],
                RowOrigin::Bound => {}
            }
        }
        let cmin: Vec<f64> = match p.sense {
            Sense::Minimize => p.objective.clone(),
            Sense::Maximize => p.objective.iter().map(|c| -c).collect(),
        };
        let mut r = cmin.clone();
        for (k, &yk) in y.iter().enumerate() {
            if yk != 0.0 {
                for j in 0..n {
                    r[j] += p.a_ub[(k, j)] * yk;
                }
            }
        }
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                for j in 0..n {
                    r[j] += p.a_eq[(k, j)] * wk;
                }
            }
        }

        let primal_min: f64 = cmin.iter().zip(&x).map(|(c, v)| c * v).sum();
        let mut primal_res: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for k in 0..p.b_ub.len() {
            let ax: f64 = (0..n).map(|j| p.a_ub[(k, j)] * x[j]).sum();
            let slack = p.b_ub[k] - ax;
            primal_res = primal_res.max((-slack).max(0.0) / (1.0 + p.b_ub[k].abs()));
            comp = comp.max((y[k] * slack).abs());
        }
        for k in 0..p.b_eq.len() {
            let ax: f64 = (0..n).map(|j| p.a_eq[(k, j)] * x[j]).sum();
            primal_res = primal_res.max((ax - p.b_eq[k]).abs() / (1.0 + p.b_eq[k].abs()));
        }
        let mut dual_res: f64 = y.iter().fold(0.0, |acc, &v| acc.max(-v));
        let mut dual_min = -p.b_ub.iter().zip(&y).map(|(b, v)| b * v).sum::<f64>()
            - p.b_eq.iter().zip(&w).map(|(b, v)| b * v).sum::<f64>();
        for j in 0..n {
            let (l, u) = p.bounds[j];
            primal_res = primal_res.max((l - x[j]).max(0.0) / (1.0 + l.abs().min(1e300)));
            primal_res = primal_res.max((x[j] - u).max(0.0) / (1.0 + u.abs().min(1e300)));
            let scale = 1.0 + cmin[j].abs();
            let mu_l = r[j].max(0.0);
            let mu_u = (-r[j]).max(0.0);
            if l.is_finite() {
                dual_min += mu_l * l;
                comp = comp.max(mu_l * (x[j] - l).abs());
            } else {
                dual_res = dual_res.max(mu_l / scale);
            }
            if u.is_finite() {
                dual_min -= mu_u * u;
                comp = comp.max(mu_u * (u - x[j]).abs());
            } else {
                dual_res = dual_res.max(mu_u / scale);
            }
        }
        let gap = (primal_min - dual_min).abs() / (1.0 + primal_min.abs());
        let comp_scaled = comp / (1.0 + primal_min.abs());

        let (objective, dual_objective) = match p.sense {
            Sense::Minimize => (primal_min, dual_min),
            Sense::Maximize => (-primal_min, -dual_min),
        };
        diag.primal_residual = primal_res;
        diag.dual_residual = dual_res;
        diag.complementarity = comp_scaled;
        diag.duality_gap = gap;
        diag.dual_objective = dual_objective;

        let certified = primal_res <= PRIMAL_FEAS_TOL
            && dual_res <= DUAL_FEAS_TOL
            && comp_scaled <= COMPLEMENTARITY_TOL
            && gap <= DUALITY_GAP_TOL;
        let status = if certified {
            LpStatus::Optimal
        } else {
            diag.message = format!(
                "KKT check failed: primal {primal_res:e}, dual {dual_res:e}, complementarity {comp_scaled:e}, gap {gap:e}"
            );
            LpStatus::NumericalFailure
        };
        debug_assert_eq!(x.len(), n);
        LpSolution {
            status,
            x,
            objective,
            dual_ub: y,
            dual_eq: w,
            reduced_costs: r,
            diagnostics: diag,
        }
    }
}

/// Recomputes the basic solution and row prices from the original standard
/// form data. Falls back to tableau values if the basis matrix is singular.
fn refine(
    sf: &StandardForm,
    tab: &Tableau,
    rows_alive: &[usize],
    cost: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = tab.m;
    let n_real = tab.n_real;
    let mut x = vec![0.0; n_real];
    if m == 0 {
        return (x, Vec::new());
    }
    let bmat = DMatrix::from_fn(m, m, |i, k| sf.a[rows_alive[i]][tab.basis[k]]);
    let rhs = DVector::from_iterator(m, rows_alive.iter().map(|&r| sf.b[r]));
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| cost[j]));
    let lu = bmat.clone().lu();
    let solved = lu
        .solve(&rhs)
        .zip(bmat.transpose().lu().solve(&cb))
        .filter(|(xb, pi)| xb.iter().chain(pi.iter()).all(|v| v.is_finite()));
    match solved {
        Some((xb, pi)) => {
            for (k, &j) in tab.basis.iter().enumerate() {
                x[j] = xb[k].max(0.0);
            }
            (x, pi.iter().copied().collect())
        }
        None => {
            for (k, &j) in tab.basis.iter().enumerate() {
                x[j] = tab.rhs[k].max(0.0);
            }
            // pi = c_B^T B^{-1}; B^{-1} e_i is the tableau column of the
            // initial basic variable of row i, whose reduced cost is c - pi_i.
            let mut pi = vec![0.0; m];
            let mut next_art = n_real;
            let mut init_col = Vec::with_capacity(sf.a.len());
            for s in &sf.slack {
                match s {
                    Some(c) => init_col.push(*c),
                    None => {
                        init_col.push(next_art);
                        next_art += 1;
                    }
                }
            }
            for (t, &row) in rows_alive.iter().enumerate() {
                let j = init_col[row];
                let cj = if j < n_real { cost[j] } else { 0.0 };
                pi[t] = cj - tab.d[j];
            }
            (x, pi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn min_with_lower_row() {
        // min x s.t. x >= 3, written as -x <= -3.
        let p = LinearProgram::new(Sense::Minimize, vec![1.0])
            .with_bounds(vec![(f64::NEG_INFINITY, f64::INFINITY)])
            .with_ub(row(&[-1.0]), vec![-3.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.dual_ub[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_over_simplex_face() {
        let p = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0])
            .with_ub(row(&[1.0, 1.0]), vec![1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.dual_ub[0] - 1.0).abs() < 1e-12);
        assert!((s.diagnostics.dual_objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = LinearProgram::new(Sense::Minimize, vec![1.0])
            .with_ub(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), vec![1.0, -2.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);

        let p = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0])
            .with_ub(row(&[-1.0, 1.0]), vec![1.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equalities_bounds_and_redundant_rows() {
        // min -x - 2y s.t. x + y = 2, 2x + 2y = 4 (redundant), 0 <= x <= 1.5, y <= 1.5
        let p = LinearProgram::new(Sense::Minimize, vec![-1.0, -2.0])
            .with_eq(
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]),
                vec![2.0, 4.0],
            )
            .with_bounds(vec![(0.0, 1.5), (f64::NEG_INFINITY, 1.5)]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal, "{:?}", s.diagnostics);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 1.5).abs() < 1e-12);
        assert!((s.objective + 3.5).abs() < 1e-12);
    }

    #[test]
    fn empty_row_violation_is_infeasible() {
        let p = LinearProgram::new(Sense::Minimize, vec![1.0]).with_ub(row(&[0.0]), vec![-1.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]).with_ub(row(&[1.0]), vec![1.0]);
        assert!(matches!(solve_lp(&p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn push_rows() {
        let mut p = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        p.push_ub(&[1.0, 1.0], 4.0);
        p.push_ub(&[1.0, 3.0], 6.0);
        p.push_ub(&[1.0, 0.0], 3.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 11.0).abs() < 1e-10);
        let d = solve_lp(&p.dual()).unwrap();
        assert!((d.objective - 11.0).abs() < 1e-10);
    }
}
