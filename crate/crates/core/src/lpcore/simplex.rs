//! Bounded-variable primal revised simplex.
//!
//! Rows are turned into equalities with one logical per row, `A x - r = 0`,
//! where the logical carries the row's bounds. The initial basis is all
//! logicals; phase one minimizes the sum of bound infeasibilities of basic
//! variables, phase two the true objective. Pricing is Dantzig with a switch to
//! Bland's rule after a run of degenerate pivots.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::lu::{BasisFactor, ColumnRef};
use super::model::{ConId, LinearModel, Relation, VarId};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN_FOR_BLAND: usize = 50;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// `None` picks a limit proportional to the model size.
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-7, opt_tol: 1e-7, max_iterations: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// Row multipliers `y` with `c = A'y + d`; non-positive on `<=` rows and
    /// non-negative on `>=` rows at optimality.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub solve_time: Duration,
}

impl Solution {
    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.index()]
    }

    pub fn dual(&self, con: ConId) -> f64 {
        self.duals[con.index()]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves `model` with the built-in simplex. Deterministic for identical input.
pub fn solve(model: &LinearModel, options: &SolveOptions) -> Solution {
    let start = Stopwatch::start();
    let problem = Scaled::new(model);
    let mut simplex = Simplex::new(&problem, options);
    let status = simplex.run();
    let mut sol = simplex.extract(model, &problem, status);
    sol.solve_time = start.elapsed();
    sol
}

/// Wall-clock timer. `std::time::Instant` panics on `wasm32-unknown-unknown`,
/// so there the elapsed time is always reported as zero.
struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        Duration::ZERO
    }
}

/// Internal, scaled copy of the model. Columns `0..n` are structural,
/// `n..n+m` are row logicals with column `-e_i`.
struct Scaled {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    logical_rows: Vec<usize>,
    logical_vals: Vec<f64>,
}

impl Scaled {
    fn new(model: &LinearModel) -> Self {
        let n = model.num_variables();
        let m = model.num_constraints();

        let mut counts = vec![0usize; n];
        for c in model.constraints() {
            for &(v, _) in &c.row {
                counts[v.index()] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.row {
                let j = v.index();
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let (row_scale, col_scale) = geometric_scaling(n, m, &col_start, &col_row, &col_val);
        for j in 0..n {
            for p in col_start[j]..col_start[j + 1] {
                col_val[p] *= row_scale[col_row[p]] * col_scale[j];
            }
        }

        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (j, v) in model.variables().iter().enumerate() {
            lo.push(v.lower / col_scale[j]);
            up.push(v.upper / col_scale[j]);
            cost.push(model.objective()[j] * col_scale[j]);
        }
        for (i, c) in model.constraints().iter().enumerate() {
            let b = c.rhs * row_scale[i];
            let (l, u) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, b),
                Relation::Ge => (b, f64::INFINITY),
                Relation::Eq => (b, b),
            };
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }

        Scaled {
            n,
            m,
            col_start,
            col_row,
            col_val,
            lo,
            up,
            cost,
            row_scale,
            col_scale,
            logical_rows: (0..m).collect(),
            logical_vals: vec![-1.0; m],
        }
    }

    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            let r = self.col_start[j]..self.col_start[j + 1];
            ColumnRef { rows: &self.col_row[r.clone()], vals: &self.col_val[r] }
        } else {
            let i = j - self.n;
            ColumnRef { rows: &self.logical_rows[i..i + 1], vals: &self.logical_vals[i..i + 1] }
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for p in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_val[p] * y[self.col_row[p]];
            }
            s
        } else {
            -y[j - self.n]
        }
    }
}

/// Power-of-two geometric-mean scaling of rows and columns.
fn geometric_scaling(
    n: usize,
    m: usize,
    col_start: &[usize],
    col_row: &[usize],
    col_val: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0f64; m];
    let mut cs = vec![1.0f64; n];
    for _ in 0..4 {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for j in 0..n {
            for p in col_start[j]..col_start[j + 1] {
                let a = (col_val[p] * cs[j]).abs();
                let i = col_row[p];
                rmin[i] = rmin[i].min(a);
                rmax[i] = rmax[i].max(a);
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
            }
        }
        for j in 0..n {
            let mut cmin = f64::INFINITY;
            let mut cmax = 0.0f64;
            for p in col_start[j]..col_start[j + 1] {
                let a = (col_val[p] * rs[col_row[p]]).abs();
                cmin = cmin.min(a);
                cmax = cmax.max(a);
            }
            if cmax > 0.0 {
                cs[j] = 1.0 / (cmin * cmax).sqrt();
            }
        }
    }
    let pow2 = |s: f64| 2f64.powi(s.log2().round().clamp(-40.0, 40.0) as i32);
    (rs.into_iter().map(pow2).collect(), cs.into_iter().map(pow2).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic without finite bounds, or displaced from a bound by a basis repair.
    Free,
    Fixed,
}

struct Simplex<'a> {
    p: &'a Scaled,
    ftol: f64,
    otol: f64,
    max_iter: usize,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    factor: BasisFactor,
    iterations: usize,
    scratch: Vec<f64>,
}

enum Step {
    Continue,
    Done(SolveStatus),
}

impl<'a> Simplex<'a> {
    fn new(p: &'a Scaled, opts: &SolveOptions) -> Self {
        let total = p.n + p.m;
        let mut x = vec![0.0; total];
        let mut status = vec![VarStatus::Basic; total];
        for j in 0..p.n {
            let (l, u) = (p.lo[j], p.up[j]);
            let (v, s) = if l == u {
                (l, VarStatus::Fixed)
            } else if l.is_finite() {
                (l, VarStatus::AtLower)
            } else if u.is_finite() {
                (u, VarStatus::AtUpper)
            } else {
                (0.0, VarStatus::Free)
            };
            x[j] = v;
            status[j] = s;
        }
        let max_iter = opts.max_iterations.unwrap_or(20_000 + 50 * total);
        Simplex {
            p,
            ftol: opts.feas_tol,
            otol: opts.opt_tol,
            max_iter,
            x,
            status,
            basis: (p.n..total).collect(),
            factor: BasisFactor::default(),
            iterations: 0,
            scratch: Vec::new(),
        }
    }

    fn nonbasic_status_at(&self, j: usize, value: f64) -> (f64, VarStatus) {
        let (l, u) = (self.p.lo[j], self.p.up[j]);
        if l == u {
            return (l, VarStatus::Fixed);
        }
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (value - l).abs() <= (u - value).abs() {
                    (l, VarStatus::AtLower)
                } else {
                    (u, VarStatus::AtUpper)
                }
            }
            (true, false) => (l, VarStatus::AtLower),
            (false, true) => (u, VarStatus::AtUpper),
            (false, false) => (value, VarStatus::Free),
        }
    }

    fn refactor(&mut self) {
        for _attempt in 0..=self.p.m {
            let p = self.p;
            let basis = &self.basis;
            match BasisFactor::factorize(p.m, |k| p.column(basis[k])) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err((_, singular)) => {
                    log::debug!("basis repair: {} singular columns", singular.positions.len());
                    for (&pos, &row) in singular.positions.iter().zip(&singular.rows) {
                        let out = self.basis[pos];
                        let (v, s) = self.nonbasic_status_at(out, self.x[out]);
                        self.x[out] = v;
                        self.status[out] = s;
                        let logical = p.n + row;
                        self.basis[pos] = logical;
                        self.status[logical] = VarStatus::Basic;
                    }
                }
            }
        }
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let p = self.p;
        let mut rhs = vec![0.0; p.m];
        for j in 0..p.n + p.m {
            if self.status[j] == VarStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            let col = p.column(j);
            for (&i, &a) in col.rows.iter().zip(col.vals) {
                rhs[i] -= a * self.x[j];
            }
        }
        self.factor.ftran(&mut rhs, &mut self.scratch);
        for (k, &v) in self.basis.iter().enumerate() {
            self.x[v] = rhs[k];
        }
    }

    fn infeasibility(&self, v: usize) -> f64 {
        let x = self.x[v];
        if x < self.p.lo[v] - self.ftol {
            -1.0
        } else if x > self.p.up[v] + self.ftol {
            1.0
        } else {
            0.0
        }
    }

    fn run(&mut self) -> SolveStatus {
        self.refactor();
        let mut degenerate_run = 0usize;
        let mut tabu: Vec<usize> = Vec::new();
        let mut needs_refactor = false;
        loop {
            if needs_refactor || self.factor.num_updates() >= REFACTOR_EVERY {
                self.refactor();
                needs_refactor = false;
            }
            if self.iterations >= self.max_iter {
                return SolveStatus::IterationLimit;
            }
            let bland = degenerate_run >= DEGENERATE_RUN_FOR_BLAND;
            match self.iterate(bland, &mut tabu, &mut degenerate_run, &mut needs_refactor) {
                Step::Continue => {}
                Step::Done(s) => return s,
            }
        }
    }

    fn iterate(
        &mut self,
        bland: bool,
        tabu: &mut Vec<usize>,
        degenerate_run: &mut usize,
        needs_refactor: &mut bool,
    ) -> Step {
        let p = self.p;
        let m = p.m;
        let phase_one = self.basis.iter().any(|&v| self.infeasibility(v) != 0.0);

        let mut y: Vec<f64> =
            self.basis.iter().map(|&v| if phase_one { self.infeasibility(v) } else { p.cost[v] }).collect();
        self.factor.btran(&mut y, &mut self.scratch);

        // Pricing.
        let mut entering: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..p.n + p.m {
            let st = self.status[j];
            if matches!(st, VarStatus::Basic | VarStatus::Fixed) {
                continue;
            }
            let c = if phase_one { 0.0 } else { p.cost[j] };
            let d = c - p.dot_column(j, &y);
            let dir = match st {
                VarStatus::AtLower if d < -self.otol => 1.0,
                VarStatus::AtUpper if d > self.otol => -1.0,
                VarStatus::Free if d.abs() > self.otol => -d.signum(),
                _ => continue,
            };
            if tabu.contains(&j) {
                continue;
            }
            if bland {
                entering = Some((j, dir));
                break;
            }
            if d.abs() > best_score {
                best_score = d.abs();
                entering = Some((j, dir));
            }
        }

        let Some((q, dir)) = entering else {
            if self.factor.num_updates() > 0 || !tabu.is_empty() {
                tabu.clear();
                *needs_refactor = true;
                return Step::Continue;
            }
            return Step::Done(if phase_one { SolveStatus::Infeasible } else { SolveStatus::Optimal });
        };

        let mut alpha = vec![0.0; m];
        {
            let col = p.column(q);
            for (&i, &a) in col.rows.iter().zip(col.vals) {
                alpha[i] = a;
            }
        }
        self.factor.ftran(&mut alpha, &mut self.scratch);

        // Ratio test (Harris two-pass, or exact min-ratio under Bland).
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new(); // (pos, exact step, bound)
        let mut theta_max = f64::INFINITY;
        for (k, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let v = self.basis[k];
            let rate = -dir * a;
            let xv = self.x[v];
            let (lo, up) = (p.lo[v], p.up[v]);
            let bound = if rate < 0.0 {
                if xv > up + self.ftol {
                    up
                } else if xv < lo - self.ftol || lo == f64::NEG_INFINITY {
                    continue;
                } else {
                    lo
                }
            } else if xv < lo - self.ftol {
                lo
            } else if xv > up + self.ftol || up == f64::INFINITY {
                continue;
            } else {
                up
            };
            let dist = (xv - bound).abs() * if (rate < 0.0) == (xv >= bound) { 1.0 } else { -1.0 };
            let exact = dist.max(0.0) / rate.abs();
            let relaxed = (dist + self.ftol) / rate.abs();
            theta_max = theta_max.min(relaxed);
            candidates.push((k, exact, bound));
        }

        let mut leave: Option<(usize, f64, f64)> = None;
        if bland {
            let min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let tie = min + 1e-12 * (1.0 + min);
            for &c in &candidates {
                if c.1 <= tie {
                    let better = match leave {
                        None => true,
                        Some(l) => self.basis[c.0] < self.basis[l.0],
                    };
                    if better {
                        leave = Some(c);
                    }
                }
            }
        } else {
            for &c in &candidates {
                if c.1 <= theta_max {
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let (a, b) = (alpha[c.0].abs(), alpha[l.0].abs());
                            a > b || (a == b && self.basis[c.0] < self.basis[l.0])
                        }
                    };
                    if better {
                        leave = Some(c);
                    }
                }
            }
        }

        let flip = p.up[q] - p.lo[q];
        let step = match leave {
            Some((_, t, _)) => t,
            None => f64::INFINITY,
        };
        if flip.is_finite() && flip <= step {
            for (k, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let v = self.basis[k];
                    self.x[v] -= dir * flip * a;
                }
            }
            if dir > 0.0 {
                self.x[q] = p.up[q];
                self.status[q] = VarStatus::AtUpper;
            } else {
                self.x[q] = p.lo[q];
                self.status[q] = VarStatus::AtLower;
            }
            self.iterations += 1;
            *degenerate_run = 0;
            tabu.clear();
            return Step::Continue;
        }

        let Some((pos, t, bound)) = leave else {
            if phase_one {
                tabu.push(q);
                return Step::Continue;
            }
            return Step::Done(SolveStatus::Unbounded);
        };

        for (k, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let v = self.basis[k];
                self.x[v] -= dir * t * a;
            }
        }
        self.x[q] += dir * t;
        let out = self.basis[pos];
        self.x[out] = bound;
        self.status[out] = if p.lo[out] == p.up[out] {
            VarStatus::Fixed
        } else if bound == p.lo[out] {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        };
        self.basis[pos] = q;
        self.status[q] = VarStatus::Basic;
        self.factor.push_update(pos, &alpha);
        if alpha[pos].abs() < 1e-7 {
            *needs_refactor = true;
        }
        self.iterations += 1;
        tabu.clear();
        if t <= DEGENERATE_STEP {
            *degenerate_run += 1;
        } else {
            *degenerate_run = 0;
        }
        Step::Continue
    }

    fn extract(&mut self, model: &LinearModel, p: &Scaled, status: SolveStatus) -> Solution {
        let (n, m) = (p.n, p.m);
        let mut y: Vec<f64> = self.basis.iter().map(|&v| p.cost[v]).collect();
        self.factor.btran(&mut y, &mut self.scratch);
        let mut d = vec![0.0; n + m];
        for j in 0..n + m {
            if self.status[j] != VarStatus::Basic {
                d[j] = p.cost[j] - p.dot_column(j, &y);
            }
        }

        let primal: Vec<f64> = (0..n).map(|j| self.x[j] * p.col_scale[j] + 0.0).collect();
        let duals: Vec<f64> = (0..m).map(|i| y[i] * p.row_scale[i]).collect();
        let reduced_costs: Vec<f64> = (0..n).map(|j| d[j] / p.col_scale[j]).collect();

        let objective = model.evaluate_objective(&primal);
        let mut dual_objective = model.objective_constant();
        for (i, c) in model.constraints().iter().enumerate() {
            dual_objective += c.rhs * duals[i];
        }
        for (j, v) in model.variables().iter().enumerate() {
            let dj = reduced_costs[j];
            if dj > 0.0 && v.lower.is_finite() {
                dual_objective += v.lower * dj;
            } else if dj < 0.0 && v.upper.is_finite() {
                dual_objective += v.upper * dj;
            }
        }

        Solution {
            status,
            primal,
            duals,
            reduced_costs,
            objective,
            dual_objective,
            iterations: self.iterations,
            solve_time: Duration::ZERO,
        }
    }
}
