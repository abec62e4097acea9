//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every variable carries finite lower and (possibly infinite) upper bounds.
//! Variables are shifted to `[0, u - l]`, fixed variables are eliminated up
//! front, and the initial basis is built from slacks and singleton columns so
//! that artificial variables are only introduced where nothing else fits.
//! Phase one drives the artificials to zero; in phase two they are pinned to
//! `[0, 0]` and leave the basis through degenerate pivots.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c·x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("variable {0} has lower bound above upper bound")]
    InvalidBounds(usize),
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        debug_assert!(lower.is_finite(), "lower bounds must be finite");
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { terms, relation, rhs });
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve_with_bounds(self, &self.lower, &self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`, canonical with respect to the basis.
    a: Vec<f64>,
    /// Current values of the basic variables, one per row.
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

/// Solves `lp` with the given bounds in place of the ones stored in it.
pub fn solve_with_bounds(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    for j in 0..n {
        if lower[j] > upper[j] + 1e-12 {
            return Err(LpError::InvalidBounds(j));
        }
    }

    // Free (non-fixed) structural columns get compact indices.
    let mut compact = vec![usize::MAX; n];
    let mut free_vars = Vec::new();
    for j in 0..n {
        if upper[j] - lower[j] > 1e-12 {
            compact[j] = free_vars.len();
            free_vars.push(j);
        }
    }
    let k = free_vars.len();

    struct Row {
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let mut rhs = c.rhs;
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(c.terms.len());
        for &(j, a) in &c.terms {
            if a == 0.0 {
                continue;
            }
            rhs -= a * lower[j];
            if compact[j] != usize::MAX {
                terms.push((compact[j], a));
            }
        }
        if terms.is_empty() {
            let tol = 1e-9 * (1.0 + c.rhs.abs());
            let violated = match c.relation {
                Relation::Le => rhs < -tol,
                Relation::Ge => rhs > tol,
                Relation::Eq => rhs.abs() > tol,
            };
            if violated {
                return Err(LpError::Infeasible { residual: rhs.abs() });
            }
            continue;
        }
        rows.push(Row { terms, relation: c.relation, rhs });
    }

    let m = rows.len();
    if m == 0 {
        // Pure bound problem: every column goes to its cheaper bound.
        let mut x = lower.to_vec();
        for &j in &free_vars {
            let c = lp.objective[j];
            if c < 0.0 {
                if upper[j].is_infinite() {
                    return Err(LpError::Unbounded);
                }
                x[j] = upper[j];
            }
        }
        let objective = lp.evaluate(&x);
        return Ok(LpSolution { x, objective, iterations: 0 });
    }

    // Column occurrence counts for the singleton crash.
    let mut occurrences = vec![0usize; k];
    for r in &rows {
        for &(j, _) in &r.terms {
            occurrences[j] += 1;
        }
    }

    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let mut col_upper: Vec<f64> = free_vars.iter().map(|&j| upper[j] - lower[j]).collect();
    col_upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack));

    let mut basis = vec![usize::MAX; m];
    let mut row_scale = vec![1.0; m];
    let mut slack_of_row = vec![usize::MAX; m];
    let mut next_slack = k;
    let mut used_col = vec![false; k];
    let mut art_rows = Vec::new();

    for (i, r) in rows.iter().enumerate() {
        let sign = if r.rhs < 0.0 { -1.0 } else { 1.0 };
        let rhs = r.rhs * sign;
        if r.relation != Relation::Eq {
            slack_of_row[i] = next_slack;
            next_slack += 1;
            let slack_coef = if r.relation == Relation::Le { 1.0 } else { -1.0 } * sign;
            if slack_coef > 0.0 {
                basis[i] = slack_of_row[i];
                row_scale[i] = sign;
                continue;
            }
        }
        // Singleton structural column with a feasible value.
        let mut chosen = None;
        for &(j, a) in &r.terms {
            let a = a * sign;
            if occurrences[j] == 1 && !used_col[j] && a > PIVOT_TOL {
                let value = rhs / a;
                if value <= col_upper[j] {
                    chosen = Some((j, a));
                    break;
                }
            }
        }
        if let Some((j, a)) = chosen {
            used_col[j] = true;
            basis[i] = j;
            row_scale[i] = sign / a;
        } else {
            row_scale[i] = sign;
            art_rows.push(i);
        }
    }

    let n_art = art_rows.len();
    let cols = k + n_slack + n_art;
    col_upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));
    let mut a = vec![0.0; m * cols];
    let mut beta = vec![0.0; m];
    for (i, r) in rows.iter().enumerate() {
        let s = row_scale[i];
        let row = &mut a[i * cols..(i + 1) * cols];
        for &(j, v) in &r.terms {
            row[j] += v * s;
        }
        if slack_of_row[i] != usize::MAX {
            let coef = if r.relation == Relation::Le { 1.0 } else { -1.0 };
            row[slack_of_row[i]] = coef * s;
        }
        beta[i] = r.rhs * s;
    }
    for (t, &i) in art_rows.iter().enumerate() {
        let col = k + n_slack + t;
        a[i * cols + col] = 1.0;
        basis[i] = col;
    }

    let mut status = vec![Status::AtLower; cols];
    for &b in &basis {
        status[b] = Status::Basic;
    }

    let mut tab = Tableau {
        rows: m,
        cols,
        a,
        beta,
        basis,
        status,
        upper: col_upper,
        iterations: 0,
        max_iterations: 50 * (m + cols) + 1000,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(k + n_slack) {
            *c = 1.0;
        }
        tab.optimize(&phase1)?;
        let residual: f64 = (0..m).filter(|&i| tab.basis[i] >= k + n_slack).map(|i| tab.beta[i]).sum();
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if residual > 1e-9 * scale {
            return Err(LpError::Infeasible { residual });
        }
        for c in k + n_slack..cols {
            tab.upper[c] = 0.0;
        }
    }

    let mut cost = vec![0.0; cols];
    for (c, &j) in free_vars.iter().enumerate() {
        cost[c] = lp.objective[j];
    }
    tab.optimize(&cost)?;

    let mut x = lower.to_vec();
    for (c, &j) in free_vars.iter().enumerate() {
        let v = match tab.status[c] {
            Status::AtLower => 0.0,
            Status::AtUpper => tab.upper[c],
            Status::Basic => 0.0,
        };
        x[j] = lower[j] + v;
    }
    for i in 0..m {
        let c = tab.basis[i];
        if c < k {
            let j = free_vars[c];
            let v = tab.beta[i].clamp(0.0, tab.upper[c]);
            x[j] = lower[j] + v;
        }
    }
    let objective = lp.evaluate(&x);
    Ok(LpSolution { x, objective, iterations: tab.iterations })
}

impl Tableau {
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (dj, aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.rows {
            d[self.basis[i]] = 0.0;
        }
        d
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<(), LpError> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate = 0usize;
        let mut column = vec![0.0; self.rows];
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((q, sigma)) = self.entering(&d, bland) else {
                return Ok(());
            };
            self.iterations += 1;

            for (i, c) in column.iter_mut().enumerate() {
                *c = self.a[i * self.cols + q];
            }

            // Ratio test.
            let mut step = self.upper[q];
            let mut leave: Option<(usize, Status)> = None;
            let mut best_pivot = 0.0;
            for (i, &alpha) in column.iter().enumerate() {
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = sigma * alpha;
                let b = self.basis[i];
                let (limit, to) = if delta > 0.0 {
                    (self.beta[i].max(0.0) / delta, Status::AtLower)
                } else {
                    let ub = self.upper[b];
                    if ub.is_infinite() {
                        continue;
                    }
                    ((ub - self.beta[i]).max(0.0) / -delta, Status::AtUpper)
                };
                let better = match leave {
                    None => limit < step,
                    Some((r, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > best_pivot
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to));
                    best_pivot = alpha.abs();
                }
            }

            if step.is_infinite() {
                return Err(LpError::Unbounded);
            }
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for (i, &alpha) in column.iter().enumerate() {
                if alpha != 0.0 {
                    self.beta[i] -= sigma * alpha * step;
                }
            }

            match leave {
                None => {
                    // Bound flip, basis unchanged.
                    self.status[q] = if sigma > 0.0 { Status::AtUpper } else { Status::AtLower };
                }
                Some((r, to)) => {
                    let entering_value = if sigma > 0.0 { step } else { self.upper[q] - step };
                    let leaving = self.basis[r];
                    self.status[leaving] = to;
                    self.status[q] = Status::Basic;
                    self.basis[r] = q;
                    self.beta[r] = entering_value;
                    self.pivot(r, q, &column, &mut d);
                }
            }
        }
    }

    fn entering(&self, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for (j, &dj) in d.iter().enumerate() {
            let sigma = match self.status[j] {
                Status::Basic => continue,
                Status::AtLower if dj < -OPT_TOL && self.upper[j] > 0.0 => 1.0,
                Status::AtUpper if dj > OPT_TOL => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, sigma));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, sigma));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize, column: &[f64], d: &mut [f64]) {
        let cols = self.cols;
        let inv = 1.0 / column[r];
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let eliminate = |row: &mut [f64], factor: f64| {
            for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                if *p != 0.0 {
                    *v -= factor * p;
                }
            }
        };
        for (i, row) in before.chunks_exact_mut(cols).enumerate() {
            let f = column[i];
            if f != 0.0 {
                eliminate(row, f);
                row[q] = 0.0;
            }
        }
        for (off, row) in after.chunks_exact_mut(cols).enumerate() {
            let f = column[r + 1 + off];
            if f != 0.0 {
                eliminate(row, f);
                row[q] = 0.0;
            }
        }
        let dq = d[q];
        if dq != 0.0 {
            for (dj, p) in d.iter_mut().zip(pivot_row.iter()) {
                if *p != 0.0 {
                    *dj -= dq * p;
                }
            }
            d[q] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-3.0, 0.0, f64::INFINITY);
        let y = lp.add_var(-5.0, 0.0, f64::INFINITY);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(y, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, -36.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[x], 2.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[y], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + 2y, x + y = 10, x - y >= 2, x <= 7
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 7.0);
        let y = lp.add_var(2.0, 0.0, f64::INFINITY);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 10.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Ge, 2.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.x[x], 7.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[y], 3.0, epsilon = 1e-9);
        assert_relative_eq!(sol.objective, 13.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible { .. })));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(0.0, 0.0, f64::INFINITY);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn fixed_and_shifted_bounds() {
        // min -x - y with x in [2, 3], y fixed at 1.5, x + y <= 4
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 2.0, 3.0);
        let y = lp.add_var(-1.0, 1.5, 1.5);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.x[x], 2.5, epsilon = 1e-12);
        assert_relative_eq!(sol.x[y], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_rhs_rows() {
        // min x, -x <= -3  ->  x = 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, f64::INFINITY);
        lp.add_constraint(vec![(x, -1.0)], Relation::Le, -3.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.x[x], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn upper_bound_flip_without_pivot() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, 2.0);
        let y = lp.add_var(-1.0, 0.0, 5.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 100.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, -7.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example (cycles under pure Dantzig with naive ties).
        let mut lp = LinearProgram::new();
        let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0].iter().map(|&c| lp.add_var(c, 0.0, f64::INFINITY)).collect();
        lp.add_constraint(vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(x[2], 1.0)], Relation::Le, 1.0);
        let sol = lp.solve().unwrap();
        assert_relative_eq!(sol.objective, -0.05, epsilon = 1e-9);
    }
}
