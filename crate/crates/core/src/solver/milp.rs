//! Depth-first branch-and-bound over binary variables.

use super::simplex::{solve_with_bounds, LinearProgram, LpError};
use thiserror::Error;

const INTEGRALITY_TOL: f64 = 1e-6;

/// A binary decision inside a [`MilpProblem`].
///
/// When the binary is fixed to zero every dependent column is pinned to zero
/// as well, which lets the LP presolve drop whole technology blocks.
#[derive(Debug, Clone)]
pub struct Binary {
    pub var: usize,
    pub dependents: Vec<usize>,
    /// Higher priority binaries are branched on first.
    pub priority: i32,
}

#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<Binary>,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MilpError {
    #[error("no integer-feasible assignment exists")]
    Infeasible,
    #[error("relaxation is unbounded")]
    Unbounded,
    #[error("branch-and-bound node limit {0} reached")]
    NodeLimit(usize),
    #[error(transparent)]
    Lp(LpError),
}

#[derive(Debug, Clone, Copy)]
pub struct BranchOptions {
    pub max_nodes: usize,
    /// Nodes whose bound is within this relative gap of the incumbent are pruned.
    pub relative_gap: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { max_nodes: 200_000, relative_gap: 1e-11 }
    }
}

impl MilpProblem {
    pub fn new(lp: LinearProgram) -> Self {
        Self { lp, binaries: Vec::new() }
    }

    /// Declares `var` binary; its bounds are forced to `[0, 1]`.
    pub fn add_binary(&mut self, var: usize, dependents: Vec<usize>, priority: i32) {
        self.lp.lower[var] = self.lp.lower[var].max(0.0);
        self.lp.upper[var] = self.lp.upper[var].min(1.0);
        self.binaries.push(Binary { var, dependents, priority });
    }

    /// Bounds after applying a partial assignment of the binaries.
    pub fn bounds_for(&self, fixing: &[Option<bool>]) -> (Vec<f64>, Vec<f64>) {
        let mut lower = self.lp.lower.clone();
        let mut upper = self.lp.upper.clone();
        for (b, f) in self.binaries.iter().zip(fixing) {
            match f {
                Some(true) => {
                    lower[b.var] = 1.0;
                    upper[b.var] = 1.0;
                }
                Some(false) => {
                    lower[b.var] = 0.0;
                    upper[b.var] = 0.0;
                    for &d in &b.dependents {
                        lower[d] = 0.0;
                        upper[d] = 0.0;
                    }
                }
                None => {}
            }
        }
        (lower, upper)
    }

    /// Solves the continuous problem with every binary fixed.
    pub fn solve_fixed(&self, assignment: &[bool]) -> Result<MilpSolution, MilpError> {
        let fixing: Vec<Option<bool>> = assignment.iter().map(|&b| Some(b)).collect();
        let (lower, upper) = self.bounds_for(&fixing);
        match solve_with_bounds(&self.lp, &lower, &upper) {
            Ok(sol) => Ok(MilpSolution { x: sol.x, objective: sol.objective, nodes: 1 }),
            Err(LpError::Infeasible { .. }) | Err(LpError::InvalidBounds(_)) => Err(MilpError::Infeasible),
            Err(LpError::Unbounded) => Err(MilpError::Unbounded),
            Err(e) => Err(MilpError::Lp(e)),
        }
    }

    pub fn solve(&self) -> Result<MilpSolution, MilpError> {
        self.solve_with(BranchOptions::default())
    }

    pub fn solve_with(&self, options: BranchOptions) -> Result<MilpSolution, MilpError> {
        let mut order: Vec<usize> = (0..self.binaries.len()).collect();
        order.sort_by_key(|&i| (-self.binaries[i].priority, i));

        let mut incumbent: Option<(Vec<bool>, MilpSolution)> = None;
        let mut stack: Vec<Vec<Option<bool>>> = vec![vec![None; self.binaries.len()]];
        let mut nodes = 0usize;

        while let Some(fixing) = stack.pop() {
            nodes += 1;
            if nodes > options.max_nodes {
                return Err(MilpError::NodeLimit(options.max_nodes));
            }
            let (lower, upper) = self.bounds_for(&fixing);
            let relaxed = match solve_with_bounds(&self.lp, &lower, &upper) {
                Ok(sol) => sol,
                Err(LpError::Infeasible { .. }) | Err(LpError::InvalidBounds(_)) => continue,
                Err(LpError::Unbounded) => return Err(MilpError::Unbounded),
                Err(e) => return Err(MilpError::Lp(e)),
            };
            if let Some((_, best)) = &incumbent {
                let gap = options.relative_gap * best.objective.abs().max(1.0);
                if relaxed.objective >= best.objective - gap {
                    continue;
                }
            }

            let fractional = order.iter().copied().find(|&i| {
                let v = relaxed.x[self.binaries[i].var];
                (v - v.round()).abs() > INTEGRALITY_TOL
            });

            match fractional {
                None => {
                    let assignment: Vec<bool> = self.binaries.iter().map(|b| relaxed.x[b.var] > 0.5).collect();
                    // Re-solve with the rounded assignment for clean values.
                    let exact = match self.solve_fixed(&assignment) {
                        Ok(s) => s,
                        Err(MilpError::Infeasible) => continue,
                        Err(e) => return Err(e),
                    };
                    let improves = incumbent.as_ref().is_none_or(|(_, best)| exact.objective < best.objective);
                    if improves {
                        incumbent = Some((assignment, exact));
                    }
                }
                Some(i) => {
                    let v = relaxed.x[self.binaries[i].var];
                    let mut down = fixing.clone();
                    down[i] = Some(false);
                    let mut up = fixing;
                    up[i] = Some(true);
                    // The branch nearer the relaxed value is explored first.
                    if v >= 0.5 {
                        stack.push(down);
                        stack.push(up);
                    } else {
                        stack.push(up);
                        stack.push(down);
                    }
                }
            }
        }

        match incumbent {
            Some((_, mut sol)) => {
                sol.nodes = nodes;
                Ok(sol)
            }
            None => Err(MilpError::Infeasible),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::simplex::Relation;
    use approx::assert_relative_eq;

    #[test]
    fn knapsack_matches_enumeration() {
        let values = [10.0, 13.0, 7.0, 8.0, 4.0];
        let weights = [5.0, 6.0, 3.0, 4.0, 2.0];
        let cap = 10.0;
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = values.iter().map(|v| lp.add_var(-v, 0.0, 1.0)).collect();
        lp.add_constraint(vars.iter().zip(weights).map(|(&j, w)| (j, w)).collect(), Relation::Le, cap);
        let mut milp = MilpProblem::new(lp);
        for &v in &vars {
            milp.add_binary(v, vec![], 0);
        }
        let sol = milp.solve().unwrap();

        let mut best = 0.0f64;
        for mask in 0u32..32 {
            let (mut w, mut val) = (0.0, 0.0);
            for i in 0..5 {
                if mask & (1 << i) != 0 {
                    w += weights[i];
                    val += values[i];
                }
            }
            if w <= cap {
                best = best.max(val);
            }
        }
        assert_relative_eq!(sol.objective, -best, epsilon = 1e-9);
    }

    #[test]
    fn fixed_charge_with_dependents() {
        // Two plants, demand 5: plant a fixed 10 + 1/unit (cap 6), plant b fixed 2 + 3/unit (cap 6).
        let mut lp = LinearProgram::new();
        let ya = lp.add_var(10.0, 0.0, 1.0);
        let yb = lp.add_var(2.0, 0.0, 1.0);
        let xa = lp.add_var(1.0, 0.0, f64::INFINITY);
        let xb = lp.add_var(3.0, 0.0, f64::INFINITY);
        lp.add_constraint(vec![(xa, 1.0), (xb, 1.0)], Relation::Ge, 5.0);
        lp.add_constraint(vec![(xa, 1.0), (ya, -6.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(xb, 1.0), (yb, -6.0)], Relation::Le, 0.0);
        let mut milp = MilpProblem::new(lp);
        milp.add_binary(ya, vec![xa], 0);
        milp.add_binary(yb, vec![xb], 0);
        let sol = milp.solve().unwrap();
        // a alone: 15, b alone: 17, both: worse
        assert_relative_eq!(sol.objective, 15.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[ya], 1.0);
        assert_relative_eq!(sol.x[yb], 0.0);
    }

    #[test]
    fn infeasible_integer_problem() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var(0.0, 0.0, 1.0);
        let b = lp.add_var(0.0, 0.0, 1.0);
        // a + b = 1 and a - b = 0 has only a fractional solution.
        lp.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(a, 1.0), (b, -1.0)], Relation::Eq, 0.0);
        let mut milp = MilpProblem::new(lp);
        milp.add_binary(a, vec![], 0);
        milp.add_binary(b, vec![], 0);
        assert_eq!(milp.solve().unwrap_err(), MilpError::Infeasible);
    }
}
