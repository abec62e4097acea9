//! Newton-Raphson power flow in polar coordinates.
//!
//! The Jacobian has a 2x2 block for every node pair joined by a line. On a
//! tree (parallel lines merged) eliminating blocks from the leaves towards the
//! slack produces no fill-in, so each iteration costs O(nodes).

use num_complex::Complex64;

use super::{units, PowerFlowError};
use crate::scenario::GridModel;

pub const TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 50;

type Block = [[f64; 2]; 2];

fn mul(a: &Block, b: &Block) -> Block {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mul_vec(a: &Block, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn inverse(a: &Block) -> Option<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Nodal admittance data of a grid in per unit.
#[derive(Debug, Clone)]
pub struct Network {
    pub slack: usize,
    pub slack_voltage: f64,
    /// Breadth-first order from the slack.
    order: Vec<usize>,
    parent: Vec<usize>,
    /// Off-diagonal admittances, parallel lines summed.
    neighbors: Vec<Vec<(usize, Complex64)>>,
    diag: Vec<Complex64>,
    /// From node, to node, series admittance.
    pub lines: Vec<(usize, usize, Complex64)>,
    /// Series resistance per line in per unit.
    pub line_resistance: Vec<f64>,
}

impl Network {
    pub fn new(grid: &GridModel) -> Result<Self, PowerFlowError> {
        let n = grid.nodes.len();
        let tree = grid.tree();
        if tree.order.len() != n {
            return Err(PowerFlowError::InvalidGrid("grid is not connected".into()));
        }
        let index = |id: &str| grid.node_index(id).expect("validated grid");
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        let mut neighbors: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        let mut lines = Vec::with_capacity(grid.lines.len());
        let mut line_resistance = Vec::with_capacity(grid.lines.len());
        for l in &grid.lines {
            let (a, b) = (index(&l.from_node), index(&l.to_node));
            let z = Complex64::new(units::ohm_to_pu(l.resistance_ohm()), units::ohm_to_pu(l.reactance_ohm()));
            let y = z.inv();
            diag[a] += y;
            diag[b] += y;
            for (u, w) in [(a, b), (b, a)] {
                match neighbors[u].iter_mut().find(|(k, _)| *k == w) {
                    Some((_, v)) => *v -= y,
                    None => neighbors[u].push((w, -y)),
                }
            }
            lines.push((a, b, y));
            line_resistance.push(z.re);
        }
        let parent = tree.parent.iter().map(|p| p.as_ref().map_or(usize::MAX, |(q, _)| *q)).collect();
        Ok(Self {
            slack: grid.slack_index(),
            slack_voltage: grid.transformer.slack_voltage_pu,
            order: tree.order,
            parent,
            neighbors,
            diag,
            lines,
            line_resistance,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Complex power injected at every node for the given voltages.
    pub fn injections(&self, vm: &[f64], va: &[f64]) -> Vec<Complex64> {
        let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        (0..self.len())
            .map(|i| {
                let mut current = self.diag[i] * v[i];
                for &(j, y) in &self.neighbors[i] {
                    current += y * v[j];
                }
                v[i] * current.conj()
            })
            .collect()
    }

    /// Solves for the voltages given per-unit loads (positive = consumption).
    pub fn solve(&self, p_load: &[f64], q_load: &[f64]) -> Result<Solution, PowerFlowError> {
        let n = self.len();
        let mut vm = vec![self.slack_voltage; n];
        let mut va = vec![0.0; n];
        let spec: Vec<Complex64> = p_load.iter().zip(q_load).map(|(p, q)| Complex64::new(-p, -q)).collect();

        let mut worst = (0.0f64, 0usize);
        for iteration in 0..=MAX_ITERATIONS {
            let s = self.injections(&vm, &va);
            worst = (0.0, self.slack);
            let mut rhs = vec![[0.0; 2]; n];
            for i in 0..n {
                if i == self.slack {
                    continue;
                }
                let d = spec[i] - s[i];
                rhs[i] = [d.re, d.im];
                let m = d.re.abs().max(d.im.abs());
                if m > worst.0 {
                    worst = (m, i);
                }
            }
            if worst.0 <= TOLERANCE {
                return Ok(Solution { vm, va, iterations: iteration, mismatch: worst.0 });
            }
            if iteration == MAX_ITERATIONS {
                break;
            }
            let dx = self.newton_step(&vm, &va, &s, rhs)?;
            for i in 0..n {
                if i != self.slack {
                    va[i] += dx[i][0];
                    vm[i] += dx[i][1];
                }
            }
            if vm.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(PowerFlowError::NonConvergence {
                    step: 0,
                    iterations: iteration + 1,
                    mismatch: f64::INFINITY,
                });
            }
        }
        Err(PowerFlowError::NonConvergence { step: 0, iterations: MAX_ITERATIONS, mismatch: worst.0 })
    }

    /// Off-diagonal Jacobian block `d(P_i, Q_i) / d(theta_j, V_j)`.
    fn off_block(&self, i: usize, j: usize, y: Complex64, vm: &[f64], va: &[f64]) -> Block {
        let (g, b) = (y.re, y.im);
        let t = va[i] - va[j];
        let (sin, cos) = t.sin_cos();
        let a = g * sin - b * cos;
        let c = g * cos + b * sin;
        [[vm[i] * vm[j] * a, vm[i] * c], [-vm[i] * vm[j] * c, vm[i] * a]]
    }

    fn newton_step(
        &self,
        vm: &[f64],
        va: &[f64],
        s: &[Complex64],
        mut rhs: Vec<[f64; 2]>,
    ) -> Result<Vec<[f64; 2]>, PowerFlowError> {
        let n = self.len();
        let mut diag: Vec<Block> = (0..n)
            .map(|i| {
                let (g, b) = (self.diag[i].re, self.diag[i].im);
                let (p, q) = (s[i].re, s[i].im);
                let v = vm[i];
                [[-q - b * v * v, p / v + g * v], [p - g * v * v, q / v - b * v]]
            })
            .collect();
        let link = |i: usize, j: usize| -> Complex64 {
            self.neighbors[i].iter().find(|(k, _)| *k == j).map(|(_, y)| *y).expect("tree edge")
        };
        // Blocks coupling each node with its parent: (row i, col parent) and (row parent, col i).
        let mut up = vec![[[0.0; 2]; 2]; n];
        let mut down = vec![[[0.0; 2]; 2]; n];
        for &i in &self.order {
            let p = self.parent[i];
            if i == self.slack || p == self.slack || p == usize::MAX {
                continue;
            }
            up[i] = self.off_block(i, p, link(i, p), vm, va);
            down[i] = self.off_block(p, i, link(p, i), vm, va);
        }

        let mut inv = vec![[[0.0; 2]; 2]; n];
        for &i in self.order.iter().rev() {
            if i == self.slack {
                continue;
            }
            inv[i] = inverse(&diag[i]).ok_or(PowerFlowError::Singular { step: 0, node: i })?;
            let p = self.parent[i];
            if p == self.slack {
                continue;
            }
            let t = mul(&down[i], &inv[i]);
            let m = mul(&t, &up[i]);
            let r = mul_vec(&t, rhs[i]);
            for a in 0..2 {
                rhs[p][a] -= r[a];
                for b in 0..2 {
                    diag[p][a][b] -= m[a][b];
                }
            }
        }
        let mut x = vec![[0.0; 2]; n];
        for &i in &self.order {
            if i == self.slack {
                continue;
            }
            let p = self.parent[i];
            let mut r = rhs[i];
            if p != self.slack {
                let c = mul_vec(&up[i], x[p]);
                r = [r[0] - c[0], r[1] - c[1]];
            }
            x[i] = mul_vec(&inv[i], r);
        }
        Ok(x)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub iterations: usize,
    pub mismatch: f64,
}
