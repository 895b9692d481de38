//! Dense tableau simplex for small linear programs of the form
//!
//! ```text
//! maximize cᵀx  subject to  Ax ≤ b,  x ≥ 0,  with b ≥ 0
//! ```
//!
//! `b ≥ 0` makes the slack basis feasible, so no phase one is needed. Pivoting
//! follows Bland's rule, which rules out cycling on the degenerate rows these
//! problems are full of.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new(), rhs: Vec::new() }
    }

    /// Adds `row · x ≤ bound`.
    pub fn add_le(&mut self, row: Vec<f64>, bound: f64) -> &mut Self {
        self.constraints.push(row);
        self.rhs.push(bound);
        self
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        let nvars = self.objective.len();
        let m = self.constraints.len();
        for (i, row) in self.constraints.iter().enumerate() {
            if row.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: row.len() });
            }
            if self.rhs[i] < 0.0 || !self.rhs[i].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "constraint {i} has right-hand side {}; the slack basis needs b >= 0",
                    self.rhs[i]
                )));
            }
        }

        let width = nvars + m + 1;
        let rhs_col = nvars + m;
        // rows 0..m are constraints, row m is the objective (reduced costs, negated)
        let mut t = vec![vec![0.0; width]; m + 1];
        for i in 0..m {
            t[i][..nvars].copy_from_slice(&self.constraints[i]);
            t[i][nvars + i] = 1.0;
            t[i][rhs_col] = self.rhs[i];
        }
        for j in 0..nvars {
            t[m][j] = -self.objective[j];
        }
        let mut basis: Vec<usize> = (nvars..nvars + m).collect();

        let max_pivots = 50 * (nvars + m).max(1) + 1000;
        let mut pivots = 0;
        loop {
            let Some(enter) = (0..nvars + m).find(|&j| t[m][j] < -PIVOT_EPS) else {
                break;
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                let coef = t[i][enter];
                if coef > PIVOT_EPS {
                    let ratio = t[i][rhs_col] / coef;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best - PIVOT_EPS
                                || ((ratio - best).abs() <= PIVOT_EPS && basis[i] < basis[l])
                        }
                    };
                    if better {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Err(Error::Unbounded);
            };
            pivot(&mut t, row, enter);
            basis[row] = enter;
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::SolverNonConvergence { iterations: pivots });
            }
        }

        let mut x = vec![0.0; nvars];
        for (i, &b) in basis.iter().enumerate() {
            if b < nvars {
                x[b] = t[i][rhs_col];
            }
        }
        Ok(LpSolution { x, value: t[m][rhs_col], pivots })
    }
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            r[col] = 0.0;
        }
    }
}
