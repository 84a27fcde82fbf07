//! Dense two-phase simplex for small standard-form linear programs
//!
//! ```text
//! minimize c.x  subject to  A x = b,  x >= 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest eligible index enters, ties in the
//! ratio test go to the lowest basic index), so results are deterministic
//! and the method cannot cycle.

use serde::Serialize;

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLp {
    /// Constraint matrix, one row per equality.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LpDiagnostics {
    pub rows: usize,
    pub cols: usize,
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub diagnostics: LpDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `m` rows of `[A | rhs]`.
    rows: Vec<Vec<f64>>,
    /// Reduced costs over all columns plus `-objective` in the last slot.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            self.cost.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
        }
        self.basis[r] = col;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let rhs = self.width;
        self.cost = vec![0.0; rhs + 1];
        self.cost[..costs.len()].copy_from_slice(costs);
        for (r, &bv) in self.basis.iter().enumerate() {
            let f = self.cost[bv];
            if f != 0.0 {
                let row = &self.rows[r];
                self.cost.iter_mut().zip(row).for_each(|(x, y)| *x -= f * y);
            }
        }
    }

    /// Runs Bland pivots over columns `< allowed`. Returns the pivot count.
    fn optimize(&mut self, allowed: usize) -> Result<usize, LpFailure> {
        let rhs = self.width;
        let mut pivots = 0;
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -PIVOT_EPS) else {
                return Ok(pivots);
            };
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[col] > PIVOT_EPS {
                    let ratio = row[rhs] / row[col];
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - PIVOT_EPS
                                || ((ratio - bratio).abs() <= PIVOT_EPS
                                    && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let (r, _) = best.ok_or(LpFailure::Unbounded)?;
            self.pivot(r, col);
            pivots += 1;
        }
    }
}

pub fn solve(lp: &StandardFormLp) -> Result<LpSolution, LpFailure> {
    let m = lp.a.len();
    let n = lp.c.len();
    debug_assert_eq!(lp.b.len(), m);
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &bi)) in lp.a.iter().zip(&lp.b).enumerate() {
        debug_assert_eq!(row.len(), n);
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; width + 1];
        t[..n].iter_mut().zip(row).for_each(|(x, a)| *x = sign * a);
        t[n + i] = 1.0;
        t[width] = sign * bi;
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        width,
    };

    let mut phase1 = vec![0.0; width];
    phase1[n..].iter_mut().for_each(|x| *x = 1.0);
    tab.set_costs(&phase1);
    // phase 1 cannot be unbounded: the artificial objective is bounded below by 0
    let phase1_pivots = tab.optimize(width).unwrap_or(0);
    if -tab.cost[width] > FEASIBILITY_EPS {
        return Err(LpFailure::Infeasible);
    }

    // drive artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_EPS) {
                Some(col) => {
                    tab.pivot(r, col);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    tab.set_costs(&lp.c);
    let phase2_pivots = tab.optimize(n)?;

    let mut x = vec![0.0; n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        x[bv] = row[width];
    }
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        x,
        objective,
        diagnostics: LpDiagnostics {
            rows: m,
            cols: n,
            phase1_pivots,
            phase2_pivots,
        },
    })
}
