//! Dense two-phase primal simplex for small linear programs.
//!
//! All variables are non-negative. Rows are scaled to unit max-norm. The
//! entering column has the largest reduced cost, with a switch to Bland's
//! rule after a run of degenerate pivots so cycling cannot occur. The tableau
//! is periodically rebuilt from the original rows, and always before
//! optimality is declared. Every choice is index-ordered, so the returned
//! basic solution is a deterministic function of the input.

use thiserror::Error;

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-10;
/// Largest constraint violation a returned point may have.
pub const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex failed: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
    /// Human-readable row name used in diagnostics.
    pub label: String,
}

impl Constraint {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.value(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `maximize objective·x` subject to `constraints`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Largest constraint violation of `x`.
    pub max_residual: f64,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64, label: impl Into<String>) {
        assert_eq!(coeffs.len(), self.num_vars(), "row width must match variable count");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
            label: label.into(),
        });
    }

    pub fn count(&self, relation: Relation) -> usize {
        self.constraints.iter().filter(|c| c.relation == relation).count()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(x)).fold(bounds, f64::max)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve_lp(self)
    }
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
/// Pivots between rebuilds of the tableau from the original rows.
const REFRESH_EVERY: usize = 40;

struct Tableau {
    /// `rows[i]` holds the coefficients of all columns followed by the rhs.
    rows: Vec<Vec<f64>>,
    /// Row-scaled original data, kept so the tableau can be rebuilt.
    original: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rows[row][col] = 1.0;
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                r[col] = 0.0;
            }
        }
        self.clean();
        self.basis[row] = col;
    }

    /// Flushes round-off: tiny entries become exact zeros and slightly
    /// negative right-hand sides are clamped.
    fn clean(&mut self) {
        let w = self.width;
        for r in self.rows.iter_mut() {
            for v in r[..w].iter_mut() {
                if v.abs() < 1e-13 {
                    *v = 0.0;
                }
            }
            if r[w] < 0.0 && r[w] > -FEAS_TOL {
                r[w] = 0.0;
            }
        }
    }

    /// Recomputes `B⁻¹ [A | b]` from the original rows by Gauss-Jordan
    /// elimination with partial pivoting. Leaves the tableau untouched if the
    /// basis matrix is numerically singular.
    fn refresh(&mut self) -> bool {
        let m = self.rows.len();
        let mut t = self.original.clone();
        for (k, &col) in self.basis.iter().enumerate() {
            let Some(p) = (k..m).max_by(|&a, &b| t[a][col].abs().total_cmp(&t[b][col].abs())) else {
                return false;
            };
            if t[p][col].abs() < 1e-12 {
                return false;
            }
            t.swap(k, p);
            let pv = t[k][col];
            for v in t[k].iter_mut() {
                *v /= pv;
            }
            let pivot_row = t[k].clone();
            for (i, r) in t.iter_mut().enumerate() {
                if i != k && r[col] != 0.0 {
                    let f = r[col];
                    for (v, pv) in r.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    r[col] = 0.0;
                }
            }
        }
        // Row k now expresses basis[k]; the original row order was permuted
        // alongside, so the data has to follow.
        self.rows = t;
        self.clean();
        true
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let z: f64 = self
            .basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rows[i][j])
            .sum();
        cost[j] - z
    }

    /// Maximizes `cost·x` over the columns flagged in `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], pivots: &mut usize) -> Result<(), LpError> {
        let mut degenerate = 0;
        let mut since_refresh = 0;
        loop {
            let mut in_basis = vec![false; self.width];
            for &b in &self.basis {
                in_basis[b] = true;
            }
            let candidates = (0..self.width)
                .filter(|&j| allowed[j] && !in_basis[j])
                .map(|j| (j, self.reduced_cost(cost, j)))
                .filter(|&(_, d)| d > PIVOT_TOL);
            let entering = if degenerate >= DEGENERATE_STREAK {
                candidates.map(|(j, _)| j).next()
            } else {
                candidates
                    .fold(None, |best: Option<(usize, f64)>, (j, d)| match best {
                        Some((_, bd)) if bd >= d => best,
                        _ => Some((j, d)),
                    })
                    .map(|(j, _)| j)
            };
            let Some(col) = entering else {
                if since_refresh > 0 && self.refresh() {
                    since_refresh = 0;
                    continue;
                }
                return Ok(());
            };

            // Ratio test; near-ties go to the larger pivot element, then to the
            // lower basic index.
            let mut leaving: Option<(usize, f64, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio, a)),
                    Some((k, best, ka)) => {
                        let better = ratio < best - 1e-12
                            || (ratio <= best + 1e-12
                                && (a > ka * (1.0 + 1e-9)
                                    || (a >= ka * (1.0 - 1e-9) && self.basis[i] < self.basis[k])));
                        if better {
                            Some((i, ratio, a))
                        } else {
                            Some((k, best, ka))
                        }
                    }
                };
            }
            let Some((row, ratio, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(row, col);
            *pivots += 1;
            since_refresh += 1;
            if since_refresh >= REFRESH_EVERY && self.refresh() {
                since_refresh = 0;
            }
            if *pivots > MAX_PIVOTS {
                return Err(LpError::Numerical(format!("no convergence after {MAX_PIVOTS} pivots")));
            }
        }
    }
}

/// Solves `lp` to an optimal basic solution.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let m = lp.constraints.len();
    if lp.objective.iter().any(|c| !c.is_finite())
        || lp
            .constraints
            .iter()
            .any(|c| !c.rhs.is_finite() || c.coeffs.len() != n || c.coeffs.iter().any(|v| !v.is_finite()))
    {
        return Err(LpError::Numerical("malformed linear program".into()));
    }

    // Columns: original variables, one slack per inequality, one artificial per row.
    let num_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let art0 = n + num_slack;
    let width = art0 + m;
    let mut rows = Vec::with_capacity(m);
    let mut slack = n;
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        let scale = c.coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        for (dst, v) in row[..n].iter_mut().zip(&c.coeffs) {
            *dst = v / scale;
        }
        match c.relation {
            Relation::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[width] = c.rhs / scale;
        if c.rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[art0 + i] = 1.0;
        rows.push(row);
    }
    let mut tab = Tableau {
        original: rows.clone(),
        rows,
        basis: (art0..width).collect(),
        width,
    };
    let mut pivots = 0;

    // Phase one: drive the artificials to zero.
    let mut phase1 = vec![0.0; width];
    for c in &mut phase1[art0..] {
        *c = -1.0;
    }
    tab.optimize(&phase1, &vec![true; width], &mut pivots)?;
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= art0).map(|i| tab.rhs(i).abs()).sum();
    if infeasibility > FEAS_TOL {
        return Err(LpError::Infeasible(infeasibility));
    }

    // Pivot remaining artificials out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut original_ids: Vec<usize> = (0..m).collect();
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= art0 {
            let replacement = (0..art0)
                .filter(|&j| !tab.basis.contains(&j))
                .map(|j| (j, tab.rows[i][j].abs()))
                .filter(|&(_, a)| a > 1e-9)
                .fold(None, |best: Option<(usize, f64)>, (j, a)| match best {
                    Some((_, ba)) if ba >= a => best,
                    _ => Some((j, a)),
                });
            match replacement {
                Some((j, _)) => tab.pivot(i, j),
                None => {
                    // The artificial columns record which original rows this
                    // one combines; drop the one that carries the most weight.
                    let p = (0..tab.original.len())
                        .max_by(|&a, &b| {
                            let wa = tab.rows[i][art0 + original_ids[a]].abs();
                            let wb = tab.rows[i][art0 + original_ids[b]].abs();
                            wa.total_cmp(&wb).then(b.cmp(&a))
                        })
                        .expect("nonempty tableau");
                    tab.original.remove(p);
                    original_ids.remove(p);
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    tab.refresh();

    // Phase two on the original objective.
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..width).map(|j| j < art0).collect();
    tab.optimize(&cost, &allowed, &mut pivots)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    let max_residual = lp.max_violation(&x);
    if max_residual > FEAS_TOL {
        return Err(LpError::Numerical(format!(
            "solution violates constraints by {max_residual:e}"
        )));
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x, max_residual })
}
