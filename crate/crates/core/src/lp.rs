//! Dense two-phase simplex for small linear programs.
//!
//! Problems have the form `min c^T x` subject to `G x >= h` and `F x = f`
//! with free variables. Free variables are split into non-negative parts,
//! inequality rows get a surplus column, and every row gets an artificial
//! column that doubles as the `B^{-1}` record for reading off duals. Pivoting
//! follows Bland's rule, so the method terminates on degenerate problems.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_square, Matrix};

/// Reduced costs and phase-one objective below this count as zero.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Entries must exceed this to be eligible pivots in the ratio test.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// A pivot smaller than this is a numerical breakdown.
pub const BREAKDOWN_PIVOT: f64 = 1e-12;
/// Post-hoc constraint check on reported optima.
pub const CHECK_TOL: f64 = 1e-7;

/// Pivot candidates must reach this fraction of their column's largest entry.
pub const PIVOT_RELATIVE: f64 = 1e-7;

const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    ge_rows: Vec<Vec<f64>>,
    ge_rhs: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
}

impl LinearProgram {
    /// Minimize `objective . x` over free `x`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            ge_rows: Vec::new(),
            ge_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Adds `row . x >= rhs`.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> Result<&mut Self> {
        self.check_row(&row, rhs)?;
        self.ge_rows.push(row);
        self.ge_rhs.push(rhs);
        Ok(self)
    }

    /// Adds `row . x <= rhs`, stored as `-row . x >= -rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> Result<&mut Self> {
        self.add_ge(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    /// Adds `row . x = rhs`.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> Result<&mut Self> {
        self.check_row(&row, rhs)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(self)
    }

    /// Adds every row of `g x >= h`.
    pub fn ge_block(&mut self, g: &Matrix, h: &[f64]) -> Result<&mut Self> {
        if g.rows() != h.len() {
            return Err(Error::DimensionMismatch {
                what: "inequality right-hand side",
                expected: g.rows(),
                found: h.len(),
            });
        }
        for (r, &b) in h.iter().enumerate() {
            self.add_ge(g.row(r).to_vec(), b)?;
        }
        Ok(self)
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.objective.len() {
            return Err(Error::DimensionMismatch {
                what: "constraint row length",
                expected: self.objective.len(),
                found: row.len(),
            });
        }
        if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
            return Err(Error::BadParameters("non-finite LP coefficient".into()));
        }
        Ok(())
    }

    pub fn ge_constraints(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.ge_rows.iter().map(Vec::as_slice).zip(self.ge_rhs.iter().copied())
    }

    pub fn eq_constraints(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.eq_rows.iter().map(Vec::as_slice).zip(self.eq_rhs.iter().copied())
    }

    /// Largest violation of any constraint at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ge = self
            .ge_constraints()
            .map(|(row, b)| (b - dot(row, x)).max(0.0));
        let eq = self.eq_constraints().map(|(row, b)| (dot(row, x) - b).abs());
        ge.chain(eq).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Multipliers of the `>=` rows (non-negative at optimality).
    pub ge_duals: Vec<f64>,
    /// Multipliers of the equality rows.
    pub eq_duals: Vec<f64>,
}

impl LpSolution {
    /// Dual objective `h . y + f . z`.
    pub fn dual_value(&self, lp: &LinearProgram) -> f64 {
        dot(&lp.ge_rhs, &self.ge_duals) + dot(&lp.eq_rhs, &self.eq_duals)
    }

    /// Largest entry of `|G^T y + F^T z - c|`.
    pub fn dual_residual(&self, lp: &LinearProgram) -> f64 {
        let mut r: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
        for (row, &y) in lp.ge_rows.iter().zip(&self.ge_duals) {
            for (acc, a) in r.iter_mut().zip(row) {
                *acc += a * y;
            }
        }
        for (row, &z) in lp.eq_rows.iter().zip(&self.eq_duals) {
            for (acc, a) in r.iter_mut().zip(row) {
                *acc += a * z;
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[r][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        let p = self.t[row][col];
        if p.abs() < BREAKDOWN_PIVOT {
            return Err(Error::NumericalBreakdown(format!(
                "pivot {p:e} at row {row}, column {col}"
            )));
        }
        let inv = 1.0 / p;
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        self.t[row][col] = 1.0;
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = line[col];
            if factor == 0.0 {
                continue;
            }
            for (v, pv) in line.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            line[col] = 0.0;
        }
        self.basis[row] = col;
        Ok(())
    }

    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut d = costs.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb == 0.0 {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(&self.t[r][..self.cols]) {
                *dj -= cb * a;
            }
        }
        d
    }

    /// Runs Bland's-rule simplex for `costs`; columns with `allowed[j] ==
    /// false` never enter. Returns `false` if the objective is unbounded.
    ///
    /// Entries below `PIVOT_RELATIVE` times the column maximum are not used
    /// as pivots; a candidate column offering only such entries is skipped.
    fn optimize(&mut self, costs: &[f64], allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(costs);
            let mut candidates = (0..self.cols).filter(|&j| allowed[j] && d[j] < -OPTIMALITY_TOL).peekable();
            if candidates.peek().is_none() {
                return Ok(true);
            }
            let mut step = None;
            for col in candidates {
                let colmax = self.t.iter().fold(0.0f64, |m, line| m.max(line[col].abs()));
                if self.t.iter().all(|line| line[col] <= FEASIBILITY_TOL) {
                    return Ok(false);
                }
                if let Some(row) = self.ratio_test(col, FEASIBILITY_TOL.max(PIVOT_RELATIVE * colmax)) {
                    step = Some((row, col));
                    break;
                }
            }
            let Some((row, col)) = step else {
                return Err(Error::NumericalBreakdown("only tiny pivots remain".into()));
            };
            self.pivot(row, col)?;
        }
        Err(Error::NumericalBreakdown("simplex iteration limit reached".into()))
    }

    /// Minimum-ratio row for entering `col`, ties broken by the smallest
    /// basic index.
    fn ratio_test(&self, col: usize, threshold: f64) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.t.len() {
            let a = self.t[r][col];
            if a <= threshold {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((lr, lratio)) => {
                    let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                    if (tie && self.basis[r] < self.basis[lr]) || (!tie && ratio < lratio) {
                        Some((r, ratio))
                    } else {
                        Some((lr, lratio))
                    }
                }
            };
        }
        leave.map(|(r, _)| r)
    }
}

/// Solves the program with two-phase simplex.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let d = lp.num_vars();
    let p = lp.ge_rows.len();
    let q = lp.eq_rows.len();
    let rows = p + q;
    // Columns: x+ (d) | x- (d) | surplus (p) | artificial (rows).
    let art0 = 2 * d + p;
    let cols = art0 + rows;

    let mut t = Vec::with_capacity(rows);
    let mut sign = Vec::with_capacity(rows);
    for r in 0..rows {
        let (coef, rhs) = if r < p {
            (&lp.ge_rows[r], lp.ge_rhs[r])
        } else {
            (&lp.eq_rows[r - p], lp.eq_rhs[r - p])
        };
        let s = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; cols + 1];
        for (k, &a) in coef.iter().enumerate() {
            line[k] = s * a;
            line[d + k] = -s * a;
        }
        if r < p {
            line[2 * d + r] = -s;
        }
        line[art0 + r] = 1.0;
        line[cols] = s * rhs;
        t.push(line);
        sign.push(s);
    }
    let original = t.clone();
    let mut tab = Tableau {
        t,
        basis: (art0..cols).collect(),
        cols,
    };

    // Phase one: drive the artificial sum to zero.
    let mut phase1 = vec![0.0; cols];
    for c in phase1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    let all = vec![true; cols];
    tab.optimize(&phase1, &all)?;
    let infeasibility: f64 = (0..rows)
        .filter(|&r| tab.basis[r] >= art0)
        .map(|r| tab.rhs(r))
        .sum();
    let scale = lp
        .ge_rhs
        .iter()
        .chain(&lp.eq_rhs)
        .fold(1.0f64, |m, b| m.max(b.abs()));
    if infeasibility > FEASIBILITY_TOL * scale {
        return Ok(LpOutcome::Infeasible);
    }
    // Pivot remaining (zero-level) artificials out where possible; rows
    // where that fails are redundant and keep their artificial.
    for r in 0..rows {
        if tab.basis[r] < art0 {
            continue;
        }
        let col = (0..art0)
            .filter(|&j| tab.t[r][j].abs() > FEASIBILITY_TOL)
            .max_by(|&a, &b| tab.t[r][a].abs().total_cmp(&tab.t[r][b].abs()));
        if let Some(col) = col {
            tab.pivot(r, col)?;
        }
    }

    // Phase two: original objective, artificials barred.
    let mut costs = vec![0.0; cols];
    for (k, &c) in lp.objective.iter().enumerate() {
        costs[k] = c;
        costs[d + k] = -c;
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
    if !tab.optimize(&costs, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }

    // Recompute the vertex and the multipliers from the original data so
    // that rounding accumulated over pivots does not leak into the answer.
    let basis_matrix = Matrix::from_fn(rows, rows, |r, k| original[r][tab.basis[k]]);
    let b: Vec<f64> = original.iter().map(|line| line[cols]).collect();
    let x_b = solve_square(&basis_matrix, &b).unwrap_or_else(|| (0..rows).map(|r| tab.rhs(r)).collect());
    let mut split = vec![0.0; cols];
    for (k, &v) in tab.basis.iter().enumerate() {
        split[v] = x_b[k];
    }
    let x: Vec<f64> = (0..d).map(|k| split[k] - split[d + k]).collect();
    let value = dot(&lp.objective, &x);

    // pi = c_B^T B^{-1}; the artificial columns of the tableau hold B^{-1}.
    let c_b: Vec<f64> = tab.basis.iter().map(|&v| costs[v]).collect();
    let pi = solve_square(&basis_matrix.transpose(), &c_b).unwrap_or_else(|| {
        let mut pi = vec![0.0; rows];
        for (k, &cb) in c_b.iter().enumerate() {
            for (r, v) in pi.iter_mut().enumerate() {
                *v += cb * tab.t[k][art0 + r];
            }
        }
        pi
    });
    let duals: Vec<f64> = pi.iter().zip(&sign).map(|(v, s)| v * s).collect();

    let violation = lp.max_violation(&x);
    if violation > CHECK_TOL * scale {
        return Err(Error::NumericalBreakdown(format!(
            "reported optimum violates a constraint by {violation:e}"
        )));
    }
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        value,
        ge_duals: duals[..p].to_vec(),
        eq_duals: duals[p..].to_vec(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimum(lp: &LinearProgram) -> LpSolution {
        match solve(lp).unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn lower_bound_is_attained() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_ge(vec![1.0], 3.0).unwrap();
        let s = optimum(&lp);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.value - 3.0).abs() < 1e-12);
        assert!((s.ge_duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.add_ge(vec![1.0], 0.0).unwrap();
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn contradictory_bounds() {
        let mut lp = LinearProgram::minimize(vec![0.0]);
        lp.add_ge(vec![1.0], 1.0).unwrap();
        lp.add_ge(vec![-1.0], 0.0).unwrap();
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn equality_and_duals() {
        // min x + 2y  s.t. x + y = 4, x - y >= -2, y >= 0
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.add_eq(vec![1.0, 1.0], 4.0).unwrap();
        lp.add_ge(vec![1.0, -1.0], -2.0).unwrap();
        lp.add_ge(vec![0.0, 1.0], 0.0).unwrap();
        let s = optimum(&lp);
        assert!((s.value - 4.0).abs() < 1e-9);
        assert!(s.dual_residual(&lp) < 1e-9);
        assert!((s.dual_value(&lp) - s.value).abs() < 1e-9);
        assert!(s.ge_duals.iter().all(|&y| y >= -1e-12));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 2.0).unwrap();
        lp.add_eq(vec![2.0, 2.0], 4.0).unwrap();
        lp.add_ge(vec![1.0, 0.0], 0.5).unwrap();
        let s = optimum(&lp);
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn free_variable_goes_negative() {
        // min x s.t. x >= -7
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_ge(vec![1.0], -7.0).unwrap();
        assert!((optimum(&lp).x[0] + 7.0).abs() < 1e-12);
    }

    #[test]
    fn no_constraints() {
        let lp = LinearProgram::minimize(vec![0.0, 0.0]);
        assert_eq!(optimum(&lp).value, 0.0);
        let lp = LinearProgram::minimize(vec![1.0]);
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn dimension_checks() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        assert!(lp.add_ge(vec![1.0], 0.0).is_err());
        assert!(lp.add_eq(vec![1.0, f64::NAN], 0.0).is_err());
    }
}
