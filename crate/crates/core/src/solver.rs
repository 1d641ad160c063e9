//! Dense two-phase simplex over the probability simplex.
//!
//! Every [`LinearProgram`] carries the implicit constraints `x >= 0` and
//! `sum(x) = 1`; individual variables may additionally be pinned to zero
//! (the mass of `∅`). Floating point with fixed tolerances: reduced costs
//! and phase-one residuals are compared against `1e-9`, and returned points
//! are checked against every row at `1e-7`.

use serde::Serialize;

const EPS: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-9;
/// Smallest entry used to pivot an artificial out; rows without one are redundant.
const DRIVE_OUT_EPS: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-7;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub constant: f64,
}

impl LinearRow {
    pub fn new(coefficients: Vec<f64>, relation: Relation, constant: f64) -> Self {
        LinearRow {
            coefficients,
            relation,
            constant,
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.coefficients.iter().zip(point).map(|(a, x)| a * x).sum()
    }

    /// Signed violation of the row at `point` (zero when satisfied).
    pub fn violation(&self, point: &[f64]) -> f64 {
        let lhs = self.evaluate(point);
        match self.relation {
            Relation::Le => (lhs - self.constant).max(0.0),
            Relation::Ge => (self.constant - lhs).max(0.0),
            Relation::Eq => (lhs - self.constant).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub coefficients: Vec<f64>,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<LinearRow>,
    objective: Option<Objective>,
    pinned_zero: Vec<usize>,
    max_pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Infeasible,
    Optimal {
        value: f64,
        point: Vec<f64>,
        /// One multiplier per user row followed by the multiplier of the
        /// implicit `sum(x) = 1` row, for the objective as stated.
        duals: Vec<f64>,
    },
    Feasible {
        point: Vec<f64>,
    },
}

impl Solution {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            Solution::Infeasible => None,
            Solution::Optimal { point, .. } | Solution::Feasible { point } => Some(point),
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, Solution::Infeasible)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("numerical trouble in simplex: {0}")]
    Numerical(String),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            rows: Vec::new(),
            objective: None,
            pinned_zero: Vec::new(),
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn push_row(&mut self, row: LinearRow) {
        self.rows.push(row);
    }

    pub fn with_row(mut self, coefficients: Vec<f64>, relation: Relation, constant: f64) -> Self {
        self.rows.push(LinearRow::new(coefficients, relation, constant));
        self
    }

    pub fn pin_zero(&mut self, var: usize) {
        if !self.pinned_zero.contains(&var) {
            self.pinned_zero.push(var);
        }
    }

    pub fn set_objective(&mut self, coefficients: Vec<f64>, direction: Direction) {
        self.objective = Some(Objective {
            coefficients,
            direction,
        });
    }

    pub fn minimize(mut self, coefficients: Vec<f64>) -> Self {
        self.set_objective(coefficients, Direction::Minimize);
        self
    }

    pub fn maximize(mut self, coefficients: Vec<f64>) -> Self {
        self.set_objective(coefficients, Direction::Maximize);
        self
    }

    pub fn clear_objective(&mut self) {
        self.objective = None;
    }

    pub fn set_max_pivots(&mut self, max: usize) {
        self.max_pivots = max;
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.num_vars == 0 {
            return Err(SolveError::Malformed("no variables".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coefficients.len() != self.num_vars {
                return Err(SolveError::Malformed(format!(
                    "row {i} has {} coefficients, expected {}",
                    row.coefficients.len(),
                    self.num_vars
                )));
            }
            if !row.constant.is_finite() || row.coefficients.iter().any(|c| !c.is_finite()) {
                return Err(SolveError::Malformed(format!("row {i} is not finite")));
            }
        }
        if let Some(obj) = &self.objective {
            if obj.coefficients.len() != self.num_vars {
                return Err(SolveError::Malformed("objective width mismatch".into()));
            }
        }
        if let Some(&v) = self.pinned_zero.iter().find(|&&v| v >= self.num_vars) {
            return Err(SolveError::Malformed(format!("pinned variable {v} out of range")));
        }
        Ok(())
    }
}

/// Solves the program with the two-phase simplex method.
pub fn solve(lp: &LinearProgram) -> Result<Solution, SolveError> {
    lp.validate()?;
    let columns: Vec<usize> = (0..lp.num_vars).filter(|v| !lp.pinned_zero.contains(v)).collect();
    if columns.is_empty() {
        return Ok(Solution::Infeasible);
    }
    let mut tableau = Tableau::build(lp, &columns);
    tableau.max_pivots = lp.max_pivots;

    tableau.phase_one()?;
    if tableau.phase_one_residual() > EPS {
        return Ok(Solution::Infeasible);
    }
    tableau.drive_out_artificials();
    // The tableau values carry pivoting drift, while solving the basis
    // afresh can be poorly conditioned; keep whichever fits the rows better.
    let worst_violation = |x: &[f64]| {
        let sum: f64 = x.iter().sum();
        lp.rows.iter().map(|r| r.violation(x)).fold((sum - 1.0).abs(), f64::max)
    };
    let point_of = |t: &Tableau| {
        let read = |values: &dyn Fn(usize) -> f64| {
            let mut x = vec![0.0; lp.num_vars];
            for (r, &b) in t.basis.iter().enumerate() {
                if b < columns.len() {
                    x[columns[b]] = values(r).max(0.0);
                }
            }
            x
        };
        let drifted = read(&|r| t.rhs(r));
        match t.basic_solution() {
            Some(fresh) => {
                let fresh = read(&|r| fresh[r]);
                if worst_violation(&fresh) < worst_violation(&drifted) {
                    fresh
                } else {
                    drifted
                }
            }
            None => drifted,
        }
    };

    let solution = match &lp.objective {
        None => Solution::Feasible {
            point: point_of(&tableau),
        },
        Some(obj) => {
            let sign = match obj.direction {
                Direction::Minimize => 1.0,
                Direction::Maximize => -1.0,
            };
            let costs: Vec<f64> = columns.iter().map(|&c| sign * obj.coefficients[c]).collect();
            tableau.phase_two(&costs)?;
            let point = point_of(&tableau);
            let value: f64 = obj.coefficients.iter().zip(&point).map(|(c, x)| c * x).sum();
            let duals = tableau.duals(lp.rows.len() + 1, sign);
            Solution::Optimal { value, point, duals }
        }
    };

    let worst = worst_violation(solution.point().expect("feasible"));
    if worst > RESIDUAL_TOL {
        return Err(SolveError::Numerical(format!("solution violates a row by {worst:e}")));
    }
    Ok(solution)
}

/// Dense simplex tableau in the standardized equality form.
struct Tableau {
    /// `m x (ncols + 1)` matrix; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    /// The standardized rows before any pivot, for recomputing the solution.
    initial: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// For each surviving row, the index of the row it came from.
    origin: Vec<usize>,
    /// Column that formed the starting basis of each original row, and the
    /// sign applied to that row during standardization.
    start_column: Vec<usize>,
    row_sign: Vec<f64>,
    removed: Vec<bool>,
    artificial_from: usize,
    ncols: usize,
    obj: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram, columns: &[usize]) -> Self {
        let structural = columns.len();
        // user rows plus the implicit simplex row
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|r| (columns.iter().map(|&c| r.coefficients[c]).collect(), r.relation, r.constant))
            .collect();
        rows.push((vec![1.0; structural], Relation::Eq, 1.0));

        let mut row_sign = Vec::with_capacity(rows.len());
        for (coeffs, rel, b) in rows.iter_mut() {
            if *b < 0.0 {
                coeffs.iter_mut().for_each(|c| *c = -*c);
                *b = -*b;
                *rel = match *rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                row_sign.push(-1.0);
            } else {
                row_sign.push(1.0);
            }
        }

        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_from = structural + slack_count;
        let ncols = artificial_from + artificial_count;

        let m = rows.len();
        let mut a = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut start_column = vec![0; m];
        let mut next_slack = structural;
        let mut next_art = artificial_from;
        for (i, (coeffs, rel, b)) in rows.into_iter().enumerate() {
            a[i][..structural].copy_from_slice(&coeffs);
            a[i][ncols] = b;
            match rel {
                Relation::Le => {
                    a[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    start_column[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    a[i][next_slack] = -1.0;
                    next_slack += 1;
                    a[i][next_art] = 1.0;
                    basis[i] = next_art;
                    start_column[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    a[i][next_art] = 1.0;
                    basis[i] = next_art;
                    start_column[i] = next_art;
                    next_art += 1;
                }
            }
        }

        Tableau {
            initial: a.clone(),
            a,
            basis,
            origin: (0..m).collect(),
            removed: vec![false; m],
            start_column,
            row_sign,
            artificial_from,
            ncols,
            obj: vec![0.0; ncols + 1],
            pivots: 0,
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }

    fn rhs(&self, row: usize) -> f64 {
        self.a[row][self.ncols]
    }

    /// Loads `costs` (indexed by column) as the objective row in reduced form.
    fn load_objective(&mut self, costs: &[f64]) {
        self.obj = costs.to_vec();
        self.obj.resize(self.ncols + 1, 0.0);
        for r in 0..self.a.len() {
            let cb = costs.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (o, v) in self.obj.iter_mut().zip(&self.a[r]) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn phase_one(&mut self) -> Result<(), SolveError> {
        let mut costs = vec![0.0; self.ncols];
        for c in costs.iter_mut().skip(self.artificial_from) {
            *c = 1.0;
        }
        self.load_objective(&costs);
        self.optimize(self.ncols)
    }

    fn phase_one_residual(&self) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= self.artificial_from)
            .map(|(r, _)| self.rhs(r))
            .sum()
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and get dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] >= self.artificial_from {
                let entering = (0..self.artificial_from)
                    .filter(|&j| self.a[r][j].abs() > DRIVE_OUT_EPS)
                    .max_by(|&i, &j| self.a[r][i].abs().total_cmp(&self.a[r][j].abs()));
                match entering {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.removed[self.origin[r]] = true;
                        self.a.remove(r);
                        self.basis.remove(r);
                        self.origin.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    fn phase_two(&mut self, costs: &[f64]) -> Result<(), SolveError> {
        self.load_objective(costs);
        self.optimize(self.artificial_from)
    }

    /// Minimizes the loaded objective using columns `< enterable` only.
    fn optimize(&mut self, enterable: usize) -> Result<(), SolveError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..enterable).find(|&j| self.obj[j] < -EPS)
            } else {
                let mut best = None;
                let mut best_val = -EPS;
                for j in 0..enterable {
                    if self.obj[j] < best_val {
                        best_val = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(j) = entering else {
                return Ok(());
            };

            // Harris two-pass test: bound the step so no basic value drops
            // below -EPS, then take the sturdiest pivot within that bound.
            let rows = || (0..self.a.len()).filter(|&r| self.a[r][j] > PIVOT_EPS);
            let bound = rows()
                .map(|r| (self.rhs(r).max(0.0) + EPS) / self.a[r][j])
                .fold(f64::INFINITY, f64::min);
            let mut leave: Option<(usize, f64)> = None;
            for r in rows() {
                let coef = self.a[r][j];
                let ratio = self.rhs(r).max(0.0) / coef;
                if ratio > bound {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lr, _)) if bland => self.basis[r] < self.basis[lr],
                    Some((lr, _)) => coef > self.a[lr][j],
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(SolveError::Numerical("unbounded direction over a bounded simplex".into()));
            };
            if ratio <= EPS {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            // A leaving value inside the Harris band is treated as exactly
            // zero so the entering variable never starts negative.
            if self.rhs(r) < 0.0 {
                let last = self.ncols;
                self.a[r][last] = 0.0;
            }
            self.pivot(r, j);
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return Err(SolveError::IterationLimit(self.max_pivots));
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.a[r][j];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.obj[j];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Values of the basic variables solved afresh from the initial rows,
    /// which avoids the drift accumulated by repeated pivoting.
    fn basic_solution(&self) -> Option<Vec<f64>> {
        let m = self.a.len();
        let mut mat: Vec<Vec<f64>> = self
            .origin
            .iter()
            .map(|&o| {
                let row = &self.initial[o];
                let mut v: Vec<f64> = self.basis.iter().map(|&b| row[b]).collect();
                v.push(row[self.ncols]);
                v
            })
            .collect();
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))?;
            if mat[piv][col].abs() < 1e-12 {
                return None;
            }
            mat.swap(col, piv);
            for i in col + 1..m {
                let f = mat[i][col] / mat[col][col];
                if f != 0.0 {
                    let (top, rest) = mat.split_at_mut(i);
                    for (a, b) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                        *a -= f * b;
                    }
                }
            }
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let mut v = mat[i][m];
            for k in i + 1..m {
                v -= mat[i][k] * x[k];
            }
            x[i] = v / mat[i][i];
        }
        Some(x)
    }

    /// Simplex multipliers read off the reduced costs of each row's starting
    /// basis column, mapped back to the caller's row orientation.
    fn duals(&self, rows: usize, objective_sign: f64) -> Vec<f64> {
        (0..rows)
            .map(|i| {
                if self.removed[i] {
                    return 0.0;
                }
                let col = self.start_column[i];
                // starting column has cost 0 in phase two and is e_i
                let y = -self.obj[col];
                y * self.row_sign[i] * objective_sign
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_maximum() {
        let lp = LinearProgram::new(2).with_row(vec![1.0, 0.0], Relation::Eq, 0.3).maximize(vec![0.0, 1.0]);
        match solve(&lp).unwrap() {
            Solution::Optimal { value, point, .. } => {
                assert!((value - 0.7).abs() < 1e-12);
                assert!((point[0] - 0.3).abs() < 1e-12 && (point[1] - 0.7).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contradictory_bounds() {
        let lp = LinearProgram::new(2)
            .with_row(vec![1.0, 0.0], Relation::Ge, 0.6)
            .with_row(vec![1.0, 0.0], Relation::Le, 0.4);
        assert_eq!(solve(&lp).unwrap(), Solution::Infeasible);
    }

    #[test]
    fn pinned_variables_stay_zero() {
        let mut lp = LinearProgram::new(3).maximize(vec![1.0, 0.0, 0.0]);
        lp.pin_zero(0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.point().unwrap()[0], 0.0);
        let mut only = LinearProgram::new(1);
        only.pin_zero(0);
        assert_eq!(solve(&only).unwrap(), Solution::Infeasible);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::new(3)
            .with_row(vec![1.0, 1.0, 0.0], Relation::Eq, 0.5)
            .with_row(vec![2.0, 2.0, 0.0], Relation::Eq, 1.0)
            .with_row(vec![0.0, 0.0, 1.0], Relation::Eq, 0.5)
            .minimize(vec![1.0, 0.0, 0.0]);
        match solve(&lp).unwrap() {
            Solution::Optimal { value, .. } => assert!(value.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_reported() {
        let lp = LinearProgram::new(2).with_row(vec![1.0], Relation::Eq, 0.3);
        assert!(matches!(solve(&lp), Err(SolveError::Malformed(_))));
        assert!(matches!(solve(&LinearProgram::new(0)), Err(SolveError::Malformed(_))));
    }

    #[test]
    fn iteration_limit_is_distinct() {
        let mut lp = LinearProgram::new(4)
            .with_row(vec![1.0, 1.0, 0.0, 0.0], Relation::Ge, 0.5)
            .with_row(vec![0.0, 1.0, 1.0, 0.0], Relation::Ge, 0.5)
            .maximize(vec![0.0, 0.0, 0.0, 1.0]);
        lp.set_max_pivots(0);
        assert_eq!(solve(&lp), Err(SolveError::IterationLimit(0)));
    }

    #[test]
    fn duals_certify_the_optimum() {
        let lp = LinearProgram::new(4)
            .with_row(vec![1.0, 1.0, 0.0, 0.0], Relation::Ge, 0.5)
            .with_row(vec![0.0, 1.0, 1.0, 0.0], Relation::Le, 0.7)
            .with_row(vec![1.0, 0.0, 0.0, 1.0], Relation::Eq, 0.6)
            .maximize(vec![0.5, 1.0, -1.0, 2.0]);
        let Solution::Optimal { value, duals, .. } = solve(&lp).unwrap() else {
            panic!()
        };
        let constants = [0.5, 0.7, 0.6, 1.0];
        let certified: f64 = duals.iter().zip(constants).map(|(y, b)| y * b).sum();
        assert!((value - certified).abs() < 1e-9, "{value} vs {certified}");
    }

    #[test]
    fn hire_system_vertex() {
        // mass vector over {∅, {H}, {¬H}, Θ}; Bel(H) = 0, Bel(¬H) = 0
        let mut lp = LinearProgram::new(4)
            .with_row(vec![0.0, 1.0, 0.0, 0.0], Relation::Eq, 0.0)
            .with_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Eq, 0.0);
        lp.pin_zero(0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.point().unwrap(), &[0.0, 0.0, 0.0, 1.0]);
    }
}
