//! Dense two-phase primal simplex.
//!
//! Pricing is Dantzig (largest reduced cost, lowest index on ties) until
//! `2·(rows + cols)` pivots have been spent, then Bland's rule takes over.
//! The ratio test is lexicographic, skipping near-zero pivots among tied
//! rows, and falls back to the lowest basic-variable index so identical input
//! gives an identical vertex.
//!
//! Equilibrium LPs are highly degenerate (every incentive row has rhs 0), so
//! ≤ rows are relaxed by a tiny deterministic amount while pivoting. The
//! true rhs is then restored on the final basis, and dual simplex pivots
//! repair any basic value the relaxation was holding up.

use super::{NumericsError, LP_FEASIBILITY_TOL};

const COST_EPS: f64 = 1e-10;
const PIVOT_EPS: f64 = 1e-10;
const BREAKDOWN_PIVOT: f64 = 1e-12;
/// Tied leaving rows whose pivot is below this share of the largest tied
/// pivot are skipped.
const TIE_PIVOT_SHARE: f64 = 1e-6;
/// Relative rhs relaxations applied to ≤ rows while pivoting, in the order
/// tried.
const PERTURBATIONS: [f64; 4] = [1e-7, 1e-5, 1e-9, 0.0];
/// Basic values down to −CLEANUP_TOL count as feasible after restoring rhs.
const CLEANUP_TOL: f64 = 1e-12;
const CLEANUP_ROUNDS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    /// Signed slack: positive when satisfied strictly, negative when violated.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        match self.sense {
            Sense::Le => self.rhs - lhs,
            Sense::Ge => lhs - self.rhs,
            Sense::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

/// maximize cᵀx subject to the constraints and x ≥ lower_bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower_bounds: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, constraints: Vec<Constraint>) -> Result<Self, NumericsError> {
        let n = objective.len();
        for (row, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(NumericsError::MalformedLp(format!(
                    "row {row} has {} coefficients, objective has {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(NumericsError::MalformedLp(format!("row {row} is not finite")));
            }
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(NumericsError::MalformedLp("objective is not finite".into()));
        }
        Ok(Self {
            lower_bounds: vec![0.0; n],
            objective,
            constraints,
        })
    }

    pub fn with_lower_bounds(mut self, lower_bounds: Vec<f64>) -> Result<Self, NumericsError> {
        if lower_bounds.len() != self.objective.len() || lower_bounds.iter().any(|l| !l.is_finite()) {
            return Err(NumericsError::MalformedLp("lower bounds do not match variables".into()));
        }
        self.lower_bounds = lower_bounds;
        Ok(self)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| (-c.slack(x)).max(0.0));
        let bounds = x.iter().zip(&self.lower_bounds).map(|(v, l)| (l - v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Column {
    Original,
    Slack,
    Artificial,
}

struct Tableau {
    /// m rows of length ncols + 1; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs c_j − z_j, last entry −z.
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns forming the identity at the start; B⁻¹ lives there.
    initial_basis: Vec<usize>,
    kinds: Vec<Column>,
    iterations: usize,
    bland_after: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols()]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.ncols() + 1;
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for k in 0..width {
                self.cost[k] -= f * pivot_row[k];
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_cost(&mut self, c: &[f64]) {
        let width = self.ncols() + 1;
        let mut cost = vec![0.0; width];
        cost[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for k in 0..width {
                    cost[k] -= cb * self.rows[i][k];
                }
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        self.cost = cost;
    }

    /// Minimum-ratio row for entering column `c`. Ratio ties are broken
    /// lexicographically on the rows of B⁻¹ (the initial identity columns),
    /// which rules out cycling whatever the pricing rule; rows still tied
    /// after that go to the lowest basic index.
    fn leaving_row(&self, c: usize) -> Option<usize> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        let eligible: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i][c] > PIVOT_EPS).collect();
        let ratio = |i: usize| self.rhs(i).max(0.0) / self.rows[i][c];
        let best = eligible.iter().map(|&i| ratio(i)).fold(f64::INFINITY, f64::min);
        let mut tied: Vec<usize> = eligible.into_iter().filter(|&i| close(ratio(i), best)).collect();
        // Any tied row gives the same step; a near-zero pivot among them would
        // blow up the tableau, and its lexicographic key with it.
        let largest = tied.iter().map(|&i| self.rows[i][c]).fold(0.0, f64::max);
        tied.retain(|&i| self.rows[i][c] >= TIE_PIVOT_SHARE * largest);
        for &k in &self.initial_basis {
            if tied.len() <= 1 {
                break;
            }
            let key = |i: usize| self.rows[i][k] / self.rows[i][c];
            let least = tied.iter().map(|&i| key(i)).fold(f64::INFINITY, f64::min);
            tied.retain(|&i| close(key(i), least));
        }
        tied.into_iter().min_by_key(|&i| self.basis[i])
    }

    /// Dual simplex pivots until every basic value is ≥ −CLEANUP_TOL. The
    /// reduced costs stay non-positive throughout. Returns false when some
    /// row admits no pivot, which proves the program infeasible.
    fn dual_repair(&mut self) -> Result<bool, NumericsError> {
        let ncols = self.ncols();
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(NumericsError::NumericalBreakdown(format!(
                    "simplex exceeded {} iterations",
                    self.max_iterations
                )));
            }
            let worst = (0..self.rows.len())
                .filter(|&i| self.rhs(i) < -CLEANUP_TOL)
                .min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)));
            let Some(row) = worst else {
                return Ok(true);
            };
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..ncols {
                let a = self.rows[row][j];
                if self.kinds[j] == Column::Artificial || a >= -PIVOT_EPS {
                    continue;
                }
                let ratio = self.cost[j].min(0.0) / a;
                entering = match entering {
                    Some((_, r, p)) if ratio > r + 1e-12 || (ratio >= r - 1e-12 && -a <= p) => entering,
                    _ => Some((j, ratio, -a)),
                };
            }
            let Some((col, _, _)) = entering else {
                return Ok(false);
            };
            self.pivot(row, col);
        }
    }

    fn run(&mut self, allow_artificial: bool) -> Result<Outcome, NumericsError> {
        let ncols = self.ncols();
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(NumericsError::NumericalBreakdown(format!(
                    "simplex exceeded {} iterations",
                    self.max_iterations
                )));
            }
            let bland = self.iterations > self.bland_after;

            let mut entering = None;
            let mut best = COST_EPS;
            for j in 0..ncols {
                if !allow_artificial && self.kinds[j] == Column::Artificial {
                    continue;
                }
                let d = self.cost[j];
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(Outcome::Optimal);
            };

            let Some(row) = self.leaving_row(col) else {
                return Ok(Outcome::Unbounded);
            };
            if self.rows[row][col].abs() < BREAKDOWN_PIVOT {
                return Err(NumericsError::NumericalBreakdown(format!(
                    "pivot magnitude {:e} below threshold",
                    self.rows[row][col]
                )));
            }
            self.pivot(row, col);
        }
    }
}

/// Solves `lp` to a basic optimal solution, or reports infeasibility or
/// unboundedness through the status.
///
/// A run whose final basis turns out numerically singular, or which ends in
/// a dual-repair infeasibility, is retried with a different rhs perturbation;
/// infeasibility is only reported when no attempt finds a feasible point.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, NumericsError> {
    let mut infeasible = None;
    let mut last_err = None;
    for perturbation in PERTURBATIONS {
        match solve_perturbed(lp, perturbation) {
            Ok(sol) if sol.status == LpStatus::Infeasible => infeasible = Some(sol),
            Ok(sol) => return Ok(sol),
            Err(e) => last_err = Some(e),
        }
    }
    match (infeasible, last_err) {
        (Some(sol), _) => Ok(sol),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one attempt runs"),
    }
}

fn solve_perturbed(lp: &LinearProgram, perturbation: f64) -> Result<LpSolution, NumericsError> {
    let n = lp.num_vars();
    let m = lp.constraints.len();

    // Shift x = y + lb so every variable is y ≥ 0, then make every rhs ≥ 0.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            let shift: f64 = c.coeffs.iter().zip(&lp.lower_bounds).map(|(a, l)| a * l).sum();
            (c.coeffs.clone(), c.sense, c.rhs - shift)
        })
        .collect();
    for (coeffs, sense, rhs) in rows.iter_mut() {
        let flip = *rhs < 0.0 || (*rhs == 0.0 && *sense == Sense::Ge);
        if flip {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        // Equilibrate: each row's largest entry becomes 1. Rows mixing rate
        // differences of very different magnitudes otherwise lose feasibility
        // to roundoff.
        let scale = coeffs.iter().map(|a| a.abs()).fold(rhs.abs(), f64::max);
        if scale > 0.0 {
            coeffs.iter_mut().for_each(|a| *a /= scale);
            *rhs /= scale;
        }
    }

    let mut kinds = vec![Column::Original; n];
    let mut slack_col = vec![None; m];
    for (i, (_, sense, _)) in rows.iter().enumerate() {
        if *sense != Sense::Eq {
            slack_col[i] = Some(kinds.len());
            kinds.push(Column::Slack);
        }
    }
    let mut art_col = vec![None; m];
    for (i, (_, sense, _)) in rows.iter().enumerate() {
        if *sense != Sense::Le {
            art_col[i] = Some(kinds.len());
            kinds.push(Column::Artificial);
        }
    }
    let ncols = kinds.len();

    let mut table = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        let mut row = vec![0.0; ncols + 1];
        row[..n].copy_from_slice(coeffs);
        if let Some(s) = slack_col[i] {
            row[s] = if *sense == Sense::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_col[i] {
            row[a] = 1.0;
            basis.push(a);
        } else {
            basis.push(slack_col[i].expect("inequality row has a slack"));
        }
        row[ncols] = *rhs;
        table.push(row);
    }
    let original = table.clone();
    // Every incentive row of an equilibrium LP has rhs 0, so the start is
    // massively degenerate. Relaxing each ≤ row by a small distinct amount
    // removes the ties; the true rhs is restored on the final basis.
    for (i, (_, sense, rhs)) in rows.iter().enumerate() {
        if *sense == Sense::Le {
            let spread = 1.0 + (i as f64 * 0.618_033_988_749_895).fract();
            table[i][ncols] += perturbation * spread * (1.0 + rhs.abs());
        }
    }

    let mut tab = Tableau {
        rows: table,
        cost: Vec::new(),
        initial_basis: basis.clone(),
        basis,
        kinds,
        iterations: 0,
        bland_after: 2 * (m + n),
        max_iterations: 10_000 + 50 * (m + ncols),
    };

    let rhs_scale = rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
    if art_col.iter().any(Option::is_some) {
        let phase_one: Vec<f64> = tab
            .kinds
            .iter()
            .map(|k| if *k == Column::Artificial { -1.0 } else { 0.0 })
            .collect();
        tab.set_cost(&phase_one);
        tab.run(true)?;
        let infeasibility = tab.cost[ncols];
        if infeasibility > LP_FEASIBILITY_TOL * rhs_scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.kinds[tab.basis[r]] != Column::Artificial {
                continue;
            }
            let col = (0..ncols)
                .find(|&j| tab.kinds[j] != Column::Artificial && tab.rows[r][j].abs() > 1e-9);
            if let Some(col) = col {
                tab.pivot(r, col);
            }
        }
    }

    let mut phase_two = vec![0.0; ncols];
    phase_two[..n].copy_from_slice(&lp.objective);
    tab.set_cost(&phase_two);
    if let Outcome::Unbounded = tab.run(false)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
    }

    // Back to the true rhs. Basic values the perturbation was propping up may
    // now be slightly negative; dual pivots keep the reduced costs optimal
    // while repairing them, and a final primal pass mops up roundoff.
    let mut basic_values = None;
    for _ in 0..CLEANUP_ROUNDS {
        let Some(values) = polish(&original, &tab.basis, ncols) else {
            break;
        };
        for (i, v) in values.iter().enumerate() {
            tab.rows[i][ncols] = *v;
        }
        if values.iter().all(|v| *v >= -CLEANUP_TOL) {
            basic_values = Some(values);
            break;
        }
        if !tab.dual_repair()? {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
        }
        if let Outcome::Unbounded = tab.run(false)? {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
        }
    }
    let basic_values = basic_values.unwrap_or_else(|| (0..m).map(|i| tab.rhs(i)).collect());
    let mut y = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = basic_values[i];
    }
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let v = if y[j] < 0.0 && y[j] >= -LP_FEASIBILITY_TOL { 0.0 } else { y[j] };
            v + lp.lower_bounds[j]
        })
        .collect();

    let violation = lp.max_violation(&x);
    let coeff_scale = lp
        .constraints
        .iter()
        .flat_map(|c| c.coeffs.iter().map(|a| a.abs()).chain([c.rhs.abs()]))
        .fold(1.0, f64::max);
    if violation > LP_FEASIBILITY_TOL * coeff_scale {
        return Err(NumericsError::NumericalBreakdown(format!(
            "optimal basis violates constraints by {violation:e}"
        )));
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}

/// Recomputes basic values by solving B·x_B = b on the original rows, which
/// removes error accumulated over the pivots. None if B looks singular.
fn polish(original: &[Vec<f64>], basis: &[usize], ncols: usize) -> Option<Vec<f64>> {
    let m = basis.len();
    let mut a: Vec<Vec<f64>> = original
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = basis.iter().map(|&b| row[b]).collect();
            r.push(row[ncols]);
            r
        })
        .collect();
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-13 {
            return None;
        }
        a.swap(k, p);
        for i in (k + 1)..m {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..=m {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = ((k + 1)..m).map(|j| a[k][j] * x[j]).sum();
        x[k] = (a[k][m] - s) / a[k][k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(obj: &[f64], rows: &[(&[f64], Sense, f64)]) -> LinearProgram {
        LinearProgram::new(
            obj.to_vec(),
            rows.iter().map(|(a, s, b)| Constraint::new(a.to_vec(), *s, *b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_bound() {
        let sol = solve_lp(&lp(&[1.0], &[(&[1.0], Sense::Le, 1.0)])).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let sol = solve_lp(&lp(&[1.0], &[(&[1.0], Sense::Ge, 2.0), (&[1.0], Sense::Le, 1.0)])).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let sol = solve_lp(&lp(&[1.0, 1.0], &[(&[1.0, -1.0], Sense::Le, 1.0)])).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + 2y, x + y = 1, x ≥ 0.25 → (0.25, 0.75), objective 1.75.
        let sol = solve_lp(&lp(
            &[1.0, 2.0],
            &[(&[1.0, 1.0], Sense::Eq, 1.0), (&[1.0, 0.0], Sense::Ge, 0.25)],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.75).abs() < 1e-12);
        assert!((sol.x[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // −x ≤ −2 means x ≥ 2; max −x → x = 2.
        let sol = solve_lp(&lp(&[-1.0], &[(&[-1.0], Sense::Le, -2.0)])).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds_shift() {
        let base = lp(&[-1.0, -1.0], &[(&[1.0, 1.0], Sense::Le, 10.0)]);
        let sol = solve_lp(&base.with_lower_bounds(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(sol.x, vec![1.0, 2.0]);
        assert!((sol.objective + 3.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let sol = solve_lp(&lp(
            &[1.0, 0.0],
            &[(&[1.0, 1.0], Sense::Eq, 1.0), (&[2.0, 2.0], Sense::Eq, 2.0)],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_rows() {
        let bad = LinearProgram::new(vec![1.0, 1.0], vec![Constraint::new(vec![1.0], Sense::Le, 1.0)]);
        assert!(matches!(bad, Err(NumericsError::MalformedLp(_))));
    }

    #[test]
    fn deterministic() {
        let p = lp(
            &[1.0, 1.0, 1.0],
            &[(&[1.0, 1.0, 1.0], Sense::Eq, 1.0), (&[1.0, -1.0, 0.0], Sense::Ge, 0.0)],
        );
        assert_eq!(solve_lp(&p).unwrap(), solve_lp(&p).unwrap());
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Cycles under textbook Dantzig pricing with naive ratio ties.
        let p = lp(
            &[0.75, -20.0, 0.5, -6.0],
            &[
                (&[0.25, -8.0, -1.0, 9.0], Sense::Le, 0.0),
                (&[0.5, -12.0, -0.5, 3.0], Sense::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
        );
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.25).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[2] - 1.0).abs() < 1e-12);
    }
}
