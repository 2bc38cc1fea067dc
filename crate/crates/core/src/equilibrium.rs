//! Normal-form rate games and their maximum-expected-sum-rate correlated
//! equilibria.
//!
//! Joint actions are indexed row-major with the macro action major:
//! joint index = i·n_f + j for macro action i and femto action j.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::codebook::{validate_power_budget, Codebook};
use crate::numerics::{solve_lp, Constraint, LinearProgram, LpStatus, NumericsError, Sense};
use crate::parallel::{map_ordered, Execution};
use crate::rates::{RateModel, RatePair};
use crate::scenario::Scenario;

pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("payoff table expects {expected} entries, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("payoff ({i}, {j}) is negative or not finite")]
    BadPayoff { i: usize, j: usize },
    #[error("codebook power budgets differ between modes")]
    PowerBudget,
    #[error("distribution has {found} entries, game has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("equilibrium LP failed ({reason}); table:\n{table}")]
    SolverFailure { reason: String, table: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameMode {
    Uncoordinated,
    Coordinated,
}

/// Which incentive constraints define the equilibrium polytope.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CeMode {
    /// Condition on the recommended own action (standard correlated equilibrium).
    #[default]
    Correlated,
    /// Compare against committing to a fixed action before the recommendation.
    Coarse,
}

impl CeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CeMode::Correlated => "ce",
            CeMode::Coarse => "coarse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTable {
    mode: GameMode,
    n_macro: usize,
    n_femto: usize,
    payoffs: Vec<RatePair>,
}

impl PayoffTable {
    pub fn new(mode: GameMode, n_macro: usize, n_femto: usize, payoffs: Vec<RatePair>) -> Result<Self, EquilibriumError> {
        if payoffs.len() != n_macro * n_femto || payoffs.is_empty() {
            return Err(EquilibriumError::DimensionMismatch {
                expected: n_macro * n_femto,
                found: payoffs.len(),
            });
        }
        for (k, p) in payoffs.iter().enumerate() {
            let ok = |v: f64| v.is_finite() && v >= 0.0;
            if !ok(p.macro_rate) || !ok(p.femto_rate) {
                return Err(EquilibriumError::BadPayoff {
                    i: k / n_femto,
                    j: k % n_femto,
                });
            }
        }
        Ok(Self {
            mode,
            n_macro,
            n_femto,
            payoffs,
        })
    }

    pub fn from_fn(
        mode: GameMode,
        n_macro: usize,
        n_femto: usize,
        mut f: impl FnMut(usize, usize) -> RatePair,
    ) -> Result<Self, EquilibriumError> {
        let payoffs = (0..n_macro * n_femto).map(|k| f(k / n_femto, k % n_femto)).collect();
        Self::new(mode, n_macro, n_femto, payoffs)
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    pub fn n_macro(&self) -> usize {
        self.n_macro
    }

    pub fn n_femto(&self) -> usize {
        self.n_femto
    }

    pub fn num_joint(&self) -> usize {
        self.payoffs.len()
    }

    #[inline]
    pub fn joint_index(&self, i: usize, j: usize) -> usize {
        i * self.n_femto + j
    }

    pub fn get(&self, i: usize, j: usize) -> RatePair {
        self.payoffs[self.joint_index(i, j)]
    }

    pub fn payoffs(&self) -> &[RatePair] {
        &self.payoffs
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,rate_m,rate_f\n");
        for i in 0..self.n_macro {
            for j in 0..self.n_femto {
                let p = self.get(i, j);
                let _ = writeln!(out, "{i},{j},{},{}", p.macro_rate, p.femto_rate);
            }
        }
        out
    }
}

/// Evaluates every joint action of one mode's game.
///
/// Coordinated femto action j supplies (V_if, V_jf): the MUE rate consumes
/// V_if and the FUE rate consumes V_jf.
pub fn assemble_game(s: &Scenario, cb: &Codebook, mode: GameMode, exec: Execution) -> Result<PayoffTable, EquilibriumError> {
    if !validate_power_budget(cb) {
        return Err(EquilibriumError::PowerBudget);
    }
    let model = RateModel::new(s);
    let (n_macro, n_femto) = match mode {
        GameMode::Uncoordinated => (cb.macro_uncoord.len(), cb.femto_uncoord.len()),
        GameMode::Coordinated => (cb.macro_coord.len(), cb.femto_coord.len()),
    };
    let joint: Vec<usize> = (0..n_macro * n_femto).collect();
    let entries = map_ordered(&joint, exec, |&k| {
        let (i, j) = (k / n_femto, k % n_femto);
        match mode {
            GameMode::Uncoordinated => {
                let (vm, vf) = (&cb.macro_uncoord[i], &cb.femto_uncoord[j]);
                Ok(RatePair::new(model.uncoord_macro(vm, vf)?, model.uncoord_femto(vm, vf)?))
            }
            GameMode::Coordinated => {
                let (vm, a) = (&cb.macro_coord[i], &cb.femto_coord[j]);
                Ok(RatePair::new(model.coord_macro(vm, &a.to_mue)?, model.coord_femto(vm, &a.to_fue)?))
            }
        }
    });
    let payoffs = entries.into_iter().collect::<Result<Vec<_>, NumericsError>>()?;
    PayoffTable::new(mode, n_macro, n_femto, payoffs)
}

/// Incentive rows (each `≥ 0`) followed by the normalization row Σp = 1.
///
/// Correlated mode emits, per player, one row for each recommended action a
/// and deviation a′ ≠ a: Σ_b p(a, b)·[u(a, b) − u(a′, b)] ≥ 0. Coarse mode
/// emits one row per deviation a′ summed over all joint actions.
/// Non-negativity of p is left to the LP's variable bounds.
pub fn ce_constraints(t: &PayoffTable, mode: CeMode) -> Vec<Constraint> {
    let (nm, nf, n) = (t.n_macro, t.n_femto, t.num_joint());
    let mut rows = Vec::new();
    let macro_u = |i: usize, j: usize| t.get(i, j).macro_rate;
    let femto_u = |i: usize, j: usize| t.get(i, j).femto_rate;

    match mode {
        CeMode::Correlated => {
            for a in 0..nm {
                for dev in (0..nm).filter(|&d| d != a) {
                    let mut c = vec![0.0; n];
                    for b in 0..nf {
                        c[t.joint_index(a, b)] = macro_u(a, b) - macro_u(dev, b);
                    }
                    rows.push(Constraint::new(c, Sense::Ge, 0.0));
                }
            }
            for b in 0..nf {
                for dev in (0..nf).filter(|&d| d != b) {
                    let mut c = vec![0.0; n];
                    for a in 0..nm {
                        c[t.joint_index(a, b)] = femto_u(a, b) - femto_u(a, dev);
                    }
                    rows.push(Constraint::new(c, Sense::Ge, 0.0));
                }
            }
        }
        CeMode::Coarse => {
            for dev in 0..nm {
                let mut c = vec![0.0; n];
                for a in 0..nm {
                    for b in 0..nf {
                        c[t.joint_index(a, b)] = macro_u(a, b) - macro_u(dev, b);
                    }
                }
                rows.push(Constraint::new(c, Sense::Ge, 0.0));
            }
            for dev in 0..nf {
                let mut c = vec![0.0; n];
                for a in 0..nm {
                    for b in 0..nf {
                        c[t.joint_index(a, b)] = femto_u(a, b) - femto_u(a, dev);
                    }
                }
                rows.push(Constraint::new(c, Sense::Ge, 0.0));
            }
        }
    }
    rows.push(Constraint::new(vec![1.0; n], Sense::Eq, 1.0));
    rows
}

/// A probability vector over joint actions.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedDistribution {
    probabilities: Vec<f64>,
}

impl CorrelatedDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, EquilibriumError> {
        if probabilities.iter().any(|p| !p.is_finite() || *p < -DISTRIBUTION_TOL) {
            return Err(EquilibriumError::InvalidDistribution("negative or non-finite entry".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(EquilibriumError::InvalidDistribution(format!("sums to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut probabilities = vec![0.0; len];
        probabilities[at] = 1.0;
        Self { probabilities }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probabilities: vec![1.0 / len as f64; len],
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub distribution: CorrelatedDistribution,
    pub expected_sum: f64,
    pub expected_macro: f64,
    pub expected_femto: f64,
}

/// Per-player expected rates under `d`.
pub fn expected_rates(t: &PayoffTable, d: &CorrelatedDistribution) -> Result<(f64, f64), EquilibriumError> {
    if d.probabilities.len() != t.num_joint() {
        return Err(EquilibriumError::LengthMismatch {
            expected: t.num_joint(),
            found: d.probabilities.len(),
        });
    }
    Ok(d.probabilities
        .iter()
        .zip(&t.payoffs)
        .fold((0.0, 0.0), |(m, f), (p, r)| (m + p * r.macro_rate, f + p * r.femto_rate)))
}

/// The equilibrium of `t` maximizing expected sum rate.
///
/// The optimal distribution need not be unique; the solver's pivot rules
/// make the returned one deterministic, and the objective is unique.
pub fn solve_mesr_ce(t: &PayoffTable, mode: CeMode) -> Result<EquilibriumReport, EquilibriumError> {
    let objective: Vec<f64> = t.payoffs.iter().map(RatePair::sum).collect();
    let lp = LinearProgram::new(objective, ce_constraints(t, mode))?;
    let failure = |reason: String| EquilibriumError::SolverFailure {
        reason,
        table: t.to_csv(),
    };
    let sol = solve_lp(&lp).map_err(|e| failure(e.to_string()))?;
    if sol.status != LpStatus::Optimal {
        return Err(failure(format!("status {:?}", sol.status)));
    }
    let distribution = CorrelatedDistribution::new(sol.x).map_err(|e| failure(e.to_string()))?;
    let (expected_macro, expected_femto) = expected_rates(t, &distribution)?;
    Ok(EquilibriumReport {
        distribution,
        expected_sum: sol.objective,
        expected_macro,
        expected_femto,
    })
}

/// Writes `payoffs.csv` and `distribution.csv` into `dir`.
pub fn write_game_dump(dir: &Path, t: &PayoffTable, report: &EquilibriumReport) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("payoffs.csv"), t.to_csv())?;
    let mut dist = String::from("i,j,probability\n");
    for i in 0..t.n_macro {
        for j in 0..t.n_femto {
            let _ = writeln!(dist, "{i},{j},{}", report.distribution.probabilities[t.joint_index(i, j)]);
        }
    }
    fs::write(dir.join("distribution.csv"), dist)
}
