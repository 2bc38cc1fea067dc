//! Orchestration: per-point evaluation, region sweeps, threshold search and
//! output files.

mod output;
mod sweep;

pub use output::{emit_outputs, emit_study_outputs, region_csv, RunInfo, REGION_HEADER};
pub use sweep::{
    find_dth, power_sweep, region_span, split_sweep, sweep_region, BracketEnd, DthCertificate, Grid, PointRecord,
    RegionResult, RegionSpan, Study, StudyPoint, StudyValue, SweepSpec, Trajectory, DEFAULT_SCAN_STEP,
};

use std::path::PathBuf;

use crate::codebook::{Codebook, CodebookError, PowerSplit, DEFAULT_CODEBOOK_SIZE};
use crate::coalition::{CoalitionReport, PaymentPolicy};
use crate::equilibrium::{assemble_game, solve_mesr_ce, CeMode, EquilibriumError, GameMode};
use crate::numerics::NumericsError;
use crate::parallel::Execution;
use crate::scenario::{Point, Scenario, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error("{0}")]
    Config(String),
    #[error("at MUE ({x}, {y}): {source}")]
    AtPoint {
        x: f64,
        y: f64,
        #[source]
        source: EquilibriumError,
    },
    #[error("no bracket: {0}")]
    NoBracket(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("sweep aborted after {} of {total} points: {source}", partial.records.len())]
    PartialSweep {
        partial: Box<RegionResult>,
        total: usize,
        source: Box<Error>,
    },
}

impl Error {
    /// 2 configuration, 3 numerical failure, 4 no bracket.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Codebook(CodebookError::Numerics(_) | CodebookError::BdResidual { .. }) => 3,
            Error::AtPoint { source, .. } => match source {
                EquilibriumError::PowerBudget => 2,
                _ => 3,
            },
            Error::NoBracket(_) => 4,
            Error::PartialSweep { source, .. } => source.exit_code(),
            Error::Scenario(_) | Error::Codebook(_) | Error::Config(_) | Error::InvalidTolerance(_) | Error::Io { .. } => 2,
        }
    }
}

impl From<NumericsError> for Error {
    fn from(e: NumericsError) -> Self {
        Error::Codebook(CodebookError::Numerics(e))
    }
}

/// Everything besides the scenario that shapes a point evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub codebook_size: usize,
    pub split: PowerSplit,
    pub ce_mode: CeMode,
    pub policy: PaymentPolicy,
    /// How grid points are distributed; single points always run inline.
    pub execution: Execution,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            codebook_size: DEFAULT_CODEBOOK_SIZE,
            split: PowerSplit::default(),
            ce_mode: CeMode::default(),
            policy: PaymentPolicy::default(),
            execution: Execution::default(),
        }
    }
}

impl EvalConfig {
    pub fn build_codebook(&self, s: &Scenario) -> Result<Codebook, Error> {
        Ok(Codebook::build(s, self.codebook_size, self.split)?)
    }
}

/// Both games, both equilibria, and the coalition verdict at `s`'s MUE.
pub fn evaluate_point(s: &Scenario, cb: &Codebook, cfg: &EvalConfig) -> Result<CoalitionReport, Error> {
    let at = |source: EquilibriumError| Error::AtPoint {
        x: s.geometry.mue.x,
        y: s.geometry.mue.y,
        source,
    };
    let solve = |mode: GameMode| {
        let table = assemble_game(s, cb, mode, Execution::Sequential).map_err(at)?;
        solve_mesr_ce(&table, cfg.ce_mode).map_err(at)
    };
    let uc = solve(GameMode::Uncoordinated)?;
    let c = solve(GameMode::Coordinated)?;
    Ok(CoalitionReport::from_equilibria(&uc, &c, cfg.policy))
}

pub fn evaluate_at(base: &Scenario, cb: &Codebook, cfg: &EvalConfig, mue: Point) -> Result<CoalitionReport, Error> {
    evaluate_point(&base.with_mue(mue), cb, cfg)
}
