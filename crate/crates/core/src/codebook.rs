//! Finite precoder action spaces.
//!
//! Uncoordinated precoders are cyclic column subsets of the T-point DFT
//! basis, scaled to the full power budget. The MBS reuses the same set in
//! coordinated mode. The FBS's coordinated actions are block-diagonalizing
//! pairs: the MUE precoder lives in null(H_jf) and the FUE precoder in
//! null(H_if), so neither stream leaks into the other user.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::numerics::{null_space_basis, Complex64, ComplexMatrix, NumericsError};
use crate::scenario::Scenario;

pub const DEFAULT_CODEBOOK_SIZE: usize = 4;
pub const POWER_TOL: f64 = 1e-9;
pub const BD_RESIDUAL_TOL: f64 = 1e-8;
const NULL_SPACE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CodebookError {
    #[error("codebook size must be at least 1")]
    ZeroSize,
    #[error("codebook size {size} exceeds the {max} distinct cyclic column subsets")]
    SizeTooLarge { size: usize, max: usize },
    #[error("power split ({mue}, {fue}) invalid: need a ≥ 0, b > 0, a + b ≤ 1")]
    InvalidSplit { mue: f64, fue: f64 },
    #[error("power split gives the MUE no power; joint transmission needs a > 0")]
    SplitZeroMue,
    #[error("block diagonalization infeasible: {0}")]
    Numerics(#[from] NumericsError),
    #[error("block-diagonalization residual {residual:e} exceeds {BD_RESIDUAL_TOL:e}")]
    BdResidual { residual: f64 },
    #[error("action set {0} is empty")]
    EmptySet(&'static str),
    #[error("precoder power {power} exceeds budget {budget}")]
    OverBudget { power: f64, budget: f64 },
    #[error("coordinated FBS action has a zero FUE precoder")]
    ZeroFuePrecoder,
    #[error("precoder file: {0}")]
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Precoder {
    matrix: ComplexMatrix,
    power: f64,
}

impl Precoder {
    pub fn new(matrix: ComplexMatrix) -> Self {
        let power = matrix.gram_trace();
        Self { matrix, power }
    }

    /// The all-zero precoder. Valid input to the rate formulas, never part
    /// of a coordinated FBS action.
    pub fn zeros(tx: usize, streams: usize) -> Self {
        Self::new(ComplexMatrix::zeros(tx, streams))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// trace(V·Vᴴ), watts.
    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn streams(&self) -> usize {
        self.matrix.cols()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.matrix.scale(factor))
    }
}

/// A coordinated FBS action: one precoder toward the MUE, one toward the FUE.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordFbsAction {
    pub to_mue: Precoder,
    pub to_fue: Precoder,
}

impl CoordFbsAction {
    pub fn combined_power(&self) -> f64 {
        self.to_mue.power() + self.to_fue.power()
    }

    /// Largest cross-user leakage ‖H·V‖_F / (‖H‖_F·‖V‖_F) over both streams.
    pub fn bd_residual(&self, s: &Scenario) -> f64 {
        let leak = |h: &ComplexMatrix, v: &Precoder| {
            let denom = h.frobenius_norm() * v.matrix().frobenius_norm();
            if denom == 0.0 {
                0.0
            } else {
                (h * v.matrix()).frobenius_norm() / denom
            }
        };
        leak(&s.channels.h_jf, &self.to_mue).max(leak(&s.channels.h_if, &self.to_fue))
    }
}

/// Fractions of the FBS budget given to the MUE (`mue`, a) and FUE (`fue`, b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSplit {
    pub mue: f64,
    pub fue: f64,
}

impl Default for PowerSplit {
    fn default() -> Self {
        Self { mue: 0.5, fue: 0.5 }
    }
}

impl PowerSplit {
    pub fn new(mue: f64, fue: f64) -> Result<Self, CodebookError> {
        let split = Self { mue, fue };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<(), CodebookError> {
        let Self { mue, fue } = *self;
        if !(mue.is_finite() && fue.is_finite()) || mue < 0.0 || fue <= 0.0 || mue + fue > 1.0 + 1e-12 {
            return Err(CodebookError::InvalidSplit { mue, fue });
        }
        if mue == 0.0 {
            return Err(CodebookError::SplitZeroMue);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub macro_uncoord: Vec<Precoder>,
    pub femto_uncoord: Vec<Precoder>,
    pub macro_coord: Vec<Precoder>,
    pub femto_coord: Vec<CoordFbsAction>,
}

impl Codebook {
    pub fn new(
        macro_uncoord: Vec<Precoder>,
        femto_uncoord: Vec<Precoder>,
        macro_coord: Vec<Precoder>,
        femto_coord: Vec<CoordFbsAction>,
    ) -> Result<Self, CodebookError> {
        for (name, empty) in [
            ("m_uc", macro_uncoord.is_empty()),
            ("f_uc", femto_uncoord.is_empty()),
            ("m_c", macro_coord.is_empty()),
            ("f_c", femto_coord.is_empty()),
        ] {
            if empty {
                return Err(CodebookError::EmptySet(name));
            }
        }
        Ok(Self {
            macro_uncoord,
            femto_uncoord,
            macro_coord,
            femto_coord,
        })
    }

    /// Full action spaces for one scenario: `size` precoders per BS per mode.
    pub fn build(s: &Scenario, size: usize, split: PowerSplit) -> Result<Self, CodebookError> {
        let (macro_uncoord, femto_uncoord) = build_uncoordinated_codebook(s, size)?;
        let femto_coord = build_coordinated_fbs_codebook(s, split, size)?;
        let macro_coord = macro_uncoord.clone();
        Self::new(macro_uncoord, femto_uncoord, macro_coord, femto_coord)
    }

    pub fn sizes(&self) -> [usize; 4] {
        [
            self.macro_uncoord.len(),
            self.femto_uncoord.len(),
            self.macro_coord.len(),
            self.femto_coord.len(),
        ]
    }
}

fn dft(n: usize) -> ComplexMatrix {
    let norm = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |r, c| Complex64::from_polar(norm, -2.0 * PI * (r * c) as f64 / n as f64))
}

fn dft_subset_codebook(tx: usize, streams: usize, size: usize, budget: f64) -> Vec<Precoder> {
    let f = dft(tx);
    let scale = (budget / streams as f64).sqrt();
    (0..size)
        .map(|k| {
            let cols: Vec<usize> = (0..streams).map(|s| (k + s) % tx).collect();
            Precoder::new(f.select_columns(&cols).scale(scale))
        })
        .collect()
}

/// `size` DFT-subset precoders per BS with R streams, each at full budget.
pub fn build_uncoordinated_codebook(
    s: &Scenario,
    size: usize,
) -> Result<(Vec<Precoder>, Vec<Precoder>), CodebookError> {
    if size == 0 {
        return Err(CodebookError::ZeroSize);
    }
    let tx = s.tx_antennas;
    if size > tx {
        return Err(CodebookError::SizeTooLarge { size, max: tx });
    }
    let streams = s.rx_antennas;
    Ok((
        dft_subset_codebook(tx, streams, size, s.p_mbs),
        dft_subset_codebook(tx, streams, size, s.p_fbs),
    ))
}

/// Stream count inside a null space of dimension `dim`. When this equals
/// `dim` every rotation yields the same covariance, so the actions are
/// rate-equivalent (the default T=4, R=2 case).
fn coordinated_streams(dim: usize, rx: usize) -> usize {
    rx.min(dim)
}

/// Rotated precoders inside the column span of `basis`: action k uses
/// diag(e^{2πi·j·k/(size·dim)})·F_dim, keeping the first `streams` columns.
fn rotated_in_span(basis: &ComplexMatrix, streams: usize, size: usize, power: f64) -> Vec<Precoder> {
    let dim = basis.cols();
    let f = dft(dim);
    let scale = (power / streams as f64).sqrt();
    (0..size)
        .map(|k| {
            let rot = ComplexMatrix::from_fn(dim, streams, |j, c| {
                let phase = 2.0 * PI * (j * k) as f64 / (size * dim) as f64;
                Complex64::from_polar(1.0, phase) * f[(j, c)]
            });
            Precoder::new((basis * &rot).scale(scale))
        })
        .collect()
}

/// Block-diagonalizing FBS action pairs at the given power split.
pub fn build_coordinated_fbs_codebook(
    s: &Scenario,
    split: PowerSplit,
    size: usize,
) -> Result<Vec<CoordFbsAction>, CodebookError> {
    split.validate()?;
    if size == 0 {
        return Err(CodebookError::ZeroSize);
    }
    let toward_mue_space = null_space_basis(&s.channels.h_jf, NULL_SPACE_TOL)?;
    let toward_fue_space = null_space_basis(&s.channels.h_if, NULL_SPACE_TOL)?;
    let rx = s.rx_antennas;

    let to_mue = rotated_in_span(
        &toward_mue_space,
        coordinated_streams(toward_mue_space.cols(), rx),
        size,
        split.mue * s.p_fbs,
    );
    let to_fue = rotated_in_span(
        &toward_fue_space,
        coordinated_streams(toward_fue_space.cols(), rx),
        size,
        split.fue * s.p_fbs,
    );

    to_mue
        .into_iter()
        .zip(to_fue)
        .map(|(to_mue, to_fue)| {
            let action = CoordFbsAction { to_mue, to_fue };
            let residual = action.bd_residual(s);
            if residual > BD_RESIDUAL_TOL {
                return Err(CodebookError::BdResidual { residual });
            }
            Ok(action)
        })
        .collect()
}

fn max_power<'a>(powers: impl Iterator<Item = f64> + 'a) -> f64 {
    powers.fold(f64::NEG_INFINITY, f64::max)
}

/// True iff each BS has the same maximum transmit power in both modes.
pub fn validate_power_budget(cb: &Codebook) -> bool {
    let f_uc = max_power(cb.femto_uncoord.iter().map(Precoder::power));
    let f_c = max_power(cb.femto_coord.iter().map(CoordFbsAction::combined_power));
    let m_uc = max_power(cb.macro_uncoord.iter().map(Precoder::power));
    let m_c = max_power(cb.macro_coord.iter().map(Precoder::power));
    (f_uc - f_c).abs() <= POWER_TOL && (m_uc - m_c).abs() <= POWER_TOL
}

const SET_NAMES: [&str; 5] = ["m_uc", "f_uc", "m_c", "f_c_if", "f_c_jf"];

/// Writes every precoder as a block: a header line naming its set, then T
/// rows of interleaved `re,im` values.
pub fn write_precoder_file(path: &Path, cb: &Codebook) -> Result<(), CodebookError> {
    let io = |e: std::io::Error| CodebookError::File(format!("{}: {e}", path.display()));
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    let sets: [Vec<&Precoder>; 5] = [
        cb.macro_uncoord.iter().collect(),
        cb.femto_uncoord.iter().collect(),
        cb.macro_coord.iter().collect(),
        cb.femto_coord.iter().map(|a| &a.to_mue).collect(),
        cb.femto_coord.iter().map(|a| &a.to_fue).collect(),
    ];
    for (name, set) in SET_NAMES.iter().zip(sets) {
        for p in set {
            writeln!(out, "{name}").map_err(io)?;
            let m = p.matrix();
            for i in 0..m.rows() {
                let row: Vec<String> = (0..m.cols())
                    .flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()])
                    .collect();
                writeln!(out, "{}", row.join(",")).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

/// Loads explicit precoders, checking shapes, budgets, and the
/// block-diagonalization condition against `s`'s channels.
pub fn load_precoder_file(path: &Path, s: &Scenario) -> Result<Codebook, CodebookError> {
    let fail = |msg: String| CodebookError::File(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| fail(e.to_string()))?;
    let mut blocks: Vec<(usize, Vec<Vec<f64>>)> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| fail(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(set) = SET_NAMES.iter().position(|n| *n == line) {
            blocks.push((set, Vec::new()));
            continue;
        }
        let Some((_, rows)) = blocks.last_mut() else {
            return Err(fail(format!("line {}: data before any set header", lineno + 1)));
        };
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fail(format!("line {}: {e}", lineno + 1)))?;
        rows.push(row);
    }

    let tx = s.tx_antennas;
    let mut sets: [Vec<Precoder>; 5] = Default::default();
    for (set, rows) in blocks {
        if rows.len() != tx {
            return Err(fail(format!("{} block has {} rows, expected {tx}", SET_NAMES[set], rows.len())));
        }
        let width = rows[0].len();
        if width == 0 || width % 2 != 0 || rows.iter().any(|r| r.len() != width) {
            return Err(fail(format!("{} block has ragged or odd-width rows", SET_NAMES[set])));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.chunks(2).map(|p| Complex64::new(p[0], p[1])))
            .collect();
        let m = ComplexMatrix::from_vec(tx, width / 2, data).map_err(|e| fail(e.to_string()))?;
        sets[set].push(Precoder::new(m));
    }
    let [m_uc, f_uc, m_c, f_c_if, f_c_jf] = sets;
    if f_c_if.len() != f_c_jf.len() {
        return Err(fail("f_c_if and f_c_jf blocks must pair up".into()));
    }

    let check = |set: &[Precoder], budget: f64| {
        set.iter().try_for_each(|p| {
            if p.power() > budget + POWER_TOL {
                Err(CodebookError::OverBudget { power: p.power(), budget })
            } else {
                Ok(())
            }
        })
    };
    check(&m_uc, s.p_mbs)?;
    check(&m_c, s.p_mbs)?;
    check(&f_uc, s.p_fbs)?;

    let mut f_c = Vec::with_capacity(f_c_if.len());
    for (to_mue, to_fue) in f_c_if.into_iter().zip(f_c_jf) {
        let action = CoordFbsAction { to_mue, to_fue };
        if action.combined_power() > s.p_fbs + POWER_TOL {
            return Err(CodebookError::OverBudget {
                power: action.combined_power(),
                budget: s.p_fbs,
            });
        }
        if action.to_fue.power() == 0.0 {
            return Err(CodebookError::ZeroFuePrecoder);
        }
        let residual = action.bd_residual(s);
        if residual > BD_RESIDUAL_TOL {
            return Err(CodebookError::BdResidual { residual });
        }
        f_c.push(action);
    }
    Codebook::new(m_uc, f_uc, m_c, f_c)
}
