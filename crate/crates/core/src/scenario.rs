//! Geometry, path loss, channel matrices, and the scenario file format.
//!
//! A scenario file is flat TOML. Every key is optional; missing keys fall
//! back to the reference deployment (MBS at the origin, FBS at (1000, 0),
//! FUE at (990, 0), 5 W / 1 W, 4×2 antennas, 1e-4 W noise). Unknown keys
//! are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numerics::{Complex64, ComplexMatrix};

pub const DEFAULT_ALPHA: f64 = 1.5;
pub const DEFAULT_D_MIN: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("bad channels file {path}: {message}")]
    Channels { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn mirrored(self) -> Self {
        Self::new(self.x, -self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub mbs: Point,
    pub fbs: Point,
    pub mue: Point,
    pub fue: Point,
    /// Amplitude path-loss exponent: gains scale as d^(−α).
    pub alpha: f64,
    pub d_min: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            mbs: Point::new(0.0, 0.0),
            fbs: Point::new(1000.0, 0.0),
            mue: Point::new(500.0, 0.0),
            fue: Point::new(990.0, 0.0),
            alpha: DEFAULT_ALPHA,
            d_min: DEFAULT_D_MIN,
        }
    }
}

/// Effective transmitter–receiver distances, in meters.
/// `i` is the MUE, `j` the FUE, `m` the MBS, `f` the FBS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub d_im: f64,
    pub d_if: f64,
    pub d_jm: f64,
    pub d_jf: f64,
}

impl Geometry {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let coords = [self.mbs, self.fbs, self.mue, self.fue];
        if coords.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(invalid("positions must be finite"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha must be positive"));
        }
        if !(self.d_min > 0.0 && self.d_min.is_finite()) {
            return Err(invalid("d_min must be positive"));
        }
        if !(self.mbs.distance(self.fbs) > 0.0) {
            return Err(invalid("MBS and FBS must be separated (d > 0)"));
        }
        Ok(())
    }
}

/// Euclidean distances between the indexed endpoints, each clamped below by
/// `d_min`.
pub fn effective_distances(g: &Geometry) -> Distances {
    let clamp = |d: f64| d.max(g.d_min);
    Distances {
        d_im: clamp(g.mue.distance(g.mbs)),
        d_if: clamp(g.mue.distance(g.fbs)),
        d_jm: clamp(g.fue.distance(g.mbs)),
        d_jf: clamp(g.fue.distance(g.fbs)),
    }
}

/// d^(−α). Rate formulas use its square.
pub fn path_loss_amplitude(d: f64, alpha: f64) -> f64 {
    d.powf(-alpha)
}

/// The four R×T channel matrices: MBS→MUE, FBS→MUE, FBS→FUE, MBS→FUE.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h_im: ComplexMatrix,
    pub h_if: ComplexMatrix,
    pub h_jf: ComplexMatrix,
    pub h_jm: ComplexMatrix,
}

impl ChannelSet {
    pub fn new(
        h_im: ComplexMatrix,
        h_if: ComplexMatrix,
        h_jf: ComplexMatrix,
        h_jm: ComplexMatrix,
    ) -> Result<Self, ScenarioError> {
        let shape = h_im.shape();
        if [&h_if, &h_jf, &h_jm].iter().any(|h| h.shape() != shape) {
            return Err(invalid("channel matrices must share one R×T shape"));
        }
        Ok(Self { h_im, h_if, h_jf, h_jm })
    }

    /// (R, T).
    pub fn shape(&self) -> (usize, usize) {
        self.h_im.shape()
    }

    fn in_file_order(&self) -> [&ComplexMatrix; 4] {
        [&self.h_im, &self.h_if, &self.h_jf, &self.h_jm]
    }
}

/// Four independent R×T matrices of i.i.d. CN(0, 1) entries, drawn in the
/// order H_im, H_if, H_jf, H_jm from a ChaCha8 stream seeded with `seed`.
pub fn draw_channels(seed: u64, tx: usize, rx: usize) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut draw = || {
        ComplexMatrix::from_fn(rx, tx, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
    };
    let h_im = draw();
    let h_if = draw();
    let h_jf = draw();
    let h_jm = draw();
    ChannelSet { h_im, h_if, h_jf, h_jm }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub geometry: Geometry,
    pub channels: ChannelSet,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub p_mbs: f64,
    pub p_fbs: f64,
    pub noise: f64,
    pub seed: u64,
    /// Absolute path of a fixed channel file, when channels are not drawn.
    pub channels_file: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::from_config(ScenarioConfig::default(), Path::new(".")).expect("defaults are valid")
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.geometry.validate()?;
        if self.rx_antennas < 1 || self.tx_antennas < self.rx_antennas {
            return Err(invalid("antenna counts must satisfy T ≥ R ≥ 1"));
        }
        for (name, v) in [("p_mbs_watts", self.p_mbs), ("p_fbs_watts", self.p_fbs), ("noise_watts", self.noise)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(&format!("{name} must be positive, got {v}")));
            }
        }
        if self.channels.shape() != (self.rx_antennas, self.tx_antennas) {
            return Err(invalid("channel matrices must be R×T"));
        }
        Ok(())
    }

    pub fn distances(&self) -> Distances {
        effective_distances(&self.geometry)
    }

    pub fn with_mue(&self, mue: Point) -> Self {
        let mut s = self.clone();
        s.geometry.mue = mue;
        s
    }

    pub fn with_fbs_power(&self, p_fbs: f64) -> Result<Self, ScenarioError> {
        let mut s = self.clone();
        s.p_fbs = p_fbs;
        s.validate()?;
        Ok(s)
    }

    /// Re-seeds the scenario. Channels are redrawn unless they come from a file.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        if s.channels_file.is_none() {
            s.channels = draw_channels(seed, s.tx_antennas, s.rx_antennas);
        }
        s
    }

    /// Builds and validates a scenario; a relative `channels_file` resolves
    /// against `base_dir`.
    pub fn from_config(cfg: ScenarioConfig, base_dir: &Path) -> Result<Self, ScenarioError> {
        let geometry = Geometry {
            mbs: Point::new(cfg.mbs_x, cfg.mbs_y),
            fbs: Point::new(cfg.fbs_x, cfg.fbs_y),
            mue: Point::new(cfg.mue_x, cfg.mue_y),
            fue: Point::new(cfg.fue_x, cfg.fue_y),
            alpha: cfg.alpha,
            d_min: cfg.d_min,
        };
        geometry.validate()?;
        if cfg.rx_antennas < 1 || cfg.tx_antennas < cfg.rx_antennas {
            return Err(invalid("antenna counts must satisfy T ≥ R ≥ 1"));
        }
        let channels_file = cfg.channels_file.as_ref().map(|p| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        });
        let channels = match &channels_file {
            Some(path) => read_channels_file(path, cfg.tx_antennas, cfg.rx_antennas)?,
            None => draw_channels(cfg.seed, cfg.tx_antennas, cfg.rx_antennas),
        };
        let scenario = Self {
            geometry,
            channels,
            tx_antennas: cfg.tx_antennas,
            rx_antennas: cfg.rx_antennas,
            p_mbs: cfg.p_mbs_watts,
            p_fbs: cfg.p_fbs_watts,
            noise: cfg.noise_watts,
            seed: cfg.seed,
            channels_file,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_config(&self) -> ScenarioConfig {
        let g = &self.geometry;
        ScenarioConfig {
            mbs_x: g.mbs.x,
            mbs_y: g.mbs.y,
            fbs_x: g.fbs.x,
            fbs_y: g.fbs.y,
            mue_x: g.mue.x,
            mue_y: g.mue.y,
            fue_x: g.fue.x,
            fue_y: g.fue.y,
            alpha: g.alpha,
            d_min: g.d_min,
            p_mbs_watts: self.p_mbs,
            p_fbs_watts: self.p_fbs,
            noise_watts: self.noise,
            tx_antennas: self.tx_antennas,
            rx_antennas: self.rx_antennas,
            seed: self.seed,
            channels_file: self.channels_file.as_ref().map(|p| p.display().to_string()),
        }
    }

    /// Scenario file text that loads back to an identical scenario.
    pub fn to_config_string(&self) -> String {
        toml::to_string(&self.to_config()).expect("flat config always serializes")
    }
}

/// On-disk form of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mbs_x: f64,
    pub mbs_y: f64,
    pub fbs_x: f64,
    pub fbs_y: f64,
    pub mue_x: f64,
    pub mue_y: f64,
    pub fue_x: f64,
    pub fue_y: f64,
    pub alpha: f64,
    pub d_min: f64,
    pub p_mbs_watts: f64,
    pub p_fbs_watts: f64,
    pub noise_watts: f64,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels_file: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let g = Geometry::default();
        Self {
            mbs_x: g.mbs.x,
            mbs_y: g.mbs.y,
            fbs_x: g.fbs.x,
            fbs_y: g.fbs.y,
            mue_x: g.mue.x,
            mue_y: g.mue.y,
            fue_x: g.fue.x,
            fue_y: g.fue.y,
            alpha: g.alpha,
            d_min: g.d_min,
            p_mbs_watts: 5.0,
            p_fbs_watts: 1.0,
            noise_watts: 1e-4,
            tx_antennas: 4,
            rx_antennas: 2,
            seed: DEFAULT_SEED,
            channels_file: None,
        }
    }
}

/// Parses scenario text; `origin` labels errors and `base_dir` anchors a
/// relative channels file.
pub fn parse_scenario(text: &str, origin: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    Scenario::from_config(cfg, base_dir)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, &path.display().to_string(), base)
}

/// Reads four R×T matrices (H_im, H_if, H_jf, H_jm) stored as R rows each of
/// 2T interleaved `re,im` values.
pub fn read_channels_file(path: &Path, tx: usize, rx: usize) -> Result<ChannelSet, ScenarioError> {
    let fail = |message: String| ScenarioError::Channels {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.len() != 2 * tx {
            return Err(fail(format!("row {} has {} fields, expected {}", line + 1, record.len(), 2 * tx)));
        }
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| fail(format!("row {}: {e}", line + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    if rows.len() != 4 * rx {
        return Err(fail(format!("expected {} rows, found {}", 4 * rx, rows.len())));
    }
    let mut mats = rows.chunks(rx).map(|block| {
        let data = block
            .iter()
            .flat_map(|r| r.chunks(2).map(|p| Complex64::new(p[0], p[1])))
            .collect();
        ComplexMatrix::from_vec(rx, tx, data).map_err(|e| fail(e.to_string()))
    });
    let mut next = || mats.next().expect("four blocks");
    ChannelSet::new(next()?, next()?, next()?, next()?)
}

pub fn write_channels_file(path: &Path, channels: &ChannelSet) -> Result<(), ScenarioError> {
    let fail = |message: String| ScenarioError::Channels {
        path: path.to_path_buf(),
        message,
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    for h in channels.in_file_order() {
        for i in 0..h.rows() {
            let fields: Vec<String> = (0..h.cols())
                .flat_map(|j| [h[(i, j)].re.to_string(), h[(i, j)].im.to_string()])
                .collect();
            writer.write_record(&fields).map_err(|e| fail(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| fail(e.to_string()))
}

fn invalid(msg: &str) -> ScenarioError {
    ScenarioError::Validation(msg.to_string())
}
