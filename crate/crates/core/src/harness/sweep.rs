use crate::codebook::{Codebook, PowerSplit};
use crate::coalition::CoalitionReport;
use crate::parallel::map_ordered;
use crate::scenario::{Point, Scenario};

use super::{evaluate_point, Error, EvalConfig};

/// Scan resolution along trajectories, in meters.
pub const DEFAULT_SCAN_STEP: f64 = 5.0;

/// A straight segment parametrized by arc length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    pub start: Point,
    pub end: Point,
}

impl Trajectory {
    pub const fn new(start: Point, end: Point) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn point_at(&self, t: f64) -> Point {
        let len = self.length();
        if len == 0.0 {
            return self.start;
        }
        let u = t / len;
        Point::new(
            self.start.x + u * (self.end.x - self.start.x),
            self.start.y + u * (self.end.y - self.start.y),
        )
    }

    /// Arc positions 0, step, 2·step, …, ending exactly at the length.
    pub fn scan_positions(&self, step: f64) -> Vec<f64> {
        let len = self.length();
        let n = (len / step - 1e-9).ceil().max(1.0) as usize;
        (0..=n).map(|k| if k == n { len } else { k as f64 * step }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    /// Row-major over y then x, both ranges inclusive.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64, x_step: f64, y_step: f64 },
    /// `samples` evenly spaced points including both ends.
    Trajectory { path: Trajectory, samples: usize },
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

impl Grid {
    pub fn validate(&self) -> Result<(), Error> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Grid::Rect { x0, x1, y0, y1, x_step, y_step } => {
                if !finite(&[x0, x1, y0, y1, x_step, y_step]) || x_step <= 0.0 || y_step <= 0.0 {
                    return Err(Error::Config(format!(
                        "grid steps must be positive and finite, got {x_step} and {y_step}"
                    )));
                }
                if x1 < x0 || y1 < y0 {
                    return Err(Error::Config("grid ranges must be ascending".into()));
                }
            }
            Grid::Trajectory { path, samples } => {
                if samples < 2 {
                    return Err(Error::Config(format!("trajectory needs at least 2 samples, got {samples}")));
                }
                if !finite(&[path.start.x, path.start.y, path.end.x, path.end.y]) {
                    return Err(Error::Config("trajectory endpoints must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Point> {
        match *self {
            Grid::Rect { x0, x1, y0, y1, x_step, y_step } => {
                let xs = axis(x0, x1, x_step);
                axis(y0, y1, y_step)
                    .into_iter()
                    .flat_map(|y| xs.iter().map(move |&x| Point::new(x, y)))
                    .collect()
            }
            Grid::Trajectory { path, samples } => {
                let len = path.length();
                (0..samples)
                    .map(|k| path.point_at(len * k as f64 / (samples - 1) as f64))
                    .collect()
            }
        }
    }

    /// (columns, rows) for rectangles.
    pub fn dims(&self) -> Option<(usize, usize)> {
        match *self {
            Grid::Rect { x0, x1, y0, y1, x_step, y_step } => {
                Some((axis(x0, x1, x_step).len(), axis(y0, y1, y_step).len()))
            }
            Grid::Trajectory { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Study {
    MuePosition,
    FbsPower(Vec<f64>),
    PowerSplit(Vec<PowerSplit>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub grid: Grid,
    pub study: Study,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        self.grid.validate()?;
        match &self.study {
            Study::MuePosition => Ok(()),
            Study::FbsPower(p) => validate_powers(p),
            Study::PowerSplit(s) => validate_splits(s),
        }
    }
}

fn validate_powers(powers: &[f64]) -> Result<(), Error> {
    if powers.is_empty() {
        return Err(Error::Config("power list is empty".into()));
    }
    if powers.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::Config("FBS powers must be positive".into()));
    }
    if powers.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("FBS powers must be ascending".into()));
    }
    Ok(())
}

fn validate_splits(splits: &[PowerSplit]) -> Result<(), Error> {
    if splits.is_empty() {
        return Err(Error::Config("split list is empty".into()));
    }
    for s in splits {
        s.validate()?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub d_im: f64,
    pub d_if: f64,
    pub report: CoalitionReport,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionResult {
    pub records: Vec<PointRecord>,
    /// For trajectory grids: d_if at the outermost sign change, if any.
    pub d_th: Option<f64>,
    /// For trajectory grids: arc length from the first to the last core point.
    pub diameter: Option<f64>,
    /// d_if at every sign change along a trajectory grid, in path order.
    pub crossings: Vec<f64>,
}

impl RegionResult {
    pub fn region_size(&self) -> usize {
        self.records.iter().filter(|r| r.report.core).count()
    }
}

fn record(base: &Scenario, cb: &Codebook, cfg: &EvalConfig, p: Point) -> Result<PointRecord, Error> {
    let s = base.with_mue(p);
    let d = s.distances();
    Ok(PointRecord {
        x: p.x,
        y: p.y,
        d_im: d.d_im,
        d_if: d.d_if,
        report: evaluate_point(&s, cb, cfg)?,
    })
}

/// Evaluates every grid point with channels held fixed. Output order is grid
/// order; on failure the records preceding the first failing point are
/// returned inside [`Error::PartialSweep`].
pub fn sweep_region(spec: &SweepSpec, base: &Scenario, cb: &Codebook, cfg: &EvalConfig) -> Result<RegionResult, Error> {
    spec.validate()?;
    if spec.study != Study::MuePosition {
        return Err(Error::Config("sweep_region varies the MUE position only".into()));
    }
    let points = spec.grid.points();
    let total = points.len();
    let mut records = Vec::with_capacity(total);
    for r in map_ordered(&points, cfg.execution, |&p| record(base, cb, cfg, p)) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                return Err(Error::PartialSweep {
                    partial: Box::new(RegionResult {
                        records,
                        ..RegionResult::default()
                    }),
                    total,
                    source: Box::new(e),
                })
            }
        }
    }
    let mut result = RegionResult {
        records,
        ..RegionResult::default()
    };
    if let Grid::Trajectory { path, samples } = spec.grid {
        let core: Vec<bool> = result.records.iter().map(|r| r.report.core).collect();
        let spacing = path.length() / (samples - 1) as f64;
        for k in 0..core.len() - 1 {
            if core[k] != core[k + 1] {
                let mid = 0.5 * (result.records[k].d_if + result.records[k + 1].d_if);
                result.crossings.push(mid);
            }
        }
        if !core[0] {
            result.d_th = result.crossings.first().copied();
        }
        if let (Some(first), Some(last)) = (core.iter().position(|&c| c), core.iter().rposition(|&c| c)) {
            result.diameter = Some((last - first) as f64 * spacing);
        }
    }
    Ok(result)
}

/// One end of a bisection bracket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketEnd {
    pub arc: f64,
    pub point: Point,
    pub d_if: f64,
    pub surplus: f64,
    pub core: bool,
}

/// Mechanically checkable evidence for a coordination threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct DthCertificate {
    /// d_if at the midpoint of the final bracket.
    pub d_th: f64,
    /// Cooperative end of the bracket.
    pub inner: BracketEnd,
    /// Competitive end of the bracket.
    pub outer: BracketEnd,
    /// Sign changes found by the scan, as d_if at each bracket midpoint.
    pub crossings: Vec<f64>,
}

impl DthCertificate {
    pub fn width(&self) -> f64 {
        (self.inner.arc - self.outer.arc).abs()
    }
}

struct Probe<'a> {
    base: &'a Scenario,
    cb: &'a Codebook,
    cfg: &'a EvalConfig,
    path: Trajectory,
}

impl Probe<'_> {
    fn at(&self, arc: f64) -> Result<BracketEnd, Error> {
        let point = self.path.point_at(arc);
        let s = self.base.with_mue(point);
        let report = evaluate_point(&s, self.cb, self.cfg)?;
        Ok(BracketEnd {
            arc,
            point,
            d_if: s.distances().d_if,
            surplus: report.surplus,
            core: report.core,
        })
    }

    fn scan(&self, step: f64) -> Result<Vec<BracketEnd>, Error> {
        let arcs = self.path.scan_positions(step);
        map_ordered(&arcs, self.cfg.execution, |&t| self.at(t)).into_iter().collect()
    }

    /// Narrows `[a, b]` (core flags differ) to width ≤ tol.
    fn bisect(&self, mut a: BracketEnd, mut b: BracketEnd, tol: f64) -> Result<(BracketEnd, BracketEnd), Error> {
        while (b.arc - a.arc).abs() > tol {
            let mid = self.at(0.5 * (a.arc + b.arc))?;
            if mid.core == a.core {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((a, b))
    }
}

fn check_scan_params(path: &Trajectory, tol: f64, step: f64) -> Result<(), Error> {
    let len = path.length();
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidTolerance(format!("tolerance must be positive, got {tol}")));
    }
    if tol > len {
        return Err(Error::InvalidTolerance(format!(
            "tolerance {tol} m exceeds trajectory length {len} m"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidTolerance(format!("scan step must be positive, got {step}")));
    }
    Ok(())
}

fn crossing_midpoints(scan: &[BracketEnd]) -> Vec<f64> {
    scan.windows(2)
        .filter(|w| w[0].core != w[1].core)
        .map(|w| 0.5 * (w[0].d_if + w[1].d_if))
        .collect()
}

/// Locates the threshold distance along `path`, which should run from a
/// competitive start toward the FBS.
///
/// The path is scanned at `scan_step` resolution and the sign change nearest
/// the start (the outermost) is bisected down to `tol`.
pub fn find_dth(
    base: &Scenario,
    cb: &Codebook,
    cfg: &EvalConfig,
    path: Trajectory,
    tol: f64,
    scan_step: f64,
) -> Result<DthCertificate, Error> {
    check_scan_params(&path, tol, scan_step)?;
    let probe = Probe { base, cb, cfg, path };
    let scan = probe.scan(scan_step)?;
    let (first, last) = (scan[0], scan[scan.len() - 1]);
    if first.core {
        return Err(Error::NoBracket(format!(
            "trajectory start ({}, {}) already cooperates (surplus {:e})",
            first.point.x, first.point.y, first.surplus
        )));
    }
    if !last.core {
        return Err(Error::NoBracket(format!(
            "surplus {:e} < 0 at trajectory end ({}, {}), d_if = {} m; no cooperation found near the FBS \
             (falsification candidate for the threshold claim under this configuration)",
            last.surplus, last.point.x, last.point.y, last.d_if
        )));
    }
    let k = scan.windows(2).position(|w| w[0].core != w[1].core).expect("start and end differ");
    let (outer, inner) = probe.bisect(scan[k], scan[k + 1], tol)?;
    let mid = path.point_at(0.5 * (outer.arc + inner.arc));
    Ok(DthCertificate {
        d_th: base.with_mue(mid).distances().d_if,
        inner,
        outer,
        crossings: crossing_midpoints(&scan),
    })
}

/// Entry and exit of the cooperative region along a path, by arc length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSpan {
    pub entry: f64,
    pub exit: f64,
}

impl RegionSpan {
    pub fn diameter(&self) -> f64 {
        self.exit - self.entry
    }
}

/// The outermost entry and exit of the cooperative region along `path`,
/// each refined to `tol`. `None` when no scanned point cooperates.
pub fn region_span(
    base: &Scenario,
    cb: &Codebook,
    cfg: &EvalConfig,
    path: Trajectory,
    tol: f64,
    scan_step: f64,
) -> Result<Option<RegionSpan>, Error> {
    check_scan_params(&path, tol, scan_step)?;
    let probe = Probe { base, cb, cfg, path };
    let scan = probe.scan(scan_step)?;
    let (Some(first), Some(last)) = (scan.iter().position(|e| e.core), scan.iter().rposition(|e| e.core)) else {
        return Ok(None);
    };
    let mid = |a: &BracketEnd, b: &BracketEnd| 0.5 * (a.arc + b.arc);
    let entry = if first == 0 {
        scan[0].arc
    } else {
        let (a, b) = probe.bisect(scan[first - 1], scan[first], tol)?;
        mid(&a, &b)
    };
    let exit = if last == scan.len() - 1 {
        scan[last].arc
    } else {
        let (a, b) = probe.bisect(scan[last], scan[last + 1], tol)?;
        mid(&a, &b)
    };
    Ok(Some(RegionSpan { entry, exit }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StudyValue {
    Power(f64),
    Split(PowerSplit),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyPoint {
    pub value: StudyValue,
    pub span: Option<RegionSpan>,
}

impl StudyPoint {
    /// Zero when the path never enters the region.
    pub fn diameter(&self) -> f64 {
        self.span.map_or(0.0, |s| s.diameter())
    }
}

/// Region diameter along `path` for each FBS power; codebooks are rebuilt at
/// each budget.
pub fn power_sweep(
    base: &Scenario,
    powers: &[f64],
    cfg: &EvalConfig,
    path: Trajectory,
    tol: f64,
    scan_step: f64,
) -> Result<Vec<StudyPoint>, Error> {
    validate_powers(powers)?;
    powers
        .iter()
        .map(|&p| {
            let s = base.with_fbs_power(p)?;
            let cb = cfg.build_codebook(&s)?;
            Ok(StudyPoint {
                value: StudyValue::Power(p),
                span: region_span(&s, &cb, cfg, path, tol, scan_step)?,
            })
        })
        .collect()
}

/// Region diameter along `path` for each coordinated power split.
pub fn split_sweep(
    base: &Scenario,
    splits: &[PowerSplit],
    cfg: &EvalConfig,
    path: Trajectory,
    tol: f64,
    scan_step: f64,
) -> Result<Vec<StudyPoint>, Error> {
    validate_splits(splits)?;
    splits
        .iter()
        .map(|&split| {
            let local = EvalConfig { split, ..*cfg };
            let cb = local.build_codebook(base)?;
            Ok(StudyPoint {
                value: StudyValue::Split(split),
                span: region_span(base, &cb, &local, path, tol, scan_step)?,
            })
        })
        .collect()
}
