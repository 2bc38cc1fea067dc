use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::scenario::{Scenario, DEFAULT_ALPHA, DEFAULT_D_MIN};

use super::sweep::{Grid, RegionResult, StudyPoint, StudyValue};
use super::{Error, EvalConfig};

pub const REGION_HEADER: [&str; 11] = [
    "x", "y", "d_im", "d_if", "v_mbs", "v_fbs", "v_grand", "surplus", "core", "c_min", "c_max",
];

/// Context echoed into meta.txt.
#[derive(Clone, Debug)]
pub struct RunInfo<'a> {
    pub command: &'a str,
    pub scenario: &'a Scenario,
    pub cfg: &'a EvalConfig,
    /// (macro uncoordinated, femto uncoordinated, macro coordinated, femto coordinated)
    pub codebook_sizes: [usize; 4],
    pub codebook_file: Option<&'a Path>,
    /// Additional `key = value` lines.
    pub extra: Vec<(String, String)>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// region.csv as a string; `core` is written as 1/0.
pub fn region_csv(r: &RegionResult) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REGION_HEADER)?;
    for rec in &r.records {
        let rep = &rec.report;
        w.write_record([
            rec.x.to_string(),
            rec.y.to_string(),
            rec.d_im.to_string(),
            rec.d_if.to_string(),
            rep.v_mbs.to_string(),
            rep.v_fbs.to_string(),
            rep.v_grand.to_string(),
            rep.surplus.to_string(),
            u8::from(rep.core).to_string(),
            rep.interval.c_min.to_string(),
            rep.interval.c_max.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn meta_text(info: &RunInfo<'_>) -> String {
    let s = info.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "tool = comp-region {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {}", info.command);
    let flag = |is_default: bool| if is_default { " (default)" } else { "" };
    let _ = writeln!(out, "alpha = {}{}", s.geometry.alpha, flag(s.geometry.alpha == DEFAULT_ALPHA));
    let _ = writeln!(out, "d_min = {}{}", s.geometry.d_min, flag(s.geometry.d_min == DEFAULT_D_MIN));
    match &s.channels_file {
        Some(p) => {
            let _ = writeln!(out, "fading = channels file {}", p.display());
        }
        None => {
            let _ = writeln!(out, "fading = iid CN(0,1), ChaCha8 seed {} (default)", s.seed);
        }
    }
    let _ = writeln!(out, "seed = {}", s.seed);
    let [mu, fu, mc, fc] = info.codebook_sizes;
    let _ = writeln!(
        out,
        "codebook_sizes = macro_uncoord {mu}, femto_uncoord {fu}, macro_coord {mc}, femto_coord {fc}"
    );
    match info.codebook_file {
        Some(p) => {
            let _ = writeln!(out, "codebook = file {}", p.display());
        }
        None => {
            let _ = writeln!(out, "codebook = generated, size {}", info.cfg.codebook_size);
        }
    }
    let _ = writeln!(out, "power_split = {}:{}", info.cfg.split.mue, info.cfg.split.fue);
    let _ = writeln!(out, "ce_mode = {}", info.cfg.ce_mode.as_str());
    let _ = writeln!(out, "payment_policy = {}", info.cfg.policy.as_str());
    for (k, v) in &info.extra {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("\n[scenario]\n");
    out.push_str(&s.to_config_string());
    out
}

fn region_plot(grid: &Grid) -> String {
    let mut gp = String::from(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,700\n\
         set output 'region.png'\n\
         set key outside\n",
    );
    match grid.dims() {
        Some((nx, ny)) => {
            let _ = write!(
                gp,
                "set xlabel 'x [m]'\n\
                 set ylabel 'y [m]'\n\
                 set cblabel 'surplus [bit/s/Hz]'\n\
                 set palette defined (-1 'blue', 0 'white', 1 'red')\n\
                 set dgrid3d {ny},{nx}\n\
                 set contour base\n\
                 set cntrparam levels discrete 0\n\
                 unset surface\n\
                 set table 'boundary.dat'\n\
                 splot 'region.csv' skip 1 using 1:2:8\n\
                 unset table\n\
                 unset dgrid3d\n\
                 plot 'region.csv' skip 1 using 1:2:8 with image title 'surplus', \\\n\
                 \x20    'boundary.dat' using 1:2 with lines lc rgb 'black' lw 2 title 'region boundary'\n"
            );
        }
        None => {
            gp.push_str(
                "set xlabel 'MUE-FBS distance d_if [m]'\n\
                 set ylabel 'surplus [bit/s/Hz]'\n\
                 plot 'region.csv' skip 1 using 4:8 with linespoints pt 7 ps 0.4 title 'surplus', \\\n\
                 \x20    0 with lines dt 2 lc rgb 'black' title 'core boundary'\n",
            );
        }
    }
    gp
}

/// Writes region.csv, meta.txt and plot.gp into `dir`.
pub fn emit_outputs(r: &RegionResult, grid: &Grid, info: &RunInfo<'_>, dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("region.csv");
    let body = region_csv(r).map_err(|e| csv_err(&csv_path, e))?;
    fs::write(&csv_path, body).map_err(io_err(&csv_path))?;

    let mut info = info.clone();
    info.extra.push(("points".into(), r.records.len().to_string()));
    info.extra.push(("region_points".into(), r.region_size().to_string()));
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    info.extra.push(("d_th".into(), opt(r.d_th)));
    info.extra.push(("diameter".into(), opt(r.diameter)));
    info.extra.push(("crossings_d_if".into(), format!("{:?}", r.crossings)));
    let meta_path = dir.join("meta.txt");
    fs::write(&meta_path, meta_text(&info)).map_err(io_err(&meta_path))?;

    let plot_path = dir.join("plot.gp");
    fs::write(&plot_path, region_plot(grid)).map_err(io_err(&plot_path))
}

/// Writes diameters.csv, meta.txt and plot.gp for a power or split study.
pub fn emit_study_outputs(points: &[StudyPoint], info: &RunInfo<'_>, dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("diameters.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| csv_err(&csv_path, e);
    w.write_record(["p_fbs", "a", "b", "entry", "exit", "diameter"]).map_err(wrap)?;
    for p in points {
        let (power, a, b) = match p.value {
            StudyValue::Power(x) => (x.to_string(), String::new(), String::new()),
            StudyValue::Split(s) => (info.scenario.p_fbs.to_string(), s.mue.to_string(), s.fue.to_string()),
        };
        let (entry, exit) = p
            .span
            .map_or((String::new(), String::new()), |s| (s.entry.to_string(), s.exit.to_string()));
        w.write_record([power, a, b, entry, exit, p.diameter().to_string()]).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(&csv_path, e.into_error().into()))?;
    fs::write(&csv_path, bytes).map_err(io_err(&csv_path))?;

    let meta_path = dir.join("meta.txt");
    fs::write(&meta_path, meta_text(info)).map_err(io_err(&meta_path))?;

    let is_power = matches!(points.first().map(|p| p.value), Some(StudyValue::Power(_)));
    let (col, label, logscale) = if is_power {
        (1, "FBS power [W]", "set logscale x 2\n")
    } else {
        (2, "power fraction a toward the MUE", "")
    };
    let plot = format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output 'diameters.png'\n\
         {logscale}set xlabel '{label}'\n\
         set ylabel 'region diameter [m]'\n\
         plot 'diameters.csv' skip 1 using {col}:6 with linespoints pt 7 notitle\n"
    );
    let plot_path = dir.join("plot.gp");
    fs::write(&plot_path, plot).map_err(io_err(&plot_path))
}
