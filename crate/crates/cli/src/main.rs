use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use comp_core::codebook::load_precoder_file;
use comp_core::equilibrium::{assemble_game, solve_mesr_ce, write_game_dump};
use comp_core::harness::{
    emit_outputs, emit_study_outputs, find_dth, power_sweep, split_sweep, sweep_region, Error,
    Grid, RunInfo, Study, StudyPoint, StudyValue, SweepSpec, Trajectory, DEFAULT_SCAN_STEP,
};
use comp_core::parallel::with_jobs;
use comp_core::scenario::load_scenario;
use comp_core::{
    CeMode, Codebook, EvalConfig, Execution, GameMode, PaymentPolicy, Point, PowerSplit, Scenario,
};

/// Competition or cooperation between a macro and a femto base station.
#[derive(Parser, Debug)]
#[command(name = "comp-region", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Override the scenario's fading seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = CeArg::Ce)]
    ce_mode: CeArg,
    /// Generated precoders per base station and mode.
    #[arg(long, global = true)]
    codebook_size: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Explicit precoders instead of the generated codebook.
    #[arg(long, global = true, value_name = "FILE")]
    codebook: Option<PathBuf>,
    /// Coordinated FBS power fractions toward the MUE and the FUE.
    #[arg(long, global = true, value_name = "A:B", value_parser = parse_split)]
    split: Option<PowerSplit>,
    #[arg(long, global = true, value_enum, default_value_t = PolicyArg::Midpoint)]
    policy: PolicyArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CeArg {
    Ce,
    Coarse,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Midpoint,
    MacroFloor,
    FemtoFloor,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Both games and the coalition verdict at one MUE position.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_name = "X,Y", value_parser = parse_point)]
        mue: Option<Point>,
        /// Write payoff tables and equilibrium distributions here.
        #[arg(long, value_name = "DIR")]
        dump: Option<PathBuf>,
    },
    /// Evaluate every MUE position of a rectangular grid.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_name = "X0:X1:STEP,Y0:Y1:STEP", value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Coordination threshold along a straight MUE trajectory.
    Dth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Region diameter for each FBS transmit power.
    PowerSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_name = "P1,P2,...", value_delimiter = ',', required = true)]
        powers: Vec<f64>,
        #[command(flatten)]
        path: StudyPathArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Region diameter for each coordinated power split.
    SplitSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_name = "A1:B1,A2:B2,...", value_delimiter = ',', value_parser = parse_split, required = true)]
        splits: Vec<PowerSplit>,
        #[command(flatten)]
        path: StudyPathArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PathArgs {
    #[arg(long, value_name = "X,Y", value_parser = parse_point)]
    from: Point,
    #[arg(long, value_name = "X,Y", value_parser = parse_point)]
    to: Point,
    /// Final bracket width in meters.
    #[arg(long, value_name = "M")]
    tol: f64,
    /// Coarse scan spacing in meters before bisection.
    #[arg(long, value_name = "M", default_value_t = DEFAULT_SCAN_STEP)]
    step: f64,
}

#[derive(Args, Debug)]
struct StudyPathArgs {
    #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "0,0")]
    from: Point,
    #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "2000,0")]
    to: Point,
    #[arg(long, value_name = "M", default_value_t = 0.5)]
    tol: f64,
    #[arg(long, value_name = "M", default_value_t = 2.0)]
    step: f64,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    match s.split(',').collect::<Vec<_>>()[..] {
        [x, y] => Ok(Point::new(parse_f64(x)?, parse_f64(y)?)),
        _ => Err(format!("expected X,Y, got {s:?}")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64, f64), String> {
    match s.split(':').collect::<Vec<_>>()[..] {
        [lo, hi, step] => Ok((parse_f64(lo)?, parse_f64(hi)?, parse_f64(step)?)),
        _ => Err(format!("expected LO:HI:STEP, got {s:?}")),
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected X0:X1:STEP,Y0:Y1:STEP, got {s:?}"))?;
    let ((x0, x1, x_step), (y0, y1, y_step)) = (parse_range(x)?, parse_range(y)?);
    let grid = Grid::Rect {
        x0,
        x1,
        y0,
        y1,
        x_step,
        y_step,
    };
    grid.validate().map_err(|e| e.to_string())?;
    Ok(grid)
}

fn parse_split(s: &str) -> Result<PowerSplit, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected A:B, got {s:?}"))?;
    PowerSplit::new(parse_f64(a)?, parse_f64(b)?).map_err(|e| e.to_string())
}

struct Setup {
    scenario: Scenario,
    cfg: EvalConfig,
}

impl Setup {
    fn new(global: &Global, config: Option<&Path>) -> Result<Self, Error> {
        let mut scenario = match config {
            Some(p) => load_scenario(p)?,
            None => Scenario::default(),
        };
        if let Some(seed) = global.seed {
            scenario = scenario.with_seed(seed);
        }
        let mut cfg = EvalConfig {
            ce_mode: match global.ce_mode {
                CeArg::Ce => CeMode::Correlated,
                CeArg::Coarse => CeMode::Coarse,
            },
            policy: match global.policy {
                PolicyArg::Midpoint => PaymentPolicy::Midpoint,
                PolicyArg::MacroFloor => PaymentPolicy::MacroFloor,
                PolicyArg::FemtoFloor => PaymentPolicy::FemtoFloor,
            },
            ..EvalConfig::default()
        };
        if let Some(k) = global.codebook_size {
            cfg.codebook_size = k;
        }
        if let Some(split) = global.split {
            cfg.split = split;
        }
        if global.jobs == Some(1) {
            cfg.execution = Execution::Sequential;
        }
        Ok(Self { scenario, cfg })
    }

    fn codebook(&self, file: Option<&Path>) -> Result<Codebook, Error> {
        match file {
            Some(p) => Ok(load_precoder_file(p, &self.scenario)?),
            None => self.cfg.build_codebook(&self.scenario),
        }
    }

    fn info<'a>(
        &'a self,
        command: &'a str,
        cb_sizes: [usize; 4],
        file: Option<&'a Path>,
    ) -> RunInfo<'a> {
        RunInfo {
            command,
            scenario: &self.scenario,
            cfg: &self.cfg,
            codebook_sizes: cb_sizes,
            codebook_file: file,
            extra: Vec::new(),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let g = &cli.global;
    let cb_file = g.codebook.as_deref();
    match &cli.command {
        Command::Evaluate { config, mue, dump } => {
            let mut setup = Setup::new(g, config.as_deref())?;
            if let Some(p) = mue {
                setup.scenario = setup.scenario.with_mue(*p);
            }
            let cb = setup.codebook(cb_file)?;
            evaluate(&setup, &cb, dump.as_deref())
        }
        Command::Sweep { config, grid, out } => {
            let setup = Setup::new(g, config.as_deref())?;
            let cb = setup.codebook(cb_file)?;
            let spec = SweepSpec {
                grid: *grid,
                study: Study::MuePosition,
            };
            let info = setup.info("sweep", cb.sizes(), cb_file);
            let result = match sweep_region(&spec, &setup.scenario, &cb, &setup.cfg) {
                Ok(r) => r,
                Err(Error::PartialSweep {
                    partial,
                    total,
                    source,
                }) => {
                    emit_outputs(&partial, grid, &info, out)?;
                    eprintln!(
                        "wrote {} of {total} points to {}",
                        partial.records.len(),
                        out.display()
                    );
                    return Err(Error::PartialSweep {
                        partial,
                        total,
                        source,
                    });
                }
                Err(e) => return Err(e),
            };
            emit_outputs(&result, grid, &info, out)?;
            let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
            println!("points = {}", result.records.len());
            println!("region_points = {}", result.region_size());
            println!("d_th = {}", opt(result.d_th));
            println!("diameter = {}", opt(result.diameter));
            Ok(())
        }
        Command::Dth { config, path } => {
            let setup = Setup::new(g, config.as_deref())?;
            let cb = setup.codebook(cb_file)?;
            let traj = Trajectory::new(path.from, path.to);
            let cert = find_dth(&setup.scenario, &cb, &setup.cfg, traj, path.tol, path.step)?;
            println!("d_th = {}", cert.d_th);
            println!("bracket_width = {}", cert.width());
            for (name, end) in [("inner", &cert.inner), ("outer", &cert.outer)] {
                println!(
                    "{name} = ({}, {}) d_if {} surplus {} core {}",
                    end.point.x, end.point.y, end.d_if, end.surplus, end.core
                );
            }
            println!("crossings_d_if = {:?}", cert.crossings);
            Ok(())
        }
        Command::PowerSweep {
            config,
            powers,
            path,
            out,
        } => {
            reject_codebook_file(cb_file)?;
            let setup = Setup::new(g, config.as_deref())?;
            let traj = Trajectory::new(path.from, path.to);
            let pts = power_sweep(
                &setup.scenario,
                powers,
                &setup.cfg,
                traj,
                path.tol,
                path.step,
            )?;
            study_outputs(&setup, "power-sweep", &pts, path, out)
        }
        Command::SplitSweep {
            config,
            splits,
            path,
            out,
        } => {
            reject_codebook_file(cb_file)?;
            let setup = Setup::new(g, config.as_deref())?;
            let traj = Trajectory::new(path.from, path.to);
            let pts = split_sweep(
                &setup.scenario,
                splits,
                &setup.cfg,
                traj,
                path.tol,
                path.step,
            )?;
            study_outputs(&setup, "split-sweep", &pts, path, out)
        }
    }
}

fn reject_codebook_file(file: Option<&Path>) -> Result<(), Error> {
    match file {
        // Studies rebuild the codebook per value, so a fixed file cannot apply.
        Some(_) => Err(Error::Config(
            "--codebook cannot be combined with power or split studies".into(),
        )),
        None => Ok(()),
    }
}

fn evaluate(setup: &Setup, cb: &Codebook, dump: Option<&Path>) -> Result<(), Error> {
    let s = &setup.scenario;
    let at = |source| Error::AtPoint {
        x: s.geometry.mue.x,
        y: s.geometry.mue.y,
        source,
    };
    let mut reports = Vec::new();
    for (mode, name) in [
        (GameMode::Uncoordinated, "uncoordinated"),
        (GameMode::Coordinated, "coordinated"),
    ] {
        let table = assemble_game(s, cb, mode, Execution::Sequential).map_err(at)?;
        let report = solve_mesr_ce(&table, setup.cfg.ce_mode).map_err(at)?;
        if let Some(dir) = dump {
            let sub = dir.join(name);
            write_game_dump(&sub, &table, &report)
                .map_err(|source| Error::Io { path: sub, source })?;
        }
        reports.push(report);
    }
    let rep =
        comp_core::CoalitionReport::from_equilibria(&reports[0], &reports[1], setup.cfg.policy);
    let d = s.distances();
    println!("mue = ({}, {})", s.geometry.mue.x, s.geometry.mue.y);
    println!("d_im = {}", d.d_im);
    println!("d_if = {}", d.d_if);
    println!("v_mbs = {}", rep.v_mbs);
    println!("v_fbs = {}", rep.v_fbs);
    println!("v_grand = {}", rep.v_grand);
    println!("surplus = {}", rep.surplus);
    println!("core = {}", rep.core);
    println!("c_min = {}", rep.interval.c_min);
    println!("c_max = {}", rep.interval.c_max);
    if let Some(a) = rep.allocation {
        println!("payment = {}", a.payment);
        println!("u_macro = {}", a.u_macro);
        println!("u_femto = {}", a.u_femto);
    }
    Ok(())
}

fn study_outputs(
    setup: &Setup,
    command: &str,
    pts: &[StudyPoint],
    path: &StudyPathArgs,
    out: &Path,
) -> Result<(), Error> {
    // Sizes do not depend on the power or split under study.
    let sizes = setup.cfg.build_codebook(&setup.scenario)?.sizes();
    let mut info = setup.info(command, sizes, None);
    info.extra.push((
        "trajectory".into(),
        format!(
            "({}, {}) -> ({}, {})",
            path.from.x, path.from.y, path.to.x, path.to.y
        ),
    ));
    info.extra.push(("tol".into(), path.tol.to_string()));
    info.extra.push(("scan_step".into(), path.step.to_string()));
    emit_study_outputs(pts, &info, out)?;
    for p in pts {
        match p.value {
            StudyValue::Power(w) => println!("p_fbs {w}: diameter {}", p.diameter()),
            StudyValue::Split(sp) => {
                println!("split {}:{}: diameter {}", sp.mue, sp.fue, p.diameter())
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_jobs(cli.global.jobs, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
