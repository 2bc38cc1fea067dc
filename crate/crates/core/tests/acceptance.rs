//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` still print FAIL with their evidence but do
//! not fail the run; set `ACCEPTANCE_STRICT=1` to make every failure fatal.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use comp_core::coalition::{payment_interval, CoalitionReport, PaymentPolicy};
use comp_core::equilibrium::{solve_mesr_ce, CeMode};
use comp_core::harness::{
    emit_outputs, evaluate_at, find_dth, power_sweep, split_sweep, sweep_region, Grid, RunInfo, Study, SweepSpec,
    Trajectory,
};
use comp_core::numerics::hermitian_logdet;
use comp_core::rates::{LinkGains, RateModel};
use comp_core::scenario::{draw_channels, load_scenario, path_loss_amplitude, write_channels_file, ChannelSet};
use comp_core::{Codebook, EvalConfig, Execution, Point, PowerSplit, Precoder, Scenario};
use common::{ce_violation, cofactor_det, pure_nash, random_hpd, random_matrix, random_table, rng, vertex_optimum};
use rand::Rng;

const RATE_TOL: f64 = 1e-9;
const LADDER: [f64; 5] = [5.0, 20.0, 80.0, 300.0, 1200.0];
/// Each diameter end is bisected to 0.5 m, so two diameters can disagree by
/// up to 1 m without either being wrong.
const DIAMETER_SLACK: f64 = 1.0;
const TREND_SHARE: f64 = 0.8;
const STUDY_TOL: f64 = 0.5;
const STUDY_STEP: f64 = 2.0;

/// (criterion, reason) pairs expected to fail; see the decisions ledger.
const KNOWN_RED: [(u32, &str); 1] = [(
    8,
    "split diameters peak at a ≈ 0.3–0.5 instead of falling monotonically in a",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn draw(seed: u64) -> (ChannelSet, Precoder, Precoder) {
    let mut r = rng(seed);
    let channels = draw_channels(seed, 4, 2);
    let vm = Precoder::new(random_matrix(&mut r, 4, 2));
    let vf = Precoder::new(random_matrix(&mut r, 4, 2).scale(0.5));
    (channels, vm, vf)
}

fn gains(d_im: f64, d_if: f64) -> LinkGains {
    LinkGains {
        im: path_loss_amplitude(d_im, 1.5),
        if_: path_loss_amplitude(d_if, 1.5),
        jm: path_loss_amplitude(1000.0, 1.5),
        jf: path_loss_amplitude(10.0, 1.5),
    }
}

fn prop2() -> Outcome {
    let mut bad = 0;
    for seed in 0..100u64 {
        let (h, vm, vf) = draw(seed);
        let fixed = 10.0 + 13.7 * seed as f64;
        let rate = |d_im: f64, d_if: f64| RateModel::with_gains(&h, gains(d_im, d_if), 1e-4).uncoord_macro(&vm, &vf).unwrap();
        for w in LADDER.windows(2) {
            if rate(w[1], fixed) > rate(w[0], fixed) + RATE_TOL || rate(fixed, w[1]) < rate(fixed, w[0]) - RATE_TOL {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad} monotonicity violations over 100 draws × 4 ladder steps × 2 distances"))
}

fn prop3() -> Outcome {
    let mut bad = 0;
    let mut equality_gap: f64 = 0.0;
    for seed in 0..100u64 {
        let (h, vm, vif) = draw(1000 + seed);
        let fixed = 10.0 + 13.7 * seed as f64;
        let model = |d_im: f64, d_if: f64| RateModel::with_gains(&h, gains(d_im, d_if), 1e-4);
        for w in LADDER.windows(2) {
            let near_f = model(fixed, w[0]).coord_macro(&vm, &vif).unwrap();
            let far_f = model(fixed, w[1]).coord_macro(&vm, &vif).unwrap();
            let near_m = model(w[0], fixed).coord_macro(&vm, &vif).unwrap();
            let far_m = model(w[1], fixed).coord_macro(&vm, &vif).unwrap();
            let floor = model(w[0], fixed).coord_macro_floor(&vif).unwrap();
            if near_f < far_f - RATE_TOL || near_m < far_m - RATE_TOL || near_m < floor - RATE_TOL {
                bad += 1;
            }
        }
        let m = model(fixed, fixed);
        let zero = Precoder::zeros(4, 2);
        equality_gap = equality_gap.max((m.coord_macro(&zero, &vif).unwrap() - m.coord_macro_floor(&vif).unwrap()).abs());
    }
    outcome(
        bad == 0 && equality_gap <= RATE_TOL,
        format!("{bad} bound/monotonicity violations; max |rate − bound| at v_m = 0 is {equality_gap:e}"),
    )
}

fn ce_validity() -> Outcome {
    let mut r = rng(30);
    let (mut worst_ce, mut worst_sum): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let (nm, nf) = (r.random_range(1..=6), r.random_range(1..=6));
        let t = random_table(&mut r, nm, nf);
        let rep = solve_mesr_ce(&t, CeMode::Correlated).unwrap();
        let p = rep.distribution.probabilities();
        worst_ce = worst_ce.max(ce_violation(&t, p, CeMode::Correlated));
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst_ce <= 1e-8 && worst_sum <= 1e-9,
        format!("200 games: max incentive violation {worst_ce:e}, max |Σp − 1| {worst_sum:e}"),
    )
}

fn ce_optimality() -> Outcome {
    let mut r = rng(31);
    let (mut worst, mut ne_bad, mut with_ne) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let (nm, nf) = (r.random_range(1..=3), r.random_range(1..=3));
        let t = random_table(&mut r, nm, nf);
        let lp = solve_mesr_ce(&t, CeMode::Correlated).unwrap().expected_sum;
        worst = worst.max((lp - vertex_optimum(&t, CeMode::Correlated)).abs());
        let ne = pure_nash(&t);
        if !ne.is_empty() {
            with_ne += 1;
        }
        if ne.iter().any(|&(i, j)| lp < t.get(i, j).sum() - 1e-9) {
            ne_bad += 1;
        }
    }
    outcome(
        worst <= 1e-9 && ne_bad == 0,
        format!("50 games: max |LP − vertex optimum| {worst:e}; {ne_bad} of {with_ne} games with a pure NE beat the LP"),
    )
}

fn prop1() -> Outcome {
    let mut r = rng(32);
    let mut bad = 0;
    for _ in 0..500 {
        let [v_m, v_f, c_m, c_f]: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..20.0));
        let core = CoalitionReport::from_values(v_m, v_f, c_m, c_f, PaymentPolicy::Midpoint).core;
        let interval = !payment_interval(v_m, v_f, c_m, c_f).is_empty();
        // Smallest payment keeping the FBS rational, then test the MBS there.
        let c = v_f - c_f;
        let rational = c_m - c >= v_m - 1e-9;
        if core != interval || core != rational {
            bad += 1;
        }
        for policy in [PaymentPolicy::Midpoint, PaymentPolicy::MacroFloor, PaymentPolicy::FemtoFloor] {
            let rep = CoalitionReport::from_values(v_m, v_f, c_m, c_f, policy);
            if let Some(a) = rep.allocation {
                let total = c_m + c_f;
                if (a.u_macro + a.u_femto - total).abs() > 4.0 * f64::EPSILON * total {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{bad} disagreements over 500 tuples (core / interval / rationality / balance)"))
}

fn theorem1() -> Outcome {
    let path = Trajectory::new(Point::new(-2000.0, 0.0), Point::new(1000.0, 0.0));
    let cfg = EvalConfig::default();
    let (mut certified, mut far_bad) = (0, 0);
    let mut notes = Vec::new();
    for seed in 1..=10u64 {
        let s = Scenario::default().with_seed(seed);
        let cb = cfg.build_codebook(&s).unwrap();
        match find_dth(&s, &cb, &cfg, path, 0.5, 5.0) {
            Ok(cert) => {
                // Re-evaluate both bracket ends rather than trusting the certificate.
                let inner = evaluate_at(&s, &cb, &cfg, cert.inner.point).unwrap();
                let outer = evaluate_at(&s, &cb, &cfg, cert.outer.point).unwrap();
                if inner.core && !outer.core && cert.width() <= 0.5 {
                    certified += 1;
                    notes.push(format!("{seed}:{:.1}", cert.d_th));
                }
            }
            Err(e) => notes.push(format!("{seed}:{e}")),
        }
        let far = (0..=84).map(|k| -2000.0 + 25.0 * k as f64);
        if far.map(|x| evaluate_at(&s, &cb, &cfg, Point::new(x, 0.0)).unwrap()).any(|r| r.surplus >= 0.0) {
            far_bad += 1;
        }
    }
    outcome(
        certified >= 9 && far_bad == 0,
        format!(
            "{certified}/10 seeds certified, d_th by seed [{}] m; {far_bad} seeds with surplus ≥ 0 at x ≤ 100",
            notes.join(", ")
        ),
    )
}

fn study_path() -> Trajectory {
    Trajectory::new(Point::new(0.0, 0.0), Point::new(2000.0, 0.0))
}

/// Per seed: the share of adjacent pairs moving the right way must reach 80%.
fn trend(diameters: &[Vec<f64>], increasing: bool) -> Outcome {
    let mut seeds_ok = 0;
    let mut rows = Vec::new();
    for d in diameters {
        let good = d
            .windows(2)
            .filter(|w| if increasing { w[1] >= w[0] - DIAMETER_SLACK } else { w[1] <= w[0] + DIAMETER_SLACK })
            .count();
        if good as f64 >= TREND_SHARE * (d.len() - 1) as f64 {
            seeds_ok += 1;
        }
        rows.push(format!("{:?}", d));
    }
    outcome(seeds_ok == diameters.len(), format!("{seeds_ok}/{} seeds on trend; diameters {}", diameters.len(), rows.join(" ")))
}

fn power_trend() -> Outcome {
    let cfg = EvalConfig::default();
    let powers = [0.25, 0.5, 1.0, 2.0, 4.0];
    let d: Vec<Vec<f64>> = (1..=5u64)
        .map(|seed| {
            let s = Scenario::default().with_seed(seed);
            power_sweep(&s, &powers, &cfg, study_path(), STUDY_TOL, STUDY_STEP)
                .unwrap()
                .iter()
                .map(|p| p.diameter())
                .collect()
        })
        .collect();
    trend(&d, true)
}

fn split_trend() -> Outcome {
    let cfg = EvalConfig::default();
    let splits: Vec<PowerSplit> = [(0.1, 0.9), (0.3, 0.7), (0.5, 0.5), (0.7, 0.3)]
        .iter()
        .map(|&(a, b)| PowerSplit::new(a, b).unwrap())
        .collect();
    let d: Vec<Vec<f64>> = (1..=5u64)
        .map(|seed| {
            let s = Scenario::default().with_seed(seed);
            split_sweep(&s, &splits, &cfg, study_path(), STUDY_TOL, STUDY_STEP)
                .unwrap()
                .iter()
                .map(|p| p.diameter())
                .collect()
        })
        .collect();
    trend(&d, false)
}

fn fixed_channel_scenario(dir: &std::path::Path) -> Scenario {
    write_channels_file(&dir.join("channels.csv"), &draw_channels(4, 4, 2)).unwrap();
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, "channels_file = \"channels.csv\"\n").unwrap();
    load_scenario(&cfg).unwrap()
}

fn symmetry() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let s = fixed_channel_scenario(dir.path());
    let cfg = EvalConfig::default();
    let cb = cfg.build_codebook(&s).unwrap();
    let spec = SweepSpec {
        grid: Grid::Rect { x0: 900.0, x1: 1100.0, y0: -50.0, y1: 50.0, x_step: 10.0, y_step: 10.0 },
        study: Study::MuePosition,
    };
    let r = sweep_region(&spec, &s, &cb, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for a in &r.records {
        let b = r.records.iter().find(|b| b.x == a.x && b.y == -a.y).expect("grid is mirrored");
        worst = worst.max((a.report.surplus - b.report.surplus).abs());
        pairs += 1;
    }
    outcome(worst <= 1e-9, format!("{pairs} mirrored pairs, max |Δ surplus| {worst:e}"))
}

fn numerics() -> Outcome {
    let mut r = rng(33);
    let mut logdet_err: f64 = 0.0;
    for _ in 0..100 {
        let m = random_hpd(&mut r, 4, 0.5);
        logdet_err = logdet_err.max((hermitian_logdet(&m).unwrap() - cofactor_det(&m).re.log2()).abs());
    }

    let mut bd: f64 = 0.0;
    for seed in 1..=10u64 {
        let s = Scenario::default().with_seed(seed);
        let cb = Codebook::build(&s, 4, PowerSplit::default()).unwrap();
        for act in &cb.femto_coord {
            bd = bd.max(act.bd_residual(&s));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let s = fixed_channel_scenario(dir.path());
    let grid = Grid::Rect { x0: 950.0, x1: 1050.0, y0: -20.0, y1: 20.0, x_step: 10.0, y_step: 10.0 };
    let spec = SweepSpec { grid, study: Study::MuePosition };
    let mut outputs = Vec::new();
    for execution in [Execution::Parallel, Execution::Parallel, Execution::Sequential] {
        let cfg = EvalConfig { execution, ..EvalConfig::default() };
        let cb = cfg.build_codebook(&s).unwrap();
        let res = sweep_region(&spec, &s, &cb, &cfg).unwrap();
        let out = dir.path().join(format!("run{}", outputs.len()));
        let info = RunInfo {
            command: "sweep",
            scenario: &s,
            cfg: &cfg,
            codebook_sizes: cb.sizes(),
            codebook_file: None,
            extra: Vec::new(),
        };
        emit_outputs(&res, &grid, &info, &out).unwrap();
        let files: Vec<Vec<u8>> = ["region.csv", "meta.txt", "plot.gp"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
        outputs.push(files);
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        logdet_err <= 1e-9 && bd <= 1e-8 && identical,
        format!("log-det err {logdet_err:e}; max BD residual {bd:e}; reruns byte-identical: {identical}"),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u32, Duration, fn() -> Outcome); 10] = [
        (1, Duration::from_secs(5), prop2),
        (2, Duration::from_secs(5), prop3),
        (3, Duration::from_secs(30), ce_validity),
        (4, Duration::from_secs(60), ce_optimality),
        (5, Duration::from_secs(1), prop1),
        (6, Duration::from_secs(120), theorem1),
        (7, Duration::from_secs(300), power_trend),
        (8, Duration::from_secs(300), split_trend),
        (9, Duration::from_secs(60), symmetry),
        (10, Duration::from_secs(300), numerics),
    ];
    let mut fatal = 0;
    let mut passed = 0;
    for (n, limit, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = o.pass && in_time;
        let known = KNOWN_RED.iter().find(|(k, _)| *k == n);
        let timing = format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs());
        if pass {
            passed += 1;
            let note = if known.is_some() { " (listed as known red; update KNOWN_RED)" } else { "" };
            println!("criterion {n}: PASS [{timing}] {}{note}", o.detail);
        } else {
            let why = if in_time { String::new() } else { " runtime limit exceeded;".to_string() };
            match known {
                Some((_, reason)) if !strict => println!("criterion {n}: FAIL (known red: {reason}) [{timing}]{why} {}", o.detail),
                _ => {
                    fatal += 1;
                    println!("criterion {n}: FAIL [{timing}]{why} {}", o.detail);
                }
            }
        }
    }
    println!("acceptance: {passed}/10 PASS, {} unexpected FAIL", fatal);
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
