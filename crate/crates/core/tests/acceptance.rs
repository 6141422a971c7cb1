//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nashapr::approx::{backward, batch_loss, forward, ApproximatorArch, ApproximatorParams, Mode};
use nashapr::game::{nash_apr, nash_apr_subgradient, Game, GameShape};
use nashapr::gen::{save_dataset, GameClass};
use nashapr::harness::{
    evaluate_bound, golden_suite, gradient_suite, oracle_suite, run_efficiency_race,
    run_generalization, run_warmstart, strategy_lipschitz_suite, utility_lipschitz_suite,
    BoundInputs, DatasetConfig, ExperimentConfig, RaceReport, SelfcheckConfig, TrainedModel,
    WarmstartReport, APPROXIMATOR_ROW, ORACLE_MAX_JOINT, ORACLE_TOLERANCE,
};
use nashapr::rng;
use nashapr::solvers::SolverKind;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn lipschitz() -> Outcome {
    let cfg = SelfcheckConfig::default();
    let start = Instant::now();
    let s = strategy_lipschitz_suite(&cfg, &nash_apr);
    let u = utility_lipschitz_suite(&cfg, &nash_apr);
    let secs = start.elapsed().as_secs_f64();
    let passed =
        s.passed() && u.passed() && s.checks >= 10_000 && u.checks >= 10_000 && secs < 60.0;
    outcome(
        passed,
        format!(
            "{} + {} samples, failures {} + {}, worst ratios {:.4} / {:.4}, {secs:.1}s",
            s.checks,
            u.checks,
            s.failures,
            u.failures,
            s.worst_ratio.unwrap_or(0.0),
            u.worst_ratio.unwrap_or(0.0)
        ),
    )
}

fn oracle() -> Outcome {
    let r = oracle_suite(&SelfcheckConfig::default(), &nash_apr);
    outcome(
        r.passed() && r.checks == 1000,
        format!(
            "{} instances with |A| <= {ORACLE_MAX_JOINT}, failures {}, worst error {:.3e}",
            r.checks,
            r.failures,
            ORACLE_TOLERANCE - r.worst_margin
        ),
    )
}

/// Full-network backward against central differences on a model with at most
/// 50 parameters, relative tolerance 1e-3.
fn network_gradient_worst_error() -> (f64, usize) {
    let shape = GameShape::symmetric(2, 2).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..5u64 {
        let arch = ApproximatorArch::with_hidden(shape.clone(), vec![1 + (seed as usize % 2)]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(seed, 1)).unwrap();
        assert!(params.num_trainable() <= 50);
        let mut r = rng::stream(seed, 2);
        let games: Vec<Game> = (0..4)
            .map(|_| Game::new(shape.clone(), (0..8).map(|_| r.gen::<f64>()).collect()).unwrap())
            .collect();
        let batch: Vec<&Game> = games.iter().collect();
        let (out, cache) = forward(&arch, &params, &batch, Mode::Train).unwrap();
        if batch
            .iter()
            .zip(&out)
            .any(|(g, p)| nash_apr_subgradient(p, g).unwrap().tie_flag)
        {
            continue;
        }
        let (grads, _) = backward(&arch, &params, &batch, &cache.unwrap()).unwrap();
        let h = 1e-6;
        for (t, tensor) in grads.tensors.iter().enumerate() {
            for (i, &an) in tensor.iter().enumerate() {
                let at = |delta: f64| {
                    let mut moved = params.clone();
                    moved.trainable_slices_mut()[t][i] += delta;
                    batch_loss(&arch, &moved, &batch, Mode::Train).unwrap()
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                // Biases feeding batch norm have exactly zero gradient.
                let scale = fd.abs().max(an.abs()).max(1e-6);
                worst = worst.max((fd - an).abs() / scale);
                checked += 1;
            }
        }
    }
    (worst, checked)
}

fn gradients() -> Outcome {
    let sub = gradient_suite(&SelfcheckConfig::default());
    let (net_err, net_checked) = network_gradient_worst_error();
    outcome(
        sub.passed() && sub.checks >= 100 && net_checked > 0 && net_err < 1e-3,
        format!(
            "subgradient {} points, failures {}; network {net_checked} parameters, worst relative error {net_err:.2e}",
            sub.checks, sub.failures
        ),
    )
}

fn golden() -> Outcome {
    let r = golden_suite(&nash_apr);
    outcome(
        r.passed(),
        format!("{} fixtures, failures {}", r.checks, r.failures),
    )
}

struct Desk {
    models: Vec<TrainedModel>,
    cfg: ExperimentConfig,
}

fn generalization(dir: &Path) -> (Outcome, Desk) {
    let cfg = ExperimentConfig {
        datasets: vec![DatasetConfig::desk(
            GameClass::TravelersDilemma,
            vec![10, 10],
        )],
        repetitions: 3,
        output_dir: Some(dir.to_path_buf()),
        record_timing: false,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let (report, models) = run_generalization(&cfg).expect("generalization run");
    let secs = start.elapsed().as_secs_f64();
    let class = "travelers_dilemma";
    let train = report.average(class, "train").unwrap();
    let test = report.average(class, "test").unwrap();
    let random = report.average(class, "random").unwrap();
    let sizes = (
        models[0].dataset.split.train.len(),
        models[0].dataset.split.validation.len(),
        models[0].dataset.split.test.len(),
    );
    let passed = test <= 0.1 * random
        && (train - test).abs() <= 0.02
        && secs <= 600.0
        && sizes == (4000, 400, 200);
    (
        outcome(
            passed,
            format!(
                "3 seeds, split {}/{}/{}: test {test:.5} vs random {random:.5} (ratio {:.3}), gap {:.2e}, {secs:.0}s",
                sizes.0,
                sizes.1,
                sizes.2,
                test / random,
                (train - test).abs()
            ),
        ),
        Desk { models, cfg },
    )
}

fn race(desk: &Desk) -> Outcome {
    let report: RaceReport = run_efficiency_race(&desk.cfg, &desk.models).expect("race");
    let class = "travelers_dilemma";
    let nea = report.row(APPROXIMATOR_ROW, class).unwrap();
    let mut passed = nea.mean_iterations == 1.0;
    let mut parts = vec![format!("nea 1 iteration on {} games", nea.games)];
    for kind in SolverKind::BASELINES {
        let row = report.row(kind.short_name(), class).unwrap();
        passed &= row.mean_iterations >= 10.0;
        parts.push(format!(
            "{kind} {:.1} (failures {})",
            row.mean_iterations, row.failures
        ));
    }
    outcome(passed, parts.join(", "))
}

fn warm(desk: &Desk) -> Outcome {
    let report: WarmstartReport = run_warmstart(&desk.cfg, &desk.models).expect("warm start");
    let class = "travelers_dilemma";
    let cold = report.summary_for(class, "uniform").unwrap();
    let hot = report.summary_for(class, "approximator").unwrap();
    let monotone = report
        .rows
        .iter()
        .filter(|r| r.init_kind == "approximator")
        .all(|r| r.final_loss <= r.initial_loss);
    outcome(
        hot.games >= 100 && hot.median_iterations < cold.median_iterations && monotone,
        format!(
            "{} games: median iterations {} (approximator) vs {} (uniform); final <= initial on every warm run: {monotone}",
            hot.games, hot.median_iterations, cold.median_iterations
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let files = [
        "data.nfg",
        "train_log.csv",
        "generalization.csv",
        "race.csv",
        "warmstart.csv",
    ];
    let mut runs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("run{run}"));
        let cfg = ExperimentConfig {
            datasets: vec![DatasetConfig {
                class: GameClass::BertrandOligopoly,
                action_counts: vec![4, 4, 4],
                count: 600,
                validation: 50,
                test: 50,
            }],
            hidden_layers: vec![32, 32],
            output_dir: Some(out.clone()),
            record_timing: false,
            seed: 11,
            ..ExperimentConfig::default()
        };
        let mut cfg = cfg;
        cfg.train.iterations = 300;
        let (_, models) = run_generalization(&cfg).expect("run");
        run_efficiency_race(&cfg, &models).expect("race");
        run_warmstart(&cfg, &models).expect("warm start");
        save_dataset(&models[0].dataset, out.join(files[0])).unwrap();
        let mut log = Vec::new();
        models[0].log.write_csv(&mut log).unwrap();
        fs::write(out.join(files[1]), log).unwrap();
        runs.push(files.map(|f| fs::read(out.join(f)).unwrap()));
    }
    let same: Vec<&str> = files
        .iter()
        .zip(runs[0].iter().zip(&runs[1]))
        .filter(|(_, (a, b))| a == b)
        .map(|(f, _)| *f)
        .collect();
    outcome(
        same.len() == files.len(),
        format!(
            "{} of {} artifacts byte-identical across two runs",
            same.len(),
            files.len()
        ),
    )
}

fn bound() -> Outcome {
    let inputs = |m: f64, delta: f64| BoundInputs {
        m,
        delta,
        lipschitz: 1.0,
        shape: GameShape::symmetric(2, 2).unwrap(),
        r_grid: vec![0.25],
    };
    let value = |m, d| evaluate_bound(&inputs(m, d)).unwrap().bound;
    let ms = [1e3, 1e4, 1e5, 1e6, 1e7, 1e8];
    let in_m = ms
        .windows(2)
        .all(|w| value(w[1], 0.05) <= value(w[0], 0.05));
    let deltas = [0.5, 0.2, 0.05, 1e-3, 1e-6];
    let in_delta = deltas
        .windows(2)
        .all(|w| value(1e6, w[1]) > value(1e6, w[0]));
    // High-precision evaluation of the closed form at this point.
    let reference = 717.225_917_391_311_4;
    let spot = value(1e6, 0.05);
    let six = format!("{spot:.3}") == format!("{reference:.3}")
        && ((spot - reference) / reference).abs() < 5e-7;
    outcome(
        in_m && in_delta && six,
        format!("non-increasing in m: {in_m}, increasing as delta shrinks: {in_delta}, spot {spot:.6} vs {reference:.6}"),
    )
}

fn main() -> ExitCode {
    // Strict single-threaded mode: every parallel loop runs in order.
    std::env::set_var("NASHAPR_THREADS", "0");
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "Lipschitz suites", lipschitz()),
        (2, "oracle equivalence", oracle()),
        (3, "gradient checks", gradients()),
        (4, "golden fixtures", golden()),
    ];
    let (gen, desk) = generalization(&dir.path().join("desk"));
    results.push((5, "generalization", gen));
    results.push((6, "efficiency race", race(&desk)));
    results.push((7, "warm start", warm(&desk)));
    results.push((8, "determinism", determinism(dir.path())));
    results.push((9, "bound evaluator", bound()));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!(
            "criterion {n} ({name}): {} - {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
