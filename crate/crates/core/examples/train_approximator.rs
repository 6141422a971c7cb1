//! Trains the approximator on one game class and compares it with random profiles.
//!
//! ```text
//! cargo run --release --example train_approximator -- [class] [actions] [iterations] [seed]
//! ```

use std::time::Instant;

use nashapr::approx::{evaluate, train, ApproximatorArch, TrainConfig};
use nashapr::game::{nash_apr, GameShape};
use nashapr::gen::{generate, GameClass, GeneratorSpec, SplitKind};
use nashapr::rng;
use nashapr::solvers::random_profile;

fn main() -> nashapr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let class: GameClass = args
        .first()
        .map(String::as_str)
        .unwrap_or("majority_voting")
        .parse()?;
    let k: usize = args.get(1).map_or(10, |s| s.parse().expect("actions"));
    let iterations: usize = args.get(2).map_or(2000, |s| s.parse().expect("iterations"));
    let seed: u64 = args.get(3).map_or(0, |s| s.parse().expect("seed"));

    let spec = GeneratorSpec::new(class, GameShape::symmetric(2, k)?, seed)?;
    let dataset = generate(&spec, 4600)?.with_tail_split(400, 200)?;
    let arch = ApproximatorArch::new(spec.shape.clone());
    let cfg = TrainConfig {
        iterations,
        seed,
        validation_interval: iterations.div_ceil(5).max(1),
        ..TrainConfig::default()
    };

    let start = Instant::now();
    let (params, log) = train(&arch, &dataset, &cfg)?;
    println!(
        "trained {iterations} steps in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    for row in log.rows.iter().filter(|r| r.val_loss.is_some()) {
        println!(
            "  step {:>6}  train {:.5}  val {:.5}",
            row.step,
            row.train_loss,
            row.val_loss.unwrap()
        );
    }

    let (train_mean, _) = evaluate(&arch, &params, &dataset.split_games(SplitKind::Train))?;
    let test = dataset.split_games(SplitKind::Test);
    let (test_mean, test_std) = evaluate(&arch, &params, &test)?;
    let random: f64 = test
        .iter()
        .enumerate()
        .map(|(i, g)| {
            nash_apr(
                &random_profile(g.shape(), &mut rng::stream(seed, i as u64)),
                g,
            )
        })
        .sum::<nashapr::Result<f64>>()?
        / test.len() as f64;
    println!("train mean {train_mean:.5}");
    println!("test  mean {test_mean:.5} (std {test_std:.5})");
    println!("random     {random:.5}  ratio {:.3}", test_mean / random);
    Ok(())
}
