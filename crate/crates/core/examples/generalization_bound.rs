//! The covering-number bound for a trained model's estimated Lipschitz constant.

use nashapr::approx::{lipschitz_estimate, train, ApproximatorArch, TrainConfig};
use nashapr::game::GameShape;
use nashapr::gen::{generate, GameClass, GeneratorSpec};
use nashapr::harness::{evaluate_bound, geometric_grid, BoundInputs};
use nashapr::rng;

fn main() -> nashapr::Result<()> {
    let shape = GameShape::symmetric(2, 2)?;
    let spec = GeneratorSpec::new(GameClass::MajorityVoting, shape.clone(), 1)?;
    let dataset = generate(&spec, 1000)?;
    let arch = ApproximatorArch::with_hidden(shape.clone(), vec![16]);
    let cfg = TrainConfig {
        iterations: 500,
        ..TrainConfig::default()
    };
    let (params, _) = train(&arch, &dataset, &cfg)?;
    let lipschitz = lipschitz_estimate(&arch, &params, 2000, &mut rng::stream(9, 0))?;
    println!("empirical Lipschitz constant {lipschitz:.4}");

    for m in [1e3, 1e6, 1e9, 1e12] {
        let report = evaluate_bound(&BoundInputs {
            m,
            delta: 0.05,
            lipschitz,
            shape: shape.clone(),
            r_grid: geometric_grid(0.01, 1.5, 12),
        })?;
        println!(
            "m = {m:e}: bound {:.4e} at r = {:.4} (overflow: {})",
            report.bound, report.best_r, report.overflow
        );
    }
    Ok(())
}
