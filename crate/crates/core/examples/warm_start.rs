//! Trains a model, then races the baselines against it and warm-starts
//! regret descent from its outputs.

use nashapr::approx::TrainConfig;
use nashapr::gen::GameClass;
use nashapr::harness::{
    run_efficiency_race, run_generalization, run_warmstart, DatasetConfig, ExperimentConfig,
};

fn main() -> nashapr::Result<()> {
    let class: GameClass = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("majority_voting")
        .parse()?;
    let cfg = ExperimentConfig {
        datasets: vec![DatasetConfig::desk(class, vec![10, 10])],
        train: TrainConfig {
            iterations: 5000,
            ..TrainConfig::default()
        },
        output_dir: Some(std::env::temp_dir().join("nashapr_warm_start")),
        ..ExperimentConfig::default()
    };

    let (generalization, models) = run_generalization(&cfg)?;
    generalization.write_csv(std::io::stdout())?;
    let race = run_efficiency_race(&cfg, &models)?;
    race.write_csv(std::io::stdout())?;
    let warm = run_warmstart(&cfg, &models)?;
    warm.write_summary_csv(std::io::stdout())?;
    println!("reports in {}", cfg.output_dir.unwrap().display());
    Ok(())
}
