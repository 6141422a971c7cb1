//! Generates a small dataset for every class, saves it and reads it back.

use nashapr::game::{nash_apr, GameShape};
use nashapr::gen::{generate, load_dataset, save_dataset, GameClass, GeneratorSpec};

fn main() -> nashapr::Result<()> {
    let dir = std::env::temp_dir().join("nashapr_generate_games");
    std::fs::create_dir_all(&dir)?;
    for class in GameClass::ALL {
        let shape = if class.two_player_only() {
            GameShape::symmetric(2, 10)?
        } else {
            GameShape::symmetric(3, 6)?
        };
        let spec = GeneratorSpec::new(class, shape.clone(), 42)?;
        let dataset = generate(&spec, 100)?;
        let path = dir.join(format!("{class}.nfg"));
        save_dataset(&dataset, &path)?;
        let back = load_dataset(&path)?;
        assert_eq!(back, dataset);

        let uniform = shape.uniform_profile();
        let mean = dataset
            .games
            .iter()
            .map(|g| nash_apr(&uniform, g))
            .sum::<nashapr::Result<f64>>()?
            / dataset.games.len() as f64;
        println!(
            "{class:<19} {:?}  split {}/{}/{}  uniform-profile NashApr {mean:.4}  ({} bytes)",
            shape.action_counts(),
            dataset.split.train.len(),
            dataset.split.validation.len(),
            dataset.split.test.len(),
            std::fs::metadata(&path)?.len()
        );
    }
    Ok(())
}
