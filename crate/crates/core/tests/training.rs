use nashapr::approx::{
    evaluate, load_model, save_model, train, ApproximatorArch, TrainConfig, Trainer,
};
use nashapr::game::{nash_apr, GameShape};
use nashapr::gen::{generate, GameClass, GeneratorSpec, SplitKind};
use nashapr::rng;
use nashapr::solvers::random_profile;

#[test]
fn majority_voting_beats_random_profiles_tenfold() {
    let spec = GeneratorSpec::new(
        GameClass::MajorityVoting,
        GameShape::symmetric(2, 10).unwrap(),
        0,
    )
    .unwrap();
    let dataset = generate(&spec, 4600)
        .unwrap()
        .with_tail_split(400, 200)
        .unwrap();
    let arch = ApproximatorArch::new(spec.shape.clone());
    let (params, _) = train(&arch, &dataset, &TrainConfig::default()).unwrap();
    let test = dataset.split_games(SplitKind::Test);
    let (model, _) = evaluate(&arch, &params, &test).unwrap();
    let random: f64 = test
        .iter()
        .enumerate()
        .map(|(i, g)| {
            nash_apr(
                &random_profile(g.shape(), &mut rng::stream(99, i as u64)),
                g,
            )
            .unwrap()
        })
        .sum::<f64>()
        / test.len() as f64;
    assert!(model <= 0.1 * random, "model {model} vs random {random}");
}

#[test]
fn checkpoint_round_trip_resumes_the_same_trajectory() {
    let spec = GeneratorSpec::new(
        GameClass::WarOfAttrition,
        GameShape::symmetric(2, 4).unwrap(),
        2,
    )
    .unwrap();
    let dataset = generate(&spec, 200).unwrap();
    let arch = ApproximatorArch::with_hidden(spec.shape.clone(), vec![12, 6]);
    let cfg = |iterations| TrainConfig {
        iterations,
        batch_size: 16,
        validation_interval: 10,
        ..TrainConfig::default()
    };
    let (full, _) = train(&arch, &dataset, &cfg(50)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.nea");
    let mut first = Trainer::new(arch.clone(), &dataset, cfg(20)).unwrap();
    first.run().unwrap();
    save_model(&arch, &first.params, Some(&first.adam), &path).unwrap();

    let file = load_model(&path).unwrap();
    file.expect_arch(&arch).unwrap();
    let mut rest =
        Trainer::resume(arch, &dataset, cfg(50), file.params, file.adam.unwrap()).unwrap();
    rest.run().unwrap();
    assert_eq!(rest.params, full);
}
