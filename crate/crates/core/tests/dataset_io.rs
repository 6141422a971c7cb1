use nashapr::game::GameShape;
use nashapr::gen::{
    export_json, generate, import_json, load_dataset, save_dataset, GameClass, GeneratorSpec,
    FORMAT_VERSION, MAGIC,
};
use nashapr::Error;

fn spec(class: GameClass, players: usize, actions: usize) -> GeneratorSpec {
    GeneratorSpec::new(class, GameShape::symmetric(players, actions).unwrap(), 17).unwrap()
}

#[test]
fn binary_and_json_round_trips_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    for (class, n, k) in [
        (GameClass::WarOfAttrition, 2, 7),
        (GameClass::BertrandOligopoly, 3, 4),
        (GameClass::MajorityVoting, 4, 3),
    ] {
        let ds = generate(&spec(class, n, k), 30).unwrap();
        let bin = dir.path().join(format!("{class}.nfg"));
        save_dataset(&ds, &bin).unwrap();
        assert_eq!(load_dataset(&bin).unwrap(), ds);
        let json = dir.path().join(format!("{class}.json"));
        export_json(&ds, &json).unwrap();
        assert_eq!(import_json(&json).unwrap(), ds);
    }
}

#[test]
fn header_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.nfg");
    save_dataset(
        &generate(&spec(GameClass::GrabTheDollar, 2, 3), 5).unwrap(),
        &path,
    )
    .unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), FORMAT_VERSION);
}

#[test]
fn truncated_and_foreign_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.nfg");
    save_dataset(
        &generate(&spec(GameClass::TravelersDilemma, 2, 4), 8).unwrap(),
        &path,
    )
    .unwrap();
    let bytes = std::fs::read(&path).unwrap();

    let cut = dir.path().join("cut.nfg");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(load_dataset(&cut), Err(Error::Format { .. })));

    let foreign = dir.path().join("foreign.nfg");
    std::fs::write(&foreign, b"PK\x03\x04 not a dataset").unwrap();
    assert!(matches!(
        load_dataset(&foreign),
        Err(Error::Format { offset: 0, .. })
    ));
}

#[test]
fn generation_is_seeded_and_prefix_stable() {
    let s = spec(GameClass::BertrandOligopoly, 3, 5);
    let long = generate(&s, 40).unwrap();
    let short = generate(&s, 10).unwrap();
    assert_eq!(&long.games[..10], &short.games[..]);
    assert_eq!(generate(&s, 40).unwrap(), long);
    let other = GeneratorSpec { seed: 18, ..s };
    assert_ne!(generate(&other, 10).unwrap().games, short.games);
}

#[test]
fn every_class_lies_in_the_unit_interval() {
    for class in GameClass::ALL {
        let ds = generate(&spec(class, 2, 6), 20).unwrap();
        for g in &ds.games {
            let (lo, hi) = g
                .utilities()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                    (a.min(x), b.max(x))
                });
            assert!(lo >= 0.0 && hi <= 1.0);
            // Voting payoffs are drawn in [0, 1] and left as they are.
            if class != GameClass::MajorityVoting {
                assert!(lo == 0.0 && hi == 1.0 || lo == hi, "{class}: [{lo}, {hi}]");
            }
        }
    }
}
