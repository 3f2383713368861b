mod common;

use std::path::Path;

use drgame::ambiguity::validate;
use drgame::gamefile::{emit_game_file, load_game, parse_game_file, read_game_file, GameFile};
use drgame::inspection::{build_inspection_game, InspectionParams};
use drgame::risk::RiskProfile;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_set, random_shape};

fn inspection_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games/inspection.toml")
}

#[test]
fn shipped_inspection_file_matches_the_builder() {
    let loaded = load_game(&inspection_path()).unwrap();
    let built = build_inspection_game(&InspectionParams::default()).unwrap();
    assert_eq!(loaded.ambiguity.mean, built.ambiguity.mean);
    assert_eq!(loaded.ambiguity.support, built.ambiguity.support);
    assert_eq!(loaded.ambiguity.mad_cap, 4.0);
    assert_eq!(loaded.risk, RiskProfile::risk_neutral(2));
    assert!(validate(&loaded.ambiguity).unwrap().passed());
}

#[test]
fn file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let file = read_game_file(&inspection_path()).unwrap();
    let path = dir.path().join("copy.toml");
    std::fs::write(&path, emit_game_file(&file).unwrap()).unwrap();
    assert_eq!(read_game_file(&path).unwrap(), file);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn explicit_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = random_shape(&mut rng, 3);
        let cap = rng.gen_range(0.0..3.0);
        let f = random_set(&mut rng, &shape, 3.0, cap);
        let risk = RiskProfile::new(vec![rng.gen_range(0.01..=1.0), rng.gen_range(0.01..=1.0)]).unwrap();
        let file = GameFile::from_explicit(&f, &risk, Some(&f.mean_tensor()));
        let text = emit_game_file(&file).unwrap();
        let again = parse_game_file(&text).unwrap();
        prop_assert_eq!(&again, &file);
        prop_assert_eq!(emit_game_file(&again).unwrap(), text);
        let loaded = again.load().unwrap();
        prop_assert_eq!(loaded.ambiguity.support, f.support);
        prop_assert_eq!(loaded.ambiguity.mean, f.mean);
        prop_assert_eq!(loaded.risk, risk);
    }
}
