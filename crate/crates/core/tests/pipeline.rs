//! Cross-module pipeline: generate -> file -> train -> evaluate.

use std::fs;

use tempfile::TempDir;
use zggp_core::datagen::{
    generate_dataset, play_training_game, read_dataset, read_dataset_header, DataError, GenConfig,
};
use zggp_core::eval::{play_match, AgentSpec};
use zggp_core::games::GameId;
use zggp_core::neural::{io, Architecture, AttentionNetConfig, NetPreset, PositionalMode};
use zggp_core::train::{train_model, TrainConfig};

fn quick_gen() -> GenConfig {
    GenConfig {
        iterations: 50,
        ..GenConfig::default()
    }
}

#[test]
fn single_play_file_equals_direct_game_samples() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("one.bin");
    let gen = quick_gen();
    let header = generate_dataset(GameId::TicTacToe, 1, &gen, 1, 42, None, &path).unwrap();
    let (read_header, samples) = read_dataset(&path).unwrap();
    assert_eq!(header, read_header);
    let direct = play_training_game(GameId::TicTacToe, &gen, 42, None);
    assert_eq!(samples, direct);
    assert_eq!(header.sample_count as usize, direct.len());
}

#[test]
fn worker_count_does_not_change_the_file() {
    let dir = TempDir::new().unwrap();
    let gen = quick_gen();
    let p1 = dir.path().join("w1.bin");
    let p8 = dir.path().join("w8.bin");
    generate_dataset(GameId::TicTacToe, 12, &gen, 1, 7, None, &p1).unwrap();
    generate_dataset(GameId::TicTacToe, 12, &gen, 8, 7, None, &p8).unwrap();
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p8).unwrap());
}

#[test]
fn obfuscation_seed_is_recorded_and_applied() {
    let dir = TempDir::new().unwrap();
    let plain_path = dir.path().join("plain.bin");
    let obf_path = dir.path().join("obf.bin");
    let gen = quick_gen();
    generate_dataset(GameId::TicTacToe, 4, &gen, 2, 3, None, &plain_path).unwrap();
    let header = generate_dataset(GameId::TicTacToe, 4, &gen, 2, 3, Some(99), &obf_path).unwrap();
    assert_eq!(header.obfuscation_seed, Some(99));
    assert_eq!(
        read_dataset_header(&obf_path).unwrap().obfuscation_seed,
        Some(99)
    );

    let (_, plain) = read_dataset(&plain_path).unwrap();
    let (_, obf) = read_dataset(&obf_path).unwrap();
    let perm = zggp_core::datagen::make_permutation(9, 99);
    assert_eq!(plain.len(), obf.len());
    for (p, o) in plain.iter().zip(&obf) {
        assert_eq!(p.target, o.target);
        assert_eq!(p.encoding.permuted(&perm), o.encoding);
    }
}

#[test]
fn corrupt_dataset_files_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("data.bin");
    generate_dataset(GameId::TicTacToe, 2, &quick_gen(), 1, 5, None, &path).unwrap();
    let bytes = fs::read(&path).unwrap();

    let bad_magic_path = dir.path().join("bad_magic.bin");
    let mut bad = bytes.clone();
    bad[0] = b'X';
    fs::write(&bad_magic_path, &bad).unwrap();
    assert!(matches!(
        read_dataset(&bad_magic_path),
        Err(DataError::Corrupt(_))
    ));

    let truncated_path = dir.path().join("trunc.bin");
    fs::write(&truncated_path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        read_dataset(&truncated_path),
        Err(DataError::Corrupt(_))
    ));

    let padded_path = dir.path().join("padded.bin");
    let mut padded = bytes;
    padded.push(0);
    fs::write(&padded_path, &padded).unwrap();
    assert!(matches!(
        read_dataset(&padded_path),
        Err(DataError::Corrupt(_))
    ));
}

#[test]
fn generate_train_evaluate_round_trip() {
    let dir = TempDir::new().unwrap();
    let data_path = dir.path().join("ttt.bin");
    let model_path = dir.path().join("ttt.model");
    let gen = GenConfig {
        iterations: 80,
        ..GenConfig::default()
    };
    generate_dataset(GameId::TicTacToe, 24, &gen, 2, 11, None, &data_path).unwrap();

    let spec = GameId::TicTacToe.spec();
    let arch = Architecture::Attention(AttentionNetConfig::for_game(
        &spec,
        NetPreset::Small,
        PositionalMode::Sinusoidal,
    ));
    let mut config = TrainConfig::new(arch);
    config.epochs = 2;
    let report = train_model(&data_path, &config, &model_path).unwrap();
    assert!(report.final_train_loss.is_finite());
    assert!((0.0..=4.0).contains(&report.final_train_loss));
    if let Some(val) = report.final_val_loss {
        assert!((0.0..=4.0).contains(&val));
    }

    // The written model loads and plays.
    let net = io::load_model(&model_path).unwrap();
    assert!(net.param_count() > 0);
    let nn = AgentSpec::value_net(&model_path, 60);
    let uct = AgentSpec::uct(60);
    let result = play_match(GameId::TicTacToe, &nn, &uct, 8, 3, None, 2).unwrap();
    assert_eq!(result.wins + result.draws + result.losses, 8);

    // And under the permuted condition as well.
    let permuted = play_match(GameId::TicTacToe, &nn, &uct, 8, 3, Some(5), 2).unwrap();
    assert_eq!(permuted.games_total, 8);
}

#[test]
fn model_mismatch_is_reported() {
    let dir = TempDir::new().unwrap();
    let model_path = dir.path().join("c4.model");
    let spec = GameId::Connect4.spec();
    let arch = Architecture::Attention(AttentionNetConfig::for_game(
        &spec,
        NetPreset::Small,
        PositionalMode::Sinusoidal,
    ));
    let net: zggp_core::ValueNet32 = zggp_core::neural::ValueNet::new(arch, 1).unwrap();
    io::save_model(&net, &model_path).unwrap();

    // A connect4-sized attention net cannot evaluate reversi (64 tiles).
    let nn = AgentSpec::value_net(&model_path, 20);
    let uct = AgentSpec::uct(20);
    assert!(play_match(GameId::Reversi, &nn, &uct, 2, 0, None, 1).is_err());

    let missing = AgentSpec::value_net(dir.path().join("nope.model"), 20);
    assert!(matches!(
        play_match(GameId::TicTacToe, &missing, &uct, 2, 0, None, 1),
        Err(zggp_core::eval::EvalError::ModelLoadFailure(_))
    ));
}
