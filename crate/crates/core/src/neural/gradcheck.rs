//! Finite-difference gradient checking at 64-bit precision.
//!
//! The checker builds a deliberately tiny network (a few thousand
//! parameters), draws a small batch of encodings from random play of a
//! real game, and compares every reverse-mode gradient entry against a
//! central difference with eps = 1e-5.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    batch_loss, loss_and_gradients, Architecture, AttentionNetConfig, ConvNetConfig, NeuralError,
    PositionalMode, ValueNet,
};
use crate::datagen::TrainingSample;
use crate::games::{GameId, GameState};
use crate::mix_seed;

pub const FD_EPS: f64 = 1e-5;

/// Checker-sized attention config (well under 5k parameters).
pub fn attention_check_config(game: GameId, positional_mode: PositionalMode) -> AttentionNetConfig {
    let spec = game.spec();
    AttentionNetConfig {
        embed_dim: 8,
        heads: 2,
        layers: 2,
        ff_dim: 16,
        positional_mode,
        feature_dim: spec.feature_dim,
        max_tiles: spec.tile_count,
    }
}

/// Checker-sized conv config (well under 5k parameters).
pub fn conv_check_config(game: GameId) -> Result<ConvNetConfig, NeuralError> {
    let spec = game.spec();
    let grid = spec.grid_dims.ok_or(NeuralError::NoGridTopology)?;
    Ok(ConvNetConfig {
        channels: 4,
        conv_layers: 2,
        kernel: 3,
        grid,
        feature_dim: spec.feature_dim,
    })
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub params_checked: usize,
}

/// Draws a batch of encoded positions by truncating random playouts.
fn sample_batch(game: GameId, n: usize, seed: u64) -> Vec<TrainingSample<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = [-1.0f64, 0.0, 1.0];
    (0..n)
        .map(|i| {
            let mut state = GameState::initial(game);
            let mut moves = Vec::new();
            let depth = rng.gen_range(0..8);
            for _ in 0..depth {
                if state.is_terminal() {
                    break;
                }
                state.legal_moves_into(&mut moves);
                let mv = moves[rng.gen_range(0..moves.len())];
                state = state.apply_move(mv).expect("legal");
            }
            if state.is_terminal() {
                state = GameState::initial(game);
            }
            TrainingSample {
                encoding: state.encode_tiles(None).expect("no permutation"),
                target: targets[i % targets.len()],
            }
        })
        .collect()
}

/// Relative error with a small-magnitude floor so finite-difference
/// noise on near-zero entries does not dominate.
fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-3)
}

/// Checks every parameter of a 64-bit network of the given architecture
/// against central finite differences, with inputs drawn from `game`.
/// Deterministic per seed.
pub fn gradient_check(
    arch: Architecture,
    game: GameId,
    seed: u64,
) -> Result<GradCheckReport, NeuralError> {
    let spec = game.spec();
    let shape_ok = match &arch {
        Architecture::Attention(cfg) => {
            cfg.max_tiles >= spec.tile_count && cfg.feature_dim == spec.feature_dim
        }
        Architecture::Conv(cfg) => {
            Some(cfg.grid) == spec.grid_dims && cfg.feature_dim == spec.feature_dim
        }
    };
    if !shape_ok {
        return Err(NeuralError::ShapeMismatch(format!(
            "architecture does not fit game `{game}`"
        )));
    }
    let mut net: ValueNet<f64> = ValueNet::new(arch, mix_seed(seed, 0x6e65))?;
    // Check at a generic point: the zero-bias init parks some ReLU
    // pre-activations exactly on the kink, where finite differences and
    // the subgradient legitimately disagree.
    let mut jitter = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6a69));
    for i in 0..net.params().len() {
        for v in net.params_mut().get_mut(i).values_mut() {
            *v += jitter.gen_range(-0.05..0.05);
        }
    }
    let batch = sample_batch(game, 4, mix_seed(seed, 0x6261));
    let (_, grads) = loss_and_gradients(&net, &batch)?;

    let mut ws = net.workspace();
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for i in 0..grads.len() {
        for j in 0..grads.get(i).len() {
            let analytic = grads.get(i).values()[j];
            let orig = net.params().get(i).values()[j];
            net.params_mut().get_mut(i).values_mut()[j] = orig + FD_EPS;
            let up = batch_loss(&net, &batch, &mut ws)?;
            net.params_mut().get_mut(i).values_mut()[j] = orig - FD_EPS;
            let down = batch_loss(&net, &batch, &mut ws)?;
            net.params_mut().get_mut(i).values_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * FD_EPS);
            max_rel = max_rel.max(rel_error(analytic, numeric));
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        params_checked: checked,
    })
}
