//! Bridges a value network into the search as a leaf evaluator.

use super::{Architecture, NeuralError, ValueNet, Workspace};
use crate::games::{GameSpec, GameState, TileEncoding, TilePermutation};
use crate::mcts::LeafEvaluator;
use crate::scalar::Scalar;

/// A network plus per-worker buffers and the optional tile permutation
/// of the obfuscated condition. The network itself is shared read-only;
/// each concurrent game owns its own evaluator.
pub struct NetEvaluator<'a, S: Scalar> {
    net: &'a ValueNet<S>,
    ws: Workspace<S>,
    enc: TileEncoding<S>,
    permutation: Option<TilePermutation>,
}

impl<'a, S: Scalar> NetEvaluator<'a, S> {
    pub fn new(
        net: &'a ValueNet<S>,
        spec: &GameSpec,
        permutation: Option<TilePermutation>,
    ) -> Result<NetEvaluator<'a, S>, NeuralError> {
        let fits = match net.arch() {
            Architecture::Attention(cfg) => {
                cfg.max_tiles >= spec.tile_count && cfg.feature_dim == spec.feature_dim
            }
            Architecture::Conv(cfg) => {
                spec.grid_dims == Some(cfg.grid) && cfg.feature_dim == spec.feature_dim
            }
        };
        if !fits {
            return Err(NeuralError::ShapeMismatch(format!(
                "model does not fit game `{}`",
                spec.name
            )));
        }
        if let Some(perm) = &permutation {
            if perm.len() != spec.tile_count {
                return Err(NeuralError::ShapeMismatch(format!(
                    "permutation length {} does not match tile count {}",
                    perm.len(),
                    spec.tile_count
                )));
            }
        }
        Ok(NetEvaluator {
            net,
            ws: net.workspace(),
            enc: TileEncoding::zeroed(spec.tile_count, spec.feature_dim),
            permutation,
        })
    }
}

impl<S: Scalar> LeafEvaluator for NetEvaluator<'_, S> {
    fn evaluate(&mut self, state: &GameState) -> f64 {
        state
            .encode_tiles_into(self.permutation.as_ref(), &mut self.enc)
            .expect("shapes validated at construction");
        self.net
            .forward(&self.enc, &mut self.ws)
            .expect("shapes validated at construction")
            .to_f64_lossy()
    }
}
