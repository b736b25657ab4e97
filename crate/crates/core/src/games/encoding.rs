//! Per-tile feature matrices and the tile permutations used for board
//! obfuscation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// A T x F matrix of {0, 1} tile features, row-major.
///
/// The first F-1 columns one-hot encode the tile contents; the last
/// column is the player-to-move plane (all ones when P1 is to move).
#[derive(Clone, Debug, PartialEq)]
pub struct TileEncoding<S> {
    tiles: usize,
    features: usize,
    values: Vec<S>,
}

impl<S: Scalar> TileEncoding<S> {
    pub fn zeroed(tiles: usize, features: usize) -> TileEncoding<S> {
        TileEncoding {
            tiles,
            features,
            values: vec![S::zero(); tiles * features],
        }
    }

    pub fn from_values(tiles: usize, features: usize, values: Vec<S>) -> TileEncoding<S> {
        assert_eq!(values.len(), tiles * features);
        TileEncoding {
            tiles,
            features,
            values,
        }
    }

    #[inline]
    pub fn tiles(&self) -> usize {
        self.tiles
    }

    #[inline]
    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.values[i * self.features..(i + 1) * self.features]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.values[i * self.features..(i + 1) * self.features]
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// New encoding whose row `i` is `self`'s row `perm(i)`.
    pub fn permuted(&self, perm: &TilePermutation) -> TileEncoding<S> {
        assert_eq!(perm.len(), self.tiles);
        let mut out = TileEncoding::zeroed(self.tiles, self.features);
        for i in 0..self.tiles {
            out.row_mut(i).copy_from_slice(self.row(perm.map(i)));
        }
        out
    }

    /// Converts the scalar type, used when moving between the f32 file
    /// formats and f64 checking mode.
    pub fn cast<T: Scalar>(&self) -> TileEncoding<T> {
        TileEncoding {
            tiles: self.tiles,
            features: self.features,
            values: self
                .values
                .iter()
                .map(|v| T::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }
}

/// A bijection on tile indices {0..T-1} together with the seed that
/// produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilePermutation {
    mapping: Vec<usize>,
    seed: u64,
}

impl TilePermutation {
    /// Fisher-Yates shuffle of `0..tile_count` driven by `seed`.
    pub fn random(tile_count: usize, seed: u64) -> TilePermutation {
        let mut mapping: Vec<usize> = (0..tile_count).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        mapping.shuffle(&mut rng);
        TilePermutation { mapping, seed }
    }

    pub fn identity(tile_count: usize) -> TilePermutation {
        TilePermutation {
            mapping: (0..tile_count).collect(),
            seed: 0,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    #[inline]
    pub fn map(&self, i: usize) -> usize {
        self.mapping[i]
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn inverse(&self) -> TilePermutation {
        let mut inv = vec![0usize; self.mapping.len()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        TilePermutation {
            mapping: inv,
            seed: self.seed,
        }
    }
}
