//! Uniform two-player zero-sum game interface and the five built-in games.
//!
//! Every game exposes the same surface: deterministic legal-move lists,
//! pure move application, terminal payoffs and a per-tile feature encoding.
//! A position is a value; applying a move returns a fresh value.

pub mod breakthrough;
pub mod connect4;
pub mod encoding;
pub mod hex;
pub mod reversi;
pub mod tictactoe;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
pub use encoding::{TileEncoding, TilePermutation};

/// One of the two players. `P1` always moves first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    /// 0 for P1, 1 for P2.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::P1 => write!(f, "P1"),
            Player::P2 => write!(f, "P2"),
        }
    }
}

/// Contents of a board tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Cell {
    Empty = 0,
    P1 = 1,
    P2 = 2,
}

impl Cell {
    #[inline]
    pub fn of(player: Player) -> Cell {
        match player {
            Player::P1 => Cell::P1,
            Player::P2 => Cell::P2,
        }
    }
}

/// A move identifier. Only meaningful together with the state it was
/// generated from; the numeric id indexes the game's move universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move(pub u32);

impl Move {
    #[inline]
    pub fn id(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Terminal result on the fixed {-1, 0, +1} scale, stored for P1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    score_p1: f64,
}

impl Outcome {
    pub fn win(player: Player) -> Outcome {
        match player {
            Player::P1 => Outcome { score_p1: 1.0 },
            Player::P2 => Outcome { score_p1: -1.0 },
        }
    }

    pub fn draw() -> Outcome {
        Outcome { score_p1: 0.0 }
    }

    #[inline]
    pub fn score_p1(self) -> f64 {
        self.score_p1
    }

    #[inline]
    pub fn score_p2(self) -> f64 {
        -self.score_p1
    }

    /// Score from `player`'s perspective.
    #[inline]
    pub fn score_for(self, player: Player) -> f64 {
        match player {
            Player::P1 => self.score_p1,
            Player::P2 => -self.score_p1,
        }
    }

    #[inline]
    pub fn is_draw(self) -> bool {
        self.score_p1 == 0.0
    }

    pub fn winner(self) -> Option<Player> {
        if self.score_p1 > 0.0 {
            Some(Player::P1)
        } else if self.score_p1 < 0.0 {
            Some(Player::P2)
        } else {
            None
        }
    }
}

/// Game status tracked incrementally by every implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ongoing,
    Won(Player),
    Draw,
}

impl Status {
    #[inline]
    pub fn is_terminal(self) -> bool {
        !matches!(self, Status::Ongoing)
    }

    pub fn outcome(self) -> Option<Outcome> {
        match self {
            Status::Ongoing => None,
            Status::Won(p) => Some(Outcome::win(p)),
            Status::Draw => Some(Outcome::draw()),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("move {0} is not legal in this position")]
    IllegalMove(u32),
    #[error("state is not terminal")]
    NotTerminal,
    #[error("permutation length {got} does not match tile count {expected}")]
    PermutationMismatch { got: usize, expected: usize },
    #[error("unknown game id `{0}` (expected tictactoe, connect4, breakthrough-N (4..=10), hex-N (3..=11) or reversi)")]
    UnknownGame(String),
}

/// Identifier of a playable game, parsed from / printed as the exact
/// strings used by the CLI and the file headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameId {
    TicTacToe,
    Connect4,
    /// Breakthrough on an N x N board, N in 4..=10.
    Breakthrough(u8),
    /// Hex on an N x N rhombus, N in 3..=11.
    Hex(u8),
    Reversi,
}

impl GameId {
    pub const ALL_BASE: [&'static str; 5] = [
        "tictactoe",
        "connect4",
        "breakthrough-N",
        "hex-N",
        "reversi",
    ];

    pub fn spec(self) -> GameSpec {
        match self {
            GameId::TicTacToe => GameSpec::new(self, 9, Some((3, 3))),
            GameId::Connect4 => GameSpec::new(self, 42, Some((6, 7))),
            GameId::Breakthrough(n) => {
                GameSpec::new(self, (n as usize).pow(2), Some((n as usize, n as usize)))
            }
            GameId::Hex(n) => {
                GameSpec::new(self, (n as usize).pow(2), Some((n as usize, n as usize)))
            }
            GameId::Reversi => GameSpec::new(self, 64, Some((8, 8))),
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameId::TicTacToe => write!(f, "tictactoe"),
            GameId::Connect4 => write!(f, "connect4"),
            GameId::Breakthrough(n) => write!(f, "breakthrough-{n}"),
            GameId::Hex(n) => write!(f, "hex-{n}"),
            GameId::Reversi => write!(f, "reversi"),
        }
    }
}

impl FromStr for GameId {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, GameError> {
        match s {
            "tictactoe" => return Ok(GameId::TicTacToe),
            "connect4" => return Ok(GameId::Connect4),
            "reversi" => return Ok(GameId::Reversi),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("breakthrough-") {
            if let Ok(n) = n.parse::<u8>() {
                if (4..=10).contains(&n) {
                    return Ok(GameId::Breakthrough(n));
                }
            }
        }
        if let Some(n) = s.strip_prefix("hex-") {
            if let Ok(n) = n.parse::<u8>() {
                if (3..=11).contains(&n) {
                    return Ok(GameId::Hex(n));
                }
            }
        }
        Err(GameError::UnknownGame(s.to_string()))
    }
}

/// Static shape information for a game: tile count, per-tile feature
/// width and the grid layout when the board fits one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameSpec {
    pub id: GameId,
    pub name: String,
    /// Number of board tiles T.
    pub tile_count: usize,
    /// Per-tile feature width F: one-hot tile contents plus the
    /// player-to-move plane.
    pub feature_dim: usize,
    /// (height, width) with H * W = T, when the board is a grid.
    pub grid_dims: Option<(usize, usize)>,
}

impl GameSpec {
    fn new(id: GameId, tile_count: usize, grid_dims: Option<(usize, usize)>) -> GameSpec {
        // All five games share the {empty, P1 piece, P2 piece} alphabet.
        GameSpec {
            id,
            name: id.to_string(),
            tile_count,
            feature_dim: 4,
            grid_dims,
        }
    }
}

/// A position of one of the built-in games.
///
/// States are immutable values: `apply_move` returns a new state. All
/// accessors are pure, so states can be shared freely between workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameState {
    TicTacToe(tictactoe::State),
    Connect4(connect4::State),
    Breakthrough(breakthrough::State),
    Hex(hex::State),
    Reversi(reversi::State),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $e:expr) => {
        match $self {
            GameState::TicTacToe($s) => $e,
            GameState::Connect4($s) => $e,
            GameState::Breakthrough($s) => $e,
            GameState::Hex($s) => $e,
            GameState::Reversi($s) => $e,
        }
    };
}

impl GameState {
    /// Initial position of `id`.
    pub fn initial(id: GameId) -> GameState {
        match id {
            GameId::TicTacToe => GameState::TicTacToe(tictactoe::State::initial()),
            GameId::Connect4 => GameState::Connect4(connect4::State::initial()),
            GameId::Breakthrough(n) => GameState::Breakthrough(breakthrough::State::initial(n)),
            GameId::Hex(n) => GameState::Hex(hex::State::initial(n)),
            GameId::Reversi => GameState::Reversi(reversi::State::initial()),
        }
    }

    pub fn id(&self) -> GameId {
        match self {
            GameState::TicTacToe(_) => GameId::TicTacToe,
            GameState::Connect4(_) => GameId::Connect4,
            GameState::Breakthrough(s) => GameId::Breakthrough(s.side()),
            GameState::Hex(s) => GameId::Hex(s.side()),
            GameState::Reversi(_) => GameId::Reversi,
        }
    }

    pub fn spec(&self) -> GameSpec {
        self.id().spec()
    }

    #[inline]
    pub fn to_move(&self) -> Player {
        dispatch!(self, s => s.to_move())
    }

    #[inline]
    pub fn ply(&self) -> u32 {
        dispatch!(self, s => s.ply())
    }

    #[inline]
    pub fn status(&self) -> Status {
        dispatch!(self, s => s.status())
    }

    #[inline]
    pub fn is_terminal(&self) -> bool {
        self.status().is_terminal()
    }

    /// Legal moves in ascending id order; empty exactly when terminal.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut out = Vec::new();
        self.legal_moves_into(&mut out);
        out
    }

    /// As `legal_moves`, reusing `out`'s allocation.
    pub fn legal_moves_into(&self, out: &mut Vec<Move>) {
        out.clear();
        if self.is_terminal() {
            return;
        }
        dispatch!(self, s => s.legal_into(out));
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        !self.is_terminal() && dispatch!(self, s => s.is_legal(mv))
    }

    /// Applies a legal move, returning the successor. The input state is
    /// untouched.
    pub fn apply_move(&self, mv: Move) -> Result<GameState, GameError> {
        if !self.is_legal(mv) {
            return Err(GameError::IllegalMove(mv.id()));
        }
        Ok(match self {
            GameState::TicTacToe(s) => GameState::TicTacToe(s.apply(mv)),
            GameState::Connect4(s) => GameState::Connect4(s.apply(mv)),
            GameState::Breakthrough(s) => GameState::Breakthrough(s.apply(mv)),
            GameState::Hex(s) => GameState::Hex(s.apply(mv)),
            GameState::Reversi(s) => GameState::Reversi(s.apply(mv)),
        })
    }

    /// Payoff of a terminal state.
    pub fn terminal_payoff(&self) -> Result<Outcome, GameError> {
        self.status().outcome().ok_or(GameError::NotTerminal)
    }

    /// Contents of tile `t` (board index order).
    #[inline]
    pub fn tile(&self, t: usize) -> Cell {
        dispatch!(self, s => s.tile(t))
    }

    /// Per-tile one-hot feature matrix, optionally row-permuted by
    /// `obfuscation`. Row `i` describes tile `obfuscation(i)`.
    pub fn encode_tiles<S: Scalar>(
        &self,
        obfuscation: Option<&TilePermutation>,
    ) -> Result<TileEncoding<S>, GameError> {
        let spec = self.spec();
        let mut enc = TileEncoding::zeroed(spec.tile_count, spec.feature_dim);
        self.encode_tiles_into(obfuscation, &mut enc)?;
        Ok(enc)
    }

    /// As `encode_tiles`, writing into an existing buffer of the right shape.
    pub fn encode_tiles_into<S: Scalar>(
        &self,
        obfuscation: Option<&TilePermutation>,
        enc: &mut TileEncoding<S>,
    ) -> Result<(), GameError> {
        let spec = self.spec();
        let t = spec.tile_count;
        let f = spec.feature_dim;
        if let Some(perm) = obfuscation {
            if perm.len() != t {
                return Err(GameError::PermutationMismatch {
                    got: perm.len(),
                    expected: t,
                });
            }
        }
        assert_eq!(
            (enc.tiles(), enc.features()),
            (t, f),
            "encoding buffer shape"
        );
        let mover_bit = if self.to_move() == Player::P1 {
            S::one()
        } else {
            S::zero()
        };
        for row in 0..t {
            let tile = match obfuscation {
                Some(perm) => perm.map(row),
                None => row,
            };
            let out = enc.row_mut(row);
            for v in out.iter_mut() {
                *v = S::zero();
            }
            out[self.tile(tile) as usize] = S::one();
            out[f - 1] = mover_bit;
        }
        Ok(())
    }

    /// Plays uniformly random legal moves until the game ends.
    /// Deterministic for a fixed seed.
    pub fn random_playout(&self, rng_seed: u64) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        self.random_playout_with(&mut rng)
    }

    /// As `random_playout` but drawing from a caller-owned stream.
    pub fn random_playout_with<R: Rng>(&self, rng: &mut R) -> Outcome {
        let mut state = self.clone();
        let mut moves = Vec::with_capacity(64);
        loop {
            if let Some(outcome) = state.status().outcome() {
                return outcome;
            }
            state.legal_moves_into(&mut moves);
            let mv = moves[rng.gen_range(0..moves.len())];
            state = state.apply_move(mv).expect("legal move");
        }
    }

    /// Human-readable rendering of a move in this position's game.
    pub fn format_move(&self, mv: Move) -> String {
        dispatch!(self, s => s.format_move(mv))
    }

    /// Board diagram for tracing.
    pub fn render(&self) -> String {
        dispatch!(self, s => s.render())
    }
}

/// Builds a Tic-tac-toe position from a 9-character board string in tile
/// order (`X`/`O`/`.`), with `to_move` to play. Intended for setting up
/// test and analysis positions.
pub fn tictactoe_position(board: &str, to_move: Player) -> GameState {
    GameState::TicTacToe(tictactoe::State::from_board(board, to_move))
}

/// Column letter + 1-based rank, e.g. tile 0 of a 3x3 board is `a1`.
pub(crate) fn coord(tile: usize, width: usize) -> String {
    let row = tile / width;
    let col = tile % width;
    format!("{}{}", (b'a' + col as u8) as char, row + 1)
}
