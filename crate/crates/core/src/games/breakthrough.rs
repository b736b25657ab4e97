//! Breakthrough on an N x N board, N in 4..=10.
//!
//! P1 starts on rows 0..2 and advances toward row N-1; P2 starts on the
//! top two rows and advances toward row 0. Straight steps need an empty
//! target; diagonal steps move to an empty square or capture. A player
//! wins by reaching the opponent's home row or capturing every opposing
//! pawn; a player left without a legal move loses.
//!
//! Move id = from_tile * 3 + d, where d in {0, 1, 2} maps to a column
//! shift of {-1, 0, +1} in the mover's forward direction.

use super::{coord, Cell, Move, Player, Status};

pub const MAX_SIDE: usize = 10;
const MAX_TILES: usize = MAX_SIDE * MAX_SIDE;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    cells: [Cell; MAX_TILES],
    side: u8,
    pawns: [u8; 2],
    to_move: Player,
    ply: u16,
    status: Status,
}

#[inline]
fn forward(player: Player) -> isize {
    match player {
        Player::P1 => 1,
        Player::P2 => -1,
    }
}

#[inline]
fn home_row(player: Player, n: usize) -> usize {
    // The row this player is trying to reach.
    match player {
        Player::P1 => n - 1,
        Player::P2 => 0,
    }
}

impl State {
    pub fn initial(side: u8) -> State {
        assert!((4..=10).contains(&side), "breakthrough side must be 4..=10");
        let n = side as usize;
        let mut cells = [Cell::Empty; MAX_TILES];
        for c in 0..n {
            cells[c] = Cell::P1;
            cells[n + c] = Cell::P1;
            cells[(n - 2) * n + c] = Cell::P2;
            cells[(n - 1) * n + c] = Cell::P2;
        }
        State {
            cells,
            side,
            pawns: [2 * n as u8; 2],
            to_move: Player::P1,
            ply: 0,
            status: Status::Ongoing,
        }
    }

    #[inline]
    pub fn side(&self) -> u8 {
        self.side
    }

    #[inline]
    pub fn to_move(&self) -> Player {
        self.to_move
    }

    #[inline]
    pub fn ply(&self) -> u32 {
        self.ply as u32
    }

    #[inline]
    pub fn status(&self) -> Status {
        self.status
    }

    #[inline]
    pub fn tile(&self, t: usize) -> Cell {
        self.cells[t]
    }

    /// Decodes a move id into (from, to); None when out of shape.
    fn decode(&self, mv: Move, player: Player) -> Option<(usize, usize)> {
        let n = self.side as usize;
        let id = mv.0 as usize;
        let from = id / 3;
        let d = id % 3;
        if from >= n * n {
            return None;
        }
        let row = (from / n) as isize + forward(player);
        let col = (from % n) as isize + d as isize - 1;
        if row < 0 || row >= n as isize || col < 0 || col >= n as isize {
            return None;
        }
        Some((from, row as usize * n + col as usize))
    }

    fn move_ok(&self, player: Player, from: usize, to: usize, straight: bool) -> bool {
        if self.cells[from] != Cell::of(player) {
            return false;
        }
        let target = self.cells[to];
        if straight {
            target == Cell::Empty
        } else {
            target != Cell::of(player)
        }
    }

    pub fn legal_into(&self, out: &mut Vec<Move>) {
        let n = self.side as usize;
        let player = self.to_move;
        let own = Cell::of(player);
        for from in 0..n * n {
            if self.cells[from] != own {
                continue;
            }
            for d in 0..3usize {
                let mv = Move((from * 3 + d) as u32);
                if let Some((_, to)) = self.decode(mv, player) {
                    if self.move_ok(player, from, to, d == 1) {
                        out.push(mv);
                    }
                }
            }
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        match self.decode(mv, self.to_move) {
            Some((from, to)) => self.move_ok(self.to_move, from, to, mv.0 % 3 == 1),
            None => false,
        }
    }

    /// True when `player` has at least one legal move.
    fn has_any_move(&self, player: Player) -> bool {
        let n = self.side as usize;
        let own = Cell::of(player);
        let dr = forward(player);
        for from in 0..n * n {
            if self.cells[from] != own {
                continue;
            }
            let row = (from / n) as isize + dr;
            if row < 0 || row >= n as isize {
                continue;
            }
            let col = (from % n) as isize;
            for dc in -1isize..=1 {
                let c = col + dc;
                if c < 0 || c >= n as isize {
                    continue;
                }
                let target = self.cells[row as usize * n + c as usize];
                if (dc == 0 && target == Cell::Empty) || (dc != 0 && target != own) {
                    return true;
                }
            }
        }
        false
    }

    pub fn apply(&self, mv: Move) -> State {
        let player = self.to_move;
        let opponent = player.opponent();
        let (from, to) = self.decode(mv, player).expect("legal move");
        let mut next = self.clone();
        if next.cells[to] == Cell::of(opponent) {
            next.pawns[opponent.index()] -= 1;
        }
        next.cells[to] = Cell::of(player);
        next.cells[from] = Cell::Empty;
        next.ply += 1;
        next.to_move = opponent;
        let n = self.side as usize;
        next.status = if to / n == home_row(player, n)
            || next.pawns[opponent.index()] == 0
            || !next.has_any_move(opponent)
        {
            Status::Won(player)
        } else {
            Status::Ongoing
        };
        next
    }

    pub fn format_move(&self, mv: Move) -> String {
        let n = self.side as usize;
        match self.decode(mv, self.to_move) {
            Some((from, to)) => format!("{}-{}", coord(from, n), coord(to, n)),
            None => format!("?{}", mv.0),
        }
    }

    pub fn render(&self) -> String {
        let n = self.side as usize;
        let mut s = String::new();
        for r in (0..n).rev() {
            for c in 0..n {
                s.push(match self.cells[r * n + c] {
                    Cell::Empty => '.',
                    Cell::P1 => 'X',
                    Cell::P2 => 'O',
                });
            }
            s.push('\n');
        }
        s
    }
}
