//! Reversi (Othello) on the standard 8x8 board.
//!
//! Move id = target cell for a placement, 64 for an explicit pass. A
//! pass is the single legal move whenever no flipping placement exists,
//! so the "non-empty legal moves iff non-terminal" contract holds. The
//! game ends when the board is full or both players pass consecutively;
//! the winner holds the disc majority.

use super::{coord, Cell, Move, Player, Status};

const N: usize = 8;
const TILES: usize = N * N;
pub const PASS: u32 = TILES as u32;

const DIRS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    cells: [Cell; TILES],
    to_move: Player,
    ply: u16,
    passes: u8,
    status: Status,
}

impl State {
    pub fn initial() -> State {
        let mut cells = [Cell::Empty; TILES];
        // P1 is Black and moves first.
        cells[3 * N + 3] = Cell::P2;
        cells[3 * N + 4] = Cell::P1;
        cells[4 * N + 3] = Cell::P1;
        cells[4 * N + 4] = Cell::P2;
        State {
            cells,
            to_move: Player::P1,
            ply: 0,
            passes: 0,
            status: Status::Ongoing,
        }
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

    pub fn disc_count(&self, player: Player) -> usize {
        self.cells
            .iter()
            .filter(|&&c| c == Cell::of(player))
            .count()
    }

    /// Number of opposing discs flipped by placing at `t`, 0 if the
    /// placement is not legal for `player`.
    fn flips_at(&self, t: usize, player: Player) -> usize {
        if self.cells[t] != Cell::Empty {
            return 0;
        }
        let own = Cell::of(player);
        let other = Cell::of(player.opponent());
        let (r0, c0) = ((t / N) as isize, (t % N) as isize);
        let mut total = 0;
        for (dr, dc) in DIRS {
            let mut run = 0;
            let (mut r, mut c) = (r0 + dr, c0 + dc);
            while (0..N as isize).contains(&r) && (0..N as isize).contains(&c) {
                match self.cells[r as usize * N + c as usize] {
                    cell if cell == other => run += 1,
                    cell if cell == own => {
                        if run > 0 {
                            total += run;
                        }
                        break;
                    }
                    _ => break,
                }
                r += dr;
                c += dc;
            }
        }
        total
    }

    fn has_placement(&self, player: Player) -> bool {
        (0..TILES).any(|t| self.flips_at(t, player) > 0)
    }

    pub fn legal_into(&self, out: &mut Vec<Move>) {
        for t in 0..TILES {
            if self.flips_at(t, self.to_move) > 0 {
                out.push(Move(t as u32));
            }
        }
        if out.is_empty() {
            out.push(Move(PASS));
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        if mv.0 == PASS {
            return !self.has_placement(self.to_move);
        }
        (mv.0 as usize) < TILES && self.flips_at(mv.0 as usize, self.to_move) > 0
    }

    pub fn apply(&self, mv: Move) -> State {
        let player = self.to_move;
        let mut next = self.clone();
        next.ply += 1;
        next.to_move = player.opponent();
        if mv.0 == PASS {
            next.passes += 1;
            if next.passes >= 2 {
                next.status = next.majority_status();
            }
            return next;
        }
        next.passes = 0;
        let t = mv.0 as usize;
        let own = Cell::of(player);
        let other = Cell::of(player.opponent());
        let (r0, c0) = ((t / N) as isize, (t % N) as isize);
        next.cells[t] = own;
        for (dr, dc) in DIRS {
            let mut run = 0isize;
            let (mut r, mut c) = (r0 + dr, c0 + dc);
            while (0..N as isize).contains(&r) && (0..N as isize).contains(&c) {
                let idx = r as usize * N + c as usize;
                if self.cells[idx] == other {
                    run += 1;
                } else {
                    if self.cells[idx] == own {
                        for k in 1..=run {
                            next.cells[(r0 + k * dr) as usize * N + (c0 + k * dc) as usize] = own;
                        }
                    }
                    break;
                }
                r += dr;
                c += dc;
            }
        }
        if next.cells.iter().all(|&c| c != Cell::Empty) {
            next.status = next.majority_status();
        }
        next
    }

    fn majority_status(&self) -> Status {
        let p1 = self.disc_count(Player::P1);
        let p2 = self.disc_count(Player::P2);
        match p1.cmp(&p2) {
            std::cmp::Ordering::Greater => Status::Won(Player::P1),
            std::cmp::Ordering::Less => Status::Won(Player::P2),
            std::cmp::Ordering::Equal => Status::Draw,
        }
    }

    pub fn format_move(&self, mv: Move) -> String {
        if mv.0 == PASS {
            "pass".to_string()
        } else {
            coord(mv.0 as usize, N)
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in 0..N {
            for c in 0..N {
                s.push(match self.cells[r * N + c] {
                    Cell::Empty => '.',
                    Cell::P1 => 'B',
                    Cell::P2 => 'W',
                });
            }
            s.push('\n');
        }
        s
    }
}
