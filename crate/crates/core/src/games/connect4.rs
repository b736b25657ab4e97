//! Connect Four on the standard 7x6 board. Move id = column.
//!
//! Tiles are indexed row-major with row 0 the bottom row, so tile
//! `r * 7 + c` is the r-th cell up in column c.

use super::{Cell, Move, Player, Status};

pub const WIDTH: usize = 7;
pub const HEIGHT: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    cells: [Cell; WIDTH * HEIGHT],
    heights: [u8; WIDTH],
    to_move: Player,
    ply: u16,
    status: Status,
}

impl State {
    pub fn initial() -> State {
        State {
            cells: [Cell::Empty; WIDTH * HEIGHT],
            heights: [0; WIDTH],
            to_move: Player::P1,
            ply: 0,
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

    pub fn legal_into(&self, out: &mut Vec<Move>) {
        for (c, &h) in self.heights.iter().enumerate() {
            if (h as usize) < HEIGHT {
                out.push(Move(c as u32));
            }
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        (mv.0 as usize) < WIDTH && (self.heights[mv.0 as usize] as usize) < HEIGHT
    }

    pub fn apply(&self, mv: Move) -> State {
        let col = mv.0 as usize;
        let row = self.heights[col] as usize;
        let mut next = self.clone();
        let placed = row * WIDTH + col;
        next.cells[placed] = Cell::of(self.to_move);
        next.heights[col] += 1;
        next.ply += 1;
        next.status = if next.connects_four(row as isize, col as isize) {
            Status::Won(self.to_move)
        } else if next.ply as usize == WIDTH * HEIGHT {
            Status::Draw
        } else {
            Status::Ongoing
        };
        next.to_move = self.to_move.opponent();
        next
    }

    /// Checks the four line directions through the just-placed piece.
    fn connects_four(&self, row: isize, col: isize) -> bool {
        let piece = self.cells[row as usize * WIDTH + col as usize];
        for (dr, dc) in [(0isize, 1isize), (1, 0), (1, 1), (1, -1)] {
            let mut run = 1;
            for sign in [1isize, -1] {
                let (mut r, mut c) = (row + sign * dr, col + sign * dc);
                while (0..HEIGHT as isize).contains(&r)
                    && (0..WIDTH as isize).contains(&c)
                    && self.cells[r as usize * WIDTH + c as usize] == piece
                {
                    run += 1;
                    r += sign * dr;
                    c += sign * dc;
                }
            }
            if run >= 4 {
                return true;
            }
        }
        false
    }

    pub fn format_move(&self, mv: Move) -> String {
        format!("{}", (b'a' + mv.0 as u8) as char)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in (0..HEIGHT).rev() {
            for c in 0..WIDTH {
                s.push(match self.cells[r * WIDTH + c] {
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
