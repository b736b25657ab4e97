//! 3x3 Tic-tac-toe. Move id = cell index.

use super::{coord, Cell, Move, Player, Status};

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    cells: [Cell; 9],
    to_move: Player,
    ply: u16,
    status: Status,
}

impl State {
    pub fn initial() -> State {
        State {
            cells: [Cell::Empty; 9],
            to_move: Player::P1,
            ply: 0,
            status: Status::Ongoing,
        }
    }

    /// Builds a position from a board string of `X`, `O` and `.` in tile
    /// order. Panics on malformed input; test/analysis helper only.
    pub fn from_board(board: &str, to_move: Player) -> State {
        let chars: Vec<char> = board.chars().collect();
        assert_eq!(chars.len(), 9, "board string must have 9 cells");
        let mut cells = [Cell::Empty; 9];
        let mut ply = 0;
        for (i, c) in chars.iter().enumerate() {
            cells[i] = match c {
                'X' | 'x' => Cell::P1,
                'O' | 'o' => Cell::P2,
                '.' => Cell::Empty,
                other => panic!("bad cell char {other:?}"),
            };
            if cells[i] != Cell::Empty {
                ply += 1;
            }
        }
        let mut status = Status::Ongoing;
        for line in LINES {
            let c = cells[line[0]];
            if c != Cell::Empty && cells[line[1]] == c && cells[line[2]] == c {
                status = Status::Won(if c == Cell::P1 {
                    Player::P1
                } else {
                    Player::P2
                });
            }
        }
        if status == Status::Ongoing && cells.iter().all(|&c| c != Cell::Empty) {
            status = Status::Draw;
        }
        State {
            cells,
            to_move,
            ply,
            status,
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
        for (i, &c) in self.cells.iter().enumerate() {
            if c == Cell::Empty {
                out.push(Move(i as u32));
            }
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        (mv.0 as usize) < 9 && self.cells[mv.0 as usize] == Cell::Empty
    }

    pub fn apply(&self, mv: Move) -> State {
        let mut next = self.clone();
        let cell = mv.0 as usize;
        next.cells[cell] = Cell::of(self.to_move);
        next.ply += 1;
        let won = LINES
            .iter()
            .filter(|line| line.contains(&cell))
            .any(|line| line.iter().all(|&i| next.cells[i] == next.cells[cell]));
        next.status = if won {
            Status::Won(self.to_move)
        } else if next.ply == 9 {
            Status::Draw
        } else {
            Status::Ongoing
        };
        next.to_move = self.to_move.opponent();
        next
    }

    pub fn format_move(&self, mv: Move) -> String {
        coord(mv.0 as usize, 3)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in 0..3 {
            for c in 0..3 {
                s.push(match self.cells[r * 3 + c] {
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
