//! Hex on an N x N rhombus, N in 3..=11, no swap rule. Move id = cell.
//!
//! Cells use axial indexing, tile = row * N + col, with the six
//! neighbours of (r, c): (r-1, c), (r-1, c+1), (r, c-1), (r, c+1),
//! (r+1, c-1), (r+1, c). P1 connects the top row to the bottom row, P2
//! connects the left column to the right column. Hex has no draws.

use super::{coord, Cell, Move, Player, Status};

pub const MAX_SIDE: usize = 11;
const MAX_TILES: usize = MAX_SIDE * MAX_SIDE;

const NEIGHBOURS: [(isize, isize); 6] = [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    cells: [Cell; MAX_TILES],
    side: u8,
    to_move: Player,
    ply: u16,
    status: Status,
}

impl State {
    pub fn initial(side: u8) -> State {
        assert!((3..=11).contains(&side), "hex side must be 3..=11");
        State {
            cells: [Cell::Empty; MAX_TILES],
            side,
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

    pub fn legal_into(&self, out: &mut Vec<Move>) {
        let n = self.side as usize;
        for t in 0..n * n {
            if self.cells[t] == Cell::Empty {
                out.push(Move(t as u32));
            }
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        let n = self.side as usize;
        (mv.0 as usize) < n * n && self.cells[mv.0 as usize] == Cell::Empty
    }

    pub fn apply(&self, mv: Move) -> State {
        let player = self.to_move;
        let mut next = self.clone();
        let t = mv.0 as usize;
        next.cells[t] = Cell::of(player);
        next.ply += 1;
        next.to_move = player.opponent();
        if next.connects_sides(t, player) {
            next.status = Status::Won(player);
        }
        debug_assert!(
            next.status.is_terminal() || (next.ply as usize) < (self.side as usize).pow(2),
            "a full hex board always contains a winning chain"
        );
        next
    }

    /// Flood-fills the just-placed stone's component and checks whether
    /// it touches both of the mover's target edges.
    fn connects_sides(&self, start: usize, player: Player) -> bool {
        let n = self.side as usize;
        let own = Cell::of(player);
        let mut visited = [false; MAX_TILES];
        let mut stack = [0usize; MAX_TILES];
        let mut top = 0;
        visited[start] = true;
        stack[top] = start;
        top += 1;
        let (mut low, mut high) = (false, false);
        while top > 0 {
            top -= 1;
            let t = stack[top];
            let (r, c) = (t / n, t % n);
            let coordinate = match player {
                Player::P1 => r,
                Player::P2 => c,
            };
            if coordinate == 0 {
                low = true;
            }
            if coordinate == n - 1 {
                high = true;
            }
            if low && high {
                return true;
            }
            for (dr, dc) in NEIGHBOURS {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nr >= n as isize || nc < 0 || nc >= n as isize {
                    continue;
                }
                let nt = nr as usize * n + nc as usize;
                if !visited[nt] && self.cells[nt] == own {
                    visited[nt] = true;
                    stack[top] = nt;
                    top += 1;
                }
            }
        }
        false
    }

    pub fn format_move(&self, mv: Move) -> String {
        coord(mv.0 as usize, self.side as usize)
    }

    pub fn render(&self) -> String {
        let n = self.side as usize;
        let mut s = String::new();
        for r in 0..n {
            s.push_str(&" ".repeat(r));
            for c in 0..n {
                s.push(match self.cells[r * n + c] {
                    Cell::Empty => '.',
                    Cell::P1 => 'X',
                    Cell::P2 => 'O',
                });
                s.push(' ');
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_chain_wins_for_p1() {
        let n = 5u32;
        let mut s = State::initial(5);
        // P1 fills column 2 top to bottom; P2 plays along column 0
        // (never completing a left-right chain).
        for r in 0..4 {
            s = s.apply(Move(r * n + 2));
            s = s.apply(Move(r * n));
        }
        assert_eq!(s.status(), Status::Ongoing);
        s = s.apply(Move(4 * n + 2));
        assert_eq!(s.status(), Status::Won(Player::P1));
    }

    #[test]
    fn horizontal_chain_wins_for_p2() {
        let n = 3u32;
        let mut s = State::initial(3);
        // P1: (0,0), (0,1); P2: (1,0), (1,1), (1,2).
        s = s.apply(Move(0));
        s = s.apply(Move(n));
        s = s.apply(Move(1));
        s = s.apply(Move(n + 1));
        s = s.apply(Move(2 * n));
        s = s.apply(Move(n + 2));
        assert_eq!(s.status(), Status::Won(Player::P2));
    }

    #[test]
    fn diagonal_adjacency_connects() {
        // (r, c) and (r+1, c-1) are neighbours in this orientation.
        let mut s = State::initial(3);
        s = s.apply(Move(2)); // P1 (0,2)
        s = s.apply(Move(3)); // P2 (1,0)
        s = s.apply(Move(4)); // P1 (1,1)
        s = s.apply(Move(6)); // P2 (2,0)
        s = s.apply(Move(7)); // P1 (2,1): chain (0,2)-(1,1)-(2,1)? (1,1)-(2,1) adjacent? yes (r+1,c)
        assert_eq!(s.status(), Status::Won(Player::P1));
    }
}
